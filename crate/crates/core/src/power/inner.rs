//! Spectral projected gradient over a convex polygon in the plane: a box
//! intersected with a few half-planes. Enough for the two-variable convex
//! subproblems of the condensation loop.

use arrayvec::ArrayVec;

pub type Vec2 = [f64; 2];

#[inline]
fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

/// `normal . z <= offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane {
    pub normal: Vec2,
    pub offset: f64,
}

impl HalfPlane {
    #[inline]
    fn violation(&self, z: Vec2) -> f64 {
        dot(self.normal, z) - self.offset
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    lo: Vec2,
    hi: Vec2,
    /// Vertices in order; empty when only the box applies.
    vertices: Vec<Vec2>,
    cuts: ArrayVec<HalfPlane, 2>,
}

impl Region {
    pub fn new(lo: Vec2, hi: Vec2, cuts: impl IntoIterator<Item = HalfPlane>) -> Self {
        let cuts: ArrayVec<HalfPlane, 2> = cuts.into_iter().collect();
        let vertices = if cuts.is_empty() {
            Vec::new()
        } else {
            let mut poly = vec![lo, [hi[0], lo[1]], hi, [lo[0], hi[1]]];
            for c in &cuts {
                poly = clip(&poly, c);
            }
            poly
        };
        Self { lo, hi, vertices, cuts }
    }

    pub fn is_empty(&self) -> bool {
        !self.cuts.is_empty() && self.vertices.is_empty()
    }

    fn clamp(&self, z: Vec2) -> Vec2 {
        [z[0].clamp(self.lo[0], self.hi[0]), z[1].clamp(self.lo[1], self.hi[1])]
    }

    pub fn contains(&self, z: Vec2, tol: f64) -> bool {
        (0..2).all(|i| z[i] >= self.lo[i] - tol && z[i] <= self.hi[i] + tol)
            && self.cuts.iter().all(|c| c.violation(z) <= tol)
    }

    /// Euclidean projection.
    pub fn project(&self, z: Vec2) -> Vec2 {
        if self.cuts.is_empty() {
            return self.clamp(z);
        }
        if self.contains(z, 0.0) {
            return z;
        }
        let n = self.vertices.len();
        if n == 1 {
            return self.vertices[0];
        }
        let mut best = self.vertices[0];
        let mut best_d = f64::INFINITY;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let ab = sub(b, a);
            let len2 = dot(ab, ab);
            let t = if len2 > 0.0 { (dot(sub(z, a), ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
            let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
            let d = sub(z, q);
            let d2 = dot(d, d);
            if d2 < best_d {
                best_d = d2;
                best = q;
            }
        }
        best
    }
}

/// Sutherland-Hodgman clip of a convex polygon by one half-plane.
fn clip(poly: &[Vec2], h: &HalfPlane) -> Vec<Vec2> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let n = poly.len();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let (va, vb) = (h.violation(a), h.violation(b));
        if va <= 0.0 {
            out.push(a);
        }
        if (va <= 0.0) != (vb <= 0.0) {
            let t = va / (va - vb);
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerOptions {
    /// Stop when the projected-gradient step `|P(z - g) - z|_inf` is below this.
    pub grad_tol: f64,
    pub max_iters: usize,
}

impl Default for InnerOptions {
    fn default() -> Self {
        Self { grad_tol: 1e-8, max_iters: 300 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct InnerResult {
    pub z: Vec2,
    pub value: f64,
    pub iterations: usize,
}

/// Minimizes a smooth convex `f` over `region` starting from (the
/// projection of) `z0`. `f` returns value and gradient. The value sequence is
/// monotone nonincreasing (Armijo backtracking along the projected
/// Barzilai-Borwein direction).
pub fn minimize(
    f: impl Fn(Vec2) -> (f64, Vec2),
    region: &Region,
    z0: Vec2,
    opts: InnerOptions,
) -> InnerResult {
    const SIGMA: f64 = 1e-4;
    let mut z = region.project(z0);
    let (mut fz, mut g) = f(z);
    let mut step = 1.0;
    let mut iterations = 0;
    while iterations < opts.max_iters {
        let pg = sub(region.project(sub(z, g)), z);
        if pg[0].abs().max(pg[1].abs()) < opts.grad_tol {
            break;
        }
        iterations += 1;
        let target = region.project([z[0] - step * g[0], z[1] - step * g[1]]);
        let d = sub(target, z);
        let slope = dot(g, d);
        if !(slope < 0.0) {
            break;
        }
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand = [z[0] + lambda * d[0], z[1] + lambda * d[1]];
            let (fc, gc) = f(cand);
            if fc <= fz + SIGMA * lambda * slope {
                accepted = Some((cand, fc, gc));
                break;
            }
            lambda *= 0.5;
        }
        let Some((zn, fzn, gn)) = accepted else { break };
        let s = sub(zn, z);
        let y = sub(gn, g);
        let sy = dot(s, y);
        step = if sy > 0.0 { (dot(s, s) / sy).clamp(1e-10, 1e10) } else { 1e4 };
        z = zn;
        fz = fzn;
        g = gn;
    }
    InnerResult { z, value: fz, iterations }
}
