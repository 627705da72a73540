//! Weighted sum-rate power allocation for the two links of an FD mode.
//!
//! Each link `l` has SINR `p_l a_l / (p_o b_l + n_l)` where `o` is the other
//! link, `a_l` its serving gain, `b_l` the coupling from the other
//! transmitter (a cross gain or a residual self-interference factor) and
//! `n_l` the receiver noise. The goal is
//!
//! ```text
//! max  w_1 log2(1 + SINR_1) + w_2 log2(1 + SINR_2),   0 <= p_l <= p_l_max
//! ```
//!
//! which is equivalent to minimizing the product
//! `prod_l ((p_o b_l + n_l) / (p_l a_l + p_o b_l + n_l))^w_l`. [`solve_sp`]
//! replaces each denominator posynomial by its AGM monomial at the current
//! iterate, solves the resulting log-convex problem with projected gradient,
//! and repeats. Every step can only improve the true objective.
//!
//! With a spectral-efficiency cap the objective becomes
//! `sum_l w_l min(log2(1 + SINR_l), cap)`; it is solved as the uncapped
//! problem under the extra constraints `SINR_l <= 2^cap - 1`, condensed the
//! same way.

mod condense;
mod inner;

pub use condense::{condense, Monomial, Posynomial, Term};
pub use inner::{minimize, HalfPlane, InnerOptions, InnerResult, Region};

use arrayvec::ArrayVec;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelState;
use crate::error::{Error, Result};
use crate::radio::{coupling, shannon_efficiency, spectral_efficiency, PowerVector, TransmissionMode};

/// One link of the two-link problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    pub signal_gain: f64,
    /// Multiplies the other link's transmit power at this receiver.
    pub cross_gain: f64,
    pub noise: f64,
    pub weight: f64,
    pub max_power: f64,
}

impl LinkParams {
    /// SINR with this link at `own` and the other transmitter at `other`.
    #[inline]
    pub fn sinr(&self, own: f64, other: f64) -> f64 {
        own * self.signal_gain / (other * self.cross_gain + self.noise)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerProblem {
    pub mode: TransmissionMode,
    pub links: [LinkParams; 2],
    /// Spectral-efficiency cap (bits/s/Hz) applied inside the objective.
    pub se_cap: Option<f64>,
}

impl PowerProblem {
    pub fn new(mode: TransmissionMode, links: [LinkParams; 2], se_cap: Option<f64>) -> Result<Self> {
        let p = Self { mode, links, se_cap };
        p.validate()?;
        Ok(p)
    }

    /// Builds the problem of `mode` on `channel` with link weights `weights`
    /// (in the order of [`TransmissionMode::links`]).
    pub fn from_channel(
        mode: TransmissionMode,
        channel: &ChannelState,
        weights: [f64; 2],
        se_cap: Option<f64>,
    ) -> Result<Self> {
        mode.validate(channel.n_ues())?;
        Self::new(mode, Self::link_params(mode, channel, weights)?, se_cap)
    }

    pub(crate) fn link_params(mode: TransmissionMode, channel: &ChannelState, weights: [f64; 2]) -> Result<[LinkParams; 2]> {
        let links = mode.links();
        if links.len() != 2 {
            return Err(Error::Problem(format!("{mode} is not a full-duplex mode")));
        }
        Ok([0, 1].map(|i| {
            let (tx, rx) = (links[i].tx(), links[i].rx());
            LinkParams {
                signal_gain: channel.gain(tx, rx),
                cross_gain: coupling(channel, links[1 - i].tx(), rx),
                noise: channel.noise_w(rx),
                weight: weights[i],
                max_power: channel.max_power_w(tx),
            }
        }))
    }

    fn validate(&self) -> Result<()> {
        if !self.mode.is_full_duplex() {
            return Err(Error::Problem(format!("{} is not a full-duplex mode", self.mode)));
        }
        let [a, b] = self.links;
        if !(a.weight >= 0.0 && b.weight >= 0.0 && a.weight + b.weight > 0.0) {
            return Err(Error::Problem("weights must be nonnegative with a positive sum".into()));
        }
        for l in &self.links {
            if !(l.signal_gain > 0.0 && l.signal_gain.is_finite()) {
                return Err(Error::Problem("serving gains must be positive".into()));
            }
            if !(l.cross_gain >= 0.0 && l.noise > 0.0 && l.max_power > 0.0) {
                return Err(Error::Problem("cross gains must be nonnegative, noise and max power positive".into()));
            }
        }
        if let Some(c) = self.se_cap {
            if !(c > 0.0) {
                return Err(Error::Problem("spectral-efficiency cap must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn sinrs(&self, p: [f64; 2]) -> [f64; 2] {
        [self.links[0].sinr(p[0], p[1]), self.links[1].sinr(p[1], p[0])]
    }

    /// Per-link spectral efficiency in bits/s/Hz, capped when the problem is.
    pub fn rates(&self, p: [f64; 2]) -> [f64; 2] {
        self.sinrs(p).map(|s| match self.se_cap {
            Some(c) => shannon_efficiency(s).min(c),
            None => shannon_efficiency(s),
        })
    }

    /// Weighted sum rate in bits/s/Hz with the raw weights.
    pub fn objective(&self, p: [f64; 2]) -> f64 {
        let r = self.rates(p);
        self.links[0].weight * r[0] + self.links[1].weight * r[1]
    }

    pub fn max_powers(&self) -> [f64; 2] {
        [self.links[0].max_power, self.links[1].max_power]
    }

    /// Places the solution powers on the mode's transmitters.
    pub fn power_vector(&self, p: [f64; 2]) -> PowerVector {
        let mut v = PowerVector::default();
        for (l, &pl) in self.mode.links().iter().zip(&p) {
            v.set(l.tx(), pl);
        }
        v
    }
}

/// Which monotone transform of the weighted sum rate is condensed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ObjectiveForm {
    /// `prod_l ratio_l^w_l`: exact transform of the weighted sum rate.
    #[default]
    Product,
    /// `sum_l ratio_l^w_l`, kept for comparison; not equivalent to the
    /// weighted sum rate and without an ascent guarantee. Weights are
    /// normalized to sum to one.
    Sum,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Loop stops once both log-power changes fall below this.
    pub epsilon: f64,
    pub max_iters: usize,
    /// Starting powers; defaults to half of each maximum.
    pub init: Option<[f64; 2]>,
    pub form: ObjectiveForm,
    pub inner: InnerOptions,
    /// Also start from both near-corner points (one link at full power, the
    /// other three decades down) and keep the best result.
    pub multi_start: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { epsilon: 1e-4, max_iters: 50, init: None, form: ObjectiveForm::Product, inner: InnerOptions::default(), multi_start: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub p: [f64; 2],
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSolution {
    pub p: [f64; 2],
    /// Weighted sum rate (bits/s/Hz) at `p`.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Starting point followed by every condensation iterate.
    pub trace: Vec<TraceEntry>,
}

/// Relative floor for powers in log coordinates.
const POWER_FLOOR: f64 = 1e-8;

fn floors(problem: &PowerProblem, cap_sinr: Option<f64>) -> [f64; 2] {
    [0, 1].map(|i| {
        let l = &problem.links[i];
        let mut f = l.max_power * POWER_FLOOR;
        // Keep the low corner strictly inside the cap constraint.
        if let Some(c) = cap_sinr {
            f = f.min(0.5 * c * l.noise / l.signal_gain);
        }
        f
    })
}

/// Lowers powers until no link exceeds `cap_sinr`, without lowering any
/// capped rate.
fn repair_to_cap(problem: &PowerProblem, mut p: [f64; 2], cap_sinr: f64, floor: [f64; 2]) -> [f64; 2] {
    for _ in 0..100 {
        let s = problem.sinrs(p);
        if s[0] <= cap_sinr && s[1] <= cap_sinr {
            return p;
        }
        for i in 0..2 {
            let s = problem.sinrs(p);
            if s[i] > cap_sinr {
                let l = &problem.links[i];
                // Just below the cap so the start is strictly feasible.
                p[i] = (cap_sinr * (1.0 - 1e-9) * (p[1 - i] * l.cross_gain + l.noise) / l.signal_gain).max(floor[i]);
            }
        }
    }
    // Common scaling decreases both SINRs.
    let mut t: f64 = 1.0;
    for i in 0..2 {
        let l = &problem.links[i];
        let den = p[i] * l.signal_gain - cap_sinr * p[1 - i] * l.cross_gain;
        if den > 0.0 {
            t = t.min(cap_sinr * (1.0 - 1e-9) * l.noise / den);
        }
    }
    [(p[0] * t).max(floor[0]), (p[1] * t).max(floor[1])]
}

fn closed_form_single_link(problem: &PowerProblem) -> Option<PowerSolution> {
    let [a, b] = problem.links;
    let active = match (a.weight > 0.0, b.weight > 0.0) {
        (true, false) => 0,
        (false, true) => 1,
        _ => return None,
    };
    let mut p = [0.0; 2];
    p[active] = problem.links[active].max_power;
    let objective = problem.objective(p);
    Some(PowerSolution { p, objective, iterations: 0, converged: true, trace: vec![TraceEntry { p, objective }] })
}

/// Condensed subproblem at expansion point `z0`.
struct Condensed {
    weights: [f64; 2],
    numerators: [Posynomial; 2],
    monomials: [Monomial; 2],
    form: ObjectiveForm,
}

impl Condensed {
    fn value_grad(&self, z: [f64; 2]) -> (f64, [f64; 2]) {
        let mut terms = [0.0; 2];
        let mut grads = [[0.0; 2]; 2];
        for l in 0..2 {
            let (ln_num, g_num) = self.numerators[l].log_value_grad(z);
            let m = &self.monomials[l];
            terms[l] = self.weights[l] * (ln_num - m.log_value(z));
            grads[l] = [self.weights[l] * (g_num[0] - m.exps[0]), self.weights[l] * (g_num[1] - m.exps[1])];
        }
        match self.form {
            ObjectiveForm::Product => (terms[0] + terms[1], [grads[0][0] + grads[1][0], grads[0][1] + grads[1][1]]),
            ObjectiveForm::Sum => {
                // ln(e^t0 + e^t1)
                let mx = terms[0].max(terms[1]);
                let e = [(terms[0] - mx).exp(), (terms[1] - mx).exp()];
                let s = e[0] + e[1];
                let v = mx + s.ln();
                let g = [
                    (e[0] * grads[0][0] + e[1] * grads[1][0]) / s,
                    (e[0] * grads[0][1] + e[1] * grads[1][1]) / s,
                ];
                (v, g)
            }
        }
    }
}

fn numerator(l: &LinkParams, other: usize) -> Posynomial {
    let mut exps = [0.0; 2];
    exps[other] = 1.0;
    Posynomial::new([Term { coeff: l.cross_gain, exps }, Term { coeff: l.noise, exps: [0.0, 0.0] }])
}

fn denominator(l: &LinkParams, own: usize) -> Posynomial {
    let mut own_exps = [0.0; 2];
    own_exps[own] = 1.0;
    let mut other_exps = [0.0; 2];
    other_exps[1 - own] = 1.0;
    Posynomial::new([
        Term { coeff: l.signal_gain, exps: own_exps },
        Term { coeff: l.cross_gain, exps: other_exps },
        Term { coeff: l.noise, exps: [0.0, 0.0] },
    ])
}

/// Successive geometric programming (monomial condensation) for the
/// two-link problem. Returns the best iterate by true objective, after a
/// post-pass that switches a link off entirely whenever that does not
/// lower the objective. Never worse than both links at full power.
pub fn solve_sp(problem: &PowerProblem, opts: &SolveOptions) -> PowerSolution {
    if let Some(sol) = closed_form_single_link(problem) {
        return sol;
    }
    let pmax = problem.max_powers();
    let mut best = solve_from(problem, opts, opts.init.unwrap_or([pmax[0] / 2.0, pmax[1] / 2.0]));
    if opts.multi_start {
        let mut starts: ArrayVec<[f64; 2], 4> = ArrayVec::new();
        starts.push([pmax[0], pmax[1] * CORNER_START]);
        starts.push([pmax[0] * CORNER_START, pmax[1]]);
        if let Some(c) = problem.se_cap {
            // Link l at full power with the other raised until l sits on the cap.
            let cap_sinr = c.exp2() - 1.0;
            for l in 0..2 {
                let k = &problem.links[l];
                if k.cross_gain > 0.0 {
                    let other = (pmax[l] * k.signal_gain / cap_sinr - k.noise) / k.cross_gain;
                    if other > 0.0 && other < pmax[1 - l] {
                        let mut q = [0.0; 2];
                        q[l] = pmax[l];
                        q[1 - l] = other;
                        starts.push(q);
                    }
                }
            }
        }
        for init in starts {
            let s = solve_from(problem, opts, init);
            if s.objective > best.objective {
                best = s;
            }
        }
    }
    let full = problem.objective(pmax);
    if full > best.objective {
        best.p = pmax;
        best.objective = full;
    }
    best
}

const CORNER_START: f64 = 1e-3;

fn solve_from(problem: &PowerProblem, opts: &SolveOptions, init: [f64; 2]) -> PowerSolution {
    let cap_sinr = problem.se_cap.map(|c| c.exp2() - 1.0);
    let pmax = problem.max_powers();
    let floor = floors(problem, cap_sinr);
    let lo = [floor[0].ln(), floor[1].ln()];
    let hi = [pmax[0].ln(), pmax[1].ln()];
    let from_log = |z: [f64; 2]| [z[0].exp().clamp(floor[0], pmax[0]), z[1].exp().clamp(floor[1], pmax[1])];

    let mut p = init;
    p = [p[0].clamp(floor[0], pmax[0]), p[1].clamp(floor[1], pmax[1])];
    if let Some(c) = cap_sinr {
        p = repair_to_cap(problem, p, c, floor);
    }
    let wsum = problem.links[0].weight + problem.links[1].weight;
    let weights = [problem.links[0].weight / wsum, problem.links[1].weight / wsum];
    let numerators = [numerator(&problem.links[0], 1), numerator(&problem.links[1], 0)];
    let denominators = [denominator(&problem.links[0], 0), denominator(&problem.links[1], 1)];

    let mut z = [p[0].ln(), p[1].ln()];
    let mut trace = vec![TraceEntry { p, objective: problem.objective(p) }];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iters {
        iterations += 1;
        let monomials = [condense(&denominators[0], z), condense(&denominators[1], z)];
        let mut cuts = ArrayVec::<HalfPlane, 2>::new();
        if let Some(c) = cap_sinr {
            for l in 0..2 {
                // p_l a_l <= c * K_l(p), with K_l the condensed numerator.
                let k = condense(&numerators[l], z);
                let mut normal = [-k.exps[0], -k.exps[1]];
                normal[l] += 1.0;
                cuts.push(HalfPlane { normal, offset: c.ln() + k.log_coeff - problem.links[l].signal_gain.ln() });
            }
        }
        let region = Region::new(lo, hi, cuts);
        let sub = Condensed { weights, numerators: numerators.clone(), monomials, form: opts.form };
        let res = inner::minimize(|x| sub.value_grad(x), &region, z, opts.inner);
        let step = (res.z[0] - z[0]).abs().max((res.z[1] - z[1]).abs());
        z = res.z;
        let pz = from_log(z);
        trace.push(TraceEntry { p: pz, objective: problem.objective(pz) });
        if step < opts.epsilon {
            converged = true;
            break;
        }
    }

    let mut best = *trace
        .iter()
        .max_by(|a, b| a.objective.total_cmp(&b.objective))
        .expect("trace starts with the initial point");
    for off in 0..2 {
        let mut q = best.p;
        q[off] = 0.0;
        q[1 - off] = pmax[1 - off];
        let v = problem.objective(q);
        if v >= best.objective {
            best = TraceEntry { p: q, objective: v };
        }
    }
    PowerSolution { p: best.p, objective: best.objective, iterations, converged, trace }
}

/// Exhaustive search result with every grid point tying the maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct GridOptimum {
    pub best: PowerSolution,
    pub ties: Vec<[f64; 2]>,
}

/// Grid per axis: `0`, then `grid_size - 1` log-spaced points from
/// `p_max * 1e-6` up to `p_max`.
pub fn power_grid(p_max: f64, grid_size: usize) -> Vec<f64> {
    let n = grid_size.max(2) - 1;
    let mut v = vec![0.0];
    if n == 1 {
        v.push(p_max);
        return v;
    }
    let lo = (p_max * 1e-6).ln();
    let hi = p_max.ln();
    v.extend((0..n).map(|i| if i == n - 1 { p_max } else { (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp() }));
    v
}

/// Brute-force maximization of the (possibly capped) weighted sum rate over
/// a `grid_size x grid_size` power grid. Ties resolve to the
/// lexicographically smallest `(p1, p2)`.
pub fn oracle_grid(problem: &PowerProblem, grid_size: usize) -> GridOptimum {
    let g1 = power_grid(problem.links[0].max_power, grid_size);
    let g2 = power_grid(problem.links[1].max_power, grid_size);
    let mut values = Vec::with_capacity(g1.len() * g2.len());
    let mut best = ([0.0, 0.0], f64::NEG_INFINITY);
    for &a in &g1 {
        for &b in &g2 {
            let v = problem.objective([a, b]);
            values.push(([a, b], v));
            if v > best.1 {
                best = ([a, b], v);
            }
        }
    }
    let tol = 1e-12 * best.1.abs().max(1e-300);
    let ties = values.iter().filter(|(_, v)| best.1 - v <= tol).map(|(p, _)| *p).collect();
    let (p, objective) = best;
    GridOptimum {
        best: PowerSolution {
            p,
            objective,
            iterations: g1.len() * g2.len(),
            converged: true,
            trace: vec![TraceEntry { p, objective }],
        },
        ties,
    }
}

/// Per-link rate of a solution, passed through the simulator's 7 b/s/Hz cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalRate {
    pub sinr: f64,
    pub spectral_efficiency: f64,
}

pub fn optimal_rates(problem: &PowerProblem, solution: &PowerSolution) -> [OptimalRate; 2] {
    problem
        .sinrs(solution.p)
        .map(|sinr| OptimalRate { sinr, spectral_efficiency: spectral_efficiency(sinr) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::PerKind;
    use crate::radio::{link_rate, Link};
    use crate::topology::Node;
    use crate::units::{db_to_linear, dbm_to_watts};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn link(a: f64, b: f64, n: f64, w: f64, pmax: f64) -> LinkParams {
        LinkParams { signal_gain: a, cross_gain: b, noise: n, weight: w, max_power: pmax }
    }

    fn fdd(links: [LinkParams; 2]) -> PowerProblem {
        PowerProblem::new(TransmissionMode::Fdd { dl: 0 }, links, None).unwrap()
    }

    #[test]
    fn zero_weight_access_link() {
        let p = fdd([link(1e-7, 1e-12, 1e-12, 1.0, 40.0), link(1e-8, 1e-9, 3e-13, 0.0, 0.25)]);
        let s = solve_sp(&p, &SolveOptions::default());
        assert_eq!(s.p, [40.0, 0.0]);
        assert!(s.converged);
        let r = optimal_rates(&p, &s);
        assert_eq!(r[1].spectral_efficiency, 0.0);
        assert_relative_eq!(r[0].sinr, 1e-7 * 40.0 / 1e-12, max_relative = 1e-12);
    }

    #[test]
    fn decoupled_links_run_at_full_power() {
        let p = fdd([link(1e-7, 0.0, 1e-12, 0.6, 40.0), link(1e-8, 0.0, 3e-13, 0.4, 0.25)]);
        let s = solve_sp(&p, &SolveOptions::default());
        assert_relative_eq!(s.p[0], 40.0, max_relative = 1e-9);
        assert_relative_eq!(s.p[1], 0.25, max_relative = 1e-9);
    }

    #[test]
    fn invalid_problems_rejected() {
        let l = link(1.0, 0.0, 1.0, 1.0, 1.0);
        let zero_w = link(1.0, 0.0, 1.0, 0.0, 1.0);
        assert!(PowerProblem::new(TransmissionMode::Fdb, [zero_w, zero_w], None).is_err());
        assert!(PowerProblem::new(TransmissionMode::HdBackhaulDl, [l, l], None).is_err());
        assert!(PowerProblem::new(TransmissionMode::Fdb, [link(0.0, 0.0, 1.0, 1.0, 1.0), l], None).is_err());
    }

    #[test]
    fn objective_matches_direct_formula() {
        let p = fdd([link(2e-8, 1e-12, 1e-12, 3.0, 40.0), link(1e-9, 2e-10, 3e-13, 5.0, 0.25)]);
        let s = solve_sp(&p, &SolveOptions::default());
        let (pm, ps) = (s.p[0], s.p[1]);
        let direct = 3.0 * (1.0 + pm * 2e-8 / (ps * 1e-12 + 1e-12)).log2() + 5.0 * (1.0 + ps * 1e-9 / (pm * 2e-10 + 3e-13)).log2();
        assert_relative_eq!(s.objective, direct, max_relative = 1e-9);
    }

    fn random_problem(rng: &mut impl Rng, cap: Option<f64>) -> PowerProblem {
        let g = |rng: &mut dyn rand::RngCore| db_to_linear(rng.random_range(-120.0..-60.0));
        let modes = [TransmissionMode::Fdd { dl: 0 }, TransmissionMode::Fdu { ul: 0 }, TransmissionMode::Fdb, TransmissionMode::Fda { ul: 0, dl: 1 }];
        let mode = modes[rng.random_range(0..4)];
        let pm = |node: Node| match node {
            Node::MacroBs => dbm_to_watts(46.0),
            Node::SmallBs => dbm_to_watts(24.0),
            Node::Ue(_) => dbm_to_watts(23.0),
        };
        let links = mode.links();
        let l = [0, 1].map(|i| link(g(rng), g(rng), dbm_to_watts(-95.0), rng.random_range(0.0..1.0), pm(links[i].tx())));
        PowerProblem::new(mode, l, cap).unwrap()
    }

    fn assert_ascent(s: &PowerSolution) {
        for w in s.trace.windows(2) {
            assert!(w[1].objective >= w[0].objective * (1.0 - 1e-9) - 1e-12, "trace not ascending: {:?}", s.trace);
        }
    }

    #[test]
    fn matches_grid_oracle_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..60 {
            let p = random_problem(&mut rng, None);
            let s = solve_sp(&p, &SolveOptions::default());
            let o = oracle_grid(&p, 200);
            assert!(s.objective >= 0.98 * o.best.objective, "{p:?}: sp {} oracle {}", s.objective, o.best.objective);
            assert!(s.objective >= p.objective(p.max_powers()) * (1.0 - 1e-12));
            assert_ascent(&s);
        }
    }

    #[test]
    fn capped_objective_matches_grid_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..60 {
            let p = random_problem(&mut rng, Some(7.0));
            let s = solve_sp(&p, &SolveOptions::default());
            let o = oracle_grid(&p, 200);
            assert!(s.objective >= 0.98 * o.best.objective, "{p:?}: sp {} oracle {}", s.objective, o.best.objective);
            assert_ascent(&s);
            for t in &s.trace {
                assert!(t.p[0] <= p.links[0].max_power && t.p[1] <= p.links[1].max_power);
                assert!(t.p[0] >= 0.0 && t.p[1] >= 0.0);
            }
        }
    }

    #[test]
    fn sum_form_runs_and_respects_box() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = random_problem(&mut rng, None);
        let s = solve_sp(&p, &SolveOptions { form: ObjectiveForm::Sum, ..SolveOptions::default() });
        assert!(s.p[0] <= p.links[0].max_power && s.p[1] <= p.links[1].max_power);
        assert!(s.objective.is_finite());
    }

    #[test]
    fn oracle_includes_endpoints_and_beats_max_power() {
        let g = power_grid(2.0, 200);
        assert_eq!(g.len(), 200);
        assert_eq!(g[0], 0.0);
        assert_eq!(*g.last().unwrap(), 2.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let p = random_problem(&mut rng, None);
            let o = oracle_grid(&p, 50);
            assert!(o.best.objective >= p.objective(p.max_powers()));
        }
    }

    #[test]
    fn oracle_degenerate_weight_matches_closed_form() {
        let p = fdd([link(1e-7, 1e-12, 1e-12, 1.0, 40.0), link(1e-8, 1e-9, 3e-13, 0.0, 0.25)]);
        let o = oracle_grid(&p, 60);
        let s = solve_sp(&p, &SolveOptions::default());
        assert_eq!(o.best.p, s.p);
    }

    #[test]
    fn symmetric_problem_has_symmetric_tie() {
        let l = link(1e-9, 1e-10, 1e-12, 1.0, 1.0);
        let p = PowerProblem::new(TransmissionMode::Fdb, [l, l], None).unwrap();
        let o = oracle_grid(&p, 40);
        for q in &o.ties {
            assert!(o.ties.contains(&[q[1], q[0]]), "{:?}", o.ties);
        }
    }

    #[test]
    fn twelve_db_links_without_interference() {
        let n = 1.0;
        let s12 = db_to_linear(12.0);
        let p = fdd([link(s12, 0.0, n, 1.0, 1.0), link(s12, 0.0, n, 1.0, 1.0)]);
        let sol = PowerSolution { p: [1.0, 1.0], objective: p.objective([1.0, 1.0]), iterations: 0, converged: true, trace: vec![] };
        let r = optimal_rates(&p, &sol);
        assert_relative_eq!(r[0].spectral_efficiency, 4.075, epsilon = 1e-3);
        assert_relative_eq!(r[1].spectral_efficiency, 4.075, epsilon = 1e-3);
    }

    #[test]
    fn optimal_rates_agree_with_link_rate() {
        let unit = PerKind { macro_bs: 1e-12, small_bs: 2e-12, ue: 5e-13 };
        let maxp = PerKind { macro_bs: 40.0, small_bs: 0.25, ue: 0.2 };
        let mut c = ChannelState::uniform(2, 1e-10, 1e-12, unit, maxp);
        c.set_pair_gain(Node::MacroBs, Node::SmallBs, 1e-8);
        for mode in [TransmissionMode::Fdd { dl: 1 }, TransmissionMode::Fdu { ul: 0 }, TransmissionMode::Fdb, TransmissionMode::Fda { ul: 0, dl: 1 }] {
            let p = PowerProblem::from_channel(mode, &c, [1.0, 2.0], None).unwrap();
            let s = solve_sp(&p, &SolveOptions::default());
            let r = optimal_rates(&p, &s);
            let lr = link_rate(mode, &p.power_vector(s.p), &c, 1.0, 1.0).unwrap();
            for i in 0..2 {
                assert_relative_eq!(lr.links[i].spectral_efficiency, r[i].spectral_efficiency, max_relative = 1e-12);
            }
            assert_eq!(lr.links[0].link, mode.links()[0]);
        }
        assert_eq!(TransmissionMode::Fdd { dl: 1 }.links()[1], Link::AccessDl(1));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn scale_invariance(seed in 0u64..10_000, k in -6.0f64..6.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_problem(&mut rng, None);
            let f = 10f64.powf(k);
            let mut q = p;
            for l in &mut q.links {
                l.signal_gain *= f;
                l.cross_gain *= f;
                l.noise *= f;
            }
            let a = oracle_grid(&p, 40);
            let b = oracle_grid(&q, 40);
            prop_assert_eq!(a.best.p, b.best.p);
            let sa = solve_sp(&p, &SolveOptions::default());
            let sb = solve_sp(&q, &SolveOptions::default());
            prop_assert!((sa.objective - sb.objective).abs() <= 1e-6 * sa.objective.abs().max(1e-9));
        }

        #[test]
        fn iterates_stay_in_box(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_problem(&mut rng, Some(7.0));
            let s = solve_sp(&p, &SolveOptions::default());
            for t in &s.trace {
                prop_assert!(t.p[0] >= 0.0 && t.p[0] <= p.links[0].max_power);
                prop_assert!(t.p[1] >= 0.0 && t.p[1] <= p.links[1].max_power);
            }
        }
    }
}
