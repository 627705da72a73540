//! Posynomials and monomials over two positive variables, in log
//! coordinates `z = ln p`, and their arithmetic-geometric mean condensation.

use arrayvec::ArrayVec;

/// `coeff * exp(exps . z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub coeff: f64,
    pub exps: [f64; 2],
}

impl Term {
    #[inline]
    fn log_value(&self, z: [f64; 2]) -> f64 {
        self.coeff.ln() + self.exps[0] * z[0] + self.exps[1] * z[1]
    }
}

/// Sum of at most three positive terms; zero-coefficient terms are dropped.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Posynomial {
    terms: ArrayVec<Term, 3>,
}

impl Posynomial {
    pub fn new(terms: impl IntoIterator<Item = Term>) -> Self {
        Self { terms: terms.into_iter().filter(|t| t.coeff > 0.0).collect() }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// `ln f(exp z)` and its gradient, via a shifted log-sum-exp.
    pub fn log_value_grad(&self, z: [f64; 2]) -> (f64, [f64; 2]) {
        let mut logs = [0.0; 3];
        let mut max = f64::NEG_INFINITY;
        for (i, t) in self.terms.iter().enumerate() {
            logs[i] = t.log_value(z);
            max = max.max(logs[i]);
        }
        let mut sum = 0.0;
        let mut grad = [0.0; 2];
        for (i, t) in self.terms.iter().enumerate() {
            let w = (logs[i] - max).exp();
            sum += w;
            grad[0] += w * t.exps[0];
            grad[1] += w * t.exps[1];
        }
        (max + sum.ln(), [grad[0] / sum, grad[1] / sum])
    }

    pub fn log_value(&self, z: [f64; 2]) -> f64 {
        self.log_value_grad(z).0
    }

    /// Value at `p` (not log coordinates).
    pub fn eval(&self, p: [f64; 2]) -> f64 {
        self.terms.iter().map(|t| t.coeff * p[0].powf(t.exps[0]) * p[1].powf(t.exps[1])).sum()
    }
}

/// `exp(log_coeff) * p1^exps[0] * p2^exps[1]`, stored in log form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monomial {
    pub log_coeff: f64,
    pub exps: [f64; 2],
}

impl Monomial {
    #[inline]
    pub fn log_value(&self, z: [f64; 2]) -> f64 {
        self.log_coeff + self.exps[0] * z[0] + self.exps[1] * z[1]
    }

    pub fn eval(&self, p: [f64; 2]) -> f64 {
        self.log_value([p[0].ln(), p[1].ln()]).exp()
    }
}

/// Best local monomial under-estimator of `f` at `z0`:
/// `prod_j (u_j / alpha_j)^alpha_j` with `alpha_j = u_j(z0) / f(z0)`.
/// It never exceeds `f` and touches it at `z0`.
pub fn condense(f: &Posynomial, z0: [f64; 2]) -> Monomial {
    let (log_f, _) = f.log_value_grad(z0);
    let mut log_coeff = 0.0;
    let mut exps = [0.0; 2];
    for t in f.terms() {
        let log_u = t.log_value(z0);
        let alpha = (log_u - log_f).exp();
        if alpha == 0.0 {
            continue;
        }
        // alpha * (ln c - ln alpha)
        log_coeff += alpha * (t.coeff.ln() - (log_u - log_f));
        exps[0] += alpha * t.exps[0];
        exps[1] += alpha * t.exps[1];
    }
    Monomial { log_coeff, exps }
}
