//! Structural bounds on the optimal threshold index and the per-family
//! threshold formulas.

use std::collections::BTreeMap;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::curve::{full_curve, threshold_from_curve, CurveError, QUADRATURE_SIGN_TOLERANCE};
use crate::models::{ModelError, ModelKind, QualityModel};
use crate::numeric::{harmonic, harmonic_range, NeumaierSum, Quadrature, EULER_GAMMA};

/// Smallest `n` for which the normal upper bound is asserted.
pub const NORMAL_BOUND_FLOOR: usize = 1000;
/// Relative slack on the Pareto ratio bound, which only holds for large `n`.
pub const PARETO_RELATIVE_SLACK: f64 = 0.05;
/// `β` bisection bracket and tolerance.
pub const BETA_BRACKET: (f64, f64) = (1e-12, 1.0 - 1e-12);
pub const BETA_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("invalid {name} = {value}: {reason}")]
    InvalidParameter { name: &'static str, value: f64, reason: &'static str },
    #[error("β root not bracketed for α = {alpha}: ∫ over the bracket gives [{low}, {high}], target {target}")]
    BracketFailure { alpha: f64, low: f64, high: f64, target: f64 },
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// `Σ_{k=c*-1}^{n-1} 1/k > 1`. For `c* = 1` the sum would start at `1/0`;
/// the check is taken to hold.
pub fn harmonic_bound_holds(c_star: usize, n: usize) -> bool {
    if c_star <= 1 {
        return true;
    }
    harmonic_range(c_star - 1, n - 1) > 1.0
}

/// Least `c` with `Σ_{k=c}^{n-1} 1/k <= 1`: the optimal threshold of the
/// best-choice problem.
pub fn classical_threshold(n: usize) -> usize {
    assert!(n >= 2, "classical_threshold needs n >= 2");
    let mut tail = NeumaierSum::new();
    let mut c = n;
    // accumulate 1/(c-1) from the small end while the sum stays <= 1
    while c > 1 {
        let mut next = tail;
        next.add(1.0 / (c - 1) as f64);
        if next.value() > 1.0 {
            break;
        }
        tail = next;
        c -= 1;
    }
    c
}

/// `(⌊(n-1)/H_{n-1}⌋, ⌈n/H_n⌉)`, bracketing `c*(n)` for exponential qualities.
pub fn exponential_bracket(n: usize) -> (usize, usize) {
    assert!(n >= 3, "exponential_bracket needs n >= 3");
    let lower = ((n - 1) as f64 / harmonic(n - 1)).floor() as usize;
    let upper = (n as f64 / harmonic(n)).ceil() as usize;
    (lower, upper)
}

/// `n / (ln n + γ)`, the asymptotic exponential threshold.
pub fn exponential_asymptotic(n: usize) -> f64 {
    let nf = n as f64;
    nf / (nf.ln() + EULER_GAMMA)
}

/// `(n-2) ln ln n / ln((n-1)²/2π) + 1`, an upper bound on `c*(n)` for normal
/// qualities once `n` is large enough.
pub fn normal_upper_bound(n: usize) -> Result<f64, BoundsError> {
    if n < 16 {
        return Err(BoundsError::InvalidParameter { name: "n", value: n as f64, reason: "normal bound needs n >= 16" });
    }
    let nf = n as f64;
    let denom = ((nf - 1.0) * (nf - 1.0) / (2.0 * std::f64::consts::PI)).ln();
    Ok((nf - 2.0) * nf.ln().ln() / denom + 1.0)
}

/// `α^{α/(α-1)}`, bounding `(n+1)/(c*+1)` for Pareto(α) qualities; tends to
/// `e` as `α → 1`.
pub fn pareto_ratio_bound(alpha: f64) -> Result<f64, BoundsError> {
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(BoundsError::InvalidParameter { name: "alpha", value: alpha, reason: "must be a finite real > 1" });
    }
    // α ln α / (α-1) with ln α = ln_1p(α-1)
    let d = alpha - 1.0;
    Ok((alpha * d.ln_1p() / d).exp())
}

/// Exact `⌊√(n + 1/4) + 1/2⌋`: the largest `m` with `m(m-1) <= n`.
pub fn permutation_threshold(n: usize) -> usize {
    assert!(n >= 1, "permutation_threshold needs n >= 1");
    let mut m = ((n as f64).sqrt() + 0.5) as usize;
    while m * (m - 1) > n {
        m -= 1;
    }
    while (m + 1) * m <= n {
        m += 1;
    }
    m
}

/// `g(α) = (1 - e^{-α})/α`, with `g(0) = 1`.
pub fn bernoulli_g(alpha: f64) -> f64 {
    if alpha == 0.0 {
        1.0
    } else {
        -(-alpha).exp_m1() / alpha
    }
}

/// `∫_β^1 e^{-αz}/z dz`, integrated in `t = ln z` where the integrand is smooth.
fn regime_integral(alpha: f64, beta: f64) -> Result<f64, BoundsError> {
    let quad = Quadrature { abs_tol: 1e-14, rel_tol: 1e-14, max_subdivisions: 4000 };
    quad.integrate(|t: f64| (-alpha * t.exp()).exp(), beta.ln(), 0.0)
        .map(|e| e.value)
        .map_err(|e| BoundsError::Quadrature(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BernoulliBeta {
    pub alpha: f64,
    pub g_alpha: f64,
    pub beta: f64,
}

/// Solves `∫_β^1 e^{-αz}/z dz = g(α)` for `β` by bisection.
pub fn bernoulli_beta(alpha: f64) -> Result<BernoulliBeta, BoundsError> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(BoundsError::InvalidParameter {
            name: "alpha",
            value: alpha,
            reason: "must be a finite real >= 0",
        });
    }
    let g_alpha = bernoulli_g(alpha);
    let (mut lo, mut hi) = BETA_BRACKET;
    // the integral decreases in β
    let (at_lo, at_hi) = (regime_integral(alpha, lo)?, regime_integral(alpha, hi)?);
    if !(at_lo >= g_alpha && at_hi <= g_alpha) {
        return Err(BoundsError::BracketFailure { alpha, low: at_hi, high: at_lo, target: g_alpha });
    }
    while hi - lo > BETA_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if regime_integral(alpha, mid)? > g_alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(BernoulliBeta { alpha, g_alpha, beta: 0.5 * (lo + hi) })
}

/// Bernoulli qualities with `p = P(X = 0)` at a given `n`, read through
/// `α = (1-p)n`, the expected number of candidates worth 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BernoulliRegime {
    pub p: f64,
    pub n: usize,
    pub alpha: f64,
    pub g_alpha: f64,
    pub beta: f64,
}

impl BernoulliRegime {
    pub fn new(p: f64, n: usize) -> Result<Self, BoundsError> {
        if !(p > 0.0 && p < 1.0) {
            return Err(BoundsError::InvalidParameter { name: "p", value: p, reason: "must lie in (0, 1)" });
        }
        let alpha = (1.0 - p) * n as f64;
        let b = bernoulli_beta(alpha)?;
        Ok(Self { p, n, alpha, g_alpha: b.g_alpha, beta: b.beta })
    }
}

fn finite_or_null<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_none()
    }
}

/// One bound evaluated against a computed `c*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck {
    #[serde(serialize_with = "finite_or_null")]
    pub value: f64,
    pub satisfied: bool,
    /// Whether the bound is claimed at this `n` (asymptotic bounds have floors).
    pub active: bool,
}

impl BoundCheck {
    fn always(value: f64, satisfied: bool) -> Self {
        Self { value, satisfied, active: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub model: String,
    pub n: usize,
    pub c_star: usize,
    pub bounds: BTreeMap<String, BoundCheck>,
}

impl BoundsReport {
    /// Active bounds that failed.
    pub fn violations(&self) -> impl Iterator<Item = (&String, &BoundCheck)> {
        self.bounds.iter().filter(|(_, b)| b.active && !b.satisfied)
    }
}

/// Computes `c*(n)` for `model` and checks every bound that applies to it.
pub fn bounds_report(model: &QualityModel, n: usize) -> Result<BoundsReport, BoundsError> {
    if n < 2 {
        return Err(CurveError::InvalidN { n, min: 2 }.into());
    }
    let mu = model.mu_sequence(n)?;
    let curve = full_curve(&mu, n, model.label())?;
    let tolerance = if model.is_quadrature_backed() { QUADRATURE_SIGN_TOLERANCE } else { 0.0 };
    let threshold = threshold_from_curve(&curve, tolerance);
    let c_star = threshold.c_star;
    let mut bounds = BTreeMap::new();
    bounds.insert(
        "harmonic_tail".to_string(),
        BoundCheck::always(threshold.harmonic_tail, threshold.satisfies_theorem_bound),
    );
    let nf = n as f64;
    match model.kind() {
        ModelKind::ClassicalIndicator { .. } => {
            let c = classical_threshold(n);
            bounds.insert("classical_threshold".into(), BoundCheck::always(c as f64, c == c_star));
        }
        ModelKind::Permutation { .. } => {
            let c = permutation_threshold(n);
            bounds.insert("permutation_threshold".into(), BoundCheck::always(c as f64, c == c_star));
        }
        ModelKind::Exponential if n >= 3 => {
            let (lower, upper) = exponential_bracket(n);
            bounds.insert("exponential_bracket_lower".into(), BoundCheck::always(lower as f64, c_star + 1 >= lower));
            bounds.insert("exponential_bracket_upper".into(), BoundCheck::always(upper as f64, c_star <= upper + 1));
        }
        ModelKind::Normal if n >= 16 => {
            let bound = normal_upper_bound(n)?;
            bounds.insert(
                "normal_upper_bound".into(),
                BoundCheck { value: bound, satisfied: c_star as f64 <= bound, active: n >= NORMAL_BOUND_FLOOR },
            );
        }
        ModelKind::Pareto { alpha } => {
            let bound = pareto_ratio_bound(*alpha)?;
            let ratio = (nf + 1.0) / (c_star as f64 + 1.0);
            bounds.insert(
                "pareto_ratio_bound".into(),
                BoundCheck::always(bound, ratio <= bound * (1.0 + PARETO_RELATIVE_SLACK)),
            );
        }
        ModelKind::Bernoulli { p } => {
            let regime = BernoulliRegime::new(*p, n)?;
            bounds.insert(
                "bernoulli_beta".into(),
                BoundCheck { value: regime.beta, satisfied: c_star as f64 / nf >= regime.beta - 0.02, active: false },
            );
        }
        _ => {}
    }
    Ok(BoundsReport { model: model.label().to_string(), n, c_star, bounds })
}
