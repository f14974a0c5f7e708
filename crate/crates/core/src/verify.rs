//! Property checks over a matrix of built-in models: sign alternation of
//! `Δ^j μ_k`, decreasing increments, the order-statistic identity on small
//! multisets, concavity of `V_n`, the harmonic bound at `c*`, and
//! monotonicity of `c*(n)` in `n`.

use serde::Serialize;
use thiserror::Error;

use crate::curve::{full_curve, threshold_from_curve, CurveError, QUADRATURE_SIGN_TOLERANCE};
use crate::models::{order_stat_means, ModelError, QualityModel, Sampler};
use crate::order::{
    prop3_identity_residual_exact, residual_is_zero, residual_magnitude, sign_violations, DerivativeTable, OrderError,
};

/// Slack on `ΔV_n(c+1) <= ΔV_n(c)`, relative to `max |V_n|`.
pub const CONCAVITY_TOLERANCE: f64 = 1e-12;
/// Largest multiset size for the exact identity check.
pub const IDENTITY_MAX_SIZE: usize = 8;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Order(#[from] OrderError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub check: &'static str,
    pub model: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<usize>,
    pub value: f64,
}

impl Violation {
    fn new(check: &'static str, model: &QualityModel, value: f64) -> Self {
        Self { check, model: model.label().to_string(), n: None, j: None, k: None, c: None, value }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    /// Horizons for the curve checks.
    pub ns: Vec<usize>,
    /// Highest difference order for the sign checks.
    pub j_max: usize,
    /// Length of the `μ` prefix used by the sign checks.
    pub sign_len: usize,
    /// Horizons over which `c*(n)` must be non-decreasing (i.i.d. models).
    pub monotone_ns: Vec<usize>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { ns: vec![10, 100, 1000, 10_000], j_max: 6, sign_len: 40, monotone_ns: (10..=500).step_by(10).collect() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct VerifyReport {
    /// Number of individual inequalities evaluated.
    pub evaluated: u64,
    pub violations: Vec<Violation>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn merge(&mut self, other: VerifyReport) {
        self.evaluated += other.evaluated;
        self.violations.extend(other.violations);
    }
}

/// Deterministic integer multiset of size `m` with repeated values.
pub fn pattern_multiset(m: usize) -> QualityModel {
    let values: Vec<f64> = (0..m).map(|i| ((i * 7 + 3) % 11) as f64 - 4.0).collect();
    QualityModel::multiset(&values).expect("non-empty finite values").with_label(format!("pattern-multiset:m={m}"))
}

/// i.i.d. members of the matrix; `μ_k` does not depend on `n`.
pub fn iid_models() -> Vec<QualityModel> {
    vec![
        QualityModel::exponential(),
        QualityModel::uniform(),
        QualityModel::normal(),
        QualityModel::pareto(1.5).unwrap(),
        QualityModel::pareto(3.0).unwrap(),
        QualityModel::bernoulli(0.5).unwrap(),
        QualityModel::bernoulli(0.99).unwrap(),
    ]
}

/// The full model matrix at horizon `n`: i.i.d. models plus the finite
/// models sized to `n`.
pub fn builtin_models(n: usize) -> Vec<QualityModel> {
    let mut models = iid_models();
    models.push(QualityModel::classical(n).unwrap());
    models.push(QualityModel::permutation(n).unwrap());
    models.push(pattern_multiset(n));
    models
}

fn sign_tolerance(model: &QualityModel) -> f64 {
    if model.is_quadrature_backed() {
        QUADRATURE_SIGN_TOLERANCE
    } else {
        0.0
    }
}

/// Signs of `Δ^j μ_k` for `j <= j_max` over the first `len` terms, which
/// also covers decreasing increments (`j = 2`).
pub fn check_signs(model: &QualityModel, len: usize, j_max: usize) -> Result<VerifyReport, VerifyError> {
    let len = model.intrinsic_n().map_or(len, |m| m.min(len));
    let mu = model.mu_sequence(len)?;
    let table = DerivativeTable::from_sequence(&mu, j_max);
    let evaluated = (1..=table.j_max()).map(|j| table.row(j).len() as u64).sum();
    let violations = sign_violations(&table)
        .into_iter()
        .map(|v| Violation { j: Some(v.j), k: Some(v.k), ..Violation::new("sign_alternation", model, v.value) })
        .collect();
    Ok(VerifyReport { evaluated, violations })
}

/// Exact order-statistic identity for every `(j, k)` of a small multiset.
pub fn check_identity(values: &[f64], label: &str) -> Result<VerifyReport, VerifyError> {
    let table = order_stat_means(values)?;
    let m = table.len();
    let mut report = VerifyReport::default();
    for j in 1..m {
        for k in 1..=m - j {
            let r = prop3_identity_residual_exact(&table, j, k)?;
            report.evaluated += 1;
            if !residual_is_zero(&r) {
                report.violations.push(Violation {
                    check: "order_statistic_identity",
                    model: label.to_string(),
                    n: Some(m),
                    j: Some(j),
                    k: Some(k),
                    c: None,
                    value: residual_magnitude(&r),
                });
            }
        }
    }
    Ok(report)
}

/// Concavity of `V_n` and the harmonic bound at `c*`; returns `c*`.
pub fn check_curve(model: &QualityModel, n: usize) -> Result<(usize, VerifyReport), VerifyError> {
    let mu = model.mu_sequence(n)?;
    let curve = full_curve(&mu, n, model.label())?;
    let mut report = VerifyReport::default();
    let scale = curve.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for c in 1..n.saturating_sub(1) {
        report.evaluated += 1;
        let step = curve.diff(c + 1) - curve.diff(c);
        if step > CONCAVITY_TOLERANCE * scale {
            report.violations.push(Violation { n: Some(n), c: Some(c), ..Violation::new("concavity", model, step) });
        }
    }
    let threshold = threshold_from_curve(&curve, sign_tolerance(model));
    if threshold.c_star >= 2 {
        report.evaluated += 1;
        if !threshold.satisfies_theorem_bound {
            report.violations.push(Violation {
                n: Some(n),
                c: Some(threshold.c_star),
                ..Violation::new("harmonic_bound", model, threshold.harmonic_tail)
            });
        }
    }
    Ok((threshold.c_star, report))
}

/// `c*(n)` non-decreasing across `ns` (sorted ascending) for an i.i.d. model.
pub fn check_monotone_threshold(model: &QualityModel, ns: &[usize]) -> Result<VerifyReport, VerifyError> {
    let Some(&largest) = ns.iter().max() else {
        return Ok(VerifyReport::default());
    };
    let mu = model.mu_sequence(largest)?;
    let tolerance = sign_tolerance(model);
    let mut report = VerifyReport::default();
    let mut previous: Option<usize> = None;
    for &n in ns {
        let curve = full_curve(&mu, n, model.label())?;
        let c_star = threshold_from_curve(&curve, tolerance).c_star;
        if let Some(p) = previous {
            report.evaluated += 1;
            if c_star < p {
                report.violations.push(Violation {
                    n: Some(n),
                    c: Some(c_star),
                    ..Violation::new("monotone_threshold", model, p as f64)
                });
            }
        }
        previous = Some(c_star);
    }
    Ok(report)
}

/// Values of a finite model, when it is small enough for exact checks.
fn small_values(model: &QualityModel) -> Option<Vec<f64>> {
    match model.sampler() {
        Sampler::Shuffle(values) if values.len() <= IDENTITY_MAX_SIZE => Some(values),
        _ => None,
    }
}

/// Runs every check over `models`, or over the built-in matrix when `None`.
///
/// i.i.d. models are checked at every horizon in `opts.ns`; finite models
/// only at their own size.
pub fn verify(models: Option<&[QualityModel]>, opts: &VerifyOptions) -> Result<VerifyReport, VerifyError> {
    let mut report = VerifyReport::default();
    let (iid, finite): (Vec<QualityModel>, Vec<QualityModel>) = match models {
        Some(ms) => ms.iter().cloned().partition(QualityModel::is_iid),
        None => (
            iid_models(),
            opts.ns.iter().flat_map(|&n| builtin_models(n).into_iter().filter(|m| !m.is_iid())).collect(),
        ),
    };
    for model in &iid {
        report.merge(check_signs(model, opts.sign_len, opts.j_max)?);
        report.merge(check_monotone_threshold(model, &opts.monotone_ns)?);
        for &n in opts.ns.iter().filter(|&&n| n >= 2) {
            report.merge(check_curve(model, n)?.1);
        }
    }
    for model in &finite {
        report.merge(check_signs(model, opts.sign_len, opts.j_max)?);
        let n = model.intrinsic_n().expect("finite models have a size");
        if n >= 2 {
            report.merge(check_curve(model, n)?.1);
        }
    }
    let small: Vec<(String, Vec<f64>)> = match models {
        Some(_) => finite.iter().filter_map(|m| Some((m.label().to_string(), small_values(m)?))).collect(),
        None => (1..=IDENTITY_MAX_SIZE)
            .flat_map(|m| {
                [QualityModel::permutation(m).unwrap(), QualityModel::classical(m).unwrap(), pattern_multiset(m)]
            })
            .filter_map(|m| Some((m.label().to_string(), small_values(&m)?)))
            .collect(),
    };
    for (label, values) in &small {
        report.merge(check_identity(values, label)?);
    }
    Ok(report)
}
