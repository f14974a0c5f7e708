//! Quality models and their running-maximum means `μ_k = E[max(X_1..X_k)]`.
//!
//! A [`QualityModel`] is the only thing downstream code needs to know about a
//! distribution: it hands out `μ_k`, `μ = μ_1`, a sampler for simulation and,
//! for i.i.d. models, the CDF behind them.

pub mod cdf;
mod order_stats;
mod spec;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::numeric::{harmonic, ln_gamma, ln_gamma_ratio, NeumaierSum, QuadError, Quadrature};
use crate::par::Execution;
use cdf::{BernoulliCdf, Cdf, ExponentialCdf, FnCdf, NormalCdf, ParetoCdf, StepCdf, TabulatedCdf, UniformCdf};

pub use order_stats::{exchangeable_mu_of_max, order_stat_means, OrderStatTable, EXACT_BINOMIAL_LIMIT};
pub use spec::{parse_model_spec, SpecError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid {name} = {value}: {reason}")]
    InvalidParameter { name: &'static str, value: f64, reason: &'static str },
    #[error("index {k} out of range 1..={limit}")]
    IndexOutOfRange { k: usize, limit: usize },
    #[error("{0} has no i.i.d. increment integral")]
    NotIid(String),
    #[error("multiset is empty")]
    EmptyMultiset,
    #[error("invalid CDF: {0}")]
    InvalidCdf(String),
    #[error("quadrature failed at k = {k}: {source}")]
    Quadrature { k: usize, source: QuadError },
}

/// `μ_1..μ_m` together with the increments `μ_{k+1} - μ_k`.
///
/// Increments are stored separately because several models know them far
/// more accurately than the difference of two nearly equal `μ_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MuSequence {
    values: Vec<f64>,
    increments: Vec<f64>,
}

impl MuSequence {
    /// Builds a sequence from `μ_1..μ_m`, differencing for the increments.
    pub fn from_values(values: Vec<f64>) -> Self {
        let increments = values.windows(2).map(|w| w[1] - w[0]).collect();
        Self { values, increments }
    }

    /// Builds a sequence from `μ_1` and the increments, accumulating them
    /// with compensation.
    pub fn from_increments(mu: f64, increments: Vec<f64>) -> Self {
        let mut values = Vec::with_capacity(increments.len() + 1);
        let mut acc = NeumaierSum::new();
        acc.add(mu);
        values.push(mu);
        for &d in &increments {
            acc.add(d);
            values.push(acc.value());
        }
        Self { values, increments }
    }

    pub(crate) fn from_parts(values: Vec<f64>, increments: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), increments.len() + 1);
        Self { values, increments }
    }

    pub fn constant(value: f64, len: usize) -> Self {
        Self { values: vec![value; len], increments: vec![0.0; len.saturating_sub(1)] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `μ_k`, 1-based.
    pub fn mu(&self, k: usize) -> f64 {
        self.values[k - 1]
    }

    /// `μ_{k+1} - μ_k`, 1-based.
    pub fn increment(&self, k: usize) -> f64 {
        self.increments[k - 1]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// Keeps the first `len` entries.
    pub fn truncated(&self, len: usize) -> Self {
        let len = len.min(self.len());
        Self { values: self.values[..len].to_vec(), increments: self.increments[..len.saturating_sub(1)].to_vec() }
    }
}

#[derive(Debug, Clone)]
pub enum ModelKind {
    Exponential,
    Uniform,
    Normal,
    Pareto { alpha: f64 },
    Bernoulli { p: f64 },
    ClassicalIndicator { n: usize },
    Permutation { n: usize },
    FiniteMultiset(OrderStatTable),
    GenericCdf(Arc<dyn Cdf>),
}

/// How a model is simulated.
#[derive(Debug, Clone)]
pub enum Sampler {
    /// i.i.d. draws by inverse CDF.
    Quantile(Arc<dyn Cdf>),
    /// Uniformly random arrival order of a fixed multiset.
    Shuffle(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct QualityModel {
    kind: ModelKind,
    label: String,
    quadrature: Quadrature,
}

impl fmt::Display for QualityModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

fn positive_size(name: &'static str, n: usize) -> Result<usize, ModelError> {
    if n == 0 {
        Err(ModelError::InvalidParameter { name, value: 0.0, reason: "must be at least 1" })
    } else {
        Ok(n)
    }
}

impl QualityModel {
    fn new(kind: ModelKind, label: impl Into<String>) -> Self {
        Self { kind, label: label.into(), quadrature: Quadrature::default() }
    }

    pub fn exponential() -> Self {
        Self::new(ModelKind::Exponential, "exponential")
    }

    pub fn uniform() -> Self {
        Self::new(ModelKind::Uniform, "uniform")
    }

    pub fn normal() -> Self {
        Self::new(ModelKind::Normal, "normal")
    }

    pub fn pareto(alpha: f64) -> Result<Self, ModelError> {
        if !(alpha > 1.0 && alpha.is_finite()) {
            return Err(ModelError::InvalidParameter {
                name: "alpha",
                value: alpha,
                reason: "must be a finite real > 1",
            });
        }
        Ok(Self::new(ModelKind::Pareto { alpha }, format!("pareto:alpha={alpha}")))
    }

    /// Quality 1 with probability `1 - p`, 0 with probability `p`.
    pub fn bernoulli(p: f64) -> Result<Self, ModelError> {
        if !(p > 0.0 && p < 1.0) {
            return Err(ModelError::InvalidParameter { name: "p", value: p, reason: "must lie in (0, 1)" });
        }
        Ok(Self::new(ModelKind::Bernoulli { p }, format!("bernoulli:p={p}")))
    }

    /// One candidate worth 1, the other `n - 1` worth 0.
    pub fn classical(n: usize) -> Result<Self, ModelError> {
        let n = positive_size("n", n)?;
        Ok(Self::new(ModelKind::ClassicalIndicator { n }, format!("classical:n={n}")))
    }

    /// Qualities are a uniformly random permutation of `1..=n`.
    pub fn permutation(n: usize) -> Result<Self, ModelError> {
        let n = positive_size("n", n)?;
        Ok(Self::new(ModelKind::Permutation { n }, format!("permutation:n={n}")))
    }

    /// The given values in uniformly random order (draws without replacement).
    pub fn multiset(values: &[f64]) -> Result<Self, ModelError> {
        let table = order_stat_means(values)?;
        let label = format!("multiset:m={}", table.len());
        Ok(Self::new(ModelKind::FiniteMultiset(table), label))
    }

    /// i.i.d. draws from an arbitrary CDF.
    pub fn from_cdf(cdf: Arc<dyn Cdf>, label: impl Into<String>) -> Self {
        Self::new(ModelKind::GenericCdf(cdf), label)
    }

    /// i.i.d. draws from a CDF evaluator on `[lower, upper]`.
    pub fn from_cdf_fn(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        lower: f64,
        upper: f64,
        label: impl Into<String>,
    ) -> Result<Self, ModelError> {
        Ok(Self::from_cdf(Arc::new(FnCdf::new(f, lower, upper)?), label))
    }

    /// i.i.d. draws with the piecewise-linear CDF through `points`.
    pub fn tabulated(points: Vec<(f64, f64)>, label: impl Into<String>) -> Result<Self, ModelError> {
        Ok(Self::from_cdf(Arc::new(TabulatedCdf::new(points)?), label))
    }

    /// i.i.d. draws *with replacement* from a sample (its empirical CDF).
    pub fn empirical(sample: Vec<f64>) -> Result<Self, ModelError> {
        let label = format!("empirical:m={}", sample.len());
        Ok(Self::from_cdf(Arc::new(StepCdf::new(sample)?), label))
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_quadrature(mut self, quadrature: Quadrature) -> Self {
        self.quadrature = quadrature;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn quadrature(&self) -> &Quadrature {
        &self.quadrature
    }

    /// Number of candidates fixed by the model itself, if any.
    pub fn intrinsic_n(&self) -> Option<usize> {
        match &self.kind {
            ModelKind::ClassicalIndicator { n } | ModelKind::Permutation { n } => Some(*n),
            ModelKind::FiniteMultiset(table) => Some(table.len()),
            _ => None,
        }
    }

    pub fn is_iid(&self) -> bool {
        self.distribution().is_some()
    }

    /// `true` when `μ_k` comes from numerical quadrature.
    pub fn is_quadrature_backed(&self) -> bool {
        matches!(self.kind, ModelKind::Normal | ModelKind::GenericCdf(_))
    }

    /// The common CDF of an i.i.d. model.
    pub fn distribution(&self) -> Option<Arc<dyn Cdf>> {
        Some(match &self.kind {
            ModelKind::Exponential => Arc::new(ExponentialCdf),
            ModelKind::Uniform => Arc::new(UniformCdf),
            ModelKind::Normal => Arc::new(NormalCdf),
            ModelKind::Pareto { alpha } => Arc::new(ParetoCdf { alpha: *alpha }),
            ModelKind::Bernoulli { p } => Arc::new(BernoulliCdf { p: *p }),
            ModelKind::GenericCdf(cdf) => Arc::clone(cdf),
            ModelKind::ClassicalIndicator { .. } | ModelKind::Permutation { .. } | ModelKind::FiniteMultiset(_) => {
                return None
            }
        })
    }

    pub fn sampler(&self) -> Sampler {
        match &self.kind {
            ModelKind::ClassicalIndicator { n } => {
                let mut pool = vec![0.0; *n];
                pool[n - 1] = 1.0;
                Sampler::Shuffle(pool)
            }
            ModelKind::Permutation { n } => Sampler::Shuffle((1..=*n).map(|v| v as f64).collect()),
            ModelKind::FiniteMultiset(table) => Sampler::Shuffle(table.means().to_vec()),
            _ => Sampler::Quantile(self.distribution().expect("remaining kinds are i.i.d.")),
        }
    }

    fn check_k(&self, k: usize) -> Result<(), ModelError> {
        let limit = self.intrinsic_n().unwrap_or(usize::MAX);
        if k == 0 || k > limit {
            Err(ModelError::IndexOutOfRange { k, limit })
        } else {
            Ok(())
        }
    }

    /// `μ = E[X_1]`.
    pub fn mean(&self) -> Result<f64, ModelError> {
        Ok(match &self.kind {
            ModelKind::Exponential => 1.0,
            ModelKind::Uniform => 0.5,
            ModelKind::Normal => 0.0,
            ModelKind::Pareto { alpha } => alpha / (alpha - 1.0),
            ModelKind::Bernoulli { p } => 1.0 - p,
            ModelKind::ClassicalIndicator { n } => 1.0 / *n as f64,
            ModelKind::Permutation { n } => (*n as f64 + 1.0) / 2.0,
            ModelKind::FiniteMultiset(table) => table.mu_of_max(1)?,
            ModelKind::GenericCdf(cdf) => {
                cdf::mean_integral(cdf.as_ref(), &self.quadrature)
                    .map_err(|source| ModelError::Quadrature { k: 1, source })?
                    .value
            }
        })
    }

    // Closed-form μ_k, when the model has one.
    fn closed_mu(&self, k: usize) -> Option<f64> {
        let kf = k as f64;
        match &self.kind {
            ModelKind::Exponential => Some(harmonic(k)),
            ModelKind::Uniform => Some(kf / (kf + 1.0)),
            ModelKind::Pareto { alpha } => {
                let a = 1.0 / alpha;
                Some((ln_gamma(1.0 - a) + ln_gamma_ratio(kf + 1.0, a)).exp())
            }
            ModelKind::Bernoulli { p } => Some(-(kf * p.ln()).exp_m1()),
            ModelKind::ClassicalIndicator { n } => Some(kf / *n as f64),
            ModelKind::Permutation { n } => Some(kf * (*n as f64 + 1.0) / (kf + 1.0)),
            _ => None,
        }
    }

    // Closed-form μ_{k+1} - μ_k, when the model has one.
    fn closed_increment(&self, k: usize) -> Option<f64> {
        let kf = k as f64;
        match &self.kind {
            ModelKind::Exponential => Some(1.0 / (kf + 1.0)),
            ModelKind::Uniform => Some(1.0 / ((kf + 1.0) * (kf + 2.0))),
            ModelKind::Pareto { alpha } => Some(self.closed_mu(k + 1)? / (alpha * (kf + 1.0))),
            ModelKind::Bernoulli { p } => Some((kf * p.ln()).exp() * (1.0 - p)),
            ModelKind::ClassicalIndicator { n } => Some(1.0 / *n as f64),
            ModelKind::Permutation { n } => Some((*n as f64 + 1.0) / ((kf + 1.0) * (kf + 2.0))),
            _ => None,
        }
    }

    /// `μ_k = E[max(X_1, …, X_k)]`.
    pub fn mu_max(&self, k: usize) -> Result<f64, ModelError> {
        self.check_k(k)?;
        if let Some(mu) = self.closed_mu(k) {
            return Ok(mu);
        }
        match &self.kind {
            ModelKind::FiniteMultiset(table) => table.mu_of_max(k),
            _ => Ok(self.mu_sequence_with(k, Execution::Sequential)?.mu(k)),
        }
    }

    /// `μ_{k+1} - μ_k = ∫ F^k (1 - F) dx`, always by quadrature against the
    /// model's CDF. Only defined for i.i.d. models.
    pub fn mu_increment(&self, k: usize) -> Result<f64, ModelError> {
        let dist = self.distribution().ok_or_else(|| ModelError::NotIid(self.label.clone()))?;
        if k == 0 {
            return Err(ModelError::IndexOutOfRange { k, limit: usize::MAX });
        }
        self.quadrature_increment(dist.as_ref(), k)
    }

    fn quadrature_increment(&self, dist: &dyn Cdf, k: usize) -> Result<f64, ModelError> {
        let est = cdf::increment_integral(dist, k, &self.quadrature)
            .map_err(|source| ModelError::Quadrature { k, source })?;
        // rounding can leave a vanishing increment a hair below zero
        Ok(est.value.max(0.0))
    }

    /// `(μ_1, …, μ_n)`.
    pub fn mu_sequence(&self, n: usize) -> Result<MuSequence, ModelError> {
        self.mu_sequence_with(n, Execution::default())
    }

    pub fn mu_sequence_with(&self, n: usize, exec: Execution) -> Result<MuSequence, ModelError> {
        self.check_k(n)?;
        if self.closed_mu(1).is_some() {
            let values = exec.map_range(n, |i| self.closed_mu(i + 1).expect("closed form"));
            let increments = exec.map_range(n - 1, |i| self.closed_increment(i + 1).expect("closed form"));
            return Ok(MuSequence::from_parts(values, increments));
        }
        match &self.kind {
            ModelKind::FiniteMultiset(table) => {
                let values =
                    exec.map_range(n, |i| table.mu_of_max(i + 1)).into_iter().collect::<Result<Vec<_>, _>>()?;
                Ok(MuSequence::from_values(values))
            }
            _ => {
                let dist = self.distribution().expect("quadrature models are i.i.d.");
                let mu = self.mean()?;
                let increments = exec
                    .map_range(n - 1, |i| self.quadrature_increment(dist.as_ref(), i + 1))
                    .into_iter()
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(MuSequence::from_increments(mu, increments))
            }
        }
    }
}

/// Free-function form of [`QualityModel::mu_max`].
pub fn mu_max(model: &QualityModel, k: usize) -> Result<f64, ModelError> {
    model.mu_max(k)
}

/// Free-function form of [`QualityModel::mu_increment`].
pub fn mu_increment(model: &QualityModel, k: usize) -> Result<f64, ModelError> {
    model.mu_increment(k)
}

/// Free-function form of [`QualityModel::mu_sequence`].
pub fn mu_sequence(model: &QualityModel, n: usize) -> Result<MuSequence, ModelError> {
    model.mu_sequence(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn closed_form_examples() {
        assert!(close(QualityModel::exponential().mu_max(3).unwrap(), 11.0 / 6.0, 1e-15));
        assert_eq!(QualityModel::permutation(10).unwrap().mu_max(4).unwrap(), 8.8);
        assert!(close(QualityModel::multiset(&[0.0, 0.0, 1.0]).unwrap().mu_max(2).unwrap(), 2.0 / 3.0, 1e-15));
        let seq = QualityModel::classical(4).unwrap().mu_sequence(4).unwrap();
        assert_eq!(seq.values(), &[0.25, 0.5, 0.75, 1.0]);
        let seq = QualityModel::exponential().mu_sequence(3).unwrap();
        assert!(close(seq.mu(2), 1.5, 1e-15) && close(seq.mu(3), 11.0 / 6.0, 1e-15));
        let seq = QualityModel::uniform().mu_sequence(2).unwrap();
        assert!(close(seq.mu(1), 0.5, 1e-16) && close(seq.mu(2), 2.0 / 3.0, 1e-16));
    }

    #[test]
    fn first_mean_is_mu() {
        let models = [
            QualityModel::exponential(),
            QualityModel::uniform(),
            QualityModel::normal(),
            QualityModel::pareto(2.5).unwrap(),
            QualityModel::bernoulli(0.3).unwrap(),
            QualityModel::classical(7).unwrap(),
            QualityModel::permutation(7).unwrap(),
            QualityModel::multiset(&[1.0, 4.0, 4.0, -2.0]).unwrap(),
        ];
        for m in &models {
            assert!(close(m.mu_max(1).unwrap(), m.mean().unwrap(), 1e-14), "{m}");
        }
    }

    #[test]
    fn pareto_closed_form_reference() {
        // Γ(1-1/α) Γ(k+1) / Γ(k+1-1/α) at α = 1.5, k = 3: Γ(1/3)·6/Γ(10/3)
        let expected = 6.0 / ((1.0 / 3.0) * (4.0 / 3.0) * (7.0 / 3.0));
        assert!(close(QualityModel::pareto(1.5).unwrap().mu_max(3).unwrap(), expected, 1e-13));
        // μ_1 is the mean α/(α-1)
        assert!(close(QualityModel::pareto(1.5).unwrap().closed_mu(1).unwrap(), 3.0, 1e-14));
    }

    #[test]
    fn increments_by_quadrature() {
        let exp = QualityModel::exponential();
        for k in [1, 2, 10, 100, 1000] {
            assert!(close(exp.mu_increment(k).unwrap(), 1.0 / (k as f64 + 1.0), 1e-9), "k={k}");
        }
        let p = 0.4;
        let b = QualityModel::bernoulli(p).unwrap();
        for k in [1, 2, 5, 20] {
            let expected = p.powi(k as i32) * (1.0 - p);
            assert!((b.mu_increment(k).unwrap() - expected).abs() < 1e-14, "k={k}");
        }
        let point_mass = QualityModel::from_cdf_fn(|x| if x >= 0.0 { 1.0 } else { 0.0 }, 0.0, 0.0, "dirac").unwrap();
        assert_eq!(point_mass.mu_increment(3).unwrap(), 0.0);
        assert!(matches!(QualityModel::classical(5).unwrap().mu_increment(1), Err(ModelError::NotIid(_))));
    }

    #[test]
    fn generic_cdf_matches_closed_forms() {
        let generic_exp = QualityModel::from_cdf_fn(|x: f64| -(-x).exp_m1(), 0.0, f64::INFINITY, "exp-cdf").unwrap();
        let alpha = 2.5;
        let generic_pareto =
            QualityModel::from_cdf_fn(move |x: f64| 1.0 - x.powf(-alpha), 1.0, f64::INFINITY, "pareto-cdf").unwrap();
        let exp = QualityModel::exponential().mu_sequence(200).unwrap();
        let par = QualityModel::pareto(alpha).unwrap().mu_sequence(200).unwrap();
        let gexp = generic_exp.mu_sequence(200).unwrap();
        let gpar = generic_pareto.mu_sequence(200).unwrap();
        for k in 1..=200 {
            assert!((gexp.mu(k) - exp.mu(k)).abs() < 1e-7, "exp k={k}");
            assert!((gpar.mu(k) - par.mu(k)).abs() < 1e-7, "pareto k={k}: {} vs {}", gpar.mu(k), par.mu(k));
        }
    }

    #[test]
    fn range_checks() {
        assert!(matches!(QualityModel::permutation(5).unwrap().mu_max(6), Err(ModelError::IndexOutOfRange { .. })));
        assert!(matches!(QualityModel::exponential().mu_max(0), Err(ModelError::IndexOutOfRange { .. })));
        assert!(QualityModel::pareto(1.0).is_err());
        assert!(QualityModel::bernoulli(1.0).is_err());
        assert!(QualityModel::classical(0).is_err());
        assert!(QualityModel::multiset(&[]).is_err());
    }

    #[test]
    fn sequential_and_parallel_sequences_agree() {
        let m = QualityModel::normal();
        let a = m.mu_sequence_with(300, Execution::Sequential).unwrap();
        let b = m.mu_sequence_with(300, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn normal_reference_values() {
        // E[max of 2 std normals] = 1/sqrt(pi); E[max of 3] = 3/(2 sqrt(pi))
        let seq = QualityModel::normal().mu_sequence(3).unwrap();
        let sqrt_pi = std::f64::consts::PI.sqrt();
        assert!((seq.mu(2) - 1.0 / sqrt_pi).abs() < 1e-10);
        assert!((seq.mu(3) - 1.5 / sqrt_pi).abs() < 1e-10);
    }

    #[test]
    fn tabulated_uniform_reproduces_uniform() {
        let t = QualityModel::tabulated(vec![(0.0, 0.0), (1.0, 1.0)], "table").unwrap();
        let seq = t.mu_sequence(50).unwrap();
        for k in 1..=50 {
            assert!((seq.mu(k) - k as f64 / (k as f64 + 1.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn empirical_model_is_iid_with_replacement() {
        // two draws with replacement from {0, 1}: max is 1 unless both 0
        let e = QualityModel::empirical(vec![0.0, 1.0]).unwrap();
        assert!((e.mu_max(2).unwrap() - 0.75).abs() < 1e-12);
        // without replacement the max of both is always 1
        assert_eq!(QualityModel::multiset(&[0.0, 1.0]).unwrap().mu_max(2).unwrap(), 1.0);
    }
}
