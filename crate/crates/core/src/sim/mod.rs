//! Monte Carlo simulation of the interview process, and exact enumeration
//! of arrival orders for small finite models.
//!
//! Runs are reproducible for a fixed `(seed, workers)`: worker `w` owns the
//! ChaCha8 stream `w` of `seed`, trial `t` runs on stream `t mod workers`,
//! and per-worker moments are merged in worker order.

mod episode;
mod exact;
mod sweep;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::CurveError;
use crate::models::{ModelError, QualityModel, Sampler};
use crate::par::Execution;

pub use exact::{exact_curve, exact_curve_with, exact_enumeration, ENUMERATION_LIMIT};
pub use sweep::{empirical_argmax, simulate_sweep, simulate_sweep_with, EmpiricalArgmax, SWEEP_BUDGET};

use episode::EpisodeSampler;

/// Worker count used when none is given. Fixed rather than taken from the
/// machine so that default runs reproduce everywhere.
pub const DEFAULT_WORKERS: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("model pool holds {pool} values but n = {n} candidates were requested")]
    PoolTooSmall { n: usize, pool: usize },
    #[error("exact enumeration is limited to n <= {limit}, got {n}")]
    TooLarge { n: usize, limit: usize },
    #[error("sweep needs n * trials = {work} draws, budget is {budget}")]
    BudgetExceeded { work: u128, budget: u128 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// How each episode is generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum EpisodeMethod {
    /// Samples only the statistics that decide the hire (prefix maximum,
    /// first record after the threshold, rank of the hired candidate) from
    /// their exact joint law. Cost per episode does not grow with `n` for
    /// i.i.d. models.
    #[default]
    Direct,
    /// Draws every candidate and scans them one by one.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub c: usize,
    pub trials: u64,
    pub seed: u64,
    pub workers: usize,
    #[serde(default)]
    pub method: EpisodeMethod,
}

impl SimConfig {
    pub fn new(n: usize, c: usize, trials: u64, seed: u64) -> Self {
        Self { n, c, trials, seed, workers: DEFAULT_WORKERS, method: EpisodeMethod::Direct }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_method(mut self, method: EpisodeMethod) -> Self {
        self.method = method;
        self
    }

    fn validate(&self) -> Result<(), SimError> {
        if self.n == 0 {
            return Err(SimError::InvalidConfig("n must be >= 1".into()));
        }
        if self.c == 0 || self.c > self.n {
            return Err(SimError::InvalidConfig(format!("c = {} outside 1..={}", self.c, self.n)));
        }
        if self.trials == 0 {
            return Err(SimError::InvalidConfig("trials must be >= 1".into()));
        }
        if self.workers == 0 {
            return Err(SimError::InvalidConfig("workers must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimReport {
    pub n: usize,
    pub c: usize,
    pub estimate: f64,
    pub std_error: f64,
    pub trials: u64,
    pub best_pick_rate: f64,
    pub seed: u64,
    pub workers: usize,
}

/// Running mean and second central moment of the hired value, merged with
/// the pairwise update so the result does not depend on thread timing.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
    best: u64,
}

impl Moments {
    pub(crate) fn push(&mut self, x: f64, best: bool) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
        self.best += best as u64;
    }

    pub(crate) fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let total = na + nb;
        let delta = other.mean - self.mean;
        self.mean += delta * nb / total;
        self.m2 += other.m2 + delta * delta * na * nb / total;
        self.count += other.count;
        self.best += other.best;
    }

    pub(crate) fn report(&self, n: usize, c: usize, seed: u64, workers: usize) -> SimReport {
        let std_error =
            if self.count > 1 { (self.m2.max(0.0) / (self.count - 1) as f64 / self.count as f64).sqrt() } else { 0.0 };
        SimReport {
            n,
            c,
            estimate: self.mean,
            std_error,
            trials: self.count,
            best_pick_rate: self.best as f64 / self.count as f64,
            seed,
            workers,
        }
    }
}

/// Stream `worker` of `seed`.
pub(crate) fn worker_rng(seed: u64, worker: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(worker as u64);
    rng
}

/// Trials handled by `worker` under the `t mod workers` assignment.
pub(crate) fn worker_share(trials: u64, workers: usize, worker: usize) -> u64 {
    let w = workers as u64;
    trials / w + u64::from((worker as u64) < trials % w)
}

pub(crate) fn check_pool(sampler: &Sampler, n: usize) -> Result<(), SimError> {
    if let Sampler::Shuffle(pool) = sampler {
        if pool.len() < n {
            return Err(SimError::PoolTooSmall { n, pool: pool.len() });
        }
    }
    Ok(())
}

/// Estimates `V_n(c)` by running `cfg.trials` episodes.
pub fn simulate(model: &QualityModel, cfg: &SimConfig) -> Result<SimReport, SimError> {
    simulate_with(model, cfg, Execution::default())
}

pub fn simulate_with(model: &QualityModel, cfg: &SimConfig, exec: Execution) -> Result<SimReport, SimError> {
    cfg.validate()?;
    let sampler = model.sampler();
    check_pool(&sampler, cfg.n)?;
    let partials = exec.map_range(cfg.workers, |w| {
        let mut rng = worker_rng(cfg.seed, w);
        let mut episodes = EpisodeSampler::new(&sampler, cfg.n, cfg.c, cfg.method);
        let mut moments = Moments::default();
        for _ in 0..worker_share(cfg.trials, cfg.workers, w) {
            let (value, best) = episodes.run(&mut rng);
            moments.push(value, best);
        }
        moments
    });
    let mut total = Moments::default();
    for part in &partials {
        total.merge(part);
    }
    Ok(total.report(cfg.n, cfg.c, cfg.seed, cfg.workers))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::value_at;

    fn analytic(model: &QualityModel, n: usize, c: usize) -> f64 {
        value_at(&model.mu_sequence(n).unwrap(), n, c).unwrap()
    }

    fn z(report: &SimReport, target: f64) -> f64 {
        (report.estimate - target).abs() / report.std_error
    }

    #[test]
    fn moments_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 113) as f64 * 0.37).collect();
        let mut whole = Moments::default();
        xs.iter().for_each(|&x| whole.push(x, x > 20.0));
        let mut parts = [Moments::default(); 3];
        for (i, &x) in xs.iter().enumerate() {
            parts[i % 3].push(x, x > 20.0);
        }
        let mut merged = Moments::default();
        parts.iter().for_each(|p| merged.merge(p));
        assert_eq!(merged.count, whole.count);
        assert_eq!(merged.best, whole.best);
        assert!((merged.mean - whole.mean).abs() < 1e-12);
        assert!((merged.m2 - whole.m2).abs() < 1e-8 * whole.m2);
    }

    #[test]
    fn worker_shares_cover_all_trials() {
        for (trials, workers) in [(10u64, 3usize), (1, 4), (1_000_001, 4), (7, 7)] {
            let total: u64 = (0..workers).map(|w| worker_share(trials, workers, w)).sum();
            assert_eq!(total, trials);
        }
    }

    #[test]
    fn config_errors() {
        let m = QualityModel::uniform();
        assert!(matches!(simulate(&m, &SimConfig::new(5, 0, 10, 1)), Err(SimError::InvalidConfig(_))));
        assert!(matches!(simulate(&m, &SimConfig::new(5, 6, 10, 1)), Err(SimError::InvalidConfig(_))));
        assert!(matches!(simulate(&m, &SimConfig::new(5, 2, 0, 1)), Err(SimError::InvalidConfig(_))));
        assert!(matches!(simulate(&m, &SimConfig::new(5, 2, 10, 1).with_workers(0)), Err(SimError::InvalidConfig(_))));
        let p = QualityModel::permutation(4).unwrap();
        assert!(matches!(simulate(&p, &SimConfig::new(5, 2, 10, 1)), Err(SimError::PoolTooSmall { .. })));
    }

    #[test]
    fn deterministic_for_seed_and_workers() {
        for model in [QualityModel::exponential(), QualityModel::permutation(50).unwrap()] {
            for method in [EpisodeMethod::Direct, EpisodeMethod::Literal] {
                let cfg = SimConfig::new(50, 12, 20_000, 99).with_workers(3).with_method(method);
                let a = simulate_with(&model, &cfg, Execution::Parallel).unwrap();
                let b = simulate_with(&model, &cfg, Execution::Sequential).unwrap();
                assert_eq!(a, b);
                let other = simulate(&model, &SimConfig { seed: 100, ..cfg }).unwrap();
                assert_ne!(a.estimate, other.estimate);
            }
        }
    }

    #[test]
    fn hiring_first_estimates_the_mean() {
        for model in
            [QualityModel::uniform(), QualityModel::bernoulli(0.4).unwrap(), QualityModel::permutation(9).unwrap()]
        {
            for method in [EpisodeMethod::Direct, EpisodeMethod::Literal] {
                let cfg = SimConfig::new(9, 1, 100_000, 5).with_method(method);
                let r = simulate(&model, &cfg).unwrap();
                assert!(z(&r, model.mean().unwrap()) < 4.0, "{model} {method:?}: {r:?}");
            }
        }
    }

    #[test]
    fn both_methods_match_the_curve() {
        let models = [
            QualityModel::exponential(),
            QualityModel::uniform(),
            QualityModel::normal(),
            QualityModel::pareto(3.0).unwrap(),
            QualityModel::bernoulli(0.8).unwrap(),
            QualityModel::classical(30).unwrap(),
            QualityModel::permutation(30).unwrap(),
            QualityModel::multiset(&[
                0.0, 0.0, 1.0, 1.0, 2.0, 5.0, -1.0, 5.0, 3.0, 0.5, 0.0, 4.0, 2.5, 1.0, 7.0, 0.0, 0.0, 2.0, 3.0, 1.0,
                6.0, 2.0, 0.0, 1.0, 4.0, 3.0, 2.0, 1.0, 0.0, 8.0,
            ])
            .unwrap(),
        ];
        for model in &models {
            for c in [2, 9, 30] {
                let target = analytic(model, 30, c);
                for method in [EpisodeMethod::Direct, EpisodeMethod::Literal] {
                    let r = simulate(model, &SimConfig::new(30, c, 100_000, 17).with_method(method)).unwrap();
                    assert!(z(&r, target) < 4.0, "{model} c={c} {method:?}: {r:?} vs {target}");
                }
            }
        }
    }

    #[test]
    fn multiset_subsample_matches_curve() {
        // n below the pool size: draws without replacement
        let model = QualityModel::multiset(&[3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0, 5.0, 3.0, 5.0]).unwrap();
        for method in [EpisodeMethod::Direct, EpisodeMethod::Literal] {
            for c in 1..=6 {
                let r = simulate(&model, &SimConfig::new(6, c, 100_000, 3).with_method(method)).unwrap();
                assert!(z(&r, analytic(&model, 6, c)) < 4.0, "c={c} {method:?}");
            }
        }
    }

    #[test]
    fn best_pick_rates_agree_between_methods() {
        // classical success probability (c-1)/n Σ_{k=c-1}^{n-1} 1/k
        let n = 40;
        for model in
            [QualityModel::classical(40).unwrap(), QualityModel::exponential(), QualityModel::permutation(40).unwrap()]
        {
            for c in [1, 2, 15, 40] {
                let exact = if c == 1 {
                    1.0 / n as f64
                } else {
                    (c - 1) as f64 / n as f64 * crate::numeric::harmonic_range(c - 1, n - 1)
                };
                for method in [EpisodeMethod::Direct, EpisodeMethod::Literal] {
                    let r = simulate(&model, &SimConfig::new(n, c, 100_000, 8).with_method(method)).unwrap();
                    let se = (exact * (1.0 - exact) / 100_000.0).sqrt();
                    assert!(
                        (r.best_pick_rate - exact).abs() < 4.0 * se,
                        "{model} c={c} {method:?}: {}",
                        r.best_pick_rate
                    );
                }
            }
        }
    }

    #[test]
    fn bernoulli_best_pick_counts_ties() {
        // all values 1 with p tiny: every hire is a best pick
        let model = QualityModel::bernoulli(1e-9).unwrap();
        for method in [EpisodeMethod::Direct, EpisodeMethod::Literal] {
            let r = simulate(&model, &SimConfig::new(20, 5, 10_000, 2).with_method(method)).unwrap();
            assert_eq!(r.best_pick_rate, 1.0);
            assert_eq!(r.estimate, 1.0);
        }
    }

    #[test]
    fn single_candidate() {
        let r = simulate(&QualityModel::permutation(1).unwrap(), &SimConfig::new(1, 1, 100, 0)).unwrap();
        assert_eq!((r.estimate, r.std_error, r.best_pick_rate), (1.0, 0.0, 1.0));
    }
}
