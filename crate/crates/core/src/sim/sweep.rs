//! Simulated payoff of every threshold at once. Each episode draws all `n`
//! candidates and scores every `c` on that same arrival sequence.

use rand::distr::Open01;
use rand::Rng;
use serde::Serialize;

use super::{check_pool, worker_rng, worker_share, Moments, SimError, SimReport, DEFAULT_WORKERS};
use crate::curve::{optimal_threshold_with, QUADRATURE_SIGN_TOLERANCE};
use crate::models::{QualityModel, Sampler};
use crate::par::Execution;

/// Largest `n * trials` a sweep will take on.
pub const SWEEP_BUDGET: u128 = 2_000_000_000;

/// Per-`c` reports for `c = 1..=n`.
pub fn simulate_sweep(
    model: &QualityModel,
    n: usize,
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<Vec<SimReport>, SimError> {
    simulate_sweep_with(model, n, trials, seed, workers, Execution::default())
}

pub fn simulate_sweep_with(
    model: &QualityModel,
    n: usize,
    trials: u64,
    seed: u64,
    workers: usize,
    exec: Execution,
) -> Result<Vec<SimReport>, SimError> {
    if n == 0 || trials == 0 || workers == 0 {
        return Err(SimError::InvalidConfig("n, trials and workers must be >= 1".into()));
    }
    let work = n as u128 * trials as u128;
    if work > SWEEP_BUDGET {
        return Err(SimError::BudgetExceeded { work, budget: SWEEP_BUDGET });
    }
    let sampler = model.sampler();
    check_pool(&sampler, n)?;
    let partials = exec.map_range(workers, |w| {
        let mut rng = worker_rng(seed, w);
        let mut episode = SweepEpisode::new(&sampler, n);
        let mut moments = vec![Moments::default(); n];
        for _ in 0..worker_share(trials, workers, w) {
            episode.run(&mut rng, &mut moments);
        }
        moments
    });
    let mut total = vec![Moments::default(); n];
    for part in &partials {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    Ok(total.iter().enumerate().map(|(i, m)| m.report(n, i + 1, seed, workers)).collect())
}

struct SweepEpisode<'a> {
    sampler: &'a Sampler,
    pool: Vec<f64>,
    has_ties: bool,
    n: usize,
    // per position: order key, value, whether it is a record
    keys: Vec<(f64, f64)>,
    values: Vec<f64>,
    records: Vec<usize>,
    next_record: Vec<usize>,
}

impl<'a> SweepEpisode<'a> {
    fn new(sampler: &'a Sampler, n: usize) -> Self {
        let (pool, has_ties) = match sampler {
            Sampler::Shuffle(pool) => {
                let mut sorted = pool.clone();
                sorted.sort_by(f64::total_cmp);
                (pool.clone(), sorted.windows(2).any(|w| w[0] == w[1]))
            }
            Sampler::Quantile(_) => (Vec::new(), false),
        };
        Self {
            sampler,
            pool,
            has_ties,
            n,
            keys: vec![(0.0, 0.0); n],
            values: vec![f64::NAN; n],
            records: Vec::new(),
            next_record: vec![0; n + 1],
        }
    }

    fn run<R: Rng>(&mut self, rng: &mut R, moments: &mut [Moments]) {
        let n = self.n;
        match self.sampler {
            Sampler::Quantile(_) => {
                // U itself is the tie-broken order; values are filled in on demand
                for i in 0..n {
                    self.keys[i] = (rng.sample(Open01), 0.0);
                    self.values[i] = f64::NAN;
                }
            }
            Sampler::Shuffle(_) => {
                let m = self.pool.len();
                for i in 0..n {
                    let j = rng.random_range(i..m);
                    self.pool.swap(i, j);
                    let jitter = if self.has_ties { rng.sample(Open01) } else { 0.0 };
                    self.keys[i] = (self.pool[i], jitter);
                    self.values[i] = self.pool[i];
                }
            }
        }
        self.next_record[n] = n;
        let mut best = 0;
        self.records.clear();
        self.records.push(0);
        for i in 1..n {
            if self.keys[i] > self.keys[best] {
                best = i;
                self.records.push(i);
            }
        }
        let mut r = self.records.len();
        for i in (0..n).rev() {
            if r > 0 && self.records[r - 1] == i {
                r -= 1;
                self.next_record[i] = i;
            } else {
                self.next_record[i] = self.next_record[i + 1];
            }
        }
        let top = self.value(best);
        let first = self.value(0);
        moments[0].push(first, first >= top);
        for c in 2..=n {
            let pos = self.next_record[c - 1].min(n - 1);
            let v = self.value(pos);
            moments[c - 1].push(v, v >= top);
        }
    }

    fn value(&mut self, i: usize) -> f64 {
        if self.values[i].is_nan() {
            if let Sampler::Quantile(dist) = self.sampler {
                self.values[i] = dist.quantile(self.keys[i].0);
            }
        }
        self.values[i]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalArgmax {
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    /// Smallest `c` with the largest simulated payoff.
    pub c: usize,
    pub estimate: f64,
    pub std_error: f64,
    pub analytic_c_star: usize,
    pub c_star_estimate: f64,
    pub c_star_std_error: f64,
    /// The ±2 standard-error intervals at `c` and at `c*` overlap.
    pub consistent_with_analytic: bool,
    /// Every `c` whose simulated payoff is within two standard errors of the
    /// maximum.
    pub near_optimal: Vec<usize>,
}

/// Simulated argmax of `V_n(c)` over `c`, compared against the analytic `c*`.
pub fn empirical_argmax(model: &QualityModel, n: usize, trials: u64, seed: u64) -> Result<EmpiricalArgmax, SimError> {
    let reports = simulate_sweep(model, n, trials, seed, DEFAULT_WORKERS)?;
    let c_star = if n == 1 {
        1
    } else {
        let mu = model.mu_sequence(n)?;
        let tolerance = if model.is_quadrature_backed() { QUADRATURE_SIGN_TOLERANCE } else { 0.0 };
        optimal_threshold_with(&mu, n, tolerance)?.c_star
    };
    let best = reports.iter().fold(&reports[0], |b, r| if r.estimate > b.estimate { r } else { b });
    let at_star = &reports[c_star - 1];
    let consistent = (best.estimate - at_star.estimate).abs() <= 2.0 * (best.std_error + at_star.std_error);
    let near_optimal = reports
        .iter()
        .filter(|r| r.estimate + 2.0 * r.std_error >= best.estimate - 2.0 * best.std_error)
        .map(|r| r.c)
        .collect();
    Ok(EmpiricalArgmax {
        n,
        trials,
        seed,
        c: best.c,
        estimate: best.estimate,
        std_error: best.std_error,
        analytic_c_star: c_star,
        c_star_estimate: at_star.estimate,
        c_star_std_error: at_star.std_error,
        consistent_with_analytic: consistent,
        near_optimal,
    })
}
