//! Iterated forward differences `Δ^j μ_k` of the running-maximum means, and
//! their link to sub-sample order statistics.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::models::{ModelError, MuSequence, OrderStatTable};
use crate::numeric::{binomial_exact, NeumaierSum};

/// Default highest difference order checked.
pub const DEFAULT_J_MAX: usize = 12;
/// Relative disagreement between the recurrence and the binomial expansion
/// above which a warning is logged.
pub const EXPANSION_WARN_RELATIVE: f64 = 1e-6;
/// Sign checks allow `SIGN_TOLERANCE * max|μ_k|` of slack.
pub const SIGN_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrderError {
    #[error("Δ^{j} μ_{k} needs μ_1..μ_{needed}, sequence has {len}")]
    OutOfRange { j: usize, k: usize, needed: usize, len: usize },
    #[error("index k must be >= 1")]
    ZeroIndex,
    #[error("order j must be >= 1 for the order-statistic identity")]
    ZeroOrder,
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn check_range(len: usize, j: usize, k: usize) -> Result<(), OrderError> {
    if k == 0 {
        return Err(OrderError::ZeroIndex);
    }
    if k + j > len {
        return Err(OrderError::OutOfRange { j, k, needed: k + j, len });
    }
    Ok(())
}

/// All `Δ^j μ_k` for `j <= j_max` and `k + j <= n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeTable {
    base: Vec<f64>,
    j_max: usize,
    // rows[j][k-1] = Δ^j μ_k
    rows: Vec<Vec<f64>>,
}

impl DerivativeTable {
    pub fn new(mu: &[f64], j_max: usize) -> Self {
        let j_max = j_max.min(mu.len().saturating_sub(1));
        let mut rows = vec![mu.to_vec()];
        for j in 1..=j_max {
            let prev = &rows[j - 1];
            rows.push(prev.windows(2).map(|w| w[1] - w[0]).collect());
        }
        Self { base: mu.to_vec(), j_max, rows }
    }

    /// Like [`new`](Self::new) but seeds the first differences with the
    /// stored increments, which keeps tiny increments accurate.
    pub fn from_sequence(mu: &MuSequence, j_max: usize) -> Self {
        let base = mu.values().to_vec();
        let j_max = j_max.min(base.len().saturating_sub(1));
        let mut rows = vec![base.clone()];
        if j_max >= 1 {
            rows.push(mu.increments().to_vec());
        }
        for j in 2..=j_max {
            let prev = &rows[j - 1];
            rows.push(prev.windows(2).map(|w| w[1] - w[0]).collect());
        }
        Self { base, j_max, rows }
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }

    pub fn j_max(&self) -> usize {
        self.j_max
    }

    /// `Δ^j μ_k`, or `None` outside the table.
    pub fn get(&self, j: usize, k: usize) -> Option<f64> {
        if k == 0 {
            return None;
        }
        self.rows.get(j)?.get(k - 1).copied()
    }

    /// Entries of order `j`, indexed from `k = 1`.
    pub fn row(&self, j: usize) -> &[f64] {
        &self.rows[j]
    }
}

/// `Σ_{i=0}^{j} μ_{k+i} C(j,i) (-1)^{j-i}`.
pub fn binomial_expansion(mu: &[f64], j: usize, k: usize) -> Result<f64, OrderError> {
    check_range(mu.len(), j, k)?;
    let mut acc = NeumaierSum::new();
    for i in 0..=j {
        let c = binomial_exact(j as u64, i as u64).map(|c| c as f64).unwrap_or(f64::INFINITY);
        let term = mu[k + i - 1] * c;
        acc.add(if (j - i).is_multiple_of(2) { term } else { -term });
    }
    Ok(acc.value())
}

fn recurrence(mu: &[f64], j: usize, k: usize) -> f64 {
    let mut row = mu[k - 1..k + j].to_vec();
    for _ in 0..j {
        row = row.windows(2).map(|w| w[1] - w[0]).collect();
    }
    row[0]
}

/// `Δ^j μ_k` by repeated differencing. For `j > 2` the binomial expansion is
/// evaluated as well and a warning is logged if the two disagree.
pub fn discrete_derivative(mu: &[f64], j: usize, k: usize) -> Result<f64, OrderError> {
    check_range(mu.len(), j, k)?;
    let value = recurrence(mu, j, k);
    if j > 2 {
        let expanded = binomial_expansion(mu, j, k)?;
        let scale = value.abs().max(expanded.abs());
        if (value - expanded).abs() > EXPANSION_WARN_RELATIVE * scale {
            log::warn!("Δ^{j} μ_{k}: recurrence {value:e} vs expansion {expanded:e}");
        }
    }
    Ok(value)
}

fn identity_indices(table: &OrderStatTable, j: usize, k: usize) -> Result<(), OrderError> {
    if j == 0 {
        return Err(OrderError::ZeroOrder);
    }
    check_range(table.len(), j, k)
}

/// Left minus right side of
/// `Δ^j μ_k = C(k+j,j)^{-1} (-1)^{j+1} (μ_{k+1:k+j} - μ_{k:k+j})`,
/// with `μ_i` and the order statistics both derived from `table`.
pub fn prop3_identity_residual(table: &OrderStatTable, j: usize, k: usize) -> Result<f64, OrderError> {
    identity_indices(table, j, k)?;
    let mu = (k..=k + j).map(|i| table.mu_of_max(i)).collect::<Result<Vec<_>, _>>()?;
    let left = recurrence(&mu, j, 1);
    let sub = table.subsample(k + j)?;
    let gap = sub.means()[k] - sub.means()[k - 1];
    let c = binomial_exact((k + j) as u64, j as u64)
        .map(|c| c as f64)
        .unwrap_or_else(|| crate::numeric::ln_binomial((k + j) as u64, j as u64).exp());
    let right = if j % 2 == 1 { gap / c } else { -gap / c };
    Ok(left - right)
}

/// Exact rational residual of the same identity; zero whenever it holds.
pub fn prop3_identity_residual_exact(table: &OrderStatTable, j: usize, k: usize) -> Result<BigRational, OrderError> {
    identity_indices(table, j, k)?;
    let mut row = (k..=k + j).map(|i| table.mu_of_max_exact(i)).collect::<Result<Vec<_>, _>>()?;
    for _ in 0..j {
        row = row.windows(2).map(|w| &w[1] - &w[0]).collect();
    }
    let sub = table.subsample_exact(k + j)?;
    let gap = &sub[k] - &sub[k - 1];
    let mut c = BigInt::from(1u8);
    for i in 0..j {
        c = c * BigInt::from(k + j - i) / BigInt::from(i + 1);
    }
    let mut right = gap / BigRational::from_integer(c);
    if j.is_multiple_of(2) {
        right = -right;
    }
    Ok(&row[0] - right)
}

/// Whether an exact residual vanishes.
pub fn residual_is_zero(r: &BigRational) -> bool {
    r.is_zero()
}

/// Magnitude of an exact residual as a float, for reporting.
pub fn residual_magnitude(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.abs().to_f64().unwrap_or(f64::INFINITY)
}

/// A difference with the wrong sign: odd orders must be `>= 0`, even orders
/// `<= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub j: usize,
    pub k: usize,
    pub value: f64,
}

/// Sign violations of `Δ^j μ_k` for `1 <= j <= j_max`.
pub fn sign_violations(table: &DerivativeTable) -> Vec<Violation> {
    let scale = table.base().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let tol = SIGN_TOLERANCE * scale;
    let mut out = Vec::new();
    for j in 1..=table.j_max() {
        for (i, &value) in table.row(j).iter().enumerate() {
            let bad = if j % 2 == 1 { value < -tol } else { value > tol };
            if bad {
                out.push(Violation { j, k: i + 1, value });
            }
        }
    }
    out
}

/// [`sign_violations`] with the default order cap.
pub fn sign_alternation_check(mu: &[f64]) -> Vec<Violation> {
    sign_violations(&DerivativeTable::new(mu, DEFAULT_J_MAX))
}
