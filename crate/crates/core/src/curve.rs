//! The payoff curve `V_n(c)` of threshold strategies and its maximizer.
//!
//! For `c >= 2`
//!
//! ```text
//! V_n(c) = Σ_{k=c}^{n-1} μ_k (c-1)/((k-1)k) + (c-1)/(n-1) μ,     V_n(1) = μ
//! ΔV_n(c) = Σ_{k=c}^{n-1} (μ_{k+1} - μ_k)/k - (μ_n - μ_1)/(n-1)
//! Δ²V_n(c) = -(μ_{c+1} - μ_c)/c
//! ```
//!
//! Since `μ_k` is non-decreasing the curve is concave, so the first `c` with
//! `ΔV_n(c) <= 0` is the smallest global maximizer.

use std::io::{self, Write};

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::bounds::harmonic_bound_holds;
use crate::models::MuSequence;
use crate::numeric::{format_significant, harmonic_range, NeumaierSum};

/// Sign tolerance for `ΔV_n(c) <= tol` suggested for quadrature-backed models.
pub const QUADRATURE_SIGN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CurveError {
    #[error("number of candidates must be at least {min}, got {n}")]
    InvalidN { n: usize, min: usize },
    #[error("threshold index {c} outside 1..={max}")]
    ThresholdOutOfRange { c: usize, max: usize },
    #[error("μ sequence has {len} entries, {needed} needed")]
    SequenceTooShort { needed: usize, len: usize },
}

fn need(mu: &MuSequence, needed: usize) -> Result<(), CurveError> {
    if mu.len() < needed {
        Err(CurveError::SequenceTooShort { needed, len: mu.len() })
    } else {
        Ok(())
    }
}

fn check_n(n: usize, min: usize) -> Result<(), CurveError> {
    if n < min {
        Err(CurveError::InvalidN { n, min })
    } else {
        Ok(())
    }
}

fn check_c(c: usize, max: usize) -> Result<(), CurveError> {
    if c == 0 || c > max {
        Err(CurveError::ThresholdOutOfRange { c, max })
    } else {
        Ok(())
    }
}

/// `V_n(c)`, summed in ascending `k` with compensation.
pub fn value_at(mu: &MuSequence, n: usize, c: usize) -> Result<f64, CurveError> {
    check_n(n, 1)?;
    check_c(c, n)?;
    need(mu, (n - 1).max(1))?;
    let mean = mu.mu(1);
    if c == 1 {
        return Ok(mean);
    }
    let mut acc = NeumaierSum::new();
    for k in c..n {
        let kf = k as f64;
        acc.add(mu.mu(k) / ((kf - 1.0) * kf));
    }
    acc.add(mean / (n - 1) as f64);
    Ok((c - 1) as f64 * acc.value())
}

// (μ_n - μ_1)/(n-1), from the increments.
fn spread_term(mu: &MuSequence, n: usize) -> f64 {
    let mut acc = NeumaierSum::new();
    for k in 1..n {
        acc.add(mu.increment(k));
    }
    acc.value() / (n - 1) as f64
}

/// `ΔV_n(c) = V_n(c+1) - V_n(c)` in its summation-by-parts form.
pub fn forward_diff(mu: &MuSequence, n: usize, c: usize) -> Result<f64, CurveError> {
    check_n(n, 2)?;
    check_c(c, n - 1)?;
    need(mu, n)?;
    let mut acc = NeumaierSum::new();
    for k in c..n {
        acc.add(mu.increment(k) / k as f64);
    }
    Ok(acc.value() - spread_term(mu, n))
}

/// `Δ²V_n(c) = -(μ_{c+1} - μ_c)/c`; independent of `n`.
pub fn second_diff(mu: &MuSequence, c: usize) -> Result<f64, CurveError> {
    if c == 0 {
        return Err(CurveError::ThresholdOutOfRange { c, max: mu.len().saturating_sub(1) });
    }
    need(mu, c + 1)?;
    Ok(-mu.increment(c) / c as f64)
}

/// `V_n(1..=n)` together with `ΔV_n(1..n)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueCurve {
    pub n: usize,
    pub values: Vec<f64>,
    pub diffs: Vec<f64>,
    pub model_label: String,
}

/// Whole curve in `O(n)`: both sums are suffix sums over `k`.
pub fn full_curve(mu: &MuSequence, n: usize, model_label: impl Into<String>) -> Result<ValueCurve, CurveError> {
    check_n(n, 1)?;
    let model_label = model_label.into();
    let mean = mu.values().first().copied().ok_or(CurveError::SequenceTooShort { needed: 1, len: 0 })?;
    if n == 1 {
        return Ok(ValueCurve { n, values: vec![mean], diffs: Vec::new(), model_label });
    }
    need(mu, n)?;

    let last = mean / (n - 1) as f64;
    let mut values = vec![0.0; n];
    let mut weighted = NeumaierSum::new();
    weighted.add(last);
    values[n - 1] = (n - 1) as f64 * weighted.value();
    for c in (2..n).rev() {
        let cf = c as f64;
        weighted.add(mu.mu(c) / ((cf - 1.0) * cf));
        values[c - 1] = (c - 1) as f64 * weighted.value();
    }
    values[0] = mean;

    let spread = spread_term(mu, n);
    let mut diffs = vec![0.0; n - 1];
    let mut tail = NeumaierSum::new();
    for c in (1..n).rev() {
        tail.add(mu.increment(c) / c as f64);
        diffs[c - 1] = tail.value() - spread;
    }
    Ok(ValueCurve { n, values, diffs, model_label })
}

impl ValueCurve {
    /// `V_n(c)`, 1-based.
    pub fn value(&self, c: usize) -> f64 {
        self.values[c - 1]
    }

    /// `ΔV_n(c)`, 1-based.
    pub fn diff(&self, c: usize) -> f64 {
        self.diffs[c - 1]
    }

    /// Smallest `c` with `ΔV_n(c) <= tolerance`, or `None` if no such `c < n`.
    pub fn first_nonpositive_diff(&self, tolerance: f64) -> Option<usize> {
        self.diffs.iter().position(|&d| d <= tolerance).map(|i| i + 1)
    }

    /// Smallest index of the largest value, by direct comparison.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best + 1
    }

    /// CSV with header `c,V`, values to `precision` significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W, precision: usize) -> io::Result<()> {
        writeln!(out, "c,V")?;
        for (i, &v) in self.values.iter().enumerate() {
            writeln!(out, "{},{}", i + 1, format_significant(v, precision))?;
        }
        Ok(())
    }
}

fn finite_or_null<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdResult {
    pub n: usize,
    pub c_star: usize,
    pub v_star: f64,
    /// `Σ_{k=c*-1}^{n-1} 1/k`; infinite (serialized as `null`) when `c* = 1`.
    #[serde(serialize_with = "finite_or_null")]
    pub harmonic_tail: f64,
    pub satisfies_theorem_bound: bool,
    /// No `c < n` had `ΔV_n(c) <= tol`, so `c* = n` was returned.
    #[serde(skip)]
    pub exhausted: bool,
}

/// `c*(n) = min { c >= 1 : ΔV_n(c) <= 0 }` with an exact sign test.
pub fn optimal_threshold(mu: &MuSequence, n: usize) -> Result<ThresholdResult, CurveError> {
    optimal_threshold_with(mu, n, 0.0)
}

/// As [`optimal_threshold`], deciding `ΔV_n(c) <= tolerance`.
pub fn optimal_threshold_with(mu: &MuSequence, n: usize, tolerance: f64) -> Result<ThresholdResult, CurveError> {
    check_n(n, 2)?;
    let curve = full_curve(mu, n, "")?;
    Ok(threshold_from_curve(&curve, tolerance))
}

/// Reads `c*` off an already computed curve.
pub fn threshold_from_curve(curve: &ValueCurve, tolerance: f64) -> ThresholdResult {
    let n = curve.n;
    let (c_star, exhausted) = match curve.first_nonpositive_diff(tolerance) {
        Some(c) => (c, false),
        None => (n, n > 1),
    };
    let harmonic_tail = if c_star >= 2 { harmonic_range(c_star - 1, n - 1) } else { f64::INFINITY };
    ThresholdResult {
        n,
        c_star,
        v_star: curve.value(c_star),
        harmonic_tail,
        satisfies_theorem_bound: harmonic_bound_holds(c_star, n),
        exhausted,
    }
}
