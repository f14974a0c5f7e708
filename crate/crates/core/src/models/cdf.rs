//! Distribution functions for the i.i.d. quality models.

use std::fmt;
use std::sync::Arc;

use libm::erfc;

use super::ModelError;
use crate::numeric::{Estimate, QuadError, Quadrature};

/// A one-dimensional distribution seen through its CDF.
///
/// `cdf` must be non-decreasing with limits 0 and 1 at the ends of
/// `support`. `sf` may be overridden with a tail-accurate survival function.
pub trait Cdf: Send + Sync + fmt::Debug {
    fn cdf(&self, x: f64) -> f64;

    fn sf(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }

    /// Closed support `(lower, upper)`; either end may be infinite.
    fn support(&self) -> (f64, f64);

    /// Generalized inverse `inf { x : F(x) >= u }` for `u` in `(0, 1)`.
    fn quantile(&self, u: f64) -> f64 {
        bisect_quantile(self, u)
    }

    /// `quantile(1 - s)`, for callers that hold the upper-tail probability
    /// `s` directly and would lose it to rounding in `1 - s`.
    fn upper_quantile(&self, s: f64) -> f64 {
        self.quantile(1.0 - s)
    }

    /// Points where `F` may jump or kink. Quadrature never straddles them.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

fn bisect_quantile<C: Cdf + ?Sized>(dist: &C, u: f64) -> f64 {
    let (lower, upper) = dist.support();
    let mut lo = if lower.is_finite() { lower } else { -1.0 };
    let mut hi = if upper.is_finite() { upper } else { 1.0 };
    if dist.cdf(lo) >= u {
        if lower.is_finite() {
            return lower;
        }
        let mut width = 1.0;
        while dist.cdf(lo) >= u && lo.is_finite() {
            hi = lo;
            width *= 2.0;
            lo -= width;
        }
    }
    if dist.cdf(hi) < u {
        let mut width = 1.0;
        while dist.cdf(hi) < u && hi.is_finite() {
            lo = hi;
            width *= 2.0;
            hi += width;
        }
    }
    // invariant: F(lo) < u <= F(hi)
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if dist.cdf(mid) >= u {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[derive(Debug, Clone, Copy)]
pub struct ExponentialCdf;

impl Cdf for ExponentialCdf {
    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            -(-x).exp_m1()
        }
    }
    fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            1.0
        } else {
            (-x).exp()
        }
    }
    fn support(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }
    fn quantile(&self, u: f64) -> f64 {
        -(-u).ln_1p()
    }
    fn upper_quantile(&self, s: f64) -> f64 {
        -s.ln()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct UniformCdf;

impl Cdf for UniformCdf {
    fn cdf(&self, x: f64) -> f64 {
        x.clamp(0.0, 1.0)
    }
    fn support(&self) -> (f64, f64) {
        (0.0, 1.0)
    }
    fn quantile(&self, u: f64) -> f64 {
        u
    }
    fn upper_quantile(&self, s: f64) -> f64 {
        1.0 - s
    }
}

/// Standard normal, through the musl-derived `erfc` (sub-ulp accurate).
#[derive(Debug, Clone, Copy)]
pub struct NormalCdf;

impl Cdf for NormalCdf {
    fn cdf(&self, x: f64) -> f64 {
        0.5 * erfc(-x / std::f64::consts::SQRT_2)
    }
    fn sf(&self, x: f64) -> f64 {
        0.5 * erfc(x / std::f64::consts::SQRT_2)
    }
    fn support(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
    fn quantile(&self, u: f64) -> f64 {
        // -sqrt(2) erfc^{-1}(2u), then one Newton step against our own cdf
        let x0 = -std::f64::consts::SQRT_2 * statrs::function::erf::erfc_inv(2.0 * u);
        if !x0.is_finite() {
            return x0;
        }
        let density = (-0.5 * x0 * x0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        if density <= 0.0 {
            return x0;
        }
        let residual = if u > 0.5 { (1.0 - u) - self.sf(x0) } else { self.cdf(x0) - u };
        let sign = if u > 0.5 { -1.0 } else { 1.0 };
        x0 - sign * residual / density
    }
    fn upper_quantile(&self, s: f64) -> f64 {
        -self.quantile(s)
    }
}

/// Pareto on `[1, ∞)` with `F(x) = 1 - x^{-α}`.
#[derive(Debug, Clone, Copy)]
pub struct ParetoCdf {
    pub alpha: f64,
}

impl Cdf for ParetoCdf {
    fn cdf(&self, x: f64) -> f64 {
        if x <= 1.0 {
            0.0
        } else {
            -(-self.alpha * x.ln()).exp_m1()
        }
    }
    fn sf(&self, x: f64) -> f64 {
        if x <= 1.0 {
            1.0
        } else {
            x.powf(-self.alpha)
        }
    }
    fn support(&self) -> (f64, f64) {
        (1.0, f64::INFINITY)
    }
    fn quantile(&self, u: f64) -> f64 {
        (-(-u).ln_1p() / self.alpha).exp()
    }
    fn upper_quantile(&self, s: f64) -> f64 {
        s.powf(-1.0 / self.alpha)
    }
}

/// Bernoulli quality: 1 with probability `1 - p`, 0 with probability `p`.
#[derive(Debug, Clone, Copy)]
pub struct BernoulliCdf {
    pub p: f64,
}

impl Cdf for BernoulliCdf {
    fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else if x < 1.0 {
            self.p
        } else {
            1.0
        }
    }
    fn sf(&self, x: f64) -> f64 {
        if x < 0.0 {
            1.0
        } else if x < 1.0 {
            1.0 - self.p
        } else {
            0.0
        }
    }
    fn support(&self) -> (f64, f64) {
        (0.0, 1.0)
    }
    fn quantile(&self, u: f64) -> f64 {
        if u <= self.p {
            0.0
        } else {
            1.0
        }
    }
    fn upper_quantile(&self, s: f64) -> f64 {
        if s >= 1.0 - self.p {
            0.0
        } else {
            1.0
        }
    }
    fn breakpoints(&self) -> Vec<f64> {
        vec![0.0, 1.0]
    }
}

/// Piecewise-linear CDF through tabulated points `(x_i, F_i)`.
///
/// `F = 0` left of the first point, so a positive `F_0` is an atom at `x_0`.
#[derive(Debug, Clone)]
pub struct TabulatedCdf {
    xs: Vec<f64>,
    fs: Vec<f64>,
}

impl TabulatedCdf {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, ModelError> {
        let invalid = |reason: String| ModelError::InvalidCdf(reason);
        if points.is_empty() {
            return Err(invalid("CDF table has no rows".into()));
        }
        let (xs, mut fs): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();
        for (i, (&x, &f)) in xs.iter().zip(&fs).enumerate() {
            if !x.is_finite() || !f.is_finite() {
                return Err(invalid(format!("row {}: non-finite entry", i + 1)));
            }
            if !(0.0..=1.0).contains(&f) {
                return Err(invalid(format!("row {}: F = {f} outside [0, 1]", i + 1)));
            }
            if i > 0 && (x <= xs[i - 1] || f < fs[i - 1]) {
                return Err(invalid(format!("row {}: table must have increasing x and non-decreasing F", i + 1)));
            }
        }
        let last = fs.len() - 1;
        if (fs[last] - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("last F value is {}, expected 1", fs[last])));
        }
        fs[last] = 1.0;
        Ok(Self { xs, fs })
    }
}

impl Cdf for TabulatedCdf {
    fn cdf(&self, x: f64) -> f64 {
        if x < self.xs[0] {
            return 0.0;
        }
        let i = self.xs.partition_point(|&xi| xi <= x);
        if i == self.xs.len() {
            return 1.0;
        }
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let (f0, f1) = (self.fs[i - 1], self.fs[i]);
        f0 + (f1 - f0) * (x - x0) / (x1 - x0)
    }
    fn support(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }
    fn quantile(&self, u: f64) -> f64 {
        let i = self.fs.partition_point(|&f| f < u);
        if i == 0 {
            return self.xs[0];
        }
        if i == self.fs.len() {
            return self.xs[i - 1];
        }
        let (f0, f1) = (self.fs[i - 1], self.fs[i]);
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        x0 + (u - f0) / (f1 - f0) * (x1 - x0)
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.xs.clone()
    }
}

/// Empirical (step) CDF of a sample: i.i.d. draws *with* replacement.
#[derive(Debug, Clone)]
pub struct StepCdf {
    sorted: Vec<f64>,
}

impl StepCdf {
    pub fn new(mut sample: Vec<f64>) -> Result<Self, ModelError> {
        if sample.is_empty() {
            return Err(ModelError::EmptyMultiset);
        }
        if sample.iter().any(|x| !x.is_finite()) {
            return Err(ModelError::InvalidCdf("sample contains a non-finite value".into()));
        }
        sample.sort_by(f64::total_cmp);
        Ok(Self { sorted: sample })
    }
}

impl Cdf for StepCdf {
    fn cdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }
    fn sf(&self, x: f64) -> f64 {
        let above = self.sorted.len() - self.sorted.partition_point(|&v| v <= x);
        above as f64 / self.sorted.len() as f64
    }
    fn support(&self) -> (f64, f64) {
        (self.sorted[0], self.sorted[self.sorted.len() - 1])
    }
    fn quantile(&self, u: f64) -> f64 {
        let n = self.sorted.len();
        let idx = ((u * n as f64).ceil() as usize).clamp(1, n) - 1;
        self.sorted[idx]
    }
    fn breakpoints(&self) -> Vec<f64> {
        let mut points = self.sorted.clone();
        points.dedup();
        points
    }
}

type CdfFn = dyn Fn(f64) -> f64 + Send + Sync;

/// CDF given by an arbitrary evaluator and its support.
#[derive(Clone)]
pub struct FnCdf {
    f: Arc<CdfFn>,
    lower: f64,
    upper: f64,
}

impl FnCdf {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static, lower: f64, upper: f64) -> Result<Self, ModelError> {
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(ModelError::InvalidCdf(format!("bad support [{lower}, {upper}]")));
        }
        Ok(Self { f: Arc::new(f), lower, upper })
    }
}

impl fmt::Debug for FnCdf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnCdf").field("lower", &self.lower).field("upper", &self.upper).finish_non_exhaustive()
    }
}

impl Cdf for FnCdf {
    fn cdf(&self, x: f64) -> f64 {
        if x < self.lower {
            0.0
        } else if x >= self.upper {
            1.0
        } else {
            (self.f)(x)
        }
    }
    fn support(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }
}

fn clamp_to_support(x: f64, (lower, upper): (f64, f64)) -> f64 {
    x.clamp(lower, upper)
}

// Length scale for the outward march: the spread of quantiles around the
// level `center`, falling back to the support width or 1.
fn march_step<C: Cdf + ?Sized>(dist: &C, pivot: f64, lo_level: f64, hi_level: f64) -> f64 {
    let support = dist.support();
    let spread = (clamp_to_support(dist.quantile(hi_level), support) - pivot)
        .max(pivot - clamp_to_support(dist.quantile(lo_level), support));
    let step = spread / 4.0;
    let floor = 1e-12 * pivot.abs().max(1.0);
    if step.is_finite() && step > floor {
        step
    } else if (support.1 - support.0).is_finite() && support.1 > support.0 {
        (support.1 - support.0) / 64.0
    } else {
        1.0
    }
}

fn integrate_both_sides<C, G>(dist: &C, g: G, pivot: f64, step: f64, quad: &Quadrature) -> Result<Estimate, QuadError>
where
    C: Cdf + ?Sized,
    G: Fn(f64) -> f64,
{
    let (lower, upper) = dist.support();
    let breaks = dist.breakpoints();
    let right = quad.integrate_outward(&g, pivot, upper, step, &breaks)?;
    let left = quad.integrate_outward(&g, pivot, lower, step, &breaks)?;
    Ok(Estimate {
        value: left.value + right.value,
        error: left.error + right.error,
        evaluations: left.evaluations + right.evaluations,
    })
}

/// `μ_{k+1} - μ_k = ∫ F(x)^k (1 - F(x)) dx`.
pub(crate) fn increment_integral<C: Cdf + ?Sized>(
    dist: &C,
    k: usize,
    quad: &Quadrature,
) -> Result<Estimate, QuadError> {
    let kf = k as f64;
    let exponent = i32::try_from(k).unwrap_or(i32::MAX);
    let support = dist.support();
    // F^k (1-F) peaks where F = k/(k+1)
    let pivot = clamp_to_support(dist.quantile(kf / (kf + 1.0)), support);
    let lo_level = (1.0 - 4.0 / (kf + 1.0)).max(0.05);
    let hi_level = 1.0 - 0.25 / (kf + 1.0);
    let step = march_step(dist, pivot, lo_level, hi_level);
    let g = |x: f64| {
        let f = dist.cdf(x);
        if f <= 0.0 {
            0.0
        } else {
            f.powi(exponent) * dist.sf(x)
        }
    };
    integrate_both_sides(dist, g, pivot, step, quad)
}

/// `E[X] = m + ∫_m^∞ (1-F) - ∫_{-∞}^m F` around the median `m`.
pub(crate) fn mean_integral<C: Cdf + ?Sized>(dist: &C, quad: &Quadrature) -> Result<Estimate, QuadError> {
    let (lower, upper) = dist.support();
    let median = clamp_to_support(dist.quantile(0.5), (lower, upper));
    let step = march_step(dist, median, 0.25, 0.75);
    let breaks = dist.breakpoints();
    let right = quad.integrate_outward(|x| dist.sf(x), median, upper, step, &breaks)?;
    let left = quad.integrate_outward(|x| dist.cdf(x), median, lower, step, &breaks)?;
    Ok(Estimate {
        value: median + right.value - left.value,
        error: left.error + right.error,
        evaluations: left.evaluations + right.evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_cdf_reference_values() {
        let n = NormalCdf;
        assert!((n.cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((n.cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((n.sf(8.0) - 6.220_960_574_271_784e-16).abs() < 1e-29);
    }

    #[test]
    fn normal_quantile_inverts_cdf() {
        let n = NormalCdf;
        for &u in &[1e-12, 1e-4, 0.1, 0.5, 0.9, 1.0 - 1e-4, 1.0 - 1e-10] {
            let x = n.quantile(u);
            let back = if u > 0.5 { 1.0 - n.sf(x) } else { n.cdf(x) };
            assert!((back - u).abs() < 1e-14 * u.max(1e-3), "u={u} x={x}");
        }
    }

    #[test]
    fn bisection_quantile_matches_closed_forms() {
        let f = FnCdf::new(|x: f64| -(-x).exp_m1(), 0.0, f64::INFINITY).unwrap();
        for &u in &[0.01, 0.5, 0.99] {
            assert!((f.quantile(u) - ExponentialCdf.quantile(u)).abs() < 1e-12);
        }
        let logistic = FnCdf::new(|x: f64| 1.0 / (1.0 + (-x).exp()), f64::NEG_INFINITY, f64::INFINITY).unwrap();
        assert!((logistic.quantile(0.25) - (1.0_f64 / 3.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn tabulated_cdf_interpolates_and_inverts() {
        let t = TabulatedCdf::new(vec![(0.0, 0.0), (1.0, 0.5), (3.0, 1.0)]).unwrap();
        assert_eq!(t.cdf(-1.0), 0.0);
        assert_eq!(t.cdf(0.5), 0.25);
        assert_eq!(t.cdf(2.0), 0.75);
        assert_eq!(t.cdf(5.0), 1.0);
        assert_eq!(t.quantile(0.75), 2.0);
        assert_eq!(t.quantile(0.25), 0.5);
    }

    #[test]
    fn tabulated_cdf_rejects_bad_tables() {
        assert!(TabulatedCdf::new(vec![]).is_err());
        assert!(TabulatedCdf::new(vec![(0.0, 0.5), (1.0, 0.4)]).is_err());
        assert!(TabulatedCdf::new(vec![(0.0, 0.0), (0.0, 1.0)]).is_err());
        assert!(TabulatedCdf::new(vec![(0.0, 0.0), (1.0, 0.9)]).is_err());
        assert!(TabulatedCdf::new(vec![(0.0, -0.1), (1.0, 1.0)]).is_err());
    }

    #[test]
    fn step_cdf_quantile_is_generalized_inverse() {
        let s = StepCdf::new(vec![3.0, 1.0, 2.0, 2.0]).unwrap();
        assert_eq!(s.cdf(2.0), 0.75);
        assert_eq!(s.quantile(0.25), 1.0);
        assert_eq!(s.quantile(0.26), 2.0);
        assert_eq!(s.quantile(0.75), 2.0);
        assert_eq!(s.quantile(0.9), 3.0);
        assert_eq!(s.breakpoints(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn mean_integrals() {
        let q = Quadrature::default();
        assert!((mean_integral(&ExponentialCdf, &q).unwrap().value - 1.0).abs() < 1e-10);
        assert!(mean_integral(&NormalCdf, &q).unwrap().value.abs() < 1e-10);
        assert!((mean_integral(&ParetoCdf { alpha: 3.0 }, &q).unwrap().value - 1.5).abs() < 1e-9);
        assert!((mean_integral(&BernoulliCdf { p: 0.3 }, &q).unwrap().value - 0.7).abs() < 1e-14);
    }

    #[test]
    fn upper_quantile_matches_quantile() {
        let dists: Vec<Box<dyn Cdf>> = vec![
            Box::new(ExponentialCdf),
            Box::new(UniformCdf),
            Box::new(NormalCdf),
            Box::new(ParetoCdf { alpha: 2.5 }),
            Box::new(BernoulliCdf { p: 0.3 }),
        ];
        for d in &dists {
            for s in [0.9, 0.5, 0.25, 0.01] {
                let (a, b) = (d.upper_quantile(s), d.quantile(1.0 - s));
                assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{d:?} s={s}");
            }
        }
        // the tail stays resolved where 1 - s rounds to 1
        assert!((ExponentialCdf.upper_quantile(1e-300) - 690.7755278982137).abs() < 1e-9);
        assert!((NormalCdf.upper_quantile(1e-20) - 9.262340089798408).abs() < 1e-9);
    }
}
