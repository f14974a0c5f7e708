#![allow(clippy::excessive_precision)]

use super::sum::NeumaierSum;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_6;

const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_741_8;

// Below this argument the Stirling series is not used directly; arguments are
// shifted upward with the recurrence Γ(z+1) = zΓ(z).
const STIRLING_FLOOR: f64 = 10.0;

/// `H_n = Σ_{k=1}^{n} 1/k`, with `H_0 = 0`.
pub fn harmonic(n: usize) -> f64 {
    harmonic_range(1, n)
}

/// `Σ_{k=from}^{to} 1/k`, summed in ascending `k` with compensation.
/// Empty ranges give 0. `from` must be at least 1.
pub fn harmonic_range(from: usize, to: usize) -> f64 {
    assert!(from >= 1, "harmonic sums start at k = 1");
    let mut acc = NeumaierSum::new();
    for k in from..=to {
        acc.add(1.0 / k as f64);
    }
    acc.value()
}

/// Tail of the Stirling series, `Σ B_{2m} / (2m(2m-1) z^{2m-1})`.
fn stirling_tail(z: f64) -> f64 {
    const COEFFS: [f64; 6] = [1.0 / 12.0, -1.0 / 360.0, 1.0 / 1260.0, -1.0 / 1680.0, 1.0 / 1188.0, -691.0 / 360_360.0];
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let mut term = inv;
    let mut acc = 0.0;
    for c in COEFFS {
        acc += c * term;
        term *= inv2;
    }
    acc
}

/// `ln Γ(z)` for `z > 0`.
pub fn ln_gamma(z: f64) -> f64 {
    assert!(z > 0.0, "ln_gamma requires a positive argument, got {z}");
    let mut shift = 0.0;
    let mut z = z;
    while z < STIRLING_FLOOR {
        shift += z.ln();
        z += 1.0;
    }
    (z - 0.5) * z.ln() - z + HALF_LN_TWO_PI + stirling_tail(z) - shift
}

/// `ln Γ(x) - ln Γ(x - a)` for `x > 0`, `x - a > 0`, evaluated without
/// forming the two (possibly huge) log-gamma values separately.
pub fn ln_gamma_ratio(x: f64, a: f64) -> f64 {
    let y = x - a;
    assert!(x > 0.0 && y > 0.0, "ln_gamma_ratio needs x > 0 and x - a > 0");
    let (mut x, mut y) = (x, y);
    let mut shift = NeumaierSum::new();
    while x.min(y) < STIRLING_FLOOR {
        // ln(x) - ln(y) for the factor pulled out by the recurrence
        shift.add((x / y).ln());
        x += 1.0;
        y += 1.0;
    }
    let lead = -(x - 0.5) * (-a / x).ln_1p() + a * y.ln() - a;
    lead + (stirling_tail(x) - stirling_tail(y)) - shift.value()
}

/// Exact `C(n, k)` when it fits in 128 bits.
pub fn binomial_exact(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// `ln C(n, k)` for `k <= n`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    assert!(k <= n);
    statrs::function::factorial::ln_binomial(n, k)
}
