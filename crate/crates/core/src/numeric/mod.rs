//! Numerical building blocks shared by the models and the value curve.

mod format;
mod quad;
mod special;
mod sum;

pub use format::format_significant;
pub use quad::{Estimate, QuadError, Quadrature};
pub use special::{binomial_exact, harmonic, harmonic_range, ln_binomial, ln_gamma, ln_gamma_ratio, EULER_GAMMA};
pub use sum::{neumaier_sum, NeumaierSum};
