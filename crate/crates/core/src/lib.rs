//! Threshold hiring strategies with a quality-based payoff.
//!
//! Candidates with exchangeable qualities arrive one at a time; a threshold
//! strategy rejects the first `c - 1` outright and then hires the first
//! candidate who is the best seen so far (or the last one). Everything here
//! is driven by the running-maximum means `μ_k = E[max(X_1, …, X_k)]`:
//!
//! * [`models`] supplies `μ_k` for closed-form, combinatorial and generic-CDF
//!   quality models;
//! * [`curve`] turns a `μ_k` sequence into the payoff curve `V_n(c)` and the
//!   optimal threshold index `c*(n)`;
//! * [`order`] checks the alternating signs of the iterated differences of
//!   `μ_k` and their order-statistic identity;
//! * [`bounds`] collects the harmonic bound and per-family threshold formulas;
//! * [`sim`] cross-checks the analytic engine by Monte Carlo and by exact
//!   enumeration of arrival orders.

pub mod bounds;
pub mod curve;
pub mod models;
pub mod numeric;
pub mod order;
pub mod par;
pub mod sim;
pub mod verify;

pub use curve::{full_curve, optimal_threshold, ThresholdResult, ValueCurve};
pub use models::{parse_model_spec, MuSequence, QualityModel};
pub use par::Execution;
