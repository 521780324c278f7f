//! Assumption validation, limit constants and regime classification.
//!
//! [`validate_assumptions`] decides the step-size and model conditions,
//! [`compute_constants`] evaluates the limit covariances and biases, and
//! [`classify_regime`] turns both into the predicted limit law of the
//! scaled errors.

mod constants;
mod regime;
mod validate;

pub use constants::{compute_constants, LimitConstants};
pub use regime::{classify_regime, predicted_scaled_moments, AsymptoticPrediction, LimitLaw, Theorem, ThetaTarget};
pub use validate::{validate_assumptions, CheckRecord, CheckStatus, ValidationReport};

use crate::sequences::{Exponent, LimitValue, ParamSequence};

/// `τ` with `cₙ ∈ GS(−τ)`.
pub(crate) fn tau_of(c: &ParamSequence) -> Exponent {
    -c.gs_exponent()
}

/// `lim (n·stepₙ)⁻¹`, i.e. `0` when `n·stepₙ → ∞`.
pub(crate) fn inverse_limit(limit: LimitValue) -> f64 {
    match limit {
        LimitValue::Infinite => 0.0,
        LimitValue::Finite(v) => 1.0 / v,
        LimitValue::Zero => f64::INFINITY,
    }
}
