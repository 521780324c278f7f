//! Stochastic approximation of the maximizer `θ` and the maximum value
//! `μ = f(θ)` of a regression function observed with noise.
//!
//! The crate is organised bottom-up:
//!
//! * [`sequences`] — the parametric family of regularly varying step-size
//!   sequences `v₀·n^e·∏(log_j n)^ℓⱼ` with exact limit decisions.
//! * [`models`] — regression oracles with known optimum and keyed,
//!   replayable observation noise.
//! * [`algorithms`] — the Kiefer–Wolfowitz–Blum recursion and the three
//!   companion recursions for `μ`, plus the trajectory driver.
//! * [`analysis`] — assumption validation, limit constants and the regime
//!   classification that yields the predicted limit law.
//! * [`harness`] — Monte Carlo replication, statistical comparison against
//!   the prediction, and report emission.
//! * [`config`] — the JSON experiment document shared by the CLI.

pub mod algorithms;
pub mod analysis;
pub mod config;
mod error;
pub mod harness;
mod linalg;
pub mod models;
pub mod sequences;
mod sum;

pub use algorithms::{RunConfig, RunState, TrajectoryResult, Variant};
pub use analysis::{AsymptoticPrediction, LimitConstants, LimitLaw, ValidationReport};
pub use error::{Error, Result};
pub use harness::{ExperimentSpec, McReport, Tolerances, Verdict};
pub use models::{NoiseFamily, NoiseModel, RandomStream, RegressionModel};
pub use sequences::{LimitValue, ParamSequence};
