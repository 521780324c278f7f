//! JSON experiment documents.
//!
//! A document has five blocks:
//!
//! ```json
//! {
//!   "sequences": { "a": "1*n^-1", "c": "1*n^-1/6", "atilde": "1*n^-1" },
//!   "model": { "kind": "quadratic", "dimension": 2, "q": [[1, 0], [0, 1]], "theta": [0, 0], "mu": 0 },
//!   "noise": { "family": "gaussian", "sigma": 1, "m": 4 },
//!   "algorithm": { "variant": "fresh_obs", "delta": 2, "theta_init": [0.5, -0.5], "horizon": 100000 },
//!   "experiment": { "replications": 2000, "seed": 1 }
//! }
//! ```
//!
//! `atilde` may be omitted for the averaged variant, which always uses
//! `n⁻¹`. The shared variant takes a 1-based `subset` and derives `delta`.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::algorithms::{RunConfig, Variant};
use crate::harness::{ExperimentSpec, Tolerances};
use crate::models::{NoiseFamily, NoiseModel, RegressionModel};
use crate::sequences::ParamSequence;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequencesBlock {
    pub a: ParamSequence,
    pub c: ParamSequence,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atilde: Option<ParamSequence>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelBlock {
    Quadratic {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dimension: Option<usize>,
        /// Rows of the positive definite curvature matrix.
        q: Vec<Vec<f64>>,
        theta: Vec<f64>,
        mu: f64,
    },
    CubicPerturbed {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dimension: Option<usize>,
        theta: f64,
        mu: f64,
        beta: f64,
        lambda: f64,
    },
}

fn default_moment_order() -> f64 {
    4.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseBlock {
    #[serde(default = "default_family")]
    pub family: NoiseFamily,
    pub sigma: f64,
    #[serde(default = "default_moment_order")]
    pub m: f64,
}

fn default_family() -> NoiseFamily {
    NoiseFamily::Gaussian
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmBlock {
    pub variant: Variant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<usize>,
    pub theta_init: Vec<f64>,
    #[serde(default)]
    pub mu_init: f64,
    pub horizon: u64,
    /// First iteration index; defaults to 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_index: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divergence_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_schedule: Option<Vec<u64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replications: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub sequences: SequencesBlock,
    pub model: ModelBlock,
    pub noise: NoiseBlock,
    pub algorithm: AlgorithmBlock,
    #[serde(default)]
    pub experiment: ExperimentBlock,
}

/// Command-line values that take precedence over the `experiment` and
/// `algorithm` blocks.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub replications: Option<usize>,
    pub horizon: Option<u64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub override_validation: bool,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

fn check_dimension(declared: Option<usize>, actual: usize) -> Result<()> {
    match declared {
        Some(d) if d != actual => Err(Error::DimensionMismatch { expected: d, actual }),
        _ => Ok(()),
    }
}

impl ConfigDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| Error::Json {
            context: "config".into(),
            source,
        })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            context: path.display().to_string(),
            source,
        })
    }

    pub fn model(&self) -> Result<RegressionModel> {
        match &self.model {
            ModelBlock::Quadratic { dimension, q, theta, mu } => {
                check_dimension(*dimension, theta.len())?;
                let d = theta.len();
                if q.len() != d || q.iter().any(|row| row.len() != d) {
                    return Err(Error::InvalidModel(format!("q must have {d} rows of length {d}")));
                }
                let flat: Vec<f64> = q.iter().flatten().copied().collect();
                RegressionModel::quadratic(DMatrix::from_row_slice(d, d, &flat), theta.clone(), *mu)
            }
            ModelBlock::CubicPerturbed {
                dimension,
                theta,
                mu,
                beta,
                lambda,
            } => {
                check_dimension(*dimension, 1)?;
                RegressionModel::cubic_perturbed(*theta, *mu, *beta, *lambda)
            }
        }
    }

    pub fn noise(&self) -> Result<NoiseModel> {
        NoiseModel::new(self.noise.sigma, self.noise.family, self.noise.m)
    }

    /// The run configuration, with `horizon` replaced when given.
    pub fn run_config(&self, horizon: Option<u64>) -> Result<RunConfig> {
        let alg = &self.algorithm;
        let seq = &self.sequences;
        let horizon = horizon.unwrap_or(alg.horizon);
        let theta_init = alg.theta_init.clone();
        let atilde = || seq.atilde.clone().ok_or_else(|| invalid("sequences.atilde is required for this variant"));
        let mut config = match alg.variant {
            Variant::SharedObs => {
                let subset = alg.subset.clone().ok_or_else(|| invalid("algorithm.subset is required for shared_obs"))?;
                if let Some(delta) = alg.delta {
                    if delta != 2 * subset.len() {
                        return Err(invalid(format!("shared_obs fixes delta = 2|S| = {}, got {delta}", 2 * subset.len())));
                    }
                }
                RunConfig::shared(seq.a.clone(), seq.c.clone(), atilde()?, subset, theta_init, horizon)?
            }
            Variant::FreshObs => {
                if alg.subset.is_some() {
                    return Err(invalid("algorithm.subset applies only to shared_obs"));
                }
                let delta = alg.delta.ok_or_else(|| invalid("algorithm.delta is required for fresh_obs"))?;
                RunConfig::fresh(seq.a.clone(), seq.c.clone(), atilde()?, delta, theta_init, horizon)?
            }
            Variant::AveragedFresh => {
                if alg.subset.is_some() {
                    return Err(invalid("algorithm.subset applies only to shared_obs"));
                }
                if let Some(at) = &seq.atilde {
                    if !at.is_harmonic() {
                        return Err(invalid(format!("averaged_fresh requires atilde = 1*n^-1, got {at}")));
                    }
                }
                let delta = alg.delta.ok_or_else(|| invalid("algorithm.delta is required for averaged_fresh"))?;
                RunConfig::averaged(seq.a.clone(), seq.c.clone(), delta, theta_init, horizon)?
            }
        };
        config = config.with_mu_init(alg.mu_init);
        if let Some(n0) = alg.start_index {
            config = config.with_start_index(n0);
        }
        if let Some(r) = alg.divergence_radius {
            config = config.with_divergence_radius(r);
        }
        if let Some(schedule) = &alg.record_schedule {
            config = config.with_record_schedule(schedule.clone());
        }
        config.validate()?;
        Ok(config)
    }

    /// Builds the full experiment; command-line values win over the file.
    pub fn experiment_spec(&self, overrides: &Overrides) -> Result<ExperimentSpec> {
        let replications = overrides
            .replications
            .or(self.experiment.replications)
            .ok_or_else(|| invalid("replication count missing (experiment.replications or --reps)"))?;
        let seed = overrides
            .seed
            .or(self.experiment.seed)
            .ok_or_else(|| invalid("seed missing (experiment.seed or --seed)"))?;
        let workers = overrides.workers.or(self.experiment.workers).unwrap_or(0);
        Ok(ExperimentSpec::new(self.run_config(overrides.horizon)?, self.model()?, self.noise()?, replications, seed)?
            .with_tolerances(self.experiment.tolerances)
            .with_workers(workers)
            .with_override(overrides.override_validation))
    }
}
