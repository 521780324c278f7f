//! Monte Carlo replication of a configuration and comparison of the scaled
//! errors against the predicted limit law.

mod compare;
mod emit;
mod slope;
mod stats;

pub use compare::{compare, Verdict, VerdictKind};
pub use emit::{emit, read_replication_csv, read_summary, EmittedFiles, REPLICATION_CSV, SNAPSHOT_CSV, SUMMARY_JSON};
pub use slope::{slope_diagnostic, SlopeEstimate, SnapshotSeries, MIN_SNAPSHOTS};
pub use stats::{median, moments, Moments};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{averaged_theta, run_trajectory, RunConfig, TrajectoryResult};
use crate::analysis::{
    classify_regime, compute_constants, validate_assumptions, AsymptoticPrediction, LimitConstants, ThetaTarget,
    ValidationReport,
};
use crate::models::{NoiseModel, RegressionModel};
use crate::{Error, Result};

/// Tolerance profile for [`compare`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Standard-error multiplier for mean and cross-covariance tests.
    pub z: f64,
    pub theta_variance_rel: f64,
    pub mu_variance_rel: f64,
    /// Relative band around a nonzero degenerate limit.
    pub degenerate_rel: f64,
    /// Absolute band around a zero degenerate limit.
    pub degenerate_abs: f64,
    /// Standard-error multiplier for skewness and kurtosis.
    pub normality_z: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            z: 4.0,
            theta_variance_rel: 0.15,
            mu_variance_rel: 0.15,
            degenerate_rel: 0.15,
            degenerate_abs: 0.05,
            normality_z: 4.0,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.z,
            self.theta_variance_rel,
            self.mu_variance_rel,
            self.degenerate_rel,
            self.degenerate_abs,
            self.normality_z,
        ];
        if all.iter().all(|t| t.is_finite() && *t > 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidConfig("tolerances must be positive".into()))
        }
    }
}

/// Everything needed to run and judge one Monte Carlo experiment.
#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub run_config: RunConfig,
    pub model: RegressionModel,
    pub noise: NoiseModel,
    pub replications: usize,
    pub master_seed: u64,
    pub tolerances: Tolerances,
    /// Worker threads; 0 lets the thread pool decide.
    pub workers: usize,
    /// Run even when required assumptions fail.
    pub override_validation: bool,
}

impl ExperimentSpec {
    pub fn new(
        run_config: RunConfig,
        model: RegressionModel,
        noise: NoiseModel,
        replications: usize,
        master_seed: u64,
    ) -> Result<Self> {
        let spec = ExperimentSpec {
            run_config,
            model,
            noise,
            replications,
            master_seed,
            tolerances: Tolerances::default(),
            workers: 0,
            override_validation: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < 2 {
            return Err(Error::InvalidConfig("an experiment needs at least 2 replications".into()));
        }
        self.tolerances.validate()?;
        self.run_config.validate()
    }

    pub fn with_tolerances(mut self, tolerances: Tolerances) -> Self {
        self.tolerances = tolerances;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_override(mut self, override_validation: bool) -> Self {
        self.override_validation = override_validation;
        self
    }

    fn echo(&self) -> SpecEcho {
        SpecEcho {
            run_config: self.run_config.clone(),
            model: ModelEcho {
                kind: self.model.kind_name().to_string(),
                theta: self.model.theta_true().to_vec(),
                mu: self.model.mu_true(),
            },
            noise: self.noise,
            replications: self.replications,
            master_seed: self.master_seed,
            tolerances: self.tolerances,
            override_validation: self.override_validation,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelEcho {
    pub kind: String,
    pub theta: Vec<f64>,
    pub mu: f64,
}

/// The parts of an [`ExperimentSpec`] that determine the output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecEcho {
    pub run_config: RunConfig,
    pub model: ModelEcho,
    pub noise: NoiseModel,
    pub replications: usize,
    pub master_seed: u64,
    pub tolerances: Tolerances,
    pub override_validation: bool,
}

/// Scaled errors of one replication at the horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicationRow {
    pub replication: u64,
    pub n: u64,
    pub scaled_theta: Vec<f64>,
    pub scaled_mu: f64,
    pub diverged: bool,
    pub queries: u64,
}

impl ReplicationRow {
    pub fn stacked(&self) -> Vec<f64> {
        let mut v = self.scaled_theta.clone();
        v.push(self.scaled_mu);
        v
    }
}

/// Raw (unscaled) errors of one replication at one snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotRow {
    pub replication: u64,
    pub n: u64,
    pub theta_error: Vec<f64>,
    pub mu_error: f64,
    pub theta_bar_error: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlopeTarget {
    Theta,
    Mu,
    ThetaBar,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeRecord {
    pub target: SlopeTarget,
    /// Exponent of the inverse rate, i.e. the expected slope.
    pub expected_exponent: f64,
    pub estimate: Option<SlopeEstimate>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Clone, Debug)]
pub struct McReport {
    pub spec: SpecEcho,
    pub validation: ValidationReport,
    pub constants: LimitConstants,
    pub prediction: AsymptoticPrediction,
    pub rows: Vec<ReplicationRow>,
    pub snapshots: Vec<SnapshotRow>,
    /// Moments of the stacked scaled errors over non-diverged rows.
    pub moments: Moments,
    pub divergence_fraction: f64,
    pub verdicts: Vec<Verdict>,
    pub slopes: Vec<SlopeRecord>,
}

impl McReport {
    pub fn all_passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn verdict(&self, kind: VerdictKind, component: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.kind == kind && v.component == component)
    }

    pub fn slope(&self, target: SlopeTarget) -> Option<&SlopeRecord> {
        self.slopes.iter().find(|s| s.target == target)
    }

    /// Per-replication absolute error series for a slope fit.
    pub fn snapshot_series(&self, target: SlopeTarget) -> SnapshotSeries {
        let mut n: Vec<u64> = self.snapshots.iter().map(|s| s.n).collect();
        n.sort_unstable();
        n.dedup();
        let mut errors = Vec::new();
        let mut current: Option<u64> = None;
        for s in &self.snapshots {
            if current != Some(s.replication) {
                current = Some(s.replication);
                errors.push(vec![f64::NAN; n.len()]);
            }
            let j = n.binary_search(&s.n).expect("index collected above");
            let row = errors.last_mut().expect("pushed above");
            row[j] = match target {
                SlopeTarget::Theta => norm(&s.theta_error),
                SlopeTarget::Mu => s.mu_error,
                SlopeTarget::ThetaBar => norm(&s.theta_bar_error),
            };
        }
        SnapshotSeries { n, errors }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn diff(v: &[f64], center: &[f64]) -> Vec<f64> {
    v.iter().zip(center).map(|(a, b)| a - b).collect()
}

fn run_all(spec: &ExperimentSpec) -> Result<Vec<TrajectoryResult>> {
    let job = || {
        (0..spec.replications as u64)
            .into_par_iter()
            .map(|r| run_trajectory(&spec.run_config, &spec.model, &spec.noise, spec.master_seed, r))
            .collect::<Result<Vec<_>>>()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(job)
}

/// Runs `M` replications and compares their scaled errors with the
/// predicted limit. Rows are ordered by replication index regardless of
/// scheduling, so the report is a deterministic function of the spec.
pub fn run_monte_carlo(spec: &ExperimentSpec) -> Result<McReport> {
    if spec.replications == 0 {
        return Err(Error::InvalidConfig("replications must be positive".into()));
    }
    spec.tolerances.validate()?;
    let validation = validate_assumptions(&spec.run_config, &spec.model, &spec.noise);
    if !validation.passed && !spec.override_validation {
        return Err(Error::ValidationFailed);
    }
    let constants = compute_constants(&spec.run_config, &spec.model, &spec.noise)?;
    let prediction = classify_regime(&spec.run_config, &constants)?;

    let results = run_all(spec)?;
    let theta_star = spec.model.theta_true();
    let mu_star = spec.model.mu_true();
    let horizon = spec.run_config.horizon;
    let theta_rate = prediction.theta_rate.eval(horizon)?;
    let mu_rate = prediction.mu_rate.eval(horizon)?;

    let mut rows = Vec::with_capacity(results.len());
    let mut snapshots = Vec::new();
    for result in &results {
        let location = match prediction.theta_target {
            ThetaTarget::Theta => Some(result.final_state.theta.clone()),
            ThetaTarget::ThetaBar => averaged_theta(&result.final_state).ok(),
        };
        let (scaled_theta, scaled_mu) = match (result.diverged, location) {
            (false, Some(loc)) => (
                diff(&loc, theta_star).iter().map(|e| theta_rate * e).collect(),
                mu_rate * (result.final_state.mu - mu_star),
            ),
            _ => (vec![f64::NAN; theta_star.len()], f64::NAN),
        };
        rows.push(ReplicationRow {
            replication: result.replication,
            n: horizon,
            scaled_theta,
            scaled_mu,
            diverged: result.diverged,
            queries: result.query_count,
        });
        if !result.diverged {
            snapshots.extend(result.snapshots.iter().map(|s| SnapshotRow {
                replication: result.replication,
                n: s.n,
                theta_error: diff(&s.theta, theta_star),
                mu_error: s.mu - mu_star,
                theta_bar_error: diff(&s.theta_bar, theta_star),
            }));
        }
    }

    let live: Vec<Vec<f64>> = rows.iter().filter(|r| !r.diverged).map(ReplicationRow::stacked).collect();
    if live.is_empty() {
        return Err(Error::AllDiverged);
    }
    let divergence_fraction = (rows.len() - live.len()) as f64 / rows.len() as f64;
    let moments = moments(&live);
    let verdicts = compare(&moments, &prediction, &spec.tolerances)?;

    let mut report = McReport {
        spec: spec.echo(),
        validation,
        constants,
        prediction,
        rows,
        snapshots,
        moments,
        divergence_fraction,
        verdicts,
        slopes: Vec::new(),
    };
    report.slopes = slope_records(&report);
    Ok(report)
}

fn slope_records(report: &McReport) -> Vec<SlopeRecord> {
    let pred = &report.prediction;
    let theta_target = match pred.theta_target {
        ThetaTarget::Theta => SlopeTarget::Theta,
        ThetaTarget::ThetaBar => SlopeTarget::ThetaBar,
    };
    let targets = [
        (theta_target, -crate::sequences::exponent_to_f64(pred.theta_rate.gs_exponent())),
        (SlopeTarget::Mu, -crate::sequences::exponent_to_f64(pred.mu_rate.gs_exponent())),
    ];
    targets
        .into_iter()
        .map(|(target, expected_exponent)| match slope_diagnostic(&report.snapshot_series(target)) {
            Ok(estimate) => SlopeRecord {
                target,
                expected_exponent,
                estimate: Some(estimate),
                error: None,
            },
            Err(e) => SlopeRecord {
                target,
                expected_exponent,
                estimate: None,
                error: Some(e.to_string()),
            },
        })
        .collect()
}
