//! The Kiefer–Wolfowitz–Blum maximizer recursion and the companion
//! recursions for the maximum value `μ`.
//!
//! Per iteration `n` the driver runs, in order:
//!
//! * `SharedObs`: [`kwb_step`] then [`mu_shared_step`] on the same
//!   observations.
//! * `FreshObs`: [`mu_fresh_step`] at `θₙ`, then [`kwb_step`].
//! * `AveragedFresh`: [`mu_averaged_step`] at `θ̄ₙ`, then [`kwb_step`].
//!
//! Every `μ` update therefore reads the pre-update location. Query indices
//! inside an iteration are fixed (`2i`, `2i+1` for the `±cₙeᵢ` probes,
//! `2d + j` for the `j`-th fresh observation), so the order in which the
//! steps draw noise does not matter.

use serde::{Deserialize, Serialize};

use crate::models::{NoiseModel, RandomStream, RegressionModel};
use crate::sequences::{Exponent, LogPoint, ParamSequence};
use crate::sum::CompensatedSum;
use crate::{Error, Result};

pub const DEFAULT_DIVERGENCE_RADIUS: f64 = 1e6;
/// Number of halvings in the default geometric snapshot schedule.
pub const DEFAULT_SCHEDULE_DEPTH: u32 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// `μ` recursion reusing the finite-difference observations.
    SharedObs,
    /// `μ` recursion on `δ` fresh observations at `θₙ`.
    FreshObs,
    /// Weighted average `θ̄ₙ` plus `δ` fresh observations at `θ̄ₙ`, step `1/n`.
    AveragedFresh,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::SharedObs => "shared_obs",
            Variant::FreshObs => "fresh_obs",
            Variant::AveragedFresh => "averaged_fresh",
        }
    }
}

/// Full configuration of one trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub a_seq: ParamSequence,
    pub c_seq: ParamSequence,
    pub atilde_seq: ParamSequence,
    pub variant: Variant,
    /// 1-based coordinates whose probes feed the shared `μ` recursion.
    pub subset: Vec<usize>,
    /// Observations averaged per `μ` update (`2|S|` for `SharedObs`).
    pub delta: usize,
    pub theta_init: Vec<f64>,
    pub mu_init: f64,
    pub horizon: u64,
    /// Requested first iteration; sequences that start later push it back.
    #[serde(default = "one")]
    pub start_index: u64,
    pub divergence_radius: f64,
    /// Iteration counts after which a snapshot is recorded.
    pub record_schedule: Vec<u64>,
}

fn one() -> u64 {
    1
}

impl RunConfig {
    fn base(
        variant: Variant,
        a_seq: ParamSequence,
        c_seq: ParamSequence,
        atilde_seq: ParamSequence,
        theta_init: Vec<f64>,
        horizon: u64,
    ) -> Self {
        let mut config = RunConfig {
            a_seq,
            c_seq,
            atilde_seq,
            variant,
            subset: Vec::new(),
            delta: 1,
            theta_init,
            mu_init: 0.0,
            horizon,
            start_index: 1,
            divergence_radius: DEFAULT_DIVERGENCE_RADIUS,
            record_schedule: Vec::new(),
        };
        config.record_schedule = default_schedule(config.first_index(), horizon);
        config
    }

    /// Shared-observation companion; `subset` holds 1-based coordinates.
    pub fn shared(
        a_seq: ParamSequence,
        c_seq: ParamSequence,
        atilde_seq: ParamSequence,
        subset: Vec<usize>,
        theta_init: Vec<f64>,
        horizon: u64,
    ) -> Result<Self> {
        let mut config = Self::base(Variant::SharedObs, a_seq, c_seq, atilde_seq, theta_init, horizon);
        config.delta = 2 * subset.len();
        config.subset = subset;
        config.validate()?;
        Ok(config)
    }

    pub fn fresh(
        a_seq: ParamSequence,
        c_seq: ParamSequence,
        atilde_seq: ParamSequence,
        delta: usize,
        theta_init: Vec<f64>,
        horizon: u64,
    ) -> Result<Self> {
        let mut config = Self::base(Variant::FreshObs, a_seq, c_seq, atilde_seq, theta_init, horizon);
        config.delta = delta;
        config.validate()?;
        Ok(config)
    }

    /// Averaged variant; the `μ` step is fixed to `n⁻¹`.
    pub fn averaged(
        a_seq: ParamSequence,
        c_seq: ParamSequence,
        delta: usize,
        theta_init: Vec<f64>,
        horizon: u64,
    ) -> Result<Self> {
        let harmonic = ParamSequence::power_law(1.0, Exponent::from_integer(-1))?;
        let mut config = Self::base(Variant::AveragedFresh, a_seq, c_seq, harmonic, theta_init, horizon);
        config.delta = delta;
        config.validate()?;
        Ok(config)
    }

    pub fn with_mu_init(mut self, mu_init: f64) -> Self {
        self.mu_init = mu_init;
        self
    }

    pub fn with_divergence_radius(mut self, radius: f64) -> Self {
        self.divergence_radius = radius;
        self
    }

    pub fn with_record_schedule(mut self, mut schedule: Vec<u64>) -> Self {
        schedule.sort_unstable();
        schedule.dedup();
        self.record_schedule = schedule;
        self
    }

    /// Starts the recursion at `n0` instead of 1, skipping the large early
    /// steps. Resets the snapshot schedule to its default.
    pub fn with_start_index(mut self, n0: u64) -> Self {
        self.start_index = n0;
        self.record_schedule = default_schedule(self.first_index(), self.horizon);
        self
    }

    /// Changes the horizon and resets the snapshot schedule to its default.
    pub fn with_horizon(mut self, horizon: u64) -> Self {
        self.horizon = horizon;
        self.record_schedule = default_schedule(self.first_index(), horizon);
        self
    }

    pub fn dimension(&self) -> usize {
        self.theta_init.len()
    }

    /// First iteration index: every step sequence is defined from here on.
    pub fn first_index(&self) -> u64 {
        self.start_index
            .max(self.a_seq.n_start())
            .max(self.c_seq.n_start())
            .max(self.atilde_seq.n_start())
    }

    /// Iterated-log depth needed to evaluate every step sequence.
    pub fn log_depth(&self) -> usize {
        self.a_seq
            .log_depth()
            .max(self.c_seq.log_depth())
            .max(self.atilde_seq.log_depth())
    }

    /// 0-based coordinates of the shared subset.
    pub(crate) fn subset_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.subset.iter().map(|i| i - 1)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dimension();
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if d == 0 {
            return bad("theta_init must be nonempty".into());
        }
        if !self.theta_init.iter().all(|v| v.is_finite()) || !self.mu_init.is_finite() {
            return bad("initial values must be finite".into());
        }
        if self.start_index == 0 {
            return bad("start_index must be at least 1".into());
        }
        if self.horizon < self.first_index() {
            return bad(format!(
                "horizon {} precedes the first index {}",
                self.horizon,
                self.first_index()
            ));
        }
        if !(self.divergence_radius > 0.0) {
            return bad("divergence_radius must be positive".into());
        }
        if self.delta == 0 {
            return bad("delta must be positive".into());
        }
        match self.variant {
            Variant::SharedObs => {
                if self.subset.is_empty() {
                    return bad("shared variant needs a nonempty subset".into());
                }
                let mut sorted = self.subset.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != self.subset.len() || sorted.iter().any(|&i| i == 0 || i > d) {
                    return bad(format!("subset must hold distinct coordinates in 1..={d}"));
                }
                if self.delta != 2 * self.subset.len() {
                    return bad(format!("shared variant requires delta = 2|S| = {}", 2 * self.subset.len()));
                }
            }
            Variant::FreshObs => {}
            Variant::AveragedFresh => {
                if !self.atilde_seq.is_harmonic() {
                    return bad("averaged variant requires atilde = 1*n^-1".into());
                }
            }
        }
        Ok(())
    }
}

/// `{⌊N·2^{-j}⌋ : j = 0..=depth}` restricted to `[first, N]`.
pub fn default_schedule(first: u64, horizon: u64) -> Vec<u64> {
    let mut schedule: Vec<u64> = (0..=DEFAULT_SCHEDULE_DEPTH)
        .map(|j| horizon >> j)
        .filter(|&n| n >= first && n >= 1)
        .collect();
    schedule.sort_unstable();
    schedule.dedup();
    schedule
}

/// Evolving state of one replication at iteration index `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct RunState {
    /// Index of the next iteration to run.
    pub n: u64,
    pub theta: Vec<f64>,
    pub mu: f64,
    pub query_count: u64,
    pub diverged: bool,
    avg_weight_sum: CompensatedSum,
    avg_weighted_theta: Vec<CompensatedSum>,
    /// Last index whose `θₙ` has been folded into the average.
    averaged_through: u64,
    probe: Vec<f64>,
}

impl RunState {
    pub fn new(config: &RunConfig) -> Self {
        let d = config.dimension();
        RunState {
            n: config.first_index(),
            theta: config.theta_init.clone(),
            mu: config.mu_init,
            query_count: 0,
            diverged: false,
            avg_weight_sum: CompensatedSum::default(),
            avg_weighted_theta: vec![CompensatedSum::default(); d],
            averaged_through: 0,
            probe: vec![0.0; d],
        }
    }

    /// `Σ cₖ²` over folded iterations.
    pub fn avg_weight_sum(&self) -> f64 {
        self.avg_weight_sum.value()
    }

    /// `Σ cₖ²θₖ` over folded iterations.
    pub fn avg_weighted_theta(&self) -> Vec<f64> {
        self.avg_weighted_theta.iter().map(CompensatedSum::value).collect()
    }

    fn fold_average(&mut self, c: f64) {
        if self.averaged_through == self.n {
            return;
        }
        let w = c * c;
        self.avg_weight_sum.add(w);
        for (acc, t) in self.avg_weighted_theta.iter_mut().zip(&self.theta) {
            acc.add(w * t);
        }
        self.averaged_through = self.n;
    }

    fn check_theta(&mut self, radius: f64) {
        let norm2: f64 = self.theta.iter().map(|t| t * t).sum();
        if !norm2.is_finite() || norm2.sqrt() > radius {
            self.diverged = true;
        }
    }
}

/// The raw `Z(θₙ ± cₙeᵢ)` of one iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationObservations {
    pub n: u64,
    pub c: f64,
    pub z_plus: Vec<f64>,
    pub z_minus: Vec<f64>,
}

impl IterationObservations {
    fn with_dimension(d: usize) -> Self {
        IterationObservations {
            n: 0,
            c: 0.0,
            z_plus: vec![0.0; d],
            z_minus: vec![0.0; d],
        }
    }
}

/// `μₙ₊₁ = (1 − step)·μₙ + step·target`.
#[inline]
pub fn companion_update(mu: f64, step: f64, target: f64) -> f64 {
    (1.0 - step) * mu + step * target
}

fn ensure_live(state: &RunState) -> Result<()> {
    if state.diverged {
        return Err(Error::InvalidConfig("replication has already diverged".into()));
    }
    Ok(())
}

fn ensure_variant(config: &RunConfig, expected: Variant) -> Result<()> {
    if config.variant != expected {
        return Err(Error::WrongVariant {
            expected: expected.as_str(),
            actual: config.variant.as_str(),
        });
    }
    Ok(())
}

/// One maximizer update `θₙ₊₁ = θₙ + aₙYₙ`, advancing `n`.
pub fn kwb_step(
    state: &mut RunState,
    config: &RunConfig,
    model: &RegressionModel,
    noise: &NoiseModel,
    stream: RandomStream,
) -> Result<IterationObservations> {
    let mut obs = IterationObservations::with_dimension(config.dimension());
    kwb_step_into(state, config, model, noise, stream, &mut obs)?;
    Ok(obs)
}

fn kwb_step_into(
    state: &mut RunState,
    config: &RunConfig,
    model: &RegressionModel,
    noise: &NoiseModel,
    stream: RandomStream,
    obs: &mut IterationObservations,
) -> Result<()> {
    ensure_live(state)?;
    let d = state.theta.len();
    if d != model.dimension() {
        return Err(Error::DimensionMismatch {
            expected: model.dimension(),
            actual: d,
        });
    }
    let n = state.n;
    let point = LogPoint::at_depth(n, config.log_depth());
    let a = config.a_seq.eval_point(&point);
    let c = config.c_seq.eval_point(&point);
    state.fold_average(c);

    obs.n = n;
    obs.c = c;
    state.probe.copy_from_slice(&state.theta);
    for i in 0..d {
        let base = state.probe[i];
        state.probe[i] = base + c;
        obs.z_plus[i] = model.value(&state.probe) + noise.disturbance(stream, n, 2 * i as u64);
        state.probe[i] = base - c;
        obs.z_minus[i] = model.value(&state.probe) + noise.disturbance(stream, n, 2 * i as u64 + 1);
        state.probe[i] = base;
    }
    for i in 0..d {
        let y = (obs.z_plus[i] - obs.z_minus[i]) / (2.0 * c);
        state.theta[i] += a * y;
    }
    state.query_count += 2 * d as u64;
    state.n += 1;
    state.check_theta(config.divergence_radius);
    Ok(())
}

/// Shared companion: `Ỹₙ = δ⁻¹ Σ_{i∈S}[Z⁺ᵢ + Z⁻ᵢ]`, no new observations.
pub fn mu_shared_step(state: &mut RunState, obs: &IterationObservations, config: &RunConfig) -> Result<()> {
    ensure_variant(config, Variant::SharedObs)?;
    let total: f64 = config.subset_indices().map(|i| obs.z_plus[i] + obs.z_minus[i]).sum();
    let target = total / config.delta as f64;
    let step = config.atilde_seq.eval(obs.n)?;
    state.mu = companion_update(state.mu, step, target);
    if !state.mu.is_finite() {
        state.diverged = true;
    }
    Ok(())
}

/// Mean of `δ` fresh observations at `x`, keyed after the probe queries.
fn fresh_mean(
    x: &[f64],
    delta: usize,
    n: u64,
    model: &RegressionModel,
    noise: &NoiseModel,
    stream: RandomStream,
) -> f64 {
    let first_q = 2 * x.len() as u64;
    let fx = model.value(x);
    let total: f64 = (0..delta as u64).map(|j| fx + noise.disturbance(stream, n, first_q + j)).sum();
    total / delta as f64
}

/// Fresh companion at `θₙ`: `μₙ₊₁ = (1 − ãₙ)μₙ + ãₙ𝒴̃ₙ`.
pub fn mu_fresh_step(
    state: &mut RunState,
    config: &RunConfig,
    model: &RegressionModel,
    noise: &NoiseModel,
    stream: RandomStream,
) -> Result<()> {
    ensure_variant(config, Variant::FreshObs)?;
    ensure_live(state)?;
    let n = state.n;
    let target = fresh_mean(&state.theta, config.delta, n, model, noise, stream);
    let step = config.atilde_seq.eval(n)?;
    state.mu = companion_update(state.mu, step, target);
    state.query_count += config.delta as u64;
    if !state.mu.is_finite() {
        state.diverged = true;
    }
    Ok(())
}

/// `θ̄ₙ = Σ cₖ²θₖ / Σ cₖ²` from the running accumulators.
pub fn averaged_theta(state: &RunState) -> Result<Vec<f64>> {
    let w = state.avg_weight_sum();
    if state.averaged_through == 0 || w <= 0.0 {
        return Err(Error::EmptyAverage);
    }
    Ok(state.avg_weighted_theta.iter().map(|s| s.value() / w).collect())
}

/// Averaged companion at `θ̄ₙ`: `μₙ₊₁ = (1 − 1/n)μₙ + (1/n)𝒴̄ₙ`.
pub fn mu_averaged_step(
    state: &mut RunState,
    config: &RunConfig,
    model: &RegressionModel,
    noise: &NoiseModel,
    stream: RandomStream,
) -> Result<()> {
    ensure_variant(config, Variant::AveragedFresh)?;
    ensure_live(state)?;
    let n = state.n;
    state.fold_average(config.c_seq.eval(n)?);
    let theta_bar = averaged_theta(state)?;
    let target = fresh_mean(&theta_bar, config.delta, n, model, noise, stream);
    state.mu = companion_update(state.mu, 1.0 / n as f64, target);
    state.query_count += config.delta as u64;
    if !state.mu.is_finite() {
        state.diverged = true;
    }
    Ok(())
}

/// State recorded after `n` completed iterations: `θₙ₊₁`, `μₙ₊₁`, `θ̄ₙ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub n: u64,
    pub theta: Vec<f64>,
    pub mu: f64,
    pub theta_bar: Vec<f64>,
    pub query_count: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryResult {
    pub replication: u64,
    pub final_state: RunState,
    pub snapshots: Vec<Snapshot>,
    pub query_count: u64,
    pub diverged: bool,
}

impl TrajectoryResult {
    /// `θ̄` at the horizon (the average over every completed iteration).
    pub fn theta_bar(&self) -> Option<Vec<f64>> {
        averaged_theta(&self.final_state).ok()
    }
}

/// Runs iterations `first_index..=horizon`. A divergent replication stops
/// early and comes back flagged rather than as an error.
pub fn run_trajectory(
    config: &RunConfig,
    model: &RegressionModel,
    noise: &NoiseModel,
    seed: u64,
    replication_index: u64,
) -> Result<TrajectoryResult> {
    config.validate()?;
    if config.dimension() != model.dimension() {
        return Err(Error::DimensionMismatch {
            expected: model.dimension(),
            actual: config.dimension(),
        });
    }
    let stream = RandomStream::new(seed, replication_index);
    let mut state = RunState::new(config);
    let mut obs = IterationObservations::with_dimension(config.dimension());
    let mut snapshots = Vec::with_capacity(config.record_schedule.len());
    let mut pending = config.record_schedule.iter().copied().peekable();

    for n in config.first_index()..=config.horizon {
        match config.variant {
            Variant::SharedObs => {
                kwb_step_into(&mut state, config, model, noise, stream, &mut obs)?;
                mu_shared_step(&mut state, &obs, config)?;
            }
            Variant::FreshObs => {
                mu_fresh_step(&mut state, config, model, noise, stream)?;
                kwb_step_into(&mut state, config, model, noise, stream, &mut obs)?;
            }
            Variant::AveragedFresh => {
                mu_averaged_step(&mut state, config, model, noise, stream)?;
                kwb_step_into(&mut state, config, model, noise, stream, &mut obs)?;
            }
        }
        if state.diverged {
            break;
        }
        while pending.next_if(|&s| s < n).is_some() {}
        if pending.next_if_eq(&n).is_some() {
            snapshots.push(Snapshot {
                n,
                theta: state.theta.clone(),
                mu: state.mu,
                theta_bar: averaged_theta(&state)?,
                query_count: state.query_count,
            });
        }
    }

    Ok(TrajectoryResult {
        replication: replication_index,
        query_count: state.query_count,
        diverged: state.diverged,
        final_state: state,
        snapshots,
    })
}
