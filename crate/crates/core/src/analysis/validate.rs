use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::regime::gamma2_of;
use super::tau_of;
use crate::algorithms::{RunConfig, Variant};
use crate::linalg;
use crate::models::{NoiseModel, RegressionModel};
use crate::sequences::{exponent_to_f64, AsymptoticOrder, Exponent, LimitValue, LogPoint, ParamSequence, SumGrowth};
use crate::sum::CompensatedSum;

/// Relative guard band for strict inequalities decided in floating point.
pub const GUARD_BAND: f64 = 1e-12;
/// Index at which single-point numeric witnesses are evaluated.
const WITNESS_N: u64 = 1_000_000;
/// Grid for the numeric witness of the averaged partial-sum ratio.
const RATIO_GRID: [u64; 4] = [10_000, 100_000, 1_000_000, 10_000_000];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Unknown,
    /// Taken on the model's word; not decidable from a black box.
    Declared,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    pub status: CheckStatus,
    /// Advisory checks never affect the overall verdict.
    pub required: bool,
    pub detail: String,
    pub witness: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub hint: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckRecord>,
    pub warnings: Vec<String>,
    pub passed: bool,
}

impl ValidationReport {
    fn from_checks(checks: Vec<CheckRecord>, warnings: Vec<String>) -> Self {
        let passed = checks
            .iter()
            .filter(|c| c.required)
            .all(|c| matches!(c.status, CheckStatus::Pass | CheckStatus::Declared));
        ValidationReport {
            checks,
            warnings,
            passed,
        }
    }

    pub fn check(&self, id: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn status(&self, id: &str) -> Option<CheckStatus> {
        self.check(id).map(|c| c.status)
    }

    /// Required checks that did not pass.
    pub fn blocking(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks
            .iter()
            .filter(|c| c.required && !matches!(c.status, CheckStatus::Pass | CheckStatus::Declared))
    }
}

struct Check {
    record: CheckRecord,
}

impl Check {
    fn new(id: &str, detail: impl Into<String>) -> Self {
        Check {
            record: CheckRecord {
                id: id.to_string(),
                status: CheckStatus::Unknown,
                required: true,
                detail: detail.into(),
                witness: BTreeMap::new(),
                hint: None,
            },
        }
    }

    fn witness(mut self, name: &str, value: f64) -> Self {
        self.record.witness.insert(name.to_string(), value);
        self
    }

    fn advisory(mut self) -> Self {
        self.record.required = false;
        self
    }

    fn hint(mut self, hint: impl Into<String>) -> Self {
        self.record.hint = Some(hint.into());
        self
    }

    fn status(mut self, status: CheckStatus) -> CheckRecord {
        self.record.status = status;
        self.record
    }

    fn decide(self, ok: bool) -> CheckRecord {
        self.status(if ok { CheckStatus::Pass } else { CheckStatus::Fail })
    }
}

fn limit_f64(limit: LimitValue) -> f64 {
    match limit {
        LimitValue::Zero => 0.0,
        LimitValue::Finite(v) => v,
        LimitValue::Infinite => f64::INFINITY,
    }
}

/// `lim ∈ ]threshold, ∞]`, strict with a relative guard band.
fn limit_exceeds(limit: LimitValue, threshold: f64) -> bool {
    match limit {
        LimitValue::Infinite => true,
        LimitValue::Zero => threshold < 0.0,
        LimitValue::Finite(v) => v - threshold > GUARD_BAND * threshold.abs().max(1.0),
    }
}

fn half() -> Exponent {
    Exponent::new(1, 2)
}

/// Order of `log(Σ_{k≤n} aₖ)`; a convergent sum has a bounded log.
fn log_partial_sum_order(a: &ParamSequence) -> Option<AsymptoticOrder> {
    match a.order().partial_sum()? {
        SumGrowth::Convergent => Some(AsymptoticOrder::zero()),
        SumGrowth::Divergent(o) => o.log(),
    }
}

fn tends_to_zero(order: AsymptoticOrder) -> bool {
    order.sign() == Ordering::Less
}

fn tends_to_infinity(order: AsymptoticOrder) -> bool {
    order.sign() == Ordering::Greater
}

/// `aₙ·log(sₙ)` at `n`, with `sₙ` summed from the first index.
fn a_log_s(a: &ParamSequence, n: u64) -> f64 {
    let s = a.partial_sum(n).unwrap_or(f64::NAN);
    a.eval(n).unwrap_or(f64::NAN) * s.ln()
}

fn exponent_check(id: &str, name: &str, exponent: Exponent, m: f64) -> CheckRecord {
    let floor = Exponent::new(1, 2);
    let ok = exponent > floor && exponent <= Exponent::from_integer(1) && {
        let e = exponent_to_f64(exponent);
        e - 2.0 / m > GUARD_BAND
    };
    Check::new(id, format!("{name} ∈ ]max{{1/2, 2/m}}, 1]"))
        .witness(name, exponent_to_f64(exponent))
        .witness("lower_bound", (0.5f64).max(2.0 / m))
        .decide(ok)
}

pub fn validate_assumptions(config: &RunConfig, model: &RegressionModel, noise: &NoiseModel) -> ValidationReport {
    let mut checks = Vec::new();
    let mut warnings = Vec::new();
    let a = &config.a_seq;
    let c = &config.c_seq;
    let at = &config.atilde_seq;
    let alpha = -a.gs_exponent();
    let tau = tau_of(c);
    let alpha_tilde = -at.gs_exponent();
    let tau_f = exponent_to_f64(tau);
    let m = noise.moment_order_m;

    // (A2)
    let max_eig = linalg::max_eigenvalue(model.hessian_at_theta());
    let l_theta = -max_eig;
    checks.push(
        Check::new("A2", "D²f(θ) negative definite")
            .witness("max_eigenvalue", max_eig)
            .witness("L_theta", l_theta)
            .decide(max_eig < 0.0),
    );

    // (A3)
    checks.push(
        Check::new("A3", format!("homoskedastic {:?} noise with σ > 0 and m > 2", noise.family))
            .witness("sigma", noise.sigma)
            .witness("m", m)
            .decide(noise.sigma > 0.0 && m > 2.0),
    );

    checks.push(exponent_check("A4(i)", "alpha", alpha, m));

    checks.push(
        Check::new("A4(ii)", "τ ∈ ]0, α/2[")
            .witness("tau", tau_f)
            .witness("alpha_half", exponent_to_f64(alpha / 2))
            .decide(tau > Exponent::from_integer(0) && tau < alpha / 2),
    );

    // (A4)(iii)
    let na = a.limit_n_times();
    let check = Check::new("A4(iii)", "lim n·aₙ ∈ ]max{(1−2τ)/(2L), 2τ/L}, ∞]").witness("lim_n_a", limit_f64(na));
    checks.push(if l_theta > 0.0 {
        let threshold = ((1.0 - 2.0 * tau_f) / (2.0 * l_theta)).max(2.0 * tau_f / l_theta);
        check.witness("threshold", threshold).decide(limit_exceeds(na, threshold))
    } else {
        check.status(CheckStatus::Unknown)
    });

    checks.push(exponent_check("A4(iv)", "alpha_tilde", alpha_tilde, m));

    checks.push(check_a4_v(config, alpha, tau, alpha_tilde));

    let nat = at.limit_n_times();
    checks.push(
        Check::new("A4(vi)", "lim n·ãₙ ∈ ]1/2, ∞]")
            .witness("lim_n_atilde", limit_f64(nat))
            .decide(limit_exceeds(nat, 0.5)),
    );

    if config.variant == Variant::AveragedFresh {
        checks.extend(check_a5(config));
    }

    // A1: declared by the model, supported by exponent conditions.
    let flags = model.a1_flags();
    checks.push(
        Check::new("A1", "θₙ → θ a.s.; declared model conditions")
            .witness("separated_maximum", flags.separated_maximum as u8 as f64)
            .witness("bounded_hessian", flags.bounded_hessian as u8 as f64)
            .witness("gradient_bounded_below", flags.gradient_bounded_below as u8 as f64)
            .advisory()
            .status(if flags.all() { CheckStatus::Declared } else { CheckStatus::Unknown }),
    );
    let sum = alpha + tau;
    let gap = (alpha - tau) * 2;
    let supported = sum > Exponent::from_integer(1) && gap > Exponent::from_integer(1);
    checks.push(
        Check::new("A1-supporting", "α + τ > 1 and 2(α − τ) > 1")
            .witness("alpha_plus_tau", exponent_to_f64(sum))
            .witness("two_alpha_minus_tau", exponent_to_f64(gap))
            .advisory()
            .decide(supported),
    );
    if !flags.all() {
        warnings.push("A1: the model does not declare the conditions that ensure θₙ → θ".into());
    }
    if !supported {
        warnings.push(format!(
            "A1: exponent conditions α + τ > 1, 2(α − τ) > 1 not met (α = {alpha}, τ = {tau}); convergence is assumed"
        ));
    }

    ValidationReport::from_checks(checks, warnings)
}

fn check_a4_v(config: &RunConfig, alpha: Exponent, tau: Exponent, alpha_tilde: Exponent) -> CheckRecord {
    let a = &config.a_seq;
    let c = &config.c_seq;
    let at = &config.atilde_seq;
    let shared = config.variant == Variant::SharedObs;
    // lim ãₙ⁻¹bₙ⁴, with bₙ = cₙ for the shared companion and 0 otherwise.
    let b_limit = if shared { gamma2_of(config) } else { LimitValue::Zero };
    let mut check = Check::new("A4(v)", "step-size balance for the μ recursion").witness("lim_atilde_inv_b4", limit_f64(b_limit));

    let Some(log_s) = log_partial_sum_order(a) else {
        return check.status(CheckStatus::Unknown);
    };
    let (oa, oc, oat) = (a.order(), c.order(), at.order());
    let n = WITNESS_N;
    let eval = |s: &ParamSequence| s.eval(n).unwrap_or(f64::NAN);

    let (ok, window) = if b_limit == LimitValue::Zero {
        let first = oa + log_s - oc * Exponent::from_integer(2) - oat * half();
        let second = oc * Exponent::from_integer(8) - oat;
        check = check
            .witness("atilde^-1/2*a*log(s)/c^2 at 1e6", a_log_s(a, n) / (eval(at).sqrt() * eval(c).powi(2)))
            .witness("atilde^-1*c^8 at 1e6", eval(c).powi(8) / eval(at));
        let window = (alpha_tilde / 8 < tau && tau < alpha / 2 - alpha_tilde / 4, "α̃/8 < τ < α/2 − α̃/4");
        (tends_to_zero(first) && tends_to_zero(second), window)
    } else {
        let summable = matches!(
            (oat + oc * Exponent::from_integer(4)).partial_sum(),
            Some(SumGrowth::Convergent)
        );
        let second = oa + log_s - oc * Exponent::from_integer(4);
        check = check
            .witness("sum atilde*b^4 converges", summable as u8 as f64)
            .witness("a*log(s)/c^4 at 1e6", a_log_s(a, n) / eval(c).powi(4));
        let window = ((Exponent::from_integer(1) - alpha_tilde) / 4 < tau && tau < alpha / 4, "(1 − α̃)/4 < τ < α/4");
        (summable && tends_to_zero(second), window)
    };
    if !ok {
        let (inside, text) = window;
        let verdict = if inside { "inside" } else { "outside" };
        check = check.hint(format!("sufficient window {text}: τ = {tau} is {verdict}"));
    }
    check.decide(ok)
}

fn check_a5(config: &RunConfig) -> Vec<CheckRecord> {
    let a = &config.a_seq;
    let c = &config.c_seq;
    let (oa, oc) = (a.order(), c.order());
    let log_s = log_partial_sum_order(a);
    let mut out = Vec::new();

    // (i) n·aₙ / log(sₙ) → ∞
    let check = Check::new("A5(i)", "n·aₙ / log(sₙ) → ∞")
        .witness("n*a/log(s) at 1e6", WITNESS_N as f64 * a.eval(WITNESS_N).unwrap_or(f64::NAN) / a.partial_sum(WITNESS_N).unwrap_or(f64::NAN).ln());
    out.push(match log_s {
        Some(l) => check.decide(tends_to_infinity(oa + AsymptoticOrder::unit(0) - l)),
        None => check.status(CheckStatus::Unknown),
    });

    // (ii) Σ aₖ log(sₖ) / √(Σ cₖ²) → 0, decided on orders; the grid values
    // are reported alongside.
    let mut check = Check::new("A5(ii)", "Σₖ aₖ log(sₖ) / √(Σₖ cₖ²) → 0");
    let ratios = averaged_ratio_grid(config);
    for (n, r) in RATIO_GRID.iter().zip(&ratios) {
        check = check.witness(&format!("ratio at {n:.0e}"), *r);
    }
    let monotone_small = ratios.windows(2).all(|w| w[1] < w[0]) && ratios.last().is_some_and(|r| r.abs() < 0.05);
    check = check.witness("grid monotone and below 0.05", monotone_small as u8 as f64);
    let numerator = log_s.and_then(|l| (oa + l).partial_sum());
    let denominator = (oc * Exponent::from_integer(2)).partial_sum();
    out.push(match (numerator, denominator) {
        (Some(num), Some(SumGrowth::Divergent(den))) => {
            let den = den * half();
            let ok = match num {
                SumGrowth::Convergent => true,
                SumGrowth::Divergent(num) => num < den,
            };
            check.decide(ok)
        }
        (Some(_), Some(SumGrowth::Convergent)) => check.decide(false),
        _ => check.status(CheckStatus::Unknown),
    });

    // (iii) n·aₙ²·cₙ⁻⁶ → ∞
    let n = WITNESS_N;
    let value = n as f64 * a.eval(n).unwrap_or(f64::NAN).powi(2) / c.eval(n).unwrap_or(f64::NAN).powi(6);
    out.push(
        Check::new("A5(iii)", "n·aₙ²·cₙ⁻⁶ → ∞")
            .witness("n*a^2*c^-6 at 1e6", value)
            .decide(tends_to_infinity(
                AsymptoticOrder::unit(0) + oa * Exponent::from_integer(2) - oc * Exponent::from_integer(6),
            )),
    );
    out
}

/// `Σ aₖ log(sₖ) / √(Σ cₖ²)` at each grid point, in one pass.
fn averaged_ratio_grid(config: &RunConfig) -> Vec<f64> {
    let a = &config.a_seq;
    let c = &config.c_seq;
    let first = a.n_start().max(c.n_start());
    let mut s = CompensatedSum::default();
    let mut num = CompensatedSum::default();
    let mut den = CompensatedSum::default();
    let mut out = Vec::with_capacity(RATIO_GRID.len());
    let mut targets = RATIO_GRID.iter().peekable();
    // Partial sums of aₖ start at its own first index.
    let depth = a.log_depth().max(c.log_depth());
    for k in a.n_start()..first {
        s.add(a.eval_point(&LogPoint::at_depth(k, depth)));
    }
    for k in first..=RATIO_GRID[RATIO_GRID.len() - 1] {
        let p = LogPoint::at_depth(k, depth);
        let ak = a.eval_point(&p);
        s.add(ak);
        num.add(ak * s.value().ln());
        let ck = c.eval_point(&p);
        den.add(ck * ck);
        if targets.peek() == Some(&&k) {
            out.push(num.value() / den.value().sqrt());
            targets.next();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::compute_constants;
    use crate::models::BlumConditions;
    use nalgebra::DMatrix;

    fn seq(s: &str) -> ParamSequence {
        s.parse().unwrap()
    }

    fn quad(d: usize) -> RegressionModel {
        RegressionModel::quadratic(DMatrix::identity(d, d), vec![0.0; d], 0.0).unwrap()
    }

    fn fresh(a: &str, c: &str, at: &str) -> RunConfig {
        RunConfig::fresh(seq(a), seq(c), seq(at), 1, vec![0.0], 100).unwrap()
    }

    fn unit() -> NoiseModel {
        NoiseModel::gaussian(1.0).unwrap()
    }

    #[test]
    fn boundary_gain_fails_a4_iii() {
        let report = validate_assumptions(&fresh("1/3*n^-1", "n^-1/6", "n^-1"), &quad(1), &unit());
        assert_eq!(report.status("A4(iii)"), Some(CheckStatus::Fail));
        assert!(!report.passed);
        let report = validate_assumptions(&fresh("0.34*n^-1", "n^-1/6", "n^-1"), &quad(1), &unit());
        assert_eq!(report.status("A4(iii)"), Some(CheckStatus::Pass));
    }

    #[test]
    fn half_gain_companion_fails_a4_vi() {
        let report = validate_assumptions(&fresh("n^-1", "n^-1/6", "0.5*n^-1"), &quad(1), &unit());
        assert_eq!(report.status("A4(vi)"), Some(CheckStatus::Fail));
        assert!(!report.passed);
    }

    #[test]
    fn koval_schwabe_step_passes() {
        let report = validate_assumptions(&fresh("n^-1*log3^1", "n^-1/6", "n^-1"), &quad(1), &unit());
        for check in report.checks.iter().filter(|c| c.id.starts_with("A4")) {
            assert_eq!(check.status, CheckStatus::Pass, "{check:?}");
        }
        assert_eq!(report.check("A4(iii)").unwrap().witness["lim_n_a"], f64::INFINITY);
        assert!(report.passed);
    }

    #[test]
    fn reference_configurations_pass() {
        let configs = [
            fresh("n^-1", "n^-1/6", "n^-1"),
            RunConfig::shared(seq("n^-1"), seq("n^-1/6"), seq("n^-1"), vec![1], vec![0.0], 10).unwrap(),
            RunConfig::shared(seq("n^-1"), seq("n^-1/8"), seq("n^-1"), vec![1], vec![0.0], 10).unwrap(),
            RunConfig::averaged(seq("n^-0.9"), seq("n^-1/6"), 1, vec![0.0], 10).unwrap(),
            RunConfig::averaged(seq("n^-1*log^1"), seq("n^-1/6"), 1, vec![0.0], 10).unwrap(),
            RunConfig::averaged(seq("n^-1*loglog^2"), seq("n^-1/6"), 1, vec![0.0], 10).unwrap(),
        ];
        for config in &configs {
            let report = validate_assumptions(config, &quad(1), &unit());
            assert!(report.passed, "{config:?}\n{:#?}", report.blocking().collect::<Vec<_>>());
        }
    }

    #[test]
    fn averaged_ratio_is_decided_exactly() {
        let config = RunConfig::averaged(seq("n^-0.9"), seq("n^-1/6"), 1, vec![0.0], 10).unwrap();
        let report = validate_assumptions(&config, &quad(1), &unit());
        let check = report.check("A5(ii)").unwrap();
        assert_eq!(check.status, CheckStatus::Pass);
        assert_eq!(check.witness.len(), 5);
        // Σ n^{-1/2}·log n grows faster than √(Σ n^{-1/3}) = n^{1/3}.
        let config = RunConfig::averaged(seq("n^-1/2"), seq("n^-1/6"), 1, vec![0.0], 10).unwrap();
        let report = validate_assumptions(&config, &quad(1), &unit());
        assert_eq!(report.status("A5(ii)"), Some(CheckStatus::Fail));
    }

    #[test]
    fn averaged_conditions_reject_slow_decay() {
        // n·aₙ²·cₙ⁻⁶ = n^{1−2α+6τ}: α = 1 with τ = 1/6 gives n^0.
        let config = RunConfig::averaged(seq("n^-1"), seq("n^-1/6"), 1, vec![0.0], 10).unwrap();
        let report = validate_assumptions(&config, &quad(1), &unit());
        assert_eq!(report.status("A5(iii)"), Some(CheckStatus::Fail));
        assert_eq!(report.status("A5(i)"), Some(CheckStatus::Fail));
    }

    #[test]
    fn a4_v_uses_the_b_dichotomy() {
        // Shared, ãₙ⁻¹cₙ⁴ = n^{1/3} → ∞: needs Σ n^{-5/3} < ∞.
        let shared = RunConfig::shared(seq("n^-1"), seq("n^-1/6"), seq("n^-1"), vec![1], vec![0.0], 10).unwrap();
        let report = validate_assumptions(&shared, &quad(1), &unit());
        let check = report.check("A4(v)").unwrap();
        assert_eq!(check.status, CheckStatus::Pass);
        assert_eq!(check.witness["sum atilde*b^4 converges"], 1.0);

        // Shared with ãₙ = n^{-2/3}: Σ n^{-4/3} converges, aₙ log sₙ / cₙ⁴ = n^{-1/3}·loglog n → 0.
        let shared = RunConfig::shared(seq("n^-1"), seq("n^-1/6"), seq("n^-2/3"), vec![1], vec![0.0], 10).unwrap();
        assert_eq!(validate_assumptions(&shared, &quad(1), &unit()).status("A4(v)"), Some(CheckStatus::Pass));

        // Shared with ãₙ = n^{-1/2} and cₙ = n^{-1/10}: Σ n^{-9/10} diverges.
        let shared = RunConfig::shared(seq("n^-1"), seq("n^-1/10"), seq("n^-1/2"), vec![1], vec![0.0], 10).unwrap();
        let report = validate_assumptions(&shared, &quad(1), &unit());
        let check = report.check("A4(v)").unwrap();
        assert_eq!(check.status, CheckStatus::Fail);
        assert!(check.hint.as_deref().unwrap().contains("outside"));

        // Fresh: bₙ = 0, so ã^{-1/2}a log(s)/c² and ã⁻¹c⁸ must vanish.
        let report = validate_assumptions(&fresh("n^-1", "n^-1/6", "n^-1"), &quad(1), &unit());
        assert_eq!(report.status("A4(v)"), Some(CheckStatus::Pass));
        let report = validate_assumptions(&fresh("n^-0.6", "n^-0.29", "n^-1"), &quad(1), &unit());
        assert_eq!(report.status("A4(v)"), Some(CheckStatus::Fail));
    }

    #[test]
    fn noise_and_exponent_checks() {
        let report = validate_assumptions(&fresh("n^-1", "n^-1/6", "n^-1"), &quad(1), &NoiseModel::gaussian(0.0).unwrap());
        assert_eq!(report.status("A3"), Some(CheckStatus::Fail));
        let heavy = NoiseModel::new(1.0, crate::models::NoiseFamily::Gaussian, 3.0).unwrap();
        // α = 0.6 needs m > 2/0.6.
        let report = validate_assumptions(&fresh("n^-0.6", "n^-1/6", "n^-1"), &quad(1), &heavy);
        assert_eq!(report.status("A4(i)"), Some(CheckStatus::Fail));
        let report = validate_assumptions(&fresh("n^-1", "n^-1/2", "n^-1"), &quad(1), &unit());
        assert_eq!(report.status("A4(ii)"), Some(CheckStatus::Fail));
        let report = validate_assumptions(&fresh("n^-1", "n^-1/6", "n^-1/2"), &quad(1), &unit());
        assert_eq!(report.status("A4(iv)"), Some(CheckStatus::Fail));
    }

    #[test]
    fn a1_is_advisory() {
        let model = RegressionModel::from_fn(|x| -x[0] * x[0], vec![0.0], 0.0, BlumConditions { separated_maximum: false, ..BlumConditions::ALL }).unwrap();
        let report = validate_assumptions(&fresh("n^-1", "n^-1/6", "n^-1"), &model, &unit());
        assert_eq!(report.status("A1"), Some(CheckStatus::Unknown));
        assert!(report.passed);
        assert!(!report.warnings.is_empty());
        // α = 1, τ = 1/6 meets both exponent conditions.
        assert_eq!(report.status("A1-supporting"), Some(CheckStatus::Pass));
        let report = validate_assumptions(&fresh("n^-0.7", "n^-1/8", "n^-1"), &quad(1), &unit());
        assert_eq!(report.status("A1-supporting"), Some(CheckStatus::Fail));
        assert_eq!(report.status("A1"), Some(CheckStatus::Declared));
    }

    #[test]
    fn indefinite_hessian_fails_a2() {
        let model = RegressionModel::from_fn(|x| x[0] * x[0], vec![0.0], 0.0, BlumConditions::ALL).unwrap();
        let report = validate_assumptions(&fresh("n^-1", "n^-1/6", "n^-1"), &model, &unit());
        assert_eq!(report.status("A2"), Some(CheckStatus::Fail));
        assert_eq!(report.status("A4(iii)"), Some(CheckStatus::Unknown));
    }

    #[test]
    fn passing_a4_makes_constants_well_defined() {
        let q = DMatrix::from_row_slice(2, 2, &[0.8, 0.2, 0.2, 0.5]);
        let model = RegressionModel::quadratic(q, vec![0.0, 0.0], 0.0).unwrap();
        for a0 in [0.5, 0.8, 1.0, 1.2, 2.0, 4.0] {
            for at0 in [0.51, 0.75, 1.0, 3.0] {
                for tau in ["1/8", "1/6", "1/5"] {
                    let config = RunConfig::fresh(
                        seq(&format!("{a0}*n^-1")),
                        seq(&format!("n^-{tau}")),
                        seq(&format!("{at0}*n^-1")),
                        1,
                        vec![0.0, 0.0],
                        10,
                    )
                    .unwrap();
                    let report = validate_assumptions(&config, &model, &unit());
                    let a4_ok = report.checks.iter().filter(|c| c.id.starts_with("A4")).all(|c| c.status == CheckStatus::Pass);
                    let constants = compute_constants(&config, &model, &unit());
                    if a4_ok {
                        let k = constants.unwrap();
                        let shifted = model.hessian_at_theta() + DMatrix::identity(2, 2) * (k.xi_theta / 2.0);
                        assert!(linalg::max_eigenvalue(&shifted) < 0.0);
                        assert!(k.xi_mu < 2.0);
                    }
                }
            }
        }
    }
}
