use serde::{Deserialize, Serialize};

use super::stats::Moments;
use super::Tolerances;
use crate::analysis::{predicted_scaled_moments, AsymptoticPrediction};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    Mean,
    Variance,
    CrossCovariance,
    Skewness,
    Kurtosis,
}

/// One statistical comparison against the predicted limit law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    /// Component label: `theta_i`, `mu`, or `theta_i~mu` for cross terms.
    pub component: String,
    pub observed: f64,
    pub predicted: f64,
    /// Largest allowed `|observed − predicted|`.
    pub allowed: f64,
    pub passed: bool,
}

impl Verdict {
    fn new(kind: VerdictKind, component: String, observed: f64, predicted: f64, allowed: f64) -> Self {
        let passed = (observed - predicted).abs() <= allowed;
        Verdict {
            kind,
            component,
            observed,
            predicted,
            allowed,
            passed,
        }
    }
}

fn label(i: usize, d: usize) -> String {
    if i == d {
        "mu".to_string()
    } else {
        format!("theta_{}", i + 1)
    }
}

/// Tests empirical moments of the stacked scaled error `(θ-part, μ)`
/// against the prediction.
pub fn compare(moments: &Moments, pred: &AsymptoticPrediction, tol: &Tolerances) -> Result<Vec<Verdict>> {
    let d = pred.dimension();
    if moments.dimension() != d + 1 {
        return Err(Error::DimensionMismatch {
            expected: d + 1,
            actual: moments.dimension(),
        });
    }
    let (mean, cov) = predicted_scaled_moments(pred);
    let m = moments.count as f64;
    let degenerate = |i: usize| {
        if i == d {
            pred.mu_limit.is_degenerate()
        } else {
            pred.theta_limit.is_degenerate()
        }
    };
    let variance_tol = |i: usize| if i == d { tol.mu_variance_rel } else { tol.theta_variance_rel };
    let mut out = Vec::new();

    for i in 0..=d {
        let name = label(i, d);
        let observed = moments.mean[i];
        if degenerate(i) {
            let allowed = if mean[i] == 0.0 {
                tol.degenerate_abs
            } else {
                tol.degenerate_rel * mean[i].abs()
            };
            out.push(Verdict::new(VerdictKind::Mean, name, observed, mean[i], allowed));
            continue;
        }
        let se = if moments.covariance_defined {
            moments.standard_error(i)
        } else {
            f64::NAN
        };
        out.push(Verdict::new(VerdictKind::Mean, name.clone(), observed, mean[i], tol.z * se));

        let var = moments.variance(i);
        let predicted = cov[(i, i)];
        let allowed = if predicted > 0.0 {
            variance_tol(i) * predicted
        } else {
            tol.degenerate_abs * tol.degenerate_abs
        };
        out.push(Verdict::new(VerdictKind::Variance, name.clone(), var, predicted, allowed));

        let skew_se = (6.0 / m).sqrt();
        let kurt_se = (24.0 / m).sqrt();
        out.push(Verdict::new(VerdictKind::Skewness, name.clone(), moments.skewness[i], 0.0, tol.normality_z * skew_se));
        out.push(Verdict::new(VerdictKind::Kurtosis, name, moments.excess_kurtosis[i], 0.0, tol.normality_z * kurt_se));
    }

    // Every limit law is block diagonal between θ and μ.
    for i in 0..d {
        let c = moments.covariance[(i, d)];
        let se = ((moments.variance(i) * moments.variance(d) + c * c) / m).sqrt();
        out.push(Verdict::new(
            VerdictKind::CrossCovariance,
            format!("{}~mu", label(i, d)),
            c,
            0.0,
            tol.z * se,
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{LimitLaw, Theorem, ThetaTarget};
    use crate::harness::stats::moments;
    use crate::sequences::{LimitValue, ParamSequence};
    use nalgebra::DMatrix;

    fn gaussian_prediction() -> AsymptoticPrediction {
        AsymptoticPrediction {
            theorem: Theorem::T2,
            part: 2,
            gamma1: LimitValue::Finite(1.0),
            gamma2: None,
            theta_target: ThetaTarget::Theta,
            theta_rate: "n^1/3".parse().unwrap(),
            mu_rate: "n^1/2".parse::<ParamSequence>().unwrap(),
            theta_limit: LimitLaw::Gaussian {
                mean: vec![0.0],
                cov: DMatrix::from_element(1, 1, 0.375),
            },
            mu_limit: LimitLaw::Gaussian {
                mean: vec![0.0],
                cov: DMatrix::from_element(1, 1, 0.5),
            },
        }
    }

    fn fake_moments(mean: [f64; 2], var: [f64; 2], count: usize) -> Moments {
        let mut m = moments(&[vec![0.0, 0.0], vec![1.0, 1.0]]);
        m.count = count;
        m.mean = mean.to_vec();
        m.covariance = DMatrix::from_row_slice(2, 2, &[var[0], 0.0, 0.0, var[1]]);
        m.skewness = vec![0.0, 0.0];
        m.excess_kurtosis = vec![0.0, 0.0];
        m
    }

    #[test]
    fn exact_variance_passes() {
        let verdicts = compare(&fake_moments([0.0, 0.0], [0.375, 0.5], 2000), &gaussian_prediction(), &Tolerances::default()).unwrap();
        assert!(verdicts.iter().all(|v| v.passed), "{verdicts:#?}");
        let kinds: Vec<_> = verdicts.iter().map(|v| v.kind).collect();
        assert_eq!(kinds.iter().filter(|k| **k == VerdictKind::Variance).count(), 2);
        assert_eq!(kinds.iter().filter(|k| **k == VerdictKind::CrossCovariance).count(), 1);
    }

    #[test]
    fn mean_ten_standard_errors_off_fails() {
        let se = (0.5f64 / 2000.0).sqrt();
        let verdicts = compare(&fake_moments([0.0, 10.0 * se], [0.375, 0.5], 2000), &gaussian_prediction(), &Tolerances::default()).unwrap();
        let mu_mean = verdicts.iter().find(|v| v.kind == VerdictKind::Mean && v.component == "mu").unwrap();
        assert!(!mu_mean.passed);
    }

    #[test]
    fn degenerate_components_use_bands() {
        let mut pred = gaussian_prediction();
        pred.mu_limit = LimitLaw::Degenerate { point: vec![-0.75] };
        let tol = Tolerances::default();
        let inside = compare(&fake_moments([0.0, -0.8], [0.375, 0.01], 200), &pred, &tol).unwrap();
        let v = inside.iter().find(|v| v.component == "mu").unwrap();
        assert!(v.passed && (v.allowed - 0.15 * 0.75).abs() < 1e-15);
        assert_eq!(inside.iter().filter(|v| v.component == "mu").count(), 1);
        let outside = compare(&fake_moments([0.0, -0.5], [0.375, 0.01], 200), &pred, &tol).unwrap();
        assert!(!outside.iter().find(|v| v.component == "mu").unwrap().passed);

        pred.mu_limit = LimitLaw::Degenerate { point: vec![0.0] };
        let zero = compare(&fake_moments([0.0, 0.04], [0.375, 0.01], 200), &pred, &tol).unwrap();
        assert!(zero.iter().find(|v| v.component == "mu").unwrap().passed);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let m = moments(&[vec![0.0, 0.0, 0.0], vec![1.0, 1.0, 1.0]]);
        assert!(matches!(compare(&m, &gaussian_prediction(), &Tolerances::default()), Err(Error::DimensionMismatch { .. })));
    }
}
