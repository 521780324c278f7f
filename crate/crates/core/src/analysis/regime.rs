use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::LimitConstants;
use crate::algorithms::{RunConfig, Variant};
use crate::linalg::{self, serde_rows};
use crate::sequences::{limit_ratio, Exponent, LimitValue, ParamSequence};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theorem {
    /// Shared-observation companion.
    T1,
    /// Fresh-observation companion.
    T2,
    /// Averaged maximizer with fresh observations at `θ̄ₙ`.
    T3,
}

/// Which location estimate the θ-component of the prediction refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaTarget {
    Theta,
    ThetaBar,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LimitLaw {
    /// Convergence in probability to a point.
    Degenerate { point: Vec<f64> },
    Gaussian {
        mean: Vec<f64>,
        #[serde(with = "serde_rows")]
        cov: DMatrix<f64>,
    },
}

impl LimitLaw {
    pub fn mean(&self) -> &[f64] {
        match self {
            LimitLaw::Degenerate { point } => point,
            LimitLaw::Gaussian { mean, .. } => mean,
        }
    }

    /// Covariance, zero for a degenerate law.
    pub fn covariance(&self) -> DMatrix<f64> {
        match self {
            LimitLaw::Degenerate { point } => DMatrix::zeros(point.len(), point.len()),
            LimitLaw::Gaussian { cov, .. } => cov.clone(),
        }
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self, LimitLaw::Degenerate { .. })
    }

    pub fn dimension(&self) -> usize {
        self.mean().len()
    }

    fn scalar_gaussian(mean: f64, var: f64) -> Self {
        LimitLaw::Gaussian {
            mean: vec![mean],
            cov: DMatrix::from_element(1, 1, var),
        }
    }
}

/// Predicted joint limit of the scaled errors
/// `(rate_θ(n)·(θₙ − θ), rate_μ(n)·(μₙ − μ))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticPrediction {
    pub theorem: Theorem,
    pub part: u8,
    pub gamma1: LimitValue,
    /// `lim ãₙ⁻¹cₙ⁴`; only the shared companion splits on it.
    pub gamma2: Option<LimitValue>,
    pub theta_target: ThetaTarget,
    pub theta_rate: ParamSequence,
    pub mu_rate: ParamSequence,
    pub theta_limit: LimitLaw,
    pub mu_limit: LimitLaw,
}

impl AsymptoticPrediction {
    pub fn dimension(&self) -> usize {
        self.theta_limit.dimension()
    }
}

fn half() -> Exponent {
    Exponent::new(1, 2)
}

/// `√(aₙ⁻¹cₙ²)`.
fn gaussian_theta_rate(config: &RunConfig) -> ParamSequence {
    config.a_seq.recip().mul(&config.c_seq.powr(Exponent::from_integer(2))).powr(half())
}

/// `cₙ⁻²`.
fn bias_rate(config: &RunConfig) -> ParamSequence {
    config.c_seq.powr(Exponent::from_integer(-2))
}

/// `√(ãₙ⁻¹)`.
fn gaussian_mu_rate(config: &RunConfig) -> ParamSequence {
    config.atilde_seq.powr(-half())
}

fn sqrt_limit(limit: LimitValue) -> f64 {
    limit.value().map_or(0.0, f64::sqrt)
}

fn scaled(v: &[f64], s: f64) -> Vec<f64> {
    v.iter().map(|x| x * s).collect()
}

/// `lim aₙ⁻¹cₙ⁶`.
pub(crate) fn gamma1_of(config: &RunConfig) -> LimitValue {
    limit_ratio(&[(&config.c_seq, Exponent::from_integer(6))], &[(&config.a_seq, Exponent::from_integer(1))])
}

/// `lim ãₙ⁻¹cₙ⁴`.
pub(crate) fn gamma2_of(config: &RunConfig) -> LimitValue {
    limit_ratio(&[(&config.c_seq, Exponent::from_integer(4))], &[(&config.atilde_seq, Exponent::from_integer(1))])
}

/// `lim n·cₙ⁶`.
pub(crate) fn averaged_gamma_of(config: &RunConfig) -> LimitValue {
    let n = ParamSequence::identity();
    limit_ratio(&[(&n, Exponent::from_integer(1)), (&config.c_seq, Exponent::from_integer(6))], &[])
}

pub fn classify_regime(config: &RunConfig, constants: &LimitConstants) -> Result<AsymptoticPrediction> {
    let d = config.dimension();
    if constants.dimension() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: constants.dimension(),
        });
    }
    let gamma1 = gamma1_of(config);
    let theta_gaussian = || LimitLaw::Gaussian {
        mean: scaled(&constants.delta_theta, sqrt_limit(gamma1)),
        cov: constants.sigma_theta.clone(),
    };
    let theta_bias = || LimitLaw::Degenerate {
        point: constants.delta_theta.clone(),
    };

    match config.variant {
        Variant::SharedObs => {
            let gamma2 = gamma2_of(config);
            let (part, theta_rate, theta_limit) = if gamma1.is_infinite() {
                (1, bias_rate(config), theta_bias())
            } else {
                (2, gaussian_theta_rate(config), theta_gaussian())
            };
            let (part, mu_rate, mu_limit) = if gamma2.is_infinite() {
                (part, bias_rate(config), LimitLaw::Degenerate {
                    point: vec![constants.delta_mu],
                })
            } else {
                let mean = sqrt_limit(gamma2) * constants.delta_mu;
                (part + 2, gaussian_mu_rate(config), LimitLaw::scalar_gaussian(mean, constants.sigma_mu))
            };
            Ok(AsymptoticPrediction {
                theorem: Theorem::T1,
                part,
                gamma1,
                gamma2: Some(gamma2),
                theta_target: ThetaTarget::Theta,
                theta_rate,
                mu_rate,
                theta_limit,
                mu_limit,
            })
        }
        Variant::FreshObs => {
            let (part, theta_rate, theta_limit) = if gamma1.is_infinite() {
                (1, bias_rate(config), theta_bias())
            } else {
                (2, gaussian_theta_rate(config), theta_gaussian())
            };
            Ok(AsymptoticPrediction {
                theorem: Theorem::T2,
                part,
                gamma1,
                gamma2: None,
                theta_target: ThetaTarget::Theta,
                theta_rate,
                mu_rate: gaussian_mu_rate(config),
                theta_limit,
                mu_limit: LimitLaw::scalar_gaussian(0.0, constants.sigma_mu),
            })
        }
        Variant::AveragedFresh => classify_averaged(config, constants),
    }
}

fn classify_averaged(config: &RunConfig, constants: &LimitConstants) -> Result<AsymptoticPrediction> {
    if !config.atilde_seq.is_harmonic() {
        return Err(Error::Unclassifiable("averaged variant needs ãₙ = n⁻¹".into()));
    }
    let g_inv = linalg::symmetric_inverse(&constants.hessian)
        .ok_or_else(|| Error::SingularShift("D²f(θ) is ill-conditioned".into()))?;
    let g_inv2 = &g_inv * &g_inv;
    let g_inv_r = &g_inv * DVector::from_column_slice(&constants.r_theta);
    let tau = constants.tau;
    let sigma2 = constants.sigma2;
    let gamma1 = averaged_gamma_of(config);
    let root_n = ParamSequence::identity().powr(half());
    let efficient_rate = ParamSequence::identity()
        .mul(&config.c_seq.powr(Exponent::from_integer(2)))
        .powr(half());

    let (part, theta_rate, theta_limit) = match gamma1 {
        LimitValue::Infinite => {
            if (1.0 - 4.0 * tau).abs() < f64::EPSILON {
                return Err(Error::Unclassifiable("τ = 1/4 leaves the averaged bias undefined".into()));
            }
            let factor = -(1.0 - 2.0 * tau) / (1.0 - 4.0 * tau);
            (1, bias_rate(config), LimitLaw::Degenerate {
                point: (g_inv_r * factor).as_slice().to_vec(),
            })
        }
        LimitValue::Zero => (2, efficient_rate, LimitLaw::Gaussian {
            mean: vec![0.0; config.dimension()],
            cov: g_inv2 * ((1.0 - 2.0 * tau) * sigma2 / 2.0),
        }),
        LimitValue::Finite(g) => {
            let cube_root = g.cbrt();
            (3, efficient_rate, LimitLaw::Gaussian {
                mean: (g_inv_r * (-2.0 * cube_root)).as_slice().to_vec(),
                cov: g_inv2 * (cube_root * sigma2 / 3.0),
            })
        }
    };
    Ok(AsymptoticPrediction {
        theorem: Theorem::T3,
        part,
        gamma1,
        gamma2: None,
        theta_target: ThetaTarget::ThetaBar,
        theta_rate,
        mu_rate: root_n,
        theta_limit,
        mu_limit: LimitLaw::scalar_gaussian(0.0, sigma2 / constants.delta as f64),
    })
}

/// Mean and covariance of the stacked limit `(θ-part, μ-part)`; degenerate
/// blocks contribute zero covariance and the cross block is always zero.
pub fn predicted_scaled_moments(pred: &AsymptoticPrediction) -> (DVector<f64>, DMatrix<f64>) {
    let d = pred.dimension();
    let mut mean = DVector::zeros(d + 1);
    mean.rows_mut(0, d).copy_from_slice(pred.theta_limit.mean());
    mean[d] = pred.mu_limit.mean()[0];
    let mut cov = DMatrix::zeros(d + 1, d + 1);
    cov.view_mut((0, 0), (d, d)).copy_from(&pred.theta_limit.covariance());
    cov[(d, d)] = pred.mu_limit.covariance()[(0, 0)];
    (mean, cov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::compute_constants;
    use crate::models::{NoiseModel, RegressionModel};

    fn seq(s: &str) -> ParamSequence {
        s.parse().unwrap()
    }

    fn quad(d: usize) -> RegressionModel {
        RegressionModel::quadratic(DMatrix::identity(d, d), vec![0.0; d], 0.0).unwrap()
    }

    fn predict(config: &RunConfig, model: &RegressionModel, sigma: f64) -> AsymptoticPrediction {
        let k = compute_constants(config, model, &NoiseModel::gaussian(sigma).unwrap()).unwrap();
        classify_regime(config, &k).unwrap()
    }

    fn rate_exponent(s: &ParamSequence) -> Exponent {
        s.gs_exponent()
    }

    #[test]
    fn fresh_harmonic_is_t2_part2() {
        let config = RunConfig::fresh(seq("n^-1"), seq("n^-1/6"), seq("n^-1"), 2, vec![0.0, 0.0], 10).unwrap();
        let pred = predict(&config, &quad(2), 1.0);
        assert_eq!((pred.theorem, pred.part), (Theorem::T2, 2));
        assert_eq!(pred.gamma1, LimitValue::Finite(1.0));
        assert_eq!(rate_exponent(&pred.theta_rate), Exponent::new(1, 3));
        assert_eq!(rate_exponent(&pred.mu_rate), Exponent::new(1, 2));
        let (mean, cov) = predicted_scaled_moments(&pred);
        assert_eq!(mean, DVector::zeros(3));
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![0.375, 0.375, 0.5]));
        assert!((cov - expected).amax() < 1e-14);
    }

    #[test]
    fn shared_harmonic_is_t1_part2() {
        let config = RunConfig::shared(seq("n^-1"), seq("n^-1/6"), seq("n^-1"), vec![1], vec![0.0], 10).unwrap();
        let pred = predict(&config, &quad(1), 1.0);
        assert_eq!((pred.theorem, pred.part), (Theorem::T1, 2));
        assert_eq!(pred.gamma1, LimitValue::Finite(1.0));
        assert_eq!(pred.gamma2, Some(LimitValue::Infinite));
        assert!(matches!(pred.theta_limit, LimitLaw::Gaussian { .. }));
        assert!(pred.mu_limit.is_degenerate());
        assert!((pred.mu_limit.mean()[0] + 0.75).abs() < 1e-15);
        assert_eq!(rate_exponent(&pred.theta_rate), Exponent::new(1, 3));
        assert_eq!(pred.mu_rate, seq("n^1/3"));
    }

    #[test]
    fn averaged_efficient_is_t3_part3() {
        let c0: f64 = 1.5;
        let config =
            RunConfig::averaged(seq("n^-0.9"), ParamSequence::power_law(c0, Exponent::new(-1, 6)).unwrap(), 1, vec![0.0], 10)
                .unwrap();
        let pred = predict(&config, &quad(1), 1.0);
        assert_eq!((pred.theorem, pred.part), (Theorem::T3, 3));
        let g = pred.gamma1.value().unwrap();
        assert!((g - c0.powi(6)).abs() < 1e-12);
        assert_eq!(pred.theta_target, ThetaTarget::ThetaBar);
        assert_eq!(rate_exponent(&pred.theta_rate), Exponent::new(1, 3));
        let (_, cov) = predicted_scaled_moments(&pred);
        assert!((cov[(0, 0)] - c0 * c0 / 3.0).abs() < 1e-12);
        assert_eq!(cov[(1, 1)], 1.0);
    }

    #[test]
    fn averaged_parts_one_and_two() {
        let model = RegressionModel::cubic_perturbed(0.0, 0.0, 0.05, 1.0).unwrap();
        let config = RunConfig::averaged(seq("n^-0.9"), seq("n^-1/8"), 1, vec![0.0], 10).unwrap();
        let pred = predict(&config, &model, 1.0);
        assert_eq!(pred.part, 1);
        // −((1 − 1/4)/(1 − 1/2))·(−1)⁻¹·β.
        assert!((pred.theta_limit.mean()[0] - 1.5 * 0.05).abs() < 1e-6);
        assert!(pred.theta_limit.is_degenerate());

        let config = RunConfig::averaged(seq("n^-0.9"), seq("n^-1/5"), 2, vec![0.0], 10).unwrap();
        let pred = predict(&config, &quad(1), 2.0);
        assert_eq!(pred.part, 2);
        let (mean, cov) = predicted_scaled_moments(&pred);
        assert_eq!(mean, DVector::zeros(2));
        assert!((cov[(0, 0)] - (1.0 - 0.4) * 4.0 / 2.0).abs() < 1e-12);
        assert_eq!(cov[(1, 1)], 2.0);
    }

    #[test]
    fn shared_four_way_split_is_exhaustive() {
        // (γ₁, γ₂) over {∞, bounded}².
        let cases = [
            ("n^-1", "n^-1/8", "n^-1", 1),
            ("n^-1", "n^-1/6", "n^-1", 2),
            ("n^-1", "n^-1/8", "n^-1/2", 3),
            ("n^-1", "n^-1/6", "n^-2/3", 4),
        ];
        for (a, c, at, part) in cases {
            let config = RunConfig::shared(seq(a), seq(c), seq(at), vec![1], vec![0.0], 10).unwrap();
            let k = compute_constants(&config, &quad(1), &NoiseModel::gaussian(1.0).unwrap());
            let pred = classify_regime(&config, &k.unwrap()).unwrap();
            assert_eq!(pred.part, part, "{a} {c} {at}");
            let (_, cov) = predicted_scaled_moments(&pred);
            assert_eq!(cov[(0, 1)], 0.0);
        }
    }

    #[test]
    fn t1_part1_is_fully_degenerate() {
        let model = RegressionModel::cubic_perturbed(0.0, 0.0, 0.05, 1.0).unwrap();
        let config = RunConfig::shared(seq("n^-1"), seq("n^-1/8"), seq("n^-1"), vec![1], vec![0.0], 10).unwrap();
        let k = compute_constants(&config, &model, &NoiseModel::gaussian(1.0).unwrap()).unwrap();
        let pred = classify_regime(&config, &k).unwrap();
        assert_eq!(pred.part, 1);
        let (mean, cov) = predicted_scaled_moments(&pred);
        assert_eq!(mean.as_slice(), &[k.delta_theta[0], k.delta_mu]);
        assert_eq!(cov, DMatrix::zeros(2, 2));
    }

    #[test]
    fn t2_gamma1_uses_limit_ratio() {
        let config = RunConfig::fresh(seq("0.5*n^-1"), seq("2*n^-1/6"), seq("n^-1"), 1, vec![0.0], 10).unwrap();
        let pred = predict(&config, &RegressionModel::quadratic(DMatrix::from_element(1, 1, 4.0), vec![0.0], 0.0).unwrap(), 1.0);
        let direct = limit_ratio(&[(&config.c_seq, Exponent::from_integer(6))], &[(&config.a_seq, Exponent::from_integer(1))]);
        assert_eq!(pred.gamma1, direct);
        assert_eq!(pred.gamma1, LimitValue::Finite(128.0));
    }

    #[test]
    fn mismatched_dimension_is_rejected() {
        let config = RunConfig::fresh(seq("n^-1"), seq("n^-1/6"), seq("n^-1"), 1, vec![0.0], 10).unwrap();
        let k = compute_constants(&config, &quad(1), &NoiseModel::gaussian(1.0).unwrap()).unwrap();
        let mut other = config.clone();
        other.theta_init = vec![0.0, 0.0];
        assert!(matches!(classify_regime(&other, &k), Err(Error::DimensionMismatch { .. })));
    }
}
