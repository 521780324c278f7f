use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{inverse_limit, tau_of};
use crate::algorithms::{RunConfig, Variant};
use crate::linalg::{self, serde_rows};
use crate::models::{NoiseModel, RegressionModel};
use crate::sequences::exponent_to_f64;
use crate::{Error, Result};

/// Limit constants of the scaled errors for one configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitConstants {
    pub tau: f64,
    pub sigma2: f64,
    pub delta: usize,
    pub xi_theta: f64,
    pub zeta_theta: f64,
    pub xi_mu: f64,
    pub zeta_mu: f64,
    #[serde(rename = "L_theta")]
    pub l_theta: f64,
    /// `D²f(θ)`.
    #[serde(with = "serde_rows")]
    pub hessian: DMatrix<f64>,
    #[serde(rename = "Sigma_theta", with = "serde_rows")]
    pub sigma_theta: DMatrix<f64>,
    #[serde(rename = "Delta_theta")]
    pub delta_theta: Vec<f64>,
    #[serde(rename = "Sigma_mu")]
    pub sigma_mu: f64,
    #[serde(rename = "Delta_mu")]
    pub delta_mu: f64,
    #[serde(rename = "R_theta")]
    pub r_theta: Vec<f64>,
}

impl LimitConstants {
    pub fn dimension(&self) -> usize {
        self.delta_theta.len()
    }
}

/// `[D²f(θ) + (shift/2)·I]⁻¹`, which must exist and be negative definite.
fn shifted_inverse(hessian: &DMatrix<f64>, shift: f64, name: &str) -> Result<DMatrix<f64>> {
    let d = hessian.nrows();
    let shifted = hessian + DMatrix::identity(d, d) * (shift / 2.0);
    if !(linalg::max_eigenvalue(&shifted) < 0.0) {
        return Err(Error::SingularShift(format!(
            "D²f(θ) + {name}/2·I is not negative definite ({name} = {shift})"
        )));
    }
    linalg::symmetric_inverse(&shifted)
        .ok_or_else(|| Error::SingularShift(format!("D²f(θ) + {name}/2·I is ill-conditioned")))
}

pub fn compute_constants(config: &RunConfig, model: &RegressionModel, noise: &NoiseModel) -> Result<LimitConstants> {
    let d = model.dimension();
    if config.dimension() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: config.dimension(),
        });
    }
    let tau = exponent_to_f64(tau_of(&config.c_seq));
    let sigma2 = noise.variance();
    let delta = config.delta;

    let inv_na = inverse_limit(config.a_seq.limit_n_times());
    let inv_natilde = inverse_limit(config.atilde_seq.limit_n_times());
    if inv_na.is_infinite() || inv_natilde.is_infinite() {
        return Err(Error::SingularShift("n·aₙ or n·ãₙ tends to 0".into()));
    }
    let xi_theta = (1.0 - 2.0 * tau) * inv_na;
    let zeta_theta = 4.0 * tau * inv_na;
    let xi_mu = inv_natilde;
    let zeta_mu = 4.0 * tau * inv_natilde;

    let hessian = model.hessian_at_theta().clone();
    let l_theta = -linalg::max_eigenvalue(&hessian);
    let third = DVector::from_column_slice(model.third_diag_at_theta());

    let xi_inverse = shifted_inverse(&hessian, xi_theta, "ξθ")?;
    let mut sigma_theta = xi_inverse * (-sigma2 / 4.0);
    sigma_theta = (&sigma_theta + sigma_theta.transpose()) * 0.5;
    let zeta_inverse = shifted_inverse(&hessian, zeta_theta, "ζθ")?;
    let delta_theta = (zeta_inverse * &third * (-1.0 / 6.0)).as_slice().to_vec();

    if !(xi_mu < 2.0) {
        return Err(Error::SingularShift(format!("ξμ = {xi_mu} ≥ 2")));
    }
    let sigma_mu = sigma2 / (delta as f64 * (2.0 - xi_mu));
    let delta_mu = match config.variant {
        Variant::SharedObs => {
            if !(zeta_mu < 2.0) {
                return Err(Error::SingularShift(format!("ζμ = {zeta_mu} ≥ 2")));
            }
            let curvature: f64 = config.subset_indices().map(|i| hessian[(i, i)]).sum();
            2.0 / ((2.0 - zeta_mu) * delta as f64) * curvature
        }
        Variant::FreshObs | Variant::AveragedFresh => 0.0,
    };
    let r_theta = third.iter().map(|t| t / 6.0).collect();

    Ok(LimitConstants {
        tau,
        sigma2,
        delta,
        xi_theta,
        zeta_theta,
        xi_mu,
        zeta_mu,
        l_theta,
        hessian,
        sigma_theta,
        delta_theta,
        sigma_mu,
        delta_mu,
        r_theta,
    })
}
