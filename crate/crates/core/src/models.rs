//! Regression functions with a known maximizer, and homoskedastic
//! observation noise drawn from counter-keyed random streams.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand_core::RngCore;
use rand_distr::{Distribution, StandardNormal, StandardUniform};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Relative step for central-difference derivatives of user-supplied `f`.
pub const FD_STEP: f64 = 1e-4;
/// Third derivatives divide by `h³`; a smaller step is swamped by rounding.
pub const FD_STEP_THIRD: f64 = 1e-3;

type Objective = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Shape {
    /// `μ − ½(x−θ)ᵀQ(x−θ)`; `q` is row-major `d×d`.
    Quadratic { q: Vec<f64> },
    /// `μ − ½u² + βu³ − λu⁴` with `u = x − θ`, `d = 1`.
    CubicPerturbed { beta: f64, lambda: f64 },
    Custom(Objective),
}

/// Blum's global conditions guaranteeing almost sure convergence of the
/// maximizer recursion. Not decidable from a black-box `f`, so declared.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlumConditions {
    /// `sup_{‖x−θ‖≥δ} f(x) < f(θ)` for all `δ > 0`.
    pub separated_maximum: bool,
    /// `D²f` bounded.
    pub bounded_hessian: bool,
    /// `‖∇f‖` bounded below away from `θ`.
    pub gradient_bounded_below: bool,
}

impl BlumConditions {
    pub const ALL: BlumConditions = BlumConditions {
        separated_maximum: true,
        bounded_hessian: true,
        gradient_bounded_below: true,
    };

    pub fn all(&self) -> bool {
        self.separated_maximum && self.bounded_hessian && self.gradient_bounded_below
    }
}

/// A regression function `f` with its maximizer and local derivatives.
#[derive(Clone)]
pub struct RegressionModel {
    shape: Shape,
    theta_true: Vec<f64>,
    mu_true: f64,
    hessian_at_theta: DMatrix<f64>,
    third_diag_at_theta: Vec<f64>,
    a1_flags: BlumConditions,
}

impl fmt::Debug for RegressionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RegressionModel")
            .field("kind", &self.kind_name())
            .field("theta_true", &self.theta_true)
            .field("mu_true", &self.mu_true)
            .field("hessian_at_theta", &self.hessian_at_theta)
            .field("third_diag_at_theta", &self.third_diag_at_theta)
            .finish()
    }
}

impl RegressionModel {
    /// `f(x) = μ − ½(x−θ)ᵀQ(x−θ)` for a symmetric positive definite `Q`.
    pub fn quadratic(q: DMatrix<f64>, theta: Vec<f64>, mu: f64) -> Result<Self> {
        let d = theta.len();
        if d == 0 || q.nrows() != d || q.ncols() != d {
            return Err(Error::InvalidModel(format!(
                "Q must be {d}x{d}, got {}x{}",
                q.nrows(),
                q.ncols()
            )));
        }
        if !theta.iter().chain(q.iter()).all(|v| v.is_finite()) || !mu.is_finite() {
            return Err(Error::InvalidModel("non-finite parameter".into()));
        }
        let scale = q.amax().max(1.0);
        if (&q - q.transpose()).amax() > 1e-12 * scale {
            return Err(Error::InvalidModel("Q is not symmetric".into()));
        }
        if q.clone().cholesky().is_none() {
            return Err(Error::InvalidModel("Q is not positive definite".into()));
        }
        Ok(RegressionModel {
            shape: Shape::Quadratic {
                q: q.transpose().as_slice().to_vec(),
            },
            theta_true: theta,
            mu_true: mu,
            hessian_at_theta: -q,
            third_diag_at_theta: vec![0.0; d],
            a1_flags: BlumConditions::ALL,
        })
    }

    /// One-dimensional `f(x) = μ − ½u² + βu³ − λu⁴`, `u = x − θ`.
    ///
    /// Rejected unless a grid scan over `[θ−10, θ+10]` confirms `θ` is the
    /// unique maximizer and the only critical point.
    pub fn cubic_perturbed(theta: f64, mu: f64, beta: f64, lambda: f64) -> Result<Self> {
        if ![theta, mu, beta, lambda].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidModel("non-finite parameter".into()));
        }
        if lambda <= 0.0 {
            return Err(Error::InvalidModel(format!("lambda must be positive, got {lambda}")));
        }
        let f = |u: f64| -0.5 * u * u + beta * u.powi(3) - lambda * u.powi(4);
        let df = |u: f64| -u + 3.0 * beta * u * u - 4.0 * lambda * u.powi(3);
        const HALF_WIDTH: f64 = 10.0;
        const RESOLUTION: f64 = 1e-4;
        let steps = (2.0 * HALF_WIDTH / RESOLUTION).round() as i64;
        let mut best = (f64::NEG_INFINITY, 0.0);
        for k in 0..=steps {
            let u = -HALF_WIDTH + k as f64 * RESOLUTION;
            let value = f(u);
            if value > best.0 {
                best = (value, u);
            }
            // Gradient must point toward θ away from it.
            if u.abs() > RESOLUTION && df(u) * u >= 0.0 {
                return Err(Error::InvalidModel(format!(
                    "gradient vanishes or points away from theta at offset {u}"
                )));
            }
        }
        if best.1.abs() > RESOLUTION {
            return Err(Error::InvalidModel(format!(
                "competing maximum at offset {} on the grid",
                best.1
            )));
        }
        Ok(RegressionModel {
            shape: Shape::CubicPerturbed { beta, lambda },
            theta_true: vec![theta],
            mu_true: mu,
            hessian_at_theta: DMatrix::from_element(1, 1, -1.0),
            third_diag_at_theta: vec![6.0 * beta],
            // The quartic term makes D²f unbounded.
            a1_flags: BlumConditions {
                bounded_hessian: false,
                ..BlumConditions::ALL
            },
        })
    }

    /// A user-supplied `f` with declared maximizer and Blum flags.
    /// Derivatives at `θ` are taken by central differences of `f`.
    pub fn from_fn<F>(f: F, theta: Vec<f64>, mu: f64, a1_flags: BlumConditions) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if theta.is_empty() || !theta.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidModel("theta must be a finite nonempty vector".into()));
        }
        let hessian = fd_hessian(&f, &theta, FD_STEP);
        let third = fd_third_diag(&f, &theta, FD_STEP_THIRD);
        Ok(RegressionModel {
            shape: Shape::Custom(Arc::new(f)),
            theta_true: theta,
            mu_true: mu,
            hessian_at_theta: hessian,
            third_diag_at_theta: third,
            a1_flags,
        })
    }

    pub fn dimension(&self) -> usize {
        self.theta_true.len()
    }

    pub fn theta_true(&self) -> &[f64] {
        &self.theta_true
    }

    pub fn mu_true(&self) -> f64 {
        self.mu_true
    }

    /// `D²f(θ)`.
    pub fn hessian_at_theta(&self) -> &DMatrix<f64> {
        &self.hessian_at_theta
    }

    /// `∂³f/∂xᵢ³(θ)` for each coordinate.
    pub fn third_diag_at_theta(&self) -> &[f64] {
        &self.third_diag_at_theta
    }

    pub fn a1_flags(&self) -> BlumConditions {
        self.a1_flags
    }

    pub fn kind_name(&self) -> &'static str {
        match self.shape {
            Shape::Quadratic { .. } => "quadratic",
            Shape::CubicPerturbed { .. } => "cubic_perturbed",
            Shape::Custom(_) => "custom",
        }
    }

    /// `L^(θ)`: minus the largest eigenvalue of `D²f(θ)`.
    pub fn curvature(&self) -> f64 {
        let eig = SymmetricEigen::new(self.hessian_at_theta.clone());
        -eig.eigenvalues.max()
    }

    /// Noiseless `f(x)`.
    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        match &self.shape {
            Shape::Quadratic { q } => {
                let d = self.theta_true.len();
                let mut quad = 0.0;
                for i in 0..d {
                    let ui = x[i] - self.theta_true[i];
                    let row = &q[i * d..(i + 1) * d];
                    let mut acc = 0.0;
                    for j in 0..d {
                        acc += row[j] * (x[j] - self.theta_true[j]);
                    }
                    quad += ui * acc;
                }
                self.mu_true - 0.5 * quad
            }
            Shape::CubicPerturbed { beta, lambda } => {
                let u = x[0] - self.theta_true[0];
                let u2 = u * u;
                self.mu_true - 0.5 * u2 + beta * u2 * u - lambda * u2 * u2
            }
            Shape::Custom(f) => f(x),
        }
    }
}

/// Central-difference Hessian with relative step `rel_step`.
pub fn fd_hessian<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], rel_step: f64) -> DMatrix<f64> {
    let d = x.len();
    let h: Vec<f64> = x.iter().map(|v| rel_step * v.abs().max(1.0)).collect();
    let mut probe = x.to_vec();
    let mut at = |deltas: &[(usize, f64)]| {
        probe.copy_from_slice(x);
        for &(i, s) in deltas {
            probe[i] += s;
        }
        f(&probe)
    };
    let f0 = at(&[]);
    let mut hess = DMatrix::zeros(d, d);
    for i in 0..d {
        let hi = h[i];
        hess[(i, i)] = (at(&[(i, hi)]) - 2.0 * f0 + at(&[(i, -hi)])) / (hi * hi);
        for j in 0..i {
            let hj = h[j];
            let v = (at(&[(i, hi), (j, hj)]) - at(&[(i, hi), (j, -hj)]) - at(&[(i, -hi), (j, hj)])
                + at(&[(i, -hi), (j, -hj)]))
                / (4.0 * hi * hj);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    hess
}

/// Central-difference `∂³f/∂xᵢ³` with relative step `rel_step`.
pub fn fd_third_diag<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], rel_step: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = rel_step * x[i].abs().max(1.0);
            let mut at = |s: f64| {
                probe.copy_from_slice(x);
                probe[i] += s;
                f(&probe)
            };
            (at(2.0 * h) - 2.0 * at(h) + 2.0 * at(-h) - at(-2.0 * h)) / (2.0 * h * h * h)
        })
        .collect()
}

/// Central-difference gradient with relative step `rel_step`.
pub fn fd_gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], rel_step: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = rel_step * x[i].abs().max(1.0);
            probe.copy_from_slice(x);
            probe[i] += h;
            let plus = f(&probe);
            probe[i] -= 2.0 * h;
            let minus = f(&probe);
            (plus - minus) / (2.0 * h)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamily {
    Gaussian,
    /// Uniform on `[−σ√3, σ√3]`.
    CenteredUniform,
}

/// Homoskedastic additive observation noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma: f64,
    pub family: NoiseFamily,
    /// Declared finite-moment order `m > 2`.
    #[serde(rename = "m")]
    pub moment_order_m: f64,
}

impl NoiseModel {
    pub fn new(sigma: f64, family: NoiseFamily, moment_order_m: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidModel(format!("sigma must be nonnegative, got {sigma}")));
        }
        if moment_order_m.is_nan() || moment_order_m <= 2.0 {
            return Err(Error::InvalidModel(format!(
                "moment order m must exceed 2, got {moment_order_m}"
            )));
        }
        Ok(NoiseModel {
            sigma,
            family,
            moment_order_m,
        })
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        Self::new(sigma, NoiseFamily::Gaussian, 4.0)
    }

    pub fn variance(&self) -> f64 {
        self.sigma * self.sigma
    }

    /// The disturbance for one query key: a pure function of the key.
    #[inline]
    pub fn disturbance(&self, stream: RandomStream, n: u64, q: u64) -> f64 {
        if self.sigma == 0.0 {
            return 0.0;
        }
        let mut rng = KeyedRng::new(stream.key(n, q));
        let unit: f64 = match self.family {
            NoiseFamily::Gaussian => StandardNormal.sample(&mut rng),
            NoiseFamily::CenteredUniform => {
                let u: f64 = StandardUniform.sample(&mut rng);
                3f64.sqrt() * (2.0 * u - 1.0)
            }
        };
        self.sigma * unit
    }
}

/// Identifies one replication's randomness. Each query inside it is further
/// keyed by `(iteration n, query index q)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomStream {
    pub seed: u64,
    pub replication_index: u64,
}

impl RandomStream {
    pub fn new(seed: u64, replication_index: u64) -> Self {
        RandomStream {
            seed,
            replication_index,
        }
    }

    fn key(&self, n: u64, q: u64) -> u64 {
        let mut h = splitmix64(self.seed);
        h = splitmix64(h ^ self.replication_index);
        h = splitmix64(h ^ n);
        splitmix64(h ^ q)
    }
}

/// `f(x) + w` for the disturbance keyed by `(stream, n, q)`.
#[inline]
pub fn observe(
    model: &RegressionModel,
    noise: &NoiseModel,
    x: &[f64],
    stream: RandomStream,
    n: u64,
    q: u64,
) -> Result<f64> {
    if x.len() != model.dimension() {
        return Err(Error::DimensionMismatch {
            expected: model.dimension(),
            actual: x.len(),
        });
    }
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFiniteQuery);
    }
    Ok(model.value(x) + noise.disturbance(stream, n, q))
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter-based generator owned by a single query key. Rejection samplers
/// may draw any number of words; they all derive from the key.
struct KeyedRng {
    key: u64,
    counter: u64,
}

impl KeyedRng {
    fn new(key: u64) -> Self {
        KeyedRng { key, counter: 0 }
    }
}

impl RngCore for KeyedRng {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.counter += 1;
        splitmix64(self.key ^ self.counter.wrapping_mul(GOLDEN_GAMMA))
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        rand_core::impls::fill_bytes_via_next(self, dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_quadratic(d: usize) -> RegressionModel {
        RegressionModel::quadratic(DMatrix::identity(d, d), vec![0.0; d], 0.0).unwrap()
    }

    #[test]
    fn noiseless_observation_is_exact() {
        let q = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let model = RegressionModel::quadratic(q, vec![1.0, -1.0], 3.0).unwrap();
        let noise = NoiseModel::gaussian(0.0).unwrap();
        let x = [0.5, 0.25];
        let (u0, u1) = (-0.5, 1.25);
        let expected = 3.0 - 0.5 * (2.0 * u0 * u0 + 2.0 * 0.5 * u0 * u1 + u1 * u1);
        let z = observe(&model, &noise, &x, RandomStream::new(1, 2), 3, 4).unwrap();
        assert_eq!(z, expected);
    }

    #[test]
    fn observation_is_a_pure_function_of_its_key() {
        let model = unit_quadratic(1);
        let noise = NoiseModel::gaussian(1.0).unwrap();
        let s = RandomStream::new(42, 7);
        let a = observe(&model, &noise, &[0.3], s, 11, 2).unwrap();
        let b = observe(&model, &noise, &[0.3], s, 11, 2).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        let c = observe(&model, &noise, &[0.3], s, 11, 3).unwrap();
        assert_ne!(a, c);
        let other_rep = observe(&model, &noise, &[0.3], RandomStream::new(42, 8), 11, 2).unwrap();
        assert_ne!(a, other_rep);
    }

    #[test]
    fn non_finite_query_rejected() {
        let model = unit_quadratic(2);
        let noise = NoiseModel::gaussian(1.0).unwrap();
        let err = observe(&model, &noise, &[0.0, f64::NAN], RandomStream::new(0, 0), 1, 0);
        assert!(matches!(err, Err(Error::NonFiniteQuery)));
        let err = observe(&model, &noise, &[0.0], RandomStream::new(0, 0), 1, 0);
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn mean_at_maximizer_matches_mu() {
        let model = RegressionModel::quadratic(DMatrix::identity(1, 1), vec![0.0], 5.0).unwrap();
        let noise = NoiseModel::gaussian(1.0).unwrap();
        let s = RandomStream::new(3, 0);
        let m = 1_000_000u64;
        let mean = (0..m).map(|k| observe(&model, &noise, &[0.0], s, k, 0).unwrap()).sum::<f64>() / m as f64;
        // 4 standard errors of 1/sqrt(1e6).
        assert!((mean - 5.0).abs() < 4e-3, "{mean}");
    }

    fn moments(xs: &[f64]) -> (f64, f64) {
        let m = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / m;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
        (mean, var)
    }

    #[test]
    fn disturbance_variance_and_independence() {
        for family in [NoiseFamily::Gaussian, NoiseFamily::CenteredUniform] {
            let noise = NoiseModel::new(2.0, family, 4.0).unwrap();
            let s = RandomStream::new(99, 1);
            let m = 1_000_000u64;
            let a: Vec<f64> = (0..m).map(|n| noise.disturbance(s, n, 0)).collect();
            let b: Vec<f64> = (0..m).map(|n| noise.disturbance(s, n, 1)).collect();
            let (ma, va) = moments(&a);
            let (mb, vb) = moments(&b);
            assert!((va / 4.0 - 1.0).abs() < 0.01, "{family:?} var {va}");
            let cov = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (m as f64 - 1.0);
            let corr = cov / (va * vb).sqrt();
            assert!(corr.abs() < 0.01, "{family:?} corr {corr}");
            if family == NoiseFamily::CenteredUniform {
                let bound = 2.0 * 3f64.sqrt();
                assert!(a.iter().all(|w| w.abs() <= bound));
            }
        }
    }

    #[test]
    fn quadratic_constructor() {
        let model = RegressionModel::quadratic(DMatrix::identity(1, 1), vec![0.0], 5.0).unwrap();
        assert_eq!(model.value(&[2.0]), 3.0);
        let q = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let model = RegressionModel::quadratic(q.clone(), vec![0.5, 1.0], 0.0).unwrap();
        assert_eq!(model.hessian_at_theta(), &(-&q));
        assert_eq!(model.third_diag_at_theta(), &[0.0, 0.0]);
        assert!(model.a1_flags().all());
        let fd = fd_hessian(&|x: &[f64]| model.value(x), model.theta_true(), 1e-4);
        for (a, b) in fd.iter().zip(model.hessian_at_theta().iter()) {
            assert!((a - b).abs() <= 1e-6 * b.abs().max(1e-300) || (a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn quadratic_rejects_non_spd() {
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(RegressionModel::quadratic(indefinite, vec![0.0; 2], 0.0).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(RegressionModel::quadratic(asym, vec![0.0; 2], 0.0).is_err());
        assert!(RegressionModel::quadratic(DMatrix::identity(2, 2), vec![0.0; 3], 0.0).is_err());
    }

    #[test]
    fn cubic_perturbed_constructor() {
        let m = RegressionModel::cubic_perturbed(0.0, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(m.third_diag_at_theta(), &[0.0]);
        let m = RegressionModel::cubic_perturbed(2.0, 1.0, 0.05, 1.0).unwrap();
        assert!((m.third_diag_at_theta()[0] - 0.3).abs() < 1e-15);
        assert_eq!(m.hessian_at_theta()[(0, 0)], -1.0);
        // Competing critical point when 9β² ≥ 16λ.
        assert!(RegressionModel::cubic_perturbed(0.0, 0.0, 2.0, 0.1).is_err());
        assert!(RegressionModel::cubic_perturbed(0.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn cubic_grid_maximum_sits_at_theta() {
        // Brute-force grid oracle over [θ−10, θ+10] at resolution 1e-4.
        let theta = 1.5;
        let m = RegressionModel::cubic_perturbed(theta, 0.0, 0.05, 1.0).unwrap();
        let steps = 200_000;
        let (best_x, _) = (0..=steps)
            .map(|k| theta - 10.0 + k as f64 * 1e-4)
            .map(|x| (x, m.value(&[x])))
            .fold((f64::NAN, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b });
        assert!((best_x - theta).abs() <= 1e-4);
    }

    #[test]
    fn derivatives_of_builtin_models_match_finite_differences() {
        let q = DMatrix::from_row_slice(2, 2, &[1.5, -0.2, -0.2, 0.7]);
        let models = [
            RegressionModel::quadratic(q, vec![0.3, -0.4], 2.0).unwrap(),
            RegressionModel::cubic_perturbed(0.7, -1.0, 0.05, 1.0).unwrap(),
        ];
        for m in &models {
            let f = |x: &[f64]| m.value(x);
            let grad = fd_gradient(&f, m.theta_true(), 1e-4);
            // Truncation error of the central difference is f'''h²/6.
            assert!(grad.iter().all(|g| g.abs() < 1e-8), "{grad:?}");
            let hess = fd_hessian(&f, m.theta_true(), 1e-4);
            for (a, b) in hess.iter().zip(m.hessian_at_theta().iter()) {
                assert!((a - b).abs() <= 1e-4 * b.abs().max(1.0), "{a} vs {b}");
            }
            let third = fd_third_diag(&f, m.theta_true(), FD_STEP_THIRD);
            for (a, b) in third.iter().zip(m.third_diag_at_theta()) {
                assert!((a - b).abs() <= 1e-4 * b.abs().max(1.0), "{a} vs {b}");
            }
            // Small probes never exceed μ.
            for u in [-1e-3, 1e-3] {
                let mut x = m.theta_true().to_vec();
                x[0] += u;
                assert!(m.value(&x) <= m.mu_true() + 1e-12);
            }
        }
    }

    #[test]
    fn custom_model_uses_finite_differences() {
        let f = |x: &[f64]| 1.0 - x[0] * x[0] + 0.2 * x[0].powi(3) - x[1] * x[1] - 0.5 * x[0] * x[1];
        let m = RegressionModel::from_fn(f, vec![0.0, 0.0], 1.0, BlumConditions::ALL).unwrap();
        let h = m.hessian_at_theta();
        assert!((h[(0, 0)] + 2.0).abs() < 1e-4);
        assert!((h[(1, 1)] + 2.0).abs() < 1e-4);
        assert!((h[(0, 1)] + 0.5).abs() < 1e-4);
        assert!((m.third_diag_at_theta()[0] - 1.2).abs() < 1e-4 * 1.2);
        assert!(m.third_diag_at_theta()[1].abs() < 1e-4);
        assert_eq!(m.kind_name(), "custom");
    }

    #[test]
    fn noise_model_validation() {
        assert!(NoiseModel::new(-1.0, NoiseFamily::Gaussian, 4.0).is_err());
        assert!(NoiseModel::new(1.0, NoiseFamily::Gaussian, 2.0).is_err());
        assert_eq!(NoiseModel::gaussian(0.0).unwrap().disturbance(RandomStream::new(1, 1), 1, 1), 0.0);
    }
}
