//! Shared fixtures for the recursion benchmarks.

use kwb_core::{NoiseModel, ParamSequence, RegressionModel, RunConfig};
use nalgebra::DMatrix;

/// A configuration together with the model and noise it runs against.
pub struct Fixture {
    pub name: &'static str,
    pub config: RunConfig,
    pub model: RegressionModel,
    pub noise: NoiseModel,
}

fn seq(s: &str) -> ParamSequence {
    s.parse().expect("fixture sequence")
}

fn quadratic(d: usize) -> RegressionModel {
    RegressionModel::quadratic(DMatrix::identity(d, d), vec![0.0; d], 0.0).expect("fixture model")
}

/// One fixture per variant in dimension `d`, each running `horizon` steps.
pub fn variants(d: usize, horizon: u64) -> Vec<Fixture> {
    let noise = NoiseModel::gaussian(1.0).expect("fixture noise");
    let init = vec![0.5; d];
    let subset: Vec<usize> = (1..=d).collect();
    vec![
        Fixture {
            name: "shared",
            config: RunConfig::shared(seq("n^-1"), seq("n^-1/6"), seq("n^-1"), subset, init.clone(), horizon).unwrap(),
            model: quadratic(d),
            noise,
        },
        Fixture {
            name: "fresh",
            config: RunConfig::fresh(seq("n^-1"), seq("n^-1/6"), seq("n^-1"), 2, init.clone(), horizon).unwrap(),
            model: quadratic(d),
            noise,
        },
        Fixture {
            name: "averaged",
            config: RunConfig::averaged(seq("n^-9/10"), seq("n^-1/6"), 1, init, horizon).unwrap(),
            model: quadratic(d),
            noise,
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_validate() {
        for f in variants(3, 100) {
            f.config.validate().unwrap();
            assert_eq!(f.config.dimension(), f.model.dimension());
        }
    }
}
