use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::linalg::serde_rows;
use crate::sum::CompensatedSum;

/// Sample moments of a set of equal-length vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub count: usize,
    pub mean: Vec<f64>,
    /// Unbiased covariance; NaN-filled when fewer than two samples.
    #[serde(with = "serde_rows")]
    pub covariance: DMatrix<f64>,
    pub covariance_defined: bool,
    /// Standardized third central moment per component.
    pub skewness: Vec<f64>,
    /// Standardized fourth central moment minus 3 per component.
    pub excess_kurtosis: Vec<f64>,
}

impl Moments {
    pub fn dimension(&self) -> usize {
        self.mean.len()
    }

    pub fn variance(&self, i: usize) -> f64 {
        self.covariance[(i, i)]
    }

    /// `√(var/count)` for component `i`.
    pub fn standard_error(&self, i: usize) -> f64 {
        (self.variance(i) / self.count as f64).sqrt()
    }
}

/// Two-pass moments with compensated accumulation. `samples` must be
/// nonempty and rectangular.
pub fn moments<S: AsRef<[f64]>>(samples: &[S]) -> Moments {
    let count = samples.len();
    assert!(count > 0, "moments of an empty sample");
    let dim = samples[0].as_ref().len();
    // Shifting by the first sample keeps identical samples exactly centred.
    let mut mean = vec![0.0; dim];
    for (i, m) in mean.iter_mut().enumerate() {
        let origin = samples[0].as_ref()[i];
        let mut acc = CompensatedSum::default();
        for s in samples {
            acc.add(s.as_ref()[i] - origin);
        }
        *m = origin + acc.value() / count as f64;
    }

    let mut cov = DMatrix::from_element(dim, dim, f64::NAN);
    let covariance_defined = count >= 2;
    if covariance_defined {
        for i in 0..dim {
            for j in i..dim {
                let mut acc = CompensatedSum::default();
                for s in samples {
                    let s = s.as_ref();
                    acc.add((s[i] - mean[i]) * (s[j] - mean[j]));
                }
                let v = acc.value() / (count - 1) as f64;
                cov[(i, j)] = v;
                cov[(j, i)] = v;
            }
        }
    }

    let mut skewness = vec![0.0; dim];
    let mut excess_kurtosis = vec![0.0; dim];
    for i in 0..dim {
        let (mut m2, mut m3, mut m4) = (CompensatedSum::default(), CompensatedSum::default(), CompensatedSum::default());
        for s in samples {
            let e = s.as_ref()[i] - mean[i];
            let e2 = e * e;
            m2.add(e2);
            m3.add(e2 * e);
            m4.add(e2 * e2);
        }
        let n = count as f64;
        let (m2, m3, m4) = (m2.value() / n, m3.value() / n, m4.value() / n);
        if m2 > 0.0 {
            skewness[i] = m3 / m2.powf(1.5);
            excess_kurtosis[i] = m4 / (m2 * m2) - 3.0;
        }
    }

    Moments {
        count,
        mean,
        covariance: cov,
        covariance_defined,
        skewness,
        excess_kurtosis,
    }
}

/// Median of a nonempty slice of comparable values (NaN-free).
pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
