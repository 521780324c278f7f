use serde::{Deserialize, Serialize};

use super::stats::median;
use crate::{Error, Result};

/// Fewest snapshot indices a slope fit accepts.
pub const MIN_SNAPSHOTS: usize = 5;

/// Absolute errors of several replications on a common index grid.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SnapshotSeries {
    pub n: Vec<u64>,
    /// One row per replication, aligned with `n`.
    pub errors: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeEstimate {
    pub exponent: f64,
    pub std_error: f64,
    pub points: usize,
}

/// Least-squares slope of `log median_r |e_r(n)|` against `log n`.
pub fn slope_diagnostic(series: &SnapshotSeries) -> Result<SlopeEstimate> {
    let mut xs = Vec::with_capacity(series.n.len());
    let mut ys = Vec::with_capacity(series.n.len());
    let mut column = Vec::with_capacity(series.errors.len());
    for (j, &n) in series.n.iter().enumerate() {
        column.clear();
        column.extend(series.errors.iter().filter_map(|row| row.get(j)).map(|e| e.abs()).filter(|e| e.is_finite()));
        if column.is_empty() {
            continue;
        }
        let med = median(&mut column);
        if med > 0.0 {
            xs.push((n as f64).ln());
            ys.push(med.ln());
        }
    }
    let k = xs.len();
    if k < MIN_SNAPSHOTS {
        return Err(Error::InsufficientSnapshots {
            needed: MIN_SNAPSHOTS,
            got: k,
        });
    }
    let xbar = xs.iter().sum::<f64>() / k as f64;
    let ybar = ys.iter().sum::<f64>() / k as f64;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let std_error = (rss / (k - 2) as f64 / sxx).sqrt();
    Ok(SlopeEstimate {
        exponent: slope,
        std_error,
        points: k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Vec<u64> {
        (0..11).map(|j| 100_000u64 >> j).rev().collect()
    }

    #[test]
    fn exact_power_law() {
        let n = grid();
        let row: Vec<f64> = n.iter().map(|&k| (k as f64).powf(-1.0 / 3.0)).collect();
        let est = slope_diagnostic(&SnapshotSeries {
            n: n.clone(),
            errors: vec![row.clone(), row.iter().map(|e| -2.0 * e).collect(), row.iter().map(|e| 0.5 * e).collect()],
        })
        .unwrap();
        assert!((est.exponent + 1.0 / 3.0).abs() < 0.01);
        assert!(est.std_error < 1e-3);
        assert_eq!(est.points, 11);
    }

    #[test]
    fn constant_errors_have_zero_slope() {
        let n = grid();
        let est = slope_diagnostic(&SnapshotSeries {
            errors: vec![vec![0.7; n.len()]],
            n,
        })
        .unwrap();
        assert!(est.exponent.abs() < 1e-12);
    }

    #[test]
    fn too_few_snapshots() {
        let err = slope_diagnostic(&SnapshotSeries {
            n: vec![10, 20, 40, 80],
            errors: vec![vec![1.0; 4]],
        });
        assert!(matches!(err, Err(Error::InsufficientSnapshots { needed: 5, got: 4 })));
    }
}
