use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Keeps scaled training values strictly inside (-1, +1).
const SCALE_MARGIN: f64 = 8.0 * f64::EPSILON;

/// Ranges below this fraction of the widest component range are treated as
/// constant (rounding noise from zero-variance directions).
const DEGENERATE_RANGE: f64 = 1e-9;

/// PCA decorrelation (all components kept, so a pure rotation) followed by a
/// per-component linear map of the training range onto (-1, +1).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeaturePipeline {
    fitted: Option<FittedPipeline>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FittedPipeline {
    mean: Vec<f64>,
    /// Principal directions, one per row.
    basis: Vec<Vec<f64>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl FeaturePipeline {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fits on training rows only.
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows
            .first()
            .map(Vec::len)
            .ok_or(Error::FeatureDimensionMismatch)?;
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::FeatureDimensionMismatch);
        }
        let data = linalg::rows_to_matrix(rows);
        let mean = linalg::column_means(&data);
        let cov = linalg::covariance(&data, &mean);
        let (_, vectors) = linalg::sorted_symmetric_eigen(&cov);
        let basis: Vec<Vec<f64>> = (0..dim)
            .map(|c| vectors.column(c).iter().copied().collect())
            .collect();

        let mut lower = vec![f64::INFINITY; dim];
        let mut upper = vec![f64::NEG_INFINITY; dim];
        for row in rows {
            let p = project(&basis, &mean, row);
            for j in 0..dim {
                lower[j] = lower[j].min(p[j]);
                upper[j] = upper[j].max(p[j]);
            }
        }
        let widest = lower
            .iter()
            .zip(&upper)
            .map(|(l, u)| u - l)
            .fold(0.0, f64::max);
        for j in 0..dim {
            if upper[j] - lower[j] <= DEGENERATE_RANGE * widest.max(f64::MIN_POSITIVE) {
                // Constant component: maps to the midpoint 0.
                lower[j] = 0.0;
                upper[j] = 0.0;
            }
        }
        Ok(FeaturePipeline {
            fitted: Some(FittedPipeline {
                mean: mean.iter().copied().collect(),
                basis,
                lower,
                upper,
            }),
        })
    }

    pub fn is_fitted(&self) -> bool {
        self.fitted.is_some()
    }

    /// Output dimension, or 0 when unfitted.
    pub fn dim(&self) -> usize {
        self.fitted.as_ref().map_or(0, |f| f.mean.len())
    }

    /// The frozen transform; values outside the training range clip to ±1.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let f = self.fitted.as_ref().ok_or(Error::PipelineNotFitted)?;
        if v.len() != f.mean.len() {
            return Err(Error::FeatureDimensionMismatch);
        }
        let mean = DVector::from_column_slice(&f.mean);
        let p = project(&f.basis, &mean, v);
        Ok(p.iter()
            .enumerate()
            .map(|(j, &x)| {
                let (lo, hi) = (f.lower[j], f.upper[j]);
                if hi == lo {
                    0.0
                } else {
                    let s = (2.0 * (x - lo) / (hi - lo) - 1.0) * (1.0 - SCALE_MARGIN);
                    s.clamp(-1.0, 1.0)
                }
            })
            .collect())
    }

    pub fn apply_all(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter().map(|r| self.apply(r)).collect()
    }

    /// Decorrelation basis as a matrix (rows are principal directions).
    pub fn basis(&self) -> Option<DMatrix<f64>> {
        self.fitted
            .as_ref()
            .map(|f| linalg::rows_to_matrix(&f.basis))
    }
}

fn project(basis: &[Vec<f64>], mean: &DVector<f64>, v: &[f64]) -> Vec<f64> {
    basis
        .iter()
        .map(|dir| {
            dir.iter()
                .zip(v)
                .zip(mean.iter())
                .map(|((d, x), m)| d * (x - m))
                .sum()
        })
        .collect()
}
