//! Window averaging and standardization of raw RSSI matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{mean, population_std, Matrix};

/// Averages non-overlapping blocks of `n` consecutive rows.
///
/// A trailing remainder shorter than `n` is dropped.
pub fn average_windows(raw: &Matrix, n: usize) -> Result<Matrix> {
    if n == 0 {
        return Err(Error::invalid("window size N must be >= 1"));
    }
    if raw.rows() < n {
        return Err(Error::TooFewRows { needed: n, got: raw.rows() });
    }
    if n == 1 {
        return Ok(raw.clone());
    }
    let windows = raw.rows() / n;
    let k = raw.cols();
    let mut out = Matrix::zeros(windows, k);
    for w in 0..windows {
        let dst = out.row_mut(w);
        for r in w * n..(w + 1) * n {
            for (d, v) in dst.iter_mut().zip(raw.row(r)) {
                *d += v;
            }
        }
        for d in dst.iter_mut() {
            *d /= n as f64;
        }
    }
    Ok(out)
}

/// Per-AP training mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizerStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl StandardizerStats {
    pub fn features(&self) -> usize {
        self.mean.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.mean.len() != self.std.len() || self.mean.is_empty() {
            return Err(Error::Format(format!(
                "standardizer has {} means and {} deviations",
                self.mean.len(),
                self.std.len()
            )));
        }
        if let Some(column) = self.std.iter().position(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::ZeroVariance { column });
        }
        if self.mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::Format("standardizer mean is not finite".into()));
        }
        Ok(())
    }

    /// Standardizes a single vector in place.
    pub fn apply_row(&self, row: &[f64], out: &mut [f64]) {
        for ((o, v), (m, s)) in out.iter_mut().zip(row).zip(self.mean.iter().zip(&self.std)) {
            *o = (v - m) / s;
        }
    }
}

pub fn fit_standardizer(train: &Matrix) -> Result<StandardizerStats> {
    if train.rows() < 2 {
        return Err(Error::TooFewRows { needed: 2, got: train.rows() });
    }
    if let Some((row, column)) = train.find_non_finite() {
        return Err(Error::NonFinite { row, column });
    }
    let mut stats = StandardizerStats { mean: Vec::new(), std: Vec::new() };
    for j in 0..train.cols() {
        let col = train.column(j);
        let m = mean(&col);
        let s = population_std(&col);
        // relative test so large-offset constant columns still count as constant
        if !(s > 1e-12 * m.abs().max(1.0)) {
            return Err(Error::ZeroVariance { column: j });
        }
        stats.mean.push(m);
        stats.std.push(s);
    }
    Ok(stats)
}

/// Standardized observations with finite entries only.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix(Matrix);

impl FeatureMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        if let Some((row, column)) = m.find_non_finite() {
            return Err(Error::NonFinite { row, column });
        }
        Ok(FeatureMatrix(m))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn rows(&self) -> usize {
        self.0.rows()
    }

    pub fn cols(&self) -> usize {
        self.0.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.0.row(i)
    }
}

pub fn apply_standardizer(stats: &StandardizerStats, data: &Matrix) -> Result<FeatureMatrix> {
    if data.cols() != stats.features() {
        return Err(Error::DimensionMismatch { expected: stats.features(), found: data.cols() });
    }
    let mut out = Matrix::zeros(data.rows(), data.cols());
    for i in 0..data.rows() {
        stats.apply_row(data.row(i), out.row_mut(i));
    }
    FeatureMatrix::new(out)
}
