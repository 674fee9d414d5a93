//! Trained detectors operating on averaged RSSI windows.
//!
//! A detector bundles the standardizer fitted on training windows with a
//! decision rule: either the one-class SVM or the squared-norm surrogate.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analytic::{surrogate_threshold, surrogate_classify};
use crate::error::{Error, Result};
use crate::features::{apply_standardizer, fit_standardizer, StandardizerStats};
use crate::matrix::Matrix;
use crate::ocsvm::{train_with_summary, OcSvmConfig, OcSvmModel, TrainingSummary, Verdict};

pub trait Classifier {
    /// Signed margin for an averaged (not yet standardized) RSSI vector;
    /// non-negative means target.
    fn margin(&self, window: &[f64]) -> Result<f64>;

    fn classify(&self, window: &[f64]) -> Result<Verdict> {
        self.margin(window).map(Verdict::from_margin)
    }

    /// Fraction of rows classified non-target.
    fn non_target_fraction(&self, windows: &Matrix) -> Result<f64> {
        let mut hits = 0usize;
        for row in windows.iter_rows() {
            if self.classify(row)? == Verdict::NonTarget {
                hits += 1;
            }
        }
        Ok(hits as f64 / windows.rows() as f64)
    }
}

/// Builds a classifier from averaged training windows.
pub trait Trainer {
    type Model: Classifier + Send + Sync;

    fn fit(&self, windows: &Matrix) -> Result<Self::Model>;
}

/// Self-contained OC-SVM detector; this is the on-disk model format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detector {
    #[serde(flatten)]
    pub model: OcSvmModel,
    pub standardizer: StandardizerStats,
}

impl Detector {
    pub fn fit(windows: &Matrix, config: &OcSvmConfig) -> Result<Self> {
        Detector::fit_with_summary(windows, config).map(|(d, _)| d)
    }

    pub fn fit_with_summary(windows: &Matrix, config: &OcSvmConfig) -> Result<(Self, TrainingSummary)> {
        let standardizer = fit_standardizer(windows)?;
        let features = apply_standardizer(&standardizer, windows)?;
        let (model, summary) = train_with_summary(&features, config)?;
        Ok((Detector { model, standardizer }, summary))
    }

    pub fn features(&self) -> usize {
        self.standardizer.features()
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.standardizer.validate()?;
        if self.model.features() != self.standardizer.features() {
            return Err(Error::Format(format!(
                "model expects {} features but standardizer has {}",
                self.model.features(),
                self.standardizer.features()
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let d: Detector = serde_json::from_str(text)?;
        d.validate()?;
        Ok(d)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Detector::from_json(&std::fs::read_to_string(path)?)
    }
}

impl Classifier for Detector {
    fn margin(&self, window: &[f64]) -> Result<f64> {
        if window.len() != self.features() {
            return Err(Error::DimensionMismatch { expected: self.features(), found: window.len() });
        }
        let mut z = vec![0.0; window.len()];
        self.standardizer.apply_row(window, &mut z);
        self.model.decision_value(&z)
    }
}

/// Squared-norm ball `‖r̂‖² ≤ δ` around the standardized training mean.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateDetector {
    pub standardizer: StandardizerStats,
    pub delta: f64,
}

impl SurrogateDetector {
    pub fn fit(windows: &Matrix, nu: f64) -> Result<Self> {
        let standardizer = fit_standardizer(windows)?;
        let delta = surrogate_threshold(nu, windows.cols())?;
        Ok(SurrogateDetector { standardizer, delta })
    }
}

impl Classifier for SurrogateDetector {
    fn margin(&self, window: &[f64]) -> Result<f64> {
        let k = self.standardizer.features();
        if window.len() != k {
            return Err(Error::DimensionMismatch { expected: k, found: window.len() });
        }
        let mut z = vec![0.0; k];
        self.standardizer.apply_row(window, &mut z);
        Ok(self.delta - z.iter().map(|v| v * v).sum::<f64>())
    }

    fn classify(&self, window: &[f64]) -> Result<Verdict> {
        let k = self.standardizer.features();
        if window.len() != k {
            return Err(Error::DimensionMismatch { expected: k, found: window.len() });
        }
        let mut z = vec![0.0; k];
        self.standardizer.apply_row(window, &mut z);
        Ok(surrogate_classify(&z, self.delta))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OcSvmTrainer(pub OcSvmConfig);

impl Trainer for OcSvmTrainer {
    type Model = Detector;

    fn fit(&self, windows: &Matrix) -> Result<Detector> {
        Detector::fit(windows, &self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateTrainer {
    pub nu: f64,
}

impl Trainer for SurrogateTrainer {
    type Model = SurrogateDetector;

    fn fit(&self, windows: &Matrix) -> Result<SurrogateDetector> {
        SurrogateDetector::fit(windows, self.nu)
    }
}
