//! Leave-one-out cross validation, F-measure and Pearson correlation.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::{Classifier, OcSvmTrainer, Trainer};
use crate::error::{Error, Result};
use crate::features::average_windows;
use crate::matrix::Matrix;
use crate::ocsvm::{OcSvmConfig, Verdict};
use crate::special::students_t_two_sided;

/// `2·tp / (2·tp + fp + fn)`, the harmonic mean of precision and recall.
///
/// Defined whenever any count is non-zero; with `tp = 0` it is 0.
pub fn f_measure(tp: u64, fp: u64, fn_: u64) -> Result<f64> {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        return Err(Error::invalid("F-measure undefined: no positives predicted or present"));
    }
    Ok(2.0 * tp as f64 / denom as f64)
}

/// Which outcome counts as a positive when scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositiveClass {
    /// A detection: a non-target window flagged as non-target.
    #[default]
    NonTarget,
    /// Acceptance: a target window classified as target.
    Target,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Confusion {
    /// Records one window whose true class is `is_target`.
    fn record(&mut self, is_target: bool, verdict: Verdict, positive: PositiveClass) {
        let truth_positive = match positive {
            PositiveClass::NonTarget => !is_target,
            PositiveClass::Target => is_target,
        };
        let predicted_positive = match positive {
            PositiveClass::NonTarget => verdict == Verdict::NonTarget,
            PositiveClass::Target => verdict == Verdict::Target,
        };
        match (truth_positive, predicted_positive) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (false, false) => self.tn += 1,
            (true, false) => self.fn_ += 1,
        }
    }

    fn add(&mut self, other: &Confusion) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.tn += other.tn;
        self.fn_ += other.fn_;
    }

    /// 0 when nothing was predicted positive.
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    /// 0 when there are no true positives to find.
    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f_measure(&self) -> f64 {
        f_measure(self.tp, self.fp, self.fn_).unwrap_or(0.0)
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Raw RSSI data sets for one target area and its non-target zones.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDatasets {
    pub target_sets: Vec<Matrix>,
    pub negative_sets: BTreeMap<String, Vec<Matrix>>,
}

impl LabeledDatasets {
    fn validate(&self) -> Result<usize> {
        if self.target_sets.len() < 2 {
            return Err(Error::invalid(format!(
                "LOOCV needs at least 2 target data sets, got {}",
                self.target_sets.len()
            )));
        }
        let k = self.target_sets[0].cols();
        for m in self.target_sets.iter().chain(self.negative_sets.values().flatten()) {
            if m.cols() != k {
                return Err(Error::DimensionMismatch { expected: k, found: m.cols() });
            }
        }
        Ok(k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    /// Number of successive RSSIs averaged per window.
    pub n_avg: usize,
    pub positive: PositiveClass,
    /// Zone whose detection rate is reported as `detection_rate`; when unset
    /// all negative zones are pooled.
    pub outside_zone: Option<String>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { n_avg: 1, positive: PositiveClass::NonTarget, outside_zone: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub confusion: Confusion,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    /// Fraction of held-out target windows accepted as target.
    pub target_acceptance: f64,
    pub detection_rate: f64,
    pub zone_detection_rates: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Pooled over folds.
    pub confusion: Confusion,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    /// Mean over folds.
    pub target_acceptance: f64,
    pub detection_rate: f64,
    pub zone_detection_rates: BTreeMap<String, f64>,
    pub folds: Vec<FoldReport>,
}

/// Trains on all target sets but one, scores the held-out set and every
/// negative set, and repeats for each held-out set. The standardizer is
/// refitted inside each fold.
pub fn loocv<T>(data: &LabeledDatasets, trainer: &T, config: &EvalConfig) -> Result<EvalReport>
where
    T: Trainer + Sync,
{
    data.validate()?;
    let avg = |m: &Matrix| average_windows(m, config.n_avg);
    let targets = data.target_sets.iter().map(avg).collect::<Result<Vec<_>>>()?;
    let negatives = data
        .negative_sets
        .iter()
        .map(|(zone, sets)| {
            let windows = sets.iter().map(avg).collect::<Result<Vec<_>>>()?;
            Ok((zone.clone(), Matrix::vstack(&windows)?))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    if let Some(z) = &config.outside_zone {
        if !negatives.contains_key(z) {
            return Err(Error::invalid(format!("outside zone {z:?} has no data")));
        }
    }

    let folds = (0..targets.len())
        .into_par_iter()
        .map(|fold| {
            run_fold(fold, &targets, &negatives, trainer, config)
                .map_err(|e| Error::Fold { fold, source: Box::new(e) })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut confusion = Confusion::default();
    for f in &folds {
        confusion.add(&f.confusion);
    }
    let n = folds.len() as f64;
    let mut zone_detection_rates = BTreeMap::new();
    for zone in negatives.keys() {
        let mean = folds.iter().map(|f| f.zone_detection_rates[zone]).sum::<f64>() / n;
        zone_detection_rates.insert(zone.clone(), mean);
    }
    Ok(EvalReport {
        confusion,
        precision: confusion.precision(),
        recall: confusion.recall(),
        f_measure: confusion.f_measure(),
        target_acceptance: folds.iter().map(|f| f.target_acceptance).sum::<f64>() / n,
        detection_rate: folds.iter().map(|f| f.detection_rate).sum::<f64>() / n,
        zone_detection_rates,
        folds,
    })
}

fn run_fold<T: Trainer>(
    fold: usize,
    targets: &[Matrix],
    negatives: &BTreeMap<String, Matrix>,
    trainer: &T,
    config: &EvalConfig,
) -> Result<FoldReport> {
    let train_parts: Vec<&Matrix> =
        targets.iter().enumerate().filter(|(i, _)| *i != fold).map(|(_, m)| m).collect();
    let train = Matrix::vstack(train_parts)?;
    let model = trainer.fit(&train)?;

    let mut confusion = Confusion::default();
    let held_out = &targets[fold];
    let mut accepted = 0usize;
    for row in held_out.iter_rows() {
        let v = model.classify(row)?;
        if v == Verdict::Target {
            accepted += 1;
        }
        confusion.record(true, v, config.positive);
    }

    let mut zone_detection_rates = BTreeMap::new();
    let (mut flagged_all, mut total_all) = (0usize, 0usize);
    for (zone, windows) in negatives {
        let mut flagged = 0usize;
        for row in windows.iter_rows() {
            let v = model.classify(row)?;
            if v == Verdict::NonTarget {
                flagged += 1;
            }
            confusion.record(false, v, config.positive);
        }
        flagged_all += flagged;
        total_all += windows.rows();
        zone_detection_rates.insert(zone.clone(), ratio(flagged as u64, windows.rows() as u64));
    }
    let detection_rate = match &config.outside_zone {
        Some(z) => zone_detection_rates[z],
        None => ratio(flagged_all as u64, total_all as u64),
    };
    Ok(FoldReport {
        fold,
        confusion,
        precision: confusion.precision(),
        recall: confusion.recall(),
        f_measure: confusion.f_measure(),
        target_acceptance: ratio(accepted as u64, held_out.rows() as u64),
        detection_rate,
        zone_detection_rates,
    })
}

/// LOOCV with the standard pipeline: averaging, standardization, OC-SVM.
pub fn loocv_detection_rate(
    data: &LabeledDatasets,
    svm: &OcSvmConfig,
    config: &EvalConfig,
) -> Result<EvalReport> {
    loocv(data, &OcSvmTrainer(*svm), config)
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<8} {:>10} {:>10} {:>10} {:>10} {:>10}", "fold", "precision", "recall", "f_measure", "accept", "detect")?;
        for r in &self.folds {
            writeln!(
                f,
                "{:<8} {:>10.6} {:>10.6} {:>10.6} {:>10.6} {:>10.6}",
                r.fold + 1,
                r.precision,
                r.recall,
                r.f_measure,
                r.target_acceptance,
                r.detection_rate
            )?;
        }
        writeln!(
            f,
            "{:<8} {:>10.6} {:>10.6} {:>10.6} {:>10.6} {:>10.6}",
            "overall", self.precision, self.recall, self.f_measure, self.target_acceptance, self.detection_rate
        )?;
        for (zone, rate) in &self.zone_detection_rates {
            writeln!(f, "zone {zone}: detection rate {rate:.6}")?;
        }
        Ok(())
    }
}

/// Sample Pearson correlation and its two-sided p-value from the
/// t-transform with `n − 2` degrees of freedom.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::invalid(format!("pearson needs at least 3 pairs, got {n}")));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("one of the inputs is constant".into()));
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    Ok((r, pearson_p_value(r, n)))
}

/// Two-sided p-value of a correlation `r` over `n` pairs.
pub fn pearson_p_value(r: f64, n: usize) -> f64 {
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    let t = r * df.sqrt() / (1.0 - r * r).sqrt();
    students_t_two_sided(t, df)
}

/// Paired t-test of `a − b`; returns `(t, two-sided p)`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), found: b.len() });
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::invalid("paired t-test needs at least 2 pairs"));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    if var == 0.0 {
        return Err(Error::UndefinedCorrelation("paired differences are constant".into()));
    }
    let t = mean / (var / n as f64).sqrt();
    Ok((t, students_t_two_sided(t, (n - 1) as f64)))
}

/// 1-based ranks, ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = avg;
        }
        i = j + 1;
    }
    ranks
}
