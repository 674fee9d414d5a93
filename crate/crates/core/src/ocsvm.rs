//! One-class SVM with an RBF kernel.
//!
//! Training solves the dual
//!
//! ```text
//! min  ½ Σᵢ Σⱼ αᵢ αⱼ K(xᵢ, xⱼ)
//! s.t. 0 ≤ αᵢ ≤ 1/(ν s),  Σᵢ αᵢ = 1
//! ```
//!
//! with SMO: each step moves mass between the maximal KKT-violating pair,
//! which keeps `Σα = 1` exact. The decision function is
//! `f(x) = Σᵢ αᵢ K(svᵢ, x) − ρ`; `f(x) ≥ 0` means target.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::matrix::Matrix;

pub fn squared_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub fn rbf_kernel(x: &[f64], y: &[f64], gamma: f64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    Ok((-gamma * squared_distance(x, y)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Gamma {
    /// `1 / k` for `k` features.
    Auto,
    Value(f64),
}

impl Gamma {
    pub fn resolve(self, features: usize) -> Result<f64> {
        let g = match self {
            Gamma::Auto => {
                if features == 0 {
                    return Err(Error::invalid("cannot resolve gamma for zero features"));
                }
                1.0 / features as f64
            }
            Gamma::Value(g) => g,
        };
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::invalid(format!("gamma must be > 0, got {g}")));
        }
        Ok(g)
    }
}

impl std::str::FromStr for Gamma {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Gamma::Auto);
        }
        s.parse::<f64>()
            .map(Gamma::Value)
            .map_err(|_| Error::invalid(format!("gamma must be 'auto' or a number, got {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OcSvmConfig {
    pub nu: f64,
    pub gamma: Gamma,
    /// Largest allowed KKT gap, measured on the dual rescaled to unit box
    /// bounds.
    pub kkt_tolerance: f64,
    /// `None` means `100_000 * s`.
    pub max_iterations: Option<u64>,
    /// Largest training set for which the full kernel matrix is cached.
    pub kernel_cache_rows: usize,
}

impl Default for OcSvmConfig {
    fn default() -> Self {
        OcSvmConfig {
            nu: 0.1,
            gamma: Gamma::Auto,
            kkt_tolerance: 1e-4,
            max_iterations: None,
            kernel_cache_rows: 8192,
        }
    }
}

impl OcSvmConfig {
    pub fn new(nu: f64, gamma: Gamma) -> Self {
        OcSvmConfig { nu, gamma, ..Default::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu < 1.0) {
            return Err(Error::invalid(format!("nu must lie in (0, 1), got {}", self.nu)));
        }
        if !(self.kkt_tolerance > 0.0) {
            return Err(Error::invalid("kkt tolerance must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Target,
    NonTarget,
}

impl Verdict {
    /// Inclusive at zero.
    pub fn from_margin(value: f64) -> Verdict {
        if value >= 0.0 {
            Verdict::Target
        } else {
            Verdict::NonTarget
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Target => "target",
            Verdict::NonTarget => "non_target",
        }
    }
}

/// Trained one-class SVM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcSvmModel {
    pub gamma: f64,
    pub nu: f64,
    pub rho: f64,
    pub support_vectors: Vec<Vec<f64>>,
    pub alphas: Vec<f64>,
}

/// Diagnostics from a training run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingSummary {
    pub iterations: u64,
    pub kkt_violation: f64,
    pub objective: f64,
    pub upper_bound: f64,
}

enum KernelSource<'a> {
    Dense(Vec<f64>),
    OnDemand { x: &'a Matrix, gamma: f64 },
}

impl KernelSource<'_> {
    fn row_into(&self, i: usize, n: usize, out: &mut [f64]) {
        match self {
            KernelSource::Dense(k) => out.copy_from_slice(&k[i * n..(i + 1) * n]),
            KernelSource::OnDemand { x, gamma } => {
                let xi = x.row(i);
                for (j, o) in out.iter_mut().enumerate() {
                    *o = (-gamma * squared_distance(xi, x.row(j))).exp();
                }
            }
        }
    }
}

/// Trains a model; see [`train_with_summary`] for solver diagnostics.
pub fn train(features: &FeatureMatrix, config: &OcSvmConfig) -> Result<OcSvmModel> {
    train_with_summary(features, config).map(|(m, _)| m)
}

pub fn train_with_summary(
    features: &FeatureMatrix,
    config: &OcSvmConfig,
) -> Result<(OcSvmModel, TrainingSummary)> {
    config.validate()?;
    let x = features.matrix();
    let s = x.rows();
    if s < 2 {
        return Err(Error::TooFewRows { needed: 2, got: s });
    }
    let nu_s = config.nu * s as f64;
    if nu_s < 1.0 {
        return Err(Error::NuTooSmall { product: nu_s });
    }
    let gamma = config.gamma.resolve(x.cols())?;
    let upper = 1.0 / nu_s;
    let max_iter = config.max_iterations.unwrap_or(100_000 * s as u64);

    let kernel = if s <= config.kernel_cache_rows {
        let mut k = vec![0.0; s * s];
        for i in 0..s {
            k[i * s + i] = 1.0;
            for j in (i + 1)..s {
                let v = (-gamma * squared_distance(x.row(i), x.row(j))).exp();
                k[i * s + j] = v;
                k[j * s + i] = v;
            }
        }
        KernelSource::Dense(k)
    } else {
        KernelSource::OnDemand { x, gamma }
    };

    // Feasible start: fill the first floor(νs) coordinates to the bound and
    // put the remaining mass on the next one.
    let mut alpha = vec![0.0; s];
    let full = nu_s.floor() as usize;
    for a in alpha.iter_mut().take(full.min(s)) {
        *a = upper;
    }
    let rest = 1.0 - full as f64 * upper;
    if full < s && rest > 1e-12 {
        alpha[full] = rest;
    }

    // gradient of the objective is Kα
    let mut grad = vec![0.0; s];
    let mut row = vec![0.0; s];
    for (i, &a) in alpha.iter().enumerate() {
        if a > 0.0 {
            kernel.row_into(i, s, &mut row);
            for (g, k) in grad.iter_mut().zip(&row) {
                *g += a * k;
            }
        }
    }

    let mut row_j = vec![0.0; s];
    let mut iterations = 0u64;
    let violation = loop {
        // i: may grow, smallest gradient. j: may shrink, largest gradient.
        let mut i_sel = usize::MAX;
        let mut g_min = f64::INFINITY;
        let mut j_sel = usize::MAX;
        let mut g_max = f64::NEG_INFINITY;
        for t in 0..s {
            if alpha[t] < upper && grad[t] < g_min {
                g_min = grad[t];
                i_sel = t;
            }
            if alpha[t] > 0.0 && grad[t] > g_max {
                g_max = grad[t];
                j_sel = t;
            }
        }
        let gap = g_max - g_min;
        // measured on the dual rescaled to unit box bounds (α' = νs·α)
        let scaled_gap = gap * nu_s;
        if i_sel == usize::MAX || j_sel == usize::MAX || scaled_gap <= config.kkt_tolerance {
            break scaled_gap.max(0.0);
        }
        if iterations >= max_iter {
            return Err(Error::NonConvergence { iterations, violation: scaled_gap });
        }
        iterations += 1;

        kernel.row_into(i_sel, s, &mut row);
        kernel.row_into(j_sel, s, &mut row_j);
        let curvature = (row[i_sel] + row_j[j_sel] - 2.0 * row[j_sel]).max(1e-12);
        let room_i = upper - alpha[i_sel];
        let room_j = alpha[j_sel];
        let mut step = gap / curvature;
        if step >= room_i || step >= room_j {
            step = room_i.min(room_j);
        }
        if step == room_i {
            alpha[i_sel] = upper;
        } else {
            alpha[i_sel] += step;
        }
        if step == room_j {
            alpha[j_sel] = 0.0;
        } else {
            alpha[j_sel] -= step;
        }
        for ((g, ki), kj) in grad.iter_mut().zip(&row).zip(&row_j) {
            *g += step * (ki - kj);
        }
    };

    // ρ: mean kernel sum over free support vectors, else the smallest over
    // all support vectors so every training point stays on the target side.
    let free: Vec<usize> = (0..s).filter(|&t| alpha[t] > 0.0 && alpha[t] < upper).collect();
    let rho = if !free.is_empty() {
        free.iter().map(|&t| grad[t]).sum::<f64>() / free.len() as f64
    } else {
        (0..s)
            .filter(|&t| alpha[t] > 0.0)
            .map(|t| grad[t])
            .fold(f64::INFINITY, f64::min)
    };

    let objective = 0.5 * alpha.iter().zip(&grad).map(|(a, g)| a * g).sum::<f64>();
    let mut support_vectors = Vec::new();
    let mut alphas = Vec::new();
    for (t, &a) in alpha.iter().enumerate() {
        if a > 0.0 {
            support_vectors.push(x.row(t).to_vec());
            alphas.push(a);
        }
    }
    let model = OcSvmModel { gamma, nu: config.nu, rho, support_vectors, alphas };
    let summary = TrainingSummary { iterations, kkt_violation: violation, objective, upper_bound: upper };
    Ok((model, summary))
}

impl OcSvmModel {
    pub fn features(&self) -> usize {
        self.support_vectors.first().map_or(0, Vec::len)
    }

    /// `Σ αᵢ K(svᵢ, x) − ρ`.
    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.features() {
            return Err(Error::DimensionMismatch { expected: self.features(), found: x.len() });
        }
        let sum: f64 = self
            .support_vectors
            .iter()
            .zip(&self.alphas)
            .map(|(sv, a)| a * (-self.gamma * squared_distance(sv, x)).exp())
            .sum();
        Ok(sum - self.rho)
    }

    pub fn classify(&self, x: &[f64]) -> Result<Verdict> {
        self.decision_value(x).map(Verdict::from_margin)
    }

    /// Structural checks for models loaded from disk.
    pub fn validate(&self) -> Result<()> {
        if self.support_vectors.is_empty() || self.support_vectors.len() != self.alphas.len() {
            return Err(Error::Format(format!(
                "model has {} support vectors and {} coefficients",
                self.support_vectors.len(),
                self.alphas.len()
            )));
        }
        let k = self.features();
        if k == 0 || self.support_vectors.iter().any(|sv| sv.len() != k) {
            return Err(Error::Format("support vectors have inconsistent dimensions".into()));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) || !self.rho.is_finite() {
            return Err(Error::Format("model gamma/rho out of range".into()));
        }
        if !(self.nu > 0.0 && self.nu < 1.0) {
            return Err(Error::Format("model nu out of range".into()));
        }
        if self.alphas.iter().any(|a| !(*a > 0.0 && a.is_finite()))
            || self.support_vectors.iter().flatten().any(|v| !v.is_finite())
        {
            return Err(Error::Format("model contains invalid coefficients".into()));
        }
        Ok(())
    }
}
