//! Scripted simulation experiments.
//!
//! * [`run_fig3`]: detection rate along a ray leaving the target area,
//!   analytic versus Monte Carlo under both channels.
//! * [`run_fig2`]: spread of the fading term before and after averaging.
//! * [`StoreLayout`]: a synthetic store used for end-to-end checks.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{detection_rate_point, lambda_t, RateQuery};
use crate::detector::{Classifier, OcSvmTrainer, SurrogateTrainer, Trainer};
use crate::error::{Error, Result};
use crate::evaluation::LabeledDatasets;
use crate::features::average_windows;
use crate::geometry::{check_finite, Domain, Point, Polygon};
use crate::matrix::{mean, population_std, Matrix};
use crate::ocsvm::{Gamma, OcSvmConfig};
use crate::placement::PlacementProblem;
use crate::propagation::{
    generate_dataset, sample_fading, PropagationParams, DEFAULT_EPSILON, DEFAULT_LAMBDA_FADE,
    RAYLEIGH_FADING_STD_DB,
};
use crate::rng::{derive_seed, substream, TAG_DOMAIN, TAG_FRIIS, TAG_RAYLEIGH, TAG_TEST, TAG_TRAIN};

/// Documented default noise level for the Gaussian channel; equals the
/// spread of the Rayleigh fading term.
pub const DEFAULT_SIGMA: f64 = RAYLEIGH_FADING_STD_DB;
pub const DEFAULT_TRANSMIT_POWER: f64 = -30.0;
pub const DEFAULT_ETA: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierMode {
    /// Squared-norm rule on standardized features.
    #[default]
    Surrogate,
    /// One-class SVM trained on the same windows.
    OcSvm,
}

impl std::str::FromStr for ClassifierMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "surrogate" => Ok(ClassifierMode::Surrogate),
            "ocsvm" | "oc-svm" => Ok(ClassifierMode::OcSvm),
            _ => Err(Error::invalid(format!("unknown classifier mode {s:?} (surrogate|ocsvm)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig3Config {
    pub aps: Vec<Point>,
    pub t_in: Point,
    pub nu: f64,
    /// Test windows per probe position.
    pub trials: usize,
    /// Training windows at `t_in`.
    pub train_trials: usize,
    pub probes: Vec<Point>,
    /// Gaussian channel noise in dB; also the σ of the analytic rate.
    pub sigma: f64,
    pub eta: f64,
    pub transmit_power: f64,
    pub epsilon: f64,
    pub lambda_fade: f64,
    pub n_avg: usize,
    pub mode: ClassifierMode,
    pub gamma: Gamma,
}

impl Fig3Config {
    /// Three APs on the corners of a 10 m square, `t_in` at its center and
    /// twenty probes on the diagonal 3 to 30 m away.
    pub fn new(sigma: f64) -> Self {
        let t_in = Point::new(5.0, 5.0);
        Fig3Config {
            aps: vec![Point::new(0.0, 0.0), Point::new(0.0, 10.0), Point::new(10.0, 0.0)],
            t_in,
            nu: 0.1,
            trials: 1000,
            train_trials: 10_000,
            probes: diagonal_probes(t_in, 3.0, 30.0, 20),
            sigma,
            eta: DEFAULT_ETA,
            transmit_power: DEFAULT_TRANSMIT_POWER,
            epsilon: DEFAULT_EPSILON,
            lambda_fade: DEFAULT_LAMBDA_FADE,
            n_avg: 1,
            mode: ClassifierMode::Surrogate,
            gamma: Gamma::Auto,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.aps.is_empty() {
            return Err(Error::invalid("at least one AP is required"));
        }
        if self.trials == 0 || self.train_trials < 2 {
            return Err(Error::invalid("trials must be >= 1 and training trials >= 2"));
        }
        if self.n_avg == 0 {
            return Err(Error::invalid("n_avg must be >= 1"));
        }
        if !(self.nu > 0.0 && self.nu < 1.0) {
            return Err(Error::invalid(format!("nu must lie in (0, 1), got {}", self.nu)));
        }
        check_finite("t_in", &self.t_in)?;
        for a in &self.aps {
            check_finite("AP", a)?;
            if *a == self.t_in {
                return Err(Error::Singularity { what: "t_in", at: self.t_in });
            }
        }
        for p in &self.probes {
            check_finite("probe", p)?;
            if self.aps.contains(p) {
                return Err(Error::Singularity { what: "probe", at: *p });
            }
        }
        self.friis()?;
        self.rayleigh()?;
        Ok(())
    }

    fn friis(&self) -> Result<PropagationParams> {
        PropagationParams::friis(self.transmit_power, self.eta, self.sigma)
    }

    fn rayleigh(&self) -> Result<PropagationParams> {
        PropagationParams::rayleigh(self.transmit_power, self.eta, self.epsilon, self.lambda_fade)
    }
}

/// `count` points spaced evenly from `from` to `to` metres along the
/// 45° diagonal away from `origin`.
pub fn diagonal_probes(origin: Point, from: f64, to: f64, count: usize) -> Vec<Point> {
    let step = if count > 1 { (to - from) / (count - 1) as f64 } else { 0.0 };
    (0..count)
        .map(|i| {
            let d = (from + step * i as f64) / std::f64::consts::SQRT_2;
            Point::new(origin.x + d, origin.y + d)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fig3Row {
    pub position: Point,
    pub distance: f64,
    pub lambda_t: f64,
    pub rate_analytic: f64,
    pub rate_mc_friis: f64,
    pub rate_mc_rayleigh: f64,
    pub se_friis: f64,
    pub se_rayleigh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig3Table {
    pub rows: Vec<Fig3Row>,
}

pub const FIG3_HEADER: [&str; 7] =
    ["distance", "lambda_t", "rate_analytic", "rate_mc_friis", "rate_mc_rayleigh", "se_friis", "se_rayleigh"];

impl Fig3Row {
    fn values(&self) -> [f64; 7] {
        [
            self.distance,
            self.lambda_t,
            self.rate_analytic,
            self.rate_mc_friis,
            self.rate_mc_rayleigh,
            self.se_friis,
            self.se_rayleigh,
        ]
    }
}

impl Fig3Table {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(FIG3_HEADER)?;
        for r in &self.rows {
            w.write_record(r.values().iter().map(|v| format!("{v:.6}")))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Whitespace-separated columns with a `#` header line.
    pub fn write_plot_data<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# {}", FIG3_HEADER.join(" "))?;
        for r in &self.rows {
            let cols: Vec<String> = r.values().iter().map(|v| format!("{v:.6}")).collect();
            writeln!(w, "{}", cols.join(" "))?;
        }
        Ok(())
    }

    pub fn save(&self, csv_path: &Path, plot_path: Option<&Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(csv_path)?)?;
        if let Some(p) = plot_path {
            self.write_plot_data(std::io::BufWriter::new(std::fs::File::create(p)?))?;
        }
        Ok(())
    }
}

fn binomial_se(rate: f64, n: usize) -> f64 {
    (rate * (1.0 - rate) / n as f64).sqrt()
}

/// Trains at `t_in` on one channel and returns the non-target fraction at
/// every probe.
fn mc_rates<T: Trainer + Sync>(
    config: &Fig3Config,
    params: &PropagationParams,
    trainer: &T,
    seed: u64,
    tag: u64,
) -> Result<Vec<f64>> {
    let n = config.n_avg;
    let train = generate_dataset(
        &[config.t_in],
        &config.aps,
        params,
        config.train_trials * n,
        derive_seed(seed, &[TAG_TRAIN, tag]),
    )?;
    let model = trainer.fit(&average_windows(&train.blocks[0].rssi, n)?)?;
    let test = generate_dataset(
        &config.probes,
        &config.aps,
        params,
        config.trials * n,
        derive_seed(seed, &[TAG_TEST, tag]),
    )?;
    test.blocks
        .par_iter()
        .map(|b| model.non_target_fraction(&average_windows(&b.rssi, n)?))
        .collect()
}

fn mc_rates_for_mode(config: &Fig3Config, params: &PropagationParams, seed: u64, tag: u64) -> Result<Vec<f64>> {
    match config.mode {
        ClassifierMode::Surrogate => mc_rates(config, params, &SurrogateTrainer { nu: config.nu }, seed, tag),
        ClassifierMode::OcSvm => {
            mc_rates(config, params, &OcSvmTrainer(OcSvmConfig::new(config.nu, config.gamma)), seed, tag)
        }
    }
}

/// Detection rate along the probe positions: the closed form with noise
/// `σ/√N` next to Monte Carlo rates under both channels.
pub fn run_fig3(config: &Fig3Config, seed: u64) -> Result<Fig3Table> {
    config.validate()?;
    let sigma_eff = config.sigma / (config.n_avg as f64).sqrt();
    let friis = mc_rates_for_mode(config, &config.friis()?, seed, TAG_FRIIS)?;
    let rayleigh = mc_rates_for_mode(config, &config.rayleigh()?, seed, TAG_RAYLEIGH)?;
    let mut rows = Vec::with_capacity(config.probes.len());
    for (i, t) in config.probes.iter().enumerate() {
        let analytic = detection_rate_point(&RateQuery {
            t: *t,
            t_in: config.t_in,
            aps: config.aps.clone(),
            eta: config.eta,
            sigma: sigma_eff,
            nu: config.nu,
        })?;
        rows.push(Fig3Row {
            position: *t,
            distance: t.distance(&config.t_in),
            lambda_t: lambda_t(t, &config.t_in, &config.aps, config.eta)?,
            rate_analytic: analytic.rate,
            rate_mc_friis: friis[i],
            rate_mc_rayleigh: rayleigh[i],
            se_friis: binomial_se(friis[i], config.trials),
            se_rayleigh: binomial_se(rayleigh[i], config.trials),
        });
    }
    Ok(Fig3Table { rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fig2Result {
    pub lambda_fade: f64,
    pub n_avg: usize,
    pub draws: usize,
    pub single_mean: f64,
    pub single_std: f64,
    /// Windows averaged in dB.
    pub averaged_std_db: f64,
    /// Windows averaged in linear power, then converted back to dB.
    pub averaged_std_linear: f64,
}

pub const FIG2_HEADER: [&str; 7] =
    ["lambda_fade", "n_avg", "draws", "single_mean", "single_std", "averaged_std_db", "averaged_std_linear"];

impl Fig2Result {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(FIG2_HEADER)?;
        w.write_record([
            format!("{:.6}", self.lambda_fade),
            self.n_avg.to_string(),
            self.draws.to_string(),
            format!("{:.6}", self.single_mean),
            format!("{:.6}", self.single_std),
            format!("{:.6}", self.averaged_std_db),
            format!("{:.6}", self.averaged_std_linear),
        ])?;
        w.flush()?;
        Ok(())
    }
}

const FIG2_CHUNK: usize = 4096;

/// Draws `draws` windows of `n_avg` fading samples. The single-draw
/// statistics use the first sample of every window, so `n_avg = 1` gives
/// identical single and averaged spreads.
pub fn run_fig2(lambda_fade: f64, n_avg: usize, draws: usize, seed: u64) -> Result<Fig2Result> {
    if draws < 10_000 {
        return Err(Error::invalid(format!("draws must be >= 10000, got {draws}")));
    }
    if n_avg == 0 {
        return Err(Error::invalid("n_avg must be >= 1"));
    }
    if !(lambda_fade > 0.0 && lambda_fade.is_finite()) {
        return Err(Error::invalid(format!("lambda_fade must be > 0, got {lambda_fade}")));
    }
    let chunks = draws.div_ceil(FIG2_CHUNK);
    let parts: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, &[TAG_RAYLEIGH, c as u64]);
            let len = FIG2_CHUNK.min(draws - c * FIG2_CHUNK);
            let (mut first, mut db, mut lin) = (Vec::with_capacity(len), Vec::with_capacity(len), Vec::with_capacity(len));
            let mut window = vec![0.0; n_avg];
            for _ in 0..len {
                for x in window.iter_mut() {
                    *x = sample_fading(lambda_fade, &mut rng);
                }
                first.push(window[0]);
                db.push(window.iter().sum::<f64>() / n_avg as f64);
                let power = window.iter().map(|x| 10f64.powf(x / 10.0)).sum::<f64>() / n_avg as f64;
                lin.push(10.0 * power.log10());
            }
            (first, db, lin)
        })
        .collect();
    let mut first = Vec::with_capacity(draws);
    let mut db = Vec::with_capacity(draws);
    let mut lin = Vec::with_capacity(draws);
    for (f, d, l) in parts {
        first.extend(f);
        db.extend(d);
        lin.extend(l);
    }
    Ok(Fig2Result {
        lambda_fade,
        n_avg,
        draws,
        single_mean: mean(&first),
        single_std: population_std(&first),
        averaged_std_db: population_std(&db),
        averaged_std_linear: population_std(&lin),
    })
}

/// A rectangular store with four AP candidates, three target zones, one
/// inside non-target zone, a gate on the lower wall and an outside area
/// beyond it.
#[derive(Debug, Clone, PartialEq)]
pub struct StoreLayout {
    pub store: Polygon,
    pub ap_candidates: Vec<Point>,
    /// Labelled `Z1`..`Z3`.
    pub target_zones: Vec<Polygon>,
    /// `Z4`.
    pub inside_zone: Polygon,
    /// `Z5`.
    pub outside: Polygon,
    pub gate: Point,
}

pub const OUTSIDE_ZONE: &str = "Z5";
pub const INSIDE_ZONE: &str = "Z4";

fn square(cx: f64, cy: f64, half: f64) -> Polygon {
    Polygon::rectangle(Point::new(cx - half, cy - half), Point::new(cx + half, cy + half))
        .expect("non-degenerate square")
}

impl StoreLayout {
    /// 20 m × 12 m store, gate at the middle of the lower wall.
    pub fn synthetic() -> Self {
        StoreLayout {
            store: Polygon::rectangle(Point::new(0.0, 0.0), Point::new(20.0, 12.0)).expect("store"),
            ap_candidates: vec![
                Point::new(1.0, 11.0),
                Point::new(19.0, 11.0),
                Point::new(1.0, 1.0),
                Point::new(19.0, 1.0),
            ],
            target_zones: vec![square(4.0, 8.0, 1.0), square(10.0, 10.0, 1.0), square(16.0, 5.0, 1.0)],
            inside_zone: square(9.0, 4.0, 1.5),
            outside: Polygon::rectangle(Point::new(6.0, -8.0), Point::new(14.0, -2.0)).expect("outside"),
            gate: Point::new(10.0, 0.0),
        }
    }

    pub fn zone_name(index: usize) -> String {
        format!("Z{}", index + 1)
    }

    /// Placement over the four AP candidates and the target-zone centroids.
    pub fn placement_problem(&self, k: usize, m: usize, eta: f64) -> PlacementProblem {
        PlacementProblem {
            ap_candidates: self.ap_candidates.clone(),
            area_candidates: self.target_zones.iter().map(Polygon::centroid).collect(),
            k,
            m,
            gate: self.gate,
            eta,
        }
    }

    /// Zones `Z1`..`Z5` in order.
    pub fn zones(&self) -> Vec<(String, &Polygon)> {
        let mut out: Vec<(String, &Polygon)> =
            self.target_zones.iter().enumerate().map(|(i, z)| (Self::zone_name(i), z)).collect();
        out.push((INSIDE_ZONE.to_string(), &self.inside_zone));
        out.push((OUTSIDE_ZONE.to_string(), &self.outside));
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoreConfig {
    pub params: PropagationParams,
    /// Data sets collected per zone, each at one random position.
    pub sets_per_zone: usize,
    /// Raw RSSI rows per data set.
    pub rows_per_set: usize,
}

impl StoreConfig {
    pub fn friis(sigma: f64) -> Result<Self> {
        Ok(StoreConfig {
            params: PropagationParams::friis(DEFAULT_TRANSMIT_POWER, DEFAULT_ETA, sigma)?,
            sets_per_zone: 8,
            rows_per_set: 200,
        })
    }
}

/// Raw data sets for every zone of the store, keyed by zone name. Each
/// set places the object at a uniform random point of its zone.
pub fn store_zone_sets(
    layout: &StoreLayout,
    aps: &[Point],
    config: &StoreConfig,
    seed: u64,
) -> Result<BTreeMap<String, Vec<Matrix>>> {
    if config.sets_per_zone == 0 || config.rows_per_set == 0 {
        return Err(Error::invalid("sets_per_zone and rows_per_set must be >= 1"));
    }
    let zones = layout.zones();
    zones
        .par_iter()
        .enumerate()
        .map(|(zi, (name, poly))| {
            let domain = Domain::Polygon((*poly).clone());
            let positions: Vec<Point> = (0..config.sets_per_zone)
                .map(|s| domain.sample(&mut substream(seed, &[TAG_DOMAIN, zi as u64, s as u64])))
                .collect();
            let data = generate_dataset(
                &positions,
                aps,
                &config.params,
                config.rows_per_set,
                derive_seed(seed, &[TAG_TRAIN, zi as u64]),
            )?;
            Ok((name.clone(), data.blocks.into_iter().map(|b| b.rssi).collect()))
        })
        .collect()
}

/// LOOCV input with target zone `target` (0-based) and every other zone
/// as negative.
pub fn store_datasets(
    layout: &StoreLayout,
    target: usize,
    aps: &[Point],
    config: &StoreConfig,
    seed: u64,
) -> Result<LabeledDatasets> {
    if target >= layout.target_zones.len() {
        return Err(Error::invalid(format!("target zone index {target} out of range")));
    }
    let mut sets = store_zone_sets(layout, aps, config, seed)?;
    let target_sets = sets.remove(&StoreLayout::zone_name(target)).expect("zone present");
    Ok(LabeledDatasets { target_sets, negative_sets: sets })
}
