//! Path-loss means and stochastic RSSI samples.
//!
//! Two channels are supported:
//!
//! * **Friis with Gaussian shadowing**: `r = P_T - 10 η lg d + X`, `X ~ N(0, σ²)`.
//! * **Non-singular path loss with Rayleigh fading**:
//!   `r = P_T - 10 lg(ε + d^η) + 𝒳`, where `10^(𝒳/10)` is exponential with
//!   rate `λ`. The fading term therefore has density
//!   `λ 10^(x/10) exp(-λ 10^(x/10)) ln(10)/10` and is sampled exactly as
//!   `10 lg E`, `E ~ Exp(λ)`.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{check_finite, Point};
use crate::matrix::Matrix;
use crate::rng::substream;

/// Fading rate for which the dB-domain fading term has zero mean.
pub const DEFAULT_LAMBDA_FADE: f64 = 0.561;
pub const DEFAULT_EPSILON: f64 = 0.1;
/// Standard deviation of the Rayleigh fading term at the default rate, dB.
pub const RAYLEIGH_FADING_STD_DB: f64 = 5.57;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Channel {
    FriisGaussian { sigma: f64 },
    NonSingularRayleigh { epsilon: f64, lambda_fade: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationParams {
    /// dBm
    pub transmit_power: f64,
    pub path_loss_exponent: f64,
    pub channel: Channel,
}

impl PropagationParams {
    pub fn friis(transmit_power: f64, path_loss_exponent: f64, sigma: f64) -> Result<Self> {
        let p = PropagationParams {
            transmit_power,
            path_loss_exponent,
            channel: Channel::FriisGaussian { sigma },
        };
        p.validate()?;
        Ok(p)
    }

    pub fn rayleigh(
        transmit_power: f64,
        path_loss_exponent: f64,
        epsilon: f64,
        lambda_fade: f64,
    ) -> Result<Self> {
        let p = PropagationParams {
            transmit_power,
            path_loss_exponent,
            channel: Channel::NonSingularRayleigh { epsilon, lambda_fade },
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.transmit_power.is_finite() {
            return Err(Error::invalid("transmit power must be finite"));
        }
        if !(self.path_loss_exponent > 0.0 && self.path_loss_exponent.is_finite()) {
            return Err(Error::invalid(format!(
                "path-loss exponent must be > 0, got {}",
                self.path_loss_exponent
            )));
        }
        match self.channel {
            Channel::FriisGaussian { sigma } => {
                if !(sigma >= 0.0 && sigma.is_finite()) {
                    return Err(Error::invalid(format!("sigma must be >= 0, got {sigma}")));
                }
            }
            Channel::NonSingularRayleigh { epsilon, lambda_fade } => {
                if !(epsilon > 0.0 && epsilon.is_finite()) {
                    return Err(Error::invalid(format!("epsilon must be > 0, got {epsilon}")));
                }
                if !(lambda_fade > 0.0 && lambda_fade.is_finite()) {
                    return Err(Error::invalid(format!(
                        "fading rate must be > 0, got {lambda_fade}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Deterministic received power in dBm at `t` from a transmitter at `a`.
pub fn mean_rssi(t: &Point, a: &Point, p: &PropagationParams) -> Result<f64> {
    check_finite("position", t)?;
    check_finite("access point", a)?;
    let d = t.distance(a);
    match p.channel {
        Channel::FriisGaussian { .. } => {
            if d <= 0.0 {
                return Err(Error::Singularity { what: "position", at: *t });
            }
            Ok(p.transmit_power - 10.0 * p.path_loss_exponent * d.log10())
        }
        Channel::NonSingularRayleigh { epsilon, .. } => {
            Ok(p.transmit_power - 10.0 * (epsilon + d.powf(p.path_loss_exponent)).log10())
        }
    }
}

/// One dB-domain Rayleigh fading draw.
pub fn sample_fading<R: Rng + ?Sized>(lambda_fade: f64, rng: &mut R) -> f64 {
    let e: f64 = Exp::new(lambda_fade).expect("validated fading rate").sample(rng);
    10.0 * e.log10()
}

/// Zero-mean noise term for the channel.
pub fn sample_noise<R: Rng + ?Sized>(channel: &Channel, rng: &mut R) -> f64 {
    match *channel {
        Channel::FriisGaussian { sigma } => {
            if sigma == 0.0 {
                0.0
            } else {
                Normal::new(0.0, sigma).expect("validated sigma").sample(rng)
            }
        }
        Channel::NonSingularRayleigh { lambda_fade, .. } => sample_fading(lambda_fade, rng),
    }
}

pub fn sample_rssi<R: Rng + ?Sized>(
    t: &Point,
    a: &Point,
    p: &PropagationParams,
    rng: &mut R,
) -> Result<f64> {
    Ok(mean_rssi(t, a, p)? + sample_noise(&p.channel, rng))
}

/// Density of the dB-domain Rayleigh fading term.
pub fn fading_pdf(x: f64, lambda_fade: f64) -> f64 {
    let u = 10f64.powf(x / 10.0);
    let v = lambda_fade * u;
    if !v.is_finite() {
        return 0.0;
    }
    v * (-v).exp() * std::f64::consts::LN_10 / 10.0
}

/// Simulated observations for one transmitter position.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionBlock {
    pub position: Point,
    /// trials x k, dBm
    pub rssi: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RssiDataset {
    /// Receiver positions, when known (absent for data loaded from CSV).
    pub aps: Option<Vec<Point>>,
    pub ap_count: usize,
    pub blocks: Vec<PositionBlock>,
}

/// Draws `trials` RSSI vectors for every position.
///
/// Each `(position, trial)` pair gets its own sub-stream of `seed`, so the
/// result is identical however the work is scheduled.
pub fn generate_dataset(
    positions: &[Point],
    aps: &[Point],
    params: &PropagationParams,
    trials: usize,
    seed: u64,
) -> Result<RssiDataset> {
    if trials == 0 {
        return Err(Error::invalid("trials must be >= 1"));
    }
    if aps.is_empty() {
        return Err(Error::invalid("at least one access point is required"));
    }
    params.validate()?;
    let mut blocks = Vec::with_capacity(positions.len());
    for (pi, pos) in positions.iter().enumerate() {
        let means = aps
            .iter()
            .map(|a| mean_rssi(pos, a, params))
            .collect::<Result<Vec<_>>>()?;
        let rows: Vec<Vec<f64>> = (0..trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = substream(seed, &[pi as u64, trial as u64]);
                means.iter().map(|m| m + sample_noise(&params.channel, &mut rng)).collect()
            })
            .collect();
        blocks.push(PositionBlock { position: *pos, rssi: Matrix::from_rows(&rows)? });
    }
    Ok(RssiDataset { aps: Some(aps.to_vec()), ap_count: aps.len(), blocks })
}

impl RssiDataset {
    pub fn total_rows(&self) -> usize {
        self.blocks.iter().map(|b| b.rssi.rows()).sum()
    }

    /// Writes `pos_x,pos_y,ap_1,...,ap_k` rows with 6 decimals.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(csv_header(self.ap_count))?;
        for block in &self.blocks {
            for row in block.rssi.iter_rows() {
                let mut rec = Vec::with_capacity(row.len() + 2);
                rec.push(format!("{:.6}", block.position.x));
                rec.push(format!("{:.6}", block.position.y));
                rec.extend(row.iter().map(|v| format!("{v:.6}")));
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    /// Parses the CSV layout written by [`RssiDataset::write_csv`].
    ///
    /// Consecutive rows sharing a position form one block. Rows with an empty
    /// RSSI field (an AP that heard nothing) are rejected.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = r.headers()?.clone();
        let ap_count = check_header(&header)?;
        let mut blocks: Vec<PositionBlock> = Vec::new();
        let mut current: Option<(Point, Vec<f64>)> = None;
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let row_no = line + 2;
            if rec.len() != ap_count + 2 {
                return Err(Error::Format(format!(
                    "row {row_no}: expected {} fields, found {}",
                    ap_count + 2,
                    rec.len()
                )));
            }
            let mut vals = Vec::with_capacity(rec.len());
            for (j, field) in rec.iter().enumerate() {
                if field.is_empty() {
                    return Err(Error::Format(format!(
                        "row {row_no}: missing value in column {}",
                        &header[j]
                    )));
                }
                let v: f64 = field.parse().map_err(|_| {
                    Error::Format(format!("row {row_no}: cannot parse {field:?} as a number"))
                })?;
                if !v.is_finite() {
                    return Err(Error::NonFinite { row: line, column: j });
                }
                vals.push(v);
            }
            let pos = Point::new(vals[0], vals[1]);
            match &mut current {
                Some((p, data)) if *p == pos => data.extend_from_slice(&vals[2..]),
                _ => {
                    if let Some((p, data)) = current.take() {
                        blocks.push(finish_block(p, data, ap_count)?);
                    }
                    current = Some((pos, vals[2..].to_vec()));
                }
            }
        }
        if let Some((p, data)) = current {
            blocks.push(finish_block(p, data, ap_count)?);
        }
        Ok(RssiDataset { aps: None, ap_count, blocks })
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        RssiDataset::read_csv(std::io::BufReader::new(f))
    }
}

fn finish_block(position: Point, data: Vec<f64>, k: usize) -> Result<PositionBlock> {
    let rows = data.len() / k;
    Ok(PositionBlock { position, rssi: Matrix::from_vec(rows, k, data)? })
}

pub fn csv_header(k: usize) -> Vec<String> {
    let mut h = vec!["pos_x".to_string(), "pos_y".to_string()];
    h.extend((1..=k).map(|i| format!("ap_{i}")));
    h
}

fn check_header(header: &csv::StringRecord) -> Result<usize> {
    if header.len() < 3 {
        return Err(Error::Format("header needs pos_x,pos_y and at least one ap column".into()));
    }
    let k = header.len() - 2;
    let expected = csv_header(k);
    for (got, want) in header.iter().zip(&expected) {
        if got != want {
            return Err(Error::Format(format!("unexpected header column {got:?}, wanted {want:?}")));
        }
    }
    Ok(k)
}
