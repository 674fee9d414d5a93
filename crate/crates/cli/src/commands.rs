use std::collections::BTreeMap;
use std::path::Path;

use areawatch::analytic::{detection_rate_domain, detection_rate_point, RateQuery};
use areawatch::detector::Detector;
use areawatch::evaluation::{loocv_detection_rate, EvalConfig, LabeledDatasets};
use areawatch::features::average_windows;
use areawatch::ocsvm::{Gamma, OcSvmConfig, Verdict};
use areawatch::placement::{optimize as rank_placements, validate_ranking, McRateConfig, RateSource};
use areawatch::propagation::{generate_dataset, PropagationParams, RssiDataset};
use areawatch::rng::{substream, TAG_DOMAIN};
use areawatch::simharness::{diagonal_probes, run_fig2, run_fig3, Fig3Config};
use areawatch::{Domain, Error, Matrix, Point};

use crate::args::*;
use crate::layout::LayoutFile;
use crate::output::*;
use crate::{CliError, CliResult};

/// Fails early with the offending path in the message.
fn require_file(path: &Path) -> CliResult<()> {
    std::fs::metadata(path)
        .map(|_| ())
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())).into())
}

fn channel_params(c: &ChannelOpts, eta: f64) -> areawatch::Result<PropagationParams> {
    match c.channel {
        ChannelArg::Friis => PropagationParams::friis(c.tx_power, eta, c.sigma),
        ChannelArg::Rayleigh => PropagationParams::rayleigh(c.tx_power, eta, c.epsilon, c.lambda_fade),
    }
}

fn simulation_positions(a: &SimulateArgs, layout: &LayoutFile) -> CliResult<Vec<Point>> {
    let draw = |domain: &Domain, count: usize| -> Vec<Point> {
        (0..count).map(|j| domain.sample(&mut substream(a.seed, &[TAG_DOMAIN, j as u64]))).collect()
    };
    match a.at.as_str() {
        "areas" => Ok(layout.areas.clone()),
        "gate" => Ok(vec![layout.gate]),
        "outside" => {
            let poly = layout
                .outside
                .clone()
                .ok_or_else(|| CliError::Usage("layout has no \"outside\" polygon".into()))?;
            Ok(draw(&Domain::Polygon(poly), a.points.unwrap_or(1)))
        }
        other => {
            let idx = other
                .strip_prefix("area:")
                .and_then(|i| i.parse::<usize>().ok())
                .filter(|&i| (1..=layout.areas.len()).contains(&i))
                .ok_or_else(|| {
                    CliError::Usage(format!(
                        "--at must be areas, gate, outside or area:I with I in 1..={}, got {other:?}",
                        layout.areas.len()
                    ))
                })?;
            let center = layout.areas[idx - 1];
            match a.points {
                None => Ok(vec![center]),
                Some(n) => Ok(draw(&Domain::disc(center, a.radius)?, n)),
            }
        }
    }
}

pub fn simulate(a: &SimulateArgs, check: bool) -> CliResult<()> {
    require_file(&a.layout)?;
    let layout = LayoutFile::load(&a.layout)?;
    let aps: Vec<Point> = if a.aps.is_empty() {
        layout.aps.clone()
    } else {
        a.aps
            .iter()
            .map(|&i| {
                layout.aps.get(i.wrapping_sub(1)).copied().ok_or_else(|| {
                    CliError::Usage(format!("AP index {i} out of range 1..={}", layout.aps.len()))
                })
            })
            .collect::<CliResult<_>>()?
    };
    let params = channel_params(&a.channel, a.eta.unwrap_or(layout.eta))?;
    let positions = simulation_positions(a, &layout)?;
    let data = generate_dataset(&positions, &aps, &params, a.trials, a.seed)?;
    let mut buf = Vec::new();
    data.write_csv(&mut buf)?;
    if check {
        let back = RssiDataset::read_csv(buf.as_slice())?;
        if back.total_rows() != positions.len() * a.trials {
            return Err(CliError::Usage("self-check failed: row count changed on re-read".into()));
        }
    }
    std::fs::write(&a.out, buf)?;
    Ok(())
}

/// Averages each contiguous position block separately. Blocks shorter than
/// `n` produce no window.
fn block_windows(data: &RssiDataset, n: usize) -> CliResult<Vec<(Point, Matrix)>> {
    if n == 0 {
        return Err(CliError::Usage("--n-avg must be >= 1".into()));
    }
    let mut out = Vec::new();
    for b in &data.blocks {
        if b.rssi.rows() >= n {
            out.push((b.position, average_windows(&b.rssi, n)?));
        }
    }
    Ok(out)
}

fn stacked_windows(data: &RssiDataset, n: usize) -> CliResult<Matrix> {
    let blocks = block_windows(data, n)?;
    if blocks.is_empty() {
        return Ok(Matrix::zeros(0, data.ap_count));
    }
    Ok(Matrix::vstack(blocks.iter().map(|(_, m)| m))?)
}

pub fn train(a: &TrainArgs) -> CliResult<()> {
    require_file(&a.data)?;
    let data = RssiDataset::load_csv(&a.data)?;
    let windows = stacked_windows(&data, a.n_avg)?;
    if windows.rows() < 2 {
        return Err(Error::TooFewRows { needed: 2 * a.n_avg, got: data.total_rows() }.into());
    }
    let config = OcSvmConfig {
        kkt_tolerance: a.tolerance,
        max_iterations: a.max_iterations,
        ..OcSvmConfig::new(a.nu, a.gamma)
    };
    let (detector, summary) = Detector::fit_with_summary(&windows, &config)?;
    detector.save(&a.out)?;
    eprintln!(
        "trained on {} windows: {} support vectors, gamma {:.6}, rho {:.6}, {} iterations",
        windows.rows(),
        detector.model.support_vectors.len(),
        detector.model.gamma,
        detector.model.rho,
        summary.iterations
    );
    Ok(())
}

fn load_or_empty(path: &Path) -> CliResult<Option<RssiDataset>> {
    let text = std::fs::read_to_string(path)?;
    if text.trim().is_empty() {
        return Ok(None);
    }
    Ok(Some(RssiDataset::read_csv(text.as_bytes())?))
}

pub fn detect(a: &DetectArgs, check: bool) -> CliResult<()> {
    use areawatch::detector::Classifier;

    require_file(&a.model)?;
    require_file(&a.data)?;
    let detector = Detector::load(&a.model)?;
    let header: Vec<&str> = DETECT_SCHEMA.iter().map(|(n, _)| *n).collect();
    let mut rows = Vec::new();
    if let Some(data) = load_or_empty(&a.data)? {
        if data.ap_count != detector.features() {
            return Err(Error::DimensionMismatch { expected: detector.features(), found: data.ap_count }.into());
        }
        let mut window = 0usize;
        for (pos, m) in block_windows(&data, a.n_avg)? {
            for row in m.iter_rows() {
                window += 1;
                let v = detector.margin(row)?;
                rows.push(vec![
                    window.to_string(),
                    f6(pos.x),
                    f6(pos.y),
                    f6(v),
                    Verdict::from_margin(v).as_str().to_string(),
                ]);
            }
        }
    }
    emit_csv(&csv_text(&header, &rows)?, DETECT_SCHEMA, a.out.as_deref(), check)
}

pub fn rate(a: &RateArgs, check: bool) -> CliResult<()> {
    if a.n_avg == 0 {
        return Err(CliError::Usage("--n-avg must be >= 1".into()));
    }
    let sigma = a.sigma / (a.n_avg as f64).sqrt();
    if let Some((inner, outer)) = a.annulus {
        let seed = a.seed.ok_or_else(|| CliError::Usage("--seed is required with --annulus".into()))?;
        let domain = Domain::annulus(a.t_in, inner, outer)?;
        let r = detection_rate_domain(&domain, &a.t_in, &a.aps, a.eta, sigma, a.nu, a.samples, seed)?;
        let header: Vec<&str> = DOMAIN_RATE_SCHEMA.iter().map(|(n, _)| *n).collect();
        let text = csv_text(&header, &[vec![f6(r.rate), f6(r.std_error), r.samples.to_string()]])?;
        return emit_csv(&text, DOMAIN_RATE_SCHEMA, a.out.as_deref(), check);
    }
    if a.probes.is_empty() {
        return Err(CliError::Usage("give at least one --at X,Y probe or --annulus".into()));
    }
    let mut rows = Vec::new();
    for t in &a.probes {
        let r = detection_rate_point(&RateQuery {
            t: *t,
            t_in: a.t_in,
            aps: a.aps.clone(),
            eta: a.eta,
            sigma,
            nu: a.nu,
        })?;
        rows.push(vec![f6(t.x), f6(t.y), f6(t.distance(&a.t_in)), f6(r.lambda_t), f6(r.delta), f6(r.rate)]);
    }
    let header: Vec<&str> = RATE_SCHEMA.iter().map(|(n, _)| *n).collect();
    emit_csv(&csv_text(&header, &rows)?, RATE_SCHEMA, a.out.as_deref(), check)
}

fn indices(ix: &[usize]) -> String {
    ix.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(";")
}

pub fn optimize(a: &OptimizeArgs, check: bool) -> CliResult<()> {
    require_file(&a.layout)?;
    let layout = LayoutFile::load(&a.layout)?;
    let problem = layout.problem();
    let count = problem.combination_count();
    if count > a.max_combinations {
        return Err(CliError::Usage(format!(
            "{count} combinations exceed the limit of {}; raise --max-combinations to enumerate anyway",
            a.max_combinations
        )));
    }
    let Some(mode) = a.validate else {
        let sols = rank_placements(&problem, a.max_combinations)?;
        let rows: Vec<Vec<String>> = sols
            .iter()
            .map(|s| vec![s.rank.to_string(), indices(&s.ap_indices), indices(&s.area_indices), f6(s.objective)])
            .collect();
        let header: Vec<&str> = OPTIMIZE_SCHEMA.iter().map(|(n, _)| *n).collect();
        return emit_csv(&csv_text(&header, &rows)?, OPTIMIZE_SCHEMA, a.out.as_deref(), check);
    };
    if a.n_avg == 0 {
        return Err(CliError::Usage("--n-avg must be >= 1".into()));
    }
    let (source, seed) = match mode {
        ValidateArg::Analytic => (RateSource::Analytic, a.seed.unwrap_or(0)),
        ValidateArg::Mc => {
            let seed = a.seed.ok_or_else(|| CliError::Usage("--seed is required with --validate mc".into()))?;
            let params = PropagationParams::friis(a.tx_power, problem.eta, a.sigma)?;
            (RateSource::MonteCarlo(McRateConfig { params, n_avg: a.n_avg, gamma: Gamma::Auto }), seed)
        }
    };
    let sigma = a.sigma / (a.n_avg as f64).sqrt();
    let report = validate_ranking(&problem, sigma, a.nu, a.trials, &source, seed)?;
    let rows: Vec<Vec<String>> = report
        .solutions
        .iter()
        .zip(&report.rates)
        .map(|(s, r)| {
            vec![s.rank.to_string(), indices(&s.ap_indices), indices(&s.area_indices), f6(s.objective), f6(*r)]
        })
        .collect();
    let header: Vec<&str> = OPTIMIZE_RATE_SCHEMA.iter().map(|(n, _)| *n).collect();
    emit_csv(&csv_text(&header, &rows)?, OPTIMIZE_RATE_SCHEMA, a.out.as_deref(), check)?;
    eprintln!("pearson r = {:.6}, p = {:.6}", report.r, report.p_value);
    Ok(())
}

fn data_sets(path: &Path) -> CliResult<Vec<Matrix>> {
    require_file(path)?;
    let data = RssiDataset::load_csv(path)?;
    Ok(data.blocks.into_iter().map(|b| b.rssi).collect())
}

pub fn eval(a: &EvalArgs, check: bool) -> CliResult<()> {
    if a.negatives.is_empty() {
        return Err(CliError::Usage("give at least one --negative ZONE=CSV".into()));
    }
    let mut negative_sets: BTreeMap<String, Vec<Matrix>> = BTreeMap::new();
    for (zone, path) in &a.negatives {
        negative_sets.entry(zone.clone()).or_default().extend(data_sets(path)?);
    }
    let data = LabeledDatasets { target_sets: data_sets(&a.target)?, negative_sets };
    let config = EvalConfig { n_avg: a.n_avg, positive: a.positive.into(), outside_zone: a.outside.clone() };
    let report = loocv_detection_rate(&data, &OcSvmConfig::new(a.nu, a.gamma), &config)?;
    if let Some(p) = &a.json {
        std::fs::write(p, serde_json::to_string_pretty(&report).map_err(Error::from)? + "\n")?;
    }
    if let Some(p) = &a.folds_csv {
        let rows: Vec<Vec<String>> = report
            .folds
            .iter()
            .map(|f| {
                vec![
                    (f.fold + 1).to_string(),
                    f.confusion.tp.to_string(),
                    f.confusion.fp.to_string(),
                    f.confusion.tn.to_string(),
                    f.confusion.fn_.to_string(),
                    f6(f.precision),
                    f6(f.recall),
                    f6(f.f_measure),
                    f6(f.target_acceptance),
                    f6(f.detection_rate),
                ]
            })
            .collect();
        let header: Vec<&str> = FOLDS_SCHEMA.iter().map(|(n, _)| *n).collect();
        emit_csv(&csv_text(&header, &rows)?, FOLDS_SCHEMA, Some(p), check)?;
    }
    emit(&report.to_string(), None)
}

pub fn fig2(a: &Fig2Args, check: bool) -> CliResult<()> {
    let r = run_fig2(a.lambda_fade, a.n_avg, a.draws, a.seed)?;
    let mut buf = Vec::new();
    r.write_csv(&mut buf)?;
    let text = String::from_utf8(buf).expect("csv output is UTF-8");
    emit_csv(&text, FIG2_SCHEMA, a.out.as_deref(), check)
}

pub fn fig3(a: &Fig3Args, check: bool) -> CliResult<()> {
    let base = Fig3Config::new(a.sigma);
    let config = Fig3Config {
        nu: a.nu,
        trials: a.trials,
        train_trials: a.train_trials,
        n_avg: a.n_avg,
        eta: a.eta,
        mode: a.mode,
        probes: diagonal_probes(base.t_in, a.range.0, a.range.1, a.probes),
        ..base
    };
    let table = run_fig3(&config, a.seed)?;
    let mut buf = Vec::new();
    table.write_csv(&mut buf)?;
    let text = String::from_utf8(buf).expect("csv output is UTF-8");
    emit_csv(&text, FIG3_SCHEMA, a.out.as_deref(), check)?;
    if let Some(p) = &a.plot {
        table.write_plot_data(std::io::BufWriter::new(std::fs::File::create(p)?))?;
    }
    Ok(())
}
