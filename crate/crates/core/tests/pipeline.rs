use areawatch::analytic::{detection_rate_point, RateQuery};
use areawatch::detector::{Classifier, Detector};
use areawatch::features::average_windows;
use areawatch::ocsvm::{Gamma, OcSvmConfig};
use areawatch::placement::{optimize, validate_ranking, RateSource, DEFAULT_COMBINATION_LIMIT};
use areawatch::propagation::{generate_dataset, PropagationParams, RssiDataset};
use areawatch::simharness::{run_fig2, run_fig3, Fig3Config, StoreLayout, DEFAULT_SIGMA};
use areawatch::{Point, Verdict};

fn aps() -> Vec<Point> {
    vec![Point::new(0.0, 0.0), Point::new(0.0, 10.0), Point::new(10.0, 0.0), Point::new(10.0, 10.0)]
}

#[test]
fn simulate_train_detect_round_trip() {
    let params = PropagationParams::friis(-30.0, 2.0, DEFAULT_SIGMA).unwrap();
    let t_in = Point::new(3.0, 4.0);
    let data = generate_dataset(&[t_in], &aps(), &params, 2000, 9).unwrap();

    let dir = std::env::temp_dir().join(format!("areawatch-pipeline-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let csv = dir.join("train.csv");
    data.save_csv(&csv).unwrap();
    let loaded = RssiDataset::load_csv(&csv).unwrap();
    assert_eq!(loaded.total_rows(), 2000);

    let nu = 0.1;
    let windows = average_windows(&loaded.blocks[0].rssi, 5).unwrap();
    let detector = Detector::fit(&windows, &OcSvmConfig::new(nu, Gamma::Auto)).unwrap();
    assert_eq!(detector.model.gamma, 0.25);
    let model_path = dir.join("model.json");
    detector.save(&model_path).unwrap();
    let back = Detector::load(&model_path).unwrap();
    assert_eq!(back, detector);

    let n = windows.rows() as f64;
    let accepted = 1.0 - back.non_target_fraction(&windows).unwrap();
    assert!(accepted >= 1.0 - nu - 3.0 * (nu * (1.0 - nu) / n).sqrt(), "accepted {accepted}");

    let far = generate_dataset(&[Point::new(25.0, 25.0)], &aps(), &params, 200, 10).unwrap();
    let far_windows = average_windows(&far.blocks[0].rssi, 5).unwrap();
    assert!(back.non_target_fraction(&far_windows).unwrap() > 0.95);
    assert_eq!(back.classify(far_windows.row(0)).unwrap(), Verdict::NonTarget);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn fig3_rates_grow_along_the_ray() {
    let table = run_fig3(&Fig3Config::new(DEFAULT_SIGMA), 21).unwrap();
    let rows = &table.rows;
    for w in rows.windows(2) {
        assert!(w[1].lambda_t > w[0].lambda_t);
        assert!(w[1].rate_analytic > w[0].rate_analytic);
        for (a, b, sa, sb) in [
            (w[0].rate_mc_friis, w[1].rate_mc_friis, w[0].se_friis, w[1].se_friis),
            (w[0].rate_mc_rayleigh, w[1].rate_mc_rayleigh, w[0].se_rayleigh, w[1].se_rayleigh),
        ] {
            assert!(b >= a - 3.0 * (sa * sa + sb * sb).sqrt(), "{a} -> {b}");
        }
    }
}

#[test]
fn fig3_inside_probe_is_calibrated() {
    for nu in [0.02, 0.1, 0.5] {
        let c = Fig3Config { nu, probes: vec![Point::new(5.0, 5.0)], ..Fig3Config::new(DEFAULT_SIGMA) };
        let row = run_fig3(&c, 8).unwrap().rows[0];
        assert_eq!(row.rate_analytic, nu);
        let tol = 3.0 * (nu * (1.0 - nu) / 1000.0).sqrt();
        assert!((row.rate_mc_friis - nu).abs() <= tol, "nu {nu}: {}", row.rate_mc_friis);
        // no bound on the Rayleigh column: the chi-squared threshold assumes
        // Gaussian features, which log-exponential fading is not
    }
}

#[test]
fn fig2_spreads() {
    let one = run_fig2(0.561, 1, 1_000_000, 3).unwrap();
    assert!(one.single_mean.abs() <= 0.05);
    assert!((one.single_std - 5.57).abs() <= 0.05);
    let five = run_fig2(0.561, 5, 200_000, 3).unwrap();
    assert!((five.averaged_std_db - 5.57 / 5f64.sqrt()).abs() <= 0.05, "{}", five.averaged_std_db);
    // linear-power averaging is tighter still
    assert!((five.averaged_std_linear - 2.04).abs() <= 0.05, "{}", five.averaged_std_linear);
}

#[test]
fn store_placement_analytic_ranking() {
    let store = StoreLayout::synthetic();
    for (k, m) in [(1, 1), (1, 2), (2, 1), (2, 2), (3, 1)] {
        let problem = store.placement_problem(k, m, 2.0);
        let sols = optimize(&problem, DEFAULT_COMBINATION_LIMIT).unwrap();
        assert_eq!(sols[0].rank, 1);
        if sols.len() < 3 {
            continue;
        }
        let report = validate_ranking(&problem, DEFAULT_SIGMA, 0.02, 100, &RateSource::Analytic, 0).unwrap();
        assert!((report.r - 1.0).abs() < 1e-12, "k={k} m={m}: r={}", report.r);
        // top solution's analytic rate is the best one
        let top = &report.solutions[0];
        let aps: Vec<Point> = top.ap_indices.iter().map(|&i| problem.ap_candidates[i]).collect();
        let best = top
            .area_indices
            .iter()
            .map(|&t| {
                detection_rate_point(&RateQuery {
                    t: problem.gate,
                    t_in: problem.area_candidates[t],
                    aps: aps.clone(),
                    eta: 2.0,
                    sigma: DEFAULT_SIGMA,
                    nu: 0.02,
                })
                .unwrap()
                .rate
            })
            .fold(f64::INFINITY, f64::min);
        assert_eq!(best, report.rates[0]);
        assert!(report.rates.iter().all(|&r| r <= best));
    }
}
