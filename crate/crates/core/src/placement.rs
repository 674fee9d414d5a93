//! Choosing AP positions and target areas.
//!
//! The detection rate at the gate `t_d` is monotone in
//! `min_{t_in} Σ_a (10 η lg(|t_in − a| / |t_d − a|))²`, so the search
//! maximizes the η-free objective `min_{t_in} Σ_a lg²(|t_in − a| / |t_d − a|)`
//! over every `k`-subset of AP candidates and `m`-subset of area centroids.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{detection_rate_point, RateQuery};
use crate::detector::{Classifier, Detector};
use crate::error::{Error, Result};
use crate::evaluation::{average_ranks, pearson};
use crate::features::average_windows;
use crate::geometry::{check_finite, Point};
use crate::ocsvm::{Gamma, OcSvmConfig};
use crate::propagation::{generate_dataset, PropagationParams};
use crate::rng::{derive_seed, TAG_TEST, TAG_TRAIN};

pub const DEFAULT_COMBINATION_LIMIT: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementProblem {
    pub ap_candidates: Vec<Point>,
    /// Target-area centroids.
    pub area_candidates: Vec<Point>,
    pub k: usize,
    pub m: usize,
    pub gate: Point,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementSolution {
    /// 0-based, ascending.
    pub ap_indices: Vec<usize>,
    /// 0-based, ascending.
    pub area_indices: Vec<usize>,
    pub objective: f64,
    /// 1-based.
    pub rank: usize,
}

fn distinct(points: &[Point], what: &str) -> Result<()> {
    for (i, p) in points.iter().enumerate() {
        check_finite(what, p)?;
        if points[..i].iter().any(|q| q == p) {
            return Err(Error::invalid(format!("{what} candidates must be pairwise distinct")));
        }
    }
    Ok(())
}

impl PlacementProblem {
    pub fn validate(&self) -> Result<()> {
        let (big_k, big_m) = (self.ap_candidates.len(), self.area_candidates.len());
        if !(1..=big_k).contains(&self.k) {
            return Err(Error::invalid(format!("k = {} must lie in 1..={big_k}", self.k)));
        }
        if !(1..=big_m).contains(&self.m) {
            return Err(Error::invalid(format!("m = {} must lie in 1..={big_m}", self.m)));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::invalid(format!("eta must be > 0, got {}", self.eta)));
        }
        distinct(&self.ap_candidates, "AP")?;
        distinct(&self.area_candidates, "area")?;
        check_finite("gate", &self.gate)?;
        if self.ap_candidates.contains(&self.gate) {
            return Err(Error::Singularity { what: "gate", at: self.gate });
        }
        if let Some(t) = self.area_candidates.iter().find(|t| self.ap_candidates.contains(t)) {
            return Err(Error::Singularity { what: "area centroid", at: *t });
        }
        Ok(())
    }

    pub fn combination_count(&self) -> u128 {
        binomial(self.ap_candidates.len(), self.k)
            .saturating_mul(binomial(self.area_candidates.len(), self.m))
    }

    /// Same problem with every coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> PlacementProblem {
        PlacementProblem {
            ap_candidates: self.ap_candidates.iter().map(|p| p.scaled(factor)).collect(),
            area_candidates: self.area_candidates.iter().map(|p| p.scaled(factor)).collect(),
            gate: self.gate.scaled(factor),
            ..self.clone()
        }
    }

    fn select(&self, sol: &PlacementSolution) -> (Vec<Point>, Vec<Point>) {
        (
            sol.ap_indices.iter().map(|&i| self.ap_candidates[i]).collect(),
            sol.area_indices.iter().map(|&i| self.area_candidates[i]).collect(),
        )
    }
}

pub fn binomial(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    (0..r).fold(1u128, |acc, i| acc.saturating_mul((n - i) as u128) / (i as u128 + 1))
}

/// All `r`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if r > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..r).collect();
    loop {
        out.push(idx.clone());
        let mut i = r;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - r {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..r {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn log_ratio_sq(t_in: &Point, gate: &Point, a: &Point) -> Result<f64> {
    let din = t_in.distance(a);
    let dg = gate.distance(a);
    if din == 0.0 {
        return Err(Error::Singularity { what: "area centroid", at: *t_in });
    }
    if dg == 0.0 {
        return Err(Error::Singularity { what: "gate", at: *gate });
    }
    let v = (din / dg).log10();
    Ok(v * v)
}

/// `min over areas of Σ over APs of lg²(|t_in − a| / |t_d − a|)`.
///
/// `eta` only enters through validation: the objective is η-free.
pub fn placement_objective(aps: &[Point], areas: &[Point], gate: &Point, eta: f64) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::invalid(format!("eta must be > 0, got {eta}")));
    }
    if aps.is_empty() || areas.is_empty() {
        return Err(Error::invalid("need at least one AP and one area"));
    }
    let mut best = f64::INFINITY;
    for t in areas {
        let mut sum = 0.0;
        for a in aps {
            sum += log_ratio_sq(t, gate, a)?;
        }
        if sum < best {
            best = sum;
        }
    }
    Ok(best)
}

fn by_rank(a: &PlacementSolution, b: &PlacementSolution) -> Ordering {
    b.objective
        .total_cmp(&a.objective)
        .then_with(|| a.ap_indices.cmp(&b.ap_indices))
        .then_with(|| a.area_indices.cmp(&b.area_indices))
}

/// Enumerates every feasible `(A_k, T_m)` pair, best first.
///
/// Refuses to run when the number of pairs exceeds `limit`.
pub fn optimize(problem: &PlacementProblem, limit: u128) -> Result<Vec<PlacementSolution>> {
    problem.validate()?;
    let count = problem.combination_count();
    if count > limit {
        return Err(Error::CombinationLimit { count, limit });
    }
    // term[area][ap]
    let terms = problem
        .area_candidates
        .iter()
        .map(|t| {
            problem
                .ap_candidates
                .iter()
                .map(|a| log_ratio_sq(t, &problem.gate, a))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let ap_sets = combinations(problem.ap_candidates.len(), problem.k);
    let area_sets = combinations(problem.area_candidates.len(), problem.m);
    let mut solutions: Vec<PlacementSolution> = ap_sets
        .par_iter()
        .flat_map_iter(|aps| {
            // per-area sums for this AP subset
            let sums: Vec<f64> = terms.iter().map(|row| aps.iter().map(|&a| row[a]).sum()).collect();
            area_sets.iter().map(move |areas| {
                let objective = areas.iter().map(|&t| sums[t]).fold(f64::INFINITY, f64::min);
                PlacementSolution {
                    ap_indices: aps.clone(),
                    area_indices: areas.clone(),
                    objective,
                    rank: 0,
                }
            })
        })
        .collect();
    solutions.sort_by(by_rank);
    for (i, s) in solutions.iter_mut().enumerate() {
        s.rank = i + 1;
    }
    Ok(solutions)
}

/// How the per-solution detection rate at the gate is obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum RateSource {
    /// Closed-form rate with noise `sigma`.
    Analytic,
    /// Simulated data through the full averaging, standardization and
    /// OC-SVM pipeline.
    MonteCarlo(McRateConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct McRateConfig {
    /// Channel used for simulation; its path-loss exponent should match the
    /// problem's.
    pub params: PropagationParams,
    pub n_avg: usize,
    pub gamma: Gamma,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingReport {
    pub solutions: Vec<PlacementSolution>,
    /// Detection rate at the gate for each solution, same order.
    pub rates: Vec<f64>,
    /// Pearson correlation between the two rank lists.
    pub r: f64,
    pub p_value: f64,
}

/// Compares the objective ordering with detection rates at the gate.
///
/// Each solution's rate is the worst (minimum) rate over its target areas.
/// The correlation is Pearson's r on the two rank lists (average ranks for
/// ties), so any monotone relation scores 1.
pub fn validate_ranking(
    problem: &PlacementProblem,
    sigma: f64,
    nu: f64,
    trials: usize,
    source: &RateSource,
    seed: u64,
) -> Result<RankingReport> {
    if trials < 100 {
        return Err(Error::invalid(format!("trials must be >= 100, got {trials}")));
    }
    let solutions = optimize(problem, DEFAULT_COMBINATION_LIMIT)?;
    let rates = match source {
        RateSource::Analytic => solutions
            .iter()
            .map(|s| {
                let (aps, areas) = problem.select(s);
                areas
                    .iter()
                    .map(|t_in| {
                        detection_rate_point(&RateQuery {
                            t: problem.gate,
                            t_in: *t_in,
                            aps: aps.clone(),
                            eta: problem.eta,
                            sigma,
                            nu,
                        })
                        .map(|r| r.rate)
                    })
                    .try_fold(f64::INFINITY, |acc, r| r.map(|r| acc.min(r)))
            })
            .collect::<Result<Vec<_>>>()?,
        RateSource::MonteCarlo(mc) => monte_carlo_rates(problem, &solutions, nu, trials, mc, seed)?,
    };
    let objectives: Vec<f64> = solutions.iter().map(|s| s.objective).collect();
    let (r, p_value) = pearson(&average_ranks(&objectives), &average_ranks(&rates))?;
    Ok(RankingReport { solutions, rates, r, p_value })
}

fn monte_carlo_rates(
    problem: &PlacementProblem,
    solutions: &[PlacementSolution],
    nu: f64,
    trials: usize,
    mc: &McRateConfig,
    seed: u64,
) -> Result<Vec<f64>> {
    let ap_sets = combinations(problem.ap_candidates.len(), problem.k);
    let n_areas = problem.area_candidates.len();
    let rows = trials * mc.n_avg;
    let svm = OcSvmConfig::new(nu, mc.gamma);
    // one detector per (AP subset, area), shared by every solution using it
    let pair_rates = (0..ap_sets.len() * n_areas)
        .into_par_iter()
        .map(|job| {
            let (set, area) = (job / n_areas, job % n_areas);
            let aps: Vec<Point> = ap_sets[set].iter().map(|&i| problem.ap_candidates[i]).collect();
            let t_in = problem.area_candidates[area];
            let path = [set as u64, area as u64];
            let train = generate_dataset(&[t_in], &aps, &mc.params, rows, derive_seed(seed, &[TAG_TRAIN, path[0], path[1]]))?;
            let test = generate_dataset(&[problem.gate], &aps, &mc.params, rows, derive_seed(seed, &[TAG_TEST, path[0], path[1]]))?;
            let detector = Detector::fit(&average_windows(&train.blocks[0].rssi, mc.n_avg)?, &svm)?;
            detector.non_target_fraction(&average_windows(&test.blocks[0].rssi, mc.n_avg)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(solutions
        .iter()
        .map(|s| {
            let set = ap_sets.binary_search(&s.ap_indices).expect("enumerated subset");
            s.area_indices
                .iter()
                .map(|&t| pair_rates[set * n_areas + t])
                .fold(f64::INFINITY, f64::min)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn table_problem(k: usize, m: usize) -> PlacementProblem {
        PlacementProblem {
            ap_candidates: vec![
                Point::new(1.0, 1.0),
                Point::new(9.0, 1.5),
                Point::new(5.0, 7.5),
                Point::new(11.0, 9.0),
            ],
            area_candidates: vec![Point::new(2.5, 6.0), Point::new(7.0, 3.0), Point::new(9.5, 6.5)],
            k,
            m,
            gate: Point::new(6.0, 12.0),
            eta: 2.0,
        }
    }

    #[test]
    fn objective_examples() {
        let a = [Point::new(0.0, 0.0)];
        let v = placement_objective(&a, &[Point::new(1.0, 0.0)], &Point::new(10.0, 0.0), 2.0).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-15);
        // AP equidistant from centroid and gate
        let v = placement_objective(&[Point::new(0.0, 0.0), Point::new(5.0, 5.0)], &[Point::new(0.0, 5.0)], &Point::new(5.0, 0.0), 2.0).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-15);
        let gate = Point::new(10.0, 0.0);
        let v = placement_objective(&a, &[Point::new(3.0, 3.0), gate], &gate, 2.0).unwrap();
        assert_eq!(v, 0.0);
        assert!(placement_objective(&a, &[a[0]], &gate, 2.0).is_err());
    }

    #[test]
    fn single_choice() {
        let p = PlacementProblem { k: 4, m: 3, ..table_problem(1, 1) };
        let sols = optimize(&p, DEFAULT_COMBINATION_LIMIT).unwrap();
        assert_eq!(sols.len(), 1);
        assert_eq!(sols[0].rank, 1);
        assert_eq!(sols[0].ap_indices, vec![0, 1, 2, 3]);
    }

    #[test]
    fn twelve_solutions_for_k1_m1() {
        let sols = optimize(&table_problem(1, 1), DEFAULT_COMBINATION_LIMIT).unwrap();
        assert_eq!(sols.len(), 12);
        for w in sols.windows(2) {
            assert!(w[0].objective >= w[1].objective);
        }
        assert_eq!(sols.iter().map(|s| s.rank).collect::<Vec<_>>(), (1..=12).collect::<Vec<_>>());
    }

    #[test]
    fn combination_guard() {
        let p = table_problem(2, 2);
        match optimize(&p, 5) {
            Err(Error::CombinationLimit { count: 18, limit: 5 }) => {}
            other => panic!("{other:?}"),
        }
        assert_eq!(optimize(&p, 18).unwrap().len(), 18);
    }

    #[test]
    fn invalid_problems() {
        assert!(optimize(&table_problem(0, 1), 100).is_err());
        assert!(optimize(&table_problem(5, 1), 100).is_err());
        assert!(optimize(&table_problem(1, 4), 100).is_err());
        let mut p = table_problem(1, 1);
        p.gate = p.ap_candidates[2];
        assert!(matches!(optimize(&p, 100), Err(Error::Singularity { .. })));
        let mut p = table_problem(1, 1);
        p.ap_candidates[1] = p.ap_candidates[0];
        assert!(optimize(&p, 100).is_err());
    }

    #[test]
    fn combinations_lexicographic() {
        assert_eq!(combinations(4, 2), vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
        assert_eq!(binomial(52, 5), 2_598_960);
    }

    /// Independent brute force: nested loops over bitmasks and a direct
    /// evaluation of the objective per solution.
    fn brute_force(p: &PlacementProblem) -> Vec<(Vec<usize>, Vec<usize>, f64)> {
        let mut all = Vec::new();
        let big_k = p.ap_candidates.len();
        let big_m = p.area_candidates.len();
        for amask in 0u32..(1 << big_k) {
            if amask.count_ones() as usize != p.k {
                continue;
            }
            for tmask in 0u32..(1 << big_m) {
                if tmask.count_ones() as usize != p.m {
                    continue;
                }
                let aps: Vec<usize> = (0..big_k).filter(|i| amask & (1 << i) != 0).collect();
                let areas: Vec<usize> = (0..big_m).filter(|i| tmask & (1 << i) != 0).collect();
                let mut worst = f64::INFINITY;
                for &t in &areas {
                    let ti = p.area_candidates[t];
                    let s: f64 = aps
                        .iter()
                        .map(|&a| {
                            let ap = p.ap_candidates[a];
                            let ratio = ((ti.x - ap.x).powi(2) + (ti.y - ap.y).powi(2)).sqrt()
                                / ((p.gate.x - ap.x).powi(2) + (p.gate.y - ap.y).powi(2)).sqrt();
                            ratio.log10().powi(2)
                        })
                        .sum();
                    worst = worst.min(s);
                }
                all.push((aps, areas, worst));
            }
        }
        all.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap().then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
        all
    }

    #[test]
    fn matches_brute_force_on_random_instances() {
        for seed in 0..20u64 {
            let mut rng = substream(seed, &[]);
            let mut pt = || Point::new(rng.random_range(0.0..20.0), rng.random_range(0.0..20.0));
            let aps: Vec<Point> = (0..5).map(|_| pt()).collect();
            let areas: Vec<Point> = (0..5).map(|_| pt()).collect();
            let gate = pt();
            for (k, m) in [(1, 1), (2, 3), (3, 2), (5, 1)] {
                let p = PlacementProblem {
                    ap_candidates: aps.clone(),
                    area_candidates: areas.clone(),
                    k,
                    m,
                    gate,
                    eta: 2.0,
                };
                let ours = optimize(&p, DEFAULT_COMBINATION_LIMIT).unwrap();
                let oracle = brute_force(&p);
                assert_eq!(ours.len(), oracle.len());
                for (s, (a, t, v)) in ours.iter().zip(&oracle) {
                    assert_eq!(&s.ap_indices, a);
                    assert_eq!(&s.area_indices, t);
                    assert_abs_diff_eq!(s.objective, *v, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn scale_and_eta_invariance() {
        let p = table_problem(2, 2);
        let base = optimize(&p, DEFAULT_COMBINATION_LIMIT).unwrap();
        for c in [0.25, 2.0, 8.0] {
            assert_eq!(optimize(&p.scaled(c), DEFAULT_COMBINATION_LIMIT).unwrap(), base);
        }
        let other = optimize(&p.scaled(3.7), DEFAULT_COMBINATION_LIMIT).unwrap();
        for (a, b) in base.iter().zip(&other) {
            assert_abs_diff_eq!(a.objective, b.objective, epsilon = 1e-12);
        }
        let eta4 = PlacementProblem { eta: 4.0, ..p };
        assert_eq!(optimize(&eta4, DEFAULT_COMBINATION_LIMIT).unwrap(), base);
    }

    #[test]
    fn analytic_ranking_is_perfect() {
        for (k, m) in [(1, 1), (2, 1), (2, 2), (3, 2)] {
            let rep = validate_ranking(&table_problem(k, m), 2.49, 0.02, 100, &RateSource::Analytic, 0).unwrap();
            assert_abs_diff_eq!(rep.r, 1.0, epsilon = 1e-12);
            // larger objective never has a smaller rate
            for i in 0..rep.solutions.len() {
                for j in 0..rep.solutions.len() {
                    if rep.solutions[i].objective > rep.solutions[j].objective {
                        assert!(rep.rates[i] >= rep.rates[j]);
                    }
                }
            }
        }
    }

    #[test]
    fn constant_rates_are_an_error() {
        // a single solution repeated cannot correlate; use K=k, M=m with n<3
        let p = PlacementProblem { k: 4, m: 3, ..table_problem(1, 1) };
        assert!(validate_ranking(&p, 2.49, 0.1, 100, &RateSource::Analytic, 0).is_err());
        // gate on a centroid: every solution containing it has rate ν; with
        // m = M all solutions do
        let mut p = PlacementProblem { m: 3, ..table_problem(1, 1) };
        p.gate = p.area_candidates[0];
        assert!(matches!(
            validate_ranking(&p, 2.49, 0.1, 100, &RateSource::Analytic, 0),
            Err(Error::UndefinedCorrelation(_))
        ));
        assert!(validate_ranking(&table_problem(1, 1), 2.49, 0.1, 99, &RateSource::Analytic, 0).is_err());
    }
}
