//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

/// Projection onto `{0 ≤ a ≤ cap, Σa = 1}` by bisection on the shift.
fn project_capped_simplex(v: &[f64], cap: f64) -> Vec<f64> {
    let mass = |tau: f64| v.iter().map(|x| (x - tau).clamp(0.0, cap)).sum::<f64>();
    let mut lo = v.iter().cloned().fold(f64::INFINITY, f64::min) - cap - 1.0;
    let mut hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    v.iter().map(|x| (x - tau).clamp(0.0, cap)).collect()
}

/// Minimum of `½ aᵀKa` over the capped simplex by accelerated projected
/// gradient (FISTA) with a Gershgorin step size.
pub fn qp_oracle(k: &[Vec<f64>], cap: f64, iterations: usize) -> (Vec<f64>, f64) {
    let s = k.len();
    let lipschitz = k.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let step = 1.0 / lipschitz;
    let grad = |a: &[f64]| -> Vec<f64> { (0..s).map(|i| (0..s).map(|j| k[i][j] * a[j]).sum()).collect() };
    let mut x = project_capped_simplex(&vec![1.0 / s as f64; s], cap);
    let mut y = x.clone();
    let mut t = 1.0f64;
    for _ in 0..iterations {
        let g = grad(&y);
        let z: Vec<f64> = y.iter().zip(&g).map(|(yi, gi)| yi - step * gi).collect();
        let x_next = project_capped_simplex(&z, cap);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = x_next.iter().zip(&x).map(|(a, b)| a + (t - 1.0) / t_next * (a - b)).collect();
        x = x_next;
        t = t_next;
    }
    let g = grad(&x);
    let obj = 0.5 * x.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>();
    (x, obj)
}

pub fn rbf_matrix(rows: &[Vec<f64>], gamma: f64) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|a| {
            rows.iter()
                .map(|b| (-gamma * a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>()).exp())
                .collect()
        })
        .collect()
}

/// Sum of `k` squared unit normals, the first shifted by `√nc`, drawn with
/// a generator unrelated to the crate's streams.
pub fn noncentral_chi2_draws(k: usize, nc: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let shift = nc.sqrt();
    (0..n)
        .map(|_| {
            let mut s = 0.0;
            for j in 0..k {
                let z: f64 = StandardNormal.sample(&mut rng);
                let z = if j == 0 { z + shift } else { z };
                s += z * z;
            }
            s
        })
        .collect()
}

pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let idx = ((sorted.len() - 1) as f64 * p).round() as usize;
    sorted[idx]
}

pub fn gaussian_rows(seed: u64, s: usize, k: usize, scale: f64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..s)
        .map(|_| (0..k).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect())
        .collect()
}

/// All `(ap subset, area subset, objective)` triples by bitmask
/// enumeration, best first with lexicographic tie-breaks.
pub fn brute_force_placement(
    aps: &[(f64, f64)],
    areas: &[(f64, f64)],
    gate: (f64, f64),
    k: usize,
    m: usize,
) -> Vec<(Vec<usize>, Vec<usize>, f64)> {
    let dist = |a: (f64, f64), b: (f64, f64)| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
    let mut all = Vec::new();
    for amask in 0u32..(1 << aps.len()) {
        if amask.count_ones() as usize != k {
            continue;
        }
        for tmask in 0u32..(1 << areas.len()) {
            if tmask.count_ones() as usize != m {
                continue;
            }
            let chosen_aps: Vec<usize> = (0..aps.len()).filter(|i| amask >> i & 1 == 1).collect();
            let chosen_areas: Vec<usize> = (0..areas.len()).filter(|i| tmask >> i & 1 == 1).collect();
            let worst = chosen_areas
                .iter()
                .map(|&t| {
                    chosen_aps
                        .iter()
                        .map(|&a| (dist(areas[t], aps[a]) / dist(gate, aps[a])).log10().powi(2))
                        .sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min);
            all.push((chosen_aps, chosen_areas, worst));
        }
    }
    all.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap().then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    all
}
