//! Closed-form detection rates.
//!
//! After standardization against training data collected at the target
//! centroid `t_in`, a vector observed at `t` is a sum of `k` squared unit
//! normals shifted by `(10 η / σ) lg(|t_in − aᵢ| / |t − aᵢ|)`. Approximating
//! the trained OC-SVM by the ball `‖r̂‖² ≤ δ` with `δ` the `(1 − ν)` quantile
//! of χ²ₖ gives the detection rate `R(t) = Q_{k/2}(√λ_t / σ, √δ)`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{check_finite, Domain, Point};
use crate::ocsvm::Verdict;
use crate::rng::{substream, TAG_DOMAIN};
use crate::special::{chi2_quantile, marcum_q};

/// Inputs to the point detection rate.
#[derive(Debug, Clone, PartialEq)]
pub struct RateQuery {
    pub t: Point,
    pub t_in: Point,
    pub aps: Vec<Point>,
    pub eta: f64,
    /// Standard deviation of the (averaged) RSSI noise, dB.
    pub sigma: f64,
    pub nu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateResult {
    /// dB²
    pub lambda_t: f64,
    pub delta: f64,
    pub rate: f64,
}

fn check_away_from_aps(what: &'static str, p: &Point, aps: &[Point]) -> Result<()> {
    check_finite(what, p)?;
    if aps.iter().any(|a| p.distance(a) == 0.0) {
        return Err(Error::Singularity { what, at: *p });
    }
    Ok(())
}

/// `Σᵢ (10 η lg(|t_in − aᵢ| / |t − aᵢ|))²`.
pub fn lambda_t(t: &Point, t_in: &Point, aps: &[Point], eta: f64) -> Result<f64> {
    check_away_from_aps("probe position", t, aps)?;
    check_away_from_aps("target centroid", t_in, aps)?;
    Ok(aps
        .iter()
        .map(|a| {
            let v = 10.0 * eta * (t_in.distance(a) / t.distance(a)).log10();
            v * v
        })
        .sum())
}

/// Squared-norm threshold of the surrogate classifier.
pub fn surrogate_threshold(nu: f64, k: usize) -> Result<f64> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::invalid(format!("nu must lie in (0, 1), got {nu}")));
    }
    chi2_quantile(1.0 - nu, k as u32)
}

impl RateQuery {
    fn validate(&self) -> Result<()> {
        if self.aps.is_empty() {
            return Err(Error::invalid("at least one access point is required"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid(format!("sigma must be > 0, got {}", self.sigma)));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::invalid(format!("eta must be > 0, got {}", self.eta)));
        }
        if !(self.nu > 0.0 && self.nu < 1.0) {
            return Err(Error::invalid(format!("nu must lie in (0, 1), got {}", self.nu)));
        }
        Ok(())
    }
}

pub fn detection_rate_point(q: &RateQuery) -> Result<RateResult> {
    q.validate()?;
    let k = q.aps.len();
    let lambda = lambda_t(&q.t, &q.t_in, &q.aps, q.eta)?;
    let delta = surrogate_threshold(q.nu, k)?;
    // δ is the (1 − ν) quantile, so the central case is ν by construction
    let rate = if lambda == 0.0 { q.nu } else { marcum_q(k as f64 / 2.0, lambda.sqrt() / q.sigma, delta.sqrt())? };
    Ok(RateResult { lambda_t: lambda, delta, rate })
}

/// Monte-Carlo estimate of the domain-averaged detection rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainRate {
    pub rate: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Averages [`detection_rate_point`] over points drawn uniformly in `domain`.
/// Sample `i` uses its own sub-stream of `seed`.
#[allow(clippy::too_many_arguments)]
pub fn detection_rate_domain(
    domain: &Domain,
    t_in: &Point,
    aps: &[Point],
    eta: f64,
    sigma: f64,
    nu: f64,
    samples: usize,
    seed: u64,
) -> Result<DomainRate> {
    if samples == 0 {
        return Err(Error::invalid("samples must be >= 1"));
    }
    if !(domain.area() > 0.0) {
        return Err(Error::DegenerateDomain("domain has zero area".into()));
    }
    let template = RateQuery { t: *t_in, t_in: *t_in, aps: aps.to_vec(), eta, sigma, nu };
    template.validate()?;
    check_away_from_aps("target centroid", t_in, aps)?;
    let delta = surrogate_threshold(nu, aps.len())?;
    let m = aps.len() as f64 / 2.0;
    let rates = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, &[TAG_DOMAIN, i as u64]);
            let t = domain.sample(&mut rng);
            let lambda = lambda_t(&t, t_in, aps, eta)?;
            marcum_q(m, lambda.sqrt() / sigma, delta.sqrt())
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = samples as f64;
    let mean = rates.iter().sum::<f64>() / n;
    let var = if samples > 1 {
        rates.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(DomainRate { rate: mean, std_error: (var / n).sqrt(), samples })
}

/// Target iff `‖r̂‖² ≤ δ`.
pub fn surrogate_classify(features: &[f64], delta: f64) -> Verdict {
    let norm2: f64 = features.iter().map(|v| v * v).sum();
    if norm2 <= delta {
        Verdict::Target
    } else {
        Verdict::NonTarget
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Polygon;
    use approx::assert_abs_diff_eq;

    fn fig3_aps() -> Vec<Point> {
        vec![Point::new(0.0, 0.0), Point::new(0.0, 10.0), Point::new(10.0, 0.0)]
    }

    #[test]
    fn lambda_examples() {
        let aps = fig3_aps();
        let t_in = Point::new(5.0, 5.0);
        assert_eq!(lambda_t(&t_in, &t_in, &aps, 2.0).unwrap(), 0.0);
        let one = [Point::new(0.0, 0.0)];
        let v = lambda_t(&Point::new(10.0, 10.0), &t_in, &one, 2.0).unwrap();
        assert_abs_diff_eq!(v, (20.0 * 0.5f64.log10()).powi(2), epsilon = 1e-12);
        assert_abs_diff_eq!(v, 36.25, epsilon = 0.01);
        // same circle around the single AP
        let on_circle = Point::new(50f64.sqrt(), 0.0);
        assert_abs_diff_eq!(lambda_t(&on_circle, &t_in, &one, 2.0).unwrap(), 0.0, epsilon = 1e-20);
        assert!(matches!(lambda_t(&one[0], &t_in, &one, 2.0), Err(Error::Singularity { .. })));
    }

    #[test]
    fn rate_at_centroid_is_nu() {
        for nu in [0.02, 0.1, 0.5] {
            for k in 1..=4 {
                let aps: Vec<Point> = (0..k).map(|i| Point::new(i as f64 * 3.0, -4.0)).collect();
                let r = detection_rate_point(&RateQuery {
                    t: Point::new(1.0, 1.0),
                    t_in: Point::new(1.0, 1.0),
                    aps,
                    eta: 2.0,
                    sigma: 5.57,
                    nu,
                })
                .unwrap();
                assert_eq!(r.lambda_t, 0.0);
                assert_abs_diff_eq!(r.rate, nu, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn rate_example_k2() {
        // √λ/σ = 2 with k = 2, ν = 0.1
        let aps = vec![Point::new(0.0, 0.0), Point::new(100.0, 100.0)];
        let t_in = Point::new(1.0, 0.0);
        let t = Point::new(10.0, 0.0);
        let lambda = lambda_t(&t, &t_in, &aps, 2.0).unwrap();
        let sigma = lambda.sqrt() / 2.0;
        let r = detection_rate_point(&RateQuery { t, t_in, aps, eta: 2.0, sigma, nu: 0.1 }).unwrap();
        assert_abs_diff_eq!(r.delta, 4.60517, epsilon = 1e-5);
        assert_abs_diff_eq!(r.rate, 0.5423, epsilon = 5e-4);
    }

    #[test]
    fn noiseless_limit() {
        let q = RateQuery {
            t: Point::new(20.0, 20.0),
            t_in: Point::new(5.0, 5.0),
            aps: fig3_aps(),
            eta: 2.0,
            sigma: 1e-3,
            nu: 0.1,
        };
        assert!(detection_rate_point(&q).unwrap().rate > 1.0 - 1e-12);
        assert!(detection_rate_point(&RateQuery { sigma: 0.0, ..q.clone() }).is_err());
        assert!(detection_rate_point(&RateQuery { nu: 1.0, ..q }).is_err());
    }

    #[test]
    fn rate_strictly_increasing_in_snr() {
        let delta = surrogate_threshold(0.1, 3).unwrap();
        let mut prev = marcum_q(1.5, 0.0, delta.sqrt()).unwrap();
        assert_abs_diff_eq!(prev, 0.1, epsilon = 1e-12);
        for i in 1..=100 {
            let snr = i as f64 * 0.06;
            let r = marcum_q(1.5, snr, delta.sqrt()).unwrap();
            assert!(r > prev, "not increasing at {snr}");
            assert!(r >= 0.1);
            prev = r;
        }
    }

    #[test]
    fn surrogate_boundaries() {
        assert_eq!(surrogate_classify(&[0.0, 0.0], 1.0), Verdict::Target);
        assert_eq!(surrogate_classify(&[1.0, 1.0], 2.0), Verdict::Target);
        assert_eq!(surrogate_classify(&[2.0, 0.0], 2.0), Verdict::NonTarget);
    }

    #[test]
    fn tiny_domain_matches_point_rate() {
        let aps = fig3_aps();
        let t_in = Point::new(5.0, 5.0);
        let t = Point::new(15.0, 12.0);
        let h = 1e-6;
        let tiny = Domain::Polygon(
            Polygon::rectangle(Point::new(t.x - h, t.y - h), Point::new(t.x + h, t.y + h)).unwrap(),
        );
        let d = detection_rate_domain(&tiny, &t_in, &aps, 2.0, 5.57, 0.1, 200, 1).unwrap();
        let p = detection_rate_point(&RateQuery { t, t_in, aps, eta: 2.0, sigma: 5.57, nu: 0.1 }).unwrap();
        assert!((d.rate - p.rate).abs() <= (3.0 * d.std_error).max(1e-6));
    }

    #[test]
    fn shrinking_disc_tends_to_nu() {
        let aps = fig3_aps();
        let t_in = Point::new(5.0, 5.0);
        let mut prev = f64::INFINITY;
        for r in [1.0, 0.1, 1e-3] {
            let d = detection_rate_domain(&Domain::disc(t_in, r).unwrap(), &t_in, &aps, 2.0, 5.57, 0.1, 500, 2).unwrap();
            assert!(d.rate >= 0.1 - 1e-12);
            assert!(d.rate <= prev);
            prev = d.rate;
        }
        assert_abs_diff_eq!(prev, 0.1, epsilon = 1e-4);
    }

    #[test]
    fn domain_errors() {
        let aps = fig3_aps();
        let t_in = Point::new(5.0, 5.0);
        let disc = Domain::disc(t_in, 1.0).unwrap();
        assert!(detection_rate_domain(&disc, &t_in, &aps, 2.0, 5.57, 0.1, 0, 1).is_err());
        assert!(detection_rate_domain(&disc, &aps[0], &aps, 2.0, 5.57, 0.1, 10, 1).is_err());
    }

    /// Midpoint-rule polar quadrature over the 3–30 m annulus around t_in.
    fn annulus_quadrature(n_r: usize, n_theta: usize) -> f64 {
        let aps = fig3_aps();
        let t_in = Point::new(5.0, 5.0);
        let delta = surrogate_threshold(0.1, 3).unwrap();
        let (r0, r1) = (3.0, 30.0);
        let dr = (r1 - r0) / n_r as f64;
        let dth = std::f64::consts::TAU / n_theta as f64;
        let mut acc = 0.0;
        for i in 0..n_r {
            let r = r0 + (i as f64 + 0.5) * dr;
            for j in 0..n_theta {
                let th = (j as f64 + 0.5) * dth;
                let t = Point::new(5.0 + r * th.cos(), 5.0 + r * th.sin());
                let lambda = lambda_t(&t, &t_in, &aps, 2.0).unwrap();
                acc += r * marcum_q(1.5, lambda.sqrt() / 5.57, delta.sqrt()).unwrap();
            }
        }
        acc * dr * dth / (std::f64::consts::PI * (r1 * r1 - r0 * r0))
    }

    #[test]
    fn annulus_rate_matches_quadrature() {
        // 250 x 400 polar midpoint quadrature, evaluated independently and frozen
        const ANNULUS_ORACLE: f64 = 0.739243;
        let q = annulus_quadrature(250, 400);
        assert_abs_diff_eq!(q, ANNULUS_ORACLE, epsilon = 1e-5);
        let aps = fig3_aps();
        let t_in = Point::new(5.0, 5.0);
        let domain = Domain::annulus(t_in, 3.0, 30.0).unwrap();
        let d = detection_rate_domain(&domain, &t_in, &aps, 2.0, 5.57, 0.1, 20_000, 99).unwrap();
        assert!((d.rate - ANNULUS_ORACLE).abs() <= 4.0 * d.std_error, "{d:?}");
    }
}
