use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use statrs::distribution::{Continuous, ContinuousCDF, Normal as NormalDist};

use crate::error::{Error, Result};
use crate::graph::Thresholds;

/// Thresholds drawn from a normal restricted to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedNormal {
    pub thresholds: Thresholds,
    /// Location of the underlying normal.
    pub mu: f64,
    pub sigma: f64,
    pub sample_mean: f64,
    pub sample_var: f64,
}

/// Mean of `N(mu, sigma^2)` conditioned on `[0, 1]`.
fn truncated_mean(mu: f64, sigma: f64) -> f64 {
    let z = NormalDist::new(0.0, 1.0).unwrap();
    let (a, b) = (-mu / sigma, (1.0 - mu) / sigma);
    // upper tails keep precision when the interval sits far right of mu
    let mass = if a > 0.0 { z.sf(a) - z.sf(b) } else { z.cdf(b) - z.cdf(a) };
    mu + sigma * (z.pdf(a) - z.pdf(b)) / mass
}

/// Samples `n` thresholds by rejection into `[0, 1]`.
///
/// `var` is the variance of the normal before truncation. Its location is
/// chosen by bisection so that the truncated distribution has mean `mean`.
/// Any distribution on `[0, 1]` with a log-concave density has variance at
/// most 1/12, so the spread after truncation is always smaller than `var`
/// for large inputs; the achieved sample moments are returned for reporting.
pub fn truncated_normal_thresholds(n: usize, mean: f64, var: f64, seed: u64) -> Result<TruncatedNormal> {
    if !(mean > 0.0 && mean < 1.0) {
        return Err(Error::invalid(format!("truncated-normal mean {mean} is outside (0, 1)")));
    }
    if !(var > 0.0 && var.is_finite()) {
        return Err(Error::invalid(format!("truncated-normal variance {var} must be positive")));
    }
    let sigma = var.sqrt();
    // the conditioned mean rises with mu from 0 to 1
    let (mut lo, mut hi) = (-20.0 * sigma - 1.0, 20.0 * sigma + 2.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let m = truncated_mean(mid, sigma);
        if !m.is_finite() {
            // conditioning mass underflowed; move toward the interval
            if mid < 0.5 { lo = mid } else { hi = mid }
        } else if m < mean {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = 0.5 * (lo + hi);
    let z = NormalDist::new(mu, sigma).unwrap();
    if z.cdf(1.0) - z.cdf(0.0) < 1e-6 {
        return Err(Error::invalid(format!("mean {mean} with variance {var} leaves too little mass in [0, 1]")));
    }
    let normal = Normal::new(mu, sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n);
    while values.len() < n {
        let x: f64 = normal.sample(&mut rng);
        if (0.0..=1.0).contains(&x) {
            values.push(x);
        }
    }
    let denom = n.max(1) as f64;
    let sample_mean = values.iter().sum::<f64>() / denom;
    let sample_var = values.iter().map(|x| (x - sample_mean).powi(2)).sum::<f64>() / denom;
    Ok(TruncatedNormal { thresholds: Thresholds::new(values)?, mu, sigma, sample_mean, sample_var })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn targets_post_truncation_mean() {
        let tn = truncated_normal_thresholds(20000, 0.25, 0.144, 3).unwrap();
        assert!((truncated_mean(tn.mu, tn.sigma) - 0.25).abs() < 1e-9);
        assert!(tn.mu < 0.25);
        assert!((tn.sample_mean - 0.25).abs() < 0.01, "{}", tn.sample_mean);
        assert!(tn.sample_var < 1.0 / 12.0);
        assert!(tn.thresholds.as_slice().iter().all(|b| (0.0..=1.0).contains(b)));
    }

    #[test]
    fn narrow_normal_is_untouched() {
        let tn = truncated_normal_thresholds(5000, 0.5, 0.0025, 1).unwrap();
        assert!((tn.mu - 0.5).abs() < 1e-9);
        assert!((tn.sample_var - 0.0025).abs() < 3e-4);
    }

    #[test]
    fn rejects_bad_moments() {
        assert!(truncated_normal_thresholds(10, 0.0, 0.1, 0).is_err());
        assert!(truncated_normal_thresholds(10, 0.3, -1.0, 0).is_err());
    }
}
