//! Small statistics toolkit for the Monte Carlo harness.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::inc_gamma_ln;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Linear-interpolation quantile (type 7) of an ascending slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Standard error of a binomial frequency with success probability `p`.
pub fn binomial_se(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Upper tail of the chi-square distribution with `k` degrees of freedom.
pub fn chi_square_sf(x: f64, k: f64) -> f64 {
    inc_gamma_ln(0.5 * k, 0.5 * x.max(0.0)).map(|g| g.upper.exp()).unwrap_or(f64::NAN)
}

/// Sample covariance and the standard error of that estimate.
pub fn covariance_with_se(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let (mx, my) = (mean(xs), mean(ys));
    let prods: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let cov = prods.iter().sum::<f64>() / (n - 1.0);
    let mp = mean(&prods);
    let var = prods.iter().map(|p| (p - mp) * (p - mp)).sum::<f64>() / (n - 1.0);
    (cov, (var / n).sqrt())
}

/// Standard error of the sample covariance when `xs` and `ys` are
/// independent, `√(s²_x s²_y / n)`. Unlike the plug-in error of
/// [`covariance_with_se`] it stays valid for rare counts.
pub fn covariance_null_se(xs: &[f64], ys: &[f64]) -> f64 {
    (variance(xs) * variance(ys) / xs.len() as f64).sqrt()
}

/// Kolmogorov–Smirnov distance between the empirical law of `sample` and
/// the continuous distribution function `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic survival function of the Kolmogorov distribution,
/// `P[√n D > x]`.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// `c(α)/√n` with the asymptotic 1% constant 1.628.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

/// Maximum-likelihood fit of the (maximum-type) Gumbel law
/// `F(x) = exp(−e^{−(x−μ)/β})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GumbelFit {
    pub location: f64,
    pub scale: f64,
}

impl GumbelFit {
    pub fn mle(sample: &[f64]) -> Result<GumbelFit> {
        if sample.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "Gumbel fit needs at least 2 observations, got {}",
                sample.len()
            )));
        }
        if sample.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("sample", "non-finite observation"));
        }
        let sd = variance(sample).sqrt();
        if !(sd > 0.0) {
            return Err(Error::InsufficientData("Gumbel fit needs a non-degenerate sample".into()));
        }
        let m = mean(sample);
        let min = sample.iter().copied().fold(f64::INFINITY, f64::min);
        // score equation in the scale: β − x̄ + Σ x e^{−x/β} / Σ e^{−x/β} = 0,
        // increasing in β; centered at `min` for stability
        let weighted = |beta: f64| {
            let (mut num, mut den) = (0.0, 0.0);
            for &x in sample {
                let w = (-(x - min) / beta).exp();
                num += (x - min) * w;
                den += w;
            }
            (num / den + min, den)
        };
        let score = |beta: f64| beta - m + weighted(beta).0;
        let mut lo = sd * 1e-6;
        let mut hi = sd * 10.0;
        while score(hi) < 0.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if score(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        let beta = 0.5 * (lo + hi);
        let den = weighted(beta).1;
        let location = min - beta * (den / sample.len() as f64).ln();
        Ok(GumbelFit {
            location,
            scale: beta,
        })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        (-(-(x - self.location) / self.scale).exp()).exp()
    }
}

/// Standard Gumbel distribution function `exp(−e^{−z})`.
pub fn gumbel_cdf(z: f64) -> f64 {
    (-(-z).exp()).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Gumbel};

    #[test]
    fn quantiles() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&xs, 0.0), 1.0);
        assert_eq!(quantile_sorted(&xs, 1.0), 4.0);
        assert_eq!(quantile_sorted(&xs, 0.5), 2.5);
    }

    #[test]
    fn chi_square_tail() {
        // k = 2: e^{-x/2}
        assert!((chi_square_sf(3.0, 2.0) - (-1.5f64).exp()).abs() < 1e-14);
        // 99th percentile of chi2(1) is 6.634897
        assert!((chi_square_sf(6.634_897, 1.0) - 0.01).abs() < 1e-7);
    }

    #[test]
    fn kolmogorov_tail() {
        // critical value 1.628 ↔ 1%
        assert!((kolmogorov_sf(1.627_61) - 0.01).abs() < 1e-4);
        assert!((kolmogorov_sf(1.358_1) - 0.05).abs() < 1e-4);
    }

    #[test]
    fn ks_of_perfect_grid() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        let d = ks_statistic(&xs, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.005).abs() < 1e-12);
    }

    #[test]
    fn gumbel_mle_recovers_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = Gumbel::new(2.0, 0.5).unwrap();
        let xs: Vec<f64> = (0..20_000).map(|_| g.sample(&mut rng)).collect();
        let fit = GumbelFit::mle(&xs).unwrap();
        assert!((fit.location - 2.0).abs() < 0.02, "{fit:?}");
        assert!((fit.scale - 0.5).abs() < 0.02, "{fit:?}");
        let z: Vec<f64> = xs.iter().map(|x| (x - fit.location) / fit.scale).collect();
        assert!(ks_statistic(&z, gumbel_cdf) < ks_critical_1pct(z.len()));
    }

    #[test]
    fn gumbel_mle_refuses_tiny_samples() {
        assert!(matches!(GumbelFit::mle(&[1.0]), Err(Error::InsufficientData(_))));
        assert!(GumbelFit::mle(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn covariance_of_independent_is_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let xs: Vec<f64> = (0..10_000).map(|_| rand_distr::StandardNormal.sample(&mut rng)).collect();
        let ys: Vec<f64> = (0..10_000).map(|_| rand_distr::StandardNormal.sample(&mut rng)).collect();
        let (c, se) = covariance_with_se(&xs, &ys);
        assert!(c.abs() < 4.0 * se);
        let (c, se) = covariance_with_se(&xs, &xs);
        assert!(c > 10.0 * se);
    }
}
