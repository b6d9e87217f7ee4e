use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{big_radius, containment_defect_asym};
use crate::error::{Error, Result};
use crate::geometry::{ln_radial_cdf, Dimension, RadialConstant};
use crate::process::PointSequence;
use crate::rng::SeedRecord;
use crate::stats::binomial_se;

/// Containment frequencies for `X_n` against `B(0, R_n(c))`.
///
/// `U_n(c)` is the event that the whole sample lies inside the ball and
/// `V_n(c)` its complement, that at least one point lies outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainmentResult {
    pub n: u64,
    pub c: f64,
    pub d: Dimension,
    pub constant: RadialConstant,
    pub replicates: u32,
    pub base_seed: u64,
    pub radius: f64,
    pub contained: u32,
    /// Empirical frequency of `U_n(c)`.
    pub freq_contained: f64,
    /// `(1 − tail(R))^n`.
    pub exact_contained: f64,
    /// Empirical frequency of `V_n(c)`.
    pub freq_escape: f64,
    /// `1 − (1 − tail(R))^n`.
    pub exact_escape: f64,
    /// Asymptotic escape probability `n A R^{d−2} e^{−R²/2}`.
    pub asym_escape: f64,
    /// Binomial standard error at the exact probability.
    pub se: f64,
}

impl ContainmentResult {
    /// Distance of the empirical frequency from the exact one, in standard
    /// errors; zero when both agree exactly.
    pub fn z_score(&self) -> f64 {
        let diff = (self.freq_contained - self.exact_contained).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.se
        }
    }

    pub fn within(&self, k: f64) -> bool {
        self.z_score() <= k
    }
}

const CHUNK: usize = 4096;

/// Whether the first `n` points of the replicate's sequence all lie in the
/// open ball of radius `radius`. Points are streamed in chunks and never
/// stored; the scan stops at the first escape.
fn replicate_contained(d: Dimension, n: u64, radius: f64, seed: SeedRecord) -> bool {
    let r2 = radius * radius;
    let k = d.as_usize();
    let mut seq = PointSequence::new(d, seed);
    let mut buf = Vec::with_capacity(CHUNK * k);
    let mut left = n as usize;
    while left > 0 {
        let take = left.min(CHUNK);
        buf.clear();
        seq.extend_into(&mut buf, take);
        if buf.chunks_exact(k).any(|p| p.iter().map(|v| v * v).sum::<f64>() >= r2) {
            return false;
        }
        left -= take;
    }
    true
}

pub fn containment_experiment(
    n: u64,
    c: f64,
    d: Dimension,
    constant: RadialConstant,
    replicates: u32,
    base_seed: u64,
) -> Result<ContainmentResult> {
    if replicates < 1 {
        return Err(Error::domain("replicates", "must be at least 1"));
    }
    let nf = n as f64;
    let radius = big_radius(nf, c, d, constant)?;
    let contained = (0..replicates)
        .into_par_iter()
        .filter(|&r| replicate_contained(d, n, radius, SeedRecord::new(base_seed, r as u64)))
        .count() as u32;
    let ln_contained = nf * ln_radial_cdf(radius, d)?;
    let exact_contained = ln_contained.exp();
    let exact_escape = -ln_contained.exp_m1();
    let freq_contained = contained as f64 / replicates as f64;
    Ok(ContainmentResult {
        n,
        c,
        d,
        constant,
        replicates,
        base_seed,
        radius,
        contained,
        freq_contained,
        exact_contained,
        freq_escape: 1.0 - freq_contained,
        exact_escape,
        asym_escape: containment_defect_asym(nf, c, d, constant)?.full,
        se: binomial_se(exact_contained, replicates as usize),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::sample_cloud;

    #[test]
    fn matches_stored_cloud() {
        let d = Dimension::new(3).unwrap();
        for r in 0..20 {
            let seed = SeedRecord::new(5, r);
            let cloud = sample_cloud(d, 5000, seed);
            let radius = 4.0;
            let stored = cloud.points().all(|p| p.iter().map(|v| v * v).sum::<f64>() < 16.0);
            assert_eq!(stored, replicate_contained(d, 5000, radius, seed));
        }
    }

    #[test]
    fn far_tail_is_always_contained() {
        let d = Dimension::new(2).unwrap();
        let res = containment_experiment(1000, 50.0, d, RadialConstant::Normalized, 200, 1).unwrap();
        assert_eq!(res.contained, 200);
        assert!(res.exact_escape < 1e-6);
        assert!(res.within(3.0));
    }

    #[test]
    fn small_run_agrees() {
        let d = Dimension::new(2).unwrap();
        let res = containment_experiment(2000, 2.0, d, RadialConstant::Normalized, 400, 9).unwrap();
        assert!(res.within(4.0), "{res:?}");
        assert!((res.freq_contained + res.freq_escape - 1.0).abs() < 1e-15);
        assert!(containment_experiment(10, 2.0, d, RadialConstant::Normalized, 0, 1).is_err());
    }
}
