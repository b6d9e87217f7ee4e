use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Dimension;
use crate::nng::lnnd;
use crate::process::sample_cloud;
use crate::rng::SeedRecord;
use crate::stats::{gumbel_cdf, ks_critical_1pct, kolmogorov_sf, GumbelFit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GumbelReport {
    pub n: u64,
    pub d: Dimension,
    pub replicates: u32,
    pub base_seed: u64,
    /// `√(2 ln n) d_n` per replicate, in replicate order.
    pub sample: Vec<f64>,
    pub fit: GumbelFit,
    /// Fitted location minus `(d − 1) ln ln n`.
    pub centered_location: f64,
    /// KS distance of the standardized sample to the standard Gumbel law.
    pub ks: f64,
    pub ks_p_value: f64,
    pub ks_critical: f64,
}

impl GumbelReport {
    pub fn passes(&self) -> bool {
        self.ks < self.ks_critical
    }
}

pub fn gumbel_fit_experiment(n: u64, d: Dimension, replicates: u32, base_seed: u64) -> Result<GumbelReport> {
    if replicates < 2 {
        return Err(Error::InsufficientData(format!(
            "a Gumbel fit needs at least 2 replicates, got {replicates}"
        )));
    }
    if n < 16 {
        return Err(Error::domain("n", format!("need n >= 16, got {n}")));
    }
    let ln_n = (n as f64).ln();
    let scale = (2.0 * ln_n).sqrt();
    let sample: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|r| Ok(scale * lnnd(&sample_cloud(d, n as usize, SeedRecord::new(base_seed, r as u64)))?))
        .collect::<Result<_>>()?;
    let fit = GumbelFit::mle(&sample)?;
    let z: Vec<f64> = sample.iter().map(|y| (y - fit.location) / fit.scale).collect();
    let ks = crate::stats::ks_statistic(&z, gumbel_cdf);
    let m = sample.len();
    Ok(GumbelReport {
        n,
        d,
        replicates,
        base_seed,
        centered_location: fit.location - (d.as_f64() - 1.0) * ln_n.ln(),
        fit,
        ks,
        ks_p_value: kolmogorov_sf(ks * (m as f64).sqrt()),
        ks_critical: ks_critical_1pct(m),
        sample,
    })
}
