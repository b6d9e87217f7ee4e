use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::asymptotics::{en_prob_model, small_radius, EnProb, FormulaParams, GrowthScales};
use crate::error::{Error, Result};
use crate::geometry::ln_ball_mass;
use crate::nng::dist2;
use crate::process::{coupled_means, sample_coupled};
use crate::rng::SeedRecord;
use crate::stats::{binomial_se, covariance_null_se, covariance_with_se};

const MAX_CANDIDATES: f64 = 2e8;

/// Greedy packing of the annulus `R'_n ≤ ‖x‖ < R_n(c)` by disjoint balls of
/// radius `r_n(u)`.
///
/// The first center is `(R'_n, 0, …, 0)`. Candidates then come from a cubic
/// lattice of spacing `r_n(u)/2` scanned in lexicographic order; a candidate
/// is kept when it lies in the annulus and is at least `2 r_n(u)` from every
/// kept center. The result depends only on `n` and `params`.
pub fn packing_construction(n: f64, params: &FormulaParams) -> Result<Vec<Vec<f64>>> {
    let scales = GrowthScales::new(n, params)?;
    let r = small_radius(n, params.u)?;
    if !(r > 0.0) {
        return Err(Error::domain("u", format!("ball radius must be positive, got {r}")));
    }
    let (inner, outer) = (scales.big_prime, scales.big);
    let k = params.d.as_usize();
    let mut centers: Vec<Vec<f64>> = Vec::new();
    if !(outer > inner) {
        return Ok(centers);
    }
    let h = 0.5 * r;
    let half = (outer / h).ceil() as i64;
    let side = (2 * half + 1) as f64;
    if side.powi(k as i32) > MAX_CANDIDATES {
        return Err(Error::domain(
            "packing",
            format!("{} lattice candidates exceed the limit", side.powi(k as i32)),
        ));
    }

    let cell = 2.0 * r;
    let min2 = cell * cell;
    let mut grid: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    let key = |p: &[f64]| p.iter().map(|v| (v / cell).floor() as i64).collect::<Vec<i64>>();
    let mut try_add = |p: Vec<f64>, centers: &mut Vec<Vec<f64>>| {
        let norm2: f64 = p.iter().map(|v| v * v).sum();
        if norm2 < inner * inner || norm2 >= outer * outer {
            return;
        }
        let base = key(&p);
        let mut offset = vec![-1i64; k];
        loop {
            let probe: Vec<i64> = base.iter().zip(&offset).map(|(b, o)| b + o).collect();
            if let Some(ids) = grid.get(&probe) {
                if ids.iter().any(|&i| dist2(&centers[i], &p) < min2) {
                    return;
                }
            }
            let mut j = 0;
            while j < k {
                offset[j] += 1;
                if offset[j] <= 1 {
                    break;
                }
                offset[j] = -1;
                j += 1;
            }
            if j == k {
                break;
            }
        }
        grid.entry(base).or_default().push(centers.len());
        centers.push(p);
    };

    let mut first = vec![0.0; k];
    first[0] = inner;
    try_add(first, &mut centers);
    let mut idx = vec![-half; k];
    loop {
        let p: Vec<f64> = idx.iter().map(|&i| i as f64 * h).collect();
        try_add(p, &mut centers);
        let mut j = k;
        loop {
            if j == 0 {
                return Ok(centers);
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] <= half {
                break;
            }
            idx[j] = -half;
        }
    }
}

/// Outcome of one probe center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub index: usize,
    /// `‖x‖`.
    pub rho: f64,
    /// `I(x, r_n(ε))`.
    pub mass_inner: f64,
    /// `I(x, r_n(u))`.
    pub mass_outer: f64,
    /// `(n − n^{3/4}) I(x, r_n(ε)) exp(−(n + n^{3/4}) I(x, r_n(u)))`.
    pub exact: f64,
    pub events: u32,
    pub freq: f64,
    pub se: f64,
}

impl ProbeResult {
    pub fn z_score(&self) -> f64 {
        let diff = (self.freq - self.exact).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.se
        }
    }
}

/// Pairwise sample covariances of the four region counts at one center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionCovariance {
    pub label: String,
    pub rho: f64,
    pub means: [f64; 4],
    /// `(i, j, covariance, standard error under independence)` over the
    /// six pairs.
    pub pairs: Vec<(usize, usize, f64, f64)>,
}

impl RegionCovariance {
    pub const NAMES: [&'static str; 4] = ["minus_inner", "minus_shell", "increment_inner", "increment_shell"];

    pub fn max_z(&self) -> f64 {
        self.pairs
            .iter()
            .map(|&(_, _, cov, se)| if cov == 0.0 { 0.0 } else { cov.abs() / se })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnReport {
    pub n: u64,
    pub params: FormulaParams,
    pub replicates: u32,
    pub base_seed: u64,
    pub r_inner: f64,
    pub r_outer: f64,
    pub big: f64,
    pub big_prime: f64,
    pub packing_size: usize,
    /// Replicates where `P⁻ ⊆ X_n ⊆ P⁺` fails.
    pub coupling_failures: u32,
    pub probes: Vec<ProbeResult>,
    /// Probe 0 first, then a reference center at the origin where the
    /// counts are large.
    pub covariances: Vec<RegionCovariance>,
    pub model: EnProb,
}

fn four_counts(minus: &[f64], increment: &[f64], k: usize, x: &[f64], r_in2: f64, r_out2: f64) -> [u32; 4] {
    let mut out = [0u32; 4];
    for (coords, base) in [(minus, 0), (increment, 2)] {
        for p in coords.chunks_exact(k) {
            let d2 = dist2(x, p);
            if d2 < r_in2 {
                out[base] += 1;
            } else if d2 < r_out2 {
                out[base + 1] += 1;
            }
        }
    }
    out
}

fn covariance_table(label: &str, rho: f64, counts: &[[u32; 4]]) -> RegionCovariance {
    let cols: Vec<Vec<f64>> = (0..4).map(|i| counts.iter().map(|c| c[i] as f64).collect()).collect();
    let mut pairs = Vec::new();
    for i in 0..4 {
        for j in i + 1..4 {
            let (cov, _) = covariance_with_se(&cols[i], &cols[j]);
            pairs.push((i, j, cov, covariance_null_se(&cols[i], &cols[j])));
        }
    }
    RegionCovariance {
        label: label.to_string(),
        rho,
        means: std::array::from_fn(|i| crate::stats::mean(&cols[i])),
        pairs,
    }
}

/// Isolation events `E_n(x)` at probe centers from [`packing_construction`],
/// simulated on coupled triples and compared with their exact probability.
///
/// `U = B(x, r_n(ε))` and `V = B(x, r_n(u)) \ U`. `E_n(x)` holds when `P⁻`
/// has exactly one point in `U` and no point in `V`, and the increment
/// `P⁺ \ P⁻` has none in `U ∪ V`.
pub fn en_event_experiment(
    n: u64,
    params: &FormulaParams,
    probe_count: usize,
    replicates: u32,
    base_seed: u64,
) -> Result<EnReport> {
    if replicates < 2 {
        return Err(Error::domain("replicates", "need at least 2"));
    }
    if probe_count < 1 {
        return Err(Error::domain("probe_count", "need at least 1"));
    }
    if !(params.eps > 0.0 && params.eps <= params.u) {
        return Err(Error::domain(
            "eps",
            format!("need 0 < eps <= u, got eps={}, u={}", params.eps, params.u),
        ));
    }
    let nf = n as f64;
    let d = params.d;
    let k = d.as_usize();
    let scales = GrowthScales::new(nf, params)?;
    let r_in = small_radius(nf, params.eps)?;
    let r_out = small_radius(nf, params.u)?;
    let packing = packing_construction(nf, params)?;
    let probes: Vec<Vec<f64>> = packing.iter().take(probe_count).cloned().collect();
    let (lambda_minus, extra) = coupled_means(n as usize);
    let lambda_plus = lambda_minus + extra;

    let (r_in2, r_out2) = (r_in * r_in, r_out * r_out);
    let near = (scales.big_prime - r_out).max(0.0);
    let origin = vec![0.0; k];
    let per_rep: Vec<(bool, Vec<[u32; 4]>, [u32; 4])> = (0..replicates)
        .into_par_iter()
        .map(|rep| {
            let triple = sample_coupled(d, n as usize, SeedRecord::new(base_seed, rep as u64))?;
            let keep = |coords: &[f64]| -> Vec<f64> {
                coords
                    .chunks_exact(k)
                    .filter(|p| p.iter().map(|v| v * v).sum::<f64>().sqrt() >= near)
                    .flatten()
                    .copied()
                    .collect()
            };
            let (minus, inc) = (keep(triple.minus_coords()), keep(triple.increment_coords()));
            let counts = probes.iter().map(|x| four_counts(&minus, &inc, k, x, r_in2, r_out2)).collect();
            let reference = four_counts(triple.minus_coords(), triple.increment_coords(), k, &origin, r_in2, r_out2);
            Ok((triple.coupling_holds(), counts, reference))
        })
        .collect::<Result<_>>()?;

    let reps = replicates as f64;
    let probe_results = probes
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let rho = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let ln_in = ln_ball_mass(rho, r_in, d)?;
            let ln_out = ln_ball_mass(rho, r_out, d)?;
            let exact = (lambda_minus.ln() + ln_in - lambda_plus * ln_out.exp()).exp();
            let events = per_rep
                .iter()
                .filter(|(_, c, _)| c[i] == [1, 0, 0, 0])
                .count() as u32;
            Ok(ProbeResult {
                index: i,
                rho,
                mass_inner: ln_in.exp(),
                mass_outer: ln_out.exp(),
                exact,
                events,
                freq: events as f64 / reps,
                se: binomial_se(exact, replicates as usize),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let probe0: Vec<[u32; 4]> = per_rep.iter().map(|(_, c, _)| c[0]).collect();
    let reference: Vec<[u32; 4]> = per_rep.iter().map(|(_, _, r)| *r).collect();
    let covariances = vec![
        covariance_table("probe0", probe_results[0].rho, &probe0),
        covariance_table("origin", 0.0, &reference),
    ];
    Ok(EnReport {
        n,
        params: *params,
        replicates,
        base_seed,
        r_inner: r_in,
        r_outer: r_out,
        big: scales.big,
        big_prime: scales.big_prime,
        packing_size: packing.len(),
        coupling_failures: per_rep.iter().filter(|(h, _, _)| !h).count() as u32,
        probes: probe_results,
        covariances,
        model: en_prob_model(nf, params)?,
    })
}
