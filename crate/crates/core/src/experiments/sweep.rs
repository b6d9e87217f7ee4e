use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;
use std::io::Write;

use crate::asymptotics::{big_radius, small_radius, FormulaParams};
use crate::error::{Error, Result};
use crate::geometry::Dimension;
use crate::nng::{build_nng_fast, AnnulusSpec};
use crate::process::{format_real, poissonize, sample_coupled, sample_cloud, CloudKind, PointCloud};
use crate::rng::SeedRecord;
use crate::stats::quantile_sorted;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessKind {
    Binomial,
    Poisson,
    Coupled,
}

impl std::str::FromStr for ProcessKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binomial" => Ok(ProcessKind::Binomial),
            "poisson" => Ok(ProcessKind::Poisson),
            "coupled" => Ok(ProcessKind::Coupled),
            _ => Err(Error::domain("process", format!("expected binomial, poisson or coupled, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub d: Dimension,
    pub n_grid: Vec<u64>,
    pub replicates: u32,
    pub base_seed: u64,
    pub params: FormulaParams,
    pub process: ProcessKind,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() || self.n_grid.iter().any(|&n| n < 16) {
            return Err(Error::domain("n_grid", "needs at least one entry, all >= 16"));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain("n_grid", "must be strictly increasing"));
        }
        if self.replicates < 1 {
            return Err(Error::domain("replicates", "must be at least 1"));
        }
        if self.params.d != self.d {
            return Err(Error::domain("params.d", "differs from the sweep dimension"));
        }
        Ok(())
    }
}

/// `√(ln n) d_n / ln ln n`.
pub fn strong_law_ratio(n: f64, d_n: f64) -> f64 {
    let ln_n = n.ln();
    ln_n.sqrt() * d_n / ln_n.ln()
}

/// One `(n, replicate)` outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub n: u64,
    pub replicate: u32,
    pub seed: SeedRecord,
    pub points: usize,
    /// `None` when the cloud has fewer than two points.
    pub d_n: Option<f64>,
    pub ratio: Option<f64>,
    /// LNND restricted to points in `R'_n ≤ ‖x‖ < R_n(c)`.
    pub d_n_annulus: Option<f64>,
    /// The cloud lies inside `B(0, R_n(c))`.
    pub contained: bool,
    /// `H_n`, for coupled sweeps only.
    pub coupling: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NSummary {
    pub n: u64,
    pub count: usize,
    pub missing: usize,
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub q05: f64,
    pub q25: f64,
    pub q75: f64,
    pub q95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: SweepConfig,
    pub code_version: String,
    pub records: Vec<SweepRecord>,
    pub summaries: Vec<NSummary>,
    /// `d/√2`, the almost-sure limit of the ratio.
    pub limit_line: f64,
    /// `(d−1)/√2`, the centering implied by the weak law.
    pub weak_law_line: f64,
}

fn record_for(cloud: &PointCloud, n: u64, replicate: u32, seed: SeedRecord, config: &SweepConfig) -> Result<SweepRecord> {
    let nf = n as f64;
    let p = &config.params;
    let outer = big_radius(nf, p.c, p.d, p.constant)?;
    let inner = big_radius(nf, -2.0, p.d, p.constant)?;
    let contained = cloud.points().all(|x| x.iter().map(|v| v * v).sum::<f64>() < outer * outer);
    let (d_n, d_n_annulus) = if cloud.len() >= 2 {
        let nng = build_nng_fast(cloud)?;
        let ann = AnnulusSpec::new(inner.min(outer), outer)?;
        let restricted = cloud
            .points()
            .zip(&nng.nn_dist)
            .filter(|(x, _)| ann.contains(x))
            .map(|(_, &r)| r)
            .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.max(r))));
        (Some(nng.d_n), restricted)
    } else {
        (None, None)
    };
    Ok(SweepRecord {
        n,
        replicate,
        seed,
        points: cloud.len(),
        d_n,
        ratio: d_n.map(|v| strong_law_ratio(nf, v)),
        d_n_annulus,
        contained,
        coupling: None,
    })
}

fn replicate_records(config: &SweepConfig, replicate: u32) -> Result<Vec<SweepRecord>> {
    let seed = SeedRecord::new(config.base_seed, replicate as u64);
    let d = config.d;
    match config.process {
        ProcessKind::Binomial => {
            let top = *config.n_grid.last().expect("validated");
            let full = sample_cloud(d, top as usize, seed);
            let k = d.as_usize();
            config
                .n_grid
                .iter()
                .map(|&n| {
                    let prefix = PointCloud::from_coords(d, full.coords()[..n as usize * k].to_vec(), CloudKind::Binomial { n })?;
                    record_for(&prefix, n, replicate, seed, config)
                })
                .collect()
        }
        ProcessKind::Poisson => {
            let grid: Vec<f64> = config.n_grid.iter().map(|&n| n as f64).collect();
            let clouds = poissonize(d, &grid, seed)?;
            config
                .n_grid
                .iter()
                .zip(&clouds)
                .map(|(&n, c)| record_for(c, n, replicate, seed, config))
                .collect()
        }
        ProcessKind::Coupled => config
            .n_grid
            .iter()
            .map(|&n| {
                let triple = sample_coupled(d, n as usize, seed)?;
                let fixed = triple.cloud(crate::process::CoupledPart::Fixed);
                let mut rec = record_for(&fixed, n, replicate, seed, config)?;
                rec.coupling = Some(triple.coupling_holds());
                Ok(rec)
            })
            .collect(),
    }
}

fn summarize(n: u64, records: &[SweepRecord]) -> NSummary {
    let mut ratios: Vec<f64> = records.iter().filter_map(|r| r.ratio).collect();
    ratios.sort_by(f64::total_cmp);
    let missing = records.len() - ratios.len();
    if ratios.is_empty() {
        return NSummary {
            n,
            count: 0,
            missing,
            mean: f64::NAN,
            median: f64::NAN,
            min: f64::NAN,
            max: f64::NAN,
            q05: f64::NAN,
            q25: f64::NAN,
            q75: f64::NAN,
            q95: f64::NAN,
        };
    }
    let q = |p| quantile_sorted(&ratios, p);
    NSummary {
        n,
        count: ratios.len(),
        missing,
        mean: ratios.iter().sum::<f64>() / ratios.len() as f64,
        median: q(0.5),
        min: ratios[0],
        max: ratios[ratios.len() - 1],
        q05: q(0.05),
        q25: q(0.25),
        q75: q(0.75),
        q95: q(0.95),
    }
}

pub(crate) fn code_version() -> String {
    format!("lnnd-core {}", env!("CARGO_PKG_VERSION"))
}

/// Samples every `(n, replicate)` of the grid, computes `d_n` exactly and
/// records the strong-law ratio.
pub fn strong_law_sweep(config: &SweepConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let per_replicate: Vec<Vec<SweepRecord>> = (0..config.replicates)
        .into_par_iter()
        .map(|r| replicate_records(config, r))
        .collect::<Result<_>>()?;
    let mut records: Vec<SweepRecord> = per_replicate.into_iter().flatten().collect();
    records.sort_by_key(|r| (r.n, r.replicate));
    let summaries = config
        .n_grid
        .iter()
        .map(|&n| {
            let at_n: Vec<SweepRecord> = records.iter().filter(|r| r.n == n).cloned().collect();
            summarize(n, &at_n)
        })
        .collect();
    let df = config.d.as_f64();
    Ok(ExperimentReport {
        config: config.clone(),
        code_version: code_version(),
        records,
        summaries,
        limit_line: df / SQRT_2,
        weak_law_line: (df - 1.0) / SQRT_2,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeRow {
    pub n: u64,
    pub replicates: usize,
    /// Fraction with `d_n < r_n(t_high)`.
    pub below_upper: f64,
    /// Fraction with `d_n ≥ r_n(t_low)`.
    pub above_lower: f64,
}

/// Per-n envelope fractions; records without a `d_n` are skipped.
pub fn envelope_check(report: &ExperimentReport, t_low: f64, t_high: f64) -> Result<Vec<EnvelopeRow>> {
    report
        .config
        .n_grid
        .iter()
        .map(|&n| {
            let upper = small_radius(n as f64, t_high)?;
            let lower = small_radius(n as f64, t_low)?;
            let values: Vec<f64> = report.records.iter().filter(|r| r.n == n).filter_map(|r| r.d_n).collect();
            let k = values.len().max(1) as f64;
            Ok(EnvelopeRow {
                n,
                replicates: values.len(),
                below_upper: values.iter().filter(|&&v| v < upper).count() as f64 / k,
                above_lower: values.iter().filter(|&&v| v >= lower).count() as f64 / k,
            })
        })
        .collect()
}

impl ExperimentReport {
    pub const CSV_HEADER: &'static str =
        "n,replicate,base_seed,points,d_n,ratio,d_n_annulus,contained,coupling";

    /// One record per row; missing values are empty fields.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        let opt = |v: Option<f64>| v.map(format_real).unwrap_or_default();
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                r.n,
                r.replicate,
                r.seed.base,
                r.points,
                opt(r.d_n),
                opt(r.ratio),
                opt(r.d_n_annulus),
                r.contained,
                r.coupling.map(|b| b.to_string()).unwrap_or_default()
            )?;
        }
        Ok(())
    }

    /// Summary JSON without the per-record list.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "config": self.config,
            "code_version": self.code_version,
            "limit_line": self.limit_line,
            "weak_law_line": self.weak_law_line,
            "summaries": self.summaries,
            "max_ratio_trend": self.summaries.iter().map(|s| s.max).collect::<Vec<_>>(),
        })
    }

    /// Python/matplotlib script plotting the ratio against ln ln n with the
    /// two reference lines, reading the CSV at `csv_path`.
    pub fn plot_script(&self, csv_path: &str) -> String {
        format!(
            "import csv, math\nimport matplotlib.pyplot as plt\n\
             rows = [r for r in csv.DictReader(open({csv_path:?})) if r['ratio']]\n\
             x = [math.log(math.log(float(r['n']))) for r in rows]\n\
             y = [float(r['ratio']) for r in rows]\n\
             plt.scatter(x, y, s=6, label='ratio')\n\
             plt.axhline({}, color='k', label='d/sqrt(2)')\n\
             plt.axhline({}, color='k', ls='--', label='(d-1)/sqrt(2)')\n\
             plt.xlabel('ln ln n'); plt.ylabel('sqrt(ln n) d_n / ln ln n'); plt.legend()\n\
             plt.savefig('ratio.png', dpi=150)\n",
            self.limit_line, self.weak_law_line
        )
    }
}
