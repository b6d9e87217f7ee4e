//! Validation suites: each runs a fixed experiment and reports pass/fail
//! checks against exact values or frozen bounds.

use std::f64::consts::SQRT_2;
use std::path::Path;
use std::time::Instant;

use rand::Rng as _;
use serde::Serialize;

use lnnd_core::asymptotics::{ball_mass_log_ratio, ExponentVariant, FormulaParams};
use lnnd_core::experiments::{
    containment_experiment, en_event_experiment, envelope_check, gumbel_fit_experiment, strong_law_sweep,
    summability_diagnostics, ProcessKind, SeriesKind, SweepConfig, Verdict,
};
use lnnd_core::geometry::{ball_mass, radial_pdf, radial_tail};
use lnnd_core::process::{sample_cloud, PointSequence};
use lnnd_core::quadrature::{integrate, Tolerance};
use lnnd_core::stats::{binomial_se, quantile_sorted};
use lnnd_core::{build_nng_brute, build_nng_fast, Dimension, RadialConstant, SeedRecord};

use crate::error::{usage, CliResult};

pub const SUITES: &[&str] = &[
    "tail",
    "ballmass",
    "lemma1",
    "engine",
    "performance",
    "containment",
    "events",
    "strong_law",
    "gumbel",
    "summability",
    "reproducibility",
];

/// Frozen ratio bounds at n = 10⁶, d = 2, 30 replicates, from pilot runs.
pub const RATIO_RANGE: (f64, f64) = (0.5, 3.0);
pub const RATIO_MEDIAN_RANGE: (f64, f64) = (0.9, 1.4);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Check {
    Check { name: name.into(), passed, detail: detail.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

fn dim(d: u32) -> Dimension {
    Dimension::new(d).expect("d >= 2")
}

pub fn run_suite(name: &str, seed: u64, scratch: &Path) -> CliResult<SuiteReport> {
    let checks = match name {
        "tail" => tail()?,
        "ballmass" => ballmass(seed)?,
        "lemma1" => lemma1()?,
        "engine" => engine(seed)?,
        "performance" => performance(seed)?,
        "containment" => containment(seed)?,
        "events" => events(seed)?,
        "strong_law" => strong_law(seed)?,
        "gumbel" => gumbel(seed)?,
        "summability" => summability()?,
        "reproducibility" => reproducibility(seed, scratch)?,
        other => return Err(usage(format!("unknown suite `{other}`; expected one of {}", SUITES.join(", ")))),
    };
    Ok(SuiteReport { suite: name.to_string(), seed, checks })
}

fn tail() -> CliResult<Vec<Check>> {
    let mut out = Vec::new();
    for d in [2, 3, 5, 10] {
        for r in [0.5, 1.0, 2.0, 5.0, 8.0] {
            let f = |x: f64| radial_pdf(x, dim(d), RadialConstant::Normalized).unwrap_or(f64::NAN);
            let quad = integrate(f, r, r + 40.0, Tolerance::default())?;
            let exact = radial_tail(r, dim(d))?;
            let rel = ((exact - quad) / quad).abs();
            out.push(check(format!("tail d={d} R={r}"), rel <= 1e-9, format!("rel err {rel:.3e}")));
        }
    }
    Ok(out)
}

fn ballmass(seed: u64) -> CliResult<Vec<Check>> {
    let samples = 1_000_000usize;
    let mut out = Vec::new();
    let mut case = 0u64;
    for d in [2u32, 3] {
        for rho in [0.0, 0.5, 1.5, 3.0, 5.0] {
            for r in [0.1, 0.5, 1.0, 2.0, 3.0] {
                case += 1;
                let exact = ball_mass(rho, r, dim(d))?;
                let mut seq = PointSequence::new(dim(d), SeedRecord::new(seed, case));
                let mut buf = Vec::new();
                let mut hits = 0usize;
                let mut left = samples;
                while left > 0 {
                    let take = left.min(65_536);
                    buf.clear();
                    seq.extend_into(&mut buf, take);
                    hits += buf
                        .chunks_exact(d as usize)
                        .filter(|p| {
                            let s: f64 = p[1..].iter().map(|v| v * v).sum();
                            (p[0] - rho).powi(2) + s < r * r
                        })
                        .count();
                    left -= take;
                }
                let freq = hits as f64 / samples as f64;
                let se = binomial_se(exact, samples);
                let z = if freq == exact { 0.0 } else { (freq - exact).abs() / se };
                out.push(check(
                    format!("ball mass d={d} rho={rho} r={r}"),
                    z <= 4.0,
                    format!("mc {freq:.6e} exact {exact:.6e} z {z:.2}"),
                ));
            }
        }
    }
    Ok(out)
}

fn lemma1() -> CliResult<Vec<Check>> {
    let mut out = Vec::new();
    for d in [2u32, 3] {
        for (rho, r) in [(20.0, 0.4), (30.0, 0.3), (40.0, 0.25)] {
            // Both masses underflow f64 at rho = 40; compare logarithms.
            let ratio = ball_mass_log_ratio(rho, r, dim(d), ExponentVariant::HalfRhoSq)?.exp();
            out.push(check(
                format!("half_rho_sq ratio d={d} rho={rho} r={r}"),
                (0.75..=1.25).contains(&ratio),
                format!("{ratio:.4}"),
            ));
            let lr = ball_mass_log_ratio(rho, r, dim(d), ExponentVariant::AsPrinted)?;
            out.push(check(
                format!("as_printed log-ratio d={d} rho={rho} r={r}"),
                lr.abs() > 100.0,
                format!("{lr:.2}"),
            ));
        }
    }
    Ok(out)
}

fn engine(seed: u64) -> CliResult<Vec<Check>> {
    let mut rng = SeedRecord::new(seed, 0).stream(lnnd_core::rng::Role::Probes, 4);
    let mut mismatches = 0;
    for i in 0..200u64 {
        let d = [2, 3, 5][i as usize % 3];
        let n = rng.random_range(2..=2000usize);
        let cloud = sample_cloud(dim(d), n, SeedRecord::new(seed, 1000 + i));
        if build_nng_fast(&cloud)? != build_nng_brute(&cloud)? {
            mismatches += 1;
        }
    }
    Ok(vec![check("fast equals brute on 200 instances", mismatches == 0, format!("{mismatches} mismatches"))])
}

fn performance(seed: u64) -> CliResult<Vec<Check>> {
    let mut out = Vec::new();
    for (n, budget) in [(1_000_000usize, 60.0), (10_000_000, 900.0)] {
        let cloud = sample_cloud(dim(2), n, SeedRecord::new(seed, 0));
        let t = Instant::now();
        let r = build_nng_fast(&cloud)?;
        let secs = t.elapsed().as_secs_f64();
        out.push(check(
            format!("build_nng_fast n={n} d=2"),
            secs < budget,
            format!("{secs:.2}s (budget {budget}s, {} threads), d_n {:.6}", rayon::current_num_threads(), r.d_n),
        ));
    }
    Ok(out)
}

fn containment(seed: u64) -> CliResult<Vec<Check>> {
    let d = dim(2);
    let u = containment_experiment(10_000, 2.0, d, RadialConstant::Normalized, 2000, seed)?;
    let v = containment_experiment(10_000, -1.0, d, RadialConstant::Normalized, 2000, seed.wrapping_add(1))?;
    Ok(vec![
        check(
            "U_n(2) frequency within 3 se",
            u.within(3.0),
            format!(
                "freq {:.4} exact {:.4} (escape exact {:.4}, asym {:.4}) z {:.2}",
                u.freq_contained, u.exact_contained, u.exact_escape, u.asym_escape, u.z_score()
            ),
        ),
        check(
            "V_n(-1) frequency within 3 se",
            v.within(3.0),
            format!("freq {:.4} exact {:.4} z {:.2}", v.freq_escape, v.exact_escape, v.z_score()),
        ),
    ])
}

fn events(seed: u64) -> CliResult<Vec<Check>> {
    let mut p = FormulaParams::new(dim(2));
    p.c = 2.5;
    p.u = 1.1;
    p.eps = 0.05;
    let rep = en_event_experiment(10_000, &p, 1, 10_000, seed)?;
    let probe = &rep.probes[0];
    let mut out = vec![check(
        "E_n frequency at rho = R'_n within 3 se",
        probe.z_score() <= 3.0,
        format!(
            "{} events in {} (freq {:.3e}) exact {:.3e} se {:.3e} z {:.2}",
            probe.events, rep.replicates, probe.freq, probe.exact, probe.se, probe.z_score()
        ),
    )];
    for cov in &rep.covariances {
        out.push(check(
            format!("region-count covariances at {} within 4 se", cov.label),
            cov.max_z() <= 4.0,
            format!("max |z| {:.2}", cov.max_z()),
        ));
    }
    Ok(out)
}

fn strong_law(seed: u64) -> CliResult<Vec<Check>> {
    let d = dim(2);
    let cfg = SweepConfig {
        d,
        n_grid: vec![100_000, 1_000_000],
        replicates: 100,
        base_seed: seed,
        params: FormulaParams::new(d),
        process: ProcessKind::Binomial,
    };
    let report = strong_law_sweep(&cfg)?;
    let t_high = 2.0 * d.as_f64() / SQRT_2;
    let mut out: Vec<Check> = envelope_check(&report, 0.0, t_high)?
        .iter()
        .map(|row| {
            check(
                format!("envelope d_n < r_n(2d/sqrt2) at n={}", row.n),
                row.below_upper == 1.0,
                format!("fraction {} over {}", row.below_upper, row.replicates),
            )
        })
        .collect();
    let mut ratios: Vec<f64> = report
        .records
        .iter()
        .filter(|r| r.n == 1_000_000 && r.replicate < 30)
        .filter_map(|r| r.ratio)
        .collect();
    ratios.sort_by(f64::total_cmp);
    let (lo, hi) = (ratios[0], ratios[ratios.len() - 1]);
    let median = quantile_sorted(&ratios, 0.5);
    out.push(check(
        "ratios at n=1e6 within frozen range",
        ratios.len() == 30 && lo >= RATIO_RANGE.0 && hi <= RATIO_RANGE.1,
        format!("min {lo:.4} max {hi:.4} in [{}, {}]", RATIO_RANGE.0, RATIO_RANGE.1),
    ));
    out.push(check(
        "median ratio at n=1e6 within frozen range",
        (RATIO_MEDIAN_RANGE.0..=RATIO_MEDIAN_RANGE.1).contains(&median),
        format!("median {median:.4} in [{}, {}]", RATIO_MEDIAN_RANGE.0, RATIO_MEDIAN_RANGE.1),
    ));
    let trend: Vec<String> = report.summaries.iter().map(|s| format!("n={} max {:.4}", s.n, s.max)).collect();
    out.push(check(
        "max-ratio trend (reported)",
        true,
        format!("{}; limit line {:.4}", trend.join(", "), report.limit_line),
    ));
    Ok(out)
}

fn gumbel(seed: u64) -> CliResult<Vec<Check>> {
    let rep = gumbel_fit_experiment(100_000, dim(2), 500, seed)?;
    Ok(vec![
        check(
            "KS distance below 1% critical value",
            rep.passes(),
            format!("ks {:.4} critical {:.4} p {:.3}", rep.ks, rep.ks_critical, rep.ks_p_value),
        ),
        check(
            "fitted location and scale (reported)",
            true,
            format!(
                "location {:.4} (minus (d-1) ln ln n: {:.4}) scale {:.4}",
                rep.fit.location, rep.centered_location, rep.fit.scale
            ),
        ),
    ])
}

fn summability() -> CliResult<Vec<Check>> {
    let mut out = Vec::new();
    let mut p = FormulaParams::new(dim(2));
    for (c, want) in [(3.0, Verdict::Summable), (1.0, Verdict::Divergent)] {
        p.c = c;
        let t = summability_diagnostics(SeriesKind::Lemma2Upper, &p, 1000)?;
        out.push(check(
            format!("lemma2_upper c={c} is {want:?}"),
            t.verdict == want,
            format!("tail-decade ratio {:.4}", t.tail_decade_ratio),
        ));
    }
    p.c = 2.5;
    let th = p.u_threshold();
    for (du, want) in [(-0.5, Verdict::Divergent), (-0.25, Verdict::Divergent), (0.5, Verdict::Summable), (1.0, Verdict::Summable), (0.0, Verdict::Inconclusive)] {
        p.u = th + du;
        let t = summability_diagnostics(SeriesKind::Prop1, &p, 1000)?;
        out.push(check(
            format!("prop1 u = u* {du:+} is {want:?}"),
            t.verdict == want,
            format!("u {:.4} tail-decade ratio {:.4e}", p.u, t.tail_decade_ratio),
        ));
    }
    Ok(out)
}

fn reproducibility(seed: u64, scratch: &Path) -> CliResult<Vec<Check>> {
    let runs: [(&str, Vec<String>); 5] = [
        ("sample", vec!["sample".into(), "--d".into(), "3".into(), "--n".into(), "500".into()]),
        (
            "sweep",
            ["sweep", "--n-grid", "200,2000", "--replicates", "8", "--process", "coupled", "--plot", "true"]
                .map(String::from)
                .to_vec(),
        ),
        ("formulas", ["formulas", "--evaluator", "ball_mass_asym", "--grid", "rho=20,30;variant=half_rho_sq,as_printed"].map(String::from).to_vec()),
        ("events", ["events", "--kind", "containment", "--n", "1000", "--replicates", "200"].map(String::from).to_vec()),
        ("summability", ["events", "--kind", "summability", "--series", "prop1", "--horizon", "200"].map(String::from).to_vec()),
    ];
    let mut out = Vec::new();
    for (label, args) in runs {
        let first = scratch.join(label).join("first");
        let second = scratch.join(label).join("replay");
        let mut argv = vec!["lnnd".to_string()];
        argv.extend(args);
        argv.extend(["--seed".into(), seed.to_string(), "--out".into(), first.display().to_string()]);
        crate::run_args(argv)?;
        crate::run_args(vec![
            "lnnd".into(),
            "replay".into(),
            first.join("manifest.txt").display().to_string(),
            "--out".into(),
            second.display().to_string(),
        ])?;
        let (same, detail) = compare_dirs(&first, &second)?;
        out.push(check(format!("{label} replay is byte-identical"), same, detail));
    }
    Ok(out)
}

fn compare_dirs(a: &Path, b: &Path) -> CliResult<(bool, String)> {
    let list = |p: &Path| -> CliResult<Vec<String>> {
        let mut v: Vec<String> = std::fs::read_dir(p)?
            .map(|e| e.map(|e| e.file_name().to_string_lossy().into_owned()))
            .collect::<Result<_, _>>()?;
        v.sort();
        Ok(v)
    };
    let (fa, fb) = (list(a)?, list(b)?);
    if fa != fb {
        return Ok((false, format!("file sets differ: {fa:?} vs {fb:?}")));
    }
    for f in &fa {
        if std::fs::read(a.join(f))? != std::fs::read(b.join(f))? {
            return Ok((false, format!("{f} differs")));
        }
    }
    Ok((true, format!("{} files identical", fa.len())))
}
