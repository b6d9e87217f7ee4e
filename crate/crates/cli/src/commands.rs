use std::f64::consts::SQRT_2;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use lnnd_core::asymptotics::{packing_count_bound, FormulaParams};
use lnnd_core::experiments::{
    containment_experiment, covering_construction, en_event_experiment, envelope_check, gumbel_fit_experiment,
    packing_construction, strong_law_sweep, summability_diagnostics, ProcessKind, SeriesKind, SweepConfig,
};
use lnnd_core::nng::{lnnd_restricted, AnnulusSpec};
use lnnd_core::process::{format_real, poissonize, sample_cloud, sample_coupled, CoupledPart};
use lnnd_core::{build_nng_fast, Dimension, PointCloud, RadialConstant, SeedRecord};
use serde_json::json;

use crate::config::Settings;
use crate::error::{usage, CliError, CliResult};
use crate::formulas::{formulas_table, parse_grid};
use crate::output::{json_bytes, write_atomic};
use crate::validate::run_suite;

pub const COMMANDS: &[&str] = &["sample", "lnnd", "sweep", "formulas", "events", "validate"];

pub fn code_version() -> String {
    format!("lnnd {}", env!("CARGO_PKG_VERSION"))
}

pub fn table(command: &str) -> CliResult<Settings> {
    let keys: &[(&'static str, &'static str)] = match command {
        "sample" => &[("d", "2"), ("n", "1000"), ("process", "binomial"), ("replicate", "0")],
        "lnnd" => &[("in", ""), ("inner", ""), ("outer", "")],
        "sweep" => &[
            ("d", "2"),
            ("n_grid", "1000,10000,100000"),
            ("replicates", "10"),
            ("process", "binomial"),
            ("c", "2.5"),
            ("constant", "normalized"),
            ("t_low", "0.5"),
            ("t_high", ""),
            ("plot", "false"),
        ],
        "formulas" => &[("evaluator", "big_radius"), ("grid", "")],
        "events" => &[
            ("kind", "containment"),
            ("d", "2"),
            ("n", "10000"),
            ("c", "2"),
            ("t", "1"),
            ("u", "1.1"),
            ("eps", "0.05"),
            ("a", "2"),
            ("constant", "normalized"),
            ("replicates", "2000"),
            ("probes", "8"),
            ("m", "20"),
            ("samples", "100000"),
            ("series", "lemma2_upper"),
            ("horizon", "1000"),
            ("fm_const", "1"),
            ("final_const", "1"),
        ],
        "validate" => &[("suite", "lemma1")],
        other => return Err(usage(format!("unknown subcommand `{other}`"))),
    };
    let name = COMMANDS.iter().find(|c| **c == command).expect("listed");
    Ok(Settings::new(name, keys))
}

fn dimension(s: &Settings) -> CliResult<Dimension> {
    let d = s.int("d")?;
    Ok(Dimension::new(u32::try_from(d).map_err(|_| usage("`d` too large"))?)?)
}

fn log(line: String) {
    eprintln!("lnnd: {line}");
}

pub fn execute(s: &Settings, seed: u64, out: &Path) -> CliResult<()> {
    let start = Instant::now();
    match s.command() {
        "sample" => sample(s, seed, out)?,
        "lnnd" => lnnd(s, out)?,
        "sweep" => sweep(s, seed, out)?,
        "formulas" => {
            let evaluator = s.raw("evaluator");
            let csv = formulas_table(evaluator, &parse_grid(s.raw("grid"))?)?;
            write_atomic(out, "formulas.csv", csv.as_bytes())?;
            log(format!("formulas {evaluator}: {} rows", csv.lines().count() - 1));
        }
        "events" => events(s, seed, out)?,
        "validate" => {
            let suite = s.raw("suite");
            let report = run_suite(suite, seed, &out.join("scratch"))?;
            for c in &report.checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            write_atomic(out, "validate.json", &json_bytes(&report))?;
            if !report.passed() {
                let names: Vec<&str> = report.failures().iter().map(|c| c.name.as_str()).collect();
                return Err(CliError::Statistical(format!("suite {suite}: {}", names.join("; "))));
            }
        }
        other => return Err(usage(format!("unknown subcommand `{other}`"))),
    }
    log(format!("{} done in {:.2}s", s.command(), start.elapsed().as_secs_f64()));
    Ok(())
}

fn sample(s: &Settings, seed: u64, out: &Path) -> CliResult<()> {
    let d = dimension(s)?;
    let n = s.int("n")?;
    let sr = SeedRecord::new(seed, s.int("replicate")?);
    let cloud = match s.raw("process") {
        "binomial" => sample_cloud(d, n as usize, sr),
        "poisson" => poissonize(d, &[n as f64], sr)?.remove(0),
        p => {
            let part = match p {
                "coupled-minus" => CoupledPart::Minus,
                "coupled-fixed" => CoupledPart::Fixed,
                "coupled-plus" => CoupledPart::Plus,
                _ => {
                    return Err(usage(format!(
                        "`process` must be binomial, poisson, coupled-minus, coupled-fixed or coupled-plus, got `{p}`"
                    )))
                }
            };
            sample_coupled(d, n as usize, sr)?.cloud(part)
        }
    };
    let mut buf = Vec::new();
    cloud.write_dump(&mut buf)?;
    write_atomic(out, "cloud.txt", &buf)?;
    log(format!("sample: {} points in d={}", cloud.len(), d.get()));
    Ok(())
}

fn lnnd(s: &Settings, out: &Path) -> CliResult<()> {
    let path = s.raw("in");
    if path.is_empty() {
        return Err(usage("`in` is required for `lnnd`"));
    }
    let file = std::fs::File::open(path).map_err(|e| usage(format!("cannot open `in` = {path}: {e}")))?;
    let cloud = PointCloud::read_dump(std::io::BufReader::new(file))?;
    let nng = build_nng_fast(&cloud)?;
    println!("d_n = {}", format_real(nng.d_n));
    let mut summary = json!({
        "n": cloud.len(),
        "d": cloud.dim().get(),
        "d_n": nng.d_n,
        "argmax": nng.argmax(),
    });
    if s.is_set("inner") || s.is_set("outer") {
        let ann = AnnulusSpec::new(s.real("inner")?, s.real("outer")?)?;
        let restricted = lnnd_restricted(&cloud, &ann)?;
        println!("d_n restricted = {}", restricted.map(format_real).unwrap_or_else(|| "none".into()));
        summary["d_n_restricted"] = json!(restricted);
    }
    write_atomic(out, "lnnd.json", &json_bytes(&summary))?;
    Ok(())
}

fn sweep(s: &Settings, seed: u64, out: &Path) -> CliResult<()> {
    let d = dimension(s)?;
    let mut params = FormulaParams::new(d);
    params.c = s.real("c")?;
    params.constant = s.get::<RadialConstant>("constant")?;
    let config = SweepConfig {
        d,
        n_grid: s.int_list("n_grid")?,
        replicates: u32::try_from(s.int("replicates")?).map_err(|_| usage("`replicates` too large"))?,
        base_seed: seed,
        params,
        process: s.get::<ProcessKind>("process")?,
    };
    let report = strong_law_sweep(&config)?;
    let t_high = if s.is_set("t_high") { s.real("t_high")? } else { 2.0 * d.as_f64() / SQRT_2 };
    let envelope = envelope_check(&report, s.real("t_low")?, t_high)?;

    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    write_atomic(out, "records.csv", &csv)?;
    let mut summary = report.summary_json();
    summary["envelope"] = json!({ "t_low": s.real("t_low")?, "t_high": t_high, "rows": envelope });
    write_atomic(out, "summary.json", &json_bytes(&summary))?;
    let mut env_csv = String::from("n,replicates,below_upper,above_lower\n");
    for row in &envelope {
        let _ = writeln!(
            env_csv,
            "{},{},{},{}",
            row.n,
            row.replicates,
            format_real(row.below_upper),
            format_real(row.above_lower)
        );
    }
    write_atomic(out, "envelope.csv", env_csv.as_bytes())?;
    if s.get::<bool>("plot")? {
        write_atomic(out, "plot.py", report.plot_script("records.csv").as_bytes())?;
    }
    for sm in &report.summaries {
        log(format!("sweep n={}: median ratio {:.4}, max {:.4}", sm.n, sm.median, sm.max));
    }
    Ok(())
}

fn event_params(s: &Settings) -> CliResult<FormulaParams> {
    let mut p = FormulaParams::new(dimension(s)?);
    p.c = s.real("c")?;
    p.t = s.real("t")?;
    p.u = s.real("u")?;
    p.eps = s.real("eps")?;
    p.a = s.real("a")?;
    p.constant = s.get("constant")?;
    p.fm_const = s.real("fm_const")?;
    p.final_const = s.real("final_const")?;
    Ok(p)
}

fn small_u32(s: &Settings, key: &str) -> CliResult<u32> {
    u32::try_from(s.int(key)?).map_err(|_| usage(format!("`{key}` too large")))
}

fn events(s: &Settings, seed: u64, out: &Path) -> CliResult<()> {
    let p = event_params(s)?;
    let kind = s.raw("kind");
    let result = match kind {
        "containment" => {
            let r = containment_experiment(s.int("n")?, p.c, p.d, p.constant, small_u32(s, "replicates")?, seed)?;
            log(format!("containment: freq {:.4} exact {:.4} z {:.2}", r.freq_contained, r.exact_contained, r.z_score()));
            json!({ "kind": kind, "result": r, "z_score": r.z_score() })
        }
        "en" => {
            let r = en_event_experiment(s.int("n")?, &p, s.int("probes")? as usize, small_u32(s, "replicates")?, seed)?;
            log(format!("en: {} probes, probe 0 {} events, exact {:.3e}", r.probes.len(), r.probes[0].events, r.probes[0].exact));
            let z: Vec<f64> = r.probes.iter().map(|p| p.z_score()).collect();
            let cov: Vec<f64> = r.covariances.iter().map(|c| c.max_z()).collect();
            json!({ "kind": kind, "result": r, "probe_z": z, "covariance_max_z": cov })
        }
        "packing" => {
            let n = s.int("n")? as f64;
            let centers = packing_construction(n, &p)?;
            let bound = packing_count_bound(n, p.c, p.u, p.d, p.constant)?;
            let mut csv = String::new();
            for c in &centers {
                let row: Vec<String> = c.iter().map(|&v| format_real(v)).collect();
                csv.push_str(&row.join(","));
                csv.push('\n');
            }
            write_atomic(out, "centers.csv", csv.as_bytes())?;
            log(format!("packing: {} centers, simplified bound {:.3}", centers.len(), bound.simplified));
            json!({ "kind": kind, "count": centers.len(), "bound": bound })
        }
        "covering" => {
            let r = covering_construction(small_u32(s, "m")?, &p, s.int("samples")? as usize, SeedRecord::new(seed, 0))?;
            log(format!("covering: {} centers, {} of {} probes uncovered", r.count, r.uncovered, r.probes));
            json!({
                "kind": kind, "m": r.m, "domain_radius": r.domain_radius, "ball_radius": r.ball_radius,
                "count": r.count, "bound": r.bound, "ratio": r.ratio(), "probes": r.probes, "uncovered": r.uncovered,
            })
        }
        "gumbel" => {
            let r = gumbel_fit_experiment(s.int("n")?, p.d, small_u32(s, "replicates")?, seed)?;
            log(format!("gumbel: scale {:.4} ks {:.4} critical {:.4}", r.fit.scale, r.ks, r.ks_critical));
            json!({ "kind": kind, "result": r })
        }
        "summability" => {
            let series: SeriesKind = s.get("series")?;
            let t = summability_diagnostics(series, &p, s.int("horizon")?)?;
            let mut csv = String::from("index,term,partial_sum\n");
            for (i, term, sum) in &t.rows {
                let _ = writeln!(csv, "{i},{},{}", format_real(*term), format_real(*sum));
            }
            write_atomic(out, "series.csv", csv.as_bytes())?;
            log(format!("summability {}: ratio {:.4e} -> {:?}", series.name(), t.tail_decade_ratio, t.verdict));
            json!({
                "kind": kind, "series": t.kind, "horizon": t.horizon, "total": t.total,
                "tail_decade_ratio": t.tail_decade_ratio, "verdict": t.verdict, "at_threshold": t.at_threshold,
                "params": t.params,
            })
        }
        other => {
            return Err(usage(format!(
                "`kind` must be containment, en, packing, covering, gumbel or summability, got `{other}`"
            )))
        }
    };
    write_atomic(out, "events.json", &json_bytes(&result))?;
    Ok(())
}
