//! Command-line front end for `lnnd-core`.
//!
//! Each subcommand resolves its settings from built-in defaults, an optional
//! config file and flags, writes its artifacts atomically into the output
//! directory, and finishes with a `manifest.txt` that `lnnd replay` accepts
//! to reproduce the run byte for byte.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 numerical failure,
//! 3 failed validation check.

mod commands;
pub mod config;
pub mod error;
pub mod formulas;
pub mod output;
pub mod validate;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use error::{CliError, CliResult};

use config::{ConfigFile, Settings};

#[derive(Debug, Parser)]
#[command(name = "lnnd", version, about = "Largest nearest-neighbor distance experiments for Gaussian samples")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Config file with `[run]` and per-subcommand sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Base seed; falls back to LNND_SEED, then 1.
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    threads: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a point cloud and write it as a dump file.
    Sample(SampleArgs),
    /// Largest nearest-neighbor distance of a dump file.
    Lnnd(LnndArgs),
    /// Strong-law ratio sweep over a grid of sample sizes.
    Sweep(SweepArgs),
    /// Tabulate a closed-form evaluator over a parameter grid.
    Formulas(FormulasArgs),
    /// Event-frequency experiments and constructions.
    Events(EventsArgs),
    /// Run a validation suite.
    Validate(ValidateArgs),
    /// Re-run from a manifest.
    Replay {
        manifest: PathBuf,
    },
}

macro_rules! flag_struct {
    ($name:ident { $($field:ident),* $(,)? }) => {
        #[derive(Debug, Args)]
        struct $name {
            $(
                #[arg(long)]
                $field: Option<String>,
            )*
        }

        impl $name {
            fn pairs(&self) -> Vec<(&'static str, &Option<String>)> {
                vec![$((stringify!($field), &self.$field)),*]
            }
        }
    };
}

flag_struct!(SampleArgs { d, n, process, replicate });
#[derive(Debug, Args)]
struct LnndArgs {
    /// Point dump file.
    #[arg(long = "in")]
    input: Option<String>,
    /// Inner radius of an optional restricting annulus about the origin.
    #[arg(long)]
    inner: Option<String>,
    #[arg(long)]
    outer: Option<String>,
}

impl LnndArgs {
    fn pairs(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![("in", &self.input), ("inner", &self.inner), ("outer", &self.outer)]
    }
}
flag_struct!(SweepArgs { d, n_grid, replicates, process, c, constant, t_low, t_high, plot });
flag_struct!(EventsArgs {
    kind, d, n, c, t, u, eps, a, constant, replicates, probes, m, samples, series, horizon, fm_const, final_const
});
flag_struct!(ValidateArgs { suite });

#[derive(Debug, Args)]
struct FormulasArgs {
    #[arg(long)]
    evaluator: Option<String>,
    /// Axis `name=v1,v2` or `name=lo..hi:count[:log|:lin]`; repeatable.
    #[arg(long)]
    grid: Vec<String>,
}

/// Keys shared by every subcommand, stored under `[run]`.
const RUN_KEYS: &[(&str, &str)] = &[("seed", ""), ("threads", "")];

fn run_settings() -> Settings {
    Settings::new("run", RUN_KEYS)
}

/// Parses `argv` (program name first) and runs the command.
pub fn run_args(argv: Vec<String>) -> CliResult<()> {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(CliError::Usage(e.to_string())),
    };
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("lnnd-out"));
    let mut run = run_settings();

    let (mut settings, overrides, file) = match &cli.command {
        Command::Replay { manifest } => {
            let text = std::fs::read_to_string(manifest)
                .map_err(|e| error::usage(format!("cannot read manifest {}: {e}", manifest.display())))?;
            let file = ConfigFile::parse(&text)?;
            let head = file.section("manifest").ok_or_else(|| error::usage("manifest lacks a [manifest] section"))?;
            let command = head.get("subcommand").ok_or_else(|| error::usage("manifest lacks `subcommand`"))?;
            if let Some(v) = head.get("version") {
                if v != &commands::code_version() {
                    eprintln!("lnnd: manifest written by {v}, replaying with {}", commands::code_version());
                }
            }
            (commands::table(command)?, Vec::new(), Some(file))
        }
        other => {
            let (name, pairs) = match other {
                Command::Sample(a) => ("sample", owned(a.pairs())),
                Command::Lnnd(a) => ("lnnd", owned(a.pairs())),
                Command::Sweep(a) => ("sweep", owned(a.pairs())),
                Command::Events(a) => ("events", owned(a.pairs())),
                Command::Validate(a) => ("validate", owned(a.pairs())),
                Command::Formulas(a) => {
                    let grid = if a.grid.is_empty() { None } else { Some(a.grid.join(";")) };
                    ("formulas", vec![("evaluator", a.evaluator.clone()), ("grid", grid)])
                }
                Command::Replay { .. } => unreachable!(),
            };
            let file = match &cli.config {
                Some(p) => {
                    let text = std::fs::read_to_string(p)
                        .map_err(|e| error::usage(format!("cannot read config {}: {e}", p.display())))?;
                    Some(ConfigFile::parse(&text)?)
                }
                None => None,
            };
            (commands::table(name)?, pairs, file)
        }
    };

    if let Some(file) = &file {
        for (section, entries) in &file.sections {
            match section.as_str() {
                "run" => run.apply(entries)?,
                "manifest" => {}
                s if s == settings.command() => settings.apply(entries)?,
                s if commands::COMMANDS.contains(&s) => {}
                s => return Err(error::usage(format!("unknown config section [{s}]"))),
            }
        }
    }
    for (k, v) in overrides {
        if let Some(v) = v {
            settings.set(k, v)?;
        }
    }
    if let Some(s) = &cli.seed {
        run.set("seed", s.clone())?;
    }
    if let Some(t) = &cli.threads {
        run.set("threads", t.clone())?;
    }
    if !run.is_set("seed") {
        let env = std::env::var("LNND_SEED").unwrap_or_else(|_| "1".into());
        run.set("seed", env)?;
    }
    let seed = run.int("seed")?;

    let threads = if run.is_set("threads") { run.int("threads")? as usize } else { 0 };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| error::usage(format!("thread pool: {e}")))?;
    pool.install(|| commands::execute(&settings, seed, &out))?;

    let mut manifest = format!(
        "# lnnd manifest\n[manifest]\nsubcommand = {}\nversion = {}\n[run]\nseed = {seed}\n",
        settings.command(),
        commands::code_version()
    );
    settings.render(&mut manifest);
    output::write_atomic(&out, "manifest.txt", manifest.as_bytes())?;
    Ok(())
}

fn owned(pairs: Vec<(&'static str, &Option<String>)>) -> Vec<(&'static str, Option<String>)> {
    pairs.into_iter().map(|(k, v)| (k, v.clone())).collect()
}

/// Runs and maps the outcome onto an exit code, reporting errors on stderr.
pub fn run(argv: Vec<String>) -> i32 {
    match run_args(argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("lnnd: {e}");
            e.exit_code()
        }
    }
}
