//! Command-line front end; a thin adapter over [`crate::harness`].

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{self, Config, ConfigError};
use crate::harness::{self, RunRecord};
use crate::solver1d::SimConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_OVERFLOW: i32 = 2;

/// Default output directory when neither `--out` nor `THERMOVISC_OUT` is set.
pub const DEFAULT_OUT: &str = "runs";

#[derive(Debug, Parser)]
#[command(
    name = "thermovisc",
    version,
    about = "Thermoviscoelastic resonator simulations and diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one configuration and write series.csv, snapshots.csv and record.json.
    Run(RunArgs),
    /// Run every point of a parameter sweep and write index.csv.
    Sweep(SweepArgs),
    /// Check heat balance and weak-form inequalities for a run; writes diagnostics.json.
    Diagnose(DiagnoseArgs),
    /// List built-in experiments.
    Presets,
}

#[derive(Debug, Args)]
struct Source {
    /// Configuration file (TOML).
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in experiment (see `presets`).
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Override a config key, e.g. `--set law.k=1e6` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory [env: THERMOVISC_OUT] [default: runs].
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Override the step count (sweeps: the reduced step count).
    #[arg(long, value_name = "N")]
    steps: Option<usize>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    /// Run identifier (defaults to the preset name or config file stem).
    #[arg(long)]
    id: Option<String>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    source: Source,
    /// Concurrent runs.
    #[arg(long, value_name = "K")]
    parallel: Option<usize>,
}

#[derive(Debug, Args)]
struct DiagnoseArgs {
    /// Existing run directory (containing record.json).
    #[arg(long, value_name = "DIR", conflicts_with_all = ["config", "preset"])]
    run: Option<PathBuf>,
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    id: Option<String>,
}

fn out_dir(explicit: &Option<PathBuf>) -> PathBuf {
    explicit
        .clone()
        .or_else(|| std::env::var_os("THERMOVISC_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn load(src: &Source) -> Result<(String, Config), ConfigError> {
    let (base, id) = match &src.preset {
        Some(name) => (
            harness::preset(name).ok_or_else(|| ConfigError::UnknownPreset(name.clone()))?,
            name.clone(),
        ),
        None => (SimConfig::reference(), String::new()),
    };
    let (doc, id) = match &src.config {
        Some(path) => (
            config::read_document(path)?,
            path.file_stem()
                .map_or("run".into(), |s| s.to_string_lossy().into_owned()),
        ),
        None if src.preset.is_some() => (toml::Table::new(), id),
        None => {
            return Err(ConfigError::Usage(
                "one of --config or --preset is required".into(),
            ))
        }
    };
    let mut cfg = config::build(&base, doc, &src.set)?;
    if let Some(steps) = src.steps {
        cfg.sim.steps = steps;
        cfg.sim.validate()?;
    }
    Ok((id, cfg))
}

fn summary(r: &RunRecord) -> String {
    let class = match r.classification {
        harness::Classification::HotSpots { count } => format!("HotSpots({count})"),
        c => c.label().to_string(),
    };
    format!(
        "{}: {} steps={} mean_theta={:.4e} K max_theta={:.4e} K class={} trend={}{}",
        r.id,
        r.status,
        r.steps_completed,
        r.final_mean_theta,
        r.max_theta,
        class,
        r.envelope_trend.as_str(),
        r.run_dir
            .as_ref()
            .map(|d| format!(" dir={}", d.display()))
            .unwrap_or_default()
    )
}

fn fail(e: impl std::fmt::Display) -> i32 {
    eprintln!("error: {e}");
    EXIT_CONFIG
}

fn cmd_run(a: RunArgs) -> i32 {
    let (id, cfg) = match load(&a.source) {
        Ok(x) => x,
        Err(e) => return fail(e),
    };
    let id = a.id.unwrap_or(id);
    let out = out_dir(&a.source.out);
    match harness::run_config(&id, &cfg.sim, Some(&out)) {
        Ok((_, rec)) => {
            println!("{}", summary(&rec));
            if rec.status == "Overflow" {
                EXIT_OVERFLOW
            } else {
                EXIT_OK
            }
        }
        Err(e) => fail(e),
    }
}

fn cmd_sweep(a: SweepArgs) -> i32 {
    let src = &a.source;
    let spec = match (&src.preset, &src.config) {
        (Some(name), None) => {
            let Some(mut spec) = harness::sweep_preset(name) else {
                return fail(ConfigError::UnknownPreset(name.clone()));
            };
            match config::build(&spec.base, toml::Table::new(), &src.set) {
                Ok(c) => match c.sweep {
                    Some(s) => spec = s,
                    None => spec.base = c.sim,
                },
                Err(e) => return fail(e),
            }
            spec
        }
        _ => match load(src) {
            Ok((_, Config { sweep: Some(s), .. })) => s,
            Ok(_) => return fail("configuration has no [sweep] section"),
            Err(e) => return fail(e),
        },
    };
    let mut spec = spec;
    if let Some(steps) = src.steps {
        spec.reduced_steps = Some(steps);
    }
    if let Some(p) = a.parallel {
        spec.parallelism = p.max(1);
    }
    let out = out_dir(&src.out);
    match harness::sweep(&spec, Some(&out)) {
        Ok(records) => {
            for r in &records {
                println!("{}", summary(r));
            }
            println!("index: {}", out.join("index.csv").display());
            EXIT_OK
        }
        Err(e) => fail(e),
    }
}

fn cmd_diagnose(a: DiagnoseArgs) -> i32 {
    let dir = match a.run {
        Some(d) => d,
        None => {
            let (id, cfg) = match load(&a.source) {
                Ok(x) => x,
                Err(e) => return fail(e),
            };
            let id = a.id.unwrap_or(id);
            let out = out_dir(&a.source.out);
            if let Err(e) = harness::run_config(&id, &cfg.sim, Some(&out)) {
                return fail(e);
            }
            out.join(id)
        }
    };
    match harness::diagnose_run_dir(&dir) {
        Ok(r) => {
            println!(
                "{}: steps {}..{} heat_balance_max_defect={:.2e} clamp_steps={} wf_slack={:.2e} wt_residual={:.2e} constraints={:?} -> {}",
                r.run_id,
                r.window_start,
                r.window_end,
                r.heat_balance.max_relative_defect,
                r.heat_balance.clamp_steps,
                r.wf_relative_slack,
                r.wt_relative_residual,
                r.constraints_hold,
                dir.join("diagnostics.json").display()
            );
            EXIT_OK
        }
        Err(e) => fail(e),
    }
}

fn cmd_presets() -> i32 {
    for (name, desc) in harness::PRESETS.iter().chain(harness::SWEEP_PRESETS) {
        println!("{name:20} {desc}");
    }
    EXIT_OK
}

/// Parses `args` (including the program name) and executes; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Diagnose(a) => cmd_diagnose(a),
        Command::Presets => cmd_presets(),
    }
}
