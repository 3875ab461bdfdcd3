//! `screening-arm`: GDS and GDS-ARM screening from the command line.

mod report;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use screening_core::gdsarm::{default_config, GdsArmConfig, Heredity};
use screening_core::io::{load_design_csv, load_response_csv, plackett_burman_columns, write_design_csv};
use screening_core::simulate::{run_simulation, sim_rows_to_csv, Method, Scenario};
use screening_core::{gds_all_2fi, gds_arm, gds_main_effects, ScreeningError};

const THREADS_ENV: &str = "SCREENING_ARM_THREADS";

#[derive(Parser)]
#[command(name = "screening-arm", version, about = "Factor screening for two-level supersaturated designs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Screen one response measured on a design.
    Analyze(AnalyzeArgs),
    /// Monte-Carlo power and error of the screening methods.
    Simulate(SimulateArgs),
    /// Write a 12-run Plackett-Burman design.
    MakePb12(MakePbArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    #[value(name = "gds-m")]
    GdsM,
    #[value(name = "gds-m2fi")]
    GdsM2fi,
    #[value(name = "gds-arm")]
    GdsArm,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum HeredityArg {
    None,
    Weak,
    Strong,
}

impl From<HeredityArg> for Heredity {
    fn from(h: HeredityArg) -> Self {
        match h {
            HeredityArg::None => Heredity::None,
            HeredityArg::Weak => Heredity::Weak,
            HeredityArg::Strong => Heredity::Strong,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Json,
    Csv,
}

/// GDS-ARM tuning overrides; unset values follow the recommended defaults.
#[derive(Args)]
struct ArmArgs {
    /// Number of random interaction subsets [default: from the design size]
    #[arg(long)]
    nrep: Option<usize>,
    /// Interactions per subset [default: ceil(0.2 * m(m-1)/2)]
    #[arg(long)]
    nint: Option<usize>,
    /// Best repetitions (by BIC) that vote on effects [default: from the design size]
    #[arg(long)]
    ntop: Option<usize>,
    /// Fraction of the top models an effect must appear in [default: 0.25]
    #[arg(long)]
    pkeep: Option<f64>,
    /// Heredity filter applied inside GDS-ARM.
    #[arg(long, value_enum, default_value = "none")]
    heredity: HeredityArg,
    /// Stepwise entry p-value [default: 0.01]
    #[arg(long = "p-enter")]
    p_enter: Option<f64>,
    /// Stepwise removal p-value [default: 0.05]
    #[arg(long = "p-remove")]
    p_remove: Option<f64>,
    /// Random seed; a clock-derived seed is chosen and reported if omitted.
    #[arg(long)]
    seed: Option<u64>,
}

impl ArmArgs {
    fn config(&self, n: usize, m: usize, seed: u64) -> anyhow::Result<GdsArmConfig> {
        let mut cfg = default_config(n, m, seed)?;
        if let Some(v) = self.nrep {
            cfg.nrep = v;
            // Keep the default ntop legal when only nrep is lowered.
            if self.ntop.is_none() {
                cfg.ntop = cfg.ntop.min(v);
            }
        }
        if let Some(v) = self.nint {
            cfg.nint = v;
        }
        if let Some(v) = self.ntop {
            cfg.ntop = v;
        }
        if let Some(v) = self.pkeep {
            cfg.pkeep = v;
        }
        if let Some(v) = self.p_enter {
            cfg.stepwise.p_enter = v;
        }
        if let Some(v) = self.p_remove {
            cfg.stepwise.p_remove = v;
        }
        cfg.heredity = self.heredity.into();
        cfg.validate(m)?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Design CSV: one row per run, -1/+1 (or -/+) cells, optional header.
    #[arg(long)]
    design: PathBuf,
    /// Response CSV: one value per run.
    #[arg(long)]
    response: PathBuf,
    /// Screening method.
    #[arg(long, value_enum, default_value = "gds-arm")]
    method: MethodArg,
    #[command(flatten)]
    arm: ArmArgs,
    #[arg(long, value_enum, default_value = "human")]
    format: Format,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also report R^2 of a named model, e.g. `F,FG,AE`. Repeatable.
    #[arg(long = "compare-models", value_name = "EFFECTS")]
    compare_models: Vec<String>,
    /// Read 0 as the low level.
    #[arg(long = "zero-one")]
    zero_one: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// Design CSV the responses are simulated on.
    #[arg(long)]
    design: PathBuf,
    /// Scenarios as `S1,S4`, `1-7` or `all`.
    #[arg(long, default_value = "all")]
    scenarios: String,
    /// Methods to compare.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "gds-m,gds-m2fi,gds-arm")]
    method: Vec<MethodArg>,
    /// Simulated responses per scenario.
    #[arg(long, default_value_t = 1000)]
    iterations: usize,
    /// Mean magnitude of active coefficients.
    #[arg(long = "effect-mean", default_value_t = 5.0)]
    effect_mean: f64,
    /// Heredity imposed on the generated truth.
    #[arg(long = "truth-heredity", value_enum, default_value = "weak")]
    truth_heredity: HeredityArg,
    #[command(flatten)]
    arm: ArmArgs,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Write the table here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Read 0 as the low level.
    #[arg(long = "zero-one")]
    zero_one: bool,
}

#[derive(Args)]
struct MakePbArgs {
    /// Number of columns to keep (2..=11).
    #[arg(long, default_value_t = 11)]
    factors: usize,
    /// Write the design here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure class that decides the exit status.
#[derive(Debug)]
enum Failure {
    Validation(anyhow::Error),
    Numerical(anyhow::Error),
}

impl Failure {
    fn from_error(err: anyhow::Error) -> Failure {
        match err.downcast_ref::<ScreeningError>() {
            Some(e) if e.is_numerical() => Failure::Numerical(err),
            _ => Failure::Validation(err),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    let outcome = match cli.command {
        Command::Analyze(a) => analyze(&a),
        Command::Simulate(s) => simulate(&s),
        Command::MakePb12(p) => make_pb12(&p),
    };
    match outcome.map_err(Failure::from_error) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("numerical failure: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| anyhow!("{THREADS_ENV} must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring the worker pool")?;
    Ok(())
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let t = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default();
        let s = t.as_secs() ^ u64::from(t.subsec_nanos()).rotate_left(32);
        eprintln!("no --seed given; using seed {s}");
        s
    })
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> anyhow::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn analyze(a: &AnalyzeArgs) -> anyhow::Result<()> {
    let design = load_design_csv(&a.design, a.zero_one)?;
    let y = load_response_csv(&a.response, design.runs())?;
    let comparisons = a
        .compare_models
        .iter()
        .flat_map(|s| s.split(';'))
        .filter(|s| !s.trim().is_empty())
        .map(|s| report::parse_model(s, design.names()))
        .collect::<screening_core::Result<Vec<_>>>()?;

    let (name, seed, config, result) = match a.method {
        MethodArg::GdsM => ("gds-m", None, None, gds_main_effects(&design, &y)?),
        MethodArg::GdsM2fi => ("gds-m2fi", None, None, gds_all_2fi(&design, &y)?),
        MethodArg::GdsArm => {
            let seed = resolve_seed(a.arm.seed);
            let cfg = a.arm.config(design.runs(), design.factors(), seed)?;
            let res = gds_arm(&design, &y, &cfg)?;
            ("gds-arm", Some(seed), Some(cfg), res)
        }
    };
    let rep = report::build_report(&design, &y, name, seed, config.as_ref(), &result, &comparisons)?;
    let text = match a.format {
        Format::Human => report::render_human(&rep),
        Format::Json => to_json(&rep)?,
        Format::Csv => report::render_csv(&rep),
    };
    emit(a.out.as_deref(), &text)
}

/// Parses `all`, `S1,S3`, `1-7` or `S2-S5`.
fn parse_scenarios(list: &str) -> anyhow::Result<Vec<usize>> {
    let list = list.trim();
    if list.eq_ignore_ascii_case("all") {
        return Ok((1..=7).collect());
    }
    let mut ids = Vec::new();
    for part in list.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((lo, hi)) = part.split_once('-') {
            let lo = Scenario::parse(lo)?.id;
            let hi = Scenario::parse(hi)?.id;
            if lo > hi {
                bail!("empty scenario range {part:?}");
            }
            ids.extend(lo..=hi);
        } else {
            ids.push(Scenario::parse(part)?.id);
        }
    }
    if ids.is_empty() {
        bail!("no scenarios selected");
    }
    ids.dedup();
    Ok(ids)
}

fn simulate(s: &SimulateArgs) -> anyhow::Result<()> {
    let design = load_design_csv(&s.design, s.zero_one)?;
    if s.iterations == 0 {
        return Err(ScreeningError::InvalidConfig("iterations must be at least 1".into()).into());
    }
    if !(s.effect_mean.is_finite() && s.effect_mean > 0.0) {
        return Err(ScreeningError::InvalidConfig(format!("effect mean must be positive, got {}", s.effect_mean)).into());
    }
    let scenarios = parse_scenarios(&s.scenarios)?
        .into_iter()
        .map(|id| {
            Scenario::standard(id).map(|sc| Scenario {
                effect_mean: s.effect_mean,
                truth_heredity: s.truth_heredity.into(),
                ..sc
            })
        })
        .collect::<screening_core::Result<Vec<_>>>()?;
    let seed = resolve_seed(s.arm.seed);
    let mut methods = Vec::new();
    for m in &s.method {
        let method = match m {
            MethodArg::GdsM => Method::GdsMain,
            MethodArg::GdsM2fi => Method::GdsAll2fi,
            MethodArg::GdsArm => Method::GdsArm(s.arm.config(design.runs(), design.factors(), seed)?),
        };
        if !methods.contains(&method) {
            methods.push(method);
        }
    }
    let rows = run_simulation(&design, &scenarios, &methods, s.iterations, seed)?;
    let text = match s.format {
        Format::Csv => sim_rows_to_csv(&rows),
        Format::Json => to_json(&rows)?,
        Format::Human => {
            let mut t = format!("{:<9}{:<16}{:>8}{:>8}{:>12}\n", "scenario", "method", "power", "error", "iterations");
            for r in &rows {
                t.push_str(&format!(
                    "{:<9}{:<16}{:>8.3}{:>8.3}{:>12}\n",
                    r.scenario, r.method, r.power, r.error, r.iterations
                ));
                if r.failures > 0 {
                    t.push_str(&format!("  ({} failed iterations excluded)\n", r.failures));
                }
            }
            t.push_str(&format!("seed: {seed}\n"));
            t
        }
    };
    emit(s.out.as_deref(), &text)
}

fn make_pb12(p: &MakePbArgs) -> anyhow::Result<()> {
    let design = plackett_burman_columns(12, p.factors)?;
    emit(p.out.as_deref(), &write_design_csv(&design))
}
