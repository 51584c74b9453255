//! Command-line front end.
//!
//! Exit codes are a stable contract: 0 success, 1 usage or I/O error,
//! 2 degenerate physics configuration, 3 verification failure.

use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::correlations::sample_events;
use crate::experiments::{
    fringe_state, run_scenario, sweep, sweep_to_csv, ScenarioConfig, Scheme, MC_BINS,
};
use crate::report::{json_array, JsonObject};
use crate::verify::run_all;
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DEGENERATE: i32 = 2;
pub const EXIT_VERIFY_FAILED: i32 = 3;

#[derive(Parser)]
#[command(
    name = "eraser-sim",
    about = "Two-atom four-port interferometer simulator with a conditional quantum eraser",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write an experiment report (JSON).
    Run(RunArgs),
    /// Run a transmittance sweep and write the dataset (CSV).
    Sweep(SweepArgs),
    /// Run the built-in audit suite (JSON report, human table on stderr).
    Verify(VerifyArgs),
    /// Draw Monte Carlo coincidence events and write the histogram (CSV).
    Sample(SampleArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario file (flat `key = value` lines, '#' comments).
    #[arg(long)]
    config: PathBuf,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the scenario sample count.
    #[arg(long)]
    samples: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Output format; reports are JSON only.
    #[arg(long, default_value = "json")]
    format: String,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Output format; sweep datasets are CSV only.
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Output format; histograms are CSV only.
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Args)]
struct VerifyArgs {
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format; verification reports are JSON only.
    #[arg(long, default_value = "json")]
    format: String,
    /// Run a single audit by identifier.
    #[arg(long)]
    only: Option<String>,
    /// Test hook: bias every audited quantity by this amount (negative
    /// control; any nonzero value must make the suite fail).
    #[arg(long, hide = true, default_value_t = 0.0)]
    inject_perturbation: f64,
}

/// Scenario file contents plus the sweep grid description.
struct Scenario {
    config: ScenarioConfig,
    sweep_steps: usize,
    sweep_min: f64,
    sweep_max: f64,
}

fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut scenario = Scenario {
        config: ScenarioConfig::default(),
        sweep_steps: 21,
        sweep_min: 0.0,
        sweep_max: 1.0,
    };
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected `key = value`", lineno + 1))
        })?;
        let key = key.trim();
        let value = value.trim();
        let bad = |what: &str| Error::Config(format!("line {}: bad {what} '{value}'", lineno + 1));
        let float = || value.parse::<f64>().map_err(|_| bad("number"));
        match key {
            "scheme" => scenario.config.scheme = value.parse::<Scheme>()?,
            "t" => scenario.config.t = float()?,
            "t_bs" => scenario.config.t_bs = float()?,
            "t1" => scenario.config.t1 = float()?,
            "t2" => scenario.config.t2 = float()?,
            "m" => scenario.config.m = float()?,
            "samples" => {
                scenario.config.mc_samples =
                    value.parse::<u64>().map_err(|_| bad("integer"))?
            }
            "seed" => scenario.config.seed = value.parse::<u64>().map_err(|_| bad("integer"))?,
            "sweep_steps" => {
                scenario.sweep_steps = value.parse::<usize>().map_err(|_| bad("integer"))?
            }
            "sweep_min" => scenario.sweep_min = float()?,
            "sweep_max" => scenario.sweep_max = float()?,
            other => {
                return Err(Error::Config(format!(
                    "line {}: unknown key '{other}'",
                    lineno + 1
                )))
            }
        }
    }
    Ok(scenario)
}

fn load_scenario(path: &Path, common: &CommonArgs) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    let mut scenario = parse_scenario(&text)?;
    if let Some(seed) = common.seed {
        scenario.config.seed = seed;
    }
    if let Some(samples) = common.samples {
        scenario.config.mc_samples = samples;
    }
    Ok(scenario)
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn require_format(actual: &str, expected: &str) -> Result<()> {
    if actual == expected {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "format '{actual}' is not supported here; use '{expected}'"
        )))
    }
}

fn cmd_run(args: &RunArgs) -> Result<i32> {
    require_format(&args.format, "json")?;
    let scenario = load_scenario(&args.common.config, &args.common)?;
    let report = run_scenario(&scenario.config)?;
    write_output(&args.common.out, &format!("{}\n", report.to_json()))?;
    Ok(if report.degenerate {
        EXIT_DEGENERATE
    } else {
        EXIT_OK
    })
}

fn cmd_sweep(args: &SweepArgs) -> Result<i32> {
    require_format(&args.format, "csv")?;
    let scenario = load_scenario(&args.common.config, &args.common)?;
    if scenario.sweep_steps == 0 {
        return Err(Error::EmptyGrid);
    }
    let configs: Vec<ScenarioConfig> = (0..scenario.sweep_steps)
        .map(|i| {
            let frac = if scenario.sweep_steps == 1 {
                0.0
            } else {
                i as f64 / (scenario.sweep_steps - 1) as f64
            };
            let value = scenario.sweep_min + frac * (scenario.sweep_max - scenario.sweep_min);
            let mut cfg = scenario.config;
            // The sweep varies the filter transmittance; the double-partial
            // scheme has no filter, so both of its beamsplitters follow the
            // swept value instead.
            match cfg.scheme {
                Scheme::Conventional | Scheme::Conditional => cfg.t = value,
                Scheme::DoublePartial => {
                    cfg.t1 = value;
                    cfg.t2 = value;
                }
            }
            cfg.mc_samples = 0;
            cfg
        })
        .collect();
    let reports = sweep(&configs)?;
    write_output(&args.common.out, &sweep_to_csv(&reports))?;
    Ok(EXIT_OK)
}

fn cmd_sample(args: &SampleArgs) -> Result<i32> {
    require_format(&args.format, "csv")?;
    let scenario = load_scenario(&args.common.config, &args.common)?;
    let state = fringe_state(&scenario.config)?;
    let counts = sample_events(
        &state,
        scenario.config.mc_samples,
        scenario.config.seed,
        MC_BINS,
    )?;
    write_output(&args.common.out, &counts.to_csv())?;
    Ok(EXIT_OK)
}

fn cmd_verify(args: &VerifyArgs) -> Result<i32> {
    require_format(&args.format, "json")?;
    let outcomes = run_all(args.only.as_deref(), args.inject_perturbation)?;
    let mut passed = 0u64;
    let mut failed = 0u64;
    for outcome in &outcomes {
        let tag = if outcome.passed { "PASS" } else { "FAIL" };
        eprintln!("{tag}  {:<28} {}", outcome.id, outcome.detail);
        if outcome.passed {
            passed += 1;
        } else {
            failed += 1;
        }
    }
    let mut o = JsonObject::new();
    o.raw(
        "audits",
        json_array(outcomes.iter().map(|a| {
            let mut item = JsonObject::new();
            item.string("id", a.id)
                .boolean("passed", a.passed)
                .string("detail", &a.detail);
            item.finish()
        })),
    );
    o.integer("passed", passed).integer("failed", failed);
    write_output(&args.out, &format!("{}\n", o.finish()))?;
    Ok(if failed == 0 {
        EXIT_OK
    } else {
        EXIT_VERIFY_FAILED
    })
}

fn exit_code_for(error: &Error) -> i32 {
    match error {
        Error::Degenerate(_) => EXIT_DEGENERATE,
        _ => EXIT_USAGE,
    }
}

/// Parse the process arguments, run the selected subcommand and return the
/// exit code.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

/// Testable entry point over explicit arguments.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = err.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Sample(args) => cmd_sample(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code_for(&err)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_parsing_defaults_and_overrides() {
        let s = parse_scenario(
            "# comment\nscheme = conditional\nt = 0.25\nt_bs = 0.25 # inline\nseed = 9\n",
        )
        .unwrap();
        assert_eq!(s.config.scheme, Scheme::Conditional);
        assert_eq!(s.config.t, 0.25);
        assert_eq!(s.config.t_bs, 0.25);
        assert_eq!(s.config.seed, 9);
        assert_eq!(s.config.m, 1.0);
        assert_eq!(s.sweep_steps, 21);
    }

    #[test]
    fn scenario_parsing_rejects_unknown_keys() {
        assert!(parse_scenario("bogus = 1\n").is_err());
        assert!(parse_scenario("t 0.5\n").is_err());
        assert!(parse_scenario("t = abc\n").is_err());
        assert!(parse_scenario("scheme = nope\n").is_err());
    }

    #[test]
    fn format_validation() {
        assert!(require_format("json", "json").is_ok());
        assert!(require_format("csv", "json").is_err());
    }
}
