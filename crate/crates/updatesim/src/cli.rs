//! Command-line front end: scenario selection, execution, CSV export.
//!
//! `--scenario daily|weekly` runs a built-in scenario parametrised by the
//! topology/size flags; `--scenario file --file PATH` loads a TOML scenario
//! file instead. `--mode both` runs the pull and push arms (in parallel)
//! and writes a comparison on top of the per-run exports.
//!
//! Outputs, all CSV with a header row, UTF-8, LF line endings:
//!
//! * `energy_summary.csv` — node_id, kind, t_total_s, t_tx_s, t_rx_s, energy_j
//! * `messages.csv` — time_s, src, dst, kind, size_bytes
//! * `cumulative_energy.csv` — time_s, mode, cumulative_j
//! * `comparison.csv` — metric, pull, push, delta, delta_pct (mode = both)
//!
//! With `--mode both` the per-run files go to `OUT/pull/` and `OUT/push/`;
//! the combined curve and the comparison go to `OUT/` itself.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use thiserror::Error;

use crate::protocol::ProtocolMode;
use crate::simulator::{
    compare, run, scenario_daily, scenario_weekly, ComparisonReport, RunResult, ScenarioConfig,
    ScenarioParams, SimError,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("cannot read scenario file: {0}")]
    Io(#[from] std::io::Error),
    #[error("scenario file: {0}")]
    Parse(#[from] toml::de::Error),
}

impl CliError {
    /// 2 for usage problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioArg {
    Daily,
    Weekly,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Pull,
    Push,
    Both,
}

#[derive(Debug, Parser)]
#[command(
    name = "updatesim",
    version,
    about = "Simulates pull vs push software-update distribution and reports per-node energy"
)]
struct Args {
    /// Built-in scenario (daily releases or one weekly release) or a TOML file
    #[arg(long, value_enum, default_value_t = ScenarioArg::Weekly)]
    scenario: ScenarioArg,
    /// Scenario file path, required with --scenario file
    #[arg(long)]
    file: Option<PathBuf>,
    /// Protocol arm(s) to run
    #[arg(long, value_enum, default_value_t = ModeArg::Both)]
    mode: ModeArg,
    /// Output directory for the CSV files
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Update servers directly under the origin (built-in scenarios)
    #[arg(long, default_value_t = 1)]
    servers: usize,
    #[arg(long, default_value_t = 10)]
    clients_per_server: usize,
    /// Link bandwidth in bytes per second
    #[arg(long, default_value_t = 1_048_576.0)]
    bandwidth: f64,
    #[arg(long, default_value_t = 64)]
    signal_bytes: u64,
    #[arg(long, default_value_t = 7)]
    horizon_days: u64,
}

/// Fully resolved invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub scenario: ScenarioArg,
    pub file: Option<PathBuf>,
    pub mode: ModeArg,
    pub out: PathBuf,
    pub params: ScenarioParams,
}

/// Parses argv into a spec with defaults applied. Unknown flags and enum
/// values are rejected by the parser; a missing or nonexistent scenario
/// file is a usage error too.
pub fn parse_args<I, T>(argv: I) -> Result<ExperimentSpec, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = Args::try_parse_from(argv).map_err(|e| CliError::Usage(e.to_string()))?;
    spec_from(args)
}

fn spec_from(args: Args) -> Result<ExperimentSpec, CliError> {
    if args.scenario == ScenarioArg::File {
        match &args.file {
            None => {
                return Err(CliError::Usage(
                    "--scenario file requires --file PATH".into(),
                ))
            }
            Some(path) if !path.exists() => {
                return Err(CliError::Usage(format!(
                    "scenario file {} does not exist",
                    path.display()
                )))
            }
            Some(_) => {}
        }
    }
    Ok(ExperimentSpec {
        scenario: args.scenario,
        file: args.file,
        mode: args.mode,
        out: args.out,
        params: ScenarioParams {
            servers: args.servers,
            clients_per_server: args.clients_per_server,
            bandwidth_bps: args.bandwidth,
            signal_bytes: args.signal_bytes,
            horizon_days: args.horizon_days,
            seed: args.seed,
            ..ScenarioParams::default()
        },
    })
}

/// Entry point used by `main`: parse, execute, map errors to exit codes.
pub fn main_with(argv: Vec<std::ffi::OsString>) -> i32 {
    // let clap handle --help/--version and render its own usage errors
    let args = match Args::try_parse_from(argv) {
        Ok(args) => args,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let spec = match spec_from(args) {
        Ok(spec) => spec,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    match execute(&spec) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn load_scenario_file(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = fs::read_to_string(path)?;
    Ok(toml::from_str(&text)?)
}

fn resolve_config(spec: &ExperimentSpec) -> Result<ScenarioConfig, CliError> {
    let mut config = match spec.scenario {
        ScenarioArg::Daily => scenario_daily(&spec.params),
        ScenarioArg::Weekly => scenario_weekly(&spec.params),
        ScenarioArg::File => {
            load_scenario_file(spec.file.as_ref().expect("validated in parse_args"))?
        }
    };
    if spec.scenario != ScenarioArg::File {
        config.seed = spec.params.seed;
    }
    Ok(config)
}

/// Runs the experiment and writes the CSV outputs.
pub fn execute(spec: &ExperimentSpec) -> Result<(), CliError> {
    let config = resolve_config(spec)?;
    config.validate().map_err(CliError::Sim)?;
    fs::create_dir_all(&spec.out)?;
    match spec.mode {
        ModeArg::Pull => execute_single(spec, config.with_mode(ProtocolMode::Pull)),
        ModeArg::Push => execute_single(spec, config.with_mode(ProtocolMode::Push)),
        ModeArg::Both => execute_both(spec, &config),
    }
}

fn execute_single(spec: &ExperimentSpec, config: ScenarioConfig) -> Result<(), CliError> {
    let result = run(&config)?;
    write_run_files(&spec.out, &result)?;
    write_cumulative(&spec.out.join("cumulative_energy.csv"), &[&result])?;
    println!(
        "{}: total_energy_j={}",
        config.mode.label(),
        result.total_energy_j
    );
    Ok(())
}

fn execute_both(spec: &ExperimentSpec, config: &ScenarioConfig) -> Result<(), CliError> {
    let pull_config = config.with_mode(ProtocolMode::Pull);
    let push_config = config.with_mode(ProtocolMode::Push);
    // the two arms are independent; run them in parallel and write files
    // only after both finish
    let (pull, push) = std::thread::scope(|scope| {
        let pull = scope.spawn(|| run(&pull_config));
        let push = scope.spawn(|| run(&push_config));
        (
            pull.join().expect("pull arm panicked"),
            push.join().expect("push arm panicked"),
        )
    });
    let pull = pull?;
    let push = push?;
    let report = compare(&pull, &push)?;

    write_run_files(&spec.out.join("pull"), &pull)?;
    write_run_files(&spec.out.join("push"), &push)?;
    write_cumulative(&spec.out.join("cumulative_energy.csv"), &[&pull, &push])?;
    write_comparison(&spec.out.join("comparison.csv"), &report)?;

    println!("pull: total_energy_j={}", pull.total_energy_j);
    println!("push: total_energy_j={}", push.total_energy_j);
    println!(
        "delta: pull-push={} J ({}% of pull)",
        report.energy_delta_j, report.energy_delta_pct
    );
    Ok(())
}

fn write_run_files(dir: &Path, result: &RunResult) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    write_energy_summary(&dir.join("energy_summary.csv"), result)?;
    write_messages(&dir.join("messages.csv"), result)?;
    Ok(())
}

fn write_energy_summary(path: &Path, result: &RunResult) -> Result<(), CliError> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "node_id,kind,t_total_s,t_tx_s,t_rx_s,energy_j")?;
    for (id, ledger) in &result.ledgers {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            id,
            result.node_kinds[id].label(),
            ledger.t_total,
            ledger.t_tx,
            ledger.t_rx,
            result.node_energy_j[id]
        )?;
    }
    w.flush()?;
    Ok(())
}

fn write_messages(path: &Path, result: &RunResult) -> Result<(), CliError> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "time_s,src,dst,kind,size_bytes")?;
    for record in &result.trace {
        writeln!(
            w,
            "{},{},{},{},{}",
            record.time_s, record.src, record.dst, record.kind, record.size_bytes
        )?;
    }
    w.flush()?;
    Ok(())
}

fn write_cumulative(path: &Path, results: &[&RunResult]) -> Result<(), CliError> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "time_s,mode,cumulative_j")?;
    for result in results {
        let mode = result.config.mode.label();
        for sample in &result.energy_series {
            writeln!(w, "{},{},{}", sample.time_s, mode, sample.cumulative_j)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_comparison(path: &Path, report: &ComparisonReport) -> Result<(), CliError> {
    // compare() was called with the pull arm first
    let pull = &report.first;
    let push = &report.second;
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "metric,pull,push,delta,delta_pct")?;
    writeln!(
        w,
        "total_energy_j,{},{},{},{}",
        pull.total_energy_j, push.total_energy_j, report.energy_delta_j, report.energy_delta_pct
    )?;
    let rows: [(&str, u64, u64); 3] = [
        ("message_count", pull.message_count, push.message_count),
        (
            "update_signal_count",
            pull.update_signals,
            push.update_signals,
        ),
        (
            "payload_bytes_transferred",
            pull.payload_bytes,
            push.payload_bytes,
        ),
    ];
    for (metric, a, b) in rows {
        let delta = a as i64 - b as i64;
        let pct = if a != 0 {
            100.0 * delta as f64 / a as f64
        } else {
            0.0
        };
        writeln!(w, "{metric},{a},{b},{delta},{pct}")?;
    }
    w.flush()?;
    Ok(())
}
