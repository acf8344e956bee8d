//! `qars`: batch front end for the QARS engine.
//!
//! Exit codes: 0 success, 1 usage error, 2 input or validation error,
//! 3 CI gate tripped (a Critical band in `assess`, a Mosca violation in
//! `audit`).

mod config;
mod render;

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use qars_core::agents::{RuleBasedWorkers, WorkerInputs};
use qars_core::inventory::{load_catalog, parse_inventory, parse_severity_feed, Catalog, Inventory, SeverityFeed};
use qars_core::knowledge::MemoryGraph;
use qars_core::orchestrator::{self, QueryKind, RunConfig};
use qars_core::policy::{self, PolicyTimeline};
use qars_core::risk_model::{risk_landscape_grid, Range};
use qars_core::scenario::{resolve_assets, run_scenario, ScenarioSpec};

use config::Settings;

#[derive(Debug, Parser)]
#[command(
    name = "qars",
    version,
    about = "Quantum-adjusted risk scoring for cryptographic inventories"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// JSON config file (falls back to $QARS_CONFIG)
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Asset inventory CSV
    #[arg(long, global = true, value_name = "FILE")]
    inventory: Option<PathBuf>,
    /// Primitive catalog CSV (default: built-in catalog)
    #[arg(long, global = true, value_name = "FILE")]
    catalog: Option<PathBuf>,
    /// Policy timeline JSON (default: built-in 2030/2035 timeline)
    #[arg(long, global = true, value_name = "FILE")]
    policy: Option<PathBuf>,
    /// Severity feed CSV
    #[arg(long, global = true, value_name = "FILE")]
    severity: Option<PathBuf>,
    /// Knowledge graph JSON, loaded if present and saved after `assess`
    #[arg(long, global = true, value_name = "FILE")]
    memory: Option<PathBuf>,
    /// Assessment date (default: today)
    #[arg(long, global = true, value_name = "YYYY-MM-DD")]
    assessment_date: Option<String>,
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    /// Write output here instead of stdout
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Sigmoid steepness
    #[arg(long, global = true, allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// Weights as w_T,w_S,w_E
    #[arg(long, global = true, value_name = "W_T,W_S,W_E")]
    weights: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score every asset through the supervisor pipeline
    Assess,
    /// Check every asset against the policy timeline
    Audit,
    /// Run sweeps and Monte Carlo analyses from a scenario spec
    Scenario {
        #[arg(long, value_name = "FILE")]
        spec: Option<PathBuf>,
    },
    /// Emit the (X+Y, Z) grid of urgency values
    Landscape {
        /// Exposure range as start:stop:step
        #[arg(long, default_value = "0:20:1", value_name = "RANGE")]
        xy: String,
        /// Horizon range as start:stop:step
        #[arg(long, default_value = "1:20:1", value_name = "RANGE")]
        z: String,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Invalid(String),
}

impl CliError {
    pub fn invalid(message: impl Into<String>) -> Self {
        CliError::Invalid(message.into())
    }

    pub fn io(path: &Path, err: io::Error) -> Self {
        CliError::Invalid(format!("{}: {err}", path.display()))
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Invalid(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Invalid(m) => f.write_str(m),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(CliError::Usage(m)) => {
            let err = Cli::command().error(clap::error::ErrorKind::MissingRequiredArgument, m);
            let _ = err.print();
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8, CliError> {
    let settings = Settings::resolve(&cli.global)?;
    match cli.command {
        Command::Assess => cmd_assess(&settings),
        Command::Audit => cmd_audit(&settings),
        Command::Scenario { spec } => cmd_scenario(&settings, spec.as_deref()),
        Command::Landscape { xy, z } => cmd_landscape(&settings, &xy, &z),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn located(path: &Path, err: impl fmt::Display) -> CliError {
    CliError::invalid(format!("{}: {err}", path.display()))
}

fn emit(settings: &Settings, body: &str) -> Result<(), CliError> {
    match &settings.out {
        Some(path) => fs::write(path, body).map_err(|e| CliError::io(path, e)),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(body.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::invalid(format!("stdout: {e}")))
        }
    }
}

fn load_inventory(settings: &Settings) -> Result<(Inventory, PathBuf), CliError> {
    let path = settings.inventory.clone().ok_or_else(|| {
        CliError::Usage("the following required argument was not provided: --inventory <FILE>".into())
    })?;
    let mut inventory = parse_inventory(&read(&path)?).map_err(|e| located(&path, e))?;
    inventory.source_path = path.display().to_string();
    Ok((inventory, path))
}

fn load_catalog_file(settings: &Settings) -> Result<Catalog, CliError> {
    match &settings.catalog {
        Some(p) => load_catalog(&read(p)?).map_err(|e| located(p, e)),
        None => Ok(Catalog::builtin()),
    }
}

fn load_policy(settings: &Settings) -> Result<PolicyTimeline, CliError> {
    match &settings.policy {
        Some(p) => PolicyTimeline::from_json(&read(p)?).map_err(|e| located(p, e)),
        None => Ok(PolicyTimeline::builtin()),
    }
}

fn load_severity(settings: &Settings) -> Result<SeverityFeed, CliError> {
    match &settings.severity {
        Some(p) => parse_severity_feed(&read(p)?).map_err(|e| located(p, e)),
        None => Ok(SeverityFeed::default()),
    }
}

fn load_memory(settings: &Settings) -> Result<MemoryGraph, CliError> {
    match &settings.memory {
        Some(p) if p.exists() => MemoryGraph::load(p).map_err(|e| CliError::invalid(e.to_string())),
        _ => Ok(MemoryGraph::new()),
    }
}

fn worker_inputs(settings: &Settings) -> Result<(WorkerInputs, PathBuf), CliError> {
    let (inventory, path) = load_inventory(settings)?;
    Ok((
        WorkerInputs {
            inventory,
            catalog: load_catalog_file(settings)?,
            severity: load_severity(settings)?,
            timeline: load_policy(settings)?,
            assessment_date: settings.assessment_date,
            params: settings.params,
            weights: settings.weights,
        },
        path,
    ))
}

fn policy_error(settings: &Settings, err: impl fmt::Display) -> CliError {
    match &settings.policy {
        Some(p) => located(p, err),
        None => CliError::invalid(format!("built-in policy: {err}")),
    }
}

fn cmd_assess(settings: &Settings) -> Result<u8, CliError> {
    let (inputs, path) = worker_inputs(settings)?;
    policy::effective_z(&inputs.timeline, inputs.assessment_date).map_err(|e| policy_error(settings, e))?;
    let mut memory = load_memory(settings)?;
    let config = RunConfig {
        max_retries: settings.max_retries,
        seed: settings.seed.unwrap_or(0),
    };
    let workers = RuleBasedWorkers::new(&inputs);
    let output = orchestrator::run(QueryKind::AssessInventory, &workers, &inputs, &mut memory, &config)
        .map_err(|e| located(&path, e))?;
    if let Some(p) = &settings.memory {
        memory.save(p).map_err(|e| CliError::invalid(e.to_string()))?;
    }
    let body = match settings.format {
        OutputFormat::Json => output.report.to_json() + "\n",
        OutputFormat::Text => render::report_table(&output.report),
    };
    emit(settings, &body)?;
    Ok(if output.report.has_critical() { 3 } else { 0 })
}

fn cmd_audit(settings: &Settings) -> Result<u8, CliError> {
    let (inputs, path) = worker_inputs(settings)?;
    let memory = load_memory(settings)?;
    let horizon =
        policy::effective_z(&inputs.timeline, inputs.assessment_date).map_err(|e| policy_error(settings, e))?;
    let outcome = policy::audit_inventory(
        &inputs.inventory,
        &inputs.catalog,
        &memory,
        &inputs.timeline,
        inputs.assessment_date,
    )
    .map_err(|e| policy_error(settings, e))?;
    let body = match settings.format {
        OutputFormat::Json => render::audit_json(&inputs.assessment_date, horizon, &outcome) + "\n",
        OutputFormat::Text => render::audit_text(&inputs.assessment_date, horizon, &outcome),
    };
    emit(settings, &body)?;
    if let Some(first) = outcome.errors.first() {
        return Err(located(&path, first));
    }
    Ok(if outcome.findings.iter().any(|f| f.violated) {
        3
    } else {
        0
    })
}

fn cmd_scenario(settings: &Settings, spec_path: Option<&Path>) -> Result<u8, CliError> {
    let spec_path = spec_path
        .ok_or_else(|| CliError::Usage("the following required argument was not provided: --spec <FILE>".into()))?;
    let mut spec = ScenarioSpec::from_json(&read(spec_path)?).map_err(|e| located(spec_path, e))?;
    if let Some(seed) = settings.seed {
        spec.seed = seed;
    }
    let (inputs, path) = worker_inputs(settings)?;
    let memory = load_memory(settings)?;
    let horizon =
        policy::effective_z(&inputs.timeline, inputs.assessment_date).map_err(|e| policy_error(settings, e))?;
    let assets = resolve_assets(&inputs, &memory).map_err(|e| located(&path, e))?;
    let output = run_scenario(&spec, &assets, horizon.years, settings.params, settings.weights)
        .map_err(|e| located(spec_path, e))?;
    let body = match settings.format {
        OutputFormat::Json => serde_json::to_string_pretty(&output).expect("scenario output serializes") + "\n",
        OutputFormat::Text => output.to_csv(),
    };
    emit(settings, &body)?;
    Ok(0)
}

fn cmd_landscape(settings: &Settings, xy: &str, z: &str) -> Result<u8, CliError> {
    let xy: Range = xy.parse().map_err(|e| CliError::invalid(format!("--xy: {e}")))?;
    let z: Range = z.parse().map_err(|e| CliError::invalid(format!("--z: {e}")))?;
    let grid =
        risk_landscape_grid(&xy, &z, settings.params).map_err(|e| CliError::invalid(format!("--xy/--z: {e}")))?;
    let body = match settings.format {
        OutputFormat::Json => serde_json::to_string_pretty(&grid).expect("grid serializes") + "\n",
        OutputFormat::Text => render::landscape_csv(&grid),
    };
    emit(settings, &body)?;
    Ok(0)
}
