//! Scenario-driven front end: config loading, the four subcommands and the
//! artifacts they write.
//!
//! Exit codes: 0 success, 1 io failure, 2 config error, 3 numerical
//! divergence, 4 degenerate or singular analysis.

pub mod args;
pub mod config;
pub mod sweep;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::averaging::{self, AveragedSample, AveragedState, AveragingError, EquilibriumKind};
use crate::controller::WashoutState;
use crate::fields::eval_field;
use crate::simulator::{self, SimError, SimSummary, Trajectory};
use crate::stability::{self, StabilityError, StabilityReport};
use crate::vehicle::{self, VehicleState};

pub use config::{Preset, ScenarioConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical divergence: {0}")]
    Diverged(String),
    #[error("degenerate analysis: {0}")]
    Degenerate(String),
    #[error("io error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io(_) => 1,
            Self::Config(_) => 2,
            Self::Diverged(_) => 3,
            Self::Degenerate(_) => 4,
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Diverged { .. } => Self::Diverged(e.to_string()),
            SimError::Io(_) => Self::Io(e.to_string()),
            _ => Self::Config(e.to_string()),
        }
    }
}

impl From<AveragingError> for CliError {
    fn from(e: AveragingError) -> Self {
        match e {
            AveragingError::NonFinite(_) => Self::Diverged(e.to_string()),
            AveragingError::Invalid(_) => Self::Config(e.to_string()),
            AveragingError::Singular(_) | AveragingError::Degenerate(_) => Self::Degenerate(e.to_string()),
        }
    }
}

impl From<StabilityError> for CliError {
    fn from(e: StabilityError) -> Self {
        match e {
            StabilityError::Averaging(a) => a.into(),
            StabilityError::Missing(_) => Self::Degenerate(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Command-line overrides applied on top of a loaded or preset config.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub omega: Option<f64>,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
}

pub fn resolve_config(path: Option<&Path>, preset: Option<&str>, ov: &Overrides) -> Result<ScenarioConfig, CliError> {
    let mut cfg = match (path, preset) {
        (Some(p), None) => ScenarioConfig::load(p)?,
        (None, Some(name)) => ScenarioConfig::preset(name.parse()?),
        (Some(_), Some(_)) => return Err(CliError::Config("--config and --preset are exclusive".into())),
        (None, None) => return Err(CliError::Config("one of --config or --preset is required".into())),
    };
    if let Some(out) = &ov.out {
        cfg.outputs = out.clone();
    }
    if let Some(w) = ov.omega {
        cfg.params.omega = w;
    }
    if let Some(t) = ov.t_end {
        cfg.t_end = t;
    }
    if let Some(dt) = ov.dt {
        cfg.dt = Some(dt);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn artifact(cfg: &ScenarioConfig, suffix: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(&cfg.outputs).map_err(|e| io_err(&cfg.outputs, e))?;
    Ok(cfg.outputs.join(format!("{}{suffix}", cfg.name)))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

/// Summary JSON written next to each trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub dt: f64,
    pub sensor_offset: f64,
    #[serde(flatten)]
    pub summary: SimSummary,
}

#[derive(Debug, Clone)]
pub struct SimulateOutput {
    pub trajectory: Trajectory,
    pub summary: RunSummary,
    pub csv: PathBuf,
    pub summary_json: PathBuf,
    pub config_toml: PathBuf,
}

/// Runs the closed loop and writes `<name>.csv`, `<name>.summary.json` and
/// the expanded `<name>.config.toml`.
pub fn cmd_simulate(cfg: &ScenarioConfig) -> Result<SimulateOutput, CliError> {
    cfg.validate()?;
    let sim = cfg.sim_config();
    let trajectory = simulator::run(&sim)?;
    let summary = simulator::summarize(&trajectory, &cfg.params, &cfg.field)
        .ok_or_else(|| CliError::Diverged("empty trajectory".into()))?;
    let summary = RunSummary { name: cfg.name.clone(), dt: sim.dt, sensor_offset: cfg.params.sensor_offset, summary };

    let csv = artifact(cfg, ".csv")?;
    let file = fs::File::create(&csv).map_err(|e| io_err(&csv, e))?;
    trajectory.write_csv(std::io::BufWriter::new(file)).map_err(|e| io_err(&csv, e))?;
    let summary_json = artifact(cfg, ".summary.json")?;
    write_json(&summary_json, &summary)?;
    let config_toml = artifact(cfg, ".config.toml")?;
    fs::write(&config_toml, cfg.to_toml()).map_err(|e| io_err(&config_toml, e))?;
    Ok(SimulateOutput { trajectory, summary, csv, summary_json, config_toml })
}

/// Writes `<name>.analysis.json` with constants, equilibria, Jacobians and gates.
pub fn cmd_analyze(cfg: &ScenarioConfig) -> Result<(StabilityReport, PathBuf), CliError> {
    let report = stability::analyze(&cfg.params, cfg.q_r()?)?;
    let path = artifact(cfg, ".analysis.json")?;
    write_json(&path, &report)?;
    Ok((report, path))
}

pub fn read_report(path: &Path) -> Result<StabilityReport, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| io_err(path, e))
}

pub fn read_summary(path: &Path) -> Result<RunSummary, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| io_err(path, e))
}

/// Where an averaged run starts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AveragedStart {
    /// The averaged image of the configured initial vehicle state.
    Initial,
    /// An equilibrium, with every coordinate shifted by the given amount.
    Equilibrium(EquilibriumKind, f64),
    State(AveragedState),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragedArgs {
    pub start: AveragedStart,
    /// Defaults to `omega * t_end`.
    pub tau_end: Option<f64>,
    pub dtau: f64,
    pub stride: usize,
}

/// Averaged coordinates of a vehicle state with its filter settled, at t = 0.
pub fn averaged_image(cfg: &ScenarioConfig) -> Result<AveragedState, CliError> {
    let state: VehicleState = cfg.initial.into();
    let j = eval_field(&cfg.field, &vehicle::sensor_position(&state, cfg.params.sensor_offset))
        .map_err(|e| CliError::Config(e.to_string()))?;
    let c = simulator::error_coords(&state, &WashoutState::settled_on(j), 0.0, &cfg.params, &cfg.field);
    if c.degenerate {
        return Err(CliError::Degenerate("initial position coincides with the source".into()));
    }
    let e_hat =
        c.e_hat.ok_or_else(|| CliError::Config("averaged analysis needs a quadratic_spherical field".into()))?;
    Ok(AveragedState::new(c.r_tilde, c.alpha_star, c.alpha_hat, c.theta_tilde, e_hat))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragedRow {
    pub tau: f64,
    pub t: f64,
    pub r_tilde: f64,
    pub alpha_star: f64,
    pub alpha_hat: f64,
    pub theta_tilde: f64,
    pub e_hat: f64,
}

impl AveragedRow {
    fn new(s: &AveragedSample, omega: f64) -> Self {
        let x = &s.state;
        Self {
            tau: s.tau,
            t: s.tau / omega,
            r_tilde: x.r_tilde,
            alpha_star: x.alpha_star,
            alpha_hat: x.alpha_hat,
            theta_tilde: x.theta_tilde,
            e_hat: x.e_hat,
        }
    }
}

/// Integrates the averaged system and writes `<name>.averaged.csv`.
pub fn cmd_averaged(cfg: &ScenarioConfig, args: &AveragedArgs) -> Result<(Vec<AveragedRow>, PathBuf), CliError> {
    let q_r = cfg.q_r()?;
    let s0 = match args.start {
        AveragedStart::Initial => averaged_image(cfg)?,
        AveragedStart::State(s) => s,
        AveragedStart::Equilibrium(kind, shift) => {
            let eqs = averaging::equilibria(&cfg.params, q_r)?;
            let eq = eqs.iter().find(|e| e.kind == kind).expect("four slots");
            if !eq.exists {
                return Err(CliError::Degenerate(format!("equilibrium {} does not exist", kind.name())));
            }
            AveragedState::from_array(eq.state.to_array().map(|v| v + shift))
        }
    };
    let tau_end = args.tau_end.unwrap_or(cfg.params.omega * cfg.t_end);
    let samples = averaging::integrate_averaged(&s0, &cfg.params, q_r, args.dtau, tau_end, args.stride)?;
    let rows: Vec<AveragedRow> = samples.iter().map(|s| AveragedRow::new(s, cfg.params.omega)).collect();
    let path = artifact(cfg, ".averaged.csv")?;
    write_rows(&path, &rows)?;
    Ok((rows, path))
}

pub(crate) fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_rows<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    r.deserialize().collect::<Result<_, _>>().map_err(|e| io_err(path, e))
}

/// Parses `r_tilde,alpha_star,alpha_hat,theta_tilde,e_hat`.
pub fn parse_state(text: &str) -> Result<AveragedState, CliError> {
    let vals: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Config(format!("averaged state `{text}`: {e}")))?;
    let arr: [f64; 5] = vals
        .try_into()
        .map_err(|_| CliError::Config(format!("averaged state `{text}` needs five comma-separated values")))?;
    Ok(AveragedState::from_array(arr))
}

/// Entry point shared by the binary: parses `args`, runs, returns the exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    use clap::Parser;
    let cli = match args::Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match args::dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("srcseek: {e}");
            e.exit_code()
        }
    }
}
