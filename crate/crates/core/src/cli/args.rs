//! Command-line surface of the `srcseek` binary.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::sweep::{self, SweepMode, SweepParam};
use super::{
    cmd_analyze, cmd_averaged, cmd_simulate, parse_state, resolve_config, AveragedArgs, AveragedStart, CliError,
    Overrides, Preset, ScenarioConfig,
};
use crate::averaging::EquilibriumKind;

#[derive(Debug, Parser)]
#[command(name = "srcseek", version, about = "3-D source seeking with extremum seeking control: simulate and analyze")]
pub struct Cli {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Scenario TOML file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Built-in scenario: corollary1, corollary2, proposition2, elliptical, acoustic, rosenbrock.
    #[arg(long, global = true, value_name = "NAME")]
    pub preset: Option<String>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub omega: Option<f64>,
    #[arg(long = "t-end", global = true)]
    pub t_end: Option<f64>,
    #[arg(long, global = true)]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EqArg {
    Eq1,
    Eq2,
    Eq3,
    Eq4,
}

impl From<EqArg> for EquilibriumKind {
    fn from(e: EqArg) -> Self {
        match e {
            EqArg::Eq1 => Self::Eq1,
            EqArg::Eq2 => Self::Eq2,
            EqArg::Eq3 => Self::Eq3,
            EqArg::Eq4 => Self::Eq4,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the closed loop; writes trajectory CSV, summary JSON and the expanded config.
    Simulate,
    /// Constants, equilibria, Jacobians, Routh-Hurwitz gates; writes the analysis JSON.
    Analyze,
    /// Integrate the averaged error system in tau = omega t; writes the averaged CSV.
    Averaged {
        /// Final tau; defaults to omega * t_end.
        #[arg(long = "tau-end")]
        tau_end: Option<f64>,
        #[arg(long, default_value_t = 0.1)]
        dtau: f64,
        /// Record every n-th step.
        #[arg(long, default_value_t = 10)]
        stride: usize,
        /// Start at this equilibrium instead of the initial vehicle state.
        #[arg(long = "from-eq", value_enum, conflicts_with = "state")]
        from_eq: Option<EqArg>,
        /// Offset added to every coordinate of the `--from-eq` start.
        #[arg(long, default_value_t = 0.0, requires = "from_eq")]
        perturb: f64,
        /// Explicit start `r_tilde,alpha_star,alpha_hat,theta_tilde,e_hat`.
        #[arg(long, allow_hyphen_values = true)]
        state: Option<String>,
    },
    /// Sweep one controller parameter over a grid.
    Sweep {
        #[arg(long, value_enum)]
        param: SweepParam,
        /// `lo:hi:step`, a comma list, or empty.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[arg(long, value_enum, default_value = "analyze")]
        mode: SweepMode,
    },
    /// Print the expanded scenario config as TOML.
    Show,
}

fn overrides(s: &ScenarioArgs) -> Overrides {
    Overrides { out: s.out.clone(), omega: s.omega, t_end: s.t_end, dt: s.dt }
}

fn load(cli: &Cli) -> Result<ScenarioConfig, CliError> {
    let s = &cli.scenario;
    resolve_config(s.config.as_deref(), s.preset.as_deref(), &overrides(s))
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), |v| format!("{v:.6}"))
}

pub fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let cfg = load(cli)?;
    match &cli.command {
        Command::Simulate => {
            let out = cmd_simulate(&cfg)?;
            let s = &out.summary.summary;
            println!(
                "{}: t_end={} final_distance={:.6} mean_distance={} mean_alpha={} mean_theta_tilde={} settle_time={} -> {}",
                cfg.name,
                s.t_end,
                s.final_distance,
                fmt_opt(s.mean_distance),
                fmt_opt(s.mean_alpha),
                fmt_opt(s.mean_theta_tilde),
                fmt_opt(s.settle_time),
                out.csv.display()
            );
        }
        Command::Analyze => {
            let (r, path) = cmd_analyze(&cfg)?;
            for e in &r.equilibria {
                let eq = &e.equilibrium;
                let verdict = e.jacobian.as_ref().map_or("-".to_string(), |j| format!("{:?}", j.verdict));
                println!(
                    "{}: exists={} r_tilde={:.6} theta_tilde={:.6} stability={verdict}",
                    eq.kind.name(),
                    eq.exists,
                    eq.state.r_tilde,
                    eq.state.theta_tilde
                );
            }
            println!(
                "hurwitz_eq1={} raw={:?} explicit={:?}",
                r.hurwitz_eq1.verdict, r.hurwitz_eq1.raw, r.hurwitz_eq1.explicit
            );
            if let Some(h) = &r.hurwitz_eq3 {
                println!("hurwitz_eq3={} conditions={:?}", h.verdict, h.conditions);
            }
            println!(
                "corollary1={} corollary2={} vc_bar={} -> {}",
                r.corollary.corollary1,
                r.corollary.corollary2,
                fmt_opt(r.corollary.vc_bar),
                path.display()
            );
        }
        Command::Averaged { tau_end, dtau, stride, from_eq, perturb, state } => {
            let start = match (from_eq, state) {
                (Some(k), _) => AveragedStart::Equilibrium((*k).into(), *perturb),
                (None, Some(s)) => AveragedStart::State(parse_state(s)?),
                (None, None) => AveragedStart::Initial,
            };
            let args = AveragedArgs { start, tau_end: *tau_end, dtau: *dtau, stride: *stride };
            let (rows, path) = cmd_averaged(&cfg, &args)?;
            let last = rows.last().expect("at least the initial row");
            println!(
                "{}: tau={} r_tilde={:.6} alpha_star={:.6} alpha_hat={:.6} theta_tilde={:.6} e_hat={:.6} -> {}",
                cfg.name,
                last.tau,
                last.r_tilde,
                last.alpha_star,
                last.alpha_hat,
                last.theta_tilde,
                last.e_hat,
                path.display()
            );
        }
        Command::Sweep { param, values, mode } => {
            let grid = sweep::parse_values(values)?;
            let (rows, path) = sweep::cmd_sweep(&cfg, *param, &grid, *mode)?;
            println!("{}: {} sweep points -> {}", cfg.name, rows.len(), path.display());
        }
        Command::Show => print!("{}", cfg.to_toml()),
    }
    Ok(())
}

/// Expanded TOML of every preset, keyed by preset name.
pub fn preset_files() -> Vec<(String, String)> {
    Preset::ALL.iter().map(|p| (format!("{}.toml", p.name()), ScenarioConfig::preset(*p).to_toml())).collect()
}
