//! One-parameter sweeps, run in parallel.

use std::path::PathBuf;

use clap::ValueEnum;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{write_rows, CliError, ScenarioConfig};
use crate::averaging::{Equilibrium, EquilibriumKind};
use crate::simulator;
use crate::stability::{self, StabilityReport};

/// Grid values are rounded to this many decimals so that `lo:hi:step` hits
/// interval endpoints exactly.
const GRID_DECIMALS: i32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum SweepParam {
    A,
    CAlpha,
    CTheta,
    B,
    H,
    VC,
    Omega,
    SensorOffset,
}

impl SweepParam {
    pub fn apply(&self, cfg: &mut ScenarioConfig, v: f64) {
        let p = &mut cfg.params;
        match self {
            Self::A => p.a = v,
            Self::CAlpha => p.c_alpha = v,
            Self::CTheta => p.c_theta = v,
            Self::B => p.b = v,
            Self::H => p.h = v,
            Self::VC => p.v_c = v,
            Self::Omega => p.omega = v,
            Self::SensorOffset => p.sensor_offset = v,
        }
    }
}

fn round_grid(x: f64) -> f64 {
    let s = 10f64.powi(GRID_DECIMALS);
    (x * s).round() / s
}

/// Parses `lo:hi:step` (inclusive of `hi` up to rounding), a comma list, or
/// an empty string for an empty grid.
pub fn parse_values(text: &str) -> Result<Vec<f64>, CliError> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let bad = |what: &str| CliError::Config(format!("sweep values `{text}`: {what}"));
    if text.contains(':') {
        let parts: Vec<f64> = text
            .split(':')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| bad(&e.to_string()))?;
        let [lo, hi, step] = parts[..] else {
            return Err(bad("range needs lo:hi:step"));
        };
        if step.is_nan() || step <= 0.0 || !lo.is_finite() || !hi.is_finite() || hi < lo {
            return Err(bad("range needs lo <= hi and step > 0"));
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|k| round_grid(lo + k as f64 * step)).collect());
    }
    text.split(',').map(|s| s.trim().parse::<f64>().map_err(|e| bad(&e.to_string()))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// Averaged-system verdicts only.
    Analyze,
    /// Analysis plus a full closed-loop run per grid point.
    Simulate,
}

/// One grid point. Empty cells in the CSV are absent values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: SweepParam,
    pub value: f64,
    pub corollary1: Option<bool>,
    pub corollary2: Option<bool>,
    pub vc_bar: Option<f64>,
    pub hurwitz_eq1: Option<bool>,
    pub hurwitz_eq3: Option<bool>,
    pub eq1_radius: Option<f64>,
    pub eq2_radius: Option<f64>,
    pub eq3_radius: Option<f64>,
    /// Radius of the first existing equilibrium with a Hurwitz Jacobian.
    pub predicted_radius: Option<f64>,
    pub final_distance: Option<f64>,
    pub mean_distance: Option<f64>,
    pub mean_theta_tilde: Option<f64>,
    /// `|mean_distance - predicted_radius|`.
    pub deviation: Option<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    fn empty(param: SweepParam, value: f64) -> Self {
        Self {
            param,
            value,
            corollary1: None,
            corollary2: None,
            vc_bar: None,
            hurwitz_eq1: None,
            hurwitz_eq3: None,
            eq1_radius: None,
            eq2_radius: None,
            eq3_radius: None,
            predicted_radius: None,
            final_distance: None,
            mean_distance: None,
            mean_theta_tilde: None,
            deviation: None,
            error: None,
        }
    }

    fn fill_analysis(&mut self, r: &StabilityReport) {
        self.corollary1 = Some(r.corollary.corollary1);
        self.corollary2 = Some(r.corollary.corollary2);
        self.vc_bar = r.corollary.vc_bar;
        self.hurwitz_eq1 = Some(r.hurwitz_eq1.verdict);
        self.hurwitz_eq3 = r.hurwitz_eq3.map(|h| h.verdict);
        let radius = |k: EquilibriumKind| {
            r.equilibria
                .iter()
                .map(|e| &e.equilibrium)
                .find(|e: &&Equilibrium| e.kind == k && e.exists)
                .map(|e| e.state.r_tilde)
        };
        self.eq1_radius = radius(EquilibriumKind::Eq1);
        self.eq2_radius = radius(EquilibriumKind::Eq2);
        self.eq3_radius = radius(EquilibriumKind::Eq3);
        self.predicted_radius = r
            .equilibria
            .iter()
            .find(|e| e.jacobian.as_ref().is_some_and(|j| j.hurwitz))
            .map(|e| e.equilibrium.state.r_tilde);
    }
}

fn sweep_point(base: &ScenarioConfig, param: SweepParam, value: f64, mode: SweepMode) -> SweepRow {
    let mut row = SweepRow::empty(param, value);
    let mut cfg = base.clone();
    param.apply(&mut cfg, value);
    if let Err(e) = cfg.validate() {
        row.error = Some(e.to_string());
        return row;
    }
    if let Ok(q_r) = cfg.q_r() {
        match stability::analyze(&cfg.params, q_r) {
            Ok(r) => row.fill_analysis(&r),
            Err(e) => row.error = Some(e.to_string()),
        }
    }
    if mode == SweepMode::Simulate {
        match simulator::run(&cfg.sim_config()) {
            Ok(traj) => {
                if let Some(s) = simulator::summarize(&traj, &cfg.params, &cfg.field) {
                    row.final_distance = Some(s.final_distance);
                    row.mean_distance = s.mean_distance;
                    row.mean_theta_tilde = s.mean_theta_tilde;
                    row.deviation = s.mean_distance.zip(row.predicted_radius).map(|(m, p)| (m - p).abs());
                }
            }
            Err(e) => row.error = Some(e.to_string()),
        }
    }
    row
}

/// Evaluates every grid point in parallel; rows keep the grid order.
pub fn sweep(base: &ScenarioConfig, param: SweepParam, values: &[f64], mode: SweepMode) -> Vec<SweepRow> {
    values.par_iter().map(|&v| sweep_point(base, param, v, mode)).collect()
}

/// Runs the sweep and writes `<name>.sweep.csv`.
pub fn cmd_sweep(
    cfg: &ScenarioConfig,
    param: SweepParam,
    values: &[f64],
    mode: SweepMode,
) -> Result<(Vec<SweepRow>, PathBuf), CliError> {
    if mode == SweepMode::Analyze {
        cfg.q_r()?;
    }
    let rows = sweep(cfg, param, values, mode);
    let path = super::artifact(cfg, ".sweep.csv")?;
    if rows.is_empty() {
        // csv writes no header for zero records; keep the file self-describing.
        std::fs::write(&path, SWEEP_HEADER.join(",") + "\n").map_err(|e| super::io_err(&path, e))?;
    } else {
        write_rows(&path, &rows)?;
    }
    Ok((rows, path))
}

pub const SWEEP_HEADER: [&str; 16] = [
    "param",
    "value",
    "corollary1",
    "corollary2",
    "vc_bar",
    "hurwitz_eq1",
    "hurwitz_eq3",
    "eq1_radius",
    "eq2_radius",
    "eq3_radius",
    "predicted_radius",
    "final_distance",
    "mean_distance",
    "mean_theta_tilde",
    "deviation",
    "error",
];
