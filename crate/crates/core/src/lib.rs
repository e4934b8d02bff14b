//! Source seeking for a 3-D nonholonomic vehicle steered by extremum seeking
//! with a regulated forward velocity.
//!
//! The crate has two halves:
//!
//! - a closed-loop simulator ([`fields`], [`vehicle`], [`controller`],
//!   [`simulator`]) that integrates the vehicle, the washout filter and the
//!   perturbation-based control law with a fixed-step RK4 scheme;
//! - an analysis side ([`averaging`], [`stability`]) that works with the
//!   period-averaged error dynamics in closed form: Bessel-coefficient
//!   averages, the four equilibria, their Jacobians and Routh-Hurwitz gates.
//!
//! [`cli`] ties both together behind scenario presets and the `srcseek`
//! binary.

pub mod averaging;
pub mod cli;
pub mod controller;
pub mod fields;
pub mod simulator;
pub mod stability;
pub mod vehicle;

/// 3-vector used for positions and headings.
pub type Vec3 = nalgebra::Vector3<f64>;

pub use averaging::{AnalysisConstants, AveragedState, Equilibrium, EquilibriumKind};
pub use controller::{ControllerParams, WashoutState};
pub use fields::FieldSpec;
pub use simulator::{ErrorCoords, SimConfig, Trajectory};
pub use vehicle::VehicleState;
