//! Multi-agent groundwater irrigation game: aquifer dynamics, crop surrogates,
//! market and cost models, and a relaxation solver for Nash equilibria.

// `!(a >= b)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod agronomy;
pub mod econ;
pub mod error;
pub mod game;
pub mod hydro;
pub mod io;
pub mod linalg;
pub mod scalar;
pub mod scenarios;
pub mod sim;
pub mod units;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use game::{relax_to_equilibrium, verify_equilibrium, EquilibriumReport, LemaConstraint, RelaxationConfig, VerifyConfig};
pub use scenarios::{ScenarioSpec, WeatherTransform};
pub use sim::{run_simulation, CropLayout};

/// Double-precision aliases; the default used by the command-line tool.
pub type JointStrategy = sim::JointStrategy<f64>;
pub type ScenarioInputs = sim::ScenarioInputs<f64>;
pub type SimulationResult = sim::SimulationResult<f64>;
pub type AquiferState = hydro::AquiferState<f64>;
pub type FlowNetwork = hydro::FlowNetwork<f64>;
pub type WeatherYear = agronomy::WeatherYear<f64>;

/// Single-precision aliases.
pub type JointStrategyF32 = sim::JointStrategy<f32>;
pub type ScenarioInputsF32 = sim::ScenarioInputs<f32>;
pub type SimulationResultF32 = sim::SimulationResult<f32>;
pub type AquiferStateF32 = hydro::AquiferState<f32>;
pub type FlowNetworkF32 = hydro::FlowNetwork<f32>;
pub type WeatherYearF32 = agronomy::WeatherYear<f32>;
