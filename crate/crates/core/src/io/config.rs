//! JSON run configuration in user units (acres, mm, psi, $/acre), resolved
//! into SI model parameters at load.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::tables::{load_weather_csv, read_surrogate, read_weather};
use crate::agronomy::{SurrogateModel, WeatherYear};
use crate::econ::{CostParams, CropCost, CropMarket, EnergyParams, MarketParams};
use crate::error::{Error, Result};
use crate::game::{RelaxationConfig, VerifyConfig};
use crate::hydro::{AquiferState, FlowNetwork, HydroParams};
use crate::scenarios::{builtin_scenario, resolve_scenario, BaseModel, ScenarioSpec, TrendConstants};
use crate::units::acres_to_m2;

pub const DEFAULT_WEATHER_CSV: &str = include_str!("../../data/weather_default.csv");
pub const DEFAULT_SURROGATE_CSV: &str = include_str!("../../data/surrogate_default.csv");
pub const BASELINE_CONFIG_JSON: &str = include_str!("../../data/baseline.json");
pub const SMALL_GAME_CONFIG_JSON: &str = include_str!("../../data/two_agent_game.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub area_acres: f64,
    pub initial_head_m: f64,
    /// Land-surface reference elevation for the pumping lift, m.
    pub surface_elevation_m: f64,
}

/// Flow coefficients as a full `(N+1) x (N+1)` matrix (index 0 = boundary)
/// or as 1-based agent edges plus per-agent boundary coupling.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<(usize, usize, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HydroConfig {
    pub boundary_head_m: f64,
    pub gamma_m_per_year: f64,
    pub flow: FlowConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CropConfig {
    pub name: String,
    /// Price at zero supply, $/bushel.
    pub price_p0: f64,
    /// Asymptotic price at large supply, $/bushel.
    pub price_pinf: f64,
    /// Supply scale, bushels; null for a price that ignores supply.
    pub qbar_bu: Option<f64>,
    /// Fitted price trend time constant, years; used by trended scenarios.
    #[serde(default)]
    pub price_tau_years: Option<f64>,
    pub cost_c0_per_acre: f64,
    pub cost_cinf_per_acre: f64,
    pub abar_acres: f64,
    #[serde(default)]
    pub cost_theta_years: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyConfig {
    /// Gas units per m³ of water per meter of lift.
    pub gas_per_lift: f64,
    pub pump_efficiency: f64,
    pub gauge_pressure_psi: f64,
    /// $ per gas unit.
    pub gas_price: f64,
    #[serde(default)]
    pub gas_zeta_years: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySettings {
    pub deviation_grid: f64,
    pub restarts: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for VerifySettings {
    fn default() -> Self {
        let v = VerifyConfig::default();
        Self {
            deviation_grid: v.deviation_grid,
            restarts: v.restarts,
            seed: v.seed,
            tolerance: v.tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioRef {
    Named(String),
    Inline(ScenarioSpec),
}

impl Default for ScenarioRef {
    fn default() -> Self {
        ScenarioRef::Named("baseline".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub horizon: usize,
    #[serde(default = "one")]
    pub discount: f64,
    #[serde(default)]
    pub scenario: ScenarioRef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub agents: Vec<AgentConfig>,
    pub hydro: HydroConfig,
    pub crops: Vec<CropConfig>,
    pub energy: EnergyConfig,
    /// Yearly weather CSV; the built-in series when null.
    #[serde(default)]
    pub weather_csv: Option<PathBuf>,
    /// Surrogate coefficient CSV; the built-in model when null.
    #[serde(default)]
    pub surrogate_csv: Option<PathBuf>,
    #[serde(default)]
    pub solver: RelaxationConfig,
    #[serde(default)]
    pub verify: VerifySettings,
}

fn one() -> f64 {
    1.0
}

/// A validated configuration with every derived quantity resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// The configuration as written, with data paths made absolute.
    pub file: ConfigFile,
    pub base: BaseModel<f64>,
    pub weather: Vec<WeatherYear<f64>>,
    pub scenario: ScenarioSpec,
    pub solver: RelaxationConfig,
    pub verify: VerifyConfig,
}

impl RunConfig {
    /// Re-resolves after the raw configuration was edited (for example by
    /// command-line overrides).
    pub fn reload(file: ConfigFile) -> Result<Self> {
        resolve(file, None)
    }

    pub fn with_scenario(&self, spec: ScenarioSpec) -> Result<Self> {
        let mut file = self.file.clone();
        file.scenario = ScenarioRef::Inline(spec);
        Self::reload(file)
    }
}

fn cfg_err(field: impl Into<String>, e: impl std::fmt::Display) -> Error {
    Error::config(field, e.to_string())
}

pub fn parse_config(text: &str, base_dir: Option<&Path>) -> Result<RunConfig> {
    let mut value: serde_json::Value = serde_json::from_str(text)?;
    // a run report carries its configuration under `config`
    if let Some(obj) = value.as_object_mut() {
        if obj.contains_key("command") && obj.contains_key("config") {
            value = obj.remove("config").unwrap_or_default();
        }
    }
    let file: ConfigFile = serde_json::from_value(value)?;
    resolve(file, base_dir)
}

/// Loads and validates a configuration file or a run's `report.json`.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_config(&text, Some(&dir))
}

pub fn save_config(cfg: &RunConfig, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(&cfg.file)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Configuration shipped with the crate: five agents, three crops, 20 years.
pub fn baseline_config() -> RunConfig {
    parse_config(BASELINE_CONFIG_JSON, None).expect("shipped baseline configuration is valid")
}

/// Two agents, corn and sorghum, one year.
pub fn small_game_config() -> RunConfig {
    parse_config(SMALL_GAME_CONFIG_JSON, None).expect("shipped two-agent configuration is valid")
}

pub fn default_weather() -> Vec<WeatherYear<f64>> {
    read_weather(DEFAULT_WEATHER_CSV.as_bytes(), None).expect("shipped weather is valid")
}

pub fn default_surrogate() -> SurrogateModel<f64> {
    read_surrogate(DEFAULT_SURROGATE_CSV.as_bytes(), None).expect("shipped surrogate is valid")
}

fn absolute(p: &Path, base_dir: Option<&Path>) -> Result<PathBuf> {
    let joined = match base_dir {
        Some(d) if p.is_relative() => d.join(p),
        _ => p.to_path_buf(),
    };
    joined
        .canonicalize()
        .map_err(|e| cfg_err("path", format!("{}: {e}", joined.display())))
}

fn resolve(mut file: ConfigFile, base_dir: Option<&Path>) -> Result<RunConfig> {
    if file.horizon == 0 {
        return Err(Error::config("horizon", "must be >= 1"));
    }
    if !(file.discount > 0.0 && file.discount <= 1.0) {
        return Err(Error::config("discount", "must lie in (0, 1]"));
    }
    let n = file.agents.len();
    if n == 0 {
        return Err(Error::config("agents", "at least one agent required"));
    }
    for (i, a) in file.agents.iter().enumerate() {
        if !(a.area_acres >= 0.0) || !a.area_acres.is_finite() {
            return Err(Error::config(format!("agents[{i}].area_acres"), "must be finite and >= 0"));
        }
        if !a.initial_head_m.is_finite() || !a.surface_elevation_m.is_finite() {
            return Err(Error::config(format!("agents[{i}]"), "heads and elevations must be finite"));
        }
    }
    let k = file.crops.len();
    if !(1..=3).contains(&k) {
        return Err(Error::config("crops", "between 1 and 3 crops supported"));
    }

    let network = flow_network(&file.hydro.flow, n)?;
    let hydro = HydroParams {
        gamma: file.hydro.gamma_m_per_year,
        initial_state: AquiferState::new(
            file.agents.iter().map(|a| a.initial_head_m).collect(),
            file.hydro.boundary_head_m,
        ),
    };
    hydro.validate().map_err(|e| cfg_err("hydro", e))?;

    let market = MarketParams {
        crops: file
            .crops
            .iter()
            .map(|c| CropMarket {
                p0_init: c.price_p0,
                pinf_init: c.price_pinf,
                qbar: c.qbar_bu,
                tau: None,
            })
            .collect(),
    };
    market.validate().map_err(|e| cfg_err("crops", e))?;
    let cost = CostParams {
        crops: file
            .crops
            .iter()
            .map(|c| CropCost {
                c0_init: acre_rate(c.cost_c0_per_acre),
                cinf_init: acre_rate(c.cost_cinf_per_acre),
                abar: acres_to_m2(c.abar_acres),
                theta: None,
            })
            .collect(),
    };
    cost.validate().map_err(|e| cfg_err("crops", e))?;
    let e = &file.energy;
    let energy = EnergyParams {
        gas_per_lift: e.gas_per_lift,
        pump_efficiency: e.pump_efficiency,
        gauge_pressure_psi: e.gauge_pressure_psi,
        gas_price_init: e.gas_price,
        zeta: None,
        surface_elevation: file.agents.iter().map(|a| a.surface_elevation_m).collect(),
    };
    energy.validate().map_err(|e| cfg_err("energy", e))?;
    let trends = TrendConstants {
        price_tau: file.crops.iter().map(|c| c.price_tau_years).collect(),
        cost_theta: file.crops.iter().map(|c| c.cost_theta_years).collect(),
        gas_zeta: e.gas_zeta_years,
    };
    for (what, t) in trends
        .price_tau
        .iter()
        .map(|t| ("crops.price_tau_years", t))
        .chain(trends.cost_theta.iter().map(|t| ("crops.cost_theta_years", t)))
        .chain(std::iter::once(("energy.gas_zeta_years", &trends.gas_zeta)))
    {
        if matches!(t, Some(v) if *v == 0.0 || !v.is_finite()) {
            return Err(Error::config(what, "time constant must be finite and non-zero"));
        }
    }

    let weather = match &file.weather_csv {
        Some(p) => {
            let abs = absolute(p, base_dir)?;
            let w = load_weather_csv(&abs)?;
            file.weather_csv = Some(abs);
            w
        }
        None => default_weather(),
    };
    let all_crops = match &file.surrogate_csv {
        Some(p) => {
            let abs = absolute(p, base_dir)?;
            let m = read_surrogate(std::fs::File::open(&abs)?, Some(&abs))?;
            file.surrogate_csv = Some(abs);
            m
        }
        None => default_surrogate(),
    };
    let surrogate = SurrogateModel {
        crops: file
            .crops
            .iter()
            .map(|c| {
                all_crops
                    .crops
                    .iter()
                    .find(|s| s.name == c.name)
                    .cloned()
                    .ok_or_else(|| Error::config("crops", format!("surrogate has no crop named `{}`", c.name)))
            })
            .collect::<Result<Vec<_>>>()?,
    };

    let scenario = match &file.scenario {
        ScenarioRef::Named(name) => builtin_scenario(name, file.horizon).map_err(|e| cfg_err("scenario", e))?,
        ScenarioRef::Inline(spec) => spec.clone(),
    };
    scenario.validate()?;
    file.solver.validate()?;
    let v = &file.verify;
    if !(v.deviation_grid > 0.0 && v.deviation_grid <= 0.5) {
        return Err(Error::config("verify.deviation_grid", "must lie in (0, 0.5]"));
    }
    if !(v.tolerance > 0.0) {
        return Err(Error::config("verify.tolerance", "must be > 0"));
    }
    let verify = VerifyConfig {
        deviation_grid: v.deviation_grid,
        restarts: v.restarts,
        seed: v.seed,
        tolerance: v.tolerance,
        search: file.solver.clone(),
    };

    let base = BaseModel {
        areas: file.agents.iter().map(|a| acres_to_m2(a.area_acres)).collect(),
        hydro,
        network,
        surrogate,
        market,
        cost,
        energy,
        trends,
        discount: file.discount,
    };
    // surface every remaining inconsistency now rather than mid-run
    resolve_scenario(&weather, &base, &scenario).map_err(|e| cfg_err("scenario", e))?;
    Ok(RunConfig {
        solver: file.solver.clone(),
        file,
        base,
        weather,
        scenario,
        verify,
    })
}

/// $/acre to $/m².
fn acre_rate(v: f64) -> f64 {
    v / acres_to_m2(1.0)
}

fn flow_network(f: &FlowConfig, n: usize) -> Result<FlowNetwork<f64>> {
    let net = match (&f.matrix, &f.edges) {
        (Some(m), None) => {
            if f.boundary.is_some() {
                return Err(Error::config("hydro.flow.boundary", "only valid together with `edges`"));
            }
            FlowNetwork::new(m.clone())
        }
        (None, Some(edges)) => {
            let boundary = f.boundary.clone().unwrap_or_else(|| vec![0.0; n]);
            if boundary.len() != n {
                return Err(Error::config("hydro.flow.boundary", format!("expected {n} entries")));
            }
            let mut m = vec![vec![0.0; n + 1]; n + 1];
            for (i, b) in boundary.iter().enumerate() {
                m[0][i + 1] = *b;
                m[i + 1][0] = *b;
            }
            for &(a, b, v) in edges {
                if a == 0 || b == 0 || a > n || b > n {
                    return Err(Error::config("hydro.flow.edges", format!("edge ({a}, {b}) outside agents 1..={n}")));
                }
                m[a][b] = v;
                m[b][a] = v;
            }
            FlowNetwork::new(m)
        }
        _ => return Err(Error::config("hydro.flow", "give exactly one of `matrix` or `edges`")),
    };
    let net = net.map_err(|e| cfg_err("hydro.flow", e))?;
    if net.n_agents() != n {
        return Err(Error::config("hydro.flow", format!("matrix covers {} agents, expected {n}", net.n_agents())));
    }
    Ok(net)
}
