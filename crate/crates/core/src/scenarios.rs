//! Named scenarios that turn base weather and parameters into resolved model
//! inputs: climate shifts act on the surrogate's weather features, market
//! modes switch price, cost and gas trends on, and irrigation efficiency
//! shrinks irrigation needs year by year.

use serde::{Deserialize, Serialize};

use crate::agronomy::{estimate_evaporation, evaluate_surrogate, CropResponse, SurrogateModel, WeatherYear};
use crate::econ::{CostParams, EnergyParams, MarketParams};
use crate::error::{Error, Result};
use crate::hydro::{FlowNetwork, HydroParams};
use crate::scalar::Scalar;
use crate::sim::ScenarioInputs;
use crate::units::MM_PER_M;

/// Annual growth used for a trended series that has no fitted time constant.
pub const DEFAULT_TREND_GROWTH: f64 = 0.02;

/// Multipliers on the seasonal weather features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeatherTransform {
    pub precip_summer: f64,
    pub precip_winter: f64,
    pub solar_summer: f64,
    pub solar_winter: f64,
}

impl Default for WeatherTransform {
    fn default() -> Self {
        Self {
            precip_summer: 1.0,
            precip_winter: 1.0,
            solar_summer: 1.0,
            solar_winter: 1.0,
        }
    }
}

impl WeatherTransform {
    pub fn is_identity(&self) -> bool {
        *self == Self::default()
    }

    /// Scales one weather year. Annual precipitation is rebuilt as scaled
    /// summer plus the rest of the year at the winter multiplier.
    pub fn apply<T: Scalar>(&self, w: &WeatherYear<T>) -> WeatherYear<T> {
        if self.is_identity() {
            return *w;
        }
        let ms = T::lit(self.precip_summer);
        let mw = T::lit(self.precip_winter);
        WeatherYear {
            year: w.year,
            precip_annual: ms * w.precip_summer + mw * (w.precip_annual - w.precip_summer),
            precip_summer: ms * w.precip_summer,
            precip_winter: mw * w.precip_winter,
            solar_summer: T::lit(self.solar_summer) * w.solar_summer,
            solar_winter: T::lit(self.solar_winter) * w.solar_winter,
            tmax_mean: w.tmax_mean,
            tmin_mean: w.tmin_mean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendMode {
    /// Held at the base level every year.
    #[default]
    Flat,
    /// Exponential trend from the fitted time constant (or the default growth).
    Trended,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    #[serde(default)]
    pub weather: WeatherTransform,
    #[serde(default)]
    pub price_mode: TrendMode,
    #[serde(default)]
    pub gas_mode: TrendMode,
    #[serde(default)]
    pub cost_mode: TrendMode,
    /// Fractional yearly decrease of irrigation requirements.
    #[serde(default)]
    pub ir_efficiency_rate: f64,
    /// Pumping caps to sweep, as fractions of baseline use.
    #[serde(default)]
    pub lema_fractions: Vec<f64>,
    pub horizon: usize,
}

impl ScenarioSpec {
    pub fn identity(name: &str, horizon: usize) -> Self {
        Self {
            name: name.to_string(),
            weather: WeatherTransform::default(),
            price_mode: TrendMode::Flat,
            gas_mode: TrendMode::Flat,
            cost_mode: TrendMode::Flat,
            ir_efficiency_rate: 0.0,
            lema_fractions: Vec::new(),
            horizon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let w = &self.weather;
        for (field, v) in [
            ("weather.precip_summer", w.precip_summer),
            ("weather.precip_winter", w.precip_winter),
            ("weather.solar_summer", w.solar_summer),
            ("weather.solar_winter", w.solar_winter),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(field, "multiplier must be > 0"));
            }
        }
        if !(0.0..1.0).contains(&self.ir_efficiency_rate) {
            return Err(Error::config("ir_efficiency_rate", "must lie in [0, 1)"));
        }
        if self.lema_fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
            return Err(Error::config("lema_fractions", "fractions must lie in (0, 1]"));
        }
        if self.horizon == 0 {
            return Err(Error::config("horizon", "must be >= 1"));
        }
        Ok(())
    }
}

/// The built-in scenario list, all over `horizon` years.
pub fn builtin_scenarios(horizon: usize) -> Vec<ScenarioSpec> {
    let base = |name: &str| ScenarioSpec::identity(name, horizon);
    vec![
        base("baseline"),
        ScenarioSpec {
            weather: WeatherTransform {
                precip_summer: 1.2,
                solar_summer: 0.95,
                ..Default::default()
            },
            ..base("wet")
        },
        ScenarioSpec {
            weather: WeatherTransform {
                precip_summer: 0.9,
                precip_winter: 0.9,
                solar_summer: 1.02,
                solar_winter: 1.02,
            },
            ..base("dry")
        },
        ScenarioSpec {
            price_mode: TrendMode::Trended,
            ..base("population_growth")
        },
        ScenarioSpec {
            ir_efficiency_rate: 0.02,
            ..base("water_efficiency")
        },
        ScenarioSpec {
            lema_fractions: vec![0.95, 0.90, 0.85, 0.80, 0.75, 0.70],
            ..base("lema_sweep")
        },
    ]
}

pub fn builtin_scenario(name: &str, horizon: usize) -> Result<ScenarioSpec> {
    builtin_scenarios(horizon)
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| {
            let names: Vec<String> = builtin_scenarios(horizon).into_iter().map(|s| s.name).collect();
            Error::invalid(format!("unknown scenario `{name}`; known: {}", names.join(", ")))
        })
}

/// Fitted trend time constants (years) used by trended modes.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrendConstants<T> {
    pub price_tau: Vec<Option<T>>,
    pub cost_theta: Vec<Option<T>>,
    pub gas_zeta: Option<T>,
}

/// Scenario-independent model parameters in SI units. Market, cost and gas
/// parameters are the flat base levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct BaseModel<T> {
    pub areas: Vec<T>,
    pub hydro: HydroParams<T>,
    pub network: FlowNetwork<T>,
    pub surrogate: SurrogateModel<T>,
    pub market: MarketParams<T>,
    pub cost: CostParams<T>,
    pub energy: EnergyParams<T>,
    pub trends: TrendConstants<T>,
    pub discount: T,
}

/// Resolved inputs together with the weather actually used and surrogate
/// warnings raised while evaluating it.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedScenario<T> {
    pub inputs: ScenarioInputs<T>,
    pub weather: Vec<WeatherYear<T>>,
    /// Year-crop evaluations with a feature outside the fitted range.
    pub out_of_domain: usize,
    /// Year-crop evaluations where a channel was clamped.
    pub clamped: usize,
}

fn trend<T: Scalar>(mode: TrendMode, fitted: Option<T>) -> Option<T> {
    match mode {
        TrendMode::Flat => None,
        TrendMode::Trended => Some(fitted.unwrap_or_else(|| T::one() / T::lit(DEFAULT_TREND_GROWTH).ln_1p())),
    }
}

/// Resolves a scenario against base weather and parameters.
pub fn apply_scenario<T: Scalar>(weather: &[WeatherYear<T>], base: &BaseModel<T>, spec: &ScenarioSpec) -> Result<ScenarioInputs<T>> {
    resolve_scenario(weather, base, spec).map(|r| r.inputs)
}

pub fn resolve_scenario<T: Scalar>(weather: &[WeatherYear<T>], base: &BaseModel<T>, spec: &ScenarioSpec) -> Result<ResolvedScenario<T>> {
    spec.validate()?;
    let h = spec.horizon;
    if weather.len() < h {
        return Err(Error::invalid(format!(
            "scenario `{}` needs {h} weather years, got {}",
            spec.name,
            weather.len()
        )));
    }
    let k = base.market.crops.len();
    if base.surrogate.crops.len() != k {
        return Err(Error::LengthMismatch {
            what: "surrogate crops",
            expected: k,
            got: base.surrogate.crops.len(),
        });
    }
    let weather: Vec<WeatherYear<T>> = weather[..h].iter().map(|w| spec.weather.apply(w)).collect();
    let keep = T::one() - T::lit(spec.ir_efficiency_rate);
    let mut responses: Vec<Vec<CropResponse<T>>> = Vec::with_capacity(h);
    let mut replenishment = Vec::with_capacity(h);
    let (mut out_of_domain, mut clamped) = (0, 0);
    let mut decay = T::one();
    for w in &weather {
        w.validate()?;
        decay *= keep;
        let mut row = Vec::with_capacity(k);
        for crop in 0..k {
            let e = evaluate_surrogate(&base.surrogate, w, crop)?;
            out_of_domain += usize::from(e.out_of_domain);
            clamped += usize::from(e.clamped);
            row.push(e.response);
        }
        let evap = estimate_evaporation(&row, w.precip_annual)?;
        replenishment.push((w.precip_annual - evap) / T::lit(MM_PER_M));
        if spec.ir_efficiency_rate != 0.0 {
            for r in &mut row {
                r.irrigation *= decay;
            }
        }
        responses.push(row);
    }

    let mut market = base.market.clone();
    for (c, tau) in market.crops.iter_mut().zip(padded(&base.trends.price_tau, k)) {
        c.tau = trend(spec.price_mode, tau);
    }
    let mut cost = base.cost.clone();
    for (c, theta) in cost.crops.iter_mut().zip(padded(&base.trends.cost_theta, k)) {
        c.theta = trend(spec.cost_mode, theta);
    }
    let mut energy = base.energy.clone();
    energy.zeta = trend(spec.gas_mode, base.trends.gas_zeta);

    let inputs = ScenarioInputs {
        horizon: h,
        areas: base.areas.clone(),
        hydro: base.hydro.clone(),
        network: base.network.clone(),
        responses,
        market,
        cost,
        energy,
        replenishment,
        discount: base.discount,
    };
    inputs.validate()?;
    Ok(ResolvedScenario {
        inputs,
        weather,
        out_of_domain,
        clamped,
    })
}

fn padded<T: Copy>(v: &[Option<T>], k: usize) -> Vec<Option<T>> {
    (0..k).map(|i| v.get(i).copied().flatten()).collect()
}
