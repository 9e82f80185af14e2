//! Crop prices, production costs, pumping energy cost and exponential trends.
//!
//! Prices and per-area costs saturate exponentially between an initial level
//! (zero quantity) and an asymptote (large quantity). Both levels follow a
//! shared exponential time trend `exp(t / tau)`; `tau = None` means flat.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// psi to feet of water column.
pub const PSI_TO_FEET: f64 = 2.31;
pub const FEET_TO_METERS: f64 = 0.3048;

/// `exp(t / tau)`, or 1 when `tau` is `None`.
#[inline]
pub fn trend_factor<T: Scalar>(tau: Option<T>, t: T) -> T {
    match tau {
        Some(tau) => (t / tau).exp(),
        None => T::one(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CropMarket<T> {
    /// Price at zero supply at t = 0, $/bushel.
    pub p0_init: T,
    /// Asymptotic price at large supply at t = 0, $/bushel.
    pub pinf_init: T,
    /// Supply scale in bushels; `None` means unbounded market (price stays at `p0`).
    pub qbar: Option<T>,
    /// Trend time constant in years; `None` means flat.
    pub tau: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketParams<T> {
    pub crops: Vec<CropMarket<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CropCost<T> {
    /// Per-area cost at zero planted area, $/m².
    pub c0_init: T,
    /// Asymptotic per-area cost at large planted area, $/m².
    pub cinf_init: T,
    /// Area scale in m².
    pub abar: T,
    /// Trend time constant in years; `None` means flat.
    pub theta: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostParams<T> {
    pub crops: Vec<CropCost<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams<T> {
    /// Gas needed to lift one m³ of water by one meter.
    pub gas_per_lift: T,
    /// Overall pumping plant efficiency in (0, 1].
    pub pump_efficiency: T,
    pub gauge_pressure_psi: T,
    /// Gas price at t = 0, $ per gas unit.
    pub gas_price_init: T,
    /// Gas price trend time constant in years; `None` means flat.
    pub zeta: Option<T>,
    /// Per-agent land-surface reference elevation in meters; lift is
    /// `surface_elevation[i] - head`.
    pub surface_elevation: Vec<T>,
}

fn check_tau<T: Scalar>(tau: Option<T>, what: &str) -> Result<()> {
    if let Some(t) = tau {
        if t == T::zero() || !t.is_finite() {
            return Err(Error::invalid(format!("{what}: time constant must be finite and non-zero")));
        }
    }
    Ok(())
}

impl<T: Scalar> MarketParams<T> {
    pub fn validate(&self) -> Result<()> {
        for (k, c) in self.crops.iter().enumerate() {
            if !(c.pinf_init >= T::zero()) || !(c.p0_init >= c.pinf_init) || !c.p0_init.is_finite() {
                return Err(Error::invalid(format!("crop {k}: need p0_init >= pinf_init >= 0")));
            }
            if let Some(q) = c.qbar {
                if !(q > T::zero()) {
                    return Err(Error::invalid(format!("crop {k}: qbar must be > 0")));
                }
            }
            check_tau(c.tau, &format!("crop {k} price"))?;
        }
        Ok(())
    }

    fn crop(&self, k: usize) -> Result<&CropMarket<T>> {
        self.crops.get(k).ok_or(Error::IndexOutOfRange {
            what: "crop",
            index: k,
            len: self.crops.len(),
        })
    }
}

impl<T: Scalar> CostParams<T> {
    pub fn validate(&self) -> Result<()> {
        for (k, c) in self.crops.iter().enumerate() {
            if !(c.cinf_init >= T::zero()) || !(c.c0_init >= c.cinf_init) || !c.c0_init.is_finite() {
                return Err(Error::invalid(format!("crop {k}: need c0_init >= cinf_init >= 0")));
            }
            if !(c.abar > T::zero()) {
                return Err(Error::invalid(format!("crop {k}: abar must be > 0")));
            }
            check_tau(c.theta, &format!("crop {k} cost"))?;
        }
        Ok(())
    }

    fn crop(&self, k: usize) -> Result<&CropCost<T>> {
        self.crops.get(k).ok_or(Error::IndexOutOfRange {
            what: "crop",
            index: k,
            len: self.crops.len(),
        })
    }
}

impl<T: Scalar> EnergyParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.gas_per_lift > T::zero()) {
            return Err(Error::invalid("gas_per_lift must be > 0"));
        }
        if !(self.pump_efficiency > T::zero() && self.pump_efficiency <= T::one()) {
            return Err(Error::invalid("pump_efficiency must lie in (0, 1]"));
        }
        if !(self.gauge_pressure_psi >= T::zero()) {
            return Err(Error::invalid("gauge_pressure_psi must be >= 0"));
        }
        if !(self.gas_price_init > T::zero()) {
            return Err(Error::invalid("gas_price_init must be > 0"));
        }
        if self.surface_elevation.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("surface elevations must be finite"));
        }
        check_tau(self.zeta, "gas price")
    }

    /// Pressure head of the irrigation system in meters.
    pub fn pressure_head_m(&self) -> T {
        T::lit(PSI_TO_FEET) * self.gauge_pressure_psi * T::lit(FEET_TO_METERS)
    }
}

/// Market price of crop `k` in year `t` given the total supply over all
/// agents (bushels).
pub fn crop_price<T: Scalar>(params: &MarketParams<T>, k: usize, t: T, total_supply: T) -> Result<T> {
    if !(total_supply >= T::zero()) {
        return Err(Error::invalid(format!("total supply must be >= 0, got {total_supply}")));
    }
    Ok(price_unchecked(params.crop(k)?, t, total_supply))
}

#[inline]
pub(crate) fn price_unchecked<T: Scalar>(c: &CropMarket<T>, t: T, total_supply: T) -> T {
    let f = trend_factor(c.tau, t);
    let p0 = c.p0_init * f;
    let pinf = c.pinf_init * f;
    match c.qbar {
        Some(q) => pinf + (p0 - pinf) * (-total_supply / q).exp(),
        None => p0,
    }
}

/// Per-area production cost ($/m²) of crop `k` for one agent planting
/// `irrigated_area` m². Saturation is per agent, not pooled.
pub fn production_cost_rate<T: Scalar>(params: &CostParams<T>, k: usize, t: T, irrigated_area: T) -> Result<T> {
    if !(irrigated_area >= T::zero()) {
        return Err(Error::invalid(format!("irrigated area must be >= 0, got {irrigated_area}")));
    }
    Ok(cost_unchecked(params.crop(k)?, t, irrigated_area))
}

#[inline]
pub(crate) fn cost_unchecked<T: Scalar>(c: &CropCost<T>, t: T, area: T) -> T {
    let f = trend_factor(c.theta, t);
    let c0 = c.c0_init * f;
    let cinf = c.cinf_init * f;
    cinf + (c0 - cinf) * (-area / c.abar).exp()
}

pub fn gas_price<T: Scalar>(params: &EnergyParams<T>, t: T) -> T {
    params.gas_price_init * trend_factor(params.zeta, t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpingCost<T> {
    /// $ per m³ pumped.
    pub unit_cost: T,
    /// Total lift was negative and the cost was floored at zero.
    pub floored: bool,
}

/// Energy cost per m³ of water pumped by agent `agent` at head `head` (m).
pub fn pumping_unit_cost<T: Scalar>(params: &EnergyParams<T>, agent: usize, t: T, head: T) -> Result<PumpingCost<T>> {
    let surface = *params.surface_elevation.get(agent).ok_or(Error::IndexOutOfRange {
        what: "agent",
        index: agent,
        len: params.surface_elevation.len(),
    })?;
    Ok(pumping_unchecked(params, surface, gas_price(params, t), head))
}

#[inline]
pub(crate) fn pumping_unchecked<T: Scalar>(params: &EnergyParams<T>, surface: T, gas: T, head: T) -> PumpingCost<T> {
    let lift = surface - head + params.pressure_head_m();
    if lift < T::zero() {
        return PumpingCost {
            unit_cost: T::zero(),
            floored: true,
        };
    }
    PumpingCost {
        unit_cost: params.gas_per_lift / params.pump_efficiency * gas * lift,
        floored: false,
    }
}

/// Exponential trend `v(t) = init * exp(rate * t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpTrend<T> {
    pub init: T,
    /// `1 / tau`; zero for a constant series.
    pub rate: T,
}

impl<T: Scalar> ExpTrend<T> {
    pub fn time_constant(&self) -> Option<T> {
        if self.rate == T::zero() {
            None
        } else {
            Some(T::one() / self.rate)
        }
    }

    pub fn eval(&self, t: T) -> T {
        self.init * (self.rate * t).exp()
    }
}

/// Log-linear least-squares fit of `ln v = ln v0 + t / tau`.
pub fn fit_exponential_trend<T: Scalar>(series: &[(T, T)]) -> Result<ExpTrend<T>> {
    if series.len() < 2 {
        return Err(Error::invalid("trend fit needs at least two points"));
    }
    if let Some((t, v)) = series.iter().find(|(t, v)| !(*v > T::zero()) || !t.is_finite() || !v.is_finite()) {
        return Err(Error::invalid(format!("trend fit needs positive finite values, got {v} at t = {t}")));
    }
    let n = T::from_usize_lossy(series.len());
    let t_mean = series.iter().map(|p| p.0).sum::<T>() / n;
    let l_mean = series.iter().map(|p| p.1.ln()).sum::<T>() / n;
    let mut stt = T::zero();
    let mut stl = T::zero();
    for &(t, v) in series {
        let dt = t - t_mean;
        stt += dt * dt;
        stl += dt * (v.ln() - l_mean);
    }
    if stt == T::zero() {
        return Err(Error::invalid("trend fit needs at least two distinct times"));
    }
    let rate = stl / stt;
    let intercept = l_mean - rate * t_mean;
    Ok(ExpTrend {
        init: intercept.exp(),
        rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn market(p0: f64, pinf: f64, qbar: Option<f64>, tau: Option<f64>) -> MarketParams<f64> {
        MarketParams {
            crops: vec![CropMarket {
                p0_init: p0,
                pinf_init: pinf,
                qbar,
                tau,
            }],
        }
    }

    fn costs(c0: f64, cinf: f64, abar: f64) -> CostParams<f64> {
        CostParams {
            crops: vec![CropCost {
                c0_init: c0,
                cinf_init: cinf,
                abar,
                theta: None,
            }],
        }
    }

    fn energy(g0: f64, zeta: Option<f64>) -> EnergyParams<f64> {
        EnergyParams {
            gas_per_lift: 1.0,
            pump_efficiency: 0.5,
            gauge_pressure_psi: 30.0,
            gas_price_init: g0,
            zeta,
            surface_elevation: vec![150.0, 160.0],
        }
    }

    #[test]
    fn price_examples() {
        let m = market(5.0, 2.0, Some(1000.0), None);
        assert_eq!(crop_price(&m, 0, 0.0, 0.0).unwrap(), 5.0);
        let at_q = crop_price(&m, 0, 0.0, 1000.0).unwrap();
        assert!((at_q - (2.0 + 3.0 * (-1.0f64).exp())).abs() < 1e-12);
        let far = crop_price(&m, 0, 0.0, 100_000.0).unwrap();
        assert!((far - 2.0).abs() <= 1e-6 * 3.0);
        assert!(crop_price(&m, 0, 0.0, -1.0).is_err());
        assert!(crop_price(&m, 1, 0.0, 1.0).is_err());

        // trend scales both levels
        let m = market(5.0, 2.0, Some(1000.0), Some(10.0));
        let p = crop_price(&m, 0, 10.0, 0.0).unwrap();
        assert!((p - 5.0 * std::f64::consts::E).abs() < 1e-12);

        // unbounded market
        let m = market(5.0, 2.0, None, None);
        assert_eq!(crop_price(&m, 0, 3.0, 1e9).unwrap(), 5.0);
    }

    #[test]
    fn cost_examples() {
        let c = costs(0.1, 0.08, 2.0e6);
        assert_eq!(production_cost_rate(&c, 0, 0.0, 0.0).unwrap(), 0.1);
        let at_a = production_cost_rate(&c, 0, 0.0, 2.0e6).unwrap();
        assert!((at_a - (0.08 + 0.02 * (-1.0f64).exp())).abs() < 1e-15);
        let flat = costs(0.1, 0.1, 2.0e6);
        for a in [0.0, 1.0, 1e6, 1e9] {
            assert_eq!(production_cost_rate(&flat, 0, 0.0, a).unwrap(), 0.1);
        }
        assert!(production_cost_rate(&c, 0, 0.0, -1.0).is_err());
    }

    #[test]
    fn gas_examples() {
        let e = energy(2.0, Some(10.0));
        assert_eq!(gas_price(&e, 0.0), 2.0);
        assert!((gas_price(&e, 10.0) - 2.0 * std::f64::consts::E).abs() < 1e-12);
        let flat = energy(2.0, None);
        for t in 0..20 {
            assert_eq!(gas_price(&flat, t as f64), 2.0);
        }
    }

    #[test]
    fn pumping_examples() {
        let mut e = energy(2.0, None);
        e.gauge_pressure_psi = 0.0;
        let c = pumping_unit_cost(&e, 0, 0.0, 150.0).unwrap();
        assert_eq!(c.unit_cost, 0.0);
        assert!(!c.floored);

        // theta = 1, rho = 0.5, g = 2, lift 50 m, 30 psi
        let e = energy(2.0, None);
        let c = pumping_unit_cost(&e, 0, 0.0, 100.0).unwrap();
        let hand = (1.0 / 0.5) * 2.0 * (50.0 + 2.31 * 30.0 * 0.3048);
        assert!((c.unit_cost - hand).abs() < 1e-9);
        assert!((c.unit_cost - 284.49056).abs() < 1e-9);

        let e2 = energy(4.0, None);
        let c2 = pumping_unit_cost(&e2, 0, 0.0, 100.0).unwrap();
        assert!((c2.unit_cost - 2.0 * c.unit_cost).abs() < 1e-9);

        // head far above the surface
        let c = pumping_unit_cost(&e, 0, 0.0, 400.0).unwrap();
        assert_eq!(c.unit_cost, 0.0);
        assert!(c.floored);
        assert!(pumping_unit_cost(&e, 5, 0.0, 100.0).is_err());
    }

    #[test]
    fn trend_fit_examples() {
        let s: Vec<(f64, f64)> = (0..10).map(|t| (t as f64, 3.0 * (t as f64 / 10.0).exp())).collect();
        let fit = fit_exponential_trend(&s).unwrap();
        assert!((fit.init - 3.0).abs() < 1e-6);
        assert!((fit.time_constant().unwrap() - 10.0).abs() < 1e-6);

        let flat: Vec<(f64, f64)> = (0..5).map(|t| (t as f64, 7.5)).collect();
        let fit = fit_exponential_trend(&flat).unwrap();
        assert!(fit.rate.abs() < 1e-15);
        assert!((fit.init - 7.5).abs() < 1e-12);

        assert!(fit_exponential_trend(&[(0.0, 1.0)]).is_err());
        assert!(fit_exponential_trend(&[(0.0, 1.0), (1.0, 0.0)]).is_err());
        assert!(fit_exponential_trend(&[(1.0, 1.0), (1.0, 2.0)]).is_err());
    }

    #[test]
    fn single_precision_price() {
        let m = MarketParams::<f32> {
            crops: vec![CropMarket {
                p0_init: 5.0,
                pinf_init: 2.0,
                qbar: Some(1000.0),
                tau: None,
            }],
        };
        assert_eq!(crop_price(&m, 0, 0.0f32, 0.0).unwrap(), 5.0);
    }

    proptest! {
        #[test]
        fn price_bounded_and_decreasing(
            pinf in 0.0f64..5.0, band in 0.01f64..5.0, qbar in 1.0f64..1e6,
            q1 in 0.0f64..1e7, dq in 1e-3f64..1e6, t in 0.0f64..20.0, tau in prop::option::of(5.0f64..100.0),
        ) {
            let m = market(pinf + band, pinf, Some(qbar), tau);
            let f = trend_factor(tau, t);
            let a = crop_price(&m, 0, t, q1).unwrap();
            let b = crop_price(&m, 0, t, q1 + dq).unwrap();
            prop_assert!(b <= a);
            prop_assert!(a >= pinf * f - 1e-12 && a <= (pinf + band) * f + 1e-12);
            // strictly decreasing while the saturation term is representable
            if (q1 + dq) / qbar < 30.0 {
                prop_assert!(b < a);
            }
        }

        #[test]
        fn cost_bounded_and_nonincreasing(
            cinf in 0.0f64..1.0, band in 0.0f64..1.0, abar in 1.0f64..1e7,
            a1 in 0.0f64..1e7, da in 0.0f64..1e6,
        ) {
            let c = costs(cinf + band, cinf, abar);
            let x = production_cost_rate(&c, 0, 0.0, a1).unwrap();
            let y = production_cost_rate(&c, 0, 0.0, a1 + da).unwrap();
            prop_assert!(y <= x);
            prop_assert!(x >= cinf - 1e-15 && x <= cinf + band + 1e-15);
        }

        #[test]
        fn pumping_monotone_and_linear(
            h1 in 0.0f64..140.0, dh in 0.0f64..10.0, g in 0.1f64..20.0, s in 0.1f64..10.0,
        ) {
            let e = energy(g, None);
            let a = pumping_unit_cost(&e, 1, 0.0, h1).unwrap().unit_cost;
            let b = pumping_unit_cost(&e, 1, 0.0, h1 + dh).unwrap().unit_cost;
            prop_assert!(b <= a + 1e-12);
            let es = energy(g * s, None);
            let c = pumping_unit_cost(&es, 1, 0.0, h1).unwrap().unit_cost;
            prop_assert!((c - s * a).abs() <= 1e-9 * c.abs().max(1.0));
        }

        #[test]
        fn trend_fit_scale_invariance(
            v0 in 0.1f64..100.0, tau in prop::sample::select(vec![-30.0f64, -8.0, 5.0, 12.0, 40.0]), s in 0.01f64..100.0,
        ) {
            let series: Vec<(f64, f64)> = (0..12).map(|t| (t as f64, v0 * (t as f64 / tau).exp())).collect();
            let fit = fit_exponential_trend(&series).unwrap();
            prop_assert!((fit.init - v0).abs() <= 1e-6 * v0);
            prop_assert!((fit.time_constant().unwrap() - tau).abs() <= 1e-6 * tau.abs());
            for &(t, v) in &series {
                prop_assert!((fit.eval(t).ln() - v.ln()).abs() <= 1e-9);
            }
            let scaled: Vec<(f64, f64)> = series.iter().map(|&(t, v)| (t, v * s)).collect();
            let fs = fit_exponential_trend(&scaled).unwrap();
            prop_assert!((fs.init - s * fit.init).abs() <= 1e-9 * s * fit.init);
            prop_assert!((fs.rate - fit.rate).abs() <= 1e-12);
        }
    }
}
