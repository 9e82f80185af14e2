mod common;

use aquifer_game::econ::{crop_price, fit_exponential_trend, production_cost_rate, pumping_unit_cost};
use aquifer_game::io::config::baseline_config;
use aquifer_game::scenarios::{apply_scenario, builtin_scenario, ScenarioSpec};
use aquifer_game::sim::{run_simulation, JointStrategy};
use common::fixture;
use proptest::prelude::*;

fn shares(n: usize, k: usize, h: usize, v: &[f64]) -> JointStrategy<f64> {
    let layout = aquifer_game::sim::CropLayout::new(k).unwrap();
    JointStrategy::from_shares(n, layout, h, |i, t| (v[(i * h + t) % v.len()], v[(i * h + t + 1) % v.len()]))
}

proptest! {
    #[test]
    fn price_decreasing_and_bounded(q1 in 0.0..1e7f64, dq in 1.0..1e6f64, t in 0.0..20.0f64) {
        let m = fixture(2, 3, 1).market;
        for k in 0..3 {
            let a = crop_price(&m, k, t, q1).unwrap();
            let b = crop_price(&m, k, t, q1 + dq).unwrap();
            let (p0, pinf) = (crop_price(&m, k, t, 0.0).unwrap(), m.crops[k].pinf_init);
            prop_assert!(b < a || a - pinf < 1e-12 * p0);
            prop_assert!(a <= p0 && a >= pinf);
        }
    }

    #[test]
    fn cost_non_increasing_and_bounded(a1 in 0.0..1e8f64, da in 0.0..1e7f64) {
        let c = fixture(2, 3, 1).cost;
        for k in 0..3 {
            let x = production_cost_rate(&c, k, 0.0, a1).unwrap();
            let y = production_cost_rate(&c, k, 0.0, a1 + da).unwrap();
            prop_assert!(y <= x);
            prop_assert!(x <= c.crops[k].c0_init && x >= c.crops[k].cinf_init);
        }
    }

    #[test]
    fn pumping_cost_linear_in_gas_and_falls_with_head(h in 0.0..140.0f64, dh in 0.0..10.0f64, s in 0.1..10.0f64) {
        let e = fixture(1, 3, 1).energy;
        let mut scaled = e.clone();
        scaled.gas_price_init *= s;
        let base = pumping_unit_cost(&e, 0, 0.0, h).unwrap().unit_cost;
        let more = pumping_unit_cost(&scaled, 0, 0.0, h).unwrap().unit_cost;
        prop_assert!((more - s * base).abs() <= 1e-12 * more.abs().max(1e-12));
        let higher = pumping_unit_cost(&e, 0, 0.0, h + dh).unwrap().unit_cost;
        prop_assert!(higher <= base);
    }

    #[test]
    fn trend_fit_recovers_noiseless_exponential(v0 in 0.1..100.0f64, rate in -0.2..0.2f64, n in 3usize..30) {
        let pts: Vec<(f64, f64)> = (0..n).map(|t| (t as f64, v0 * (rate * t as f64).exp())).collect();
        let fit = fit_exponential_trend(&pts).unwrap();
        prop_assert!((fit.init.ln() - v0.ln()).abs() <= 1e-9);
        prop_assert!((fit.rate - rate).abs() <= 1e-9);
    }

    #[test]
    fn simulation_is_deterministic(v in prop::collection::vec(0.0..1.0f64, 8)) {
        let inputs = fixture(3, 3, 4);
        let x = shares(3, 3, 4, &v);
        prop_assert_eq!(run_simulation(&x, &inputs).unwrap(), run_simulation(&x, &inputs).unwrap());
    }

    #[test]
    fn utility_is_discounted_sum_of_net_gains(v in prop::collection::vec(0.0..1.0f64, 8), d in 0.9..1.0f64) {
        let mut inputs = fixture(3, 3, 5);
        inputs.discount = d;
        let res = run_simulation(&shares(3, 3, 5, &v), &inputs).unwrap();
        for i in 0..3 {
            let sum: f64 = (0..5).map(|t| d.powi(t as i32) * res.years[t][i].net_gain).sum();
            prop_assert!((res.utilities[i] - sum).abs() <= 1e-9 * sum.abs().max(1.0));
        }
    }

    #[test]
    fn revenue_monotone_at_flat_prices(
        v in prop::collection::vec(0.0..1.0f64, 8),
        agent in 0usize..3, year in 0usize..3, k in 0usize..3, bump in 0.01..0.5f64,
    ) {
        let mut inputs = fixture(3, 3, 3);
        for c in &mut inputs.market.crops {
            c.qbar = None;
        }
        let x = shares(3, 3, 3, &v);
        let mut y = x.clone();
        let cur = y.get(agent, k, year);
        let room = if k == 2 { 1.0 - cur } else { 1.0 - x.get(agent, 0, year) - x.get(agent, 1, year) };
        y.set(agent, k, year, cur + bump.min(room));
        let a = run_simulation(&x, &inputs).unwrap();
        let b = run_simulation(&y, &inputs).unwrap();
        prop_assert!(b.years[year][agent].revenue >= a.years[year][agent].revenue);
    }

    #[test]
    fn more_pumping_lowers_every_later_head(
        v in prop::collection::vec(0.0..1.0f64, 8),
        agent in 0usize..3, year in 0usize..4, bump in 0.05..0.5f64,
    ) {
        let inputs = fixture(3, 3, 4);
        let x = shares(3, 3, 4, &v);
        let mut y = x.clone();
        let cur = y.get(agent, 2, year);
        y.set(agent, 2, year, (cur + bump).min(1.0));
        let a = run_simulation(&x, &inputs).unwrap();
        let b = run_simulation(&y, &inputs).unwrap();
        for t in year + 1..=4 {
            for i in 0..3 {
                prop_assert!(b.heads[t].heads[i] <= a.heads[t].heads[i] + 1e-12);
            }
        }
        for t in 0..=year {
            prop_assert_eq!(&b.heads[t], &a.heads[t]);
        }
    }
}

#[test]
fn identity_scenario_reproduces_baseline_inputs() {
    let cfg = baseline_config();
    let h = cfg.file.horizon;
    let a = apply_scenario(&cfg.weather, &cfg.base, &builtin_scenario("baseline", h).unwrap()).unwrap();
    let b = apply_scenario(&cfg.weather, &cfg.base, &ScenarioSpec::identity("again", h)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn irrigation_decays_geometrically() {
    let cfg = baseline_config();
    let h = cfg.file.horizon;
    let base = apply_scenario(&cfg.weather, &cfg.base, &builtin_scenario("baseline", h).unwrap()).unwrap();
    let eff = builtin_scenario("water_efficiency", h).unwrap();
    let rate = eff.ir_efficiency_rate;
    assert_eq!(rate, 0.02);
    let dec = apply_scenario(&cfg.weather, &cfg.base, &eff).unwrap();
    for t in 0..h {
        for k in 0..base.n_crops() {
            let (b, d) = (base.responses[t][k], dec.responses[t][k]);
            let expected = (1.0 - rate).powi(t as i32 + 1);
            assert!((d.irrigation / b.irrigation - expected).abs() <= 1e-12, "year {t} crop {k}");
            assert_eq!(d.transpiration, b.transpiration);
            assert_eq!(d.evapotranspiration, b.evapotranspiration);
        }
    }
}

#[test]
fn climate_presets_scale_weather() {
    let cfg = baseline_config();
    let h = cfg.file.horizon;
    let wet = builtin_scenario("wet", h).unwrap();
    let dry = builtin_scenario("dry", h).unwrap();
    for (w0, (ww, wd)) in cfg.weather.iter().zip(
        cfg.weather.iter().map(|w| wet.weather.apply(w)).zip(cfg.weather.iter().map(|w| dry.weather.apply(w))),
    ) {
        assert!((ww.precip_summer - 1.2 * w0.precip_summer).abs() <= 1e-9);
        assert!((ww.solar_summer - 0.95 * w0.solar_summer).abs() <= 1e-9);
        assert_eq!(ww.precip_winter, w0.precip_winter);
        assert!((wd.precip_summer - 0.9 * w0.precip_summer).abs() <= 1e-9);
        assert!((wd.precip_winter - 0.9 * w0.precip_winter).abs() <= 1e-9);
        assert!((wd.solar_winter - 1.02 * w0.solar_winter).abs() <= 1e-9);
    }
}
