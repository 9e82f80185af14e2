//! Hand-built model fixtures shared by the integration tests.
#![allow(dead_code)]

use aquifer_game::agronomy::CropResponse;
use aquifer_game::econ::{CostParams, CropCost, CropMarket, EnergyParams, MarketParams};
use aquifer_game::hydro::{AquiferState, FlowNetwork, HydroParams};
use aquifer_game::sim::ScenarioInputs;
use aquifer_game::units::ACRE_M2;

pub fn response(tr: f64, ir: f64, et: f64, p: f64, y: f64) -> CropResponse<f64> {
    CropResponse {
        transpiration: tr,
        irrigation: ir,
        evapotranspiration: et,
        season_precip: p,
        yield_bu_per_acre: y,
    }
}

/// Corn, sorghum, wheat responses in that order.
pub fn crop_responses(k: usize) -> Vec<CropResponse<f64>> {
    let all = [
        response(300.0, 250.0, 550.0, 250.0, 170.0),
        response(220.0, 150.0, 420.0, 240.0, 100.0),
        response(150.0, 100.0, 320.0, 110.0, 50.0),
    ];
    match k {
        1 => vec![all[2]],
        _ => all[..k].to_vec(),
    }
}

fn market(k: usize, n: usize) -> MarketParams<f64> {
    let all = [
        (4.0, 2.0, 2.0e5),
        (3.8, 1.5, 1.2e5),
        (5.0, 3.0, 0.6e5),
    ];
    let pick: Vec<_> = match k {
        1 => vec![all[2]],
        _ => all[..k].to_vec(),
    };
    MarketParams {
        crops: pick
            .into_iter()
            .map(|(p0, pinf, q)| CropMarket {
                p0_init: p0,
                pinf_init: pinf,
                qbar: Some(q * n as f64),
                tau: None,
            })
            .collect(),
    }
}

fn cost(k: usize) -> CostParams<f64> {
    let all = [(420.0, 400.0), (240.0, 228.0), (200.0, 192.0)];
    let pick: Vec<_> = match k {
        1 => vec![all[2]],
        _ => all[..k].to_vec(),
    };
    CostParams {
        crops: pick
            .into_iter()
            .map(|(c0, cinf)| CropCost {
                c0_init: c0 / ACRE_M2,
                cinf_init: cinf / ACRE_M2,
                abar: 1000.0 * ACRE_M2,
                theta: None,
            })
            .collect(),
    }
}

/// `n` agents of 400 acres on a chain network, `k` crops, `h` years.
pub fn fixture(n: usize, k: usize, h: usize) -> ScenarioInputs<f64> {
    let edges: Vec<(usize, usize, f64)> = (1..n).map(|i| (i, i + 1, 0.05)).collect();
    ScenarioInputs {
        horizon: h,
        areas: vec![400.0 * ACRE_M2; n],
        hydro: HydroParams {
            gamma: 0.3,
            initial_state: AquiferState::new(vec![100.0; n], 100.0),
        },
        network: FlowNetwork::from_edges(n, &edges, 0.02).unwrap(),
        responses: vec![crop_responses(k); h],
        market: market(k, n),
        cost: cost(k),
        energy: EnergyParams {
            gas_per_lift: 9e-6,
            pump_efficiency: 0.17,
            gauge_pressure_psi: 20.0,
            gas_price_init: 6.5,
            zeta: None,
            surface_elevation: vec![150.0; n],
        },
        replenishment: vec![0.05; h],
        discount: 1.0,
    }
}

/// Corn is worth far more than sorghum, water is free and costs are flat.
pub fn corn_dominant(n: usize, h: usize) -> ScenarioInputs<f64> {
    let mut s = fixture(n, 3, h);
    s.market.crops[0] = CropMarket {
        p0_init: 1000.0,
        pinf_init: 1000.0,
        qbar: None,
        tau: None,
    };
    for c in &mut s.cost.crops {
        c.cinf_init = c.c0_init;
    }
    s.energy.gas_price_init = 1e-9;
    s
}
