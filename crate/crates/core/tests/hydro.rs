#![allow(clippy::needless_range_loop)]
use aquifer_game::hydro::{step_heads, AquiferState, FlowNetwork, HydroParams};
use proptest::prelude::*;

fn params(gamma: f64, n: usize) -> HydroParams<f64> {
    HydroParams {
        gamma,
        initial_state: AquiferState::new(vec![0.0; n], 0.0),
    }
}

fn network(n: usize, raw: &[f64], boundary: &[f64]) -> FlowNetwork<f64> {
    // scale so every agent row sums to at most 1
    let mut m = vec![vec![0.0; n + 1]; n + 1];
    let mut k = 0;
    for i in 1..=n {
        for j in i + 1..=n {
            m[i][j] = raw[k] / n as f64;
            m[j][i] = m[i][j];
            k += 1;
        }
        m[i][0] = boundary[i - 1] / n as f64;
        m[0][i] = m[i][0];
    }
    FlowNetwork::new(m).unwrap()
}

proptest! {
    #[test]
    fn closed_network_conserves_total_head(
        raw in prop::collection::vec(0.0..1.0f64, 10),
        heads in prop::collection::vec(-50.0..200.0f64, 5),
    ) {
        let net = network(5, &raw, &[0.0; 5]);
        let mut s = AquiferState::new(heads.clone(), 0.0);
        let total: f64 = heads.iter().sum();
        for _ in 0..50 {
            s = step_heads(&s, &net, &params(0.0, 5), 0.0, &[0.0; 5]).unwrap();
            prop_assert!((s.heads.iter().sum::<f64>() - total).abs() <= 1e-9 * 50.0);
        }
    }

    #[test]
    fn maximum_principle(
        raw in prop::collection::vec(0.0..1.0f64, 10),
        b in prop::collection::vec(0.0..1.0f64, 5),
        heads in prop::collection::vec(-50.0..200.0f64, 5),
        g0 in -50.0..200.0f64,
    ) {
        let net = network(5, &raw, &b);
        let s = AquiferState::new(heads.clone(), g0);
        let next = step_heads(&s, &net, &params(0.0, 5), 0.0, &[0.0; 5]).unwrap();
        for i in 0..5 {
            let mut lo = heads[i];
            let mut hi = heads[i];
            for j in 0..=5 {
                if j != i + 1 && net.coeff(i + 1, j) > 0.0 {
                    let h = if j == 0 { g0 } else { heads[j - 1] };
                    lo = lo.min(h);
                    hi = hi.max(h);
                }
            }
            prop_assert!(next.heads[i] >= lo - 1e-9 && next.heads[i] <= hi + 1e-9);
        }
    }

    #[test]
    fn translation_invariance(
        raw in prop::collection::vec(0.0..1.0f64, 10),
        b in prop::collection::vec(0.0..1.0f64, 5),
        heads in prop::collection::vec(-50.0..200.0f64, 5),
        d in prop::collection::vec(0.0..2.0f64, 5),
        r in -1.0..1.0f64,
        c in -100.0..100.0f64,
    ) {
        let net = network(5, &raw, &b);
        let s = AquiferState::new(heads.clone(), 100.0);
        let shifted = AquiferState::new(heads.iter().map(|h| h + c).collect(), 100.0 + c);
        let a = step_heads(&s, &net, &params(0.3, 5), r, &d).unwrap();
        let bb = step_heads(&shifted, &net, &params(0.3, 5), r, &d).unwrap();
        for i in 0..5 {
            prop_assert!((bb.heads[i] - a.heads[i] - c).abs() <= 1e-9);
        }
        prop_assert!((bb.boundary_head - a.boundary_head - c).abs() <= 1e-9);
    }

    #[test]
    fn stepping_is_deterministic(heads in prop::collection::vec(-50.0..200.0f64, 3), r in -1.0..1.0f64) {
        let net = FlowNetwork::from_edges(3, &[(1, 2, 0.05), (2, 3, 0.05)], 0.02).unwrap();
        let s = AquiferState::new(heads, 118.8);
        let a = step_heads(&s, &net, &params(0.3048, 3), r, &[0.1, 0.2, 0.3]).unwrap();
        let b = step_heads(&s, &net, &params(0.3048, 3), r, &[0.1, 0.2, 0.3]).unwrap();
        prop_assert_eq!(a, b);
    }
}
