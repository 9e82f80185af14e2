//! The relaxation loop `x <- (1 - eta) x + eta z(x)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::best_response::{optimum_unchecked, validate_all};
use super::lema::LEMA_TOLERANCE;
use super::{objectives, project_in_place, psi_unchecked, EquilibriumReport, LemaConstraint, LemaPenalty, RelaxationConfig};
use crate::error::Result;
use crate::scalar::Scalar;
use crate::sim::{CropLayout, Evaluator, JointStrategy, ScenarioInputs};

/// Penalty growth stops after this many increases.
const MAX_PENALTY_GROWTHS: usize = 12;

/// Uniformly random feasible strategy drawn from a seeded generator.
pub fn random_strategy<T: Scalar>(n_agents: usize, layout: CropLayout, horizon: usize, seed: u64) -> JointStrategy<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    JointStrategy::from_shares(n_agents, layout, horizon, |_, _| {
        let a: f64 = rng.gen();
        let w: f64 = rng.gen();
        (T::lit(a), T::lit(w))
    })
}

fn initial_weight<T: Scalar>(inputs: &ScenarioInputs<T>, x: &JointStrategy<T>, c: &LemaConstraint<T>) -> T {
    let mut ev = Evaluator::new(inputs);
    let mut u = vec![T::zero(); inputs.n_agents()];
    ev.utilities(x, &mut u);
    let typical_u = (u.iter().map(|v| v.abs()).sum::<T>() / T::from_usize_lossy(u.len())).max(T::one());
    let all: Vec<T> = c.limits.iter().flatten().copied().collect();
    let typical_w = if all.is_empty() {
        T::one()
    } else {
        (all.iter().copied().sum::<T>() / T::from_usize_lossy(all.len())).max(T::one())
    };
    T::lit(1e3) * typical_u / (typical_w * typical_w)
}

/// Relaxes from `init` (or a seeded random strategy) to an approximate
/// Nash equilibrium. Non-convergence is reported, not an error.
pub fn relax_to_equilibrium<T: Scalar>(
    init: Option<&JointStrategy<T>>,
    inputs: &ScenarioInputs<T>,
    lema: Option<&LemaConstraint<T>>,
    cfg: &RelaxationConfig,
) -> Result<(JointStrategy<T>, EquilibriumReport)> {
    let layout = inputs.layout()?;
    let mut x = match init {
        Some(s) => s.clone(),
        None => random_strategy(inputs.n_agents(), layout, inputs.horizon, cfg.rng_seed),
    };
    project_in_place(&mut x)?;
    let mut penalty = match lema {
        Some(c) => Some(LemaPenalty {
            constraint: c.clone(),
            weight: cfg.penalty_init.map(T::lit).unwrap_or_else(|| initial_weight(inputs, &x, c)),
        }),
        None => None,
    };
    validate_all(&x, inputs, penalty.as_ref(), cfg)?;

    let eps = T::lit(cfg.epsilon);
    let eta = T::lit(cfg.eta);
    let grow_at = T::lit(LEMA_TOLERANCE / 2.0);
    let mut growths = 0;
    let mut iterations = 0;
    let mut converged = false;
    let (mut z, mut brs) = (x.clone(), Vec::new());
    while iterations < cfg.max_iters {
        iterations += 1;
        (z, brs) = optimum_unchecked(&x, inputs, penalty.as_ref(), cfg, (iterations > 1).then_some(&z));
        let residual = x.sup_distance(&z);
        let mut grew = false;
        if let Some(p) = penalty.as_mut() {
            if growths < MAX_PENALTY_GROWTHS && p.constraint.worst_relative_violation(inputs, &z) > grow_at {
                p.weight *= T::lit(cfg.penalty_growth);
                growths += 1;
                grew = true;
            }
        }
        if residual < eps && !grew {
            converged = true;
            break;
        }
        for (xv, zv) in x.as_mut_slice().iter_mut().zip(z.as_slice()) {
            *xv = (T::one() - eta) * *xv + eta * *zv;
        }
        project_in_place(&mut x)?;
    }
    if !converged {
        (z, brs) = optimum_unchecked(&x, inputs, penalty.as_ref(), cfg, Some(&z));
    }

    let n = inputs.n_agents();
    let mut ev = Evaluator::new(inputs);
    let mut utilities = vec![T::zero(); n];
    objectives(&mut ev, &x, None, &mut utilities);
    let improvements: Vec<f64> = brs
        .iter()
        .map(|b| (b.objective - b.start_objective).max(T::zero()).as_f64())
        .collect();
    let relative_improvements = improvements
        .iter()
        .zip(&utilities)
        .map(|(d, u)| d / u.as_f64().abs().max(1.0))
        .collect();
    let (violations, feasible) = match &penalty {
        Some(p) => (
            p.constraint.violations(inputs, &x).iter().map(|v| v.as_f64()).collect(),
            p.constraint.is_satisfied(inputs, &x),
        ),
        None => (vec![0.0; n], true),
    };
    let report = EquilibriumReport {
        iterations,
        residual: x.sup_distance(&z).as_f64(),
        psi: psi_unchecked(&x, &z, inputs, penalty.as_ref()).as_f64(),
        converged,
        improvements,
        relative_improvements,
        utilities: utilities.iter().map(|u| u.as_f64()).collect(),
        violations,
        feasible,
        penalty_weight: penalty.as_ref().map(|p| p.weight.as_f64()),
        certified: None,
        seed: cfg.rng_seed,
    };
    Ok((x, report))
}
