//! Empirical certification that no agent gains by deviating unilaterally.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::best_response::{validate_all, CoordinateSearch};
use super::{objectives, EquilibriumReport, LemaPenalty, RelaxationConfig};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sim::{CropLayout, Evaluator, JointStrategy, ScenarioInputs};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    /// Step of the deviation grid; `1 / step` should be an integer.
    pub deviation_grid: f64,
    /// Coordinate searches from random starts per agent.
    pub restarts: usize,
    pub seed: u64,
    /// Certification threshold on relative improvement.
    pub tolerance: f64,
    /// Settings of the coordinate searches.
    pub search: RelaxationConfig,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            deviation_grid: 0.05,
            restarts: 3,
            seed: 7,
            tolerance: 1e-3,
            search: RelaxationConfig::default(),
        }
    }
}

/// Searches each agent's unilateral deviations from `x`: single-coordinate
/// grid probes, constant-share block probes, a warm-started coordinate
/// search and coordinate searches from seeded random starts.
pub fn verify_equilibrium<T: Scalar>(
    x: &JointStrategy<T>,
    inputs: &ScenarioInputs<T>,
    lema: Option<&LemaPenalty<T>>,
    vcfg: &VerifyConfig,
) -> Result<EquilibriumReport> {
    validate_all(x, inputs, lema, &vcfg.search)?;
    if !(vcfg.deviation_grid > 0.0 && vcfg.deviation_grid <= 0.5) {
        return Err(Error::config("deviation_grid", "must lie in (0, 0.5]"));
    }
    let layout = inputs.layout()?;
    let n = inputs.n_agents();
    let steps = (1.0 / vcfg.deviation_grid).round().max(1.0) as usize;
    let grid: Vec<T> = (0..=steps)
        .map(|s| T::from_usize_lossy(s) / T::from_usize_lossy(steps))
        .collect();

    let mut ev = Evaluator::new(inputs);
    let mut base = vec![T::zero(); n];
    objectives(&mut ev, x, lema, &mut base);

    let per_agent: Vec<(T, T, Vec<T>)> = (0..n)
        .into_par_iter()
        .map(|i| agent_gap(i, x, inputs, lema, vcfg, layout, &grid, base[i]))
        .collect();

    let mut utilities = vec![T::zero(); n];
    objectives(&mut ev, x, None, &mut utilities);
    let improvements: Vec<f64> = per_agent.iter().map(|p| p.0.as_f64()).collect();
    let relative_improvements: Vec<f64> = improvements
        .iter()
        .zip(&utilities)
        .map(|(d, u)| d / u.as_f64().abs().max(1.0))
        .collect();
    let mut z = x.clone();
    for (i, p) in per_agent.iter().enumerate() {
        z.set_agent_block(i, &p.2);
    }
    let psi: T = per_agent.iter().map(|p| p.1).sum();
    let (violations, feasible) = match lema {
        Some(p) => (
            p.constraint.violations(inputs, x).iter().map(|v| v.as_f64()).collect(),
            p.constraint.is_satisfied(inputs, x),
        ),
        None => (vec![0.0; n], true),
    };
    let certified = relative_improvements.iter().all(|r| *r <= vcfg.tolerance);
    Ok(EquilibriumReport {
        iterations: 0,
        residual: x.sup_distance(&z).as_f64(),
        psi: psi.as_f64(),
        converged: certified,
        improvements,
        relative_improvements,
        utilities: utilities.iter().map(|u| u.as_f64()).collect(),
        violations,
        feasible,
        penalty_weight: lema.map(|p| p.weight.as_f64()),
        certified: Some(certified),
        seed: vcfg.seed,
    })
}

/// Returns (largest gain found, warm-start best-response gain, warm-start block).
#[allow(clippy::too_many_arguments)]
fn agent_gap<T: Scalar>(
    i: usize,
    x: &JointStrategy<T>,
    inputs: &ScenarioInputs<T>,
    lema: Option<&LemaPenalty<T>>,
    vcfg: &VerifyConfig,
    layout: CropLayout,
    grid: &[T],
    base: T,
) -> (T, T, Vec<T>) {
    let h = inputs.horizon;
    let mut ev = Evaluator::new(inputs);
    let mut out = vec![T::zero(); inputs.n_agents()];
    let mut best = base;
    let mut work = x.clone();
    let mut probe = |w: &JointStrategy<T>, best: &mut T| {
        objectives(&mut ev, w, lema, &mut out);
        if out[i] > *best {
            *best = out[i];
        }
    };

    // one coordinate at a time
    for t in 0..h {
        if let Some((a, b)) = layout.pair() {
            let (oa, ob) = (work.get(i, a, t), work.get(i, b, t));
            for &g in grid {
                work.set(i, a, t, g);
                work.set(i, b, t, T::one() - g);
                probe(&work, &mut best);
            }
            work.set(i, a, t, oa);
            work.set(i, b, t, ob);
        }
        if let Some(c) = layout.free() {
            let oc = work.get(i, c, t);
            for &g in grid {
                work.set(i, c, t, g);
                probe(&work, &mut best);
            }
            work.set(i, c, t, oc);
        }
    }

    // the same shares in every year
    let frees: &[T] = if layout.free().is_some() { grid } else { &grid[..1] };
    let pairs: &[T] = if layout.pair().is_some() { grid } else { &grid[..1] };
    for &g in pairs {
        for &w in frees {
            let block = JointStrategy::from_shares(1, layout, h, |_, _| (g, w));
            work.set_agent_block(i, block.as_slice());
            probe(&work, &mut best);
        }
    }

    let mut search = CoordinateSearch::new(inputs, lema, &vcfg.search);
    let warm = search.run(i, x);
    best = best.max(warm.objective);
    let mut rng = ChaCha8Rng::seed_from_u64(vcfg.seed.wrapping_add(i as u64));
    for _ in 0..vcfg.restarts {
        let start = JointStrategy::from_shares(1, layout, h, |_, _| {
            let a: f64 = rng.gen();
            let w: f64 = rng.gen();
            (T::lit(a), T::lit(w))
        });
        let r = search.run_from(i, x, start.as_slice());
        best = best.max(r.objective);
    }
    ((best - base).max(T::zero()), warm.objective - base, warm.block)
}
