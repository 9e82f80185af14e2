//! Nash equilibria of the irrigation game by Nikaido-Isoda relaxation.
//!
//! Each agent's decision per year reduces to two scalars: the summer share
//! `alpha` of crop 0 (crop 1 takes the rest) and the free winter share `w`.
//! Best responses are found by cyclic coordinate ascent over those scalars.

mod best_response;
mod lema;
mod relax;
mod verify;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sim::{CropLayout, Evaluator, JointStrategy, ScenarioInputs};

pub use best_response::{best_response, optimum_response, BestResponse};
pub use lema::{five_year_windows, lema_limits, LemaConstraint, LemaPenalty, LEMA_TOLERANCE};
pub use relax::{random_strategy, relax_to_equilibrium};
pub use verify::{verify_equilibrium, VerifyConfig};

/// Hyperparameters of the relaxation solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RelaxationConfig {
    /// Relaxation step `eta` in (0, 1).
    pub eta: f64,
    /// Stop when `||z(x) - x||_inf < epsilon`.
    pub epsilon: f64,
    pub max_iters: usize,
    pub rng_seed: u64,
    /// Bracket width at which a golden-section line search stops.
    pub br_grid: f64,
    /// Maximum coordinate sweeps per best response.
    pub br_sweeps: usize,
    /// Initial LEMA penalty weight; derived from the problem scale when absent.
    pub penalty_init: Option<f64>,
    pub penalty_growth: f64,
}

impl Default for RelaxationConfig {
    fn default() -> Self {
        Self {
            eta: 0.1,
            epsilon: 1e-4,
            max_iters: 500,
            rng_seed: 42,
            br_grid: 1e-3,
            br_sweeps: 20,
            penalty_init: None,
            penalty_growth: 10.0,
        }
    }
}

impl RelaxationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: &str| Err(Error::config(field, msg));
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return bad("eta", "must lie in (0, 1)");
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return bad("epsilon", "must be > 0");
        }
        if self.max_iters == 0 {
            return bad("max_iters", "must be >= 1");
        }
        if !(self.br_grid > 0.0 && self.br_grid <= 0.5) {
            return bad("br_grid", "must lie in (0, 0.5]");
        }
        if self.br_sweeps == 0 {
            return bad("br_sweeps", "must be >= 1");
        }
        if let Some(p) = self.penalty_init {
            if !(p > 0.0) || !p.is_finite() {
                return bad("penalty_init", "must be > 0");
            }
        }
        if !(self.penalty_growth >= 1.0) || !self.penalty_growth.is_finite() {
            return bad("penalty_growth", "must be >= 1");
        }
        Ok(())
    }
}

/// Outcome of a relaxation run or a certification pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub iterations: usize,
    /// `||z(x) - x||_inf` at the returned strategy.
    pub residual: f64,
    /// `psi(x, z(x))` at the returned strategy.
    pub psi: f64,
    pub converged: bool,
    /// Largest unilateral utility gain found per agent (absolute, >= 0).
    pub improvements: Vec<f64>,
    /// `improvements[i] / max(|U_i|, 1)`.
    pub relative_improvements: Vec<f64>,
    pub utilities: Vec<f64>,
    /// Worst LEMA excess per agent, m³ (0 when within limits).
    pub violations: Vec<f64>,
    /// False when any agent exceeds a LEMA limit by more than the tolerance.
    pub feasible: bool,
    /// Final LEMA penalty weight, when a constraint was active.
    pub penalty_weight: Option<f64>,
    /// Set by certification: every relative improvement within tolerance.
    pub certified: Option<bool>,
    pub seed: u64,
}

impl EquilibriumReport {
    pub fn max_relative_improvement(&self) -> f64 {
        self.relative_improvements.iter().fold(0.0, |m, v| m.max(*v))
    }
}

/// Projects onto the land constraints: the summer pair onto
/// `{x0 + x1 = 1, x >= 0}` and the free share onto `[0, 1]`. Idempotent.
pub fn project_to_feasible<T: Scalar>(x: &JointStrategy<T>) -> Result<JointStrategy<T>> {
    let mut y = x.clone();
    project_in_place(&mut y)?;
    Ok(y)
}

pub(crate) fn project_in_place<T: Scalar>(x: &mut JointStrategy<T>) -> Result<()> {
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("strategy has non-finite entries"));
    }
    let layout = CropLayout::new(x.n_crops())?;
    for i in 0..x.n_agents() {
        for t in 0..x.horizon() {
            if let Some((a, b)) = layout.pair() {
                let (p, q) = project_pair(x.get(i, a, t), x.get(i, b, t));
                x.set(i, a, t, p);
                x.set(i, b, t, q);
            }
            if let Some(c) = layout.free() {
                x.set(i, c, t, clamp01(x.get(i, c, t)));
            }
        }
    }
    Ok(())
}

#[inline]
pub(crate) fn clamp01<T: Scalar>(v: T) -> T {
    v.max(T::zero()).min(T::one())
}

/// Euclidean projection of `(p, q)` onto the segment `p + q = 1, p, q >= 0`.
fn project_pair<T: Scalar>(p: T, q: T) -> (T, T) {
    let half = T::lit(0.5);
    let excess = p + q - T::one();
    let a = clamp01(p - excess * half);
    (a, T::one() - a)
}

/// `psi(x, y) = sum_i [U_i(y_i | x) - U_i(x)]`.
pub fn nikaido_isoda<T: Scalar>(x: &JointStrategy<T>, y: &JointStrategy<T>, inputs: &ScenarioInputs<T>) -> Result<T> {
    inputs.validate()?;
    inputs.check_strategy(x)?;
    inputs.check_strategy(y)?;
    Ok(psi_unchecked(x, y, inputs, None))
}

/// Utility of every agent, minus the LEMA penalty when given.
pub(crate) fn objectives<T: Scalar>(ev: &mut Evaluator<'_, T>, x: &JointStrategy<T>, lema: Option<&LemaPenalty<T>>, out: &mut [T]) {
    ev.utilities(x, out);
    if let Some(p) = lema {
        for (i, u) in out.iter_mut().enumerate() {
            *u -= p.penalty(ev.inputs(), i, x.agent_block(i));
        }
    }
}

pub(crate) fn psi_unchecked<T: Scalar>(x: &JointStrategy<T>, y: &JointStrategy<T>, inputs: &ScenarioInputs<T>, lema: Option<&LemaPenalty<T>>) -> T {
    let n = inputs.n_agents();
    let mut ev = Evaluator::new(inputs);
    let mut base = vec![T::zero(); n];
    objectives(&mut ev, x, lema, &mut base);
    let mut dev = vec![T::zero(); n];
    let mut work = x.clone();
    let mut acc = T::zero();
    for i in 0..n {
        work.set_agent_block(i, y.agent_block(i));
        objectives(&mut ev, &work, lema, &mut dev);
        acc += dev[i] - base[i];
        work.set_agent_block(i, x.agent_block(i));
    }
    acc
}
