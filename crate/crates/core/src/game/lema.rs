//! Pumping caps per agent over multi-year windows, enforced by an exterior
//! quadratic penalty on the excess.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sim::{agent_pumping, pumped_window, JointStrategy, ScenarioInputs, SimulationResult};

/// Relative excess over a limit that still counts as compliant.
pub const LEMA_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct LemaConstraint<T> {
    /// Consecutive 1-based year blocks covering the horizon.
    pub windows: Vec<Vec<usize>>,
    /// `limits[i][w]`: cap on agent `i` over window `w`, m³.
    pub limits: Vec<Vec<T>>,
}

/// Consecutive 5-year windows over `1..=horizon`; the last one is shorter
/// when the horizon is not a multiple of five.
pub fn five_year_windows(horizon: usize) -> Vec<Vec<usize>> {
    (1..=horizon)
        .collect::<Vec<_>>()
        .chunks(5)
        .map(|c| c.to_vec())
        .collect()
}

impl<T: Scalar> LemaConstraint<T> {
    pub fn validate(&self, n_agents: usize, horizon: usize) -> Result<()> {
        let mut seen = vec![false; horizon];
        for w in &self.windows {
            if w.is_empty() {
                return Err(Error::invalid("LEMA window is empty"));
            }
            for pair in w.windows(2) {
                if pair[1] != pair[0] + 1 {
                    return Err(Error::invalid("LEMA window years must be consecutive"));
                }
            }
            for &y in w {
                if y == 0 || y > horizon {
                    return Err(Error::invalid(format!("LEMA window year {y} outside 1..={horizon}")));
                }
                if std::mem::replace(&mut seen[y - 1], true) {
                    return Err(Error::invalid(format!("LEMA windows overlap at year {y}")));
                }
            }
        }
        if let Some(y) = seen.iter().position(|s| !s) {
            return Err(Error::invalid(format!("LEMA windows miss year {}", y + 1)));
        }
        if self.limits.len() != n_agents {
            return Err(Error::LengthMismatch {
                what: "LEMA agents",
                expected: n_agents,
                got: self.limits.len(),
            });
        }
        for row in &self.limits {
            if row.len() != self.windows.len() {
                return Err(Error::LengthMismatch {
                    what: "LEMA windows",
                    expected: self.windows.len(),
                    got: row.len(),
                });
            }
            if row.iter().any(|l| !(*l >= T::zero()) || !l.is_finite()) {
                return Err(Error::invalid("LEMA limits must be finite and >= 0"));
            }
        }
        Ok(())
    }

    /// Excess over each window's limit for agent `i` given yearly pumping.
    fn excesses<'a>(&'a self, i: usize, pumped: &'a [T]) -> impl Iterator<Item = (T, T)> + 'a {
        self.windows.iter().zip(&self.limits[i]).map(move |(w, l)| {
            let used: T = w.iter().map(|y| pumped[y - 1]).sum();
            ((used - *l).max(T::zero()), *l)
        })
    }

    /// Worst absolute excess per agent, m³.
    pub fn violations(&self, inputs: &ScenarioInputs<T>, x: &JointStrategy<T>) -> Vec<T> {
        let mut pumped = vec![T::zero(); inputs.horizon];
        (0..inputs.n_agents())
            .map(|i| {
                agent_pumping(inputs, i, x.agent_block(i), &mut pumped);
                self.excesses(i, &pumped).fold(T::zero(), |m, (e, _)| m.max(e))
            })
            .collect()
    }

    /// Largest excess relative to its limit over all agents and windows.
    pub fn worst_relative_violation(&self, inputs: &ScenarioInputs<T>, x: &JointStrategy<T>) -> T {
        let mut pumped = vec![T::zero(); inputs.horizon];
        let mut worst = T::zero();
        for i in 0..inputs.n_agents() {
            agent_pumping(inputs, i, x.agent_block(i), &mut pumped);
            for (e, l) in self.excesses(i, &pumped) {
                let r = if l > T::zero() {
                    e / l
                } else if e > T::zero() {
                    T::infinity()
                } else {
                    T::zero()
                };
                worst = worst.max(r);
            }
        }
        worst
    }

    /// True when every excess is within [`LEMA_TOLERANCE`] of its limit.
    pub fn is_satisfied(&self, inputs: &ScenarioInputs<T>, x: &JointStrategy<T>) -> bool {
        self.worst_relative_violation(inputs, x) <= T::lit(LEMA_TOLERANCE)
    }
}

/// A LEMA constraint together with its current penalty weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct LemaPenalty<T> {
    pub constraint: LemaConstraint<T>,
    pub weight: T,
}

impl<T: Scalar> LemaPenalty<T> {
    /// `weight * sum_w max(0, W_iw - L_iw)^2` for agent `i`'s block.
    pub fn penalty(&self, inputs: &ScenarioInputs<T>, i: usize, block: &[T]) -> T {
        let mut pumped = vec![T::zero(); inputs.horizon];
        self.penalty_with(inputs, i, block, &mut pumped)
    }

    pub(crate) fn penalty_with(&self, inputs: &ScenarioInputs<T>, i: usize, block: &[T], pumped: &mut [T]) -> T {
        agent_pumping(inputs, i, block, pumped);
        self.weight * self.constraint.excesses(i, pumped).map(|(e, _)| e * e).sum::<T>()
    }
}

/// Caps each agent at fraction `f` of its pumping in `baseline`, per 5-year window.
pub fn lema_limits<T: Scalar>(baseline: &SimulationResult<T>, fraction: T) -> Result<LemaConstraint<T>> {
    if !(fraction > T::zero() && fraction <= T::one()) {
        return Err(Error::invalid(format!("LEMA fraction {fraction} outside (0, 1]")));
    }
    let windows = five_year_windows(baseline.horizon());
    let limits = (0..baseline.n_agents())
        .map(|i| {
            windows
                .iter()
                .map(|w| pumped_window(baseline, i, w).map(|v| fraction * v))
                .collect::<Result<Vec<T>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LemaConstraint { windows, limits })
}
