//! Best responses by cyclic coordinate ascent with golden-section line search.

use rayon::prelude::*;

use super::{LemaPenalty, RelaxationConfig, LEMA_TOLERANCE};
use crate::error::Result;
use crate::scalar::Scalar;
use crate::sim::{agent_pumping, CropLayout, Evaluator, JointStrategy, ScenarioInputs, Snapshots};
use crate::units::MM_PER_M;

/// An agent's best response and how it was reached.
#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse<T> {
    /// Agent's `K x T` block, crop-major.
    pub block: Vec<T>,
    /// Objective (utility minus any LEMA penalty) at `block`.
    pub objective: T,
    /// Objective at the warm start.
    pub start_objective: T,
    pub sweeps: usize,
    /// False when the sweep budget ran out while still improving.
    pub converged: bool,
}

/// Best response of agent `i` (0-based) to `x`, warm-started at `x_i`.
pub fn best_response<T: Scalar>(
    i: usize,
    x: &JointStrategy<T>,
    inputs: &ScenarioInputs<T>,
    lema: Option<&LemaPenalty<T>>,
    cfg: &RelaxationConfig,
) -> Result<BestResponse<T>> {
    validate_all(x, inputs, lema, cfg)?;
    if i >= inputs.n_agents() {
        return Err(crate::Error::IndexOutOfRange {
            what: "agent",
            index: i,
            len: inputs.n_agents(),
        });
    }
    Ok(CoordinateSearch::new(inputs, lema, cfg).run(i, x))
}

/// `z(x)`: every agent's best response against the same frozen `x`.
pub fn optimum_response<T: Scalar>(
    x: &JointStrategy<T>,
    inputs: &ScenarioInputs<T>,
    lema: Option<&LemaPenalty<T>>,
    cfg: &RelaxationConfig,
) -> Result<JointStrategy<T>> {
    validate_all(x, inputs, lema, cfg)?;
    Ok(optimum_unchecked(x, inputs, lema, cfg, None).0)
}

pub(crate) fn validate_all<T: Scalar>(
    x: &JointStrategy<T>,
    inputs: &ScenarioInputs<T>,
    lema: Option<&LemaPenalty<T>>,
    cfg: &RelaxationConfig,
) -> Result<()> {
    cfg.validate()?;
    inputs.validate()?;
    inputs.check_strategy(x)?;
    if let Some(p) = lema {
        p.constraint.validate(inputs.n_agents(), inputs.horizon)?;
    }
    Ok(())
}

pub(crate) fn optimum_unchecked<T: Scalar>(
    x: &JointStrategy<T>,
    inputs: &ScenarioInputs<T>,
    lema: Option<&LemaPenalty<T>>,
    cfg: &RelaxationConfig,
    hint: Option<&JointStrategy<T>>,
) -> (JointStrategy<T>, Vec<BestResponse<T>>) {
    let responses: Vec<BestResponse<T>> = (0..inputs.n_agents())
        .into_par_iter()
        .map(|i| {
            let mut search = CoordinateSearch::new(inputs, lema, cfg);
            match hint {
                Some(h) => search.run_hinted(i, x, h.agent_block(i)),
                None => search.run(i, x),
            }
        })
        .collect();
    let mut z = x.clone();
    for (i, r) in responses.iter().enumerate() {
        z.set_agent_block(i, &r.block);
    }
    (z, responses)
}

/// Which reduced variable of a year is being searched.
#[derive(Debug, Clone, Copy)]
enum Var {
    /// Summer share of crop 0; crop 1 receives `1 - v`.
    Pair(usize),
    Free(usize),
}

impl Var {
    fn year(self) -> usize {
        match self {
            Var::Pair(t) | Var::Free(t) => t,
        }
    }
}

/// Reusable state for coordinate ascent on one agent.
pub(crate) struct CoordinateSearch<'a, T: Scalar> {
    ev: Evaluator<'a, T>,
    snaps: Snapshots<T>,
    utils: Vec<T>,
    pumped: Vec<T>,
    lema: Option<&'a LemaPenalty<T>>,
    layout: CropLayout,
    grid: T,
    tol: T,
    sweeps: usize,
}

impl<'a, T: Scalar> CoordinateSearch<'a, T> {
    pub fn new(inputs: &'a ScenarioInputs<T>, lema: Option<&'a LemaPenalty<T>>, cfg: &RelaxationConfig) -> Self {
        let n = inputs.n_agents();
        Self {
            ev: Evaluator::new(inputs),
            snaps: Snapshots::new(inputs.horizon, &inputs.hydro.initial_state, n),
            utils: vec![T::zero(); n],
            pumped: vec![T::zero(); inputs.horizon],
            lema,
            layout: CropLayout::new(inputs.n_crops()).expect("validated crop count"),
            grid: T::lit(cfg.br_grid),
            tol: T::lit(cfg.epsilon / 10.0),
            sweeps: cfg.br_sweeps,
        }
    }

    fn horizon(&self) -> usize {
        self.ev.inputs().horizon
    }

    /// Recomputes cached year-start states from year `t` and returns the objective.
    fn refresh(&mut self, i: usize, work: &JointStrategy<T>, t: usize) -> T {
        let state = self.snaps.states[t].clone();
        let mut utils = self.snaps.utils[t].clone();
        self.ev.run(work, t, &state, &mut utils, Some(&mut self.snaps), None);
        utils[i] - self.penalty(i, work)
    }

    /// Objective of agent `i` when only years `t..` differ from the cache.
    fn eval_from(&mut self, i: usize, work: &JointStrategy<T>, t: usize) -> T {
        self.utils.copy_from_slice(&self.snaps.utils[t]);
        let Self { ev, snaps, utils, .. } = self;
        ev.run(work, t, &snaps.states[t], utils, None, None);
        self.utils[i] - self.penalty(i, work)
    }

    fn penalty(&mut self, i: usize, work: &JointStrategy<T>) -> T {
        match self.lema {
            Some(p) => p.penalty_with(self.ev.inputs(), i, work.agent_block(i), &mut self.pumped),
            None => T::zero(),
        }
    }

    fn vars(&self) -> Vec<Var> {
        let mut v = Vec::with_capacity(self.horizon() * self.layout.vars_per_year());
        for t in 0..self.horizon() {
            if self.layout.pair().is_some() {
                v.push(Var::Pair(t));
            }
            if self.layout.free().is_some() {
                v.push(Var::Free(t));
            }
        }
        v
    }

    fn get(&self, work: &JointStrategy<T>, i: usize, var: Var) -> T {
        match var {
            Var::Pair(t) => work.get(i, 0, t),
            Var::Free(t) => work.get(i, self.layout.free().unwrap_or(0), t),
        }
    }

    fn set(&self, work: &mut JointStrategy<T>, i: usize, var: Var, v: T) {
        match var {
            Var::Pair(t) => {
                work.set(i, 0, t, v);
                work.set(i, 1, t, T::one() - v);
            }
            Var::Free(t) => work.set(i, self.layout.free().unwrap_or(0), t, v),
        }
    }

    /// Coordinate ascent for agent `i` starting from `x`.
    pub fn run(&mut self, i: usize, x: &JointStrategy<T>) -> BestResponse<T> {
        self.run_from(i, x, x.agent_block(i))
    }

    /// Coordinate ascent for agent `i` against `x`, started from `hint` when
    /// that already beats `x_i` and from `x_i` otherwise.
    pub fn run_hinted(&mut self, i: usize, x: &JointStrategy<T>, hint: &[T]) -> BestResponse<T> {
        let base = self.refresh(i, x, 0);
        let margin = T::lit(1e-12) * base.abs().max(T::one());
        let start = if hint != x.agent_block(i) && self.refresh(i, &x.with_agent_block(i, hint), 0) > base + margin {
            hint
        } else {
            x.agent_block(i)
        };
        let mut r = self.run_from(i, x, start);
        r.start_objective = base;
        r
    }

    /// Coordinate ascent for agent `i` starting from block `start` against `x`.
    pub fn run_from(&mut self, i: usize, x: &JointStrategy<T>, start: &[T]) -> BestResponse<T> {
        let mut work = x.clone();
        work.set_agent_block(i, start);
        let start_obj = self.refresh(i, &work, 0);
        let mut obj = start_obj;
        let vars = self.vars();
        let mut sweeps = 0;
        let mut converged = false;
        while sweeps < self.sweeps {
            sweeps += 1;
            let sweep_start = obj;
            for &var in &vars {
                let t = var.year();
                if let Some((v, f)) = self.line_search(i, &mut work, var, t, obj) {
                    self.set(&mut work, i, var, v);
                    obj = f;
                    self.refresh(i, &work, t);
                }
            }
            obj = self.transfer_pass(i, &mut work, obj);
            if obj - sweep_start < self.tol {
                converged = true;
                break;
            }
        }
        BestResponse {
            block: work.agent_block(i).to_vec(),
            objective: obj,
            start_objective: start_obj,
            sweeps,
            converged,
        }
    }

    /// Golden-section search on `[0, 1]` plus both endpoints. Returns the best
    /// candidate when it beats the incumbent objective `current`; `work` is
    /// left at the incumbent value either way.
    fn line_search(&mut self, i: usize, work: &mut JointStrategy<T>, var: Var, t: usize, current: T) -> Option<(T, T)> {
        let incumbent = self.get(work, i, var);
        let grid = self.grid;
        let best = self.golden(T::zero(), T::one(), grid, |s, v| {
            s.set(work, i, var, v);
            s.eval_from(i, work, t)
        });
        self.set(work, i, var, incumbent);
        let margin = T::lit(1e-12) * current.abs().max(T::one());
        (best.1 > current + margin).then_some(best)
    }

    /// Maximizes `f` over `[lo, hi]` by golden-section search to width `tol`,
    /// also trying both ends.
    fn golden(&mut self, lo: T, hi: T, tol: T, mut f: impl FnMut(&mut Self, T) -> T) -> (T, T) {
        let r = T::lit(0.618_033_988_749_894_9);
        let (mut a, mut b) = (lo, hi);
        let mut c = b - r * (b - a);
        let mut d = a + r * (b - a);
        let mut fc = f(self, c);
        let mut fd = f(self, d);
        while b - a > tol {
            if fc >= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - r * (b - a);
                fc = f(self, c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + r * (b - a);
                fd = f(self, d);
            }
        }
        let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
        for end in [lo, hi] {
            let fe = f(self, end);
            if fe > best.1 {
                best = (end, fe);
            }
        }
        best
    }

    /// Pumped volume per unit change of `var`, m³.
    fn sensitivity(&self, i: usize, var: Var) -> T {
        let inputs = self.ev.inputs();
        let ir = |k: usize, t: usize| inputs.responses[t][k].irrigation;
        let per_m = inputs.areas[i] / T::lit(MM_PER_M);
        match var {
            Var::Pair(t) => per_m * (ir(0, t) - ir(1, t)),
            Var::Free(t) => per_m * ir(self.layout.free().unwrap_or(0), t),
        }
    }

    /// Moves between pairs of variables of each nearly binding LEMA window
    /// that leave the window's pumped volume unchanged. Coordinate moves
    /// alone stall on the penalty ridge.
    fn transfer_pass(&mut self, i: usize, work: &mut JointStrategy<T>, mut obj: T) -> T {
        let Some(lema) = self.lema else {
            return obj;
        };
        let inputs = self.ev.inputs();
        agent_pumping(inputs, i, work.agent_block(i), &mut self.pumped);
        let near = T::one() - T::lit(LEMA_TOLERANCE);
        let vars = self.vars();
        for (w, years) in lema.constraint.windows.iter().enumerate() {
            let used: T = years.iter().map(|y| self.pumped[y - 1]).sum();
            if used < near * lema.constraint.limits[i][w] {
                continue;
            }
            let wv: Vec<(Var, T)> = vars
                .iter()
                .filter(|v| years.contains(&(v.year() + 1)))
                .map(|&v| (v, self.sensitivity(i, v)))
                .filter(|(_, c)| c.abs() > T::epsilon())
                .collect();
            for a in 0..wv.len() {
                for b in a + 1..wv.len() {
                    obj = self.transfer(i, work, wv[a], wv[b], obj);
                }
            }
        }
        obj
    }

    /// Line search along `u += s / cu`, `v -= s / cv`.
    fn transfer(&mut self, i: usize, work: &mut JointStrategy<T>, (u, cu): (Var, T), (v, cv): (Var, T), obj: T) -> T {
        let (u0, v0) = (self.get(work, i, u), self.get(work, i, v));
        let span = |x0: T, c: T, sign: T| {
            let (p, q) = (-x0 * c * sign, (T::one() - x0) * c * sign);
            (p.min(q), p.max(q))
        };
        let (ul, uh) = span(u0, cu, T::one());
        let (vl, vh) = span(v0, cv, -T::one());
        let (lo, hi) = (ul.max(vl), uh.min(vh));
        let tol = self.grid * cu.abs().min(cv.abs());
        if hi - lo <= tol {
            return obj;
        }
        let t = u.year().min(v.year());
        let apply = |s: &Self, w: &mut JointStrategy<T>, step: T| {
            s.set(w, i, u, (u0 + step / cu).max(T::zero()).min(T::one()));
            s.set(w, i, v, (v0 - step / cv).max(T::zero()).min(T::one()));
        };
        let best = self.golden(lo, hi, tol, |s, step| {
            apply(s, work, step);
            s.eval_from(i, work, t)
        });
        let margin = T::lit(1e-12) * obj.abs().max(T::one());
        if best.1 > obj + margin {
            apply(self, work, best.0);
            self.refresh(i, work, t);
            best.1
        } else {
            self.set(work, i, u, u0);
            self.set(work, i, v, v0);
            obj
        }
    }
}
