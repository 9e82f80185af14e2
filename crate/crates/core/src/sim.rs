//! Forward multi-year simulation of the irrigation economy.
//!
//! Within a year all agents' harvests are known before the market clears, so
//! crop prices react to the year's total supply. Costs are then charged and
//! the aquifer is advanced. Years run strictly in sequence.

use serde::{Deserialize, Serialize};

use crate::agronomy::CropResponse;
use crate::econ::{CostParams, EnergyParams, MarketParams};
use crate::error::{Error, Result};
use crate::hydro::{self, AquiferState, FlowNetwork, HydroParams};
use crate::scalar::Scalar;
use crate::units::{ACRE_M2, MM_PER_M};

/// Tolerance on the land-share constraints.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// How crop indices map onto land constraints. Crops `0` and `1` (when both
/// present) share the summer land and must sum to one; the remaining crop
/// (index 2 with three crops, index 0 with one crop) is a free winter share.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CropLayout {
    n_crops: usize,
}

impl CropLayout {
    pub fn new(n_crops: usize) -> Result<Self> {
        if !(1..=3).contains(&n_crops) {
            return Err(Error::invalid(format!("between 1 and 3 crops supported, got {n_crops}")));
        }
        Ok(Self { n_crops })
    }

    pub fn n_crops(self) -> usize {
        self.n_crops
    }

    /// Indices of the summer pair whose shares sum to one.
    pub fn pair(self) -> Option<(usize, usize)> {
        (self.n_crops >= 2).then_some((0, 1))
    }

    /// Index of the independently bounded crop.
    pub fn free(self) -> Option<usize> {
        match self.n_crops {
            1 => Some(0),
            3 => Some(2),
            _ => None,
        }
    }

    /// Number of scalar decision variables per year.
    pub fn vars_per_year(self) -> usize {
        usize::from(self.pair().is_some()) + usize::from(self.free().is_some())
    }
}

/// Land fractions `x[i][k][t]` for every agent, crop and year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointStrategy<T> {
    n_agents: usize,
    n_crops: usize,
    horizon: usize,
    data: Vec<T>,
}

impl<T: Scalar> JointStrategy<T> {
    pub fn filled(n_agents: usize, n_crops: usize, horizon: usize, v: T) -> Self {
        Self {
            n_agents,
            n_crops,
            horizon,
            data: vec![v; n_agents * n_crops * horizon],
        }
    }

    pub fn from_fn(n_agents: usize, n_crops: usize, horizon: usize, mut f: impl FnMut(usize, usize, usize) -> T) -> Self {
        let mut s = Self::filled(n_agents, n_crops, horizon, T::zero());
        for i in 0..n_agents {
            for k in 0..n_crops {
                for t in 0..horizon {
                    s.set(i, k, t, f(i, k, t));
                }
            }
        }
        s
    }

    /// Strategy from per-year reduced variables: summer share `alpha` of
    /// crop 0 (crop 1 gets the rest) and free share `w`.
    pub fn from_shares(n_agents: usize, layout: CropLayout, horizon: usize, mut f: impl FnMut(usize, usize) -> (T, T)) -> Self {
        let mut s = Self::filled(n_agents, layout.n_crops(), horizon, T::zero());
        for i in 0..n_agents {
            for t in 0..horizon {
                let (alpha, w) = f(i, t);
                if let Some((a, b)) = layout.pair() {
                    s.set(i, a, t, alpha);
                    s.set(i, b, t, T::one() - alpha);
                }
                if let Some(c) = layout.free() {
                    s.set(i, c, t, w);
                }
            }
        }
        s
    }

    pub fn from_vec(n_agents: usize, n_crops: usize, horizon: usize, data: Vec<T>) -> Result<Self> {
        let expected = n_agents * n_crops * horizon;
        if data.len() != expected {
            return Err(Error::LengthMismatch {
                what: "strategy entries",
                expected,
                got: data.len(),
            });
        }
        Ok(Self {
            n_agents,
            n_crops,
            horizon,
            data,
        })
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }
    pub fn n_crops(&self) -> usize {
        self.n_crops
    }
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    #[inline]
    fn idx(&self, i: usize, k: usize, t: usize) -> usize {
        (i * self.n_crops + k) * self.horizon + t
    }

    /// Entry for agent `i`, crop `k`, year index `t` (all 0-based).
    #[inline]
    pub fn get(&self, i: usize, k: usize, t: usize) -> T {
        self.data[self.idx(i, k, t)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, k: usize, t: usize, v: T) {
        let j = self.idx(i, k, t);
        self.data[j] = v;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    fn block_len(&self) -> usize {
        self.n_crops * self.horizon
    }

    /// Agent `i`'s `K x T` block, crop-major.
    pub fn agent_block(&self, i: usize) -> &[T] {
        let l = self.block_len();
        &self.data[i * l..(i + 1) * l]
    }

    pub fn set_agent_block(&mut self, i: usize, block: &[T]) {
        let l = self.block_len();
        self.data[i * l..(i + 1) * l].copy_from_slice(block);
    }

    /// `y_i | x`: this strategy with agent `i`'s block replaced.
    pub fn with_agent_block(&self, i: usize, block: &[T]) -> Self {
        let mut s = self.clone();
        s.set_agent_block(i, block);
        s
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.n_agents == other.n_agents && self.n_crops == other.n_crops && self.horizon == other.horizon
    }

    /// Sup-norm distance.
    pub fn sup_distance(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()))
    }

    /// Checks the box and summer-pair constraints.
    pub fn check_feasible(&self) -> Result<()> {
        let layout = CropLayout::new(self.n_crops)?;
        let tol = T::lit(FEASIBILITY_TOL);
        for (j, v) in self.data.iter().enumerate() {
            if !v.is_finite() || *v < -tol || *v > T::one() + tol {
                let t = j % self.horizon;
                let k = (j / self.horizon) % self.n_crops;
                let i = j / (self.horizon * self.n_crops);
                return Err(Error::Infeasible(format!(
                    "x[agent {}][crop {}][year {}] = {v} outside [0, 1]",
                    i + 1,
                    k + 1,
                    t + 1
                )));
            }
        }
        if let Some((a, b)) = layout.pair() {
            for i in 0..self.n_agents {
                for t in 0..self.horizon {
                    let s = self.get(i, a, t) + self.get(i, b, t);
                    if (s - T::one()).abs() > tol {
                        return Err(Error::Infeasible(format!(
                            "summer shares of agent {} in year {} sum to {s}",
                            i + 1,
                            t + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Fully resolved model inputs for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct ScenarioInputs<T> {
    pub horizon: usize,
    /// Irrigable area of each agent, m².
    pub areas: Vec<T>,
    pub hydro: HydroParams<T>,
    pub network: FlowNetwork<T>,
    /// `responses[t][k]`: crop outputs for year index `t`.
    pub responses: Vec<Vec<CropResponse<T>>>,
    pub market: MarketParams<T>,
    pub cost: CostParams<T>,
    pub energy: EnergyParams<T>,
    /// Net replenishment per year, meters.
    pub replenishment: Vec<T>,
    /// Per-year utility discount factor in (0, 1]; 1 disables discounting.
    pub discount: T,
}

impl<T: Scalar> ScenarioInputs<T> {
    pub fn n_agents(&self) -> usize {
        self.areas.len()
    }

    pub fn n_crops(&self) -> usize {
        self.market.crops.len()
    }

    pub fn layout(&self) -> Result<CropLayout> {
        CropLayout::new(self.n_crops())
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_agents();
        let k = self.n_crops();
        CropLayout::new(k)?;
        if n == 0 {
            return Err(Error::invalid("at least one agent required"));
        }
        if self.horizon == 0 {
            return Err(Error::invalid("horizon must be >= 1"));
        }
        if self.areas.iter().any(|a| !(*a >= T::zero()) || !a.is_finite()) {
            return Err(Error::invalid("agent areas must be finite and >= 0"));
        }
        self.hydro.validate()?;
        let check = |what: &'static str, expected: usize, got: usize| -> Result<()> {
            if expected == got {
                Ok(())
            } else {
                Err(Error::LengthMismatch { what, expected, got })
            }
        };
        check("initial heads", n, self.hydro.initial_state.heads.len())?;
        check("flow network agents", n, self.network.n_agents())?;
        check("surface elevations", n, self.energy.surface_elevation.len())?;
        check("cost crops", k, self.cost.crops.len())?;
        check("response years", self.horizon, self.responses.len())?;
        check("replenishment years", self.horizon, self.replenishment.len())?;
        for row in &self.responses {
            check("response crops", k, row.len())?;
            row.iter().try_for_each(|r| r.validate())?;
        }
        if self.replenishment.iter().any(|r| !r.is_finite()) {
            return Err(Error::invalid("replenishment must be finite"));
        }
        self.market.validate()?;
        self.cost.validate()?;
        self.energy.validate()?;
        if !(self.discount > T::zero() && self.discount <= T::one()) {
            return Err(Error::invalid("discount factor must lie in (0, 1]"));
        }
        Ok(())
    }

    pub(crate) fn check_strategy(&self, x: &JointStrategy<T>) -> Result<()> {
        if x.n_agents() != self.n_agents() || x.n_crops() != self.n_crops() || x.horizon() != self.horizon {
            return Err(Error::invalid(format!(
                "strategy shape {}x{}x{} does not match inputs {}x{}x{}",
                x.n_agents(),
                x.n_crops(),
                x.horizon(),
                self.n_agents(),
                self.n_crops(),
                self.horizon
            )));
        }
        x.check_feasible()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentYear<T> {
    pub revenue: T,
    pub extraction_cost: T,
    pub production_cost: T,
    pub net_gain: T,
    /// Water pumped this year, m³.
    pub pumped: T,
    /// Harvest per crop, bushels.
    pub quantities: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult<T> {
    /// `years[t][i]`.
    pub years: Vec<Vec<AgentYear<T>>>,
    /// Market prices `prices[t][k]`, $/bushel.
    pub prices: Vec<Vec<T>>,
    /// Aquifer state at the start of each year plus the final state (`T + 1` entries).
    pub heads: Vec<AquiferState<T>>,
    /// Discounted utility per agent.
    pub utilities: Vec<T>,
    pub discount: T,
    /// Agent-years where the total lift was negative and pumping cost floored at 0.
    pub floored_pumping: usize,
}

impl<T: Scalar> SimulationResult<T> {
    pub fn horizon(&self) -> usize {
        self.years.len()
    }

    pub fn n_agents(&self) -> usize {
        self.utilities.len()
    }

    /// Discounted re-summation of the yearly net gains of agent `i`.
    pub fn resummed_utility(&self, i: usize) -> T {
        let mut w = T::one();
        let mut acc = T::zero();
        for y in &self.years {
            acc += w * y[i].net_gain;
            w *= self.discount;
        }
        acc
    }
}

/// Bushels harvested from `area` m² at `yield_per_m2` bushels/m² on share `x`.
pub fn harvest_quantity<T: Scalar>(area: T, yield_per_m2: T, x: T) -> Result<T> {
    if !(area >= T::zero()) || !(yield_per_m2 >= T::zero()) || !(x >= T::zero()) || x > T::one() {
        return Err(Error::invalid("harvest inputs must be >= 0 with share <= 1"));
    }
    Ok(area * yield_per_m2 * x)
}

/// Head depletion (m) of agent `i` in year index `t` from transpiration and
/// irrigation, given that year's crop responses.
pub fn depletion<T: Scalar>(i: usize, t: usize, strategy: &JointStrategy<T>, responses: &[CropResponse<T>]) -> Result<T> {
    if i >= strategy.n_agents() {
        return Err(Error::IndexOutOfRange {
            what: "agent",
            index: i,
            len: strategy.n_agents(),
        });
    }
    if t >= strategy.horizon() {
        return Err(Error::IndexOutOfRange {
            what: "year",
            index: t,
            len: strategy.horizon(),
        });
    }
    if responses.len() != strategy.n_crops() {
        return Err(Error::LengthMismatch {
            what: "crop responses",
            expected: strategy.n_crops(),
            got: responses.len(),
        });
    }
    let mm = T::lit(MM_PER_M);
    Ok(responses
        .iter()
        .enumerate()
        .map(|(k, r)| (r.transpiration + r.irrigation) / mm * strategy.get(i, k, t))
        .sum())
}

/// Runs the full simulation of `strategy` under `inputs`.
pub fn run_simulation<T: Scalar>(strategy: &JointStrategy<T>, inputs: &ScenarioInputs<T>) -> Result<SimulationResult<T>> {
    inputs.validate()?;
    inputs.check_strategy(strategy)?;
    let mut ev = Evaluator::new(inputs);
    let n = inputs.n_agents();
    let mut rec = Recording {
        years: Vec::with_capacity(inputs.horizon),
        prices: Vec::with_capacity(inputs.horizon),
        heads: vec![inputs.hydro.initial_state.clone()],
        floored: 0,
    };
    let mut utils = vec![T::zero(); n];
    let init = inputs.hydro.initial_state.clone();
    ev.run(strategy, 0, &init, &mut utils, None, Some(&mut rec));
    Ok(SimulationResult {
        years: rec.years,
        prices: rec.prices,
        heads: rec.heads,
        utilities: utils,
        discount: inputs.discount,
        floored_pumping: rec.floored,
    })
}

/// Total water pumped by agent `i` (0-based) over the 1-based `years`, m³.
pub fn pumped_window<T: Scalar>(result: &SimulationResult<T>, i: usize, years: &[usize]) -> Result<T> {
    if years.is_empty() {
        return Err(Error::invalid("pumping window is empty"));
    }
    if i >= result.n_agents() {
        return Err(Error::IndexOutOfRange {
            what: "agent",
            index: i,
            len: result.n_agents(),
        });
    }
    let mut acc = T::zero();
    for &y in years {
        if y == 0 || y > result.horizon() {
            return Err(Error::invalid(format!("window year {y} outside 1..={}", result.horizon())));
        }
        acc += result.years[y - 1][i].pumped;
    }
    Ok(acc)
}

/// Per-year pumped volume `A_i * sum_k IR_k(t) x_k(t)` computed from an
/// agent's block alone; independent of other agents.
pub(crate) fn agent_pumping<T: Scalar>(inputs: &ScenarioInputs<T>, i: usize, block: &[T], out: &mut [T]) {
    let h = inputs.horizon;
    let mm = T::lit(MM_PER_M);
    for (t, o) in out.iter_mut().enumerate().take(h) {
        let mut ir = T::zero();
        for (k, r) in inputs.responses[t].iter().enumerate() {
            ir += r.irrigation / mm * block[k * h + t];
        }
        *o = inputs.areas[i] * ir;
    }
}

pub(crate) struct Recording<T> {
    years: Vec<Vec<AgentYear<T>>>,
    prices: Vec<Vec<T>>,
    heads: Vec<AquiferState<T>>,
    floored: usize,
}

/// Per-year constants resolved once per evaluator.
#[derive(Debug, Clone)]
struct YearConsts<T> {
    p0: Vec<T>,
    pinf: Vec<T>,
    c0: Vec<T>,
    cinf: Vec<T>,
    /// θ/ρ · g(t)
    ep_coeff: T,
    weight: T,
    yield_m2: Vec<T>,
    ir_m: Vec<T>,
    dep_m: Vec<T>,
    replenishment: T,
}

/// States and accumulated utilities at the start of every year, used to
/// restart a simulation mid-horizon.
#[derive(Debug, Clone)]
pub(crate) struct Snapshots<T> {
    pub states: Vec<AquiferState<T>>,
    pub utils: Vec<Vec<T>>,
}

impl<T: Scalar> Snapshots<T> {
    pub fn new(horizon: usize, init: &AquiferState<T>, n: usize) -> Self {
        Self {
            states: vec![init.clone(); horizon + 1],
            utils: vec![vec![T::zero(); n]; horizon + 1],
        }
    }
}

/// Allocation-free simulator for repeated utility evaluation.
pub(crate) struct Evaluator<'a, T: Scalar> {
    inputs: &'a ScenarioInputs<T>,
    consts: Vec<YearConsts<T>>,
    qbar: Vec<Option<T>>,
    abar: Vec<T>,
    pressure: T,
    cur: AquiferState<T>,
    next: AquiferState<T>,
    depl: Vec<T>,
    qty: Vec<T>,
    supply: Vec<T>,
    prices: Vec<T>,
}

impl<'a, T: Scalar> Evaluator<'a, T> {
    pub fn new(inputs: &'a ScenarioInputs<T>) -> Self {
        let n = inputs.n_agents();
        let k = inputs.n_crops();
        let mm = T::lit(MM_PER_M);
        let acre = T::lit(ACRE_M2);
        let mut weight = T::one();
        let consts = (0..inputs.horizon)
            .map(|t| {
                let tt = T::from_usize_lossy(t + 1);
                let mf: Vec<T> = inputs
                    .market
                    .crops
                    .iter()
                    .map(|c| crate::econ::trend_factor(c.tau, tt))
                    .collect();
                let cf: Vec<T> = inputs
                    .cost
                    .crops
                    .iter()
                    .map(|c| crate::econ::trend_factor(c.theta, tt))
                    .collect();
                let e = &inputs.energy;
                let yc = YearConsts {
                    p0: inputs.market.crops.iter().zip(&mf).map(|(c, f)| c.p0_init * *f).collect(),
                    pinf: inputs.market.crops.iter().zip(&mf).map(|(c, f)| c.pinf_init * *f).collect(),
                    c0: inputs.cost.crops.iter().zip(&cf).map(|(c, f)| c.c0_init * *f).collect(),
                    cinf: inputs.cost.crops.iter().zip(&cf).map(|(c, f)| c.cinf_init * *f).collect(),
                    ep_coeff: e.gas_per_lift / e.pump_efficiency * crate::econ::gas_price(e, tt),
                    weight,
                    yield_m2: inputs.responses[t].iter().map(|r| r.yield_bu_per_acre / acre).collect(),
                    ir_m: inputs.responses[t].iter().map(|r| r.irrigation / mm).collect(),
                    dep_m: inputs.responses[t]
                        .iter()
                        .map(|r| (r.transpiration + r.irrigation) / mm)
                        .collect(),
                    replenishment: inputs.replenishment[t],
                };
                weight *= inputs.discount;
                yc
            })
            .collect();
        let init = &inputs.hydro.initial_state;
        Self {
            inputs,
            consts,
            qbar: inputs.market.crops.iter().map(|c| c.qbar).collect(),
            abar: inputs.cost.crops.iter().map(|c| c.abar).collect(),
            pressure: inputs.energy.pressure_head_m(),
            cur: init.clone(),
            next: init.clone(),
            depl: vec![T::zero(); n],
            qty: vec![T::zero(); n * k],
            supply: vec![T::zero(); k],
            prices: vec![T::zero(); k],
        }
    }

    pub fn inputs(&self) -> &'a ScenarioInputs<T> {
        self.inputs
    }

    /// Discounted utilities of every agent for the whole horizon.
    pub fn utilities(&mut self, x: &JointStrategy<T>, out: &mut [T]) {
        out.iter_mut().for_each(|u| *u = T::zero());
        let init = &self.inputs.hydro.initial_state;
        self.run(x, 0, init, out, None, None);
    }

    /// Simulates years `start..T` beginning from `state`, adding discounted
    /// net gains into `utils`. When `snaps` is given, the state and utilities
    /// at the start of each simulated year (and the end) are stored.
    pub fn run(
        &mut self,
        x: &JointStrategy<T>,
        start: usize,
        state: &AquiferState<T>,
        utils: &mut [T],
        mut snaps: Option<&mut Snapshots<T>>,
        mut rec: Option<&mut Recording<T>>,
    ) {
        let n = self.inputs.n_agents();
        let kk = self.inputs.n_crops();
        let h = self.inputs.horizon;
        self.cur.heads.copy_from_slice(&state.heads);
        self.cur.boundary_head = state.boundary_head;
        self.cur.year = state.year;
        let gamma = self.inputs.hydro.gamma;
        for t in start..h {
            if let Some(s) = snaps.as_deref_mut() {
                s.states[t].clone_from(&self.cur);
                s.utils[t].copy_from_slice(utils);
            }
            let yc = &self.consts[t];
            self.supply.iter_mut().for_each(|s| *s = T::zero());
            for i in 0..n {
                let a = self.inputs.areas[i];
                for k in 0..kk {
                    let q = a * yc.yield_m2[k] * x.get(i, k, t);
                    self.qty[i * kk + k] = q;
                    self.supply[k] += q;
                }
            }
            for k in 0..kk {
                self.prices[k] = match self.qbar[k] {
                    Some(q) => yc.pinf[k] + (yc.p0[k] - yc.pinf[k]) * (-self.supply[k] / q).exp(),
                    None => yc.p0[k],
                };
            }
            let mut year_rec = rec.as_ref().map(|_| Vec::with_capacity(n));
            for i in 0..n {
                let a = self.inputs.areas[i];
                let mut revenue = T::zero();
                let mut ir = T::zero();
                let mut production = T::zero();
                let mut dep = T::zero();
                for k in 0..kk {
                    let xk = x.get(i, k, t);
                    revenue += self.prices[k] * self.qty[i * kk + k];
                    ir += yc.ir_m[k] * xk;
                    dep += yc.dep_m[k] * xk;
                    let area = a * xk;
                    let c = yc.cinf[k] + (yc.c0[k] - yc.cinf[k]) * (-area / self.abar[k]).exp();
                    production += c * area;
                }
                let lift = self.inputs.energy.surface_elevation[i] - self.cur.heads[i] + self.pressure;
                let (ep, floored) = if lift < T::zero() {
                    (T::zero(), true)
                } else {
                    (yc.ep_coeff * lift, false)
                };
                let extraction = a * ep * ir;
                let net = revenue - (extraction + production);
                utils[i] += yc.weight * net;
                self.depl[i] = dep;
                if let Some(v) = year_rec.as_mut() {
                    v.push(AgentYear {
                        revenue,
                        extraction_cost: extraction,
                        production_cost: production,
                        net_gain: net,
                        pumped: a * ir,
                        quantities: self.qty[i * kk..(i + 1) * kk].to_vec(),
                    });
                    if floored {
                        if let Some(r) = rec.as_deref_mut() {
                            r.floored += 1;
                        }
                    }
                }
            }
            hydro::step_into(&self.cur, &self.inputs.network, gamma, yc.replenishment, &self.depl, &mut self.next);
            std::mem::swap(&mut self.cur, &mut self.next);
            if let Some(r) = rec.as_deref_mut() {
                r.years.push(year_rec.take().unwrap_or_default());
                r.prices.push(self.prices.clone());
                r.heads.push(self.cur.clone());
            }
        }
        if let Some(s) = snaps {
            s.states[h].clone_from(&self.cur);
            s.utils[h].copy_from_slice(utils);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::econ::{CropCost, CropMarket};

    fn resp(tr: f64, ir: f64, y: f64) -> CropResponse<f64> {
        CropResponse {
            transpiration: tr,
            irrigation: ir,
            evapotranspiration: tr + 100.0,
            season_precip: 200.0,
            yield_bu_per_acre: y,
        }
    }

    /// N = 1, K = 1, T = 1 with small integers.
    fn tiny_inputs() -> ScenarioInputs<f64> {
        ScenarioInputs {
            horizon: 1,
            areas: vec![ACRE_M2 * 10.0],
            hydro: HydroParams {
                gamma: 1.0,
                initial_state: AquiferState::new(vec![90.0], 100.0),
            },
            network: FlowNetwork::new(vec![vec![0.0, 0.1], vec![0.1, 0.0]]).unwrap(),
            responses: vec![vec![resp(200.0, 300.0, 100.0)]],
            market: MarketParams {
                crops: vec![CropMarket {
                    p0_init: 4.0,
                    pinf_init: 2.0,
                    qbar: Some(1000.0),
                    tau: None,
                }],
            },
            cost: CostParams {
                crops: vec![CropCost {
                    c0_init: 0.05,
                    cinf_init: 0.03,
                    abar: 20000.0,
                    theta: None,
                }],
            },
            energy: EnergyParams {
                gas_per_lift: 0.001,
                pump_efficiency: 0.5,
                gauge_pressure_psi: 10.0,
                gas_price_init: 3.0,
                zeta: None,
                surface_elevation: vec![120.0],
            },
            replenishment: vec![0.05],
            discount: 1.0,
        }
    }

    #[test]
    fn layout_rules() {
        assert!(CropLayout::new(0).is_err());
        assert!(CropLayout::new(4).is_err());
        let l1 = CropLayout::new(1).unwrap();
        assert_eq!((l1.pair(), l1.free(), l1.vars_per_year()), (None, Some(0), 1));
        let l2 = CropLayout::new(2).unwrap();
        assert_eq!((l2.pair(), l2.free(), l2.vars_per_year()), (Some((0, 1)), None, 1));
        let l3 = CropLayout::new(3).unwrap();
        assert_eq!((l3.pair(), l3.free(), l3.vars_per_year()), (Some((0, 1)), Some(2), 2));
    }

    #[test]
    fn feasibility_checks() {
        let l = CropLayout::new(3).unwrap();
        let ok = JointStrategy::from_shares(2, l, 3, |_, _| (0.3, 0.7));
        assert!(ok.check_feasible().is_ok());
        let mut bad = ok.clone();
        bad.set(1, 2, 2, 1.2);
        assert!(matches!(bad.check_feasible(), Err(Error::Infeasible(_))));
        let mut bad = ok.clone();
        bad.set(0, 0, 1, 0.5);
        assert!(bad.check_feasible().is_err());
    }

    #[test]
    fn harvest_examples() {
        assert_eq!(harvest_quantity(1000.0, 0.04, 0.0).unwrap(), 0.0);
        // 1000 acres at ~150 bu/acre, half the land
        let q = harvest_quantity(4_046_856.0f64, 0.0371, 0.5).unwrap();
        assert!((q - 75_069.18).abs() < 0.01, "{q}");
        let a = harvest_quantity(5000.0f64, 0.03, 0.2).unwrap();
        let b = harvest_quantity(5000.0, 0.03, 0.4).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-12);
        assert!(harvest_quantity(-1.0, 0.03, 0.4).is_err());
        assert!(harvest_quantity(1.0, 0.03, 1.4).is_err());
    }

    #[test]
    fn depletion_examples() {
        let r = vec![resp(300.0, 250.0, 1.0), resp(200.0, 150.0, 1.0), resp(150.0, 100.0, 1.0)];
        let l = CropLayout::new(3).unwrap();
        let corn = JointStrategy::from_shares(1, l, 1, |_, _| (1.0, 0.0));
        let sorghum = JointStrategy::from_shares(1, l, 1, |_, _| (0.0, 0.0));
        let half = JointStrategy::from_shares(1, l, 1, |_, _| (0.5, 0.0));
        let dc = depletion(0, 0, &corn, &r).unwrap();
        let ds = depletion(0, 0, &sorghum, &r).unwrap();
        assert!((dc - 0.55).abs() < 1e-12);
        assert!((depletion(0, 0, &half, &r).unwrap() - 0.5 * (dc + ds)).abs() < 1e-12);

        let summer_zero = vec![resp(0.0, 0.0, 1.0), resp(0.0, 0.0, 1.0), resp(150.0, 100.0, 1.0)];
        assert_eq!(depletion(0, 0, &sorghum, &summer_zero).unwrap(), 0.0);
        assert!(depletion(1, 0, &corn, &r).is_err());
        assert!(depletion(0, 0, &corn, &r[..2]).is_err());
    }

    #[test]
    fn tiny_fixture_matches_hand_evaluation() {
        let inputs = tiny_inputs();
        let x = JointStrategy::from_vec(1, 1, 1, vec![0.5]).unwrap();
        let res = run_simulation(&x, &inputs).unwrap();

        // hand evaluation, step by step
        let area = ACRE_M2 * 10.0;
        let yield_m2 = 100.0 / ACRE_M2;
        let q = area * yield_m2 * 0.5; // 500 bu
        let price = 2.0 + 2.0 * (-q / 1000.0f64).exp();
        let revenue = price * q;
        let lift = 120.0 - 90.0 + 2.31 * 10.0 * 0.3048;
        let ep = 0.001 / 0.5 * 3.0 * lift;
        let extraction = area * ep * (0.3 * 0.5);
        let planted = area * 0.5;
        let c = 0.03 + 0.02 * (-planted / 20000.0f64).exp();
        let production = c * planted;
        let utility = revenue - (extraction + production);
        assert!((q - 500.0).abs() < 1e-9);
        assert!((res.utilities[0] - utility).abs() < 1e-9 * utility.abs());
        let y = &res.years[0][0];
        assert!((y.revenue - revenue).abs() < 1e-9);
        assert!((y.pumped - area * 0.15).abs() < 1e-9);

        // heads: 90 + 0.05 - 0.25 + 0.1 * (100 - 90)
        assert!((res.heads[1].heads[0] - (90.0 + 0.05 - 0.25 + 1.0)).abs() < 1e-12);
        assert_eq!(res.heads[1].boundary_head, 99.0);
        assert_eq!(res.heads.len(), 2);
    }

    #[test]
    fn zero_prices_give_negative_costs() {
        let mut inputs = tiny_inputs();
        inputs.market.crops[0].p0_init = 0.0;
        inputs.market.crops[0].pinf_init = 0.0;
        inputs.horizon = 3;
        inputs.responses = vec![inputs.responses[0].clone(); 3];
        inputs.replenishment = vec![0.0; 3];
        let x = JointStrategy::filled(1, 1, 3, 0.7);
        let res = run_simulation(&x, &inputs).unwrap();
        let costs: f64 = res
            .years
            .iter()
            .map(|y| {
                assert_eq!(y[0].revenue, 0.0);
                y[0].extraction_cost + y[0].production_cost
            })
            .sum();
        assert!((res.utilities[0] + costs).abs() < 1e-9 * costs);
    }

    #[test]
    fn discounting_and_resummation() {
        let mut inputs = tiny_inputs();
        inputs.horizon = 4;
        inputs.responses = vec![inputs.responses[0].clone(); 4];
        inputs.replenishment = vec![0.01; 4];
        inputs.discount = 0.97;
        let x = JointStrategy::filled(1, 1, 4, 0.6);
        let res = run_simulation(&x, &inputs).unwrap();
        assert!((res.utilities[0] - res.resummed_utility(0)).abs() < 1e-9 * res.utilities[0].abs());
        let manual: f64 = res
            .years
            .iter()
            .enumerate()
            .map(|(t, y)| 0.97f64.powi(t as i32) * y[0].net_gain)
            .sum();
        assert!((res.utilities[0] - manual).abs() < 1e-9 * manual.abs());
    }

    #[test]
    fn pumped_window_rules() {
        let mut inputs = tiny_inputs();
        inputs.horizon = 4;
        inputs.responses = vec![inputs.responses[0].clone(); 4];
        inputs.replenishment = vec![0.0; 4];
        let x = JointStrategy::filled(1, 1, 4, 0.5);
        let res = run_simulation(&x, &inputs).unwrap();
        let single = pumped_window(&res, 0, &[2]).unwrap();
        assert!((single - ACRE_M2 * 10.0 * 0.3 * 0.5).abs() < 1e-9);
        let a = pumped_window(&res, 0, &[1, 2]).unwrap();
        let b = pumped_window(&res, 0, &[3, 4]).unwrap();
        let all = pumped_window(&res, 0, &[1, 2, 3, 4]).unwrap();
        assert!((a + b - all).abs() < 1e-9);
        assert!(pumped_window(&res, 0, &[]).is_err());
        assert!(pumped_window(&res, 0, &[5]).is_err());
        assert!(pumped_window(&res, 1, &[1]).is_err());

        inputs.responses = vec![vec![resp(200.0, 0.0, 100.0)]; 4];
        let res = run_simulation(&x, &inputs).unwrap();
        assert_eq!(pumped_window(&res, 0, &[1, 2, 3, 4]).unwrap(), 0.0);
    }

    #[test]
    fn rejects_infeasible_or_misshapen() {
        let inputs = tiny_inputs();
        let x = JointStrategy::from_vec(1, 1, 1, vec![1.5]).unwrap();
        assert!(run_simulation(&x, &inputs).is_err());
        let x = JointStrategy::filled(2, 1, 1, 0.5);
        assert!(run_simulation(&x, &inputs).is_err());
    }

    #[test]
    fn evaluator_restart_matches_full_run() {
        let mut inputs = tiny_inputs();
        inputs.horizon = 5;
        inputs.responses = vec![inputs.responses[0].clone(); 5];
        inputs.replenishment = vec![0.02; 5];
        let x = JointStrategy::from_fn(1, 1, 5, |_, _, t| 0.1 * t as f64 + 0.2);
        let mut ev = Evaluator::new(&inputs);
        let mut snaps = Snapshots::new(5, &inputs.hydro.initial_state, 1);
        let mut full = vec![0.0];
        ev.run(&x, 0, &inputs.hydro.initial_state, &mut full, Some(&mut snaps), None);
        for start in 0..5 {
            let mut u = snaps.utils[start].clone();
            let s = snaps.states[start].clone();
            ev.run(&x, start, &s, &mut u, None, None);
            assert_eq!(u, full);
        }
    }
}
