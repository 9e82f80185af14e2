//! Lumped groundwater head dynamics.
//!
//! The aquifer is an exchange network of `N + 1` cells: one cell per agent plus
//! a surrounding boundary cell (index 0 of the flow matrix). Each year every
//! agent head gains the net replenishment, loses its depletion, and relaxes
//! toward its neighbours through a diffusive exchange term. The boundary head
//! falls linearly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Groundwater heads at one time step. Heads may go negative; they are
/// reported as-is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AquiferState<T> {
    /// Agent heads `G_1..G_N` in meters.
    pub heads: Vec<T>,
    /// Boundary head `G_0` in meters.
    pub boundary_head: T,
    /// Time index; the initial state is year 0.
    pub year: u32,
}

impl<T: Scalar> AquiferState<T> {
    pub fn new(heads: Vec<T>, boundary_head: T) -> Self {
        Self {
            heads,
            boundary_head,
            year: 0,
        }
    }

    pub fn n_agents(&self) -> usize {
        self.heads.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !self.boundary_head.is_finite() || self.heads.iter().any(|h| !h.is_finite()) {
            return Err(Error::invalid("aquifer heads must be finite"));
        }
        Ok(())
    }

    /// Head of cell `cell` in flow-matrix indexing (0 = boundary).
    #[inline]
    fn cell_head(&self, cell: usize) -> T {
        if cell == 0 {
            self.boundary_head
        } else {
            self.heads[cell - 1]
        }
    }
}

/// Symmetric per-year flow-rate constants `a_{i,j}` between the `N + 1` cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<T>>", into = "Vec<Vec<T>>")]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct FlowNetwork<T> {
    n_agents: usize,
    coeffs: Vec<T>,
}

impl<T: Scalar> FlowNetwork<T> {
    /// Builds a network from a full `(N+1) x (N+1)` matrix, checking
    /// non-negativity, zero diagonal, symmetry and the explicit-scheme
    /// stability bound on every agent row.
    pub fn new(matrix: Vec<Vec<T>>) -> Result<Self> {
        let size = matrix.len();
        if size < 2 {
            return Err(Error::invalid("flow matrix needs at least one agent plus the boundary"));
        }
        let mut coeffs = Vec::with_capacity(size * size);
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != size {
                return Err(Error::LengthMismatch {
                    what: "flow matrix row",
                    expected: size,
                    got: row.len(),
                });
            }
            for (j, &a) in row.iter().enumerate() {
                if !a.is_finite() || a < T::zero() {
                    return Err(Error::invalid(format!("a[{i}][{j}] must be finite and >= 0")));
                }
                if i == j && a != T::zero() {
                    return Err(Error::invalid(format!("a[{i}][{i}] must be 0 (self-flow)")));
                }
            }
            coeffs.extend_from_slice(row);
        }
        for i in 0..size {
            for j in (i + 1)..size {
                if coeffs[i * size + j] != coeffs[j * size + i] {
                    return Err(Error::invalid(format!("flow matrix not symmetric at ({i},{j})")));
                }
            }
        }
        for i in 1..size {
            let row_sum: T = coeffs[i * size..(i + 1) * size].iter().copied().sum();
            if row_sum > T::one() {
                return Err(Error::invalid(format!(
                    "row {i} of the flow matrix sums to {row_sum} > 1 (unstable explicit step)"
                )));
            }
        }
        Ok(Self {
            n_agents: size - 1,
            coeffs,
        })
    }

    /// Network with every coefficient zero.
    pub fn isolated(n_agents: usize) -> Self {
        let size = n_agents + 1;
        Self {
            n_agents,
            coeffs: vec![T::zero(); size * size],
        }
    }

    /// Builds a network from agent-agent edges (1-based agent indices) plus a
    /// uniform boundary coupling.
    pub fn from_edges(n_agents: usize, edges: &[(usize, usize, T)], boundary: T) -> Result<Self> {
        let size = n_agents + 1;
        let mut m = vec![vec![T::zero(); size]; size];
        for i in 1..size {
            m[i][0] = boundary;
            m[0][i] = boundary;
        }
        for &(a, b, v) in edges {
            if a == 0 || b == 0 || a > n_agents || b > n_agents {
                return Err(Error::invalid(format!("edge ({a},{b}) outside 1..={n_agents}")));
            }
            m[a][b] = v;
            m[b][a] = v;
        }
        Self::new(m)
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    /// Coefficient between cells `i` and `j` (0 = boundary).
    #[inline]
    pub fn coeff(&self, i: usize, j: usize) -> T {
        self.coeffs[i * (self.n_agents + 1) + j]
    }

    pub fn to_matrix(&self) -> Vec<Vec<T>> {
        let size = self.n_agents + 1;
        self.coeffs.chunks(size).map(|r| r.to_vec()).collect()
    }
}

impl<T: Scalar> TryFrom<Vec<Vec<T>>> for FlowNetwork<T> {
    type Error = Error;

    fn try_from(m: Vec<Vec<T>>) -> Result<Self> {
        Self::new(m)
    }
}

impl<T: Scalar> From<FlowNetwork<T>> for Vec<Vec<T>> {
    fn from(net: FlowNetwork<T>) -> Self {
        net.to_matrix()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HydroParams<T> {
    /// Boundary drawdown rate in meters per year.
    pub gamma: T,
    pub initial_state: AquiferState<T>,
}

impl<T: Scalar> HydroParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !self.gamma.is_finite() || self.gamma < T::zero() {
            return Err(Error::invalid("gamma must be finite and >= 0"));
        }
        self.initial_state.validate()
    }
}

/// Net replenishment `P - E` in meters per year. Negative in dry years.
pub fn net_replenishment<T: Scalar>(precip_total: T, evaporation_total: T) -> Result<T> {
    if !(precip_total >= T::zero()) || !(evaporation_total >= T::zero()) {
        return Err(Error::invalid(format!(
            "precipitation ({precip_total}) and evaporation ({evaporation_total}) must be >= 0"
        )));
    }
    Ok(precip_total - evaporation_total)
}

/// Diffusive exchange `sum_j a_{i,j} (G_j - G_i)` for agent `agent`
/// (0-based, i.e. flow-matrix row `agent + 1`).
pub fn net_exchange<T: Scalar>(state: &AquiferState<T>, net: &FlowNetwork<T>, agent: usize) -> Result<T> {
    let n = net.n_agents();
    if state.heads.len() != n {
        return Err(Error::LengthMismatch {
            what: "aquifer heads",
            expected: n,
            got: state.heads.len(),
        });
    }
    if agent >= n {
        return Err(Error::IndexOutOfRange {
            what: "agent",
            index: agent,
            len: n,
        });
    }
    Ok(exchange_unchecked(state, net, agent + 1))
}

#[inline]
fn exchange_unchecked<T: Scalar>(state: &AquiferState<T>, net: &FlowNetwork<T>, cell: usize) -> T {
    let own = state.cell_head(cell);
    let mut acc = T::zero();
    for j in 0..=net.n_agents() {
        if j != cell {
            acc += net.coeff(cell, j) * (state.cell_head(j) - own);
        }
    }
    acc
}

/// Advances heads by one year. The input state is left untouched.
pub fn step_heads<T: Scalar>(
    state: &AquiferState<T>,
    net: &FlowNetwork<T>,
    params: &HydroParams<T>,
    replenishment: T,
    depletion: &[T],
) -> Result<AquiferState<T>> {
    let n = net.n_agents();
    if state.heads.len() != n {
        return Err(Error::LengthMismatch {
            what: "aquifer heads",
            expected: n,
            got: state.heads.len(),
        });
    }
    if depletion.len() != n {
        return Err(Error::LengthMismatch {
            what: "depletion",
            expected: n,
            got: depletion.len(),
        });
    }
    if depletion.iter().any(|d| !(*d >= T::zero())) {
        return Err(Error::invalid("depletion entries must be >= 0"));
    }
    let mut next = AquiferState {
        heads: vec![T::zero(); n],
        boundary_head: state.boundary_head - params.gamma,
        year: state.year + 1,
    };
    step_into(state, net, params.gamma, replenishment, depletion, &mut next);
    Ok(next)
}

/// Unchecked step used on the simulation hot path; `next` must be sized.
#[inline]
pub(crate) fn step_into<T: Scalar>(
    state: &AquiferState<T>,
    net: &FlowNetwork<T>,
    gamma: T,
    replenishment: T,
    depletion: &[T],
    next: &mut AquiferState<T>,
) {
    for (i, d) in depletion.iter().enumerate() {
        next.heads[i] = state.heads[i] + replenishment - *d + exchange_unchecked(state, net, i + 1);
    }
    next.boundary_head = state.boundary_head - gamma;
    next.year = state.year + 1;
}
