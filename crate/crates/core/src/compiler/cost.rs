//! Round accounting against the bound shape `r′·D·Δ³·log²n`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::private_trees::ceil_log2;

use super::CompiledAlgorithm;

/// Constant used for the predicted bound of a single compilation; corpus
/// runs refit it with [`fit_constant`].
pub const DEFAULT_CONSTANT: f64 = 4.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RoundCost {
    pub source_rounds: usize,
    /// Rounds after gate decomposition, `Σ max(t_i, 1) ≤ r·t`.
    pub compiled_rounds: usize,
    pub max_gates: usize,
    pub diameter: usize,
    pub max_degree: usize,
    pub nodes: usize,
    pub shape: f64,
    pub measured: usize,
    pub predicted: f64,
}

pub fn bound_shape(compiled_rounds: usize, diameter: usize, max_degree: usize, nodes: usize) -> f64 {
    let log = ceil_log2(nodes).max(1) as f64;
    compiled_rounds as f64 * diameter.max(1) as f64 * (max_degree as f64).powi(3) * log * log
}

/// Measures an execution on all-zero inputs and evaluates the bound shape.
pub fn round_cost(c: &CompiledAlgorithm) -> Result<RoundCost> {
    let g = &c.graph;
    let shape = bound_shape(c.spec.rounds, g.diameter().unwrap_or(0), g.max_degree(), g.node_count());
    Ok(RoundCost {
        source_rounds: c.source.rounds,
        compiled_rounds: c.spec.rounds,
        max_gates: c.source.max_circuit_size(),
        diameter: g.diameter().unwrap_or(0),
        max_degree: g.max_degree(),
        nodes: g.node_count(),
        shape,
        measured: c.measure_rounds()?,
        predicted: DEFAULT_CONSTANT * shape,
    })
}

/// Smallest `C` with `measured ≤ C·shape` on every entry.
pub fn fit_constant(costs: &[RoundCost]) -> f64 {
    costs
        .iter()
        .filter(|c| c.shape > 0.0)
        .map(|c| c.measured as f64 / c.shape)
        .fold(0.0, f64::max)
}
