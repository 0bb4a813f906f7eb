//! Shared fixtures for the benchmark suite.

use execopt::{CostModel, GridSpec, ImpactModel};

/// The reference problem: `gamma`, power-law `delta`, `n` intervals, `T = 1`, `X = 0.1`.
pub fn reference_model(gamma: f64, delta: f64, n: usize) -> CostModel {
    let grid = GridSpec::new(n, 1.0, 0.1).expect("valid grid");
    CostModel::new(gamma, ImpactModel::power_law(delta), grid).expect("valid model")
}
