//! Constrained minimization of the discretized cost.
//!
//! Every optimizer keeps the volume constraint `sum_i v_i = N X / T` satisfied
//! by construction: the smooth local minimizer moves only along zero-sum
//! directions and the pattern search exchanges volume between two intervals.

mod local;
mod multistart;
mod pattern;
mod sampling;

use serde::{Deserialize, Serialize};

pub use local::{local_minimize, projected_gradient_norm};
pub use multistart::{deduplicate, multistart_minimize, MultistartOutcome};
pub use pattern::monotone_minimize_gss;
pub use sampling::sample_start_points;

use crate::cost::CostModel;
use crate::error::{Error, Result};
use crate::kernel::vwap_strategy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerOptions {
    /// Quasi-Newton iterations per start, or accepted moves for the pattern search.
    pub max_iterations: usize,
    /// Absolute bound on the projected-gradient norm; `None` uses `1e-9` times [`gradient_scale`].
    pub gradient_tolerance: Option<f64>,
    /// Step length, relative to `X/T`, below which an optimizer stops.
    pub step_tolerance: f64,
    pub seed: u64,
    pub starts: usize,
    /// Restrict to `v_i >= 0` and use the pattern search.
    pub monotone: bool,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            max_iterations: 5000,
            gradient_tolerance: None,
            step_tolerance: 1e-12,
            seed: 0,
            starts: 1000,
            monotone: false,
        }
    }
}

impl OptimizerOptions {
    /// Defaults for the monotone pattern search.
    pub fn monotone() -> Self {
        OptimizerOptions {
            max_iterations: 10_000_000,
            step_tolerance: 1e-9,
            monotone: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.starts == 0 {
            return Err(Error::Parameter("at least one start is required".into()));
        }
        if self.step_tolerance.is_nan() || self.step_tolerance <= 0.0 {
            return Err(Error::Parameter("step tolerance must be positive".into()));
        }
        if let Some(tol) = self.gradient_tolerance {
            if tol.is_nan() || tol <= 0.0 {
                return Err(Error::Parameter("gradient tolerance must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn resolved_gradient_tolerance(&self, model: &CostModel) -> Result<f64> {
        match self.gradient_tolerance {
            Some(tol) => Ok(tol),
            None => Ok(1e-9 * gradient_scale(model)?),
        }
    }
}

/// Typical gradient norm: `|C_VWAP| / (sqrt(N) |X/T|)`.
pub fn gradient_scale(model: &CostModel) -> Result<f64> {
    let vwap = vwap_strategy(&model.grid);
    let cost = model.expected_cost(&vwap.rates)?.abs();
    let scale = cost / ((model.size() as f64).sqrt() * model.grid.mean_rate().abs());
    if scale > 0.0 && scale.is_finite() {
        Ok(scale)
    } else {
        Err(Error::Parameter("cannot derive a gradient scale for a zero-volume problem".into()))
    }
}
