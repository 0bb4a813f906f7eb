//! Solver output shared by every method.

use serde::{Deserialize, Serialize};

use crate::cost::CostModel;
use crate::error::Result;
use crate::kernel::Strategy;
use crate::problem::ProblemSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Dham,
    Dang,
    Perturbative,
    LocalMinimize,
    Multistart,
    Monotone,
}

/// Why an iterative method stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    GradientTolerance,
    StepTolerance,
    MaxIterations,
    LineSearchFailure,
    Diverged,
    CalibrationFailure,
    NotIterative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverMetadata {
    pub converged: bool,
    pub termination: Termination,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hbar: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Norm of the constraint-projected gradient.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stationarity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl SolverMetadata {
    pub fn new(converged: bool, termination: Termination, iterations: usize) -> Self {
        SolverMetadata {
            converged,
            termination,
            iterations,
            hbar: None,
            lambda: None,
            stationarity: None,
            message: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Traces {
    /// `(hbar, squared residual)` pairs sorted by `hbar`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub residual_curve: Vec<(f64, f64)>,
    /// Mean rate after each fixed-point iteration.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mean_field: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub solver: SolverKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<ProblemSpec>,
    pub strategy: Strategy,
    pub cost: f64,
    pub spread_component: f64,
    pub constraint_violation: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    pub metadata: SolverMetadata,
    #[serde(default)]
    pub traces: Traces,
    pub wall_time_secs: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl SolverReport {
    /// Builds a report, evaluating cost and feasibility from scratch.
    pub fn evaluate(model: &CostModel, solver: SolverKind, strategy: Strategy, metadata: SolverMetadata) -> Result<Self> {
        let cost = model.expected_cost(&strategy.rates)?;
        Ok(SolverReport {
            solver,
            spec: None,
            cost,
            spread_component: model.spread_component(&strategy.rates),
            constraint_violation: strategy.constraint_violation(),
            residual: None,
            metadata,
            traces: Traces::default(),
            wall_time_secs: 0.0,
            seed: None,
            strategy,
        })
    }

    pub fn converged(&self) -> bool {
        self.metadata.converged
    }
}
