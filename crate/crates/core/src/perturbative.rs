//! First-order expansion around the linear-impact optimum for `f(v) = v^(1-eps)`.

use std::time::Instant;

use nalgebra::DVector;

use crate::cost::CostModel;
use crate::error::{Error, Result};
use crate::impact::ImpactModel;
use crate::kernel::{gss_strategy, GridSpec, KernelMatrices, Strategy};
use crate::report::{SolverKind, SolverMetadata, SolverReport, Termination};

/// Zeroth-order profile and the two pieces of the affine first-order correction.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderTerms {
    pub v0: Vec<f64>,
    /// Correction at `lambda' = 0`.
    pub v1_base: Vec<f64>,
    /// Solution of `G w = -1`; the correction is `v1_base + lambda' w`.
    pub w: Vec<f64>,
}

impl FirstOrderTerms {
    pub fn correction(&self, lambda_prime: f64) -> Vec<f64> {
        self.v1_base.iter().zip(&self.w).map(|(b, w)| b + lambda_prime * w).collect()
    }

    /// Multiplier that keeps the executed volume unchanged at first order.
    pub fn volume_preserving_lambda(&self) -> f64 {
        -self.v1_base.iter().sum::<f64>() / self.w.iter().sum::<f64>()
    }
}

pub fn first_order_terms(gamma: f64, grid: &GridSpec) -> Result<FirstOrderTerms> {
    let v0 = gss_strategy(gamma, grid)?.rates;
    if v0.iter().any(|&v| v.is_nan() || v <= 0.0) {
        return Err(Error::Parameter("zeroth-order profile must be strictly positive".into()));
    }
    let kernels = KernelMatrices::new(gamma, grid)?;
    let g = &kernels.g;
    let n = v0.len();
    let logs: Vec<f64> = v0.iter().map(|v| v.ln()).collect();
    let rhs = DVector::from_fn(n, |i, _| {
        let lower: f64 = (0..=i).map(|j| g[(i, j)] * v0[j] * logs[j]).sum();
        let upper: f64 = (i + 1..n).map(|j| g[(i, j)] * v0[j]).sum();
        lower + (1.0 + logs[i]) * upper
    });
    let chol = g.clone().cholesky().ok_or(Error::SingularSystem)?;
    let v1_base = chol.solve(&rhs);
    let w = chol.solve(&DVector::from_element(n, -1.0));
    Ok(FirstOrderTerms {
        v0,
        v1_base: v1_base.as_slice().to_vec(),
        w: w.as_slice().to_vec(),
    })
}

/// `v = v0 + eps v1` with the multiplier fixed by the volume constraint.
pub fn perturbative_solve(gamma: f64, eps: f64, grid: &GridSpec) -> Result<SolverReport> {
    if !eps.is_finite() || eps >= 1.0 {
        return Err(Error::Parameter(format!("nonlinearity strength must be finite and below 1, got {eps}")));
    }
    let clock = Instant::now();
    let model = CostModel::new(gamma, ImpactModel::power_law(1.0 - eps), *grid)?;
    let (rates, lambda_prime) = if eps == 0.0 {
        (gss_strategy(gamma, grid)?.rates, 0.0)
    } else {
        let terms = first_order_terms(gamma, grid)?;
        let lambda_prime = terms.volume_preserving_lambda();
        let v1 = terms.correction(lambda_prime);
        (terms.v0.iter().zip(&v1).map(|(a, b)| a + eps * b).collect(), lambda_prime)
    };
    let strategy = Strategy::new(rates, *grid)?;
    let feasible = strategy.constraint_violation() <= 1e-3 * grid.volume.abs();
    let mut meta = SolverMetadata::new(
        feasible,
        if feasible { Termination::NotIterative } else { Termination::CalibrationFailure },
        1,
    );
    meta.lambda = Some(lambda_prime);
    let mut report = SolverReport::evaluate(&model, SolverKind::Perturbative, strategy, meta)?;
    report.wall_time_secs = clock.elapsed().as_secs_f64();
    Ok(report)
}
