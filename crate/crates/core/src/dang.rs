//! Fixed-point iteration for the stationarity equation.
//!
//! Each step linearizes the nonlinearity around the current iterate and solves
//! the resulting dense linear system. The multiplier `lambda` is tuned in an
//! outer loop so the fixed point executes the target volume.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{urysohn_residual, CostModel};
use crate::error::{Error, Result};
use crate::impact::ImpactModel;
use crate::kernel::{GridSpec, Strategy};
use crate::numopt::sample_start_points;
use crate::report::{SolverKind, SolverMetadata, SolverReport, Termination};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DangConfig {
    /// Offset of the perturbed power law used by the map.
    pub epsilon: f64,
    pub max_iterations: usize,
    pub mean_field_window: usize,
    pub rel_std_threshold: f64,
    pub lambda_tolerance: f64,
    pub max_lambda_iterations: usize,
}

impl Default for DangConfig {
    fn default() -> Self {
        DangConfig {
            epsilon: 1e-6,
            max_iterations: 500,
            mean_field_window: 20,
            rel_std_threshold: 1e-9,
            lambda_tolerance: 1e-3,
            max_lambda_iterations: 40,
        }
    }
}

impl DangConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::Parameter("epsilon must be >= 0".into()));
        }
        if self.max_iterations == 0 || self.mean_field_window < 2 || self.max_lambda_iterations == 0 {
            return Err(Error::Parameter("iteration limits must be positive and the window at least 2".into()));
        }
        if !(self.rel_std_threshold > 0.0 && self.lambda_tolerance > 0.0) {
            return Err(Error::Parameter("thresholds must be positive".into()));
        }
        Ok(())
    }

    /// Impact used inside the map: power laws get the `epsilon` offset.
    pub fn map_impact(&self, impact: &ImpactModel) -> ImpactModel {
        match *impact {
            ImpactModel::PowerLaw { delta } => ImpactModel::perturbed(delta, self.epsilon),
            other => other,
        }
    }
}

/// Constant rate solving `v f'(v) sum_j G_1j = lambda`.
pub fn dang_initial_guess(lambda: f64, g: &DMatrix<f64>, grid: &GridSpec, impact: &ImpactModel) -> Result<Strategy> {
    if !lambda.is_finite() || lambda == 0.0 || g.nrows() == 0 {
        return Err(Error::InitialGuess(lambda));
    }
    let row: f64 = g.row(0).sum();
    let target = lambda.abs();
    let h = |v: f64| -> f64 { v * impact.slope_clamped(v, 0.0) * row - target };
    let mut hi = (target / row).max(f64::MIN_POSITIVE);
    let mut expansions = 0;
    while h(hi).is_nan() || h(hi) <= 0.0 {
        hi *= 2.0;
        expansions += 1;
        if expansions > 2100 || !hi.is_finite() {
            return Err(Error::InitialGuess(lambda));
        }
    }
    let mut lo = 0.0;
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let v = (0.5 * (lo + hi)).copysign(lambda);
    Strategy::new(vec![v; grid.intervals], *grid)
}

/// One application of the linearized map `v -> K(v)^-1 c(v)`.
pub fn dang_map(rates: &[f64], lambda: f64, impact: &ImpactModel, g: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = rates.len();
    if g.nrows() != n || g.ncols() != n {
        return Err(Error::Dimension {
            expected: n,
            actual: g.nrows(),
        });
    }
    let values = rates.iter().map(|&v| impact.eval(v)).collect::<Result<Vec<_>>>()?;
    let slopes = rates.iter().map(|&v| impact.deriv(v)).collect::<Result<Vec<_>>>()?;
    let k = DMatrix::from_fn(n, n, |i, j| g[(i, j)] * if j <= i { slopes[j] } else { slopes[i] });
    let c = DVector::from_fn(n, |i, _| {
        lambda
            - (0..=i)
                .map(|j| g[(i, j)] * (values[j] - rates[j] * slopes[j]))
                .sum::<f64>()
    });
    let solution = k.lu().solve(&c).ok_or(Error::SingularSystem)?;
    if solution.iter().any(|x| !x.is_finite()) {
        return Err(Error::SingularSystem);
    }
    Ok(solution.as_slice().to_vec())
}

/// Result of iterating the map at a fixed multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointRun {
    pub rates: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub mean_field: Vec<f64>,
}

/// Iterates the map until the mean rate settles over the monitoring window.
pub fn dang_iterate(
    start: &[f64],
    lambda: f64,
    impact: &ImpactModel,
    g: &DMatrix<f64>,
    config: &DangConfig,
) -> FixedPointRun {
    let n = start.len() as f64;
    let mut v = start.to_vec();
    let mut trace = Vec::new();
    let window = config.mean_field_window;
    for it in 1..=config.max_iterations {
        match dang_map(&v, lambda, impact, g) {
            Ok(next) => v = next,
            Err(_) => {
                return FixedPointRun {
                    rates: v,
                    converged: false,
                    iterations: it,
                    mean_field: trace,
                }
            }
        }
        trace.push(v.iter().sum::<f64>() / n);
        if trace.len() >= window {
            let recent = &trace[trace.len() - window..];
            let mean = recent.iter().sum::<f64>() / window as f64;
            let var = recent.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / window as f64;
            if mean != 0.0 && var.sqrt() / mean.abs() < config.rel_std_threshold {
                return FixedPointRun {
                    rates: v,
                    converged: true,
                    iterations: it,
                    mean_field: trace,
                };
            }
        }
    }
    FixedPointRun {
        rates: v,
        converged: false,
        iterations: config.max_iterations,
        mean_field: trace,
    }
}

/// Tunes `lambda` so the fixed point meets the volume constraint.
///
/// With a pure power law the fixed point scales as `lambda^(1/delta)`, so the
/// secant iteration runs on `log lambda` against `log sum_i v_i`. Every inner
/// run starts from `init` when given, otherwise from the constant guess.
pub fn dang_solve(model: &CostModel, config: &DangConfig, init: Option<&Strategy>) -> Result<SolverReport> {
    config.validate()?;
    if let Some(s) = init {
        if s.len() != model.size() {
            return Err(Error::Dimension {
                expected: model.size(),
                actual: s.len(),
            });
        }
    }
    let clock = Instant::now();
    let impact = config.map_impact(&model.impact);
    let g = &model.kernels.g;
    let grid = model.grid;
    let sign = if grid.volume < 0.0 { -1.0 } else { 1.0 };
    let target = grid.target_rate_sum().abs();
    let tight = 1e-10 * target;
    let accept = config.lambda_tolerance * target;

    let run_at = |log_lambda: f64| -> Result<(f64, FixedPointRun)> {
        let lambda = sign * log_lambda.exp();
        let start = match init {
            Some(s) => s.clone(),
            None => dang_initial_guess(lambda, g, &grid, &impact)?,
        };
        Ok((lambda, dang_iterate(&start.rates, lambda, &impact, g, config)))
    };
    let gap = |run: &FixedPointRun| -> f64 {
        let total = sign * run.rates.iter().sum::<f64>();
        if total > 0.0 {
            total.ln() - target.ln()
        } else {
            f64::NAN
        }
    };

    let rate = grid.mean_rate();
    let lambda0 = (rate * impact.slope_clamped(rate, 0.0) * g.row(0).sum()).abs();
    let mut x0 = lambda0.ln();
    let (mut lambda, mut run) = run_at(x0)?;
    let mut outer = 1;
    let mut h0 = gap(&run);
    let mut x1 = x0 + 0.1;
    while run.converged && h0.is_finite() && (h0.exp() - 1.0).abs() * target > tight && outer < config.max_lambda_iterations {
        let (l1, r1) = run_at(x1)?;
        outer += 1;
        let h1 = gap(&r1);
        lambda = l1;
        run = r1;
        if !run.converged || !h1.is_finite() || (h1.exp() - 1.0).abs() * target <= tight || h1 == h0 {
            break;
        }
        let x2 = x1 - h1 * (x1 - x0) / (h1 - h0);
        x0 = x1;
        h0 = h1;
        x1 = x2;
    }

    let violation = (run.rates.iter().sum::<f64>().abs() - target).abs();
    let finite = run.rates.iter().all(|v| v.is_finite());
    let converged = run.converged && finite && violation <= accept;
    let termination = if converged {
        Termination::Converged
    } else if !finite {
        Termination::Diverged
    } else if run.converged {
        Termination::CalibrationFailure
    } else {
        Termination::MaxIterations
    };
    let mut meta = SolverMetadata::new(converged, termination, run.iterations);
    meta.lambda = Some(lambda);
    meta.message = Some(format!("{outer} multiplier evaluations"));
    let strategy = if finite {
        Strategy::new(run.rates.clone(), grid)?
    } else {
        init.cloned().unwrap_or_else(|| crate::kernel::vwap_strategy(&grid))
    };
    let mut report = SolverReport::evaluate(model, SolverKind::Dang, strategy, meta)?;
    if finite {
        report.residual = urysohn_residual(&impact, &model.kernels, &run.rates, lambda).ok().map(|r| r.0);
    }
    report.traces.mean_field = run.mean_field;
    report.wall_time_secs = clock.elapsed().as_secs_f64();
    Ok(report)
}

/// One cell of the convergence-region scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanCell {
    pub n: usize,
    pub delta: f64,
    pub converged: bool,
    pub iterations: usize,
    pub squared_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSettings {
    pub gamma: f64,
    pub horizon: f64,
    pub volume: f64,
    /// Simplex-random starts tried in addition to the constant guess.
    pub random_starts: usize,
    pub seed: u64,
}

impl Default for ScanSettings {
    fn default() -> Self {
        ScanSettings {
            gamma: 0.5,
            horizon: 1.0,
            volume: 0.1,
            random_starts: 2,
            seed: 0,
        }
    }
}

/// Runs the solver on every `(N, delta)` pair; failures are recorded, not raised.
pub fn convergence_scan(ns: &[usize], deltas: &[f64], settings: &ScanSettings, config: &DangConfig) -> Result<Vec<ScanCell>> {
    if ns.is_empty() || deltas.is_empty() {
        return Err(Error::Parameter("scan lists must be non-empty".into()));
    }
    config.validate()?;
    let cells: Vec<(usize, f64)> = ns.iter().flat_map(|&n| deltas.iter().map(move |&d| (n, d))).collect();
    cells
        .par_iter()
        .map(|&(n, delta)| {
            let grid = GridSpec::new(n, settings.horizon, settings.volume)?;
            let model = CostModel::new(settings.gamma, ImpactModel::power_law(delta), grid)?;
            let mut starts: Vec<Option<Strategy>> = vec![None];
            starts.extend(sample_start_points(settings.random_starts, &grid, settings.seed).into_iter().map(Some));
            let mut last = None;
            for start in &starts {
                let report = dang_solve(&model, config, start.as_ref())?;
                let done = report.converged();
                last = Some(report);
                if done {
                    break;
                }
            }
            let report = last.expect("at least one start");
            Ok(ScanCell {
                n,
                delta,
                converged: report.converged(),
                iterations: report.metadata.iterations,
                squared_residual: report.residual.unwrap_or(f64::INFINITY),
            })
        })
        .collect()
}

/// Smallest `delta` of a scan row that converged.
pub fn smallest_converging_delta(cells: &[ScanCell], n: usize) -> Option<f64> {
    cells
        .iter()
        .filter(|c| c.n == n && c.converged)
        .map(|c| c.delta)
        .min_by(f64::total_cmp)
}
