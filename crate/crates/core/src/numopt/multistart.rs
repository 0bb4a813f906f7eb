use std::cmp::Ordering;
use std::time::Instant;

use rayon::prelude::*;

use crate::cost::CostModel;
use crate::error::Result;
use crate::report::{SolverKind, SolverReport};

use super::{local_minimize, monotone_minimize_gss, sample_start_points, OptimizerOptions};

#[derive(Debug, Clone)]
pub struct MultistartOutcome {
    /// Lowest-cost converged report; falls back to the lowest finite cost when no start converged.
    pub best: Option<SolverReport>,
    /// One report per start, in start order.
    pub all: Vec<SolverReport>,
    /// Converged end points with duplicates merged, sorted by cost.
    pub extrema: Vec<SolverReport>,
}

impl MultistartOutcome {
    pub fn converged_count(&self) -> usize {
        self.all.iter().filter(|r| r.converged()).count()
    }
}

/// Orders by cost, then lexicographically by the rate vector.
pub(crate) fn report_order(a: &SolverReport, b: &SolverReport) -> Ordering {
    a.cost.total_cmp(&b.cost).then_with(|| {
        a.strategy
            .rates
            .iter()
            .zip(&b.strategy.rates)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

/// Merges reports whose strategies lie within `1e-6 ||v||` of an earlier, cheaper one.
pub fn deduplicate(reports: &[SolverReport]) -> Vec<SolverReport> {
    let mut sorted: Vec<&SolverReport> = reports.iter().collect();
    sorted.sort_by(|a, b| report_order(a, b));
    let mut kept: Vec<SolverReport> = Vec::new();
    for r in sorted {
        let v = &r.strategy.rates;
        let scale = 1e-6 * v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let duplicate = kept.iter().any(|k| {
            k.strategy
                .rates
                .iter()
                .zip(v)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
                < scale
        });
        if !duplicate {
            kept.push(r.clone());
        }
    }
    kept
}

/// Runs one local search per sampled start and reduces the results deterministically.
pub fn multistart_minimize(model: &CostModel, opts: &OptimizerOptions) -> Result<MultistartOutcome> {
    opts.validate()?;
    let clock = Instant::now();
    let starts = sample_start_points(opts.starts, &model.grid, opts.seed);
    let all = starts
        .par_iter()
        .map(|s| {
            if opts.monotone {
                monotone_minimize_gss(model, s, opts)
            } else {
                local_minimize(model, s, opts)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let all: Vec<SolverReport> = all
        .into_iter()
        .map(|mut r| {
            r.seed = Some(opts.seed);
            r
        })
        .collect();

    let converged: Vec<SolverReport> = all.iter().filter(|r| r.converged()).cloned().collect();
    let extrema = deduplicate(&converged);
    let pool: Vec<&SolverReport> = if converged.is_empty() {
        all.iter().filter(|r| r.cost.is_finite()).collect()
    } else {
        converged.iter().collect()
    };
    let best = pool.into_iter().min_by(|a, b| report_order(a, b)).cloned().map(|mut r| {
        r.solver = if opts.monotone {
            SolverKind::Monotone
        } else {
            SolverKind::Multistart
        };
        r.wall_time_secs = clock.elapsed().as_secs_f64();
        r
    });
    Ok(MultistartOutcome { best, all, extrema })
}
