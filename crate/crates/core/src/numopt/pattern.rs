use std::time::Instant;

use crate::cost::CostModel;
use crate::error::{Error, Result};
use crate::kernel::Strategy;
use crate::report::{SolverKind, SolverMetadata, SolverReport, Termination};

use super::OptimizerOptions;

/// Derivative-free search over nonnegative strategies with the volume fixed.
///
/// The generating set is the pairwise exchange directions `e_i - e_j`: each
/// trial moves `step` of rate from interval `j` to interval `i`, which keeps
/// the sum fixed and is only tried when `v_j >= step`. Pairs are polled in a
/// fixed cyclic order and the first improving move is taken. After a full
/// cycle without improvement the step is halved. Cost changes are computed in
/// O(1) from cached `u = A f(v)` and `w = A^T v`.
///
/// `opts.max_iterations` bounds the number of trial moves.
pub fn monotone_minimize_gss(model: &CostModel, start: &Strategy, opts: &OptimizerOptions) -> Result<SolverReport> {
    opts.validate()?;
    let n = model.size();
    if start.len() != n {
        return Err(Error::Dimension {
            expected: n,
            actual: start.len(),
        });
    }
    if start.rates.iter().any(|&v| v < 0.0) {
        return Err(Error::Parameter("monotone search needs a nonnegative start".into()));
    }
    let clock = Instant::now();
    let rate = model.grid.mean_rate().abs();
    let a = model.kernels.a.as_slice();
    let at = |i: usize, j: usize| a[j * n + i];
    let f = |v: f64| model.impact.value(v);
    let spread_dt = model.spread * model.grid.dt();

    let mut v = start.rates.clone();
    let mut phi: Vec<f64> = v.iter().map(|&x| f(x)).collect();
    let mut u = vec![0.0; n];
    let mut w = vec![0.0; n];
    let refresh = |v: &[f64], phi: &mut Vec<f64>, u: &mut [f64], w: &mut [f64]| {
        phi.iter_mut().zip(v).for_each(|(p, &x)| *p = f(x));
        model.apply_a(phi, u);
        model.apply_a_transpose(v, w);
    };
    refresh(&v, &mut phi, &mut u, &mut w);

    let mut step = rate;
    let step_floor = opts.step_tolerance * rate;
    let pairs = n * n.saturating_sub(1);
    let mut trials = 0usize;
    let mut accepted = 0usize;
    let mut failures = 0usize;
    let mut k = 0usize;
    let mut termination = Termination::Converged;

    while pairs > 0 && step >= step_floor {
        if trials >= opts.max_iterations {
            termination = Termination::MaxIterations;
            break;
        }
        let i = k / (n - 1);
        let jj = k % (n - 1);
        let j = if jj < i { jj } else { jj + 1 };
        k = (k + 1) % pairs;
        let mut improved = false;
        if v[j] >= step {
            trials += 1;
            let vi = v[i] + step;
            let vj = v[j] - step;
            let pi = f(vi) - phi[i];
            let pj = f(vj) - phi[j];
            let mut dc = step * (u[i] - u[j]) + w[i] * pi + w[j] * pj + step * (at(i, i) * pi + at(i, j) * pj)
                - step * (at(j, i) * pi + at(j, j) * pj);
            if spread_dt > 0.0 {
                dc += spread_dt * (vi.abs() - v[i].abs() + vj.abs() - v[j].abs());
            }
            if dc < 0.0 {
                v[i] = vi;
                v[j] = vj;
                let (ci, cj) = (&a[i * n..(i + 1) * n], &a[j * n..(j + 1) * n]);
                for r in 0..n {
                    u[r] += ci[r] * pi + cj[r] * pj;
                    w[r] += step * (at(i, r) - at(j, r));
                }
                phi[i] += pi;
                phi[j] += pj;
                accepted += 1;
                improved = true;
                if accepted.is_multiple_of(4096) {
                    refresh(&v, &mut phi, &mut u, &mut w);
                }
            }
        }
        if improved {
            failures = 0;
        } else {
            failures += 1;
            if failures >= pairs {
                step *= 0.5;
                failures = 0;
            }
        }
    }

    // exchange moves conserve the sum up to rounding; restore it exactly on the positive part
    let total: f64 = v.iter().sum();
    let target = model.grid.target_rate_sum();
    if total > 0.0 {
        v.iter_mut().for_each(|x| *x *= target / total);
    }
    let converged = termination == Termination::Converged;
    let mut meta = SolverMetadata::new(converged, termination, trials);
    meta.message = Some(format!("{accepted} accepted moves, final step {:e}", step / rate.max(f64::MIN_POSITIVE)));
    let mut report = SolverReport::evaluate(model, SolverKind::Monotone, Strategy::new(v, model.grid)?, meta)?;
    if report.cost > model.expected_cost(&start.rates)? {
        report = SolverReport::evaluate(model, SolverKind::Monotone, start.clone(), report.metadata.clone())?;
    }
    report.wall_time_secs = clock.elapsed().as_secs_f64();
    Ok(report)
}
