use std::time::Instant;

use crate::cost::{CostModel, Scratch};
use crate::error::{Error, Result};
use crate::kernel::Strategy;
use crate::report::{SolverKind, SolverMetadata, SolverReport, Termination};

use super::OptimizerOptions;

const C1: f64 = 1e-4;
const C2: f64 = 0.9;
const MAX_LINE_EVALS: usize = 40;

fn project(x: &mut [f64]) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= mean);
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Euclidean norm of the gradient projected onto zero-sum directions.
pub fn projected_gradient_norm(model: &CostModel, rates: &[f64]) -> Result<f64> {
    let mut g = model.cost_gradient(rates)?;
    project(&mut g);
    Ok(norm(&g))
}

struct Point {
    x: Vec<f64>,
    f: f64,
    /// Projected gradient.
    g: Vec<f64>,
}

struct Evaluator<'a> {
    model: &'a CostModel,
    scratch: Scratch,
    evaluations: usize,
}

impl Evaluator<'_> {
    fn eval(&mut self, x: Vec<f64>) -> Point {
        let mut g = vec![0.0; x.len()];
        let f = self.model.cost_and_gradient(&x, &mut g, &mut self.scratch);
        self.evaluations += 1;
        project(&mut g);
        Point { x, f, g }
    }
}

/// Inverse-Hessian approximation restricted to the zero-sum subspace, row major.
struct InverseHessian {
    n: usize,
    h: Vec<f64>,
}

impl InverseHessian {
    fn scaled_projector(n: usize, scale: f64) -> Self {
        let off = -scale / n as f64;
        let mut h = vec![off; n * n];
        for i in 0..n {
            h[i * n + i] += scale;
        }
        InverseHessian { n, h }
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(&self.h[i * self.n..(i + 1) * self.n], x);
        }
    }

    fn update(&mut self, s: &[f64], y: &[f64]) {
        let n = self.n;
        let sy = dot(s, y);
        let mut hy = vec![0.0; n];
        self.apply(y, &mut hy);
        let yhy = dot(y, &hy);
        let rho = 1.0 / sy;
        let coef = rho * rho * yhy + rho;
        for i in 0..n {
            let row = &mut self.h[i * n..(i + 1) * n];
            for j in 0..n {
                row[j] += coef * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
            }
        }
    }
}

enum Search {
    Found(Point),
    Failed,
}

struct Bracket {
    alpha: f64,
    f: f64,
    dphi: f64,
}

/// Strong Wolfe line search along the zero-sum direction `d`.
///
/// Near convergence cost differences drop below rounding, so a trial point is
/// also accepted on the approximate Wolfe test: no measurable increase and a
/// directional derivative reduced by the Armijo factor.
fn line_search(ev: &mut Evaluator, at: &Point, d: &[f64], alpha0: f64) -> Search {
    let phi0 = at.f;
    let dphi0 = dot(&at.g, d);
    let noise = 1e-13 * phi0.abs().max(f64::MIN_POSITIVE);
    let sufficient = |f: f64, dphi: f64, alpha: f64| {
        f.is_finite()
            && (f <= phi0 + C1 * alpha * dphi0 || (f <= phi0 + noise && dphi <= (2.0 * C1 - 1.0) * dphi0))
    };
    let curvature = |dphi: f64| dphi.abs() <= -C2 * dphi0;
    let mut trial = |alpha: f64| -> (Point, f64) {
        let x: Vec<f64> = at.x.iter().zip(d).map(|(x, d)| x + alpha * d).collect();
        let p = ev.eval(x);
        let dphi = dot(&p.g, d);
        (p, dphi)
    };

    let mut evals = 0;
    let mut lo = Bracket { alpha: 0.0, f: phi0, dphi: dphi0 };
    let mut best: Option<Point> = None;
    let mut alpha = alpha0;
    let mut hi;
    loop {
        let (p, dphi) = trial(alpha);
        evals += 1;
        if !sufficient(p.f, dphi, alpha) || (best.is_some() && p.f >= lo.f) {
            hi = Bracket { alpha, f: p.f, dphi };
            break;
        }
        if curvature(dphi) {
            return Search::Found(p);
        }
        let here = Bracket { alpha, f: p.f, dphi };
        best = Some(p);
        if dphi >= 0.0 {
            hi = std::mem::replace(&mut lo, here);
            break;
        }
        lo = here;
        if evals >= MAX_LINE_EVALS {
            return best.map_or(Search::Failed, Search::Found);
        }
        alpha *= 4.0;
    }

    // Zoom: `lo` satisfies sufficient decrease, the minimizer lies between lo and hi.
    while evals < MAX_LINE_EVALS {
        let width = hi.alpha - lo.alpha;
        if width.abs() <= 1e-15 * lo.alpha.abs().max(hi.alpha.abs()) {
            break;
        }
        let mut alpha = lo.alpha + 0.5 * width;
        if hi.f.is_finite() {
            let curv = hi.f - lo.f - lo.dphi * width;
            if curv > 0.0 {
                alpha = lo.alpha - lo.dphi * width * width / (2.0 * curv);
            }
        }
        let (a, b) = (lo.alpha.min(hi.alpha), lo.alpha.max(hi.alpha));
        let guard = 0.1 * (b - a);
        alpha = alpha.clamp(a + guard, b - guard);
        let (p, dphi) = trial(alpha);
        evals += 1;
        if !sufficient(p.f, dphi, alpha) || p.f >= lo.f {
            hi = Bracket { alpha, f: p.f, dphi };
        } else {
            if curvature(dphi) {
                return Search::Found(p);
            }
            let here = Bracket { alpha, f: p.f, dphi };
            if dphi * width >= 0.0 {
                hi = std::mem::replace(&mut lo, here);
            } else {
                lo = here;
            }
            best = Some(p);
        }
    }
    match best {
        Some(p) if p.f <= phi0 => Search::Found(p),
        _ => Search::Failed,
    }
}

/// Quasi-Newton minimization on the hyperplane `sum_i v_i = N X / T`.
///
/// BFGS on the inverse Hessian restricted to zero-sum directions with a strong
/// Wolfe line search. Converged means the projected gradient fell below the
/// tolerance; any other stop returns the best iterate with `converged = false`.
pub fn local_minimize(model: &CostModel, start: &Strategy, opts: &OptimizerOptions) -> Result<SolverReport> {
    opts.validate()?;
    let n = model.size();
    if start.len() != n {
        return Err(Error::Dimension {
            expected: n,
            actual: start.len(),
        });
    }
    model.expected_cost(&start.rates)?;
    let clock = Instant::now();
    let gtol = opts.resolved_gradient_tolerance(model)?;
    let rate = model.grid.mean_rate().abs();
    let step_floor = opts.step_tolerance * rate;

    let mut ev = Evaluator {
        model,
        scratch: Scratch::default(),
        evaluations: 0,
    };
    let mut x = start.rates.clone();
    let shift = (model.grid.target_rate_sum() - x.iter().sum::<f64>()) / n as f64;
    x.iter_mut().for_each(|v| *v += shift);
    let mut at = ev.eval(x);

    let initial_scale = |g: &[f64]| {
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gmax > 0.0 {
            0.1 * rate / gmax
        } else {
            1.0
        }
    };
    let mut hess = InverseHessian::scaled_projector(n, initial_scale(&at.g));
    let mut fresh = true;
    let mut direction = vec![0.0; n];
    let mut termination = Termination::MaxIterations;
    let mut iterations = 0;
    let mut stalls = 0;

    while iterations < opts.max_iterations {
        if norm(&at.g) < gtol {
            termination = Termination::GradientTolerance;
            break;
        }
        iterations += 1;
        hess.apply(&at.g, &mut direction);
        direction.iter_mut().for_each(|d| *d = -*d);
        project(&mut direction);
        if dot(&direction, &at.g) >= 0.0 {
            hess = InverseHessian::scaled_projector(n, initial_scale(&at.g));
            fresh = true;
            hess.apply(&at.g, &mut direction);
            direction.iter_mut().for_each(|d| *d = -*d);
            project(&mut direction);
        }
        let next = match line_search(&mut ev, &at, &direction, 1.0) {
            Search::Found(p) => p,
            Search::Failed if fresh => {
                termination = Termination::LineSearchFailure;
                break;
            }
            Search::Failed => {
                hess = InverseHessian::scaled_projector(n, initial_scale(&at.g));
                fresh = true;
                continue;
            }
        };
        let s: Vec<f64> = next.x.iter().zip(&at.x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next.g.iter().zip(&at.g).map(|(a, b)| a - b).collect();
        let step = s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if step <= step_floor {
            stalls += 1;
        } else {
            stalls = 0;
        }
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            if fresh {
                hess = InverseHessian::scaled_projector(n, sy / dot(&y, &y));
                fresh = false;
            }
            hess.update(&s, &y);
        }
        at = next;
        if stalls >= 5 {
            termination = Termination::StepTolerance;
            break;
        }
    }

    let mut rates = at.x;
    let shift = (model.grid.target_rate_sum() - rates.iter().sum::<f64>()) / n as f64;
    rates.iter_mut().for_each(|v| *v += shift);
    let stationarity = norm(&at.g);
    let converged = termination == Termination::GradientTolerance;
    let mut meta = SolverMetadata::new(converged, termination, iterations);
    meta.stationarity = Some(stationarity);
    let mut report = SolverReport::evaluate(model, SolverKind::LocalMinimize, Strategy::new(rates, model.grid)?, meta)?;
    report.wall_time_secs = clock.elapsed().as_secs_f64();
    Ok(report)
}
