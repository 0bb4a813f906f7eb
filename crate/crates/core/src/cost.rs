//! Discretized expected execution cost, derivatives and stationarity residuals.

use nalgebra::DMatrix;

use crate::error::{all_finite, Error, Result};
use crate::impact::ImpactModel;
use crate::kernel::{check_gamma, kernel_prefactor, GridSpec, KernelMatrices};

/// Cost functional `sum_ij v_i f(v_j) A_ij + spread dt sum_i |v_i|`.
#[derive(Debug, Clone)]
pub struct CostModel {
    pub impact: ImpactModel,
    pub kernels: KernelMatrices,
    pub grid: GridSpec,
    /// Half spread per share.
    pub spread: f64,
    /// Smoothing of `|v|` in derivatives only.
    pub abs_smoothing: f64,
    /// Lower clamp on `|v|` when evaluating `f'` and `f''`; zero disables clamping.
    pub slope_floor: f64,
}

/// Reusable buffers for the fast evaluation path.
#[derive(Debug, Clone, Default)]
pub(crate) struct Scratch {
    phi: Vec<f64>,
    u: Vec<f64>,
    w: Vec<f64>,
}

impl CostModel {
    pub fn new(gamma: f64, impact: ImpactModel, grid: GridSpec) -> Result<Self> {
        impact.validate()?;
        let kernels = KernelMatrices::new(gamma, &grid)?;
        let rate = grid.mean_rate().abs();
        Ok(CostModel {
            impact,
            kernels,
            grid,
            spread: 0.0,
            abs_smoothing: 1e-8 * rate,
            slope_floor: 1e-10 * rate,
        })
    }

    pub fn with_spread(mut self, spread: f64) -> Result<Self> {
        if !(spread.is_finite() && spread >= 0.0) {
            return Err(Error::Parameter(format!("spread must be >= 0, got {spread}")));
        }
        self.spread = spread;
        Ok(self)
    }

    pub fn gamma(&self) -> f64 {
        self.kernels.gamma
    }

    pub fn size(&self) -> usize {
        self.grid.intervals
    }

    fn check(&self, rates: &[f64]) -> Result<()> {
        if rates.len() != self.size() {
            return Err(Error::Dimension {
                expected: self.size(),
                actual: rates.len(),
            });
        }
        all_finite(rates)
    }

    /// Expected cost with the exact absolute value in the spread term.
    pub fn expected_cost(&self, rates: &[f64]) -> Result<f64> {
        self.check(rates)?;
        Ok(self.cost_into(rates, &mut Scratch::default()))
    }

    /// Spread part `spread dt sum_i |v_i|` of the cost.
    pub fn spread_component(&self, rates: &[f64]) -> f64 {
        self.spread * self.grid.dt() * rates.iter().map(|v| v.abs()).sum::<f64>()
    }

    pub fn cost_gradient(&self, rates: &[f64]) -> Result<Vec<f64>> {
        self.check(rates)?;
        self.check_slopes(rates)?;
        let mut grad = vec![0.0; rates.len()];
        self.cost_and_gradient(rates, &mut grad, &mut Scratch::default());
        Ok(grad)
    }

    pub fn cost_hessian(&self, rates: &[f64]) -> Result<DMatrix<f64>> {
        self.check(rates)?;
        self.check_slopes(rates)?;
        if self.slope_floor == 0.0 {
            for &v in rates {
                self.impact.second_deriv(v)?;
            }
        }
        let n = rates.len();
        let a = &self.kernels.a;
        let mut w = vec![0.0; n];
        self.apply_a_transpose(rates, &mut w);
        let slopes: Vec<f64> = rates.iter().map(|&v| self.slope(v)).collect();
        let dt = self.grid.dt();
        let eps = self.abs_smoothing;
        Ok(DMatrix::from_fn(n, n, |k, l| {
            let mut h = slopes[l] * a[(k, l)] + slopes[k] * a[(l, k)];
            if k == l {
                h += self.impact.curvature_clamped(rates[k], self.slope_floor) * w[k];
                if self.spread > 0.0 && eps > 0.0 {
                    let r = rates[k].hypot(eps);
                    h += self.spread * dt * eps * eps / (r * r * r);
                }
            }
            h
        }))
    }

    fn check_slopes(&self, rates: &[f64]) -> Result<()> {
        if self.slope_floor == 0.0 {
            for &v in rates {
                self.impact.deriv(v)?;
            }
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn slope(&self, v: f64) -> f64 {
        self.impact.slope_clamped(v, self.slope_floor)
    }

    /// `out = A x`.
    pub(crate) fn apply_a(&self, x: &[f64], out: &mut [f64]) {
        let n = x.len();
        let data = self.kernels.a.as_slice();
        out.iter_mut().for_each(|o| *o = 0.0);
        for (j, &xj) in x.iter().enumerate() {
            let col = &data[j * n + j..(j + 1) * n];
            for (o, &c) in out[j..].iter_mut().zip(col) {
                *o += c * xj;
            }
        }
    }

    /// `out = A^T x`.
    pub(crate) fn apply_a_transpose(&self, x: &[f64], out: &mut [f64]) {
        let n = x.len();
        let data = self.kernels.a.as_slice();
        for (j, o) in out.iter_mut().enumerate() {
            let col = &data[j * n + j..(j + 1) * n];
            *o = col.iter().zip(&x[j..]).map(|(c, v)| c * v).sum();
        }
    }

    /// Unchecked cost evaluation.
    pub(crate) fn cost_into(&self, rates: &[f64], s: &mut Scratch) -> f64 {
        let n = rates.len();
        s.phi.clear();
        s.phi.extend(rates.iter().map(|&v| self.impact.value(v)));
        s.u.resize(n, 0.0);
        self.apply_a(&s.phi, &mut s.u);
        let quadratic: f64 = rates.iter().zip(&s.u).map(|(v, u)| v * u).sum();
        quadratic + self.spread_component(rates)
    }

    /// Unchecked cost and gradient; returns the exact cost.
    pub(crate) fn cost_and_gradient(&self, rates: &[f64], grad: &mut [f64], s: &mut Scratch) -> f64 {
        let n = rates.len();
        let cost = self.cost_into(rates, s);
        s.w.resize(n, 0.0);
        self.apply_a_transpose(rates, &mut s.w);
        let spread_dt = self.spread * self.grid.dt();
        let eps = self.abs_smoothing;
        for k in 0..n {
            let v = rates[k];
            let mut g = s.u[k] + self.slope(v) * s.w[k];
            if spread_dt > 0.0 {
                g += spread_dt * if eps > 0.0 { v / v.hypot(eps) } else { sign0(v) };
            }
            grad[k] = g;
        }
        cost
    }
}

fn sign0(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v.signum()
    }
}

/// Matrix `F_ij = f(v_j)` for `j <= i` and `v_j f'(v_i)` for `j > i`.
pub fn build_f_matrix(impact: &ImpactModel, rates: &[f64]) -> Result<DMatrix<f64>> {
    all_finite(rates)?;
    let values = rates.iter().map(|&v| impact.eval(v)).collect::<Result<Vec<_>>>()?;
    let slopes = rates.iter().map(|&v| impact.deriv(v)).collect::<Result<Vec<_>>>()?;
    let n = rates.len();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        if j <= i {
            values[j]
        } else {
            rates[j] * slopes[i]
        }
    }))
}

/// Row sums `sum_j G_ij F_ij(v)` of the stationarity equation.
pub fn stationarity_lhs(impact: &ImpactModel, g: &DMatrix<f64>, rates: &[f64]) -> Result<Vec<f64>> {
    let n = rates.len();
    if g.nrows() != n || g.ncols() != n {
        return Err(Error::Dimension {
            expected: n,
            actual: g.nrows(),
        });
    }
    all_finite(rates)?;
    let values = rates.iter().map(|&v| impact.eval(v)).collect::<Result<Vec<_>>>()?;
    let slopes = rates.iter().map(|&v| impact.deriv(v)).collect::<Result<Vec<_>>>()?;
    Ok(stationarity_rows(g, rates, &values, &slopes))
}

pub(crate) fn stationarity_rows(g: &DMatrix<f64>, rates: &[f64], values: &[f64], slopes: &[f64]) -> Vec<f64> {
    let n = rates.len();
    let data = g.as_slice();
    // G is symmetric, so column i doubles as row i.
    (0..n)
        .map(|i| {
            let row = &data[i * n..(i + 1) * n];
            let lower: f64 = row[..=i].iter().zip(&values[..=i]).map(|(a, b)| a * b).sum();
            let upper: f64 = row[i + 1..].iter().zip(&rates[i + 1..]).map(|(a, b)| a * b).sum();
            lower + slopes[i] * upper
        })
        .collect()
}

/// Residual `r_i = -lambda + sum_j G_ij F_ij(v)`; returns `(sum r_i^2, r)`.
pub fn urysohn_residual(
    impact: &ImpactModel,
    kernels: &KernelMatrices,
    rates: &[f64],
    lambda: f64,
) -> Result<(f64, Vec<f64>)> {
    let mut r = stationarity_lhs(impact, &kernels.g, rates)?;
    r.iter_mut().for_each(|x| *x -= lambda);
    Ok((r.iter().map(|x| x * x).sum(), r))
}

/// Residual at the multiplier that minimizes it (the mean of the row sums).
pub fn best_lambda_residual(impact: &ImpactModel, kernels: &KernelMatrices, rates: &[f64]) -> Result<(f64, f64)> {
    let lhs = stationarity_lhs(impact, &kernels.g, rates)?;
    let lambda = lhs.iter().sum::<f64>() / lhs.len() as f64;
    let e = lhs.iter().map(|x| (x - lambda).powi(2)).sum();
    Ok((lambda, e))
}

/// Cost of the two-interval problem on `[0, 1]` as a function of the first rate.
pub fn toy_cost(v1: f64, gamma: f64, impact: &ImpactModel, volume: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let v2 = 2.0 * volume - v1;
    let p = 2.0 - gamma;
    let f1 = impact.eval(v1)?;
    let f2 = impact.eval(v2)?;
    Ok(kernel_prefactor(gamma) * 0.5f64.powf(p) * (v1 * f1 + v2 * f2 + (2f64.powf(p) - 2.0) * v2 * f1))
}

/// Half spread that makes the spread cost of a buy program `r` times the VWAP impact cost.
pub fn spread_coefficient(ratio: f64, gamma: f64, impact: &ImpactModel, volume: f64, horizon: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if !(ratio.is_finite() && ratio >= 0.0) {
        return Err(Error::Parameter(format!("spread ratio must be >= 0, got {ratio}")));
    }
    let f = impact.eval(volume / horizon)?;
    Ok(ratio * f * horizon.powf(1.0 - gamma) * kernel_prefactor(gamma))
}
