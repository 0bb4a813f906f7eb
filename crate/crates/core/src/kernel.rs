//! Time grid, strategies, discretized decay kernel and reference profiles.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma as gamma_fn;

use crate::error::{all_finite, Error, Result};
use crate::impact::ImpactModel;

/// Uniform grid of `intervals` subintervals over `[0, horizon]` executing `volume`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub intervals: usize,
    pub horizon: f64,
    pub volume: f64,
}

impl GridSpec {
    pub fn new(intervals: usize, horizon: f64, volume: f64) -> Result<Self> {
        let grid = GridSpec {
            intervals,
            horizon,
            volume,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.intervals == 0 {
            return Err(Error::Parameter("grid needs at least one interval".into()));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::Parameter(format!("horizon must be positive, got {}", self.horizon)));
        }
        if !self.volume.is_finite() {
            return Err(Error::NonFinite(self.volume));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.intervals as f64
    }

    /// Average rate `X/T`.
    pub fn mean_rate(&self) -> f64 {
        self.volume / self.horizon
    }

    /// Required `sum_i v_i = N X / T`.
    pub fn target_rate_sum(&self) -> f64 {
        self.intervals as f64 * self.mean_rate()
    }

    /// Midpoint of subinterval `i` (zero based).
    pub fn midpoint(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dt()
    }
}

/// Piecewise-constant trading rates on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Strategy {
    pub rates: Vec<f64>,
    pub grid: GridSpec,
}

impl Strategy {
    pub fn new(rates: Vec<f64>, grid: GridSpec) -> Result<Self> {
        if rates.len() != grid.intervals {
            return Err(Error::Dimension {
                expected: grid.intervals,
                actual: rates.len(),
            });
        }
        all_finite(&rates)?;
        Ok(Strategy { rates, grid })
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    /// Executed volume `sum_i v_i dt`.
    pub fn volume(&self) -> f64 {
        self.rates.iter().sum::<f64>() * self.grid.dt()
    }

    pub fn constraint_violation(&self) -> f64 {
        (self.volume() - self.grid.volume).abs()
    }

    /// Multiplies all rates so the executed volume matches the grid exactly.
    pub fn rescale_to_volume(&mut self) -> Result<()> {
        let current = self.volume();
        if current == 0.0 || !current.is_finite() {
            return Err(Error::Parameter("cannot rescale a strategy with zero volume".into()));
        }
        let factor = self.grid.volume / current;
        self.rates.iter_mut().for_each(|v| *v *= factor);
        Ok(())
    }
}

/// Discretized kernel `G` and cost matrix `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrices {
    pub gamma: f64,
    pub g: DMatrix<f64>,
    pub a: DMatrix<f64>,
}

impl KernelMatrices {
    pub fn new(gamma: f64, grid: &GridSpec) -> Result<Self> {
        let g = build_kernel_matrix(gamma, grid)?;
        let a = build_cost_matrix(&g)?;
        Ok(KernelMatrices { gamma, g, a })
    }

    pub fn size(&self) -> usize {
        self.g.nrows()
    }
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("kernel exponent gamma must lie in (0, 1), got {gamma}")))
    }
}

/// `1/((1-gamma)(2-gamma))`, the double integral prefactor of `|t-s|^-gamma`.
pub fn kernel_prefactor(gamma: f64) -> f64 {
    1.0 / ((1.0 - gamma) * (2.0 - gamma))
}

/// Exact cell integrals of `|t-s|^-gamma` indexed by lag `|i-j|`.
pub fn kernel_lags(gamma: f64, grid: &GridSpec) -> Result<Vec<f64>> {
    check_gamma(gamma)?;
    grid.validate()?;
    let p = 2.0 - gamma;
    let scale = grid.dt().powf(p) * kernel_prefactor(gamma);
    Ok((0..grid.intervals)
        .map(|k| {
            let second_difference = match k {
                0 => 2.0,
                1 => 2f64.powf(p) - 2.0,
                _ => {
                    // k^p [(1+1/k)^p - 2 + (1-1/k)^p] without cancellation
                    let x = 1.0 / k as f64;
                    (k as f64).powf(p) * ((p * x.ln_1p()).exp_m1() + (p * (-x).ln_1p()).exp_m1())
                }
            };
            scale * second_difference
        })
        .collect())
}

/// Symmetric Toeplitz kernel matrix `G`.
pub fn build_kernel_matrix(gamma: f64, grid: &GridSpec) -> Result<DMatrix<f64>> {
    let lags = kernel_lags(gamma, grid)?;
    let n = grid.intervals;
    Ok(DMatrix::from_fn(n, n, |i, j| lags[i.abs_diff(j)]))
}

/// Lower-triangular cost matrix with halved diagonal, so that `A + A^T = G`.
pub fn build_cost_matrix(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !g.is_square() {
        return Err(Error::Dimension {
            expected: g.nrows(),
            actual: g.ncols(),
        });
    }
    let n = g.nrows();
    Ok(DMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Greater => g[(i, j)],
        std::cmp::Ordering::Equal => 0.5 * g[(i, i)],
        std::cmp::Ordering::Less => 0.0,
    }))
}

/// Constant-rate strategy `v_i = X/T`.
pub fn vwap_strategy(grid: &GridSpec) -> Strategy {
    Strategy {
        rates: vec![grid.mean_rate(); grid.intervals],
        grid: *grid,
    }
}

/// Normalization constant of the linear-impact optimum `c / [t(T-t)]^((1-gamma)/2)`.
pub fn gss_constant(gamma: f64, grid: &GridSpec) -> Result<f64> {
    check_gamma(gamma)?;
    let t = grid.horizon;
    let integral = std::f64::consts::PI.sqrt() * (0.5 * t).powf(gamma) * gamma_fn(0.5 * (1.0 + gamma))
        / gamma_fn(1.0 + 0.5 * gamma);
    Ok(grid.volume / integral)
}

/// Linear-impact optimal profile sampled at subinterval midpoints and rescaled to the volume.
pub fn gss_strategy(gamma: f64, grid: &GridSpec) -> Result<Strategy> {
    grid.validate()?;
    let c = gss_constant(gamma, grid)?;
    let t = grid.horizon;
    let exponent = 0.5 * (1.0 - gamma);
    let rates = (0..grid.intervals)
        .map(|i| {
            let s = grid.midpoint(i);
            c / (s * (t - s)).powf(exponent)
        })
        .collect();
    let mut strategy = Strategy { rates, grid: *grid };
    strategy.rescale_to_volume()?;
    Ok(strategy)
}

/// Closed-form VWAP cost `X f(X/T) T^(1-gamma) / ((1-gamma)(2-gamma))`.
pub fn vwap_cost_closed_form(gamma: f64, impact: &ImpactModel, grid: &GridSpec) -> Result<f64> {
    check_gamma(gamma)?;
    grid.validate()?;
    let rate = grid.mean_rate();
    Ok(grid.volume * impact.eval(rate)? * grid.horizon.powf(1.0 - gamma) * kernel_prefactor(gamma))
}
