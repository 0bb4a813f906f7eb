//! Second-order classification and statistics of multistart end points.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::cost::CostModel;
use crate::error::{Error, Result};
use crate::kernel::Strategy;
use crate::numopt::{gradient_scale, projected_gradient_norm};
use crate::report::SolverReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Minimum,
    Saddle,
    Maximum,
    Indeterminate,
}

/// Orthonormal basis (columns) of the zero-sum subspace, from a Householder reflection.
pub fn tangent_basis(n: usize) -> DMatrix<f64> {
    if n < 2 {
        return DMatrix::zeros(n, 0);
    }
    // u = e_1 + 1/sqrt(n); the reflection maps e_1 onto -1/sqrt(n), the
    // remaining columns span its orthogonal complement
    let r = 1.0 / (n as f64).sqrt();
    let mut u = vec![r; n];
    u[0] += 1.0;
    let uu: f64 = u.iter().map(|x| x * x).sum();
    DMatrix::from_fn(n, n - 1, |i, j| {
        let col = j + 1;
        let identity = if i == col { 1.0 } else { 0.0 };
        identity - 2.0 * u[i] * u[col] / uu
    })
}

/// `Q^T H Q` for the cost Hessian `H` and tangent basis `Q`.
pub fn projected_hessian(model: &CostModel, rates: &[f64]) -> Result<DMatrix<f64>> {
    let h = model.cost_hessian(rates)?;
    let q = tangent_basis(rates.len());
    let p = q.transpose() * h * &q;
    Ok((&p + p.transpose()) * 0.5)
}

fn check_stationary(model: &CostModel, rates: &[f64]) -> Result<()> {
    let norm = projected_gradient_norm(model, rates)?;
    let tolerance = 1e-6 * gradient_scale(model)?;
    if norm < tolerance {
        Ok(())
    } else {
        Err(Error::NotStationary { norm, tolerance })
    }
}

/// Eigenvalues of the projected Hessian, descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// `log10(max / min)` over the positive eigenvalues; `None` without any.
    pub log10_spread: Option<f64>,
    /// Threshold below which an eigenvalue counts as zero.
    pub tolerance: f64,
}

impl Spectrum {
    pub fn classification(&self) -> Classification {
        classify_eigenvalues(&self.eigenvalues, self.tolerance)
    }
}

pub fn classify_eigenvalues(eigenvalues: &[f64], tolerance: f64) -> Classification {
    if eigenvalues.iter().any(|l| l.abs() <= tolerance) {
        Classification::Indeterminate
    } else if eigenvalues.iter().all(|&l| l > 0.0) {
        Classification::Minimum
    } else if eigenvalues.iter().all(|&l| l < 0.0) {
        Classification::Maximum
    } else {
        Classification::Saddle
    }
}

/// Spectrum without the stationarity precondition.
pub fn spectrum_unchecked(model: &CostModel, rates: &[f64]) -> Result<Spectrum> {
    let h = model.cost_hessian(rates)?;
    let tolerance = 1e-10 * h.norm();
    let q = tangent_basis(rates.len());
    let p = q.transpose() * h * &q;
    let p = (&p + p.transpose()) * 0.5;
    let mut eigenvalues: Vec<f64> = SymmetricEigen::new(p).eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(|a, b| b.total_cmp(a));
    let positive: Vec<f64> = eigenvalues.iter().copied().filter(|&l| l > tolerance).collect();
    let log10_spread = match (positive.first(), positive.last()) {
        (Some(max), Some(min)) => Some((max / min).log10()),
        _ => None,
    };
    Ok(Spectrum {
        eigenvalues,
        log10_spread,
        tolerance,
    })
}

/// Spectrum of the projected Hessian at a stationary point.
pub fn spectrum(model: &CostModel, s: &Strategy) -> Result<Spectrum> {
    check_stationary(model, &s.rates)?;
    spectrum_unchecked(model, &s.rates)
}

/// Second-order test on the constraint tangent space.
pub fn classify_stationary_point(model: &CostModel, s: &Strategy) -> Result<Classification> {
    Ok(spectrum(model, s)?.classification())
}

/// Pairwise `dt ||v_a - v_b||`.
pub fn distance_matrix(strategies: &[Strategy]) -> Result<DMatrix<f64>> {
    let Some(first) = strategies.first() else {
        return Ok(DMatrix::zeros(0, 0));
    };
    let n = first.len();
    if let Some(bad) = strategies.iter().find(|s| s.len() != n) {
        return Err(Error::Dimension {
            expected: n,
            actual: bad.len(),
        });
    }
    let dt = first.grid.dt();
    let k = strategies.len();
    Ok(DMatrix::from_fn(k, k, |a, b| {
        if a == b {
            return 0.0;
        }
        let (x, y) = if a < b { (a, b) } else { (b, a) };
        dt * strategies[x]
            .rates
            .iter()
            .zip(&strategies[y].rates)
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt()
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeStats {
    pub extrema: usize,
    pub minima: usize,
    pub saddles: usize,
    pub maxima: usize,
    pub indeterminate: usize,
    pub fraction_minima: f64,
    /// Moments of the minima costs; kurtosis is the excess over a Gaussian.
    pub mean: f64,
    pub std: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub negative_minima: usize,
}

/// Cost moments of the minima and classification counts.
pub fn summarize(extrema: &[(f64, Classification)]) -> Result<LandscapeStats> {
    let costs: Vec<f64> = extrema
        .iter()
        .filter(|(_, c)| *c == Classification::Minimum)
        .map(|(cost, _)| *cost)
        .collect();
    if costs.len() < 2 {
        return Err(Error::Parameter(format!("need at least two minima, got {}", costs.len())));
    }
    let count = |k: Classification| extrema.iter().filter(|(_, c)| *c == k).count();
    let m = costs.len() as f64;
    // shifting by one sample keeps repeated values exactly zero-spread
    let base = costs[0];
    let shifted: Vec<f64> = costs.iter().map(|c| c - base).collect();
    let offset = shifted.iter().sum::<f64>() / m;
    let mean = base + offset;
    let central = |p: i32| shifted.iter().map(|c| (c - offset).powi(p)).sum::<f64>() / m;
    let m2 = central(2);
    let std = (m2 * m / (m - 1.0)).sqrt();
    let (skewness, kurtosis) = if m2 > 0.0 {
        (central(3) / m2.powf(1.5), central(4) / (m2 * m2) - 3.0)
    } else {
        (0.0, 0.0)
    };
    Ok(LandscapeStats {
        extrema: extrema.len(),
        minima: costs.len(),
        saddles: count(Classification::Saddle),
        maxima: count(Classification::Maximum),
        indeterminate: count(Classification::Indeterminate),
        fraction_minima: costs.len() as f64 / extrema.len() as f64,
        mean,
        std,
        skewness,
        kurtosis,
        negative_minima: costs.iter().filter(|&&c| c < 0.0).count(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub strategy: Strategy,
    pub cost: f64,
    pub classification: Classification,
    pub spectrum: Spectrum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeReport {
    pub extrema: Vec<Extremum>,
    /// Rows and columns follow `extrema`, then the reference strategies.
    pub distance_matrix: Vec<Vec<f64>>,
    pub stats: Option<LandscapeStats>,
}

/// Classifies converged end points and assembles distances and statistics.
///
/// Points that fail the stationarity precondition are skipped.
pub fn analyze(model: &CostModel, reports: &[SolverReport], references: &[Strategy]) -> Result<LandscapeReport> {
    let mut extrema = Vec::new();
    for r in reports {
        match spectrum(model, &r.strategy) {
            Ok(spectrum) => extrema.push(Extremum {
                strategy: r.strategy.clone(),
                cost: r.cost,
                classification: spectrum.classification(),
                spectrum,
            }),
            Err(Error::NotStationary { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    let mut all: Vec<Strategy> = extrema.iter().map(|e| e.strategy.clone()).collect();
    all.extend(references.iter().cloned());
    let d = distance_matrix(&all)?;
    let distance_matrix = (0..d.nrows()).map(|i| d.row(i).iter().copied().collect()).collect();
    let pairs: Vec<(f64, Classification)> = extrema.iter().map(|e| (e.cost, e.classification)).collect();
    Ok(LandscapeReport {
        extrema,
        distance_matrix,
        stats: summarize(&pairs).ok(),
    })
}
