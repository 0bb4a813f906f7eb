//! Brute-force oracles shared by several test targets.
#![allow(dead_code)]

use std::f64::consts::FRAC_PI_2;

use execopt::Classification;
use nalgebra::DMatrix;

/// Tanh-sinh rule on `[a, b]`; handles integrable endpoint singularities.
pub fn tanh_sinh(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let h = 1.0 / 32.0;
    let half = 0.5 * (b - a);
    let mut sum = 0.0;
    for k in -128i32..=128 {
        let t = k as f64 * h;
        let u = FRAC_PI_2 * t.sinh();
        let w = FRAC_PI_2 * t.cosh() / u.cosh().powi(2);
        // distance to the nearer endpoint, computed without cancellation
        let gap = half * 2.0 / (1.0 + (2.0 * u.abs()).exp());
        if w < 1e-300 || gap == 0.0 {
            continue;
        }
        let x = if t >= 0.0 { b - gap } else { a + gap };
        sum += w * f(x);
    }
    sum * half * h
}

/// Double integral of `|t - s|^-gamma` over a pair of cells, by nested quadrature.
pub fn cell_integral(gamma: f64, (a, b): (f64, f64), (c, d): (f64, f64)) -> f64 {
    // inner integral over the distance u = |t - s|, singular only at u = 0
    let kernel = |u: f64| u.powf(-gamma);
    let inner = |t: f64| -> f64 {
        if t > c && t < d {
            tanh_sinh(&kernel, 0.0, t - c) + tanh_sinh(&kernel, 0.0, d - t)
        } else {
            let (near, far) = if t <= c { (c - t, d - t) } else { (t - d, t - c) };
            tanh_sinh(&kernel, near, far)
        }
    };
    tanh_sinh(&inner, a, b)
}

/// Determinant-sign test on the Hessian bordered by the all-ones constraint gradient.
pub fn bordered_classification(h: &DMatrix<f64>) -> Classification {
    let n = h.nrows();
    let mut b = DMatrix::zeros(n + 1, n + 1);
    for i in 0..n {
        b[(0, i + 1)] = 1.0;
        b[(i + 1, 0)] = 1.0;
        for j in 0..n {
            b[(i + 1, j + 1)] = h[(i, j)];
        }
    }
    // leading minors of order 1 + r for r = 2..n
    let minors: Vec<f64> = (2..=n).map(|r| b.view((0, 0), (r + 1, r + 1)).into_owned().determinant()).collect();
    let scale = h.norm().powi(n as i32 - 1).max(f64::MIN_POSITIVE);
    if minors.iter().any(|d| d.abs() <= 1e-10 * scale) {
        Classification::Indeterminate
    } else if minors.iter().all(|&d| -d > 0.0) {
        Classification::Minimum
    } else if minors.iter().enumerate().all(|(k, &d)| if (k + 2) % 2 == 0 { d > 0.0 } else { d < 0.0 }) {
        Classification::Maximum
    } else {
        Classification::Saddle
    }
}
