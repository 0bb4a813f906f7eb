//! Truncated Taylor series arithmetic.
//!
//! A series is a coefficient slice `a[0] + a[1] p + a[2] p^2 + ...`; every
//! operation returns the first `a.len()` coefficients of the exact result.

pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().min(b.len());
    (0..n)
        .map(|k| (0..=k).map(|j| a[j] * b[k - j]).sum())
        .collect()
}

/// Quotient `a / b`; requires `b[0] != 0`.
pub fn div(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().min(b.len());
    let mut q = Vec::with_capacity(n);
    for k in 0..n {
        let acc: f64 = (1..=k).map(|j| b[j] * q[k - j]).sum();
        q.push((a[k] - acc) / b[0]);
    }
    q
}

/// Real power `a^alpha` by the J.C.P. Miller recurrence; requires `a[0] > 0`.
pub fn powf(a: &[f64], alpha: f64) -> Vec<f64> {
    let n = a.len();
    let mut b = Vec::with_capacity(n);
    if n == 0 {
        return b;
    }
    b.push(a[0].powf(alpha));
    for k in 1..n {
        let kf = k as f64;
        let acc: f64 = (1..=k)
            .map(|j| ((alpha + 1.0) * j as f64 - kf) * a[j] * b[k - j])
            .sum();
        b.push(acc / (kf * a[0]));
    }
    b
}

pub fn add_const(a: &[f64], c: f64) -> Vec<f64> {
    let mut out = a.to_vec();
    if let Some(first) = out.first_mut() {
        *first += c;
    }
    out
}

pub fn scale(a: &[f64], c: f64) -> Vec<f64> {
    a.iter().map(|x| x * c).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}
