//! Instantaneous market-impact functions.
//!
//! Every model is odd in the trading rate. Values are computed on `|v|` and the
//! sign is applied afterwards, so `f(-v) == -f(v)` holds bit for bit.

use serde::{Deserialize, Serialize};

use crate::error::{finite, Error, Result};
use crate::series;

/// Impact model `f(v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ImpactModel {
    /// `sign(v) |v|^delta`.
    PowerLaw { delta: f64 },
    /// `sign(v) (epsilon + |v|)^delta`.
    PerturbedPowerLaw { delta: f64, epsilon: f64 },
    /// `sign(v) c [ (|v|/(|v|+V))^delta + d |v|(|v|+V)/V^2 ]` with `V` the market rate.
    ConcaveConvex {
        c: f64,
        delta: f64,
        d: f64,
        market_rate: f64,
    },
}

impl ImpactModel {
    pub fn power_law(delta: f64) -> Self {
        ImpactModel::PowerLaw { delta }
    }

    pub fn perturbed(delta: f64, epsilon: f64) -> Self {
        ImpactModel::PerturbedPowerLaw { delta, epsilon }
    }

    pub fn concave_convex(c: f64, delta: f64, d: f64, market_rate: f64) -> Self {
        ImpactModel::ConcaveConvex {
            c,
            delta,
            d,
            market_rate,
        }
    }

    pub fn delta(&self) -> f64 {
        match *self {
            ImpactModel::PowerLaw { delta }
            | ImpactModel::PerturbedPowerLaw { delta, .. }
            | ImpactModel::ConcaveConvex { delta, .. } => delta,
        }
    }

    /// True when `f(v) = v` exactly.
    pub fn is_identity(&self) -> bool {
        match *self {
            ImpactModel::PowerLaw { delta } => delta == 1.0,
            ImpactModel::PerturbedPowerLaw { delta, epsilon } => delta == 1.0 && epsilon == 0.0,
            ImpactModel::ConcaveConvex { .. } => false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let delta = self.delta();
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::Parameter(format!("impact exponent must be positive, got {delta}")));
        }
        match *self {
            ImpactModel::PowerLaw { .. } => Ok(()),
            ImpactModel::PerturbedPowerLaw { epsilon, .. } => {
                if epsilon.is_finite() && epsilon >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::Parameter(format!("epsilon must be >= 0, got {epsilon}")))
                }
            }
            ImpactModel::ConcaveConvex {
                c, d, market_rate, ..
            } => {
                if !(c.is_finite() && c > 0.0) {
                    Err(Error::Parameter(format!("scale c must be positive, got {c}")))
                } else if !(d.is_finite() && d >= 0.0) {
                    Err(Error::Parameter(format!("convex weight d must be >= 0, got {d}")))
                } else if !(market_rate.is_finite() && market_rate > 0.0) {
                    Err(Error::Parameter(format!(
                        "market rate must be positive, got {market_rate}"
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// `f(v)`.
    pub fn eval(&self, v: f64) -> Result<f64> {
        finite(v)?;
        Ok(self.value(v))
    }

    /// `f'(v)`; errors where the derivative diverges (concave models at `v = 0`).
    pub fn deriv(&self, v: f64) -> Result<f64> {
        finite(v)?;
        let a = v.abs();
        if a == 0.0 && self.slope_singular_at_zero() {
            return Err(Error::Singular {
                order: 1,
                delta: self.delta(),
            });
        }
        Ok(self.g1(a))
    }

    /// `f''(v)`; errors where the curvature diverges at `v = 0`.
    pub fn second_deriv(&self, v: f64) -> Result<f64> {
        finite(v)?;
        if v == 0.0 {
            return if self.curvature_singular_at_zero() {
                Err(Error::Singular {
                    order: 2,
                    delta: self.delta(),
                })
            } else {
                Ok(0.0)
            };
        }
        Ok(self.g2(v.abs()) * v.signum())
    }

    /// Positive rate where `f''` changes sign (concave-convex model only).
    pub fn inflection_rate(&self) -> Result<f64> {
        let ImpactModel::ConcaveConvex { d, market_rate, .. } = *self else {
            return Err(Error::Unsupported(
                "inflection rate is defined for the concave-convex model only".into(),
            ));
        };
        self.validate()?;
        if d == 0.0 {
            return Err(Error::NoInflection);
        }
        let upper = 100.0 * market_rate;
        let mut prev = market_rate * 1e-12;
        if self.g2(prev) >= 0.0 {
            return Err(Error::SearchFailure(
                "impact curvature is not negative near zero".into(),
            ));
        }
        let mut bracket = None;
        while prev < upper {
            let next = (prev * 10f64.powf(0.25)).min(upper);
            if self.g2(next) > 0.0 {
                bracket = Some((prev, next));
                break;
            }
            prev = next;
        }
        let (mut lo, mut hi) = bracket.ok_or_else(|| {
            Error::SearchFailure(format!("no curvature sign change in (0, {upper})"))
        })?;
        while hi - lo > 1e-13 * market_rate.max(1.0) {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.g2(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    fn slope_singular_at_zero(&self) -> bool {
        match *self {
            ImpactModel::PowerLaw { delta } | ImpactModel::ConcaveConvex { delta, .. } => {
                delta < 1.0
            }
            ImpactModel::PerturbedPowerLaw { delta, epsilon } => epsilon == 0.0 && delta < 1.0,
        }
    }

    fn curvature_singular_at_zero(&self) -> bool {
        let delta = self.delta();
        let smooth = delta == 1.0 || delta >= 2.0;
        match *self {
            ImpactModel::PerturbedPowerLaw { epsilon, .. } if epsilon > 0.0 => false,
            _ => !smooth,
        }
    }

    /// Unchecked `f(v)` for inner loops.
    #[inline]
    pub(crate) fn value(&self, v: f64) -> f64 {
        if v == 0.0 {
            return v;
        }
        self.g0(v.abs()).copysign(v)
    }

    /// `f'(v)` with `|v|` clamped from below by `floor`.
    #[inline]
    pub(crate) fn slope_clamped(&self, v: f64, floor: f64) -> f64 {
        self.g1(v.abs().max(floor))
    }

    /// `f''(v)` with `|v|` clamped from below by `floor`; zero at `v = 0`.
    #[inline]
    pub(crate) fn curvature_clamped(&self, v: f64, floor: f64) -> f64 {
        if v == 0.0 {
            return 0.0;
        }
        self.g2(v.abs().max(floor)) * v.signum()
    }

    #[inline]
    fn g0(&self, a: f64) -> f64 {
        match *self {
            ImpactModel::PowerLaw { delta } => {
                if delta == 1.0 {
                    a
                } else {
                    a.powf(delta)
                }
            }
            ImpactModel::PerturbedPowerLaw { delta, epsilon } => (epsilon + a).powf(delta),
            ImpactModel::ConcaveConvex {
                c,
                delta,
                d,
                market_rate: m,
            } => c * ((a / (a + m)).powf(delta) + d * a * (a + m) / (m * m)),
        }
    }

    #[inline]
    fn g1(&self, a: f64) -> f64 {
        match *self {
            ImpactModel::PowerLaw { delta } => {
                if delta == 1.0 {
                    1.0
                } else {
                    delta * a.powf(delta - 1.0)
                }
            }
            ImpactModel::PerturbedPowerLaw { delta, epsilon } => {
                delta * (epsilon + a).powf(delta - 1.0)
            }
            ImpactModel::ConcaveConvex {
                c,
                delta,
                d,
                market_rate: m,
            } => {
                let s = a + m;
                let r = a / s;
                c * (delta * r.powf(delta - 1.0) * m / (s * s) + d * (2.0 * a + m) / (m * m))
            }
        }
    }

    #[inline]
    fn g2(&self, a: f64) -> f64 {
        match *self {
            ImpactModel::PowerLaw { delta } => {
                if delta == 1.0 {
                    0.0
                } else {
                    delta * (delta - 1.0) * a.powf(delta - 2.0)
                }
            }
            ImpactModel::PerturbedPowerLaw { delta, epsilon } => {
                if delta == 1.0 {
                    0.0
                } else {
                    delta * (delta - 1.0) * (epsilon + a).powf(delta - 2.0)
                }
            }
            ImpactModel::ConcaveConvex {
                c,
                delta,
                d,
                market_rate: m,
            } => {
                let s = a + m;
                let r = a / s;
                let r1 = m / (s * s);
                let r2 = -2.0 * m / (s * s * s);
                let concave = if delta == 1.0 {
                    r2
                } else {
                    delta * (delta - 1.0) * r.powf(delta - 2.0) * r1 * r1
                        + delta * r.powf(delta - 1.0) * r2
                };
                c * (concave + 2.0 * d / (m * m))
            }
        }
    }

    /// Taylor coefficients of `f(a(p))` for a one-signed series `a`.
    pub fn value_series(&self, a: &[f64]) -> Result<Vec<f64>> {
        let (b, negative) = self.magnitude_series(a)?;
        let out = match *self {
            ImpactModel::PowerLaw { delta } => series::powf(&b, delta),
            ImpactModel::PerturbedPowerLaw { delta, epsilon } => {
                series::powf(&series::add_const(&b, epsilon), delta)
            }
            ImpactModel::ConcaveConvex {
                c,
                delta,
                d,
                market_rate: m,
            } => {
                let s = series::add_const(&b, m);
                let r = series::div(&b, &s);
                let convex = series::scale(&series::mul(&b, &s), d / (m * m));
                series::scale(&series::add(&series::powf(&r, delta), &convex), c)
            }
        };
        Ok(if negative { series::scale(&out, -1.0) } else { out })
    }

    /// Taylor coefficients of `f'(a(p))` for a one-signed series `a`.
    pub fn slope_series(&self, a: &[f64]) -> Result<Vec<f64>> {
        let (b, _) = self.magnitude_series(a)?;
        Ok(match *self {
            ImpactModel::PowerLaw { delta } => series::scale(&series::powf(&b, delta - 1.0), delta),
            ImpactModel::PerturbedPowerLaw { delta, epsilon } => series::scale(
                &series::powf(&series::add_const(&b, epsilon), delta - 1.0),
                delta,
            ),
            ImpactModel::ConcaveConvex {
                c,
                delta,
                d,
                market_rate: m,
            } => {
                let s = series::add_const(&b, m);
                let r = series::div(&b, &s);
                let concave = series::scale(
                    &series::div(&series::powf(&r, delta - 1.0), &series::mul(&s, &s)),
                    delta * m,
                );
                let convex = series::scale(&series::add_const(&series::scale(&b, 2.0), m), d / (m * m));
                series::scale(&series::add(&concave, &convex), c)
            }
        })
    }

    fn magnitude_series(&self, a: &[f64]) -> Result<(Vec<f64>, bool)> {
        let a0 = *a.first().ok_or(Error::Dimension {
            expected: 1,
            actual: 0,
        })?;
        finite(a0)?;
        if a0 == 0.0 {
            return Err(Error::Singular {
                order: 1,
                delta: self.delta(),
            });
        }
        Ok(if a0 < 0.0 {
            (series::scale(a, -1.0), true)
        } else {
            (a.to_vec(), false)
        })
    }
}
