//! Complete problem description and solver dispatch.

use serde::{Deserialize, Serialize};

use crate::cost::{spread_coefficient, CostModel};
use crate::dang::{dang_solve, DangConfig};
use crate::dham::{dham_solve, DhamConfig};
use crate::error::{Error, Result};
use crate::impact::ImpactModel;
use crate::kernel::{check_gamma, gss_strategy, vwap_strategy, GridSpec};
use crate::numopt::{multistart_minimize, OptimizerOptions};
use crate::perturbative::perturbative_solve;
use crate::report::SolverReport;

/// Lower bound `2 - ln 3 / ln 2` on the kernel exponent.
pub fn gamma_lower_bound() -> f64 {
    2.0 - 3f64.ln() / 2f64.ln()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Regularization {
    #[default]
    None,
    /// Half spread set to `ratio` times the VWAP impact cost per share.
    Spread { ratio: f64 },
    /// Replaces the impact by the concave-convex form with the same exponent.
    ConcaveConvex {
        d: f64,
        market_volume: f64,
        #[serde(default = "one")]
        c: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialGuess {
    Vwap,
    #[default]
    Gss,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DhamSettings {
    pub order: usize,
    pub hbar_min: f64,
    pub hbar_max: f64,
    pub hbar_points: usize,
    pub refine: bool,
    pub lambda_tolerance: f64,
    pub init: InitialGuess,
}

impl Default for DhamSettings {
    fn default() -> Self {
        DhamSettings {
            order: 7,
            hbar_min: -120.0,
            hbar_max: 0.0,
            hbar_points: 121,
            refine: true,
            lambda_tolerance: 1e-3,
            init: InitialGuess::Gss,
        }
    }
}

impl DhamSettings {
    /// `hbar_points` values on `[hbar_min, hbar_max)`.
    pub fn hbar_grid(&self) -> Vec<f64> {
        let width = self.hbar_max - self.hbar_min;
        (0..self.hbar_points)
            .map(|k| self.hbar_min + width * k as f64 / self.hbar_points as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSettings {
    pub starts: usize,
    pub seed: u64,
    pub max_iterations: usize,
    pub gradient_tolerance: Option<f64>,
    pub step_tolerance: f64,
}

impl SearchSettings {
    pub fn multistart() -> Self {
        let o = OptimizerOptions::default();
        SearchSettings {
            starts: o.starts,
            seed: o.seed,
            max_iterations: o.max_iterations,
            gradient_tolerance: o.gradient_tolerance,
            step_tolerance: o.step_tolerance,
        }
    }

    pub fn monotone() -> Self {
        let o = OptimizerOptions::monotone();
        SearchSettings {
            starts: 100,
            seed: o.seed,
            max_iterations: o.max_iterations,
            gradient_tolerance: None,
            step_tolerance: o.step_tolerance,
        }
    }

    pub fn options(&self, monotone: bool) -> OptimizerOptions {
        OptimizerOptions {
            max_iterations: self.max_iterations,
            gradient_tolerance: self.gradient_tolerance,
            step_tolerance: self.step_tolerance,
            seed: self.seed,
            starts: self.starts,
            monotone,
        }
    }
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self::multistart()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SolverSpec {
    Dham(DhamSettings),
    Dang(DangConfig),
    /// Expansion in `eps = 1 - delta` around the linear optimum.
    Perturbative,
    Multistart(SearchSettings),
    Monotone(#[serde(deserialize_with = "monotone_settings")] SearchSettings),
}

/// Same fields as [`SearchSettings`], defaulting to the monotone preset.
#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct MonotoneFields {
    starts: usize,
    seed: u64,
    max_iterations: usize,
    gradient_tolerance: Option<f64>,
    step_tolerance: f64,
}

impl Default for MonotoneFields {
    fn default() -> Self {
        let s = SearchSettings::monotone();
        MonotoneFields {
            starts: s.starts,
            seed: s.seed,
            max_iterations: s.max_iterations,
            gradient_tolerance: s.gradient_tolerance,
            step_tolerance: s.step_tolerance,
        }
    }
}

fn monotone_settings<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<SearchSettings, D::Error> {
    let f = MonotoneFields::deserialize(d)?;
    Ok(SearchSettings {
        starts: f.starts,
        seed: f.seed,
        max_iterations: f.max_iterations,
        gradient_tolerance: f.gradient_tolerance,
        step_tolerance: f.step_tolerance,
    })
}

impl SolverSpec {
    pub fn seed(&self) -> Option<u64> {
        match self {
            SolverSpec::Multistart(s) | SolverSpec::Monotone(s) => Some(s.seed),
            _ => None,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        if let SolverSpec::Multistart(s) | SolverSpec::Monotone(s) = self {
            s.seed = seed;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub gamma: f64,
    pub impact: ImpactModel,
    pub grid: GridSpec,
    #[serde(default)]
    pub regularization: Regularization,
    pub solver: SolverSpec,
    /// Accept parameters outside the no-dynamic-arbitrage region.
    #[serde(default)]
    pub allow_outside_no_arbitrage: bool,
}

/// Best strategy plus every per-start report of a multistart run.
#[derive(Debug, Clone)]
pub struct Solution {
    pub report: SolverReport,
    pub starts: Vec<SolverReport>,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        check_gamma(self.gamma)?;
        self.grid.validate()?;
        let impact = self.effective_impact()?;
        impact.validate()?;
        let delta = impact.delta();
        if !self.allow_outside_no_arbitrage
            && (self.gamma + delta < 1.0 - 1e-12 || self.gamma < gamma_lower_bound() - 1e-12)
        {
            return Err(Error::Parameter(format!(
                "gamma = {} and delta = {} violate the no-dynamic-arbitrage conditions \
                 gamma + delta >= 1 and gamma >= 2 - ln 3/ln 2 ~ {:.3}; \
                 set allow_outside_no_arbitrage = true to override",
                self.gamma,
                delta,
                gamma_lower_bound()
            )));
        }
        let spread = matches!(self.regularization, Regularization::Spread { .. });
        match &self.solver {
            SolverSpec::Dham(s) => {
                if spread {
                    return Err(Error::Unsupported("the homotopy solver does not handle the spread term".into()));
                }
                if s.order == 0 || s.hbar_points == 0 || !(s.hbar_min < s.hbar_max && s.hbar_max <= 0.0) {
                    return Err(Error::Parameter("dham needs order >= 1 and hbar_min < hbar_max <= 0".into()));
                }
            }
            SolverSpec::Dang(c) => {
                if spread {
                    return Err(Error::Unsupported("the fixed-point solver does not handle the spread term".into()));
                }
                c.validate()?;
            }
            SolverSpec::Perturbative => {
                if !matches!(self.impact, ImpactModel::PowerLaw { .. }) || self.regularization != Regularization::None {
                    return Err(Error::Unsupported(
                        "the perturbative solver needs a plain power-law impact without regularization".into(),
                    ));
                }
            }
            SolverSpec::Multistart(s) => s.options(false).validate()?,
            SolverSpec::Monotone(s) => s.options(true).validate()?,
        }
        Ok(())
    }

    /// Impact after applying a concave-convex regularization.
    pub fn effective_impact(&self) -> Result<ImpactModel> {
        Ok(match self.regularization {
            Regularization::ConcaveConvex { d, market_volume, c } => {
                ImpactModel::concave_convex(c, self.impact.delta(), d, market_volume / self.grid.horizon)
            }
            _ => self.impact,
        })
    }

    pub fn cost_model(&self) -> Result<CostModel> {
        let impact = self.effective_impact()?;
        let model = CostModel::new(self.gamma, impact, self.grid)?;
        match self.regularization {
            Regularization::Spread { ratio } => {
                let spread = spread_coefficient(ratio, self.gamma, &impact, self.grid.volume, self.grid.horizon)?;
                model.with_spread(spread)
            }
            _ => Ok(model),
        }
    }

    /// Validates, solves and attaches this spec to the report.
    pub fn solve(&self) -> Result<Solution> {
        self.validate()?;
        let model = self.cost_model()?;
        let mut starts = Vec::new();
        let mut report = match &self.solver {
            SolverSpec::Dham(s) => {
                let init = match s.init {
                    InitialGuess::Vwap => vwap_strategy(&self.grid),
                    InitialGuess::Gss => gss_strategy(self.gamma, &self.grid)?,
                };
                let config = DhamConfig {
                    order: s.order,
                    hbar_grid: s.hbar_grid(),
                    refine: s.refine,
                    lambda_tolerance: s.lambda_tolerance,
                    init,
                };
                dham_solve(&model, &config)?
            }
            SolverSpec::Dang(c) => dang_solve(&model, c, None)?,
            SolverSpec::Perturbative => perturbative_solve(self.gamma, 1.0 - self.impact.delta(), &self.grid)?,
            SolverSpec::Multistart(s) | SolverSpec::Monotone(s) => {
                let monotone = matches!(self.solver, SolverSpec::Monotone(_));
                let outcome = multistart_minimize(&model, &s.options(monotone))?;
                starts = outcome.all;
                outcome
                    .best
                    .ok_or_else(|| Error::SearchFailure("no start produced a finite cost".into()))?
            }
        };
        report.spec = Some(self.clone());
        report.seed = self.solver.seed();
        Ok(Solution { report, starts })
    }
}
