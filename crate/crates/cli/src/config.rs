use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use execopt::problem::DhamSettings;
use execopt::{GridSpec, ImpactModel, ProblemSpec, Regularization, SolverSpec};
use serde::{Deserialize, Serialize};

/// Run configuration: a problem spec plus where to write results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub gamma: f64,
    #[serde(default)]
    pub allow_outside_no_arbitrage: bool,
    pub impact: ImpactModel,
    pub grid: GridSpec,
    #[serde(default)]
    pub regularization: Regularization,
    pub solver: SolverSpec,
    #[serde(default)]
    pub output: OutputPaths,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    pub report: PathBuf,
    pub profile: PathBuf,
    /// Per-start table; only written by the multistart and monotone solvers.
    pub starts: PathBuf,
}

impl Default for OutputPaths {
    fn default() -> Self {
        OutputPaths {
            report: "report.json".into(),
            profile: "profile.csv".into(),
            starts: "starts.csv".into(),
        }
    }
}

impl Config {
    pub fn problem(&self) -> ProblemSpec {
        ProblemSpec {
            gamma: self.gamma,
            impact: self.impact,
            grid: self.grid,
            regularization: self.regularization.clone(),
            solver: self.solver.clone(),
            allow_outside_no_arbitrage: self.allow_outside_no_arbitrage,
        }
    }

    /// The reference problem with the given solver and default settings everywhere else.
    pub fn with_solver(solver: SolverSpec) -> Self {
        Config {
            gamma: 0.5,
            allow_outside_no_arbitrage: false,
            impact: ImpactModel::power_law(0.5),
            grid: GridSpec {
                intervals: 100,
                horizon: 1.0,
                volume: 0.1,
            },
            regularization: Regularization::None,
            solver,
            output: OutputPaths::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Output paths resolved against `dir` when they are relative.
    pub fn resolve_outputs(&mut self, dir: &Path) {
        for p in [&mut self.output.report, &mut self.output.profile, &mut self.output.starts] {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
    }
}

impl Default for Config {
    fn default() -> Self {
        Self::with_solver(SolverSpec::Dham(DhamSettings::default()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use execopt::problem::SearchSettings;

    const BASE: &str = r#"
gamma = 0.5

[impact]
kind = "power_law"
delta = 0.6

[grid]
intervals = 50
horizon = 1.0
volume = 0.1
"#;

    #[test]
    fn partial_tables_take_defaults() {
        let c = Config::parse(&format!("{BASE}\n[solver]\nmethod = \"monotone\"\nseed = 3\n")).unwrap();
        let SolverSpec::Monotone(s) = &c.solver else { panic!() };
        assert_eq!(s, &SearchSettings { seed: 3, ..SearchSettings::monotone() });
        assert_eq!(c.regularization, Regularization::None);
        assert_eq!(c.output, OutputPaths::default());
        assert!(!c.allow_outside_no_arbitrage);
    }

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = Config::default();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(Config::parse(&text).unwrap(), c);
    }

    #[test]
    fn regularization_tables() {
        let c = Config::parse(&format!(
            "{BASE}\n[regularization]\nkind = \"concave_convex\"\nd = 0.5\nmarket_volume = 1.0\n\n[solver]\nmethod = \"multistart\"\n"
        ))
        .unwrap();
        assert_eq!(c.regularization, Regularization::ConcaveConvex { d: 0.5, market_volume: 1.0, c: 1.0 });
        let err = Config::parse(&format!("{BASE}\n[regularization]\nkind = \"spread\"\nratoi = 0.1\n\n[solver]\nmethod = \"dang\"\n"))
            .unwrap_err();
        assert!(format!("{err:#}").contains("ratoi"));
    }

    #[test]
    fn relative_outputs_follow_the_directory() {
        let mut c = Config::default();
        c.output.starts = "/abs/starts.csv".into();
        c.resolve_outputs(Path::new("out"));
        assert_eq!(c.output.report, Path::new("out/report.json"));
        assert_eq!(c.output.starts, Path::new("/abs/starts.csv"));
    }
}
