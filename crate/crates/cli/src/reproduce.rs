//! Table sweeps with published values alongside the computed ones.

use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::ValueEnum;
use execopt::dang::{convergence_scan, ScanSettings};
use execopt::landscape::distance_matrix;
use execopt::problem::{DhamSettings, SearchSettings};
use execopt::reference::{CONCAVE_CONVEX, COSTS_MAIN, COSTS_OPTIMIZERS, DISTANCE_MATRIX};
use execopt::{
    gss_strategy, vwap_strategy, DangConfig, GridSpec, ImpactModel, ProblemSpec, Regularization, SolverSpec,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::output::write_rows;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Table {
    CostsMain,
    CostsOptimizers,
    ConcaveConvex,
    DistanceMatrix,
    DangRegion,
    CostSurface,
}

impl Table {
    pub fn file_name(self) -> &'static str {
        match self {
            Table::CostsMain => "costs_main.csv",
            Table::CostsOptimizers => "costs_optimizers.csv",
            Table::ConcaveConvex => "concave_convex.csv",
            Table::DistanceMatrix => "distance_matrix.csv",
            Table::DangRegion => "dang_region.csv",
            Table::CostSurface => "cost_surface.csv",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub quick: bool,
    pub starts: Option<usize>,
    pub seed: u64,
    pub gammas: Option<Vec<f64>>,
    pub deltas: Option<Vec<f64>>,
}

impl Settings {
    fn multistart_starts(&self) -> usize {
        self.starts.unwrap_or(if self.quick { 20 } else { 1000 })
    }

    fn monotone_starts(&self) -> usize {
        self.starts.unwrap_or(if self.quick { 2 } else { SearchSettings::monotone().starts })
    }

    fn deltas(&self) -> Vec<f64> {
        if let Some(d) = &self.deltas {
            return d.clone();
        }
        if self.quick {
            vec![1.0, 0.75, 0.5]
        } else {
            (0..=10).map(|k| 1.0 - 0.05 * k as f64).collect()
        }
    }

    fn gammas(&self) -> Vec<f64> {
        self.gammas.clone().unwrap_or_else(|| vec![0.45, 0.5])
    }
}

#[derive(Debug, Serialize)]
struct CostRow {
    gamma: f64,
    delta: f64,
    method: &'static str,
    published: Option<f64>,
    computed: Option<f64>,
    rel_dev: Option<f64>,
    status: String,
}

#[derive(Debug, Serialize)]
struct ConcaveConvexRow {
    d: f64,
    quantity: &'static str,
    published: f64,
    computed: Option<f64>,
    rel_dev: Option<f64>,
    status: String,
}

#[derive(Debug, Serialize)]
struct DistanceRow {
    a: usize,
    b: usize,
    published: f64,
    computed: f64,
    rel_dev: f64,
}

#[derive(Debug, Serialize)]
struct RegionRow {
    #[serde(rename = "N")]
    n: usize,
    delta: f64,
    converged: bool,
    iterations: usize,
    squared_residual: f64,
}

fn rel_dev(published: Option<f64>, computed: Option<f64>) -> Option<f64> {
    match (published, computed) {
        (Some(p), Some(c)) if p != 0.0 => Some((c - p) / p.abs()),
        _ => None,
    }
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

/// `(delta, gamma = 0.45, gamma = 0.5)` rows of a published cost table.
type CostTable = [(f64, Option<[f64; 3]>, [f64; 3])];

/// Published `[VWAP, GSS, DHAM]` or `[DHAM, SQP, direct]` triple for a cell.
fn lookup(table: &CostTable, gamma: f64, delta: f64) -> Option<[f64; 3]> {
    let (_, low, high) = table.iter().find(|row| same(row.0, delta))?;
    if same(gamma, 0.45) {
        *low
    } else if same(gamma, 0.5) {
        Some(*high)
    } else {
        None
    }
}

fn problem(gamma: f64, delta: f64, regularization: Regularization, solver: SolverSpec) -> ProblemSpec {
    ProblemSpec {
        gamma,
        impact: ImpactModel::power_law(delta),
        grid: GridSpec {
            intervals: 100,
            horizon: 1.0,
            volume: 0.1,
        },
        regularization,
        solver,
        allow_outside_no_arbitrage: false,
    }
}

fn search(starts: usize, seed: u64) -> SearchSettings {
    SearchSettings {
        starts,
        seed,
        ..SearchSettings::multistart()
    }
}

fn monotone(starts: usize, seed: u64) -> SearchSettings {
    SearchSettings {
        starts,
        seed,
        ..SearchSettings::monotone()
    }
}

fn cost_of(spec: &ProblemSpec) -> execopt::Result<f64> {
    spec.solve().map(|s| s.report.cost)
}

/// One output row per method for every `(gamma, delta)` cell; cells run in parallel.
fn cost_rows(
    cells: &[(f64, f64)],
    methods: &[&'static str],
    published: impl Fn(f64, f64) -> Option<Vec<f64>> + Sync,
    compute: impl Fn(f64, f64, &str) -> execopt::Result<f64> + Sync,
) -> Vec<CostRow> {
    let jobs: Vec<(f64, f64, usize)> =
        cells.iter().flat_map(|&(g, d)| (0..methods.len()).map(move |m| (g, d, m))).collect();
    jobs.par_iter()
        .map(|&(gamma, delta, m)| {
            let published = published(gamma, delta).map(|v| v[m]);
            let (computed, status) = match compute(gamma, delta, methods[m]) {
                Ok(c) => (Some(c), "ok".to_string()),
                Err(e) => (None, e.to_string()),
            };
            CostRow {
                gamma,
                delta,
                method: methods[m],
                published,
                computed,
                rel_dev: rel_dev(published, computed),
                status,
            }
        })
        .collect()
}

fn table_cells(settings: &Settings) -> Vec<(f64, f64)> {
    let deltas = settings.deltas();
    settings
        .gammas()
        .into_iter()
        .flat_map(|g| deltas.iter().map(move |&d| (g, d)))
        .collect()
}

fn compute_cost(gamma: f64, delta: f64, method: &str, settings: &Settings) -> execopt::Result<f64> {
    let reg = Regularization::None;
    match method {
        "vwap" | "gss" => {
            let spec = problem(gamma, delta, reg, SolverSpec::Perturbative);
            spec.validate()?;
            let m = spec.cost_model()?;
            let s = if method == "vwap" {
                vwap_strategy(&m.grid)
            } else {
                gss_strategy(gamma, &m.grid)?
            };
            m.expected_cost(&s.rates)
        }
        "dham" => cost_of(&problem(gamma, delta, reg, SolverSpec::Dham(DhamSettings::default()))),
        "multistart" => cost_of(&problem(
            gamma,
            delta,
            reg,
            SolverSpec::Multistart(search(settings.multistart_starts(), settings.seed)),
        )),
        "monotone" => cost_of(&problem(
            gamma,
            delta,
            reg,
            SolverSpec::Monotone(monotone(settings.monotone_starts(), settings.seed)),
        )),
        other => unreachable!("unknown method {other}"),
    }
}

fn costs_main(settings: &Settings) -> Vec<CostRow> {
    cost_rows(
        &table_cells(settings),
        &["vwap", "gss", "dham"],
        |g, d| lookup(&COSTS_MAIN, g, d).map(|v| v.to_vec()),
        |g, d, m| compute_cost(g, d, m, settings),
    )
}

fn costs_optimizers(settings: &Settings) -> Vec<CostRow> {
    cost_rows(
        &table_cells(settings),
        &["dham", "multistart", "monotone"],
        |g, d| lookup(&COSTS_OPTIMIZERS, g, d).map(|v| v.to_vec()),
        |g, d, m| compute_cost(g, d, m, settings),
    )
}

fn cost_surface(settings: &Settings) -> Vec<CostRow> {
    cost_rows(
        &table_cells(settings),
        &["vwap", "gss", "dham", "multistart"],
        |g, d| {
            let main = lookup(&COSTS_MAIN, g, d)?;
            let opt = lookup(&COSTS_OPTIMIZERS, g, d)?;
            Some(vec![main[0], main[1], main[2], opt[1]])
        },
        |g, d, m| compute_cost(g, d, m, settings),
    )
}

fn concave_convex(settings: &Settings) -> Vec<ConcaveConvexRow> {
    let starts = settings.starts.unwrap_or(if settings.quick { 200 } else { 1000 });
    let rows: Vec<Vec<ConcaveConvexRow>> = CONCAVE_CONVEX
        .par_iter()
        .map(|row| {
            let reg = Regularization::ConcaveConvex {
                d: row.d,
                market_volume: 1.0,
                c: 1.0,
            };
            let spec = problem(0.45, 0.55, reg, SolverSpec::Multistart(search(starts, settings.seed)));
            let values = (|| -> execopt::Result<[f64; 5]> {
                let m = spec.cost_model()?;
                let inflection = m.impact.inflection_rate()?;
                let vwap = m.expected_cost(&vwap_strategy(&m.grid).rates)?;
                let best = spec.solve()?.report;
                // trading speeds of the active intervals of the optimal schedule
                let floor = 1e-3 * m.grid.mean_rate();
                let active: Vec<f64> = best.strategy.rates.iter().copied().filter(|&v| v > floor).collect();
                let k = active.len() as f64;
                let mean = active.iter().sum::<f64>() / k;
                let std = (active.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0).max(1.0)).sqrt();
                Ok([inflection, mean, std, best.cost, vwap])
            })();
            let published = [
                ("inflection", row.inflection),
                ("mean_positive_rate", row.mean_positive_rate),
                ("std_positive_rate", row.std_positive_rate),
                ("multistart_cost", row.multistart_cost),
                ("vwap_cost", row.vwap_cost),
            ];
            published
                .iter()
                .enumerate()
                .map(|(k, &(quantity, p))| {
                    let (computed, status) = match &values {
                        Ok(v) => (Some(v[k]), "ok".to_string()),
                        Err(e) => (None, e.to_string()),
                    };
                    ConcaveConvexRow {
                        d: row.d,
                        quantity,
                        published: p,
                        computed,
                        rel_dev: rel_dev(Some(p), computed),
                        status,
                    }
                })
                .collect()
        })
        .collect();
    rows.into_iter().flatten().collect()
}

/// Distances between the four cheapest distinct minima and VWAP (index 4).
fn distances(settings: &Settings) -> Result<Vec<DistanceRow>> {
    let starts = settings.starts.unwrap_or(if settings.quick { 50 } else { 1000 });
    let spec = problem(0.5, 0.5, Regularization::None, SolverSpec::Perturbative);
    let m = spec.cost_model()?;
    let opts = search(starts, settings.seed).options(false);
    let outcome = execopt::multistart_minimize(&m, &opts)?;
    let mut set: Vec<_> = outcome.extrema.iter().take(4).map(|r| r.strategy.clone()).collect();
    if set.len() < 4 {
        anyhow::bail!("only {} distinct extrema found; increase --starts", set.len());
    }
    set.push(vwap_strategy(&m.grid));
    let d = distance_matrix(&set)?;
    let mut rows = Vec::new();
    for a in 0..5 {
        for b in a + 1..5 {
            let published = DISTANCE_MATRIX[a][b];
            rows.push(DistanceRow {
                a,
                b,
                published,
                computed: d[(a, b)],
                rel_dev: (d[(a, b)] - published) / published,
            });
        }
    }
    Ok(rows)
}

fn dang_region(settings: &Settings) -> Result<Vec<RegionRow>> {
    let ns: Vec<usize> = if settings.quick {
        vec![4, 10, 30]
    } else {
        vec![2, 4, 6, 8, 10, 15, 20, 30, 50, 75, 100, 150]
    };
    let deltas = settings.deltas();
    let scan = ScanSettings {
        seed: settings.seed,
        ..ScanSettings::default()
    };
    let cells = convergence_scan(&ns, &deltas, &scan, &DangConfig::default())?;
    Ok(cells
        .into_iter()
        .map(|c| RegionRow {
            n: c.n,
            delta: c.delta,
            converged: c.converged,
            iterations: c.iterations,
            squared_residual: c.squared_residual,
        })
        .collect())
}

/// Runs `table` and writes its CSV into `dir`; returns the written path.
pub fn reproduce(table: Table, settings: &Settings, dir: &Path) -> Result<PathBuf> {
    let path = dir.join(table.file_name());
    match table {
        Table::CostsMain => write_rows(&path, &costs_main(settings))?,
        Table::CostsOptimizers => write_rows(&path, &costs_optimizers(settings))?,
        Table::CostSurface => write_rows(&path, &cost_surface(settings))?,
        Table::ConcaveConvex => write_rows(&path, &concave_convex(settings))?,
        Table::DistanceMatrix => write_rows(&path, &distances(settings)?)?,
        Table::DangRegion => write_rows(&path, &dang_region(settings)?)?,
    }
    Ok(path)
}
