//! Reproduction checks against published values and qualitative claims.
//!
//! Prints one `PASS` / `FAIL` line per criterion. With `EXECOPT_ACCEPTANCE_STRICT`
//! set, any failure also makes the exit status non-zero, which stops the rest of
//! a `cargo test` run. Pass criterion numbers as arguments to run a subset.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use execopt::dang::{convergence_scan, smallest_converging_delta, ScanSettings};
use execopt::kernel::build_kernel_matrix;
use execopt::landscape::{analyze, spectrum_unchecked, tangent_basis, classify_eigenvalues};
use execopt::numopt::sample_start_points;
use execopt::problem::SearchSettings;
use execopt::reference::{COSTS_MAIN, CONCAVE_CONVEX};
use execopt::{
    dang_solve, dham_solve, gss_strategy, multistart_minimize, toy_cost, vwap_cost_closed_form, vwap_strategy,
    Classification, CostModel, DangConfig, DhamConfig, GridSpec, ImpactModel, KernelMatrices, OptimizerOptions,
    ProblemSpec, Regularization, SolverReport, SolverSpec,
};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const X: f64 = 0.1;
const SEEDS: [u64; 3] = [1, 2, 3];

type Outcome = (bool, String);
type Check = (&'static str, fn() -> Outcome);

fn grid(n: usize) -> GridSpec {
    GridSpec::new(n, 1.0, X).unwrap()
}

fn model(gamma: f64, delta: f64, n: usize) -> CostModel {
    CostModel::new(gamma, ImpactModel::power_law(delta), grid(n)).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// `(gamma, delta, [VWAP, GSS, DHAM])` for every published cell.
fn main_table() -> Vec<(f64, f64, [f64; 3])> {
    let mut rows = Vec::new();
    for (delta, low, high) in COSTS_MAIN {
        if let Some(low) = low {
            rows.push((0.45, delta, low));
        }
        rows.push((0.5, delta, high));
    }
    rows
}

fn multistart(gamma: f64, delta: f64, regularization: Regularization, starts: usize, seed: u64) -> SolverReport {
    let spec = ProblemSpec {
        gamma,
        impact: ImpactModel::power_law(delta),
        grid: grid(100),
        regularization,
        solver: SolverSpec::Multistart(SearchSettings {
            starts,
            seed,
            ..SearchSettings::multistart()
        }),
        allow_outside_no_arbitrage: false,
    };
    spec.solve().unwrap().report
}

fn vwap_closed_form() -> Outcome {
    let mut worst: f64 = 0.0;
    for gamma in [0.45, 0.5] {
        for k in 0..=10 {
            let delta = 0.5 + 0.05 * k as f64;
            let m = model(gamma, delta, 100);
            let discrete = m.expected_cost(&vwap_strategy(&m.grid).rates).unwrap();
            let closed = vwap_cost_closed_form(gamma, &m.impact, &m.grid).unwrap();
            worst = worst.max(rel(discrete, closed));
        }
    }
    (worst < 1e-10, format!("max rel err {worst:.2e} over 22 (gamma, delta) pairs"))
}

fn vwap_gss_table() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (gamma, delta, [vwap, gss, _]) in main_table() {
        let m = model(gamma, delta, 100);
        let c_vwap = m.expected_cost(&vwap_strategy(&m.grid).rates).unwrap();
        let c_gss = m.expected_cost(&gss_strategy(gamma, &m.grid).unwrap().rates).unwrap();
        worst = worst.max(rel(c_vwap, vwap)).max(rel(c_gss, gss));
        count += 2;
    }
    (worst < 0.015, format!("{count} entries, max rel err {:.3}%", 100.0 * worst))
}

fn dham_headline() -> Outcome {
    let m = model(0.5, 0.5, 100);
    let gss = dham_solve(&m, &DhamConfig::new(gss_strategy(0.5, &m.grid).unwrap())).unwrap();
    let vwap = dham_solve(&m, &DhamConfig::new(vwap_strategy(&m.grid))).unwrap();
    let h_gss = gss.metadata.hbar.unwrap();
    let h_vwap = vwap.metadata.hbar.unwrap();
    let e = gss.residual.unwrap().max(vwap.residual.unwrap());
    let ok = rel(gss.cost, 0.0347) < 0.03
        && rel(h_gss, -55.7) < 0.1
        && rel(h_vwap, -60.3) < 0.1
        && e <= 1e-5
        && rel(vwap.cost, gss.cost) < 0.01;
    (
        ok,
        format!(
            "cost {:.5} / {:.5} (GSS / VWAP init), hbar {h_gss:.2} / {h_vwap:.2}, residual {e:.2e}",
            gss.cost, vwap.cost
        ),
    )
}

fn dham_table() -> Outcome {
    let mut worst = (0.0, 0.0, 0.0);
    for (gamma, delta, [_, _, expected]) in main_table() {
        let m = model(gamma, delta, 100);
        let r = dham_solve(&m, &DhamConfig::new(gss_strategy(gamma, &m.grid).unwrap())).unwrap();
        let err = rel(r.cost, expected);
        if err > worst.0 {
            worst = (err, gamma, delta);
        }
    }
    (
        worst.0 < 0.05,
        format!("21 entries, max rel err {:.2}% at gamma {}, delta {}", 100.0 * worst.0, worst.1, worst.2),
    )
}

/// Global minimiser of the two-interval cost over `v1` in `[-10 X, 12 X]`.
fn toy_minimizer(delta: f64) -> f64 {
    let f = ImpactModel::power_law(delta);
    let cost = |v1: f64| toy_cost(v1, 0.5, &f, X).unwrap();
    let (lo, hi, points) = (-10.0 * X, 12.0 * X, 22_000);
    let step = (hi - lo) / points as f64;
    let best = (0..=points)
        .map(|k| lo + step * k as f64)
        .min_by(|a, b| cost(*a).total_cmp(&cost(*b)))
        .unwrap();
    let (mut a, mut b) = (best - step, best + step);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if cost(c) < cost(d) {
            b = d;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

fn toy_transition() -> Outcome {
    let (mut lo, mut hi) = (0.5, 0.7);
    let sign_lo = toy_minimizer(lo) < 0.0;
    if sign_lo == (toy_minimizer(hi) < 0.0) {
        return (false, "no sign change of v1 on [0.5, 0.7]".into());
    }
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        if (toy_minimizer(mid) < 0.0) == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let star = 0.5 * (lo + hi);
    ((star - 0.56).abs() <= 0.02, format!("delta* = {star:.4}"))
}

fn negative_witness() -> Outcome {
    let mut found = Vec::new();
    for seed in SEEDS {
        let r = multistart(0.45, 0.55, Regularization::None, 1000, seed);
        let cost = model(0.45, 0.55, 100).expected_cost(&r.strategy.rates).unwrap();
        let feasible = r.strategy.constraint_violation() <= 1e-10 * X;
        found.push(format!("seed {seed}: {cost:.5}"));
        if feasible && cost < -0.001 {
            return (true, found.join(", "));
        }
    }
    (false, found.join(", "))
}

fn monotone_search() -> Outcome {
    let starts = 10;
    let mut costs = Vec::new();
    let mut sparsity = Vec::new();
    for delta in [0.9, 0.7, 0.5] {
        let m = model(0.5, delta, 100);
        let opts = OptimizerOptions {
            starts,
            ..OptimizerOptions::monotone()
        };
        let best = multistart_minimize(&m, &opts).unwrap().best.unwrap();
        let sparse = best.strategy.rates.iter().filter(|&&v| v < 1e-3 * X).count() as f64 / 100.0;
        costs.push(best.cost);
        sparsity.push(sparse);
    }
    let ok = rel(costs[2], 0.0278) < 0.1 && sparsity[0] < sparsity[1] && sparsity[1] < sparsity[2];
    (
        ok,
        format!(
            "{starts} starts; cost {:.5} / {:.5} / {:.5}, sparsity {:.2} / {:.2} / {:.2} at delta 0.9 / 0.7 / 0.5",
            costs[0], costs[1], costs[2], sparsity[0], sparsity[1], sparsity[2]
        ),
    )
}

fn concave_convex() -> Outcome {
    let starts = 200;
    let regularization = |d: f64| Regularization::ConcaveConvex {
        d,
        market_volume: 1.0,
        c: 1.0,
    };
    let mut worst_inflection: f64 = 0.0;
    let mut worst_vwap: f64 = 0.0;
    for row in CONCAVE_CONVEX {
        let spec = ProblemSpec {
            gamma: 0.45,
            impact: ImpactModel::power_law(0.55),
            grid: grid(100),
            regularization: regularization(row.d),
            solver: SolverSpec::Perturbative,
            allow_outside_no_arbitrage: false,
        };
        let m = spec.cost_model().unwrap();
        worst_inflection = worst_inflection.max((m.impact.inflection_rate().unwrap() - row.inflection).abs());
        let c = m.expected_cost(&vwap_strategy(&m.grid).rates).unwrap();
        worst_vwap = worst_vwap.max((c - row.vwap_cost).abs());
    }
    let mut positive = Vec::new();
    for delta in [0.55, 0.7, 0.9] {
        positive.push(multistart(0.45, delta, regularization(1.0), starts, SEEDS[0]).cost);
    }
    let witness = multistart(0.45, 0.55, regularization(0.1), starts, SEEDS[0]).cost;
    let ok = worst_inflection < 1e-3
        && worst_vwap < 1e-3
        && rel(positive[0], 0.02887) < 0.15
        && positive.iter().all(|&c| c > 0.0)
        && witness < 0.0;
    (
        ok,
        format!(
            "{starts} starts; inflection err {worst_inflection:.1e}, VWAP err {worst_vwap:.1e}, \
             d=1 best {:.5} / {:.5} / {:.5} at delta 0.55 / 0.7 / 0.9, d=0.1 best {witness:.5}",
            positive[0], positive[1], positive[2]
        ),
    )
}

fn spread() -> Outcome {
    let mut lines = Vec::new();
    for seed in SEEDS {
        let wide = multistart(0.45, 0.55, Regularization::Spread { ratio: 0.5 }, 1000, seed).cost;
        let narrow = multistart(0.45, 0.55, Regularization::Spread { ratio: 0.1 }, 1000, seed).cost;
        lines.push(format!("seed {seed}: r=0.5 {wide:.5}, r=0.1 {narrow:.5}"));
        if wide > 0.0 && narrow > 0.0 && rel(wide, 0.026) <= 0.2 && rel(narrow, 5.9e-3) <= 0.3 {
            return (true, lines.join("; "));
        }
    }
    (false, lines.join("; "))
}

fn dang() -> Outcome {
    let config = DangConfig::default();
    let linear_failures: Vec<usize> = (1..=150)
        .filter(|&n| !dang_solve(&model(0.5, 1.0, n), &config, None).unwrap().converged())
        .collect();
    let a = linear_failures.is_empty();

    let m = model(0.5, 0.95, 100);
    let fixed = dang_solve(&m, &config, None).unwrap();
    let dham = dham_solve(&m, &DhamConfig::new(gss_strategy(0.5, &m.grid).unwrap())).unwrap();
    let gap = (1..99)
        .map(|i| rel(fixed.strategy.rates[i], dham.strategy.rates[i]))
        .fold(0.0, f64::max);
    let b = fixed.converged() && gap < 0.05;

    let strong = dang_solve(&model(0.5, 0.6, 100), &config, None).unwrap();
    let c = !strong.converged() && strong.metadata.iterations <= 500;

    let deltas: Vec<f64> = (0..=10).map(|k| 0.5 + 0.05 * k as f64).collect();
    let cells = convergence_scan(&[10, 100], &deltas, &ScanSettings::default(), &config).unwrap();
    let small = smallest_converging_delta(&cells, 10);
    let large = smallest_converging_delta(&cells, 100);
    let d = matches!((small, large), (Some(s), Some(l)) if l > s);

    let mark = |x: bool| if x { "ok" } else { "fail" };
    (
        a && b && c && d,
        format!(
            "(a) {} [{} non-converged N]; (b) {} [converged {}, max gap {:.2}%]; (c) {} [{} iterations]; \
             (d) {} [delta_min {:?} at N=10, {:?} at N=100]",
            mark(a),
            linear_failures.len(),
            mark(b),
            fixed.converged(),
            100.0 * gap,
            mark(c),
            strong.metadata.iterations,
            mark(d),
            small,
            large
        ),
    )
}

fn properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut failures = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failures.push(name.to_string());
        }
    };

    let mut grad_err: f64 = 0.0;
    let mut hess_err: f64 = 0.0;
    for _ in 0..20 {
        let delta = rng.random_range(0.5..1.0);
        let m = model(0.5, delta, 10);
        let v: Vec<f64> = (0..10).map(|_| rng.random_range(0.02..0.4)).collect();
        let g = DVector::from_vec(m.cost_gradient(&v).unwrap());
        let h = m.cost_hessian(&v).unwrap();
        let mut fd_g = DVector::zeros(10);
        let mut fd_h = DMatrix::zeros(10, 10);
        for i in 0..10 {
            let step = 1e-6 * v[i];
            let (mut up, mut down) = (v.clone(), v.clone());
            up[i] += step;
            down[i] -= step;
            fd_g[i] = (m.expected_cost(&up).unwrap() - m.expected_cost(&down).unwrap()) / (2.0 * step);
            let gu = DVector::from_vec(m.cost_gradient(&up).unwrap());
            let gd = DVector::from_vec(m.cost_gradient(&down).unwrap());
            fd_h.set_column(i, &((gu - gd) / (2.0 * step)));
        }
        grad_err = grad_err.max((&fd_g - &g).norm() / g.norm());
        hess_err = hess_err.max((&fd_h - &h).norm() / h.norm());
    }
    check("gradient", grad_err < 1e-6);
    check("hessian", hess_err < 1e-5);

    let mut quad_err: f64 = 0.0;
    for gamma in [0.45, 0.5, 0.7] {
        let g = build_kernel_matrix(gamma, &GridSpec::new(5, 2.5, X).unwrap()).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let cell = |k: usize| (k as f64 * 0.5, (k + 1) as f64 * 0.5);
                let oracle = common::cell_integral(gamma, cell(i), cell(j));
                quad_err = quad_err.max(rel(g[(i, j)], oracle));
            }
        }
    }
    check("quadrature", quad_err < 1e-6);

    let k = KernelMatrices::new(0.45, &grid(40)).unwrap();
    check("a_plus_at", (&k.a + k.a.transpose() - &k.g).abs().max() < 1e-15);

    let linear = model(0.5, 1.0, 30);
    let v: Vec<f64> = (0..30).map(|_| rng.random_range(-1.0..1.0)).collect();
    let vv = DVector::from_column_slice(&v);
    let half = 0.5 * vv.dot(&(&linear.kernels.g * &vv));
    check("quadratic_form", rel(linear.expected_cost(&v).unwrap(), half) < 1e-12);

    let m = model(0.5, 0.7, 20);
    let v: Vec<f64> = (0..20).map(|_| rng.random_range(-0.3..0.6)).collect();
    let base = m.expected_cost(&v).unwrap();
    for a in [0.3, 2.0, 7.5] {
        let scaled: Vec<f64> = v.iter().map(|x| a * x).collect();
        check("scaling", rel(m.expected_cost(&scaled).unwrap(), a.powf(1.7) * base) < 1e-12);
    }

    let impacts = [
        ImpactModel::power_law(0.6),
        ImpactModel::perturbed(0.7, 0.01),
        ImpactModel::concave_convex(1.0, 0.55, 0.5, 1.0),
    ];
    for f in impacts {
        for x in [1e-4, 0.05, 0.7, 3.0] {
            check("odd_symmetry", (f.eval(-x).unwrap() + f.eval(x).unwrap()).abs() < 1e-15);
        }
    }

    let g = grid(25);
    let a = sample_start_points(40, &g, 5);
    check("determinism", a == sample_start_points(40, &g, 5));
    check(
        "simplex",
        a.iter().all(|s| s.rates.iter().all(|&r| r >= 0.0) && s.constraint_violation() < 1e-15),
    );

    for delta in [0.5, 0.75, 1.0] {
        let f = ImpactModel::power_law(delta);
        let m = CostModel::new(0.5, f, grid(2)).unwrap();
        for v1 in [-0.15, 0.03, 0.1, 0.31] {
            let matrix = m.expected_cost(&[v1, 2.0 * X - v1]).unwrap();
            check("toy", (matrix - toy_cost(v1, 0.5, &f, X).unwrap()).abs() < 1e-12);
        }
    }

    for n in [2usize, 3] {
        let q = tangent_basis(n);
        for _ in 0..200 {
            let r = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let h = (&r + r.transpose()) * 0.5;
            let p = q.transpose() * &h * &q;
            let eig = SymmetricEigen::new((&p + p.transpose()) * 0.5).eigenvalues;
            let projected = classify_eigenvalues(eig.as_slice(), 1e-10 * h.norm());
            check("bordered", projected == common::bordered_classification(&h));
        }
        let m = model(0.5, 0.6, n);
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..0.4)).collect();
        let s = spectrum_unchecked(&m, &v).unwrap();
        check(
            "bordered_cost",
            s.classification() == common::bordered_classification(&m.cost_hessian(&v).unwrap()),
        );
    }

    failures.dedup();
    let detail = format!(
        "gradient {grad_err:.1e}, Hessian {hess_err:.1e}, quadrature {quad_err:.1e}; failing: {}",
        if failures.is_empty() { "none".into() } else { failures.join(", ") }
    );
    (failures.is_empty(), detail)
}

fn landscape() -> Outcome {
    let starts = 500;
    let mut stds = Vec::new();
    let mut first = String::new();
    let mut ok = true;
    for delta in [0.5, 0.8] {
        let m = model(0.5, delta, 100);
        let opts = OptimizerOptions {
            starts,
            seed: SEEDS[0],
            ..OptimizerOptions::default()
        };
        let out = multistart_minimize(&m, &opts).unwrap();
        let report = analyze(&m, &out.extrema, &[]).unwrap();
        let stats = report.stats.unwrap();
        stds.push(stats.std);
        if delta == 0.5 {
            let spread = report
                .extrema
                .iter()
                .filter(|e| e.classification == Classification::Minimum)
                .map(|e| {
                    let eig = &e.spectrum.eigenvalues;
                    (eig[0] / eig[eig.len() - 1]).log10()
                })
                .fold(0.0, f64::max);
            ok &= stats.fraction_minima >= 0.9 && spread < 4.0;
            first = format!(
                "{starts} starts, {} extrema, {:.1}% minima, max log-spread {spread:.2}",
                stats.extrema,
                100.0 * stats.fraction_minima
            );
        }
    }
    ok &= stds[0] > stds[1];
    (ok, format!("{first}; minima cost std {:.2e} -> {:.2e} (delta 0.5 -> 0.8)", stds[0], stds[1]))
}

fn main() -> ExitCode {
    let criteria: [Check; 12] = [
        ("VWAP closed form", vwap_closed_form),
        ("VWAP and GSS cost table", vwap_gss_table),
        ("DHAM headline", dham_headline),
        ("DHAM cost table", dham_table),
        ("two-interval transition", toy_transition),
        ("negative-cost witness", negative_witness),
        ("monotone direct search", monotone_search),
        ("concave-convex impact", concave_convex),
        ("spread regularization", spread),
        ("fixed-point solver", dang),
        ("property suites", properties),
        ("landscape", landscape),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let id = k + 1;
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let (ok, detail) = run();
        let status = if ok { "PASS" } else { "FAIL" };
        println!("{status} criterion {id} ({name}): {detail} [{:.1}s]", t.elapsed().as_secs_f64());
        failed += usize::from(!ok);
    }
    if failed == 0 {
        return ExitCode::SUCCESS;
    }
    println!("{failed} criteria failed");
    if std::env::var_os("EXECOPT_ACCEPTANCE_STRICT").is_some() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
