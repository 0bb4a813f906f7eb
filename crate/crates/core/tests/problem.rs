use execopt::problem::{gamma_lower_bound, DhamSettings, SearchSettings};
use execopt::{DangConfig, Error, GridSpec, ImpactModel, ProblemSpec, Regularization, SolverReport, SolverSpec};
use serde_json::json;

fn spec(gamma: f64, delta: f64, n: usize, solver: SolverSpec) -> ProblemSpec {
    ProblemSpec {
        gamma,
        impact: ImpactModel::power_law(delta),
        grid: GridSpec::new(n, 1.0, 0.1).unwrap(),
        regularization: Regularization::None,
        solver,
        allow_outside_no_arbitrage: false,
    }
}

fn small_search(starts: usize) -> SearchSettings {
    SearchSettings {
        starts,
        ..SearchSettings::multistart()
    }
}

fn assert_round_trip(report: &SolverReport) {
    let text = serde_json::to_string_pretty(report).unwrap();
    let loaded: SolverReport = serde_json::from_str(&text).unwrap();
    assert_eq!(&loaded, report);
    let model = loaded.spec.as_ref().unwrap().cost_model().unwrap();
    let cost = model.expected_cost(&loaded.strategy.rates).unwrap();
    assert!((cost - report.cost).abs() <= 1e-12 * report.cost.abs(), "{cost} vs {}", report.cost);
}

#[test]
fn no_arbitrage_bounds() {
    assert!((gamma_lower_bound() - 0.415).abs() < 1e-3);
    let s = spec(0.3, 0.9, 10, SolverSpec::Perturbative);
    let Err(Error::Parameter(msg)) = s.validate() else {
        panic!("expected a parameter error");
    };
    assert!(msg.contains("0.415"), "{msg}");
    assert!(msg.contains("allow_outside_no_arbitrage"));
    assert!(spec(0.45, 0.5, 10, SolverSpec::Perturbative).validate().is_err());
    let mut s = spec(0.3, 0.9, 10, SolverSpec::Perturbative);
    s.allow_outside_no_arbitrage = true;
    assert!(s.validate().is_ok());
}

#[test]
fn solver_compatibility() {
    let mut s = spec(0.45, 0.55, 10, SolverSpec::Dham(DhamSettings::default()));
    s.regularization = Regularization::Spread { ratio: 0.1 };
    assert!(matches!(s.validate(), Err(Error::Unsupported(_))));
    s.solver = SolverSpec::Dang(DangConfig::default());
    assert!(matches!(s.validate(), Err(Error::Unsupported(_))));
    s.solver = SolverSpec::Multistart(small_search(3));
    assert!(s.validate().is_ok());
    s.solver = SolverSpec::Perturbative;
    assert!(s.validate().is_err());
}

#[test]
fn json_defaults_and_unknown_keys() {
    let parsed: ProblemSpec = serde_json::from_value(json!({
        "gamma": 0.5,
        "impact": {"kind": "power_law", "delta": 0.5},
        "grid": {"intervals": 100, "horizon": 1.0, "volume": 0.1},
        "solver": {"method": "dham"}
    }))
    .unwrap();
    assert_eq!(parsed.solver, SolverSpec::Dham(DhamSettings::default()));
    assert_eq!(parsed.regularization, Regularization::None);

    let parsed: ProblemSpec = serde_json::from_value(json!({
        "gamma": 0.5,
        "impact": {"kind": "power_law", "delta": 0.5},
        "grid": {"intervals": 100, "horizon": 1.0, "volume": 0.1},
        "solver": {"method": "monotone", "seed": 4}
    }))
    .unwrap();
    let SolverSpec::Monotone(m) = &parsed.solver else { panic!() };
    assert_eq!((m.starts, m.seed), (100, 4));

    let err = serde_json::from_value::<ProblemSpec>(json!({
        "gamma": 0.5,
        "impact": {"kind": "power_law", "delta": 0.5},
        "grid": {"intervals": 100, "horizon": 1.0, "volume": 0.1},
        "solver": {"method": "dang", "epsilonn": 1e-6}
    }))
    .unwrap_err();
    assert!(err.to_string().contains("epsilonn"), "{err}");

    let err = serde_json::from_value::<ProblemSpec>(json!({
        "gamma": 0.5,
        "impact": {"kind": "power_law", "delta": 0.5},
        "grid": {"intervals": 100, "horizon": 1.0, "volume": 0.1},
        "solver": {"method": "perturbative"},
        "colour": 1
    }))
    .unwrap_err();
    assert!(err.to_string().contains("colour"), "{err}");
}

#[test]
fn spec_round_trip() {
    let mut s = spec(0.45, 0.55, 100, SolverSpec::Multistart(small_search(17)));
    s.regularization = Regularization::ConcaveConvex {
        d: 0.5,
        market_volume: 1.0,
        c: 1.0,
    };
    let text = serde_json::to_string(&s).unwrap();
    assert_eq!(serde_json::from_str::<ProblemSpec>(&text).unwrap(), s);
}

#[test]
fn reports_reload_to_the_same_cost() {
    let dham = spec(0.5, 0.7, 40, SolverSpec::Dham(DhamSettings::default())).solve().unwrap();
    assert_round_trip(&dham.report);

    let dang = spec(0.5, 0.95, 30, SolverSpec::Dang(DangConfig::default())).solve().unwrap();
    assert!(dang.report.converged());
    assert_round_trip(&dang.report);

    let pert = spec(0.5, 0.97, 30, SolverSpec::Perturbative).solve().unwrap();
    assert_round_trip(&pert.report);

    let mut spread = spec(0.45, 0.55, 30, SolverSpec::Multistart(small_search(4)));
    spread.regularization = Regularization::Spread { ratio: 0.1 };
    let out = spread.solve().unwrap();
    assert_eq!(out.starts.len(), 4);
    assert!(out.report.spread_component > 0.0);
    assert_round_trip(&out.report);

    let mut cc = spec(0.45, 0.55, 30, SolverSpec::Monotone(SearchSettings { starts: 2, ..SearchSettings::monotone() }));
    cc.regularization = Regularization::ConcaveConvex {
        d: 1.0,
        market_volume: 1.0,
        c: 1.0,
    };
    let out = cc.solve().unwrap();
    assert_eq!(out.report.seed, Some(0));
    assert_round_trip(&out.report);
}

#[test]
fn seed_is_echoed() {
    let mut s = spec(0.5, 0.8, 20, SolverSpec::Multistart(small_search(3)));
    s.solver.set_seed(99);
    assert_eq!(s.solver.seed(), Some(99));
    let out = s.solve().unwrap();
    assert_eq!(out.report.seed, Some(99));
    assert!(out.starts.iter().all(|r| r.seed == Some(99)));
}
