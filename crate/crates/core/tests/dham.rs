use execopt::cost::best_lambda_residual;
use execopt::dham::{calibrate_lambda, homotopy_derivative_f};
use execopt::{dham_solve, gss_strategy, vwap_strategy, CostModel, DhamConfig, GridSpec, ImpactModel, Termination};
use nalgebra::DVector;

fn setup(gamma: f64, delta: f64, n: usize) -> (CostModel, DhamConfig) {
    let grid = GridSpec::new(n, 1.0, 0.1).unwrap();
    let model = CostModel::new(gamma, ImpactModel::power_law(delta), grid).unwrap();
    let config = DhamConfig::new(gss_strategy(gamma, &grid).unwrap());
    (model, config)
}

fn half_means(v: &[f64]) -> (f64, f64) {
    let h = v.len() / 2;
    let first = v[..h].iter().sum::<f64>() / h as f64;
    let second = v[v.len() - h..].iter().sum::<f64>() / h as f64;
    (first, second)
}

#[test]
fn first_derivative_branches() {
    let terms = vec![vec![1.0, 1.0], vec![3.0, 2.0]];
    let f = homotopy_derivative_f(&terms, &ImpactModel::power_law(0.5)).unwrap();
    // j <= i: f'(v0_j) v1_j
    assert!((f[(1, 1)] - 1.0).abs() < 1e-15);
    // j > i: f'(v0_i) v1_j + v0_j f''(v0_i) v1_i
    assert!((f[(0, 1)] - 0.25).abs() < 1e-15);
}

#[test]
fn concave_impact_front_loads() {
    for (delta, front) in [(0.7, true), (1.1, false)] {
        let (model, config) = setup(0.5, delta, 40);
        let r = dham_solve(&model, &config).unwrap();
        let (a, b) = half_means(&r.strategy.rates);
        assert_eq!(a > b, front, "delta {delta}: {a} vs {b}");
    }
}

#[test]
fn residual_improves_on_initial_guess() {
    for delta in [0.6, 0.8] {
        let (model, config) = setup(0.5, delta, 50);
        let r = dham_solve(&model, &config).unwrap();
        let (_, e0) = best_lambda_residual(&model.impact, &model.kernels, &config.init.rates).unwrap();
        assert!(r.residual.unwrap() < e0, "delta {delta}");
    }
}

#[test]
fn feasible_and_converged() {
    let (model, config) = setup(0.45, 0.65, 60);
    let r = dham_solve(&model, &config).unwrap();
    assert!(r.converged());
    assert_eq!(r.metadata.termination, Termination::Converged);
    assert!(r.constraint_violation <= 1e-3 * 0.1);
    assert!(r.metadata.hbar.unwrap() < 0.0);
    assert!(!r.traces.residual_curve.is_empty());
}

#[test]
fn linear_limit_cost() {
    let (model, config) = setup(0.5, 1.0, 100);
    let r = dham_solve(&model, &config).unwrap();
    let g = &model.kernels.g;
    let w = g.clone().lu().solve(&DVector::from_element(100, 1.0)).unwrap();
    let v = &w * (model.grid.target_rate_sum() / w.sum());
    let direct = model.expected_cost(v.as_slice()).unwrap();
    assert!((r.cost - direct).abs() / direct < 1e-3, "{} vs {direct}", r.cost);
}

#[test]
fn calibration_meets_volume_tolerance() {
    let (model, mut config) = setup(0.5, 0.5, 100);
    config.init = vwap_strategy(&model.grid);
    let (_, state) = calibrate_lambda(&model, &config, -60.0).unwrap();
    let volume: f64 = state.solution().iter().sum::<f64>() * model.grid.dt();
    assert!((volume - 0.1).abs() <= 1e-4);
}

#[test]
fn rejects_bad_configuration() {
    let (model, mut config) = setup(0.5, 0.5, 10);
    config.hbar_grid = vec![0.5];
    assert!(dham_solve(&model, &config).is_err());
    let (model, mut config) = setup(0.5, 0.5, 10);
    config.init.rates[3] = 0.0;
    assert!(dham_solve(&model, &config).is_err());
}
