//! Published reference values used for reproduction checks.
//!
//! All entries use `N = 100`, `X = 0.1`, `T = 1` and a pure power-law impact
//! unless stated otherwise.

/// Rows of the VWAP / GSS / DHAM cost table: `(delta, [gamma = 0.45], [gamma = 0.5])`,
/// each group ordered VWAP, GSS, DHAM. The `gamma = 0.45, delta = 0.5` cell lies
/// outside the no-arbitrage region and is absent.
pub const COSTS_MAIN: [(f64, Option<[f64; 3]>, [f64; 3]); 11] = [
    (1.0, Some([0.0117, 0.0116, 0.0116]), [0.0133, 0.0132, 0.0131]),
    (0.95, Some([0.0132, 0.0130, 0.0130]), [0.0150, 0.0148, 0.0148]),
    (0.90, Some([0.0148, 0.0146, 0.0143]), [0.0168, 0.0166, 0.0164]),
    (0.85, Some([0.0166, 0.0164, 0.0162]), [0.0188, 0.0186, 0.0185]),
    (0.80, Some([0.0186, 0.0184, 0.0179]), [0.0211, 0.0209, 0.0204]),
    (0.75, Some([0.0209, 0.0206, 0.0198]), [0.0237, 0.0234, 0.0227]),
    (0.70, Some([0.0234, 0.0231, 0.0218]), [0.0266, 0.0263, 0.0249]),
    (0.65, Some([0.0263, 0.0260, 0.0235]), [0.0298, 0.0295, 0.0274]),
    (0.60, Some([0.0295, 0.0291, 0.0251]), [0.0335, 0.0331, 0.0297]),
    (0.55, Some([0.0331, 0.0327, 0.0275]), [0.0376, 0.0372, 0.0323]),
    (0.50, None, [0.0422, 0.0417, 0.0347]),
];

/// Rows of the DHAM / quasi-Newton multistart / direct-search table, same layout.
pub const COSTS_OPTIMIZERS: [(f64, Option<[f64; 3]>, [f64; 3]); 11] = [
    (1.0, Some([0.0116, 0.0115, 0.0115]), [0.0131, 0.0131, 0.0131]),
    (0.95, Some([0.0130, 0.0128, 0.0129]), [0.0148, 0.0147, 0.0147]),
    (0.90, Some([0.0143, 0.0136, 0.0140]), [0.0164, 0.0158, 0.0162]),
    (0.85, Some([0.0162, 0.0139, 0.0151]), [0.0185, 0.0166, 0.0176]),
    (0.80, Some([0.0179, 0.0138, 0.0162]), [0.0204, 0.0170, 0.0188]),
    (0.75, Some([0.0198, 0.0132, 0.0169]), [0.0227, 0.0169, 0.0202]),
    (0.70, Some([0.0218, 0.0117, 0.0184]), [0.0249, 0.0163, 0.0220]),
    (0.65, Some([0.0235, 0.0092, 0.0191]), [0.0274, 0.0146, 0.0238]),
    (0.60, Some([0.0251, 0.0047, 0.0201]), [0.0297, 0.0120, 0.0245]),
    (0.55, Some([0.0275, -0.0029, 0.0212]), [0.0323, 0.0075, 0.0262]),
    (0.50, None, [0.0347, 0.0003, 0.0278]),
];

/// Best squared residual of the order-7 DHAM solution: `(delta, gamma = 0.45, gamma = 0.5)`.
pub const DHAM_RESIDUALS: [(f64, Option<f64>, f64); 11] = [
    (1.0, Some(3.99e-9), 3.23e-9),
    (0.95, Some(1.15e-8), 7.96e-9),
    (0.90, Some(3.31e-8), 2.43e-8),
    (0.85, Some(7.84e-8), 5.63e-8),
    (0.80, Some(1.74e-7), 1.26e-7),
    (0.75, Some(3.45e-7), 2.52e-7),
    (0.70, Some(6.18e-7), 4.60e-7),
    (0.65, Some(8.72e-7), 7.43e-7),
    (0.60, Some(8.93e-7), 8.47e-7),
    (0.55, Some(2.66e-6), 2.25e-6),
    (0.50, None, 3.25e-6),
];

/// Concave-convex impact with `c = 1`, `delta = 0.55`, `X_M = 1`, at `gamma = 0.45`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcaveConvexRow {
    pub d: f64,
    pub inflection: f64,
    pub mean_positive_rate: f64,
    pub std_positive_rate: f64,
    pub multistart_cost: f64,
    pub vwap_cost: f64,
}

pub const CONCAVE_CONVEX: [ConcaveConvexRow; 4] = [
    ConcaveConvexRow {
        d: 0.1,
        inflection: 1.0755,
        mean_positive_rate: 1.1485,
        std_positive_rate: 0.3193,
        multistart_cost: -0.00245,
        vwap_cost: 0.03266,
    },
    ConcaveConvexRow {
        d: 0.5,
        inflection: 0.4256,
        mean_positive_rate: 0.4835,
        std_positive_rate: 0.0911,
        multistart_cost: 0.01674,
        vwap_cost: 0.03782,
    },
    ConcaveConvexRow {
        d: 1.0,
        inflection: 0.2678,
        mean_positive_rate: 0.3229,
        std_positive_rate: 0.0443,
        multistart_cost: 0.02887,
        vwap_cost: 0.04428,
    },
    ConcaveConvexRow {
        d: 2.0,
        inflection: 0.1639,
        mean_positive_rate: 0.2170,
        std_positive_rate: 0.0292,
        multistart_cost: 0.04752,
        vwap_cost: 0.05718,
    },
];

/// Distances between the four cheapest multistart minima and VWAP (last row),
/// `gamma = delta = 0.5`.
pub const DISTANCE_MATRIX: [[f64; 5]; 5] = [
    [0.0, 0.0780, 0.0753, 0.0890, 0.0617],
    [0.0780, 0.0, 0.0757, 0.0757, 0.0582],
    [0.0753, 0.0757, 0.0, 0.0799, 0.0581],
    [0.0890, 0.0757, 0.0799, 0.0, 0.0576],
    [0.0617, 0.0582, 0.0581, 0.0576, 0.0],
];
