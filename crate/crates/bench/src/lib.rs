//! Fixtures shared by the benchmarks in `benches/`.

use rjd_core::{DriftDiffusionSpec, JumpFamily, RJDModel, ScalarFn};

/// Drift -2, unit diffusion, unit upward jumps at rate 1.
pub fn unit_shift() -> RJDModel {
    RJDModel::new(
        DriftDiffusionSpec::constant(-2.0, 1.0),
        JumpFamily::point_shift(1.0),
        2.0,
    )
    .expect("valid model")
}

/// A state-dependent drift, which forces the grid supremum.
pub fn varying_drift() -> RJDModel {
    let g = ScalarFn::native(|x: f64| -2.0 + 0.5 * (-x).exp());
    RJDModel::new(
        DriftDiffusionSpec::new(g, 1.0.into()),
        JumpFamily::point_shift(1.0),
        2.0,
    )
    .expect("valid model")
}
