//! Exponential convergence rates from the generator of `V_λ(x) = e^{λx}`:
//!
//! `K(x, λ) = g(x) λ + σ²(x) λ² / 2 + ∫ (e^{λ(y - x)} - 1) ν_x(dy)`.
//!
//! For a stochastically ordered process with `K_max(λ) = sup_x K(x, λ) < 0`
//! the process converges in the `V_λ`-weighted norm at rate `|K_max(λ)|`.
//! `K_max` is convex in `λ`, so the best certificate is a 1-d convex
//! minimization.

pub mod search;

use serde::{Deserialize, Serialize};

use crate::error::{Result, RjdError};
use crate::model::{is_stochastically_ordered, ordering_violation, uniform_grid, JumpFamily, RJDModel};

/// The Lyapunov function `x -> e^{λx}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VLyapunov {
    pub lambda: f64,
}

impl VLyapunov {
    pub fn new(lambda: f64) -> Self {
        Self { lambda }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.lambda * x).exp()
    }
}

/// `K(x, λ)`. Negative `λ` down to `-lambda0` is accepted so that
/// derivatives at zero can be taken by central differences.
pub fn k_value(model: &RJDModel, x: f64, lambda: f64) -> Result<f64> {
    let lambda0 = model.lambda0();
    if !lambda.is_finite() || lambda >= lambda0 || lambda <= -lambda0 {
        return Err(RjdError::LambdaOutOfRange { lambda, lambda0 });
    }
    let g = model.dd.drift(x);
    let s2 = model.dd.diffusion(x);
    if !g.is_finite() {
        return Err(RjdError::NonFinite { what: "drift", x });
    }
    if !s2.is_finite() {
        return Err(RjdError::NonFinite { what: "diffusion", x });
    }
    let jumps = model.jumps.exp_moment(x, lambda)? - model.jumps.rate(x);
    Ok(g * lambda + 0.5 * s2 * lambda * lambda + jumps)
}

/// `m(x) = g(x) + ∫ (y - x) ν_x(dy)`, the derivative of `K(x, ·)` at 0.
pub fn joint_drift(model: &RJDModel, x: f64) -> f64 {
    model.dd.drift(x) + model.jumps.mean_displacement(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KMax {
    pub value: f64,
    pub argmax: f64,
    /// The grid maximizer sits at `x_max`, so the supremum may lie beyond
    /// the grid.
    pub at_grid_edge: bool,
}

/// `sup_x K(x, λ)`, exact when `K` does not depend on `x`, a maximum over
/// the model grid otherwise.
pub fn k_max(model: &RJDModel, lambda: f64) -> Result<KMax> {
    if model.k_constant_in_x() {
        return Ok(KMax {
            value: k_value(model, 0.0, lambda)?,
            argmax: 0.0,
            at_grid_edge: false,
        });
    }
    let grid = model.x_grid();
    let mut best = KMax {
        value: f64::NEG_INFINITY,
        argmax: 0.0,
        at_grid_edge: false,
    };
    for &x in &grid {
        let k = k_value(model, x, lambda)?;
        if k > best.value {
            best.value = k;
            best.argmax = x;
        }
    }
    best.at_grid_edge = grid.len() > 1 && best.argmax == grid[grid.len() - 1];
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ExactXIndependent,
    GridSupremum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub x_max: f64,
    pub grid_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCertificate {
    pub lambda_star: f64,
    pub kappa: f64,
    pub k_max_at_star: f64,
    pub feasible_interval: [f64; 2],
    pub method: Method,
    pub dominating: bool,
    pub grid_meta: GridMeta,
    pub warnings: Vec<String>,
}

const COARSE_POINTS: usize = 64;
/// Half-width of the central difference used to locate the minimizer once
/// golden-section search has stalled on floating-point noise in `K_max`.
const SLOPE_STEP: f64 = 1e-5;

fn search_bounds(model: &RJDModel) -> (f64, f64) {
    let eps = 1e-6 * model.lambda0();
    (eps, model.lambda0() - eps)
}

fn kv(model: &RJDModel, lambda: f64) -> Result<f64> {
    k_max(model, lambda).map(|k| k.value)
}

fn ordering_warnings(model: &RJDModel) -> Vec<String> {
    if model.jumps.is_right_translation() {
        return Vec::new();
    }
    let xs = uniform_grid(model.x_max(), model.grid_step() * 10.0);
    if is_stochastically_ordered(&model.jumps, &xs, &model.z_grid()) {
        Vec::new()
    } else {
        vec!["jump family is not stochastically ordered; the rate applies only through a dominating family".into()]
    }
}

fn edge_warning(model: &RJDModel, lambda: f64) -> Result<Option<String>> {
    let k = k_max(model, lambda)?;
    Ok(k.at_grid_edge.then(|| {
        format!(
            "K(x, {lambda:.6}) is maximized at the grid edge x = {}; behaviour beyond the grid is unchecked",
            model.x_max()
        )
    }))
}

/// Minimizes `K_max` over `(0, lambda0)`: a coarse scan, golden-section
/// refinement, then bisection on the sign of a central difference, which
/// resolves the minimizer well below the `sqrt(eps)` limit of comparing
/// function values.
pub fn minimize_k_max(model: &RJDModel) -> Result<(f64, f64)> {
    let (lo, hi) = search_bounds(model);
    let step = (hi - lo) / (COARSE_POINTS - 1) as f64;
    let mut best = (0usize, f64::INFINITY);
    for i in 0..COARSE_POINTS {
        let v = kv(model, lo + step * i as f64)?;
        if v < best.1 {
            best = (i, v);
        }
    }
    let a = lo + step * best.0.saturating_sub(1) as f64;
    let b = (lo + step * (best.0 + 1) as f64).min(hi);
    let (mut a, mut b) = search::golden_section(|l| kv(model, l), a, b, 1e-6 * model.lambda0().max(1.0))?;
    let h = SLOPE_STEP * model.lambda0().min(1.0);
    let rising = |l: f64| -> Result<bool> { Ok(kv(model, l + h)? >= kv(model, l - h)?) };
    a = a.max(lo + h);
    b = b.min(hi - h);
    let lambda_star = if a < b && !rising(a)? && rising(b)? {
        search::bisect(rising, a, b, 1e-12 * model.lambda0().max(1.0))?
    } else {
        // minimum pressed against the search bounds
        let (fa, fb) = (kv(model, a.max(lo))?, kv(model, b.min(hi))?);
        if fa <= fb {
            a.max(lo)
        } else {
            b.min(hi)
        }
    };
    let value = kv(model, lambda_star)?;
    if value >= 0.0 {
        return Err(RjdError::Infeasible {
            min_k_max: value,
            at_lambda: lambda_star,
        });
    }
    Ok((lambda_star, value))
}

/// Right end of the interval where `K_max < 0`, by bisection from a point
/// known to be feasible. Equals `lambda0` when `K_max` stays negative.
fn feasibility_root(model: &RJDModel, inside: f64) -> Result<f64> {
    let (_, hi) = search_bounds(model);
    if kv(model, hi)? < 0.0 {
        return Ok(model.lambda0());
    }
    search::bisect(|l| Ok(kv(model, l)? >= 0.0), inside, hi, 1e-11)
}

fn method_of(model: &RJDModel) -> Method {
    if model.k_constant_in_x() {
        Method::ExactXIndependent
    } else {
        Method::GridSupremum
    }
}

/// The best certificate over `λ ∈ (0, lambda0)`.
pub fn optimize_lambda(model: &RJDModel) -> Result<RateCertificate> {
    let (lambda_star, value) = minimize_k_max(model)?;
    let root = feasibility_root(model, lambda_star)?;
    let mut warnings = ordering_warnings(model);
    warnings.extend(edge_warning(model, lambda_star)?);
    Ok(RateCertificate {
        lambda_star,
        kappa: -value,
        k_max_at_star: value,
        feasible_interval: [0.0, root],
        method: method_of(model),
        dominating: false,
        grid_meta: GridMeta {
            x_max: model.x_max(),
            grid_step: model.grid_step(),
        },
        warnings,
    })
}

/// A certificate at a caller-chosen `λ`, trading rate for a stronger norm.
pub fn certificate_at(model: &RJDModel, lambda: f64) -> Result<RateCertificate> {
    if !(lambda > 0.0) {
        return Err(RjdError::LambdaOutOfRange {
            lambda,
            lambda0: model.lambda0(),
        });
    }
    let value = kv(model, lambda)?;
    if value >= 0.0 {
        return Err(RjdError::Infeasible {
            min_k_max: value,
            at_lambda: lambda,
        });
    }
    let root = feasibility_root(model, lambda)?;
    let mut warnings = ordering_warnings(model);
    warnings.extend(edge_warning(model, lambda)?);
    Ok(RateCertificate {
        lambda_star: lambda,
        kappa: -value,
        k_max_at_star: value,
        feasible_interval: [0.0, root],
        method: method_of(model),
        dominating: false,
        grid_meta: GridMeta {
            x_max: model.x_max(),
            grid_step: model.grid_step(),
        },
        warnings,
    })
}

/// `(0, λ_root)`, the interval of `λ` with `K_max(λ) < 0`.
pub fn feasible_interval(model: &RJDModel) -> Result<(f64, f64)> {
    let (lambda_star, _) = minimize_k_max(model)?;
    Ok((0.0, feasibility_root(model, lambda_star)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftCondition {
    pub holds: bool,
    pub max_drift: f64,
    pub at_x: f64,
}

/// Evidence for `limsup m(x) < 0`: the largest joint drift on the upper
/// half of the grid.
pub fn check_drift_condition(model: &RJDModel) -> DriftCondition {
    let half = 0.5 * model.x_max();
    let mut out = DriftCondition {
        holds: false,
        max_drift: f64::NEG_INFINITY,
        at_x: half,
    };
    for x in model.x_grid().into_iter().filter(|&x| x >= half) {
        let m = joint_drift(model, x);
        if m > out.max_drift || m.is_nan() {
            out.max_drift = m;
            out.at_x = x;
        }
    }
    out.holds = out.max_drift < 0.0;
    out
}

/// Certificate for a possibly unordered model obtained from a stochastically
/// ordered family dominating its jumps: `K` is computed with `dominating`
/// in place of the model's own jumps and the rate transfers to the model.
pub fn dominating_certificate(model: &RJDModel, dominating: &JumpFamily) -> Result<RateCertificate> {
    let xs = uniform_grid(model.x_max(), model.grid_step() * 10.0);
    let zs = model.z_grid();
    if !dominating.is_right_translation() {
        if let Some((x, z)) = ordering_violation(dominating, &xs, &zs) {
            return Err(RjdError::NotOrdered(if z.is_nan() {
                format!("dominating family has non-constant intensity near x = {x}")
            } else {
                format!("dominating family tails decrease in x at x = {x}, z = {z}")
            }));
        }
    }
    for &x in &xs {
        let (r, rb) = (model.jumps.rate(x), dominating.rate(x));
        if (r - rb).abs() > 1e-12 * (1.0 + r.abs()) {
            return Err(RjdError::DominationViolated {
                x,
                z: 0.0,
                tail: r,
                dominating_tail: rb,
            });
        }
        for &z in &zs {
            let (t, tb) = (model.jumps.tail_mass(x, z), dominating.tail_mass(x, z));
            if t > tb + 1e-12 * (1.0 + r.abs()) {
                return Err(RjdError::DominationViolated {
                    x,
                    z,
                    tail: t,
                    dominating_tail: tb,
                });
            }
        }
    }
    let upper = model.with_jumps(dominating.clone())?;
    let mut cert = optimize_lambda(&upper)?;
    cert.dominating = true;
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DriftDiffusionSpec, ScalarFn};

    fn model(g: f64, s2: f64, jumps: JumpFamily, lambda0: f64) -> RJDModel {
        RJDModel::new(DriftDiffusionSpec::constant(g, s2), jumps, lambda0).unwrap()
    }

    #[test]
    fn lyapunov_basics() {
        let v = VLyapunov::new(0.7);
        assert_eq!(v.eval(0.0), 1.0);
        assert!(v.eval(2.0) > v.eval(1.0));
    }

    #[test]
    fn k_at_zero_vanishes() {
        let m = model(-2.0, 1.0, JumpFamily::point_shift(1.0), 2.0);
        assert_eq!(k_value(&m, 3.0, 0.0).unwrap(), 0.0);
        assert_eq!(k_max(&m, 0.0).unwrap().value, 0.0);
    }

    #[test]
    fn k_out_of_range() {
        let m = model(-2.0, 1.0, JumpFamily::exp_right_tail(1.0, 1.0), 1.0);
        assert!(matches!(k_value(&m, 0.0, 1.0), Err(RjdError::LambdaOutOfRange { .. })));
        // lambda0 beyond the divergence threshold is caught at evaluation
        let m = model(-2.0, 1.0, JumpFamily::exp_right_tail(1.0, 1.0), 2.0);
        assert!(matches!(k_value(&m, 0.0, 1.2), Err(RjdError::DivergentMoment { .. })));
    }

    #[test]
    fn unit_shift_arithmetic() {
        let m = model(-2.0, 1.0, JumpFamily::point_shift(1.0), 2.0);
        let l: f64 = 0.8;
        let oracle = -2.0 * l + 0.5 * l * l + l.exp() - 1.0;
        assert!((k_max(&m, l).unwrap().value - oracle).abs() < 1e-15);
        assert_eq!(joint_drift(&m, 4.0), -1.0);
    }

    #[test]
    fn jump_free_closed_form() {
        let m = model(-2.0, 1.0, JumpFamily::None, 10.0);
        let c = optimize_lambda(&m).unwrap();
        assert!((c.lambda_star - 2.0).abs() < 1e-8, "{c:?}");
        assert!((c.kappa - 2.0).abs() < 1e-8);
        assert!((c.feasible_interval[1] - 4.0).abs() < 1e-7);
        assert_eq!(c.method, Method::ExactXIndependent);
    }

    #[test]
    fn infeasible_positive_drift() {
        let m = model(1.0, 1.0, JumpFamily::None, 5.0);
        assert!(matches!(optimize_lambda(&m), Err(RjdError::Infeasible { .. })));
    }

    #[test]
    fn drift_condition_examples() {
        assert!(check_drift_condition(&model(-2.0, 1.0, JumpFamily::point_shift(1.0), 2.0)).holds);
        assert!(!check_drift_condition(&model(1.0, 1.0, JumpFamily::None, 2.0)).holds);
        let c = check_drift_condition(&model(-2.0, 1.0, JumpFamily::point_shift(3.0), 2.0));
        assert!(!c.holds);
        assert_eq!(c.max_drift, 1.0);
    }

    #[test]
    fn grid_supremum_state_dependent_drift() {
        // g(x) = -2 - e^{-x}: the supremum is approached as x grows
        let g = ScalarFn::native(|x: f64| -2.0 - (-x).exp());
        let m = RJDModel::new(DriftDiffusionSpec::new(g, 1.0.into()), JumpFamily::None, 10.0)
            .unwrap()
            .with_grid(5.0, 0.01)
            .unwrap();
        let k = k_max(&m, 1.0).unwrap();
        assert!(k.at_grid_edge);
        let c = optimize_lambda(&m).unwrap();
        assert_eq!(c.method, Method::GridSupremum);
        assert!(!c.warnings.is_empty());
    }

    #[test]
    fn domination_failure_names_location() {
        let m = model(-2.0, 1.0, JumpFamily::point_shift(2.0), 2.0);
        match dominating_certificate(&m, &JumpFamily::point_shift(1.0)) {
            Err(RjdError::DominationViolated { z, .. }) => assert!(z > 0.0),
            other => panic!("{other:?}"),
        }
    }
}
