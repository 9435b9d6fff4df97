//! Reflected jump-diffusion models on `[0, inf)` and numerical checks of
//! the standing assumptions (Lipschitz coefficients, bounded jump
//! intensity, a finite exponential moment of the jump sizes).

pub mod family;
pub mod file;
pub mod planar;

use serde::Serialize;

use crate::error::{Result, RjdError};
pub use family::{JumpFamily, ScalarFn, SizeLaw};
pub use planar::{LineMeasure, MixtureLaw, PlanarJumpMeasure, PlanarKind, PlanarLaw, Side};

pub const DEFAULT_X_MAX: f64 = 50.0;
pub const DEFAULT_GRID_STEP: f64 = 0.01;
/// Finite-difference slope above which the Lipschitz check emits a warning.
pub const DEFAULT_LIPSCHITZ_BOUND: f64 = 1e6;

#[derive(Debug, Clone)]
pub struct DriftDiffusionSpec {
    pub g: ScalarFn,
    pub sigma2: ScalarFn,
}

impl DriftDiffusionSpec {
    pub fn new(g: ScalarFn, sigma2: ScalarFn) -> Self {
        Self { g, sigma2 }
    }

    pub fn constant(g: f64, sigma2: f64) -> Self {
        Self::new(ScalarFn::Constant(g), ScalarFn::Constant(sigma2))
    }

    pub fn is_constant(&self) -> bool {
        self.g.constant_value().is_some() && self.sigma2.constant_value().is_some()
    }

    #[inline]
    pub fn drift(&self, x: f64) -> f64 {
        self.g.eval(x)
    }

    #[inline]
    pub fn diffusion(&self, x: f64) -> f64 {
        self.sigma2.eval(x)
    }
}

/// A reflected jump-diffusion: drift and diffusion coefficients, a jump
/// family, the exponential-moment radius `lambda0`, and the truncation
/// grid used for suprema over the state.
#[derive(Debug, Clone)]
pub struct RJDModel {
    pub dd: DriftDiffusionSpec,
    pub jumps: JumpFamily,
    lambda0: f64,
    x_max: f64,
    grid_step: f64,
    k_constant_in_x: bool,
}

impl RJDModel {
    /// Builds a model with the default grid. `K(x, λ)` is flagged
    /// state-independent when the coefficients are constant and jumps are
    /// translations to the right.
    pub fn new(dd: DriftDiffusionSpec, jumps: JumpFamily, lambda0: f64) -> Result<Self> {
        if !(lambda0.is_finite() && lambda0 > 0.0) {
            return Err(RjdError::InvalidModel(format!(
                "lambda0 must be positive and finite, got {lambda0}"
            )));
        }
        jumps.validate_params().map_err(RjdError::InvalidModel)?;
        let k_constant_in_x = Self::k_constant_eligible(&dd, &jumps);
        Ok(Self {
            dd,
            jumps,
            lambda0,
            x_max: DEFAULT_X_MAX,
            grid_step: DEFAULT_GRID_STEP,
            k_constant_in_x,
        })
    }

    fn k_constant_eligible(dd: &DriftDiffusionSpec, jumps: &JumpFamily) -> bool {
        dd.is_constant() && jumps.is_right_translation()
    }

    pub fn with_grid(mut self, x_max: f64, grid_step: f64) -> Result<Self> {
        if !(x_max.is_finite() && x_max > 0.0) {
            return Err(RjdError::InvalidModel(format!("x_max must be positive, got {x_max}")));
        }
        if !(grid_step.is_finite() && grid_step > 0.0) {
            return Err(RjdError::InvalidModel(format!(
                "grid_step must be positive, got {grid_step}"
            )));
        }
        self.x_max = x_max;
        self.grid_step = grid_step;
        Ok(self)
    }

    /// Overrides the state-independence flag. Setting it is refused when
    /// the model does not qualify.
    pub fn with_k_constant_in_x(mut self, flag: bool) -> Result<Self> {
        if flag && !Self::k_constant_eligible(&self.dd, &self.jumps) {
            return Err(RjdError::InvalidModel(
                "K(x, lambda) is x-independent only for constant coefficients with right-translation jumps".into(),
            ));
        }
        self.k_constant_in_x = flag;
        Ok(self)
    }

    /// The same model with another jump family.
    pub fn with_jumps(&self, jumps: JumpFamily) -> Result<Self> {
        let m = Self::new(self.dd.clone(), jumps, self.lambda0)?;
        m.with_grid(self.x_max, self.grid_step)
    }

    pub fn with_lambda0(mut self, lambda0: f64) -> Result<Self> {
        if !(lambda0.is_finite() && lambda0 > 0.0) {
            return Err(RjdError::InvalidModel(format!(
                "lambda0 must be positive and finite, got {lambda0}"
            )));
        }
        self.lambda0 = lambda0;
        Ok(self)
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn grid_step(&self) -> f64 {
        self.grid_step
    }

    pub fn k_constant_in_x(&self) -> bool {
        self.k_constant_in_x
    }

    /// `{0, step, ..., x_max}`
    pub fn x_grid(&self) -> Vec<f64> {
        uniform_grid(self.x_max, self.grid_step)
    }

    /// Thresholds for tail comparisons: covers the state grid plus room for
    /// one jump beyond it.
    pub fn z_grid(&self) -> Vec<f64> {
        uniform_grid(self.x_max + 10.0, self.grid_step * 10.0)
    }

    /// Upper bound `ρ` on the jump intensity used by the thinning clock.
    /// Exact for constant intensities, a grid maximum otherwise.
    pub fn rate_bound(&self) -> f64 {
        match self.jumps.constant_rate() {
            Some(r) => r,
            None => self
                .x_grid()
                .into_iter()
                .map(|x| self.jumps.rate(x))
                .fold(0.0, f64::max),
        }
    }
}

pub(crate) fn uniform_grid(x_max: f64, step: f64) -> Vec<f64> {
    let n = (x_max / step + 1e-9).floor() as usize;
    let mut g: Vec<f64> = (0..=n).map(|i| i as f64 * step).collect();
    if x_max - g[n] > 1e-9 * step {
        g.push(x_max);
    }
    g
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub assumption1_ok: bool,
    pub assumption2_ok: bool,
    pub assumption3_ok: bool,
    pub rho: f64,
    pub expmoment_sup: f64,
    pub lambda_checked: f64,
    pub lipschitz_drift: f64,
    pub lipschitz_sigma: f64,
    pub grid_points: usize,
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn all_ok(&self) -> bool {
        self.assumption1_ok && self.assumption2_ok && self.assumption3_ok
    }
}

/// Checks the standing assumptions on `{0, grid_step, ..., x_max}`.
///
/// The exponential-moment condition is read with an open radius: it holds
/// when `lambda0` does not exceed the family's divergence threshold, and
/// the moment is evaluated slightly inside the radius when `lambda0` sits
/// exactly on it.
pub fn validate_model(model: &RJDModel, grid_step: f64) -> Result<ValidationReport> {
    validate_model_with(model, grid_step, DEFAULT_LIPSCHITZ_BOUND)
}

pub fn validate_model_with(model: &RJDModel, grid_step: f64, lipschitz_bound: f64) -> Result<ValidationReport> {
    if !(grid_step > 0.0) {
        return Err(RjdError::Precondition(format!(
            "grid_step must be positive, got {grid_step}"
        )));
    }
    if model.x_max() < 10.0 * grid_step {
        return Err(RjdError::Precondition(format!(
            "x_max = {} must be at least ten grid steps ({grid_step})",
            model.x_max()
        )));
    }
    let grid = uniform_grid(model.x_max(), grid_step);
    let mut notes = Vec::new();

    let mut a1 = true;
    let mut lip_g: f64 = 0.0;
    let mut lip_s: f64 = 0.0;
    let mut prev: Option<(f64, f64, f64)> = None;
    for &x in &grid {
        let g = model.dd.drift(x);
        if !g.is_finite() {
            return Err(RjdError::NonFinite { what: "drift", x });
        }
        let s2 = model.dd.diffusion(x);
        if !s2.is_finite() {
            return Err(RjdError::NonFinite { what: "diffusion", x });
        }
        if s2 < 0.0 {
            return Err(RjdError::InvalidModel(format!(
                "diffusion coefficient is negative ({s2}) at x = {x}"
            )));
        }
        if s2 == 0.0 && a1 {
            a1 = false;
            notes.push(format!(
                "diffusion coefficient vanishes at x = {x}; the process is degenerate there"
            ));
        }
        let s = s2.sqrt();
        if let Some((px, pg, ps)) = prev {
            let h = x - px;
            lip_g = lip_g.max((g - pg).abs() / h);
            lip_s = lip_s.max((s - ps).abs() / h);
        }
        prev = Some((x, g, s));
    }
    if lip_g > lipschitz_bound {
        notes.push(format!(
            "drift finite-difference slope {lip_g:.3e} exceeds {lipschitz_bound:.1e}"
        ));
    }
    if lip_s > lipschitz_bound {
        notes.push(format!(
            "sigma finite-difference slope {lip_s:.3e} exceeds {lipschitz_bound:.1e}"
        ));
    }

    let mut a2 = true;
    let mut rho: f64 = 0.0;
    for &x in &grid {
        let r = model.jumps.rate(x);
        if !(r.is_finite() && r >= 0.0) {
            a2 = false;
            notes.push(format!(
                "jump intensity {r} at x = {x} is not a finite nonnegative number"
            ));
            break;
        }
        rho = rho.max(r);
    }
    if !matches!(model.jumps, JumpFamily::None) {
        notes.push("weak continuity of x -> nu_x is assumed, not checked".into());
    }

    let threshold = model.jumps.abs_moment_threshold();
    let lambda0 = model.lambda0();
    let (a3, lambda_checked, sup) = if lambda0 > threshold {
        notes.push(format!(
            "exponential moment diverges for lambda >= {threshold}, below lambda0 = {lambda0}"
        ));
        (false, lambda0, f64::INFINITY)
    } else {
        let lam = if lambda0 < threshold {
            lambda0
        } else {
            (1.0 - 1e-3) * lambda0
        };
        let mut sup: f64 = 0.0;
        for &x in &grid {
            match model.jumps.abs_exp_moment(x, lam) {
                Ok(v) => sup = sup.max(v),
                Err(_) => {
                    sup = f64::INFINITY;
                    break;
                }
            }
        }
        (sup.is_finite(), lam, sup)
    };

    Ok(ValidationReport {
        assumption1_ok: a1,
        assumption2_ok: a2,
        assumption3_ok: a3,
        rho,
        expmoment_sup: sup,
        lambda_checked,
        lipschitz_drift: lip_g,
        lipschitz_sigma: lip_s,
        grid_points: grid.len(),
        notes,
    })
}

pub fn jump_rate(family: &JumpFamily, x: f64) -> f64 {
    family.rate(x)
}

pub fn exp_moment(family: &JumpFamily, x: f64, lambda: f64) -> Result<f64> {
    family.exp_moment(x, lambda)
}

pub fn sample_jump(family: &JumpFamily, x: f64, u: f64) -> Result<f64> {
    family.sample(x, u)
}

/// Grid evidence of stochastic ordering: constant total mass and upper
/// tails `ν_x([z, inf))` nondecreasing in `x` for every threshold.
pub fn is_stochastically_ordered(family: &JumpFamily, x_grid: &[f64], z_grid: &[f64]) -> bool {
    ordering_violation(family, x_grid, z_grid).is_none()
}

/// First `(x, z)` at which the ordering check fails.
pub(crate) fn ordering_violation(family: &JumpFamily, x_grid: &[f64], z_grid: &[f64]) -> Option<(f64, f64)> {
    let &x0 = x_grid.first()?;
    let r0 = family.rate(x0);
    let tol = 1e-12 * (1.0 + r0.abs());
    if x_grid.iter().any(|&x| (family.rate(x) - r0).abs() > tol) {
        return Some((x0, f64::NAN));
    }
    for &z in z_grid {
        let mut prev = family.tail_mass(x0, z);
        for &x in &x_grid[1..] {
            let t = family.tail_mass(x, z);
            if t < prev - tol {
                return Some((x, z));
            }
            prev = t;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex2() -> RJDModel {
        RJDModel::new(
            DriftDiffusionSpec::constant(-2.0, 1.0),
            JumpFamily::point_shift(1.0),
            2.0,
        )
        .unwrap()
    }

    #[test]
    fn unit_shift_model_passes_all_checks() {
        let m = ex2();
        assert!(m.k_constant_in_x());
        let r = validate_model(&m, 0.01).unwrap();
        assert!(r.all_ok(), "{r:?}");
        assert_eq!(r.rho, 1.0);
    }

    #[test]
    fn jump_free_model_has_zero_rho() {
        let m = RJDModel::new(DriftDiffusionSpec::constant(0.0, 1.0), JumpFamily::None, 1.0).unwrap();
        let r = validate_model(&m, 0.01).unwrap();
        assert!(r.all_ok());
        assert_eq!(r.rho, 0.0);
    }

    #[test]
    fn exponential_moment_radius_is_enforced() {
        let fam = JumpFamily::exp_right_tail(1.0, 1.0);
        let m = RJDModel::new(DriftDiffusionSpec::constant(-2.0, 1.0), fam.clone(), 1.5).unwrap();
        let r = validate_model(&m, 0.01).unwrap();
        assert!(!r.assumption3_ok);
        let m = RJDModel::new(DriftDiffusionSpec::constant(-2.0, 1.0), fam, 1.0).unwrap();
        let r = validate_model(&m, 0.01).unwrap();
        assert!(r.assumption3_ok);
        assert!(r.lambda_checked < 1.0);
    }

    #[test]
    fn nonfinite_drift_is_reported_with_location() {
        let g = ScalarFn::Expr(crate::expr::Expr::parse("log(x - 1)").unwrap());
        let m = RJDModel::new(DriftDiffusionSpec::new(g, 1.0.into()), JumpFamily::None, 1.0).unwrap();
        match validate_model(&m, 0.5) {
            Err(RjdError::NonFinite { what: "drift", x }) => assert_eq!(x, 0.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn grid_precondition() {
        let m = ex2().with_grid(0.05, 0.01).unwrap();
        assert!(matches!(validate_model(&m, 0.01), Err(RjdError::Precondition(_))));
    }

    #[test]
    fn ordering_examples() {
        let xs = [0.0, 0.5, 2.0];
        let zs: Vec<f64> = (0..=40).map(|i| i as f64 * 0.1).collect();
        assert!(is_stochastically_ordered(&JumpFamily::point_shift(1.0), &xs, &zs));
        let folded = JumpFamily::point_map(ScalarFn::native(|x| (x - 1.0).abs()));
        assert!(!is_stochastically_ordered(&folded, &xs, &zs));
        let ti = JumpFamily::TranslationInvariant {
            intensity: 2.0,
            law: SizeLaw::Uniform { lo: 0.0, hi: 1.0 },
        };
        assert!(is_stochastically_ordered(&ti, &xs, &zs));
    }

    #[test]
    fn k_constant_flag_is_guarded() {
        let folded = JumpFamily::point_map(ScalarFn::native(|x| (x - 1.0).abs()));
        let m = RJDModel::new(DriftDiffusionSpec::constant(-2.0, 1.0), folded, 2.0).unwrap();
        assert!(!m.k_constant_in_x());
        assert!(m.with_k_constant_in_x(true).is_err());
        let down = RJDModel::new(
            DriftDiffusionSpec::constant(-2.0, 1.0),
            JumpFamily::point_shift(-1.0),
            2.0,
        )
        .unwrap();
        assert!(!down.k_constant_in_x());
    }

    #[test]
    fn grid_includes_endpoint() {
        let g = uniform_grid(1.0, 0.3);
        assert_eq!(g, vec![0.0, 0.3, 0.6, 0.8999999999999999, 1.0]);
        assert_eq!(uniform_grid(50.0, 0.01).len(), 5001);
    }
}
