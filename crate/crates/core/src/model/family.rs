use std::fmt;
use std::sync::Arc;

use crate::error::{Result, RjdError};
use crate::expr::Expr;
use crate::quad;

use super::planar::{bisect_quantile, PlanarJumpMeasure};

/// A real function of the state, as used for drift, diffusion, jump maps
/// and state-dependent intensities. Must be pure.
#[derive(Clone)]
pub enum ScalarFn {
    Constant(f64),
    Expr(Expr),
    Native(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl ScalarFn {
    pub fn native<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        ScalarFn::Native(Arc::new(f))
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            ScalarFn::Constant(c) => *c,
            ScalarFn::Expr(e) => e.eval(x),
            ScalarFn::Native(f) => f(x),
        }
    }

    /// The value when the function is known not to depend on `x`.
    pub fn constant_value(&self) -> Option<f64> {
        match self {
            ScalarFn::Constant(c) => Some(*c),
            ScalarFn::Expr(e) if e.is_constant() => Some(e.eval(0.0)),
            _ => None,
        }
    }
}

impl fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarFn::Constant(c) => write!(f, "Constant({c})"),
            ScalarFn::Expr(e) => write!(f, "Expr({e})"),
            ScalarFn::Native(_) => f.write_str("Native(..)"),
        }
    }
}

impl From<f64> for ScalarFn {
    fn from(c: f64) -> Self {
        ScalarFn::Constant(c)
    }
}

/// Probability law of a jump size on `[0, inf)`.
#[derive(Debug, Clone, PartialEq)]
pub enum SizeLaw {
    Dirac(f64),
    Exponential {
        rate: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// `(size, weight)`; weights are normalized internally
    Discrete(Vec<(f64, f64)>),
}

impl SizeLaw {
    fn validate(&self) -> std::result::Result<(), String> {
        let ok = match self {
            SizeLaw::Dirac(c) => c.is_finite() && *c >= 0.0,
            SizeLaw::Exponential { rate } => rate.is_finite() && *rate > 0.0,
            SizeLaw::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && 0.0 <= *lo && lo < hi,
            SizeLaw::Discrete(a) => {
                !a.is_empty()
                    && a.iter()
                        .all(|(s, w)| s.is_finite() && *s >= 0.0 && w.is_finite() && *w >= 0.0)
                    && a.iter().map(|p| p.1).sum::<f64>() > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(format!("invalid jump-size law {self:?}"))
        }
    }

    fn divergence(&self) -> f64 {
        match self {
            SizeLaw::Exponential { rate } => *rate,
            _ => f64::INFINITY,
        }
    }

    fn mgf(&self, lambda: f64) -> f64 {
        match self {
            SizeLaw::Dirac(c) => (lambda * c).exp(),
            SizeLaw::Exponential { rate } => rate / (rate - lambda),
            SizeLaw::Uniform { lo, hi } => {
                if lambda == 0.0 {
                    1.0
                } else {
                    ((lambda * hi).exp() - (lambda * lo).exp()) / (lambda * (hi - lo))
                }
            }
            SizeLaw::Discrete(a) => {
                let total: f64 = a.iter().map(|p| p.1).sum();
                a.iter().map(|(s, w)| w * (lambda * s).exp()).sum::<f64>() / total
            }
        }
    }

    fn mean(&self) -> f64 {
        match self {
            SizeLaw::Dirac(c) => *c,
            SizeLaw::Exponential { rate } => 1.0 / rate,
            SizeLaw::Uniform { lo, hi } => 0.5 * (lo + hi),
            SizeLaw::Discrete(a) => {
                let total: f64 = a.iter().map(|p| p.1).sum();
                a.iter().map(|(s, w)| s * w).sum::<f64>() / total
            }
        }
    }

    /// `P(size >= s)`
    fn tail(&self, s: f64) -> f64 {
        match self {
            SizeLaw::Dirac(c) => f64::from(*c >= s),
            SizeLaw::Exponential { rate } => {
                if s <= 0.0 {
                    1.0
                } else {
                    (-rate * s).exp()
                }
            }
            SizeLaw::Uniform { lo, hi } => ((hi - s) / (hi - lo)).clamp(0.0, 1.0),
            SizeLaw::Discrete(a) => {
                let total: f64 = a.iter().map(|p| p.1).sum();
                a.iter().filter(|p| p.0 >= s).map(|p| p.1).sum::<f64>() / total
            }
        }
    }

    /// `P(size > s)`
    fn tail_open(&self, s: f64) -> f64 {
        match self {
            SizeLaw::Dirac(c) => f64::from(*c > s),
            SizeLaw::Discrete(a) => {
                let total: f64 = a.iter().map(|p| p.1).sum();
                a.iter().filter(|p| p.0 > s).map(|p| p.1).sum::<f64>() / total
            }
            _ => self.tail(s),
        }
    }

    fn quantile(&self, u: f64) -> f64 {
        match self {
            SizeLaw::Dirac(c) => *c,
            SizeLaw::Exponential { rate } => -(-u).ln_1p() / rate,
            SizeLaw::Uniform { lo, hi } => lo + u * (hi - lo),
            SizeLaw::Discrete(a) => {
                let mut sorted = a.clone();
                sorted.sort_by(|p, q| p.0.total_cmp(&q.0));
                let total: f64 = sorted.iter().map(|p| p.1).sum();
                let mut acc = 0.0;
                for &(s, w) in &sorted {
                    acc += w;
                    if acc >= u * total && w > 0.0 {
                        return s;
                    }
                }
                sorted.last().map_or(0.0, |p| p.0)
            }
        }
    }
}

/// A family `(ν_x)` of finite jump measures on `[0, inf)` indexed by the
/// current state.
///
/// Every kind is sampled by inverse CDF, so one uniform drives the jump of
/// every coupled copy and destinations are comonotone in the uniform.
#[derive(Debug, Clone)]
pub enum JumpFamily {
    None,
    /// `ν_x = intensity · δ_{max(x + shift, 0)}`
    PointShift {
        shift: f64,
        intensity: f64,
    },
    /// `ν_x = intensity(x) · δ_{max(map(x), 0)}`
    PointMap {
        map: ScalarFn,
        intensity: ScalarFn,
    },
    /// `ν_x(dy) = intensity · rate · e^{-rate (y - x)} dy` on `y > x`
    ExpRightTail {
        rate: f64,
        intensity: f64,
    },
    /// `ν_x` is `intensity · law` translated by `x`
    TranslationInvariant {
        intensity: f64,
        law: SizeLaw,
    },
    /// `ν_z` is the image of `Λ` under `(x₊, x₋) -> |z + x₊ - x₋|`
    Pushforward(PlanarJumpMeasure),
}

/// `max(x + shift, 0) - x`, exact whenever the destination is positive.
fn shift_displacement(x: f64, shift: f64) -> f64 {
    if x + shift >= 0.0 {
        shift
    } else {
        -x
    }
}

const QUAD_REL_TOL: f64 = 1e-10;
const QUAD_ABS_TOL: f64 = 1e-13;

impl JumpFamily {
    pub fn point_shift(shift: f64) -> Self {
        JumpFamily::PointShift { shift, intensity: 1.0 }
    }

    pub fn exp_right_tail(rate: f64, intensity: f64) -> Self {
        JumpFamily::ExpRightTail { rate, intensity }
    }

    pub fn point_map(map: ScalarFn) -> Self {
        JumpFamily::PointMap {
            map,
            intensity: ScalarFn::Constant(1.0),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            JumpFamily::None => "none",
            JumpFamily::PointShift { .. } => "point_shift",
            JumpFamily::PointMap { .. } => "point_map",
            JumpFamily::ExpRightTail { .. } => "exp_right_tail",
            JumpFamily::TranslationInvariant { .. } => "translation_invariant",
            JumpFamily::Pushforward(_) => "pushforward",
        }
    }

    pub(crate) fn validate_params(&self) -> std::result::Result<(), String> {
        let finite_nonneg = |v: f64, what: &str| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(format!("{what} must be finite and nonnegative, got {v}"))
            }
        };
        match self {
            JumpFamily::None => Ok(()),
            JumpFamily::PointShift { shift, intensity } => {
                if !shift.is_finite() {
                    return Err("point_shift displacement must be finite".into());
                }
                finite_nonneg(*intensity, "intensity")
            }
            JumpFamily::PointMap { intensity, .. } => match intensity.constant_value() {
                Some(c) => finite_nonneg(c, "intensity"),
                None => Ok(()),
            },
            JumpFamily::ExpRightTail { rate, intensity } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return Err(format!("exp_right_tail rate must be positive, got {rate}"));
                }
                finite_nonneg(*intensity, "intensity")
            }
            JumpFamily::TranslationInvariant { intensity, law } => {
                law.validate()?;
                finite_nonneg(*intensity, "intensity")
            }
            JumpFamily::Pushforward(lam) => finite_nonneg(lam.total_mass(), "Lambda total mass"),
        }
    }

    /// Jump intensity `r(x) = ν_x([0, inf))`.
    pub fn rate(&self, x: f64) -> f64 {
        match self {
            JumpFamily::None => 0.0,
            JumpFamily::PointShift { intensity, .. }
            | JumpFamily::ExpRightTail { intensity, .. }
            | JumpFamily::TranslationInvariant { intensity, .. } => *intensity,
            JumpFamily::PointMap { intensity, .. } => intensity.eval(x),
            JumpFamily::Pushforward(lam) => lam.total_mass(),
        }
    }

    /// The intensity when it does not depend on the state.
    pub fn constant_rate(&self) -> Option<f64> {
        match self {
            JumpFamily::PointMap { intensity, .. } => intensity.constant_value(),
            _ => Some(self.rate(0.0)),
        }
    }

    /// True when `ν_x` is a fixed measure on `[0, inf)` translated by `x`,
    /// so that jumps only go right and `K(x, λ)` does not depend on `x`
    /// for constant coefficients.
    pub fn is_right_translation(&self) -> bool {
        match self {
            JumpFamily::None | JumpFamily::ExpRightTail { .. } | JumpFamily::TranslationInvariant { .. } => true,
            JumpFamily::PointShift { shift, .. } => *shift >= 0.0,
            JumpFamily::PointMap { .. } => false,
            JumpFamily::Pushforward(lam) => lam.is_upper_supported(),
        }
    }

    /// `∫ y ν_x(dy)` relative to `x`, for right translations: the mean of
    /// the translated measure.
    pub(crate) fn translation_mean(&self) -> Option<f64> {
        if !self.is_right_translation() {
            return None;
        }
        Some(match self {
            JumpFamily::None => 0.0,
            JumpFamily::PointShift { shift, intensity } => shift * intensity,
            JumpFamily::ExpRightTail { rate, intensity } => intensity / rate,
            JumpFamily::TranslationInvariant { intensity, law } => intensity * law.mean(),
            JumpFamily::Pushforward(lam) => lam.difference().first_moment(),
            JumpFamily::PointMap { .. } => unreachable!(),
        })
    }

    /// Supremum of `λ > 0` for which `∫ e^{λ(y - x)} ν_x(dy)` is finite.
    pub fn exp_moment_threshold(&self) -> f64 {
        match self {
            JumpFamily::ExpRightTail { rate, .. } => *rate,
            JumpFamily::TranslationInvariant { law, .. } => law.divergence(),
            JumpFamily::Pushforward(lam) => {
                let (lo, hi) = lam.difference().mgf_domain();
                if lam.is_upper_supported() {
                    hi
                } else {
                    hi.min(-lo)
                }
            }
            _ => f64::INFINITY,
        }
    }

    /// Supremum of `λ > 0` for which `∫ e^{λ|y - x|} ν_x(dy)` is finite.
    pub fn abs_moment_threshold(&self) -> f64 {
        match self {
            JumpFamily::Pushforward(lam) => {
                let (lo, hi) = lam.difference().mgf_domain();
                hi.min(-lo)
            }
            _ => self.exp_moment_threshold(),
        }
    }

    /// `ν_x([z, inf))`
    pub fn tail_mass(&self, x: f64, z: f64) -> f64 {
        match self {
            JumpFamily::None => 0.0,
            JumpFamily::PointShift { shift, intensity } => intensity * f64::from((x + shift).max(0.0) >= z),
            JumpFamily::PointMap { map, intensity } => intensity.eval(x) * f64::from(map.eval(x).max(0.0) >= z),
            JumpFamily::ExpRightTail { rate, intensity } => {
                intensity * SizeLaw::Exponential { rate: *rate }.tail(z - x)
            }
            JumpFamily::TranslationInvariant { intensity, law } => intensity * law.tail(z - x),
            JumpFamily::Pushforward(lam) => {
                if z <= 0.0 {
                    lam.total_mass()
                } else {
                    let d = lam.difference();
                    d.ge(z - x) + d.le(-z - x)
                }
            }
        }
    }

    /// `ν_x((z, inf))`
    pub fn tail_mass_open(&self, x: f64, z: f64) -> f64 {
        match self {
            JumpFamily::None => 0.0,
            JumpFamily::PointShift { shift, intensity } => intensity * f64::from((x + shift).max(0.0) > z),
            JumpFamily::PointMap { map, intensity } => intensity.eval(x) * f64::from(map.eval(x).max(0.0) > z),
            JumpFamily::ExpRightTail { rate, intensity } => {
                intensity * SizeLaw::Exponential { rate: *rate }.tail_open(z - x)
            }
            JumpFamily::TranslationInvariant { intensity, law } => intensity * law.tail_open(z - x),
            JumpFamily::Pushforward(lam) => {
                if z < 0.0 {
                    lam.total_mass()
                } else {
                    let d = lam.difference();
                    d.gt(z - x) + d.lt(-z - x)
                }
            }
        }
    }

    /// Normalized CDF of the destination: `ν_x([0, w]) / r(x)`.
    pub fn cdf(&self, x: f64, w: f64) -> f64 {
        let r = self.rate(x);
        if r <= 0.0 {
            return f64::NAN;
        }
        if w < 0.0 {
            return 0.0;
        }
        (1.0 - self.tail_mass_open(x, w) / r).clamp(0.0, 1.0)
    }

    fn check_threshold(&self, lambda: f64, threshold: f64) -> Result<()> {
        if lambda.abs() >= threshold {
            Err(RjdError::DivergentMoment { lambda, threshold })
        } else {
            Ok(())
        }
    }

    /// `∫ e^{λ(y - x)} ν_x(dy)`. Closed form for every kind except a
    /// push-forward of a non-atomic measure with left-going mass, which
    /// falls back to adaptive quadrature.
    pub fn exp_moment(&self, x: f64, lambda: f64) -> Result<f64> {
        if lambda == 0.0 {
            return Ok(self.rate(x));
        }
        if lambda > 0.0 {
            self.check_threshold(lambda, self.exp_moment_threshold())?;
        }
        Ok(match self {
            JumpFamily::None => 0.0,
            JumpFamily::PointShift { shift, intensity } => intensity * (lambda * shift_displacement(x, *shift)).exp(),
            JumpFamily::PointMap { map, intensity } => intensity.eval(x) * (lambda * (map.eval(x).max(0.0) - x)).exp(),
            JumpFamily::ExpRightTail { rate, intensity } => intensity * rate / (rate - lambda),
            JumpFamily::TranslationInvariant { intensity, law } => intensity * law.mgf(lambda),
            JumpFamily::Pushforward(lam) => {
                let d = lam.difference();
                if lam.is_upper_supported() {
                    d.mgf(lambda).ok_or(RjdError::DivergentMoment {
                        lambda,
                        threshold: d.mgf_domain().1,
                    })?
                } else if let Some(atoms) = d.atoms() {
                    atoms
                        .iter()
                        .map(|&(s, m)| m * (lambda * ((x + s).abs() - x)).exp())
                        .sum()
                } else {
                    self.quadrature_moment(x, lambda, false)
                }
            }
        })
    }

    /// `∫ e^{λ|y - x|} ν_x(dy)`, the quantity bounded by the exponential
    /// moment condition.
    pub fn abs_exp_moment(&self, x: f64, lambda: f64) -> Result<f64> {
        if lambda == 0.0 {
            return Ok(self.rate(x));
        }
        self.check_threshold(lambda, self.abs_moment_threshold())?;
        match self {
            JumpFamily::PointShift { shift, intensity } => {
                Ok(intensity * (lambda * shift_displacement(x, *shift).abs()).exp())
            }
            JumpFamily::PointMap { map, intensity } => {
                Ok(intensity.eval(x) * (lambda * (map.eval(x).max(0.0) - x).abs()).exp())
            }
            JumpFamily::Pushforward(lam) if !lam.is_upper_supported() => {
                if let Some(atoms) = lam.difference().atoms() {
                    Ok(atoms
                        .iter()
                        .map(|&(s, m)| m * (lambda * ((x + s).abs() - x).abs()).exp())
                        .sum())
                } else {
                    Ok(self.quadrature_moment(x, lambda, true))
                }
            }
            // right jumps only: |y - x| = y - x
            _ => self.exp_moment(x, lambda),
        }
    }

    /// Mean jump displacement `∫ (y - x) ν_x(dy)`.
    pub fn mean_displacement(&self, x: f64) -> f64 {
        match self {
            JumpFamily::PointShift { shift, intensity } => intensity * shift_displacement(x, *shift),
            JumpFamily::PointMap { map, intensity } => intensity.eval(x) * (map.eval(x).max(0.0) - x),
            JumpFamily::Pushforward(lam) if !lam.is_upper_supported() => {
                if let Some(atoms) = lam.difference().atoms() {
                    atoms.iter().map(|&(s, m)| m * ((x + s).abs() - x)).sum()
                } else {
                    self.quadrature_mean(x)
                }
            }
            _ => self.translation_mean().unwrap_or(0.0),
        }
    }

    /// Upper integration limit for destinations from `x`.
    fn horizon(&self, x: f64, lambda: f64) -> f64 {
        let extent = match self {
            JumpFamily::Pushforward(lam) => lam.difference().extent(lambda),
            _ => 40.0 / (self.abs_moment_threshold() - lambda.abs()).max(0.025),
        };
        x + extent.max(1.0)
    }

    /// Moment by integration by parts against the tail function:
    /// `∫_{[x,∞)} e^{λ(y-x)} dν = T(x) + λ ∫_x^H e^{λ(y-x)} T((y,∞)) dy` and
    /// `∫_{[0,x)} e^{μ(x-y)} dν = ν([0,x)) + μ ∫_0^x e^{μ(x-s)} ν([0,s]) ds`,
    /// with `μ = -λ` (signed) or `μ = λ` (absolute).
    fn quadrature_moment(&self, x: f64, lambda: f64, absolute: bool) -> f64 {
        let r = self.rate(x);
        let at_or_above = self.tail_mass(x, x);
        let h = self.horizon(x, lambda);
        let right = at_or_above
            + lambda
                * quad::integrate(
                    |y| (lambda * (y - x)).exp() * self.tail_mass_open(x, y),
                    x,
                    h,
                    QUAD_REL_TOL,
                    QUAD_ABS_TOL,
                )
                .value;
        let mu = if absolute { lambda } else { -lambda };
        let left = (r - at_or_above)
            + mu * quad::integrate(
                |s| (mu * (x - s)).exp() * (r - self.tail_mass_open(x, s)),
                0.0,
                x,
                QUAD_REL_TOL,
                QUAD_ABS_TOL,
            )
            .value;
        right + left
    }

    fn quadrature_mean(&self, x: f64) -> f64 {
        let r = self.rate(x);
        let h = self.horizon(x, 0.0);
        let up = quad::integrate(|y| self.tail_mass_open(x, y), x, h, QUAD_REL_TOL, QUAD_ABS_TOL).value;
        let down = quad::integrate(|s| r - self.tail_mass_open(x, s), 0.0, x, QUAD_REL_TOL, QUAD_ABS_TOL).value;
        up - down
    }

    /// Destination of a jump from `x` driven by the uniform `u`, by inverse
    /// CDF of `r(x)^{-1} ν_x`.
    pub fn sample(&self, x: f64, u: f64) -> Result<f64> {
        if self.rate(x) <= 0.0 {
            return Err(RjdError::NoJump { x });
        }
        Ok(match self {
            JumpFamily::None => unreachable!("zero intensity handled above"),
            JumpFamily::PointShift { shift, .. } => (x + shift).max(0.0),
            JumpFamily::PointMap { map, .. } => map.eval(x).max(0.0),
            JumpFamily::ExpRightTail { rate, .. } => x + SizeLaw::Exponential { rate: *rate }.quantile(u),
            JumpFamily::TranslationInvariant { law, .. } => x + law.quantile(u),
            JumpFamily::Pushforward(lam) => {
                let d = lam.difference();
                if lam.is_upper_supported() {
                    x + d.quantile(u)
                } else if let Some(atoms) = d.atoms() {
                    let image: Vec<(f64, f64)> = atoms.iter().map(|&(s, m)| ((x + s).abs(), m)).collect();
                    super::planar::LineMeasure::Atoms(image).quantile(u)
                } else {
                    bisect_quantile(|w| self.cdf(x, w), u, x + d.extent(0.0) + 1.0).max(0.0)
                }
            }
        })
    }
}
