//! Finite measures on the line and on the plane, used for the jump
//! measure of a pair of ranked particles and for its push-forward onto the
//! gap.

use std::fmt;
use std::sync::Arc;

/// Which half-line an exponential density lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// density `mass * rate * exp(-rate s)` on `[0, inf)`
    Positive,
    /// density `mass * rate * exp(rate s)` on `(-inf, 0]`
    Negative,
}

/// A finite Borel measure on the real line.
#[derive(Debug, Clone, PartialEq)]
pub enum LineMeasure {
    Zero,
    /// point masses `(position, mass)`
    Atoms(Vec<(f64, f64)>),
    Exponential {
        mass: f64,
        rate: f64,
        side: Side,
    },
}

impl LineMeasure {
    pub fn dirac(at: f64, mass: f64) -> Self {
        LineMeasure::Atoms(vec![(at, mass)])
    }

    pub fn mass(&self) -> f64 {
        match self {
            LineMeasure::Zero => 0.0,
            LineMeasure::Atoms(a) => a.iter().map(|p| p.1).sum(),
            LineMeasure::Exponential { mass, .. } => *mass,
        }
    }

    /// `∫ s ν(ds)` (not normalized).
    pub fn first_moment(&self) -> f64 {
        match self {
            LineMeasure::Zero => 0.0,
            LineMeasure::Atoms(a) => a.iter().map(|(s, m)| s * m).sum(),
            LineMeasure::Exponential { mass, rate, side } => match side {
                Side::Positive => mass / rate,
                Side::Negative => -mass / rate,
            },
        }
    }

    /// Image under `s -> -s`.
    pub fn negated(&self) -> Self {
        match self {
            LineMeasure::Zero => LineMeasure::Zero,
            LineMeasure::Atoms(a) => LineMeasure::Atoms(a.iter().map(|&(s, m)| (-s, m)).collect()),
            LineMeasure::Exponential { mass, rate, side } => LineMeasure::Exponential {
                mass: *mass,
                rate: *rate,
                side: match side {
                    Side::Positive => Side::Negative,
                    Side::Negative => Side::Positive,
                },
            },
        }
    }

    /// `ν((-inf, a])`
    pub fn le(&self, a: f64) -> f64 {
        match self {
            LineMeasure::Zero => 0.0,
            LineMeasure::Atoms(at) => at.iter().filter(|p| p.0 <= a).map(|p| p.1).sum(),
            LineMeasure::Exponential { .. } => self.lt(a),
        }
    }

    /// `ν((-inf, a))`
    pub fn lt(&self, a: f64) -> f64 {
        match self {
            LineMeasure::Zero => 0.0,
            LineMeasure::Atoms(at) => at.iter().filter(|p| p.0 < a).map(|p| p.1).sum(),
            LineMeasure::Exponential { mass, rate, side } => match side {
                Side::Positive => {
                    if a <= 0.0 {
                        0.0
                    } else {
                        mass * -(-rate * a).exp_m1()
                    }
                }
                Side::Negative => {
                    if a >= 0.0 {
                        *mass
                    } else {
                        mass * (rate * a).exp()
                    }
                }
            },
        }
    }

    /// `ν([a, inf))`
    pub fn ge(&self, a: f64) -> f64 {
        match self {
            LineMeasure::Zero => 0.0,
            LineMeasure::Atoms(at) => at.iter().filter(|p| p.0 >= a).map(|p| p.1).sum(),
            LineMeasure::Exponential { .. } => self.gt(a),
        }
    }

    /// `ν((a, inf))`
    pub fn gt(&self, a: f64) -> f64 {
        match self {
            LineMeasure::Zero => 0.0,
            LineMeasure::Atoms(at) => at.iter().filter(|p| p.0 > a).map(|p| p.1).sum(),
            LineMeasure::Exponential { mass, rate, side } => match side {
                Side::Positive => {
                    if a <= 0.0 {
                        *mass
                    } else {
                        mass * (-rate * a).exp()
                    }
                }
                Side::Negative => {
                    if a >= 0.0 {
                        0.0
                    } else {
                        mass * -(rate * a).exp_m1()
                    }
                }
            },
        }
    }

    /// Open interval of `λ` on which `∫ e^{λ s} ν(ds)` is finite.
    pub fn mgf_domain(&self) -> (f64, f64) {
        match self {
            LineMeasure::Exponential { rate, side, .. } => match side {
                Side::Positive => (f64::NEG_INFINITY, *rate),
                Side::Negative => (-*rate, f64::INFINITY),
            },
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// `∫ e^{λ s} ν(ds)`, or `None` outside the domain of convergence.
    pub fn mgf(&self, lambda: f64) -> Option<f64> {
        let (lo, hi) = self.mgf_domain();
        if lambda <= lo || lambda >= hi {
            return None;
        }
        Some(match self {
            LineMeasure::Zero => 0.0,
            LineMeasure::Atoms(a) => a.iter().map(|(s, m)| m * (lambda * s).exp()).sum(),
            LineMeasure::Exponential { mass, rate, side } => match side {
                Side::Positive => mass * rate / (rate - lambda),
                Side::Negative => mass * rate / (rate + lambda),
            },
        })
    }

    /// A length beyond which the measure's contribution to an integrand
    /// growing like `e^{|λ| s}` is negligible (about `e^{-40}` relative).
    pub fn extent(&self, lambda: f64) -> f64 {
        match self {
            LineMeasure::Zero => 0.0,
            LineMeasure::Atoms(a) => a.iter().map(|p| p.0.abs()).fold(0.0, f64::max),
            LineMeasure::Exponential { rate, .. } => 40.0 / (rate - lambda.abs()).max(0.025),
        }
    }

    pub fn is_nonnegative_support(&self) -> bool {
        match self {
            LineMeasure::Zero => true,
            LineMeasure::Atoms(a) => a.iter().all(|p| p.0 >= 0.0 || p.1 == 0.0),
            LineMeasure::Exponential { side, .. } => *side == Side::Positive,
        }
    }

    /// Left-continuous inverse of the normalized CDF.
    pub fn quantile(&self, u: f64) -> f64 {
        match self {
            LineMeasure::Zero => f64::NAN,
            LineMeasure::Atoms(a) => atoms_quantile(a, u),
            LineMeasure::Exponential { rate, side, .. } => match side {
                Side::Positive => -(-u).ln_1p() / rate,
                Side::Negative => u.ln() / rate,
            },
        }
    }

    fn validate(&self, what: &str) -> Result<(), String> {
        match self {
            LineMeasure::Zero => Ok(()),
            LineMeasure::Atoms(a) => {
                for &(s, m) in a {
                    if !s.is_finite() || !m.is_finite() || m < 0.0 {
                        return Err(format!(
                            "{what}: atom ({s}, {m}) must have finite position and nonnegative mass"
                        ));
                    }
                }
                Ok(())
            }
            LineMeasure::Exponential { mass, rate, .. } => {
                if !(mass.is_finite() && *mass >= 0.0 && rate.is_finite() && *rate > 0.0) {
                    Err(format!("{what}: exponential part needs mass >= 0 and rate > 0"))
                } else {
                    Ok(())
                }
            }
        }
    }
}

fn atoms_quantile(atoms: &[(f64, f64)], u: f64) -> f64 {
    let mut sorted: Vec<(f64, f64)> = atoms.iter().copied().filter(|p| p.1 > 0.0).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = sorted.iter().map(|p| p.1).sum();
    let target = u * total;
    let mut acc = 0.0;
    for &(s, m) in &sorted {
        acc += m;
        if acc >= target {
            return s;
        }
    }
    sorted.last().map_or(f64::NAN, |p| p.0)
}

/// Law of a sum of line measures (not normalized), used for the jump
/// difference `x₊ - x₋`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureLaw {
    parts: Vec<LineMeasure>,
}

impl MixtureLaw {
    pub fn new(parts: Vec<LineMeasure>) -> Self {
        let mut atoms: Vec<(f64, f64)> = Vec::new();
        let mut merged: Vec<LineMeasure> = Vec::new();
        for p in parts {
            match p {
                LineMeasure::Zero => {}
                LineMeasure::Atoms(a) => atoms.extend(a.into_iter().filter(|x| x.1 > 0.0)),
                LineMeasure::Exponential { mass, rate, side } => {
                    if mass == 0.0 {
                        continue;
                    }
                    let same = merged.iter_mut().find(
                        |q| matches!(q, LineMeasure::Exponential { rate: r, side: s, .. } if *r == rate && *s == side),
                    );
                    match same {
                        Some(LineMeasure::Exponential { mass: m, .. }) => *m += mass,
                        _ => merged.push(LineMeasure::Exponential { mass, rate, side }),
                    }
                }
            }
        }
        if !atoms.is_empty() {
            merged.push(LineMeasure::Atoms(atoms));
        }
        MixtureLaw { parts: merged }
    }

    pub fn parts(&self) -> &[LineMeasure] {
        &self.parts
    }

    pub fn mass(&self) -> f64 {
        self.parts.iter().map(LineMeasure::mass).sum()
    }

    pub fn first_moment(&self) -> f64 {
        self.parts.iter().map(LineMeasure::first_moment).sum()
    }

    pub fn le(&self, a: f64) -> f64 {
        self.parts.iter().map(|p| p.le(a)).sum()
    }
    pub fn lt(&self, a: f64) -> f64 {
        self.parts.iter().map(|p| p.lt(a)).sum()
    }
    pub fn ge(&self, a: f64) -> f64 {
        self.parts.iter().map(|p| p.ge(a)).sum()
    }
    pub fn gt(&self, a: f64) -> f64 {
        self.parts.iter().map(|p| p.gt(a)).sum()
    }

    pub fn mgf_domain(&self) -> (f64, f64) {
        self.parts
            .iter()
            .fold((f64::NEG_INFINITY, f64::INFINITY), |(lo, hi), p| {
                let (a, b) = p.mgf_domain();
                (lo.max(a), hi.min(b))
            })
    }

    pub fn mgf(&self, lambda: f64) -> Option<f64> {
        self.parts.iter().map(|p| p.mgf(lambda)).sum()
    }

    pub fn extent(&self, lambda: f64) -> f64 {
        self.parts.iter().map(|p| p.extent(lambda)).fold(0.0, f64::max)
    }

    pub fn is_nonnegative_support(&self) -> bool {
        self.parts.iter().all(LineMeasure::is_nonnegative_support)
    }

    /// All atoms, when the law is purely atomic.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        let mut out = Vec::new();
        for p in &self.parts {
            match p {
                LineMeasure::Atoms(a) => out.extend_from_slice(a),
                LineMeasure::Zero => {}
                LineMeasure::Exponential { .. } => return None,
            }
        }
        Some(out)
    }

    /// Left-continuous inverse of the normalized CDF. Exact for a single
    /// component; bisection on the CDF otherwise.
    pub fn quantile(&self, u: f64) -> f64 {
        match self.parts.as_slice() {
            [] => f64::NAN,
            [only] => only.quantile(u),
            _ => {
                if let Some(atoms) = self.atoms() {
                    return atoms_quantile(&atoms, u);
                }
                let total = self.mass();
                bisect_quantile(|a| self.le(a) / total, u, self.extent(0.0).max(1.0))
            }
        }
    }
}

/// Smallest `a` with `cdf(a) >= u`, for a nondecreasing `cdf`, located by
/// bracketing out from `[-scale, scale]` then bisecting to resolution.
pub(crate) fn bisect_quantile<F: Fn(f64) -> f64>(cdf: F, u: f64, scale: f64) -> f64 {
    let mut lo = -scale;
    let mut hi = scale;
    let mut guard = 0;
    while cdf(lo) >= u && guard < 200 {
        lo *= 2.0;
        guard += 1;
    }
    while cdf(hi) < u && guard < 400 {
        hi *= 2.0;
        guard += 1;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cdf(mid) >= u {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// A user-supplied planar jump measure. Only the law of the difference
/// `x₊ - x₋` and the pair sampler are needed by the gap reduction.
pub trait PlanarLaw: Send + Sync + fmt::Debug {
    fn total_mass(&self) -> f64;
    /// `∬ x₊ Λ(dx₊, dx₋)`
    fn first_moment_plus(&self) -> f64;
    /// `∬ x₋ Λ(dx₊, dx₋)`
    fn first_moment_minus(&self) -> f64;
    /// Inverse-transform sampler for the normalized measure.
    fn sample_pair(&self, u: f64) -> (f64, f64);
    /// Law of `x₊ - x₋` under `Λ` (not normalized).
    fn difference(&self) -> MixtureLaw;
}

#[derive(Debug, Clone)]
pub enum PlanarKind {
    Zero,
    /// `δ₀(dx₊) ν₋(dx₋) + ν₊(dx₊) δ₀(dx₋)`: the two ranked particles jump
    /// independently.
    Product {
        nu_plus: LineMeasure,
        nu_minus: LineMeasure,
    },
    PointMass {
        x_plus: f64,
        x_minus: f64,
        intensity: f64,
    },
    General(Arc<dyn PlanarLaw>),
}

/// Finite jump measure `Λ` on the plane of (upper, lower) displacements.
#[derive(Debug, Clone)]
pub struct PlanarJumpMeasure {
    kind: PlanarKind,
    difference: MixtureLaw,
}

impl PlanarJumpMeasure {
    pub fn zero() -> Self {
        Self::from_kind(PlanarKind::Zero).expect("zero measure is valid")
    }

    pub fn product(nu_plus: LineMeasure, nu_minus: LineMeasure) -> Result<Self, String> {
        Self::from_kind(PlanarKind::Product { nu_plus, nu_minus })
    }

    pub fn point_mass(x_plus: f64, x_minus: f64, intensity: f64) -> Result<Self, String> {
        Self::from_kind(PlanarKind::PointMass {
            x_plus,
            x_minus,
            intensity,
        })
    }

    pub fn general(law: Arc<dyn PlanarLaw>) -> Result<Self, String> {
        Self::from_kind(PlanarKind::General(law))
    }

    pub fn from_kind(kind: PlanarKind) -> Result<Self, String> {
        let difference = match &kind {
            PlanarKind::Zero => MixtureLaw::new(vec![]),
            PlanarKind::Product { nu_plus, nu_minus } => {
                nu_plus.validate("nu_plus")?;
                nu_minus.validate("nu_minus")?;
                MixtureLaw::new(vec![nu_plus.clone(), nu_minus.negated()])
            }
            PlanarKind::PointMass {
                x_plus,
                x_minus,
                intensity,
            } => {
                if !(x_plus.is_finite() && x_minus.is_finite() && intensity.is_finite() && *intensity >= 0.0) {
                    return Err("point mass needs finite displacements and intensity >= 0".into());
                }
                MixtureLaw::new(vec![LineMeasure::dirac(x_plus - x_minus, *intensity)])
            }
            PlanarKind::General(law) => {
                let m = law.total_mass();
                if !(m.is_finite() && m >= 0.0) {
                    return Err("general planar law must have finite total mass".into());
                }
                law.difference()
            }
        };
        Ok(PlanarJumpMeasure { kind, difference })
    }

    pub fn kind(&self) -> &PlanarKind {
        &self.kind
    }

    pub fn total_mass(&self) -> f64 {
        match &self.kind {
            PlanarKind::Zero => 0.0,
            PlanarKind::Product { nu_plus, nu_minus } => nu_plus.mass() + nu_minus.mass(),
            PlanarKind::PointMass { intensity, .. } => *intensity,
            PlanarKind::General(law) => law.total_mass(),
        }
    }

    pub fn first_moment_plus(&self) -> f64 {
        match &self.kind {
            PlanarKind::Zero => 0.0,
            PlanarKind::Product { nu_plus, .. } => nu_plus.first_moment(),
            PlanarKind::PointMass { x_plus, intensity, .. } => x_plus * intensity,
            PlanarKind::General(law) => law.first_moment_plus(),
        }
    }

    pub fn first_moment_minus(&self) -> f64 {
        match &self.kind {
            PlanarKind::Zero => 0.0,
            PlanarKind::Product { nu_minus, .. } => nu_minus.first_moment(),
            PlanarKind::PointMass { x_minus, intensity, .. } => x_minus * intensity,
            PlanarKind::General(law) => law.first_moment_minus(),
        }
    }

    /// Law of `x₊ - x₋`.
    pub fn difference(&self) -> &MixtureLaw {
        &self.difference
    }

    /// True when `Λ` is carried by `{x₊ >= x₋}`; then the gap's jump family
    /// is a translation of the law of `x₊ - x₋`.
    pub fn is_upper_supported(&self) -> bool {
        self.difference.is_nonnegative_support()
    }

    /// Draws `(x₊, x₋)` from the normalized measure with one uniform.
    pub fn sample_pair(&self, u: f64) -> (f64, f64) {
        match &self.kind {
            PlanarKind::Zero => (0.0, 0.0),
            PlanarKind::Product { nu_plus, nu_minus } => {
                let mp = nu_plus.mass();
                let total = mp + nu_minus.mass();
                let split = mp / total;
                if u < split {
                    (nu_plus.quantile(u / split), 0.0)
                } else {
                    (0.0, nu_minus.quantile(((u - split) / (1.0 - split)).min(1.0)))
                }
            }
            PlanarKind::PointMass { x_plus, x_minus, .. } => (*x_plus, *x_minus),
            PlanarKind::General(law) => law.sample_pair(u),
        }
    }

    /// Image under `(x₊, x₋) -> (-x₋, -x₊)`, i.e. the jump measure seen on
    /// the mirrored line where the ranks swap.
    pub fn mirrored(&self) -> Option<Self> {
        let kind = match &self.kind {
            PlanarKind::Zero => PlanarKind::Zero,
            PlanarKind::Product { nu_plus, nu_minus } => PlanarKind::Product {
                nu_plus: nu_minus.negated(),
                nu_minus: nu_plus.negated(),
            },
            PlanarKind::PointMass {
                x_plus,
                x_minus,
                intensity,
            } => PlanarKind::PointMass {
                x_plus: -x_minus,
                x_minus: -x_plus,
                intensity: *intensity,
            },
            PlanarKind::General(_) => return None,
        };
        Self::from_kind(kind).ok()
    }
}
