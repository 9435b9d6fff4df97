//! Two competing Lévy particles with rank-based dynamics.
//!
//! The upper-ranked particle moves by the first coordinate of a planar Lévy
//! process `(L₊, L₋)` (drift `(g₊, g₋)`, covariance `A`, finite jump
//! measure `Λ`), the lower one by the second. On ties the second particle
//! takes the upper rank. The gap `Y₊ - Y₋` is itself a reflected
//! jump-diffusion, with drift `g₊ - g₋`, diffusion `a₊₊ + a₋₋ - 2a₊₋` and
//! jumps from `z` to `|z + x₊ - x₋|`.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, RjdError};
use crate::model::{DriftDiffusionSpec, JumpFamily, PlanarJumpMeasure, PlanarKind, RJDModel};
use crate::rng::{derive_seed, path_rng, PathRng};
use crate::sim::{observe_paths, time_grid, SimConfig};
use crate::stats::{ks_two_sample, mean_stderr, KsResult};

/// Radius used when the jump-size difference has every exponential moment.
pub const UNBOUNDED_LAMBDA0: f64 = 10.0;

#[derive(Debug, Clone)]
pub struct LevyPairModel {
    pub g_plus: f64,
    pub g_minus: f64,
    pub a_pp: f64,
    pub a_pm: f64,
    pub a_mm: f64,
    pub lambda: PlanarJumpMeasure,
    lambda0: Option<f64>,
}

impl LevyPairModel {
    /// `a = [a₊₊, a₊₋, a₋₋]`. `lambda0` defaults to the exponential-moment
    /// radius of `x₊ - x₋` under `Λ`.
    pub fn new(
        g_plus: f64,
        g_minus: f64,
        a: [f64; 3],
        lambda: PlanarJumpMeasure,
        lambda0: Option<f64>,
    ) -> Result<Self> {
        let [a_pp, a_pm, a_mm] = a;
        if !(g_plus.is_finite() && g_minus.is_finite()) {
            return Err(RjdError::InvalidModel("drifts must be finite".into()));
        }
        if !(a.iter().all(|v| v.is_finite()) && a_pp > 0.0 && a_mm > 0.0 && a_pp * a_mm - a_pm * a_pm > 0.0) {
            return Err(RjdError::InvalidModel(format!(
                "covariance [[{a_pp}, {a_pm}], [{a_pm}, {a_mm}]] is not positive definite"
            )));
        }
        let mass = lambda.total_mass();
        if !(mass.is_finite() && mass >= 0.0) {
            return Err(RjdError::InvalidModel(format!(
                "jump measure total mass {mass} is not finite"
            )));
        }
        if let Some(l) = lambda0 {
            if !(l.is_finite() && l > 0.0) {
                return Err(RjdError::InvalidModel(format!("lambda0 must be positive, got {l}")));
            }
        }
        Ok(Self {
            g_plus,
            g_minus,
            a_pp,
            a_pm,
            a_mm,
            lambda,
            lambda0,
        })
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0.unwrap_or_else(|| {
            let (lo, hi) = self.lambda.difference().mgf_domain();
            let r = hi.min(-lo);
            if r.is_finite() {
                r
            } else {
                UNBOUNDED_LAMBDA0
            }
        })
    }

    pub fn gap_drift(&self) -> f64 {
        self.g_plus - self.g_minus
    }

    pub fn gap_diffusion(&self) -> f64 {
        self.a_pp + self.a_mm - 2.0 * self.a_pm
    }

    /// The gap process as a reflected jump-diffusion.
    pub fn gap_model(&self) -> Result<RJDModel> {
        let s2 = self.gap_diffusion();
        assert!(s2 > 0.0, "positive definite covariance gives a positive gap diffusion");
        let jumps = if matches!(self.lambda.kind(), PlanarKind::Zero) || self.lambda.total_mass() == 0.0 {
            JumpFamily::None
        } else {
            JumpFamily::Pushforward(self.lambda.clone())
        };
        RJDModel::new(
            DriftDiffusionSpec::constant(self.gap_drift(), s2),
            jumps,
            self.lambda0(),
        )
    }

    pub fn effective_drifts(&self) -> EffectiveDrifts {
        let m_plus = self.g_plus + self.lambda.first_moment_plus();
        let m_minus = self.g_minus + self.lambda.first_moment_minus();
        EffectiveDrifts {
            m_plus,
            m_minus,
            stable: m_plus < m_minus,
        }
    }

    /// The same system seen on the reflected line `x -> -x`: ranks swap,
    /// so drifts swap with a sign change, the diagonal of `A` swaps, and
    /// `Λ` maps by `(x₊, x₋) -> (-x₋, -x₊)`. The gap model is unchanged.
    pub fn mirrored(&self) -> Option<Self> {
        Some(Self {
            g_plus: -self.g_minus,
            g_minus: -self.g_plus,
            a_pp: self.a_mm,
            a_pm: self.a_pm,
            a_mm: self.a_pp,
            lambda: self.lambda.mirrored()?,
            lambda0: self.lambda0,
        })
    }

    /// Lower-triangular factor of `A`.
    fn cholesky(&self) -> [f64; 3] {
        let l00 = self.a_pp.sqrt();
        let l10 = self.a_pm / l00;
        let l11 = (self.a_mm - l10 * l10).sqrt();
        [l00, l10, l11]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectiveDrifts {
    pub m_plus: f64,
    pub m_minus: f64,
    pub stable: bool,
}

pub fn gap_model(pair: &LevyPairModel) -> Result<RJDModel> {
    pair.gap_model()
}

pub fn effective_drifts(pair: &LevyPairModel) -> EffectiveDrifts {
    pair.effective_drifts()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedPaths {
    pub times: Vec<f64>,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub y_plus: Vec<f64>,
    pub y_minus: Vec<f64>,
    pub gap: Vec<f64>,
    /// Times of steps and jump events that started from a tie.
    pub tie_events: Vec<f64>,
}

/// Named positions `(x1, x2)` driven by one random stream.
struct PairStepper<'p> {
    pair: &'p PairGeometry<'p>,
    rng: PathRng,
    t: f64,
    next_event: f64,
    x: [f64; 2],
    ties: Option<Vec<f64>>,
}

struct PairGeometry<'p> {
    model: &'p LevyPairModel,
    chol: [f64; 3],
    rate: f64,
}

impl<'p> PairStepper<'p> {
    fn new(pair: &'p PairGeometry<'p>, mut rng: PathRng, x: [f64; 2], keep_ties: bool) -> Self {
        let next_event = if pair.rate > 0.0 {
            rng.sample::<f64, _>(Exp1) / pair.rate
        } else {
            f64::INFINITY
        };
        Self {
            pair,
            rng,
            t: 0.0,
            next_event,
            x,
            ties: keep_ties.then(Vec::new),
        }
    }

    /// Index of the upper-ranked particle; particle 2 wins ties.
    fn upper(&mut self) -> usize {
        if self.x[0] == self.x[1] {
            if let Some(t) = self.ties.as_mut() {
                t.push(self.t);
            }
        }
        if self.x[0] > self.x[1] {
            0
        } else {
            1
        }
    }

    fn diffuse(&mut self, h: f64) {
        if h <= 0.0 {
            return;
        }
        let m = self.pair.model;
        let [l00, l10, l11] = self.pair.chol;
        let z1: f64 = self.rng.sample(StandardNormal);
        let z2: f64 = self.rng.sample(StandardNormal);
        let s = h.sqrt();
        let d_plus = m.g_plus * h + l00 * s * z1;
        let d_minus = m.g_minus * h + (l10 * z1 + l11 * z2) * s;
        let up = self.upper();
        self.x[up] += d_plus;
        self.x[1 - up] += d_minus;
    }

    fn advance_to(&mut self, t_target: f64) {
        while self.next_event <= t_target {
            self.diffuse(self.next_event - self.t);
            self.t = self.next_event;
            let u: f64 = self.rng.random();
            let (jp, jm) = self.pair.model.lambda.sample_pair(u);
            let up = self.upper();
            self.x[up] += jp;
            self.x[1 - up] += jm;
            self.next_event = self.t + self.rng.sample::<f64, _>(Exp1) / self.pair.rate;
        }
        self.diffuse(t_target - self.t);
        self.t = t_target;
    }

    fn run_to(&mut self, t_target: f64, dt: f64) {
        while self.t < t_target {
            let next = (self.t + dt).min(t_target);
            let next = if t_target - next < 1e-9 * dt { t_target } else { next };
            self.advance_to(next);
        }
    }
}

fn geometry(pair: &LevyPairModel) -> PairGeometry<'_> {
    PairGeometry {
        model: pair,
        chol: pair.cholesky(),
        rate: pair.lambda.total_mass(),
    }
}

fn check_pair_args(x: [f64; 2], t_end: f64, dt: f64) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(RjdError::Precondition(format!("dt must be positive, got {dt}")));
    }
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(RjdError::Precondition(format!(
            "time horizon must be nonnegative, got {t_end}"
        )));
    }
    if !(x[0].is_finite() && x[1].is_finite()) {
        return Err(RjdError::Precondition("initial positions must be finite".into()));
    }
    Ok(())
}

pub fn simulate_pair(
    pair: &LevyPairModel,
    x1_0: f64,
    x2_0: f64,
    t_end: f64,
    dt: f64,
    seed: u64,
) -> Result<RankedPaths> {
    check_pair_args([x1_0, x2_0], t_end, dt)?;
    let geo = geometry(pair);
    let mut st = PairStepper::new(&geo, path_rng(seed, 0), [x1_0, x2_0], true);
    let times = time_grid(t_end, dt);
    let mut out = RankedPaths {
        times: times.clone(),
        x1: Vec::with_capacity(times.len()),
        x2: Vec::with_capacity(times.len()),
        y_plus: Vec::with_capacity(times.len()),
        y_minus: Vec::with_capacity(times.len()),
        gap: Vec::with_capacity(times.len()),
        tie_events: Vec::new(),
    };
    for (i, &t) in times.iter().enumerate() {
        if i > 0 {
            st.advance_to(t);
        }
        let [a, b] = st.x;
        out.x1.push(a);
        out.x2.push(b);
        out.y_plus.push(a.max(b));
        out.y_minus.push(a.min(b));
        out.gap.push((a - b).abs());
    }
    out.tie_events = st.ties.take().unwrap_or_default();
    Ok(out)
}

/// Gaps `|X₁(t) - X₂(t)|` of `n_paths` independent systems.
pub fn pair_gaps_at(
    pair: &LevyPairModel,
    x1_0: f64,
    x2_0: f64,
    t: f64,
    n_paths: usize,
    dt: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    check_pair_args([x1_0, x2_0], t, dt)?;
    let geo = geometry(pair);
    Ok((0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut st = PairStepper::new(&geo, path_rng(seed, i as u64), [x1_0, x2_0], false);
            st.run_to(t, dt);
            (st.x[0] - st.x[1]).abs()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapEquivalenceReport {
    pub t: f64,
    pub x0_gap: f64,
    pub n_paths: usize,
    pub ks: KsResult,
    pub pair_mean: f64,
    pub pair_mean_stderr: f64,
    pub reduced_mean: f64,
    pub reduced_mean_stderr: f64,
    pub pass: bool,
}

/// Two-sample KS comparison at time `t` between the gap of the simulated
/// pair (started at `0` and `x0_gap`) and the reduced gap model started at
/// `x0_gap`, on unrelated random streams. Passes when `p > 0.01`.
pub fn gap_equivalence_test(
    pair: &LevyPairModel,
    x0_gap: f64,
    t: f64,
    n_paths: usize,
    cfg: &SimConfig,
    seed: u64,
) -> Result<GapEquivalenceReport> {
    if !(x0_gap >= 0.0) {
        return Err(RjdError::Precondition(format!(
            "initial gap must be nonnegative, got {x0_gap}"
        )));
    }
    let a = pair_gaps_at(pair, 0.0, x0_gap, t, n_paths, cfg.dt, seed)?;
    let model = pair.gap_model()?;
    let b: Vec<f64> = observe_paths(&model, &[x0_gap], &[t], n_paths, cfg, derive_seed(seed, 1), 0)?
        .into_iter()
        .map(|p| p[0][0])
        .collect();
    let ks = ks_two_sample(&a, &b);
    let (pair_mean, pair_mean_stderr) = mean_stderr(&a);
    let (reduced_mean, reduced_mean_stderr) = mean_stderr(&b);
    Ok(GapEquivalenceReport {
        t,
        x0_gap,
        n_paths,
        pass: ks.p_value > 0.01,
        ks,
        pair_mean,
        pair_mean_stderr,
        reduced_mean,
        reduced_mean_stderr,
    })
}
