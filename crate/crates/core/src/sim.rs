//! Path simulation of reflected jump-diffusions.
//!
//! Between jumps each copy takes Euler steps reflected at zero. Jumps come
//! from a Poisson clock of rate `ρ ≥ sup r` thinned with probability
//! `r(x)/ρ`; the Euler step is split at every clock event so jumps land at
//! their exact times. Several copies can be driven by one random stream
//! (normals, bridge uniforms, clock, acceptance and destination uniforms
//! are all shared), which gives the monotone coupling for ordered families.
//!
//! The default reflection uses the running minimum of the Brownian bridge
//! over the step (exact in law for constant coefficients). Plain projection
//! onto `[0, inf)` is available but biases the stationary law downward by
//! `O(sqrt(dt))`.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, RjdError};
use crate::model::{is_stochastically_ordered, uniform_grid, DriftDiffusionSpec, JumpFamily, RJDModel};
use crate::rng::{path_rng, PathRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Reflection {
    #[default]
    BridgeMinimum,
    Projection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub dt: f64,
    pub reflection: Reflection,
    /// Two coupled copies count as met once they are this close.
    pub meet_threshold: f64,
}

impl SimConfig {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            reflection: Reflection::default(),
            meet_threshold: 1e-9,
        }
    }

    pub fn with_reflection(mut self, reflection: Reflection) -> Self {
        self.reflection = reflection;
        self
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        Self::new(1e-3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JumpEvent {
    pub time: f64,
    pub from: f64,
    pub to: f64,
    /// The destination uniform fed to the inverse CDF.
    pub uniform: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathRecord {
    pub times: Vec<f64>,
    pub states: Vec<f64>,
    pub local_time: Vec<f64>,
    pub jump_events: Vec<JumpEvent>,
    pub seed: u64,
    pub stream: u64,
}

impl PathRecord {
    /// `t,state,local_time,is_jump`, one row per grid time; `is_jump` marks
    /// rows whose preceding step contained a jump.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,state,local_time,is_jump\n");
        let mut ev = self.jump_events.iter().peekable();
        for i in 0..self.times.len() {
            let mut jumped = false;
            while let Some(e) = ev.peek() {
                if e.time <= self.times[i] {
                    jumped = true;
                    ev.next();
                } else {
                    break;
                }
            }
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.times[i],
                self.states[i],
                self.local_time[i],
                u8::from(jumped)
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoupledPair {
    pub low: PathRecord,
    pub high: PathRecord,
    pub ordered: bool,
    pub meet_time: Option<f64>,
    pub order_violations: usize,
}

/// Grid `0, dt, 2dt, ...` ending exactly at `t_end`.
pub fn time_grid(t_end: f64, dt: f64) -> Vec<f64> {
    let n = (t_end / dt - 1e-9).ceil().max(0.0) as usize;
    let mut g: Vec<f64> = (0..=n).map(|i| (i as f64 * dt).min(t_end)).collect();
    if n == 0 {
        g = vec![0.0];
        if t_end > 0.0 {
            g.push(t_end);
        }
    }
    g
}

fn check_args(x0s: &[f64], t_end: f64, dt: f64) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(RjdError::Precondition(format!("dt must be positive, got {dt}")));
    }
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(RjdError::Precondition(format!(
            "time horizon must be nonnegative, got {t_end}"
        )));
    }
    if let Some(x) = x0s.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(RjdError::Precondition(format!(
            "initial state must be a nonnegative number, got {x}"
        )));
    }
    Ok(())
}

/// Copies of one process advanced on shared randomness.
struct Ensemble<'m> {
    dd: &'m DriftDiffusionSpec,
    jumps: &'m JumpFamily,
    rho: f64,
    reflection: Reflection,
    rng: PathRng,
    t: f64,
    next_event: f64,
    x: Vec<f64>,
    local: Vec<f64>,
    events: Option<Vec<Vec<JumpEvent>>>,
}

impl<'m> Ensemble<'m> {
    fn new(
        dd: &'m DriftDiffusionSpec,
        jumps: &'m JumpFamily,
        rho: f64,
        reflection: Reflection,
        mut rng: PathRng,
        x0: &[f64],
        keep_events: bool,
    ) -> Self {
        let next_event = if rho > 0.0 {
            rng.sample::<f64, _>(Exp1) / rho
        } else {
            f64::INFINITY
        };
        Self {
            dd,
            jumps,
            rho,
            reflection,
            rng,
            t: 0.0,
            next_event,
            x: x0.to_vec(),
            local: vec![0.0; x0.len()],
            events: keep_events.then(|| vec![Vec::new(); x0.len()]),
        }
    }

    /// One reflected Euler step of length `h` for every copy.
    fn diffuse(&mut self, h: f64) -> Result<()> {
        if h <= 0.0 {
            return Ok(());
        }
        let xi: f64 = self.rng.sample(StandardNormal);
        let v = 1.0 - self.rng.random::<f64>();
        let sqrt_h = h.sqrt();
        for k in 0..self.x.len() {
            let y = self.x[k];
            let g = self.dd.drift(y);
            let s2 = self.dd.diffusion(y);
            if !g.is_finite() {
                return Err(RjdError::NonFinite { what: "drift", x: y });
            }
            if !(s2.is_finite() && s2 >= 0.0) {
                return Err(RjdError::NonFinite {
                    what: "diffusion",
                    x: y,
                });
            }
            let free = g * h + s2.sqrt() * sqrt_h * xi;
            // Reflected endpoint as max(y + free, floor): monotone in y
            // under rounding, so coupled copies can never cross.
            let floor = match self.reflection {
                Reflection::Projection => 0.0,
                Reflection::BridgeMinimum => {
                    let low = 0.5 * (free - (free * free - 2.0 * s2 * h * v.ln()).sqrt());
                    (free - low).max(0.0)
                }
            };
            let base = y + free;
            let next = base.max(floor);
            self.x[k] = next;
            self.local[k] += next - base.min(next);
        }
        Ok(())
    }

    fn jump(&mut self) -> Result<()> {
        let accept: f64 = self.rng.random();
        let u: f64 = self.rng.random();
        for k in 0..self.x.len() {
            let y = self.x[k];
            let r = self.jumps.rate(y);
            if r > self.rho * (1.0 + 1e-12) {
                return Err(RjdError::IntensityBound {
                    x: y,
                    rate: r,
                    bound: self.rho,
                });
            }
            if accept * self.rho < r {
                let to = self.jumps.sample(y, u)?;
                self.x[k] = to;
                if let Some(ev) = self.events.as_mut() {
                    ev[k].push(JumpEvent {
                        time: self.next_event,
                        from: y,
                        to,
                        uniform: u,
                    });
                }
            }
        }
        Ok(())
    }

    fn advance_to(&mut self, t_target: f64) -> Result<()> {
        while self.next_event <= t_target {
            self.diffuse(self.next_event - self.t)?;
            self.t = self.next_event;
            self.jump()?;
            self.next_event = self.t + self.rng.sample::<f64, _>(Exp1) / self.rho;
        }
        self.diffuse(t_target - self.t)?;
        self.t = t_target;
        Ok(())
    }

    /// Advances on `dt` sub-steps to `t_target`.
    fn run_to(&mut self, t_target: f64, dt: f64) -> Result<()> {
        while self.t < t_target {
            let next = (self.t + dt).min(t_target);
            // absorb a sliver left by rounding into the current step
            let next = if t_target - next < 1e-9 * dt { t_target } else { next };
            self.advance_to(next)?;
        }
        Ok(())
    }
}

#[allow(clippy::too_many_arguments)]
fn record_paths(
    dd: &DriftDiffusionSpec,
    jumps: &JumpFamily,
    rho: f64,
    x0: &[f64],
    t_end: f64,
    cfg: &SimConfig,
    seed: u64,
    stream: u64,
) -> Result<Vec<PathRecord>> {
    check_args(x0, t_end, cfg.dt)?;
    let times = time_grid(t_end, cfg.dt);
    let mut ens = Ensemble::new(dd, jumps, rho, cfg.reflection, path_rng(seed, stream), x0, true);
    let mut states = vec![Vec::with_capacity(times.len()); x0.len()];
    let mut local = vec![Vec::with_capacity(times.len()); x0.len()];
    for (i, &t) in times.iter().enumerate() {
        if i > 0 {
            ens.advance_to(t)?;
        }
        for k in 0..x0.len() {
            states[k].push(ens.x[k]);
            local[k].push(ens.local[k]);
        }
    }
    let events = ens.events.take().unwrap_or_default();
    Ok(states
        .into_iter()
        .zip(local)
        .zip(events)
        .map(|((states, local_time), jump_events)| PathRecord {
            times: times.clone(),
            states,
            local_time,
            jump_events,
            seed,
            stream,
        })
        .collect())
}

pub fn simulate_reflected_diffusion(
    dd: &DriftDiffusionSpec,
    x0: f64,
    t_end: f64,
    dt: f64,
    seed: u64,
) -> Result<PathRecord> {
    simulate_reflected_diffusion_with(dd, x0, t_end, &SimConfig::new(dt), seed)
}

pub fn simulate_reflected_diffusion_with(
    dd: &DriftDiffusionSpec,
    x0: f64,
    t_end: f64,
    cfg: &SimConfig,
    seed: u64,
) -> Result<PathRecord> {
    let mut v = record_paths(dd, &JumpFamily::None, 0.0, &[x0], t_end, cfg, seed, 0)?;
    Ok(v.remove(0))
}

pub fn simulate_rjd(model: &RJDModel, x0: f64, t_end: f64, dt: f64, seed: u64) -> Result<PathRecord> {
    simulate_rjd_with(model, x0, t_end, &SimConfig::new(dt), seed, 0)
}

/// A single path on random stream `stream` of `seed`.
pub fn simulate_rjd_with(
    model: &RJDModel,
    x0: f64,
    t_end: f64,
    cfg: &SimConfig,
    seed: u64,
    stream: u64,
) -> Result<PathRecord> {
    let mut v = record_paths(
        &model.dd,
        &model.jumps,
        model.rate_bound(),
        &[x0],
        t_end,
        cfg,
        seed,
        stream,
    )?;
    Ok(v.remove(0))
}

/// Grid check of stochastic ordering on the model's coarse grids.
pub fn family_is_ordered(model: &RJDModel) -> bool {
    model.jumps.is_right_translation()
        || is_stochastically_ordered(
            &model.jumps,
            &uniform_grid(model.x_max(), model.grid_step() * 10.0),
            &model.z_grid(),
        )
}

pub fn simulate_coupled_pair(
    model: &RJDModel,
    x1: f64,
    x2: f64,
    t_end: f64,
    dt: f64,
    seed: u64,
) -> Result<CoupledPair> {
    simulate_coupled_pair_with(model, x1, x2, t_end, &SimConfig::new(dt), seed, 0)
}

/// Two copies from `x1 <= x2` driven by the same randomness.
pub fn simulate_coupled_pair_with(
    model: &RJDModel,
    x1: f64,
    x2: f64,
    t_end: f64,
    cfg: &SimConfig,
    seed: u64,
    stream: u64,
) -> Result<CoupledPair> {
    if x1 > x2 {
        return Err(RjdError::Precondition(format!(
            "coupled pair needs x1 <= x2, got {x1} > {x2}"
        )));
    }
    if !family_is_ordered(model) {
        return Err(RjdError::NotOrdered(
            "coupled pairs are only order preserving for ordered families; use independent paths".into(),
        ));
    }
    let mut v = record_paths(
        &model.dd,
        &model.jumps,
        model.rate_bound(),
        &[x1, x2],
        t_end,
        cfg,
        seed,
        stream,
    )?;
    let high = v.pop().unwrap();
    let low = v.pop().unwrap();
    let meet_time = low
        .states
        .iter()
        .zip(&high.states)
        .position(|(a, b)| (b - a).abs() <= cfg.meet_threshold)
        .map(|i| low.times[i]);
    let order_violations = low.states.iter().zip(&high.states).filter(|(a, b)| a > b).count();
    Ok(CoupledPair {
        low,
        high,
        ordered: true,
        meet_time,
        order_violations,
    })
}

/// Monte Carlo kernel: `n_paths` independent ensembles, each made of copies
/// started at `x0` and sharing one random stream, observed at the sorted
/// times `obs`. Returns `out[path][time][copy]`. Path `i` uses stream
/// `stream_offset + i` of `seed`.
pub fn observe_paths(
    model: &RJDModel,
    x0: &[f64],
    obs: &[f64],
    n_paths: usize,
    cfg: &SimConfig,
    seed: u64,
    stream_offset: u64,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let t_end = obs.last().copied().unwrap_or(0.0);
    check_args(x0, t_end, cfg.dt)?;
    if obs.windows(2).any(|w| w[1] < w[0]) || obs.first().is_some_and(|t| *t < 0.0) {
        return Err(RjdError::Precondition(
            "observation times must be sorted and nonnegative".into(),
        ));
    }
    let rho = model.rate_bound();
    (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let rng = path_rng(seed, stream_offset + i as u64);
            let mut ens = Ensemble::new(&model.dd, &model.jumps, rho, cfg.reflection, rng, x0, false);
            let mut out = Vec::with_capacity(obs.len());
            for &t in obs {
                ens.run_to(t, cfg.dt)?;
                out.push(ens.x.clone());
            }
            Ok(out)
        })
        .collect()
}
