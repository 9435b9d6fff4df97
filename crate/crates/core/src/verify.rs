//! Monte Carlo checks of certified rates.
//!
//! The central estimator is the gap `E V_λ(Z^{x₂}(t)) - E V_λ(Z^{x₁}(t))`
//! for `V_λ(x) = e^{λx}`. For ordered families both expectations come from
//! coupled copies on one random stream, which removes most of the variance;
//! otherwise the two copies run on unrelated streams.

use serde::Serialize;

use crate::error::{Result, RjdError};
use crate::model::RJDModel;
use crate::rate::{k_max, RateCertificate, VLyapunov};
use crate::rng::derive_seed;
use crate::sim::{family_is_ordered, observe_paths, SimConfig};
use crate::stats::{mean_stderr, ols};

pub const DEFAULT_RATE_PATHS: usize = 100_000;
pub const DEFAULT_DISTRIBUTION_PATHS: usize = 10_000;
pub const DEFAULT_DT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// Shared randomness when the family is ordered, independent otherwise.
    Auto,
    Independent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapEstimate {
    pub t: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub coupled: bool,
}

fn check_lambda(model: &RJDModel, lambda: f64) -> Result<()> {
    if !(0.0..model.lambda0()).contains(&lambda) {
        return Err(RjdError::LambdaOutOfRange {
            lambda,
            lambda0: model.lambda0(),
        });
    }
    Ok(())
}

/// Gap estimates at each of the sorted `times`, all from one set of paths.
#[allow(clippy::too_many_arguments)]
pub fn v_gap_series(
    model: &RJDModel,
    x1: f64,
    x2: f64,
    lambda: f64,
    times: &[f64],
    n_paths: usize,
    cfg: &SimConfig,
    seed: u64,
    pairing: Pairing,
) -> Result<Vec<GapEstimate>> {
    check_lambda(model, lambda)?;
    if n_paths < 100 {
        return Err(RjdError::Precondition(format!(
            "at least 100 paths are needed, got {n_paths}"
        )));
    }
    let v = VLyapunov::new(lambda);
    let coupled = pairing == Pairing::Auto && family_is_ordered(model);
    let diffs: Vec<Vec<f64>> = if coupled {
        observe_paths(model, &[x1, x2], times, n_paths, cfg, seed, 0)?
            .into_iter()
            .map(|p| p.iter().map(|c| v.eval(c[1]) - v.eval(c[0])).collect())
            .collect()
    } else {
        let a = observe_paths(model, &[x1], times, n_paths, cfg, seed, 0)?;
        let b = observe_paths(model, &[x2], times, n_paths, cfg, derive_seed(seed, 1), 0)?;
        a.iter()
            .zip(&b)
            .map(|(pa, pb)| {
                pa.iter()
                    .zip(pb)
                    .map(|(ca, cb)| v.eval(cb[0]) - v.eval(ca[0]))
                    .collect()
            })
            .collect()
    };
    Ok(times
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            if t == 0.0 {
                return GapEstimate {
                    t,
                    estimate: v.eval(x2) - v.eval(x1),
                    stderr: 0.0,
                    coupled,
                };
            }
            let col: Vec<f64> = diffs.iter().map(|d| d[j]).collect();
            let (estimate, stderr) = mean_stderr(&col);
            GapEstimate {
                t,
                estimate,
                stderr,
                coupled,
            }
        })
        .collect())
}

/// `E V_λ(Z^{x₂}(t)) - E V_λ(Z^{x₁}(t))` with its standard error.
#[allow(clippy::too_many_arguments)]
pub fn v_gap_estimate(
    model: &RJDModel,
    x1: f64,
    x2: f64,
    lambda: f64,
    t: f64,
    n_paths: usize,
    dt: f64,
    seed: u64,
) -> Result<GapEstimate> {
    let mut v = v_gap_series(
        model,
        x1,
        x2,
        lambda,
        &[t],
        n_paths,
        &SimConfig::new(dt),
        seed,
        Pairing::Auto,
    )?;
    Ok(v.remove(0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub times: Vec<f64>,
    pub log_gaps: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub n_paths: usize,
    pub target_slope: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Every requested time with its estimate and the exponential law
    /// `(V(x₂) - V(x₁)) e^{K t}` it is compared with.
    pub series: Vec<DecayPoint>,
    pub dropped_times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayPoint {
    pub t: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub predicted: f64,
}

/// Regression of `log |gap(t)|` on `t` for a model whose jumps are
/// state-independent translations to the right and whose coefficients are
/// constant. The fitted slope is compared with `K(λ)` within
/// `max(3 stderr, 10% |K|)`.
#[allow(clippy::too_many_arguments)]
pub fn exact_rate_test(
    model: &RJDModel,
    lambda: f64,
    x1: f64,
    x2: f64,
    times: &[f64],
    n_paths: usize,
    cfg: &SimConfig,
    seed: u64,
) -> Result<DecayFit> {
    if x1 == x2 {
        return Err(RjdError::ZeroGap);
    }
    if !model.k_constant_in_x() {
        return Err(RjdError::Precondition(
            "the exact-rate identity holds only for constant coefficients with state-independent rightward jumps"
                .into(),
        ));
    }
    let drift = crate::rate::joint_drift(model, 0.0);
    if !(drift < 0.0) {
        return Err(RjdError::Precondition(format!(
            "the exact-rate identity needs a negative joint drift, got {drift}"
        )));
    }
    let k = k_max(model, lambda)?.value;
    if !(k < 0.0) {
        return Err(RjdError::Precondition(format!("K({lambda}) = {k} is not negative")));
    }
    if times.len() < 3 || times.iter().any(|&t| !(t > 0.0)) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(RjdError::Precondition(
            "need at least three strictly increasing positive times".into(),
        ));
    }
    let gaps = v_gap_series(model, x1, x2, lambda, times, n_paths, cfg, seed, Pairing::Auto)?;
    let v = VLyapunov::new(lambda);
    let v0 = v.eval(x2) - v.eval(x1);
    let series: Vec<DecayPoint> = gaps
        .iter()
        .map(|g| DecayPoint {
            t: g.t,
            estimate: g.estimate,
            stderr: g.stderr,
            predicted: v0 * (k * g.t).exp(),
        })
        .collect();
    let (kept, dropped): (Vec<&GapEstimate>, Vec<&GapEstimate>) = gaps
        .iter()
        .partition(|g| g.estimate.abs() >= 3.0 * g.stderr && g.estimate != 0.0);
    let ts: Vec<f64> = kept.iter().map(|g| g.t).collect();
    let logs: Vec<f64> = kept.iter().map(|g| g.estimate.abs().ln()).collect();
    let fit = ols(&ts, &logs);
    let (slope, intercept, slope_stderr) = fit.map_or((f64::NAN, f64::NAN, f64::NAN), |f| {
        (f.slope, f.intercept, f.slope_stderr)
    });
    let se_term = if slope_stderr.is_finite() {
        3.0 * slope_stderr
    } else {
        0.0
    };
    let tolerance = se_term.max(0.1 * k.abs());
    let pass = kept.len() >= 3 && (slope - k).abs() <= tolerance;
    Ok(DecayFit {
        times: ts,
        log_gaps: logs,
        slope,
        intercept,
        slope_stderr,
        n_paths,
        target_slope: k,
        tolerance,
        pass,
        series,
        dropped_times: dropped.iter().map(|g| g.t).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub t: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub bound: f64,
    /// `bound + 3 stderr - |estimate|`; negative falsifies the certificate.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub lambda: f64,
    pub kappa: f64,
    pub coupled: bool,
    pub rows: Vec<BoundRow>,
    pub pass: bool,
}

/// One-sided check of `|gap(t)| <= (V(x₁) + V(x₂)) e^{-κt}` at the
/// certificate's `λ`. The test function `V_λ` only bounds the weighted norm
/// from below, so a pass is evidence rather than proof.
#[allow(clippy::too_many_arguments)]
pub fn coupling_bound_check(
    model: &RJDModel,
    cert: &RateCertificate,
    x1: f64,
    x2: f64,
    times: &[f64],
    n_paths: usize,
    cfg: &SimConfig,
    seed: u64,
) -> Result<BoundReport> {
    if !(cert.kappa > 0.0) {
        return Err(RjdError::Precondition(format!(
            "certificate rate must be positive, got {}",
            cert.kappa
        )));
    }
    let lambda = cert.lambda_star;
    let v = VLyapunov::new(lambda);
    let gaps = v_gap_series(model, x1, x2, lambda, times, n_paths, cfg, seed, Pairing::Auto)?;
    let rows: Vec<BoundRow> = gaps
        .iter()
        .map(|g| {
            let bound = (v.eval(x1) + v.eval(x2)) * (-cert.kappa * g.t).exp();
            BoundRow {
                t: g.t,
                estimate: g.estimate,
                stderr: g.stderr,
                bound,
                margin: bound + 3.0 * g.stderr - g.estimate.abs(),
            }
        })
        .collect();
    Ok(BoundReport {
        lambda,
        kappa: cert.kappa,
        coupled: gaps.first().is_some_and(|g| g.coupled),
        pass: rows.iter().all(|r| r.margin >= 0.0),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(samples: &[f64], bins: usize) -> Self {
        let hi = samples.iter().copied().fold(0.0, f64::max);
        let width = if hi > 0.0 { hi / bins as f64 } else { 1.0 };
        let edges: Vec<f64> = (0..=bins).map(|i| i as f64 * width).collect();
        let mut counts = vec![0u64; bins];
        for &s in samples {
            let b = ((s / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        Self { edges, counts }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalDistribution {
    #[serde(skip)]
    pub samples: Vec<f64>,
    pub n_samples: usize,
    pub mean: f64,
    pub second_moment: f64,
    pub mean_stderr: f64,
    pub histogram: Histogram,
}

impl EmpiricalDistribution {
    pub fn from_samples(samples: Vec<f64>) -> Self {
        let (mean, mean_se) = mean_stderr(&samples);
        let second_moment = samples.iter().map(|s| s * s).sum::<f64>() / samples.len().max(1) as f64;
        let histogram = Histogram::new(&samples, 50);
        Self {
            n_samples: samples.len(),
            samples,
            mean,
            second_moment,
            mean_stderr: mean_se,
            histogram,
        }
    }

    /// Empirical `P(X > z)`.
    pub fn survival(&self, z: f64) -> f64 {
        self.samples.iter().filter(|&&s| s > z).count() as f64 / self.samples.len() as f64
    }
}

/// Pools the states of `n_paths` paths from `x0` sampled at
/// `t_burn, t_burn + stride, ...` up to `t_end`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_stationary(
    model: &RJDModel,
    x0: f64,
    t_burn: f64,
    t_end: f64,
    sample_stride: f64,
    n_paths: usize,
    cfg: &SimConfig,
    seed: u64,
) -> Result<EmpiricalDistribution> {
    // equal ends with no stride is a single snapshot at t_end
    if !(t_burn < t_end || (t_burn == t_end && sample_stride <= 0.0)) {
        return Err(RjdError::Precondition(format!(
            "need t_burn < t_end, got {t_burn} and {t_end}"
        )));
    }
    let obs = if sample_stride > 0.0 {
        let n = ((t_end - t_burn) / sample_stride + 1e-9).floor() as usize;
        (0..=n).map(|i| t_burn + i as f64 * sample_stride).collect()
    } else {
        vec![t_end]
    };
    let paths = observe_paths(model, &[x0], &obs, n_paths, cfg, seed, 0)?;
    let samples: Vec<f64> = paths.into_iter().flat_map(|p| p.into_iter().map(|c| c[0])).collect();
    Ok(EmpiricalDistribution::from_samples(samples))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentRow {
    pub t: f64,
    pub moment: f64,
    pub stderr: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub alpha: f64,
    pub stationary_moment: f64,
    pub stationary_stderr: f64,
    pub rows: Vec<MomentRow>,
    pub slope: f64,
    pub slope_stderr: f64,
    pub kappa: f64,
    pub pass: bool,
    pub notes: Vec<String>,
}

/// Checks that `|E Z(t)^α - (π, x^α)|` decays at least as fast as
/// `e^{-κt}`. The stationary moment is estimated by simulation when not
/// supplied.
#[allow(clippy::too_many_arguments)]
pub fn moment_convergence_check(
    model: &RJDModel,
    cert: &RateCertificate,
    alpha: f64,
    x0: f64,
    times: &[f64],
    n_paths: usize,
    stationary_moment: Option<f64>,
    cfg: &SimConfig,
    seed: u64,
) -> Result<MomentReport> {
    if !(alpha >= 0.0) {
        return Err(RjdError::Precondition(format!(
            "moment order must be nonnegative, got {alpha}"
        )));
    }
    let mut notes = Vec::new();
    if alpha == 0.0 {
        notes.push("zeroth moments are total masses; the difference vanishes identically".into());
        return Ok(MomentReport {
            alpha,
            stationary_moment: 1.0,
            stationary_stderr: 0.0,
            rows: times
                .iter()
                .map(|&t| MomentRow {
                    t,
                    moment: 1.0,
                    stderr: 0.0,
                    distance: 0.0,
                })
                .collect(),
            slope: f64::NEG_INFINITY,
            slope_stderr: 0.0,
            kappa: cert.kappa,
            pass: true,
            notes,
        });
    }
    let (target, target_se) = match stationary_moment {
        Some(m) => (m, 0.0),
        None => {
            let burn = 20.0 / cert.kappa;
            let d = estimate_stationary(model, x0, burn, burn, 0.0, n_paths, cfg, derive_seed(seed, 2))?;
            let powered: Vec<f64> = d.samples.iter().map(|s| s.powf(alpha)).collect();
            mean_stderr(&powered)
        }
    };
    let paths = observe_paths(model, &[x0], times, n_paths, cfg, seed, 0)?;
    let rows: Vec<MomentRow> = times
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let col: Vec<f64> = paths.iter().map(|p| p[j][0].powf(alpha)).collect();
            let (moment, stderr) = mean_stderr(&col);
            MomentRow {
                t,
                moment,
                stderr: (stderr * stderr + target_se * target_se).sqrt(),
                distance: (moment - target).abs(),
            }
        })
        .collect();
    let kept: Vec<&MomentRow> = rows
        .iter()
        .filter(|r| r.distance >= 3.0 * r.stderr && r.distance > 0.0)
        .collect();
    let ts: Vec<f64> = kept.iter().map(|r| r.t).collect();
    let logs: Vec<f64> = kept.iter().map(|r| r.distance.ln()).collect();
    let (slope, slope_stderr) = match ols(&ts, &logs) {
        Some(f) => (f.slope, f.slope_stderr),
        None => (f64::NAN, f64::NAN),
    };
    let pass = if kept.len() < 2 {
        notes.push("fewer than two times resolve the distance above noise; nothing to regress".into());
        rows.iter().all(|r| r.distance < 3.0 * r.stderr)
    } else {
        let se = if slope_stderr.is_finite() { slope_stderr } else { 0.0 };
        slope <= -cert.kappa + 3.0 * se
    };
    Ok(MomentReport {
        alpha,
        stationary_moment: target,
        stationary_stderr: target_se,
        rows,
        slope,
        slope_stderr,
        kappa: cert.kappa,
        pass,
        notes,
    })
}
