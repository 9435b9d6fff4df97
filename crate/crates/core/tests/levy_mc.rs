use rjd_core::levy::{effective_drifts, gap_equivalence_test, pair_gaps_at, simulate_pair};
use rjd_core::stats::{ks_two_sample, mean_stderr};
use rjd_core::verify::estimate_stationary;
use rjd_core::{LevyPairModel, LineMeasure, PlanarJumpMeasure, Side, SimConfig};

const SEED: u64 = 31;

fn example_pair() -> LevyPairModel {
    let up = LineMeasure::Exponential {
        mass: 1.0,
        rate: 1.0,
        side: Side::Positive,
    };
    let down = LineMeasure::Exponential {
        mass: 1.0,
        rate: 1.0,
        side: Side::Negative,
    };
    LevyPairModel::new(
        0.0,
        3.0,
        [1.0, 0.0, 1.0],
        PlanarJumpMeasure::product(up, down).unwrap(),
        None,
    )
    .unwrap()
}

#[test]
fn effective_drifts_of_exponential_pair() {
    let e = effective_drifts(&example_pair());
    assert_eq!((e.m_plus, e.m_minus, e.stable), (1.0, 2.0, true));
    let free = |gp, gm| LevyPairModel::new(gp, gm, [1.0, 0.0, 1.0], PlanarJumpMeasure::zero(), None).unwrap();
    let e = effective_drifts(&free(0.0, 1.0));
    assert_eq!((e.m_plus, e.m_minus, e.stable), (0.0, 1.0, true));
    assert!(!effective_drifts(&free(0.5, 0.5)).stable);
}

#[test]
fn driftless_gap_starts_near_initial_value() {
    let pair = LevyPairModel::new(0.0, 0.0, [1.0, 0.0, 1.0], PlanarJumpMeasure::zero(), None).unwrap();
    let gaps = pair_gaps_at(&pair, 0.0, 5.0, 0.1, 10_000, 1e-3, SEED).unwrap();
    let (m, se) = mean_stderr(&gaps);
    // |5 + √2 B(0.1)| essentially never reaches 0, so the mean stays at 5
    assert!((m - 5.0).abs() < 3.0 * se, "{m} ± {se}");
    assert!((se * (gaps.len() as f64).sqrt() - 0.2f64.sqrt()).abs() < 0.02);
}

#[test]
fn long_run_gap_agrees_with_reduced_model() {
    let pair = example_pair();
    let cfg = SimConfig::new(1e-2);
    let a = pair_gaps_at(&pair, 0.0, 1.0, 80.0, 3000, cfg.dt, SEED).unwrap();
    let b = estimate_stationary(&pair.gap_model().unwrap(), 1.0, 80.0, 80.0, 0.0, 3000, &cfg, SEED + 1).unwrap();
    let (ma, sa) = mean_stderr(&a);
    assert!(ma.is_finite() && ma > 0.0);
    assert!(
        (ma - b.mean).abs() < 3.0 * (sa * sa + b.mean_stderr * b.mean_stderr).sqrt(),
        "{ma} vs {}",
        b.mean
    );
    assert!(ks_two_sample(&a, &b.samples).p_value > 0.01);
}

#[test]
fn lower_unit_jump_equivalence() {
    let lam = PlanarJumpMeasure::product(LineMeasure::Zero, LineMeasure::dirac(1.0, 1.0)).unwrap();
    let pair = LevyPairModel::new(0.0, 2.0, [1.0, 0.0, 1.0], lam, None).unwrap();
    let r = gap_equivalence_test(&pair, 0.5, 1.5, 5000, &SimConfig::new(1e-3), SEED).unwrap();
    assert!(r.pass, "{r:?}");
}

#[test]
fn pair_paths_are_reproducible() {
    let a = simulate_pair(&example_pair(), 0.3, 1.0, 2.0, 1e-3, SEED).unwrap();
    let b = simulate_pair(&example_pair(), 0.3, 1.0, 2.0, 1e-3, SEED).unwrap();
    assert_eq!(a.gap, b.gap);
    assert_eq!(a.tie_events, b.tie_events);
}
