use lqg_walk::io::{read_log_csv, write_log_csv};
use lqg_walk::sim::{
    compute_metrics, find_push_limit, run_height_mismatch, run_scenario, DisturbanceEvent, PushDirection,
    PushSearch, ScenarioConfig, SweepGrid,
};
use lqg_walk::step_adjust::ComplianceConfig;

fn adjusting() -> ComplianceConfig {
    ComplianceConfig::enabled(0.025, 1.2)
}

#[test]
fn identical_seed_gives_identical_log() {
    let cfg = ScenarioConfig::noisy(5);
    let a = run_scenario(&cfg).unwrap();
    let b = run_scenario(&cfg).unwrap();
    assert_eq!(a.log, b.log);
    let c = run_scenario(&ScenarioConfig::noisy(6)).unwrap();
    assert_ne!(a.log, c.log);
}

#[test]
fn zero_force_push_is_no_push() {
    let mut cfg = ScenarioConfig::noisy(1);
    let plain = run_scenario(&cfg).unwrap();
    cfg.disturbances = vec![DisturbanceEvent::new(2.5, 0.01, [0.0, 0.0])];
    let pushed = run_scenario(&cfg).unwrap();
    assert_eq!(plain.log, pushed.log);
}

#[test]
fn log_length_matches_grid() {
    let result = run_scenario(&ScenarioConfig::noisy(2)).unwrap();
    assert_eq!(result.log.len(), 2000);
    for (k, row) in result.log.iter().enumerate() {
        assert_eq!(row.t, k as f64 * 0.005);
    }
}

#[test]
fn metrics_recompute_from_csv() {
    for cfg in [
        ScenarioConfig::noisy(4),
        ScenarioConfig::push([1500.0, 0.0], 2.5),
        ScenarioConfig::height_mismatch(1.2),
    ] {
        let result = run_scenario(&cfg).unwrap();
        let mut buf = Vec::new();
        write_log_csv(&mut buf, &result.log).unwrap();
        let parsed = read_log_csv(buf.as_slice()).unwrap();
        assert_eq!(compute_metrics(&parsed, cfg.robot.support_half_extents()), result.metrics);
    }
}

#[test]
fn fall_is_latched_and_terminates_run() {
    let result = run_scenario(&ScenarioConfig::push([1500.0, 0.0], 2.5)).unwrap();
    let m = result.metrics;
    assert!(m.fell);
    let t = m.fall_time.unwrap();
    assert!(t > 2.5 && t < 4.0, "fall at {t}");
    assert_eq!(result.log.last().unwrap().t, t);
    assert_eq!(m.steps_completed, t.floor() as usize);
    assert!(result.log.len() < 2000);
}

#[test]
fn push_grid_survived() {
    let grid = SweepGrid::default();
    let base = ScenarioConfig::default();
    let points = grid.points().unwrap();
    assert_eq!(points.len(), 6);
    for point in &points {
        let result = run_scenario(&grid.scenario(&base, point)).unwrap();
        assert!(!result.metrics.fell, "fell at {point:?}");
    }
}

#[test]
fn survival_is_monotone_along_bisection() {
    let report = find_push_limit(&ScenarioConfig::default(), PushDirection::Backward, &PushSearch::default()).unwrap();
    assert!(report.f_fall - report.f_max <= 0.5);
    for a in &report.trace {
        for b in &report.trace {
            if !a.survived && b.force > a.force {
                assert!(!b.survived, "survived {} N after falling at {} N", b.force, a.force);
            }
        }
    }
}

#[test]
fn adjustment_extends_forward_push_limit() {
    // well above the unadjusted limit of this controller
    let base = ScenarioConfig::push([1100.0, 0.0], 2.5);
    let plain = run_scenario(&base).unwrap();
    assert!(plain.metrics.fell);
    let adjusted = run_scenario(&base.with_adjustment(adjusting())).unwrap();
    assert!(!adjusted.metrics.fell);
    assert!(!adjusted.adjustments.is_empty());
    // landing of the swing in progress displaced forward
    assert_eq!(adjusted.adjustments[0].step, 2);
    let moved = adjusted.final_plan.steps[3].x - adjusted.initial_plan.steps[3].x;
    assert!(moved > 0.02, "moved {moved}");
    // every placement carries the sum of the offsets applied up to its swing
    for i in 3..10 {
        let shift = adjusted.final_plan.steps[i].x - adjusted.initial_plan.steps[i].x;
        let expected: f64 = adjusted
            .adjustments
            .iter()
            .filter(|a| a.step < i)
            .map(|a| a.offset[0])
            .sum();
        assert!((shift - expected).abs() < 1e-12);
    }
    for i in 0..3 {
        assert_eq!(adjusted.final_plan.steps[i], adjusted.initial_plan.steps[i]);
    }
}

#[test]
fn adjusted_plans_keep_feet_apart() {
    let mut cfg = ScenarioConfig::push([0.0, -600.0], 2.5).with_adjustment(adjusting());
    cfg.id = "lateral".into();
    let result = run_scenario(&cfg).unwrap();
    let plan = &result.final_plan;
    let all: Vec<_> = plan.steps.iter().chain(std::iter::once(&plan.terminal)).collect();
    for pair in all.windows(2) {
        let side = pair[1].side.sign();
        assert!(side * (pair[1].y - pair[0].y) >= 0.05 - 1e-12);
    }
}

#[test]
fn height_mismatch_band() {
    for z in [0.8, 1.2] {
        let result = run_height_mismatch(&ScenarioConfig::height_mismatch(1.0), z).unwrap();
        assert!(!result.metrics.fell, "fell at z = {z}");
        assert_eq!(result.metrics.steps_completed, 4);
        assert!(result.omega_plant != result.omega_design);
    }
}

#[test]
fn nominal_tracking_is_exact() {
    let result = run_scenario(&ScenarioConfig::default()).unwrap();
    assert!(result.metrics.max_dcm_error < 1e-12, "{}", result.metrics.max_dcm_error);
}
