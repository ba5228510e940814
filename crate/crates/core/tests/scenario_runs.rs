use mcflab_core::scenarios::{run_scenario, ScenarioSpec};
use mcflab_core::Error;

fn spec(resolution: usize, params: &str) -> ScenarioSpec {
    ScenarioSpec::from_json(&format!(
        r#"{{"version":1,"seed":11,"resolution":{resolution},"params":{params}}}"#
    ))
    .unwrap()
}

#[test]
fn plane_passes_every_monitor() {
    for p in [
        r#"{"scenario":"plane","dimension":1,"slope":1.5}"#,
        r#"{"scenario":"plane","dimension":2,"slope":0.2,"window":0.02}"#,
    ] {
        let out = run_scenario(&spec(48, p)).unwrap();
        assert!(out.verdict.pass, "{:?}", out.verdict.failures);
        assert!(out.verdict.measured["max_displacement"] <= 1e-12);
        assert_eq!(out.verdict.measured["monitor_violations"], 0.0);
    }
}

#[test]
fn flat_zero_gradient_is_trivial() {
    let out = run_scenario(&spec(128, r#"{"scenario":"flat_stay_graphical","l":0}"#)).unwrap();
    assert!(out.verdict.pass, "{:?}", out.verdict.failures);
    for k in ["c_offset", "c_grad", "c_hess"] {
        assert_eq!(out.verdict.measured[k], 0.0, "{k}");
    }
}

#[test]
fn zero_lipschitz_family_never_leaves() {
    let out = run_scenario(&spec(
        64,
        r#"{"scenario":"stay_graphical","lipschitz":0,"family_size":2,"window":0.02}"#,
    ))
    .unwrap();
    assert!(out.verdict.pass);
    assert_eq!(out.verdict.measured["kappa_hat"], 0.02);
    assert_eq!(out.verdict.measured["censored"], 1.0);
    assert_eq!(out.members.len(), 2);
}

#[test]
fn family_runs_are_deterministic() {
    let s = spec(96, r#"{"scenario":"stay_graphical","lipschitz":2,"family_size":3,"window":0.02}"#);
    let a = run_scenario(&s).unwrap();
    let b = run_scenario(&s).unwrap();
    assert_eq!(a.verdict, b.verdict);
    assert_eq!(a.primary, b.primary);
    for (x, y) in a.members.iter().zip(&b.members) {
        assert_eq!(x.trace.records.len(), y.trace.records.len());
        for (r, q) in x.trace.records.iter().zip(&y.trace.records) {
            assert_eq!(r.surface.to_json(), q.surface.to_json());
            assert_eq!(serde_json::to_string(&r.reports).unwrap(), serde_json::to_string(&q.reports).unwrap());
        }
    }
    assert!(a.verdict.measured["max_grad_over_l"] <= 4.0);
}

#[test]
fn gapless_fold_is_graphical_at_once() {
    let out = run_scenario(&spec(
        128,
        r#"{"scenario":"become_graphical","lipschitz":1,"gamma":0.02,"epsilon":0.02,"gap_width":0}"#,
    ))
    .unwrap();
    assert!(out.verdict.pass, "{:?}", out.verdict.failures);
    assert_eq!(out.verdict.measured["first_graphical_time"], 0.0);
}

#[test]
fn fold_over_budget_is_a_config_error() {
    let e = run_scenario(&spec(
        128,
        r#"{"scenario":"become_graphical","lipschitz":1,"gamma":0.01,"epsilon":0.05,"gap_width":0.05}"#,
    ))
    .unwrap_err();
    assert!(matches!(e, Error::Config { ref field, .. } if field == "params.gap_width"), "{e}");
}

#[test]
fn steep_ramp_needs_tilt_headroom() {
    let e = run_scenario(&spec(128, r#"{"scenario":"bounded_curvature","lipschitz":3}"#)).unwrap_err();
    assert!(matches!(e, Error::Config { ref field, .. } if field == "params.kappa_tilt"), "{e}");
}

#[test]
fn small_circle_tracks_exact_solution() {
    let out = run_scenario(&spec(256, r#"{"scenario":"circle","radius":0.5}"#)).unwrap();
    assert!(out.verdict.pass, "{:?}", out.verdict.failures);
    assert!((out.verdict.measured["extinction_time"] - 0.125).abs() < 1.25e-3);
}
