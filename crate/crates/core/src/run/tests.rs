use std::collections::BTreeSet;

use super::*;

fn config(json: &str) -> RunConfig {
    RunConfig::from_json_str(json).unwrap()
}

fn report(out: &RunOutput) -> serde_json::Value {
    serde_json::from_slice(&out.report).unwrap()
}

fn names(out: &RunOutput) -> BTreeSet<String> {
    out.files.iter().map(|f| f.name.clone()).collect()
}

#[test]
fn time_labels() {
    assert_eq!(time_label(0.0), "0");
    assert_eq!(time_label(3.0), "3");
    assert_eq!(time_label(0.1 * 3.0), "0.3");
    assert_eq!(time_label(2.5), "2.5");
}

#[test]
fn soliton_run_emits_contract_files() {
    let c = config(r#"{"preset":"grim_reaper","solver":{"N_r":100}}"#);
    let out = execute(Command::Soliton, &c).unwrap();
    assert!(out.passed);
    assert_eq!(names(&out), ["eps_trace.csv", "u_inf.csv"].map(String::from).into());
    let r = report(&out);
    assert!((r["C_eps"].as_f64().unwrap() - 0.5).abs() < 1e-4);
    assert!((r["C_quad"].as_f64().unwrap() - 0.5).abs() < 1e-4);
    assert!(r["residual"].as_f64().unwrap() < 1e-5);
    assert!(r["oracle"]["u_inf_error"].as_f64().unwrap() < 1e-4);

    let dir = tempfile::tempdir().unwrap();
    emit_outputs(&out, dir.path()).unwrap();
    let on_disk: BTreeSet<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(
        on_disk,
        ["eps_trace.csv", "report.json", "resolved_config.json", "u_inf.csv"].map(String::from).into()
    );
    let echoed = crate::config::parse_config(&dir.path().join("resolved_config.json")).unwrap();
    assert_eq!(echoed, c);
    let trace = std::fs::read_to_string(dir.path().join("eps_trace.csv")).unwrap();
    assert!(trace.starts_with("eps,eps_mean,iterations\n1,"));
}

#[test]
fn flow_snapshots_land_on_interval_multiples() {
    let c = config(r#"{"preset":"grim_reaper","solver":{"N_r":50},"flow":{"t_end":3,"snapshot_every":1}}"#);
    let out = execute(Command::Flow, &c).unwrap();
    let snaps: Vec<_> = out.files.iter().filter(|f| f.name.starts_with("u_t")).map(|f| f.name.as_str()).collect();
    assert_eq!(snaps, ["u_t0.csv", "u_t1.csv", "u_t2.csv", "u_t3.csv"]);
    let r = report(&out);
    assert_eq!(r["t_final"].as_f64(), Some(3.0));
    assert_eq!(r["stop_reason"], "time_reached");
    let history = &out.files[0];
    assert_eq!(history.name, "history.csv");
    assert!(String::from_utf8_lossy(&history.contents).starts_with("t,max_W,osc,speed,max_Weta\n0,"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let c = config(r#"{"preset":"hyperbolic_polar","solver":{"N_r":16,"N_theta":8},"flow":{"t_end":0.5,"u0":"random"},"seed":11}"#);
    for cmd in [Command::Soliton, Command::Flow, Command::Check] {
        let a = execute(cmd, &c).unwrap();
        let b = execute(cmd, &c).unwrap();
        assert_eq!(a.report, b.report, "{cmd}");
        assert_eq!(a.files, b.files, "{cmd}");
    }
}

#[test]
fn check_reports_conditions() {
    let ok = execute(Command::Check, &config(r#"{"preset":"hyperbolic_disk"}"#)).unwrap();
    assert!(ok.passed);
    let r = report(&ok);
    assert_eq!(r["pass"], true);
    assert!(r["conditions"].as_array().unwrap().len() >= 4);
    let wide = config(
        r#"{"geometry":{"kind":"radial_ball","n":2,"curvature":{"model":"hyperbolic","K":1},"R":0.5},"angle":{"phi":"const:0.01"}}"#,
    );
    assert!(!execute(Command::Check, &wide).unwrap().passed);
}

#[test]
fn verify_passes_on_the_grim_reaper() {
    let c = config(r#"{"preset":"grim_reaper","solver":{"N_r":50},"diagnostics":{"contraction_pairs":2}}"#);
    let out = execute(Command::Verify, &c).unwrap();
    let r = report(&out);
    assert!(out.passed, "{r:#}");
    assert_eq!(r["contraction"].as_array().unwrap().len(), 2);
    assert_eq!(names(&out), ["convergence.csv", "history.csv", "u_inf.csv"].map(String::from).into());
}

#[test]
fn verify_fails_with_an_impossible_tolerance() {
    let c = config(
        r#"{"preset":"grim_reaper","solver":{"N_r":50},"flow":{"t_end":2},"diagnostics":{"tol":1e-12,"contraction_pairs":0}}"#,
    );
    let out = execute(Command::Verify, &c).unwrap();
    assert!(!out.passed);
    let short = config(r#"{"preset":"grim_reaper","solver":{"N_r":50},"flow":{"t_end":0.5}}"#);
    assert!(matches!(
        execute(Command::Verify, &short),
        Err(McfError::InsufficientHistory { .. })
    ));
}

#[test]
fn study_reports_orders() {
    let c = config(r#"{"preset":"grim_reaper","solver":{"N_r":25}}"#);
    let out = execute(Command::Study, &c).unwrap();
    let r = report(&out);
    assert_eq!(r["case"], "grim_reaper");
    assert_eq!(r["oracle"], true);
    assert!(out.passed, "{r:#}");
    let csv = String::from_utf8(out.files[0].contents.clone()).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn emit_outputs_surfaces_path_on_failure() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("blocker");
    std::fs::write(&blocker, b"x").unwrap();
    let out = execute(Command::Check, &config(r#"{"preset":"hyperbolic_disk"}"#)).unwrap();
    let err = emit_outputs(&out, &blocker.join("sub")).unwrap_err();
    assert!(err.to_string().contains("blocker"), "{err}");
}
