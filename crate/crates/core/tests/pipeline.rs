use mcf_core::config::{InitialCondition, RunConfig};
use mcf_core::diagnostics::{catalog, flow_with_samples, verify_convergence};
use mcf_core::flow::{StepPolicy, Stop, StopReason};
use mcf_core::hypothesis::{check_existence, Status};
use mcf_core::soliton::{solve_soliton, NewtonPolicy};
use mcf_core::{emit_outputs, execute, parse_config, Command, Field};

// independent shooting solutions of the radial soliton ODE
const HYPERBOLIC_DISK_SPEED: f64 = -0.3360413637477979;
const FLAT_DISK_SPEED: f64 = 0.4040961587379183;

#[test]
fn flow_from_rest_reaches_the_shooting_speed() {
    for (name, speed) in [("hyperbolic_disk", HYPERBOLIC_DISK_SPEED), ("flat_disk", FLAT_DISK_SPEED)] {
        let case = catalog().into_iter().find(|c| c.name == name).unwrap();
        let (grid, angle) = case.setup().unwrap();
        let sol = solve_soliton(&grid, &angle, &NewtonPolicy::default()).unwrap();
        assert!((sol.c_quad - speed).abs() < 1e-3, "{name}: {}", sol.c_quad);
        let (state, why, samples) = flow_with_samples(
            &grid,
            &angle,
            &Field::zeros(&grid),
            &StepPolicy::default(),
            &Stop::stationary(1e-8),
            Some(0.5),
        )
        .unwrap();
        assert_eq!(why, StopReason::SpeedStationary);
        let rep = verify_convergence(&grid, &state, &samples, &sol, 1e-4).unwrap();
        assert!(rep.pass, "{name}: {:?}", rep.verdicts);
        assert!((rep.speed - speed).abs() < 1e-3);
    }
}

#[test]
fn checker_verdicts_on_the_curved_catalog_cases() {
    for case in catalog().into_iter().filter(|c| c.name != "grim_reaper" && c.name != "flat_disk") {
        let geom = mcf_core::make_geometry(&case.geometry).unwrap();
        let rep = check_existence(&geom, &case.phi).unwrap();
        if case.name == "hyperbolic_ball3" {
            // the angle exceeds the admissible size, every other row holds
            let failed: Vec<_> = rep.conditions.iter().filter(|c| c.status == Status::Fail).map(|c| c.name).collect();
            assert_eq!(failed, ["eps_cond"]);
            assert!(!rep.overall);
        } else {
            assert!(rep.overall, "{}: {:?}", case.name, rep.conditions);
        }
    }
}

#[test]
fn emitted_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = RunConfig::from_json_str(r#"{"preset":"pinched_disk","solver":{"N_r":40}}"#).unwrap();
    config.flow.t_end = Some(1.0);
    config.flow.u0 = InitialCondition::Cosine(0.1);
    let first = execute(Command::Flow, &config).unwrap();
    emit_outputs(&first, dir.path()).unwrap();
    let echoed = parse_config(&dir.path().join("resolved_config.json")).unwrap();
    assert_eq!(echoed, config);
    let second = execute(Command::Flow, &echoed).unwrap();
    assert_eq!(first.report, second.report);
    assert_eq!(std::fs::read(dir.path().join("report.json")).unwrap(), second.report);
}
