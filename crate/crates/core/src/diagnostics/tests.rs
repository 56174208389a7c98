use super::*;
use crate::geometry::Geometry;
use crate::soliton::solve_soliton;
use rand::{Rng, SeedableRng};

fn grim() -> (Grid, AngleData) {
    grim_reaper_case(100).setup().unwrap()
}

#[test]
fn grim_reaper_profile_is_exact() {
    let o = GrimReaper::default();
    assert!((o.phi() + 0.479425538604203).abs() < 1e-15);
    assert_eq!(o.profile(0.0), 0.0);
    let (grid, _) = grim();
    let exact = Field::from_fn(&grid, |x, _| o.profile(x) + 7.0);
    assert!(o.deviation(&grid, &exact) < 1e-14);
}

#[test]
fn flow_from_rest_converges_to_the_grim_reaper() {
    let (grid, angle) = grim();
    let sol = solve_soliton(&grid, &angle, &NewtonPolicy::default()).unwrap();
    let (state, why, samples) =
        flow_with_samples(&grid, &angle, &Field::zeros(&grid), &StepPolicy::default(), &Stop::stationary(1e-6), Some(0.5))
            .unwrap();
    assert_eq!(why, StopReason::SpeedStationary);
    let rep = verify_convergence(&grid, &state, &samples, &sol, 1e-3).unwrap();
    assert!(rep.pass, "{:?}", rep.verdicts);
    assert!(rep.osc_trace.windows(2).all(|w| w[1].0 > w[0].0));
    assert_eq!(rep.osc_trace.last().unwrap().0, state.t);
    assert!(rep.drift_trace.iter().all(|p| p.1.is_finite()));
}

#[test]
fn cosine_relaxes_to_a_constant() {
    let case = Case { phi: PhiSpec::Constant(0.0), oracle: None, ..grim_reaper_case(100) };
    let (grid, angle) = case.setup().unwrap();
    let sol = solve_soliton(&grid, &angle, &NewtonPolicy::default()).unwrap();
    let u0 = Field::from_fn(&grid, |x, _| 0.1 * (std::f64::consts::PI * x).cos());
    let (state, _, _) = flow_with_samples(&grid, &angle, &u0, &StepPolicy::default(), &Stop::at_time(5.0), None).unwrap();
    assert!(verify_convergence(&grid, &state, &[], &sol, 1e-3).unwrap().pass);
}

#[test]
fn perturbed_soliton_is_rejected() {
    let (grid, angle) = grim();
    let mut sol = solve_soliton(&grid, &angle, &NewtonPolicy::default()).unwrap();
    let (state, _, _) =
        flow_with_samples(&grid, &angle, &Field::zeros(&grid), &StepPolicy::default(), &Stop::stationary(1e-6), None).unwrap();
    let bumped: Vec<f64> = sol.u_inf.nodes().iter().zip(grid.coords()).map(|(u, x)| u + 0.1 * x).collect();
    sol.u_inf = Field::from_nodes(&grid, &bumped).unwrap();
    let rep = verify_convergence(&grid, &state, &[], &sol, 1e-3).unwrap();
    assert!(!rep.pass);
    assert!(!rep.verdicts[0].pass);
    assert!(rep.verdicts[1].pass && rep.verdicts[2].pass);
}

#[test]
fn mismatched_grids_are_rejected() {
    let (grid, angle) = grim();
    let sol = solve_soliton(&grid, &angle, &NewtonPolicy::default()).unwrap();
    let (other, other_angle) = grim_reaper_case(50).setup().unwrap();
    let (state, _, _) =
        flow_with_samples(&other, &other_angle, &Field::zeros(&other), &StepPolicy::default(), &Stop::at_time(2.0), None).unwrap();
    assert!(matches!(verify_convergence(&grid, &state, &[], &sol, 1e-3), Err(McfError::GridMismatch(_))));
}

#[test]
fn constant_difference_stays_constant() {
    let (grid, angle) = grim();
    let b = Field::from_fn(&grid, |x, _| 0.1 * x * x);
    let mut a = b.clone();
    a.shift(3.0);
    let rep = contraction_test(&grid, &a, &b, &angle, &StepPolicy::default(), 2.0).unwrap();
    assert!(rep.pass);
    assert!(rep.trace.iter().all(|p| p.1 < 1e-12));
}

#[test]
fn difference_contracts() {
    let case = Case { phi: PhiSpec::Constant(-0.3), oracle: None, ..grim_reaper_case(100) };
    let (grid, angle) = case.setup().unwrap();
    let b = Field::from_fn(&grid, |x, _| 0.2 * (std::f64::consts::PI * x).cos());
    let rep = contraction_test(&grid, &Field::zeros(&grid), &b, &angle, &StepPolicy::default(), 5.0).unwrap();
    assert!(rep.pass);
    assert!(rep.last < rep.initial);
    assert!(rep.max_increase <= CONTRACTION_SLACK);
    assert_eq!(rep.trace.last().unwrap().0, 5.0);
}

#[test]
fn random_pairs_contract() {
    let (grid, angle) = grim();
    let mut rng = rand::rngs::StdRng::seed_from_u64(5);
    let mut smooth = || {
        let c: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        Field::from_fn(&grid, |x, _| c[0] * x + c[1] * (2.0 * x).cos() + c[2] * (3.0 * x).sin())
    };
    for _ in 0..3 {
        let a = smooth();
        let b = smooth();
        let d = a.difference(&b);
        let scaled: Vec<f64> = a.nodes().iter().map(|v| v / d.oscillation()).collect();
        let bs: Vec<f64> = b.nodes().iter().map(|v| v / d.oscillation()).collect();
        let a = Field::from_nodes(&grid, &scaled).unwrap();
        let b = Field::from_nodes(&grid, &bs).unwrap();
        let rep = contraction_test(&grid, &a, &b, &angle, &StepPolicy::default(), 5.0).unwrap();
        assert!((rep.initial - 1.0).abs() < 1e-12);
        assert!(rep.pass && rep.last < 1.0);
    }
}

#[test]
fn grim_reaper_refines_at_second_order() {
    let settings = StudySettings { with_flow: false, ..Default::default() };
    let tab = refinement_study(&grim_reaper_case(50), 3, &settings).unwrap();
    assert!(tab.oracle);
    assert_eq!(tab.levels.iter().map(|l| l.n_r).collect::<Vec<_>>(), vec![50, 100, 200]);
    assert!(tab.min_order_c_quad() >= 1.9, "{:?}", tab.order_c_quad);
    assert!(tab.min_order_u_inf() >= 1.9, "{:?}", tab.order_u_inf);
}

#[test]
fn flat_disk_is_self_convergent() {
    let mut case = catalog().into_iter().find(|c| c.name == "flat_disk").unwrap();
    case.n_r = 25;
    let tab = refinement_study(&case, 3, &StudySettings::default()).unwrap();
    let c: Vec<f64> = tab.levels.iter().map(|l| l.c_quad).collect();
    assert!((c[0] - c[1]).abs() > 3.0 * (c[1] - c[2]).abs());
    assert!(tab.levels[2].c_quad_error.is_none());
    assert!(tab.levels.iter().all(|l| (l.flow_speed.unwrap() - l.c_quad).abs() < 1e-3));
}

#[test]
fn zero_angle_study_has_zero_errors() {
    let case = Case { phi: PhiSpec::Constant(0.0), oracle: None, ..grim_reaper_case(16) };
    let tab = refinement_study(&case, 3, &StudySettings::default()).unwrap();
    for l in &tab.levels[..2] {
        assert_eq!(l.c_quad_error, Some(0.0));
        assert_eq!(l.u_inf_error, Some(0.0));
        assert_eq!(l.flow_speed, Some(0.0));
    }
}

#[test]
fn study_guards() {
    let settings = StudySettings::default();
    assert!(refinement_study(&grim_reaper_case(50), 2, &settings).is_err());
    let small = StudySettings { max_nodes: 100, ..Default::default() };
    assert!(matches!(refinement_study(&grim_reaper_case(50), 3, &small), Err(McfError::ResourceLimit(_))));
}

#[test]
fn interpolation_reproduces_linear_data() {
    let geom = Geometry::polar_disk(crate::geometry::CurvatureModel::Flat, 1.0).unwrap();
    let grid = Grid::new(&geom, 10, 8).unwrap();
    let u = Field::from_fn(&grid, |r, _| 2.0 * r + 1.0);
    for &(r, t) in &[(0.3, 0.1), (0.95, 6.2), (0.5, 3.3)] {
        assert!((interpolate(&grid, &u, r, t) - (2.0 * r + 1.0)).abs() < 1e-12);
    }
}

#[test]
fn catalog_cases_build() {
    let cases = catalog();
    assert!(cases.len() >= 5);
    for c in &cases {
        let (grid, angle) = c.setup().unwrap();
        assert!(c.name == "grim_reaper" || angle.phi0() <= 0.25);
        assert!(grid.num_nodes() > 0);
    }
}

#[test]
fn random_fields_are_seeded_and_bounded() {
    let (grid, _) = grim();
    let a = random_field(&grid, 3);
    assert_eq!(a.nodes(), random_field(&grid, 3).nodes());
    assert_ne!(a.nodes(), random_field(&grid, 4).nodes());
    assert!(a.nodes().iter().all(|v| v.abs() <= RANDOM_AMPLITUDE));
    let polar = catalog().into_iter().find(|c| c.name == "hyperbolic_polar").unwrap();
    let g = polar.grid().unwrap();
    let f = random_field(&g, 1);
    assert!(f.is_finite());
    // nodes nearest the pole barely depend on the angle
    let row: Vec<f64> = (0..g.n_theta()).map(|j| f.at(0, j)).collect();
    let spread = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - row.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread < 0.05, "{spread}");
}
