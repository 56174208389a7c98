use std::f64::consts::PI;

use proptest::prelude::*;

use super::*;
use crate::geometry::{CurvatureModel, Geometry};

fn interval_grid(n: usize) -> Grid {
    Grid::new(&Geometry::interval(-1.0, 1.0).unwrap(), n, 1).unwrap()
}

fn polar_grid(curv: CurvatureModel, radius: f64, n: usize, nt: usize) -> Grid {
    Grid::new(&Geometry::polar_disk(curv, radius).unwrap(), n, nt).unwrap()
}

fn grim_reaper(x: f64) -> f64 {
    -2.0 * (0.5 * x).cos().ln()
}

fn grim_angle(grid: &Grid) -> AngleData {
    AngleData::new(grid, &PhiSpec::Constant(-(0.5f64).sin())).unwrap()
}

fn catalog_grids() -> Vec<Grid> {
    vec![
        interval_grid(24),
        Grid::new(&Geometry::radial_ball(2, CurvatureModel::Hyperbolic(1.0), 0.3).unwrap(), 20, 1).unwrap(),
        Grid::new(&Geometry::radial_ball(3, CurvatureModel::Flat, 1.0).unwrap(), 20, 1).unwrap(),
        polar_grid(CurvatureModel::Flat, 1.0, 12, 16),
        polar_grid(CurvatureModel::Hyperbolic(1.0), 0.3, 10, 12),
    ]
}

#[test]
fn constants_are_minimal() {
    for grid in catalog_grids() {
        let angle = AngleData::zero(&grid);
        let u = ghost_fill(&grid, &Field::constant(&grid, 3.7), &angle).unwrap();
        let f = mcf_operator(&grid, &u, &angle).unwrap();
        assert!(f.nodes().iter().all(|v| v.abs() < 1e-12), "{:?}", grid.kind());
    }
}

#[test]
fn grim_reaper_residual_is_small() {
    let grid = interval_grid(400);
    let angle = grim_angle(&grid);
    let u = ghost_fill(&grid, &Field::from_fn(&grid, |x, _| grim_reaper(x)), &angle).unwrap();
    let f = mcf_operator(&grid, &u, &angle).unwrap();
    let worst = f.nodes().iter().map(|v| (v - 0.5).abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-3, "max residual {worst}");
}

fn interior_residual(n: usize) -> f64 {
    let grid = interval_grid(n);
    let angle = grim_angle(&grid);
    let u = ghost_fill(&grid, &Field::from_fn(&grid, |x, _| grim_reaper(x)), &angle).unwrap();
    let f = mcf_operator(&grid, &u, &angle).unwrap();
    f.nodes()[1..n].iter().map(|v| (v - 0.5).abs()).fold(0.0, f64::max)
}

#[test]
fn grim_reaper_residual_is_second_order_in_the_interior() {
    let coarse = interior_residual(100);
    let fine = interior_residual(200);
    assert!(coarse / fine >= 3.5, "ratio {}", coarse / fine);
}

#[test]
fn polar_paraboloid_matches_closed_form() {
    // u = r^2/2: W div(grad u/W) = 2 - r^2/(1 + r^2)
    let exact = |r: f64| 2.0 - r * r / (1.0 + r * r);
    let errors: Vec<f64> = [16usize, 32]
        .iter()
        .map(|&n| {
            let grid = polar_grid(CurvatureModel::Flat, 1.0, n, 2 * n);
            let phi = -1.0 / 2f64.sqrt();
            let angle = AngleData::new(&grid, &PhiSpec::Constant(phi)).unwrap();
            let u = ghost_fill(&grid, &Field::from_fn(&grid, |r, _| 0.5 * r * r), &angle).unwrap();
            let f = mcf_operator(&grid, &u, &angle).unwrap();
            // ten fixed interior sample nodes spread over the disk
            (0..10)
                .map(|s| {
                    let i = 1 + (s * 7) % (n - 2);
                    let j = (s * 5) % (2 * n);
                    (f.at(i, j) - exact(grid.coords()[i])).abs()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    assert!(errors[1] < 1e-2, "fine error {}", errors[1]);
    assert!(errors[0] / errors[1] > 3.0, "ratio {}", errors[0] / errors[1]);
}

#[test]
fn ghost_fill_homogeneous_neumann() {
    let grid = interval_grid(16);
    let angle = AngleData::zero(&grid);
    let u = ghost_fill(&grid, &Field::from_fn(&grid, |x, _| x * x * x), &angle).unwrap();
    let raw = u.raw();
    let h = grid.h();
    assert!(((raw[2] - raw[0]) / (2.0 * h)).abs() < 1e-15);
    let n = grid.n() + 1;
    assert!(((raw[n + 1] - raw[n - 1]) / (2.0 * h)).abs() < 1e-15);
}

#[test]
fn ghost_fill_solves_the_angle_relation_in_one_dimension() {
    let grid = interval_grid(16);
    let angle = grim_angle(&grid);
    let u = ghost_fill(&grid, &Field::zeros(&grid), &angle).unwrap();
    let raw = u.raw();
    let p = (raw[2] - raw[0]) / (2.0 * grid.h());
    assert!((p - (-0.5f64).tan()).abs() < 1e-14);
    assert!((p + 0.546_302).abs() < 1e-6);
}

#[test]
fn ghost_fill_with_tangential_gradient() {
    let grid = polar_grid(CurvatureModel::Flat, 1.0, 8, 16);
    let angle = AngleData::new(&grid, &PhiSpec::Constant(0.5)).unwrap();
    let n = grid.n();
    let nt = grid.n_theta();
    let s = 3f64.sqrt() * grid.h_theta() * 1.0;
    let mut nodes = vec![0.0; grid.num_nodes()];
    nodes[n * nt + 1] = s;
    nodes[n * nt + nt - 1] = -s;
    let u = ghost_fill(&grid, &Field::from_nodes(&grid, &nodes).unwrap(), &angle).unwrap();
    let inner = u.raw()[grid.full(n as isize - 1, 0)];
    let ghost = u.raw()[grid.full(n as isize + 1, 0)];
    let p = (inner - ghost) / (2.0 * grid.h());
    assert!((p - 0.5 * (4.0f64 / 0.75).sqrt()).abs() < 1e-13);
    assert!((p - 1.154_701).abs() < 1e-6);
}

#[test]
fn unclosed_or_non_finite_fields_are_rejected() {
    let grid = interval_grid(16);
    let angle = AngleData::zero(&grid);
    assert!(matches!(
        mcf_operator(&grid, &Field::zeros(&grid), &angle),
        Err(McfError::GhostsNotClosed)
    ));
    let mut bad = Field::zeros(&grid);
    bad.nodes_mut()[3] = f64::NAN;
    assert!(matches!(ghost_fill(&grid, &bad, &angle), Err(McfError::NonFinite)));
    let other = interval_grid(20);
    assert!(ghost_fill(&other, &Field::zeros(&grid), &angle).is_err());
}

#[test]
fn domain_quadrature_of_constants() {
    let disk = Grid::new(&Geometry::radial_ball(2, CurvatureModel::Flat, 1.0).unwrap(), 512, 1).unwrap();
    assert!((integrate_domain(&disk, &Field::constant(&disk, 1.0)) - PI).abs() < 1e-6);
    let hyp = Grid::new(&Geometry::radial_ball(2, CurvatureModel::Hyperbolic(1.0), 0.3).unwrap(), 64, 1).unwrap();
    let area = 2.0 * PI * (0.3f64.cosh() - 1.0);
    assert!((integrate_domain(&hyp, &Field::constant(&hyp, 1.0)) - area).abs() < 1e-13);
    assert!((area - 0.284_870).abs() < 1e-6);
    let line = interval_grid(200);
    assert!((integrate_domain(&line, &Field::constant(&line, 1.0)) - 2.0).abs() < 1e-13);
    let polar = polar_grid(CurvatureModel::Hyperbolic(1.0), 0.3, 16, 16);
    assert!((integrate_domain(&polar, &Field::constant(&polar, 1.0)) - area).abs() < 1e-13);
    let ball3 = Grid::new(&Geometry::radial_ball(3, CurvatureModel::Flat, 1.0).unwrap(), 40, 1).unwrap();
    assert!((ball3.domain_measure() - 4.0 * PI / 3.0).abs() < 1e-12);
}

#[test]
fn boundary_quadrature() {
    let line = interval_grid(32);
    assert_eq!(integrate_boundary(&line, &AngleData::zero(&line)), 0.0);
    let v = integrate_boundary(&line, &grim_angle(&line));
    assert!((v + 2.0 * 0.5f64.sin()).abs() < 1e-15);
    assert!((v + 0.958_851).abs() < 1e-6);
    let disk = polar_grid(CurvatureModel::Flat, 1.0, 16, 32);
    let c = 0.13;
    let angle = AngleData::new(&disk, &PhiSpec::Constant(c)).unwrap();
    assert!((integrate_boundary(&disk, &angle) - 2.0 * PI * c).abs() < 1e-13);
    let ball = Grid::new(&Geometry::radial_ball(2, CurvatureModel::Flat, 1.0).unwrap(), 16, 1).unwrap();
    let angle = AngleData::new(&ball, &PhiSpec::Constant(c)).unwrap();
    assert!((integrate_boundary(&ball, &angle) - 2.0 * PI * c).abs() < 1e-13);
}

#[test]
fn even_data_give_even_output() {
    let grid = interval_grid(40);
    let angle = AngleData::new(&grid, &PhiSpec::Constant(-0.3)).unwrap();
    let u = ghost_fill(&grid, &Field::from_fn(&grid, |x, _| (1.3 * x).cosh() + x * x * x * x), &angle).unwrap();
    let f = mcf_operator(&grid, &u, &angle).unwrap();
    let v = f.nodes();
    for i in 0..=40 {
        assert!((v[i] - v[40 - i]).abs() <= 1e-12 * v[i].abs().max(1.0));
    }
}

#[test]
fn lagged_system_reproduces_the_operator() {
    for grid in catalog_grids() {
        let angle = AngleData::from_boundary(
            &grid,
            (0..grid.num_boundary_nodes()).map(|k| 0.1 * (k as f64 + 1.0).sin()).collect(),
        )
        .unwrap();
        let u = Field::from_fn(&grid, |c, th| (2.0 * c).sin() + 0.3 * th.cos() * c);
        let u = ghost_fill(&grid, &u, &angle).unwrap();
        let coef = kernel::coefficients(&grid, u.raw());
        let (l, b) = lagged_system(&grid, &coef, angle.boundary());
        let dense = l.to_dense();
        let lu = &dense * nalgebra::DVector::from_column_slice(u.nodes());
        let f = mcf_operator(&grid, &u, &angle).unwrap();
        for k in 0..grid.num_nodes() {
            let got = lu[k] + b[k];
            assert!((got - f.nodes()[k]).abs() < 1e-9 * f.nodes()[k].abs().max(1.0));
        }
    }
}

#[test]
fn jacobian_matches_finite_differences() {
    for grid in catalog_grids() {
        let angle = AngleData::from_boundary(
            &grid,
            (0..grid.num_boundary_nodes()).map(|k| 0.2 * (k as f64 * 0.7).cos()).collect(),
        )
        .unwrap();
        let u = Field::from_fn(&grid, |c, th| 0.8 * c * c + 0.2 * (th + c).sin());
        let u = ghost_fill(&grid, &u, &angle).unwrap();
        let jac = operator_jacobian(&grid, u.raw(), angle.boundary()).to_dense();
        let eval = |nodes: &[f64]| -> Vec<f64> {
            let f = ghost_fill(&grid, &Field::from_nodes(&grid, nodes).unwrap(), &angle).unwrap();
            mcf_operator(&grid, &f, &angle).unwrap().nodes().to_vec()
        };
        let base = u.nodes().to_vec();
        let step = 1e-6;
        for c in (0..grid.num_nodes()).step_by(7) {
            let mut plus = base.clone();
            let mut minus = base.clone();
            plus[c] += step;
            minus[c] -= step;
            let fp = eval(&plus);
            let fm = eval(&minus);
            for r in 0..grid.num_nodes() {
                let fd = (fp[r] - fm[r]) / (2.0 * step);
                let scale = fd.abs().max(1.0);
                assert!(
                    (jac[(r, c)] - fd).abs() < 1e-5 * scale,
                    "{:?} J[{r},{c}] = {} vs {fd}",
                    grid.kind(),
                    jac[(r, c)]
                );
            }
        }
    }
}

fn random_field(grid: &Grid, seeds: &[f64]) -> Field {
    Field::from_fn(grid, |c, th| {
        seeds[0] * (seeds[1] * c).sin() + seeds[2] * (th + seeds[3]).cos() * c + seeds[4] * c * c
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn divergence_identity_telescopes(
        seeds in prop::array::uniform5(-1.5f64..1.5),
        phis in prop::collection::vec(-0.6f64..0.6, 16),
    ) {
        for grid in catalog_grids() {
            let nb = grid.num_boundary_nodes();
            let boundary: Vec<f64> = (0..nb).map(|k| phis[k % phis.len()]).collect();
            let angle = AngleData::from_boundary(&grid, boundary).unwrap();
            let u = ghost_fill(&grid, &random_field(&grid, &seeds), &angle).unwrap();
            let defect = divergence_defect(&grid, &u, &angle).unwrap();
            prop_assert!(defect < 1e-12, "{:?}: {defect}", grid.kind());
        }
    }

    #[test]
    fn gradient_factor_at_least_one(seeds in prop::array::uniform5(-3.0f64..3.0)) {
        for grid in catalog_grids() {
            let angle = AngleData::zero(&grid);
            let u = ghost_fill(&grid, &random_field(&grid, &seeds), &angle).unwrap();
            let coef = kernel::coefficients(&grid, u.raw());
            prop_assert!(coef.node.iter().chain(&coef.rface).chain(&coef.tface).all(|&w| w >= 1.0));
        }
    }

    #[test]
    fn ghost_closure_is_exact_and_idempotent(
        seeds in prop::array::uniform5(-2.0f64..2.0),
        phi in -0.9f64..0.9,
    ) {
        let grid = polar_grid(CurvatureModel::Hyperbolic(0.8), 0.6, 10, 16);
        let spec = PhiSpec::Fourier(vec![0.5 * phi, 0.3 * phi, -0.2 * phi]);
        let angle = AngleData::new(&grid, &spec).unwrap();
        let u = ghost_fill(&grid, &random_field(&grid, &seeds), &angle).unwrap();
        let again = ghost_fill(&grid, &u, &angle).unwrap();
        prop_assert_eq!(u.raw(), again.raw());
        let n = grid.n() as isize;
        let nt = grid.n_theta();
        for j in 0..nt {
            let raw = u.raw();
            let p = (raw[grid.full(n - 1, j)] - raw[grid.full(n + 1, j)]) / (2.0 * grid.h());
            let jp = (j + 1) % nt;
            let jm = (j + nt - 1) % nt;
            let t = (raw[grid.full(n, jp)] - raw[grid.full(n, jm)]) / (2.0 * grid.h_theta() * grid.ang()[grid.n()]);
            let got = p / (1.0 + p * p + t * t).sqrt();
            prop_assert!((got - angle.boundary()[j]).abs() < 1e-14);
        }
    }
}
