//! Problem fixtures shared by the benchmarks.

use mcf_core::diagnostics::{catalog, grim_reaper_case, random_field, Case};
use mcf_core::{AngleData, Field, Grid};

fn setup(case: &Case) -> (Grid, AngleData) {
    case.setup().expect("catalog cases are valid")
}

/// The interval oracle case at `n` intervals.
pub fn grim_reaper(n: usize) -> (Grid, AngleData) {
    setup(&grim_reaper_case(n))
}

/// The hyperbolic polar disk with Fourier contact angle.
pub fn hyperbolic_polar(n_r: usize, n_theta: usize) -> (Grid, AngleData) {
    let mut case = catalog()
        .into_iter()
        .find(|c| c.name == "hyperbolic_polar")
        .expect("catalog has a polar case");
    case.n_r = n_r;
    case.n_theta = n_theta;
    setup(&case)
}

/// Smooth seeded data with closed ghosts.
pub fn smooth_state(grid: &Grid, angle: &AngleData) -> Field {
    mcf_core::discretization::ghost_fill(grid, &random_field(grid, 1), angle).expect("finite data")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        let (g, a) = grim_reaper(32);
        assert!(smooth_state(&g, &a).ghosts_closed());
        let (p, _) = hyperbolic_polar(16, 8);
        assert!(p.is_polar());
        assert_eq!(p.n_theta(), 8);
    }
}
