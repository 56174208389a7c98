//! Generic flux-form kernel shared by the public operator, the Newton
//! Jacobian (through dual numbers) and the lagged linearisation.

use super::scalar::Scalar;
use super::Grid;
use crate::geometry::GeometryKind;

/// Closes both ghost rows of a full-layout vector.
///
/// Boundary ghosts make the centred normal derivative `p` (inward) solve
/// `p = phi sqrt(1 + p^2 + |grad_T u|^2)` in closed form. The inner row
/// is the pole closure on radial grids (mirror / antipodal node).
pub(crate) fn fill_ghosts<T: Scalar>(grid: &Grid, phi: &[f64], u: &mut [T]) {
    let nt = grid.n_theta();
    let n = grid.n() as isize;
    let h = grid.h();
    match grid.kind() {
        GeometryKind::Interval1D => {
            let p = phi[0] / (1.0 - phi[0] * phi[0]).sqrt();
            let v = u[grid.full(1, 0)] - T::cst(2.0 * h * p);
            u[grid.full(-1, 0)] = v;
        }
        GeometryKind::RadialBall => {
            u[grid.full(-1, 0)] = u[grid.full(0, 0)];
        }
        GeometryKind::PolarDisk => {
            for j in 0..nt {
                u[grid.full(-1, j)] = u[grid.full(0, (j + nt / 2) % nt)];
            }
        }
    }
    let outer = match grid.kind() {
        GeometryKind::Interval1D => &phi[1..2],
        _ => phi,
    };
    for (j, &ph) in outer.iter().enumerate() {
        let p = boundary_slope(grid, u, j, ph);
        let v = u[grid.full(n - 1, j)] - p.scale(2.0 * h);
        u[grid.full(n + 1, j)] = v;
    }
}

/// Inward normal derivative at outer boundary node `j` implied by `phi`.
pub(crate) fn boundary_slope<T: Scalar>(grid: &Grid, u: &[T], j: usize, phi: f64) -> T {
    let factor = 1.0 / (1.0 - phi * phi);
    if grid.is_polar() {
        let n = grid.n() as isize;
        let jp = grid.wrap(j as isize + 1);
        let jm = grid.wrap(j as isize - 1);
        let ang = grid.ang()[grid.n()];
        let t = (u[grid.full(n, jp)] - u[grid.full(n, jm)]).scale(1.0 / (2.0 * grid.h_theta() * ang));
        (T::cst(1.0) + t * t).scale(factor).sqrt().scale(phi)
    } else {
        T::cst(phi * factor.sqrt())
    }
}

/// Gradient factors `W` at nodes and at the faces used by the fluxes.
#[derive(Debug, Clone)]
pub(crate) struct Coefficients<T> {
    /// `W` at every node.
    pub node: Vec<T>,
    /// `W` at radial faces `(i + 1/2, j)`, `i < n`.
    pub rface: Vec<T>,
    /// `W` at angular faces `(i, j + 1/2)` (polar grids only).
    pub tface: Vec<T>,
}

#[inline]
fn radial_slope<T: Scalar>(grid: &Grid, u: &[T], i: isize, j: usize) -> T {
    (u[grid.full(i + 1, j)] - u[grid.full(i - 1, j)]).scale(0.5 / grid.h())
}

#[inline]
fn angular_slope<T: Scalar>(grid: &Grid, u: &[T], i: isize, j: usize) -> T {
    let jp = grid.wrap(j as isize + 1);
    let jm = grid.wrap(j as isize - 1);
    (u[grid.full(i, jp)] - u[grid.full(i, jm)]).scale(0.5 / (grid.h_theta() * grid.ang()[i as usize]))
}

/// Requires closed ghosts.
pub(crate) fn coefficients<T: Scalar>(grid: &Grid, u: &[T]) -> Coefficients<T> {
    let nt = grid.n_theta();
    let n = grid.n();
    let polar = grid.is_polar();
    let one = T::cst(1.0);
    let mut node = Vec::with_capacity(grid.num_nodes());
    for i in 0..=n as isize {
        for j in 0..nt {
            let rho = radial_slope(grid, u, i, j);
            let mut w2 = one + rho * rho;
            if polar {
                let tau = angular_slope(grid, u, i, j);
                w2 = w2 + tau * tau;
            }
            node.push(w2.sqrt());
        }
    }
    let inv_h = 1.0 / grid.h();
    let mut rface = Vec::with_capacity(n * nt);
    for i in 0..n as isize {
        for j in 0..nt {
            let g = (u[grid.full(i + 1, j)] - u[grid.full(i, j)]).scale(inv_h);
            let mut w2 = one + g * g;
            if polar {
                let jp = grid.wrap(j as isize + 1);
                let jm = grid.wrap(j as isize - 1);
                let scale = 0.25 / (grid.h_theta() * grid.ang_face()[i as usize]);
                let tau = (u[grid.full(i, jp)] - u[grid.full(i, jm)] + u[grid.full(i + 1, jp)]
                    - u[grid.full(i + 1, jm)])
                .scale(scale);
                w2 = w2 + tau * tau;
            }
            rface.push(w2.sqrt());
        }
    }
    let mut tface = Vec::new();
    if polar {
        tface.reserve(grid.num_nodes());
        for i in 0..=n as isize {
            let scale = 1.0 / (grid.h_theta() * grid.ang()[i as usize]);
            for j in 0..nt {
                let jp = grid.wrap(j as isize + 1);
                let g = (u[grid.full(i, jp)] - u[grid.full(i, j)]).scale(scale);
                let rho = (radial_slope(grid, u, i, j) + radial_slope(grid, u, i, jp)).scale(0.5);
                tface.push((one + g * g + rho * rho).sqrt());
            }
        }
    }
    Coefficients { node, rface, tface }
}

/// Discrete `div(grad u / W)` over each control volume, with the boundary
/// face fluxes set to the contact-angle datum itself. Ghost values are
/// neither read nor required here.
pub(crate) fn divergence<T: Scalar>(grid: &Grid, coef: &Coefficients<T>, u: &[T], phi: &[f64]) -> Vec<T> {
    let nt = grid.n_theta();
    let n = grid.n();
    let inv_h = 1.0 / grid.h();
    let polar = grid.is_polar();
    let (phi_inner, phi_outer): (f64, &[f64]) = match grid.kind() {
        GeometryKind::Interval1D => (phi[0], &phi[1..2]),
        _ => (0.0, phi),
    };
    let mut out = Vec::with_capacity(grid.num_nodes());
    for i in 0..=n {
        let ii = i as isize;
        let vol = grid.volume()[i];
        for j in 0..nt {
            let k = i * nt + j;
            let outer = if i < n {
                let q = (u[grid.full(ii + 1, j)] - u[grid.full(ii, j)]).scale(inv_h) / coef.rface[k];
                q.scale(grid.face()[i])
            } else {
                T::cst(-grid.outer_face() * phi_outer[j])
            };
            let inner = if i > 0 {
                let q = (u[grid.full(ii, j)] - u[grid.full(ii - 1, j)]).scale(inv_h) / coef.rface[k - nt];
                q.scale(grid.face()[i - 1])
            } else {
                T::cst(grid.inner_face() * phi_inner)
            };
            let mut div = (outer - inner).scale(1.0 / vol);
            if polar {
                let jp = grid.wrap(j as isize + 1);
                let jm = grid.wrap(j as isize - 1);
                let g = 1.0 / (grid.h_theta() * grid.ang()[i]);
                let qp = (u[grid.full(ii, jp)] - u[grid.full(ii, j)]).scale(g) / coef.tface[k];
                let qm = (u[grid.full(ii, j)] - u[grid.full(ii, jm)]).scale(g) / coef.tface[i * nt + jm];
                div = div + (qp - qm).scale(grid.width()[i] / (vol * grid.h_theta()));
            }
            out.push(div);
        }
    }
    out
}

/// `W div(grad u / W)` at every node.
pub(crate) fn operator<T: Scalar>(grid: &Grid, coef: &Coefficients<T>, u: &[T], phi: &[f64]) -> Vec<T> {
    let mut div = divergence(grid, coef, u, phi);
    for (d, w) in div.iter_mut().zip(&coef.node) {
        *d = *d * *w;
    }
    div
}

/// Closes ghosts on a copy of `u` and evaluates the operator.
pub(crate) fn evaluate<T: Scalar>(grid: &Grid, u: &mut [T], phi: &[f64]) -> (Vec<T>, Coefficients<T>) {
    fill_ghosts(grid, phi, u);
    let coef = coefficients(grid, u);
    (operator(grid, &coef, u, phi), coef)
}
