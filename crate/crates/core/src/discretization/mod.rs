//! Structured grids, the flux-form operator `W div(grad u / W)`, the
//! contact-angle ghost closure and the quadratures behind the speed formula.
//!
//! The operator is a vertex-centred finite-volume scheme: each node owns a
//! control volume, interior faces carry `sigma grad u / W` from neighbouring
//! differences, and boundary faces carry the datum `phi` directly. Summing
//! `volume * div` over all nodes therefore telescopes to `-sum phi dsigma`
//! up to rounding.

mod angle;
mod field;
mod grid;
pub(crate) mod kernel;
pub(crate) mod scalar;

pub use angle::{AngleData, PhiSpec, MAX_STEEPNESS};
pub use field::Field;
pub use grid::{Grid, MIN_ANGULAR_NODES, MIN_RADIAL_INTERVALS};

use crate::error::{McfError, Result};
use crate::linalg::BlockTridiagonal;
use kernel::Coefficients;
use scalar::Dual;

fn check_input(grid: &Grid, u: &Field) -> Result<()> {
    u.check_grid(grid)?;
    if !u.is_finite() {
        return Err(McfError::NonFinite);
    }
    Ok(())
}

fn check_closed(grid: &Grid, u: &Field) -> Result<()> {
    check_input(grid, u)?;
    if !u.ghosts_closed() {
        return Err(McfError::GhostsNotClosed);
    }
    Ok(())
}

/// Returns a copy of `u` whose ghost values satisfy the contact-angle
/// relation at every boundary node (and the pole closure on radial grids).
pub fn ghost_fill(grid: &Grid, u: &Field, angle: &AngleData) -> Result<Field> {
    check_input(grid, u)?;
    if angle.phi0() >= 1.0 {
        return Err(McfError::IllPosedAngle(angle.phi0()));
    }
    let mut out = u.clone();
    kernel::fill_ghosts(grid, angle.boundary(), out.raw_mut());
    out.mark_closed();
    Ok(out)
}

/// `W div(grad u / W)` at every node. `u` must have closed ghosts.
pub fn mcf_operator(grid: &Grid, u: &Field, angle: &AngleData) -> Result<Field> {
    check_closed(grid, u)?;
    let coef = kernel::coefficients(grid, u.raw());
    let f = kernel::operator(grid, &coef, u.raw(), angle.boundary());
    let mut out = Field::from_nodes(grid, &f)?;
    out.time = u.time;
    Ok(out)
}

/// Control-volume divergence `div(grad u / W)` at every node.
pub fn divergence(grid: &Grid, u: &Field, angle: &AngleData) -> Result<Field> {
    check_closed(grid, u)?;
    let coef = kernel::coefficients(grid, u.raw());
    Field::from_nodes(grid, &kernel::divergence(grid, &coef, u.raw(), angle.boundary()))
}

/// Nodal gradient factor `W = sqrt(1 + |grad u|^2)`.
pub fn gradient_factor(grid: &Grid, u: &Field) -> Result<Field> {
    check_closed(grid, u)?;
    Field::from_nodes(grid, &kernel::coefficients(grid, u.raw()).node)
}

/// Midpoint (control-volume) quadrature of a nodal field over the domain.
pub fn integrate_domain(grid: &Grid, f: &Field) -> f64 {
    let nt = grid.n_theta();
    f.nodes()
        .chunks(nt)
        .enumerate()
        .map(|(i, row)| grid.node_weight(i) * row.iter().sum::<f64>())
        .sum()
}

/// `int_{dOmega} phi dsigma` over the boundary nodes.
pub fn integrate_boundary(grid: &Grid, angle: &AngleData) -> f64 {
    grid.boundary_weight() * angle.boundary().iter().sum::<f64>()
}

/// Quadrature mean of a nodal field.
pub fn domain_mean(grid: &Grid, f: &Field) -> f64 {
    integrate_domain(grid, f) / grid.domain_measure()
}

/// `|sum volume * div + int phi|`: the defect of the discrete divergence
/// identity for `u`.
pub fn divergence_defect(grid: &Grid, u: &Field, angle: &AngleData) -> Result<f64> {
    let div = divergence(grid, u, angle)?;
    Ok((integrate_domain(grid, &div) + integrate_boundary(grid, angle)).abs())
}

/// Exact Jacobian of the closed operator `u -> F(ghost_fill(u))` with
/// respect to node values, extracted column group by column group with dual
/// numbers.
pub(crate) fn operator_jacobian(grid: &Grid, full: &[f64], phi: &[f64]) -> BlockTridiagonal {
    let nt = grid.n_theta();
    let mut jac = BlockTridiagonal::zeros(grid.n() + 1, nt);
    let mut rows = Vec::new();
    let mut u: Vec<Dual> = full.iter().map(|&v| Dual::new(v, 0.0)).collect();
    for group in &grid.coloring().groups {
        for (slot, &v) in u.iter_mut().zip(full) {
            *slot = Dual::new(v, 0.0);
        }
        for &c in group {
            u[c + nt].d = 1.0;
        }
        let (f, _) = kernel::evaluate(grid, &mut u, phi);
        for &c in group {
            grid.influence(c, &mut rows);
            for &r in &rows {
                let d = f[r].d;
                if d != 0.0 {
                    jac.add(r, c, d);
                }
            }
        }
    }
    jac
}

/// Linear operator with `W` frozen: returns `(L, b)` such that the frozen
/// operator applied to `v` equals `L v + b`.
pub(crate) fn lagged_system(grid: &Grid, coef: &Coefficients<f64>, phi: &[f64]) -> (BlockTridiagonal, Vec<f64>) {
    let nt = grid.n_theta();
    let n = grid.n();
    let h = grid.h();
    let mut l = BlockTridiagonal::zeros(n + 1, nt);
    let mut b = vec![0.0; grid.num_nodes()];
    let (phi_inner, phi_outer): (f64, &[f64]) = match grid.kind() {
        crate::geometry::GeometryKind::Interval1D => (phi[0], &phi[1..2]),
        _ => (0.0, phi),
    };
    for i in 0..=n {
        let vol = grid.volume()[i];
        for j in 0..nt {
            let k = i * nt + j;
            let w = coef.node[k] / vol;
            if i < n {
                let a = w * grid.face()[i] / (h * coef.rface[k]);
                l.add(k, k + nt, a);
                l.add(k, k, -a);
            } else {
                b[k] -= w * grid.outer_face() * phi_outer[j];
            }
            if i > 0 {
                let a = w * grid.face()[i - 1] / (h * coef.rface[k - nt]);
                l.add(k, k - nt, a);
                l.add(k, k, -a);
            } else {
                b[k] -= w * grid.inner_face() * phi_inner;
            }
            if grid.is_polar() {
                let jp = grid.wrap(j as isize + 1);
                let jm = grid.wrap(j as isize - 1);
                let g = 1.0 / (grid.h_theta() * grid.ang()[i]);
                let fac = w * grid.width()[i] / grid.h_theta() * g;
                let ap = fac / coef.tface[k];
                let am = fac / coef.tface[i * nt + jm];
                l.add(k, i * nt + jp, ap);
                l.add(k, k, -ap - am);
                l.add(k, i * nt + jm, am);
            }
        }
    }
    (l, b)
}

/// Largest diagonal magnitude of the frozen-`W` operator, which bounds the
/// stable explicit step.
pub(crate) fn lagged_stiffness(grid: &Grid, coef: &Coefficients<f64>) -> f64 {
    let nt = grid.n_theta();
    let n = grid.n();
    let h = grid.h();
    let mut worst = 0.0f64;
    for i in 0..=n {
        let vol = grid.volume()[i];
        for j in 0..nt {
            let k = i * nt + j;
            let w = coef.node[k] / vol;
            let mut d = 0.0;
            if i < n {
                d += w * grid.face()[i] / (h * coef.rface[k]);
            }
            if i > 0 {
                d += w * grid.face()[i - 1] / (h * coef.rface[k - nt]);
            }
            if grid.is_polar() {
                let jm = grid.wrap(j as isize - 1);
                let fac = w * grid.width()[i] / (grid.h_theta() * grid.h_theta() * grid.ang()[i]);
                d += fac / coef.tface[k] + fac / coef.tface[i * nt + jm];
            }
            worst = worst.max(d);
        }
    }
    worst
}

#[cfg(test)]
mod tests;
