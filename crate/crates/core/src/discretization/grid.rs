use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{McfError, Result};
use crate::geometry::{Geometry, GeometryKind};

pub const MIN_RADIAL_INTERVALS: usize = 8;
pub const MIN_ANGULAR_NODES: usize = 8;

/// Structured grid over a catalog geometry.
///
/// Radial layouts are staggered: node `i` sits at `r_i = (i + 1/2) h` and the
/// last node lies on `r = R`, so there is no node at the pole. The interval
/// layout uses `x_i = a + i h`. Each node owns a control volume bounded by
/// the midpoints to its neighbours; boundary nodes own half cells.
#[derive(Debug, Clone)]
pub struct Grid {
    geom: Geometry,
    n: usize,
    n_theta: usize,
    h: f64,
    h_theta: f64,
    coords: Vec<f64>,
    volume: Vec<f64>,
    width: Vec<f64>,
    face: Vec<f64>,
    inner_face: f64,
    outer_face: f64,
    ang: Vec<f64>,
    ang_face: Vec<f64>,
    coloring: OnceLock<Coloring>,
}

/// Column groups whose stencils never share a row, for Jacobian extraction.
#[derive(Debug, Clone)]
pub(crate) struct Coloring {
    pub groups: Vec<Vec<usize>>,
}

impl Grid {
    /// `n` is the number of radial (or x) intervals; nodes are `0..=n`.
    /// `n_theta` is ignored except on the polar disk.
    pub fn new(geom: &Geometry, n: usize, n_theta: usize) -> Result<Self> {
        if n < MIN_RADIAL_INTERVALS {
            return Err(McfError::InvalidGrid(format!(
                "need at least {MIN_RADIAL_INTERVALS} intervals, got {n}"
            )));
        }
        let kind = geom.kind();
        let n_theta = if kind == GeometryKind::PolarDisk {
            if n_theta < MIN_ANGULAR_NODES || !n_theta.is_multiple_of(2) {
                return Err(McfError::InvalidGrid(format!(
                    "polar grids need an even N_theta >= {MIN_ANGULAR_NODES}, got {n_theta}"
                )));
            }
            n_theta
        } else {
            1
        };
        let (lo, hi) = geom.extent();
        let (h, coords): (f64, Vec<f64>) = match kind {
            GeometryKind::Interval1D => {
                let h = (hi - lo) / n as f64;
                let mut c: Vec<f64> = (0..=n).map(|i| lo + i as f64 * h).collect();
                c[n] = hi;
                (h, c)
            }
            _ => {
                let h = hi / (n as f64 + 0.5);
                let mut c: Vec<f64> = (0..=n).map(|i| (i as f64 + 0.5) * h).collect();
                c[n] = hi;
                (h, c)
            }
        };
        let cell = |i: usize| -> (f64, f64) {
            let left = if i == 0 { lo } else { 0.5 * (coords[i - 1] + coords[i]) };
            let right = if i == n { hi } else { 0.5 * (coords[i] + coords[i + 1]) };
            (left, right)
        };
        let volume: Vec<f64> = (0..=n)
            .map(|i| {
                let (l, r) = cell(i);
                geom.sigma_integral(l, r)
            })
            .collect();
        let width: Vec<f64> = (0..=n)
            .map(|i| {
                let (l, r) = cell(i);
                r - l
            })
            .collect();
        let face_coord: Vec<f64> = (0..n).map(|i| cell(i).1).collect();
        let face: Vec<f64> = face_coord.iter().map(|&r| geom.sigma(r)).collect();
        let (inner_face, outer_face) = match kind {
            GeometryKind::Interval1D => (1.0, 1.0),
            _ => (0.0, geom.sigma(hi)),
        };
        let (ang, ang_face) = if kind == GeometryKind::PolarDisk {
            (
                coords.iter().map(|&r| geom.angular_scale(r)).collect(),
                face_coord.iter().map(|&r| geom.angular_scale(r)).collect(),
            )
        } else {
            (Vec::new(), Vec::new())
        };
        Ok(Grid {
            geom: geom.clone(),
            n,
            n_theta,
            h,
            h_theta: 2.0 * PI / n_theta as f64,
            coords,
            volume,
            width,
            face,
            inner_face,
            outer_face,
            ang,
            ang_face,
            coloring: OnceLock::new(),
        })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geom
    }

    pub fn kind(&self) -> GeometryKind {
        self.geom.kind()
    }

    /// Number of radial (or x) intervals.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn is_polar(&self) -> bool {
        self.geom.kind() == GeometryKind::PolarDisk
    }

    /// Radial (or x) spacing.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn h_theta(&self) -> f64 {
        self.h_theta
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn theta(&self, j: usize) -> f64 {
        j as f64 * self.h_theta
    }

    /// Number of nodes, ghosts excluded.
    pub fn num_nodes(&self) -> usize {
        (self.n + 1) * self.n_theta
    }

    /// Length of a field vector including both ghost rows.
    pub(crate) fn full_len(&self) -> usize {
        (self.n + 3) * self.n_theta
    }

    /// Index into the full layout (rows `-1..=n+1`).
    #[inline]
    pub(crate) fn full(&self, i: isize, j: usize) -> usize {
        ((i + 1) as usize) * self.n_theta + j
    }

    #[inline]
    pub(crate) fn wrap(&self, j: isize) -> usize {
        j.rem_euclid(self.n_theta as isize) as usize
    }

    pub(crate) fn volume(&self) -> &[f64] {
        &self.volume
    }

    pub(crate) fn width(&self) -> &[f64] {
        &self.width
    }

    pub(crate) fn face(&self) -> &[f64] {
        &self.face
    }


    pub(crate) fn inner_face(&self) -> f64 {
        self.inner_face
    }

    pub(crate) fn outer_face(&self) -> f64 {
        self.outer_face
    }

    pub(crate) fn ang(&self) -> &[f64] {
        &self.ang
    }

    pub(crate) fn ang_face(&self) -> &[f64] {
        &self.ang_face
    }

    /// Quadrature weight of node `(i, j)`: the measure of its control volume.
    pub fn node_weight(&self, i: usize) -> f64 {
        match self.kind() {
            GeometryKind::Interval1D => self.volume[i],
            GeometryKind::RadialBall => self.geom.sphere_area() * self.volume[i],
            GeometryKind::PolarDisk => self.volume[i] * self.h_theta,
        }
    }

    /// Measure carried by each boundary node.
    pub fn boundary_weight(&self) -> f64 {
        match self.kind() {
            GeometryKind::Interval1D => 1.0,
            GeometryKind::RadialBall => self.geom.sphere_area() * self.outer_face,
            GeometryKind::PolarDisk => self.outer_face * self.h_theta,
        }
    }

    /// Total measure of the domain as seen by the quadrature.
    pub fn domain_measure(&self) -> f64 {
        (0..=self.n).map(|i| self.node_weight(i)).sum::<f64>() * self.n_theta as f64
    }

    /// Number of boundary nodes.
    pub fn num_boundary_nodes(&self) -> usize {
        match self.kind() {
            GeometryKind::Interval1D => 2,
            GeometryKind::RadialBall => 1,
            GeometryKind::PolarDisk => self.n_theta,
        }
    }

    /// Node (flat index) of each boundary datum, in `AngleData` order.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        match self.kind() {
            GeometryKind::Interval1D => vec![0, self.n],
            _ => (0..self.n_theta).map(|j| self.n * self.n_theta + j).collect(),
        }
    }

    /// Rows of the discrete operator that may depend on the value at node
    /// `col` (a superset of the true stencil).
    pub(crate) fn influence(&self, col: usize, out: &mut Vec<usize>) {
        out.clear();
        let nt = self.n_theta;
        let i = col / nt;
        let j = col % nt;
        let ilo = i.saturating_sub(1);
        let ihi = (i + 1).min(self.n);
        if nt == 1 {
            out.extend(ilo..=ihi);
            return;
        }
        for ii in ilo..=ihi {
            for dj in -2isize..=2 {
                out.push(ii * nt + self.wrap(j as isize + dj));
            }
        }
        if i == 0 {
            let anti = (j + nt / 2) as isize;
            for dj in -1isize..=1 {
                let row = self.wrap(anti + dj);
                if !out.contains(&row) {
                    out.push(row);
                }
            }
        }
    }

    pub(crate) fn coloring(&self) -> &Coloring {
        self.coloring.get_or_init(|| {
            let cols = self.num_nodes();
            let mut color_of = vec![usize::MAX; cols];
            let mut row_colors: Vec<Vec<usize>> = vec![Vec::new(); cols];
            let mut groups: Vec<Vec<usize>> = Vec::new();
            let mut rows = Vec::new();
            let mut forbidden = Vec::new();
            for c in 0..cols {
                self.influence(c, &mut rows);
                forbidden.clear();
                for &r in &rows {
                    forbidden.extend_from_slice(&row_colors[r]);
                }
                let color = (0..).find(|k| !forbidden.contains(k)).unwrap();
                color_of[c] = color;
                if color == groups.len() {
                    groups.push(Vec::new());
                }
                groups[color].push(c);
                for &r in &rows {
                    row_colors[r].push(color);
                }
            }
            Coloring { groups }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CurvatureModel;

    #[test]
    fn rejects_coarse_grids() {
        let g = Geometry::interval(-1.0, 1.0).unwrap();
        assert!(Grid::new(&g, 4, 1).is_err());
        let d = Geometry::polar_disk(CurvatureModel::Flat, 1.0).unwrap();
        assert!(Grid::new(&d, 16, 6).is_err());
        assert!(Grid::new(&d, 16, 9).is_err());
        assert!(Grid::new(&d, 16, 16).is_ok());
    }

    #[test]
    fn boundary_nodes_sit_on_the_boundary() {
        let g = Geometry::radial_ball(3, CurvatureModel::Hyperbolic(1.0), 0.7).unwrap();
        let grid = Grid::new(&g, 20, 1).unwrap();
        assert_eq!(*grid.coords().last().unwrap(), 0.7);
        assert!((grid.coords()[0] - 0.5 * grid.h()).abs() < 1e-15);
        let i = Geometry::interval(-1.0, 2.0).unwrap();
        let grid = Grid::new(&i, 30, 1).unwrap();
        assert_eq!(grid.coords()[0], -1.0);
        assert_eq!(grid.coords()[30], 2.0);
    }

    #[test]
    fn coloring_separates_stencils() {
        let d = Geometry::polar_disk(CurvatureModel::Flat, 1.0).unwrap();
        let grid = Grid::new(&d, 10, 16).unwrap();
        let mut rows = Vec::new();
        for group in &grid.coloring().groups {
            let mut seen = std::collections::HashSet::new();
            for &c in group {
                grid.influence(c, &mut rows);
                for &r in &rows {
                    assert!(seen.insert(r), "row {r} hit twice in one colour");
                }
            }
        }
    }
}
