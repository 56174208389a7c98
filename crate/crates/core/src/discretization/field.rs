use std::io::Write;

use super::Grid;
use crate::error::{McfError, Result};

/// Scalar field on a grid, stored with one ghost row on each side of the
/// radial (or x) direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    values: Vec<f64>,
    n: usize,
    n_theta: usize,
    /// Time the field belongs to (0 for initial data and stationary fields).
    pub time: f64,
    ghosts_closed: bool,
}

impl Field {
    pub fn zeros(grid: &Grid) -> Self {
        Field {
            values: vec![0.0; grid.full_len()],
            n: grid.n(),
            n_theta: grid.n_theta(),
            time: 0.0,
            ghosts_closed: false,
        }
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        let mut f = Field::zeros(grid);
        f.values.iter_mut().for_each(|v| *v = c);
        f
    }

    /// Samples `f(coord, theta)` at the nodes (`theta = 0` off the polar disk).
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut field = Field::zeros(grid);
        for i in 0..=grid.n() {
            for j in 0..grid.n_theta() {
                let idx = grid.full(i as isize, j);
                field.values[idx] = f(grid.coords()[i], grid.theta(j));
            }
        }
        field
    }

    /// Builds a field from node values in `(i, j)` row-major order.
    pub fn from_nodes(grid: &Grid, nodes: &[f64]) -> Result<Self> {
        if nodes.len() != grid.num_nodes() {
            return Err(McfError::GridMismatch(format!(
                "expected {} node values, got {}",
                grid.num_nodes(),
                nodes.len()
            )));
        }
        let mut field = Field::zeros(grid);
        let offset = grid.n_theta();
        field.values[offset..offset + nodes.len()].copy_from_slice(nodes);
        Ok(field)
    }

    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        if self.n != grid.n() || self.n_theta != grid.n_theta() {
            return Err(McfError::GridMismatch(format!(
                "field is {}x{}, grid is {}x{}",
                self.n + 1,
                self.n_theta,
                grid.n() + 1,
                grid.n_theta()
            )));
        }
        Ok(())
    }

    pub fn ghosts_closed(&self) -> bool {
        self.ghosts_closed
    }

    /// All stored values, ghosts included.
    pub fn raw(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn raw_mut(&mut self) -> &mut [f64] {
        self.ghosts_closed = false;
        &mut self.values
    }

    pub(crate) fn mark_closed(&mut self) {
        self.ghosts_closed = true;
    }

    /// Node values (ghosts excluded) in `(i, j)` row-major order.
    pub fn nodes(&self) -> &[f64] {
        let nt = self.n_theta;
        &self.values[nt..nt + (self.n + 1) * nt]
    }

    /// Mutable node values; invalidates the ghost layer.
    pub fn nodes_mut(&mut self) -> &mut [f64] {
        self.ghosts_closed = false;
        let nt = self.n_theta;
        &mut self.values[nt..nt + (self.n + 1) * nt]
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[(i + 1) * self.n_theta + j]
    }

    pub fn max(&self) -> f64 {
        self.nodes().iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.nodes().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `max u - min u` over the nodes.
    pub fn oscillation(&self) -> f64 {
        self.max() - self.min()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Adds a constant to every value (ghosts included, so a closed ghost
    /// layer stays closed).
    pub fn shift(&mut self, c: f64) {
        self.values.iter_mut().for_each(|v| *v += c);
    }

    /// Nodewise difference `self - other`; ghosts are not carried over.
    pub fn difference(&self, other: &Field) -> Field {
        let mut out = self.clone();
        out.ghosts_closed = false;
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            *a -= b;
        }
        out
    }

    /// Writes `coord[,theta],value` rows for every node.
    pub fn write_csv<W: Write>(&self, grid: &Grid, mut out: W) -> std::io::Result<()> {
        if grid.is_polar() {
            writeln!(out, "r,theta,value")?;
        } else if grid.kind() == crate::geometry::GeometryKind::Interval1D {
            writeln!(out, "x,value")?;
        } else {
            writeln!(out, "r,value")?;
        }
        for i in 0..=self.n {
            for j in 0..self.n_theta {
                let c = grid.coords()[i];
                let v = self.at(i, j);
                if grid.is_polar() {
                    writeln!(out, "{},{},{}", c, grid.theta(j), v)?;
                } else {
                    writeln!(out, "{c},{v}")?;
                }
            }
        }
        Ok(())
    }
}
