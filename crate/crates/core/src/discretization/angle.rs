use std::fmt;
use std::str::FromStr;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use super::Grid;
use crate::error::{McfError, Result};
use crate::geometry::GeometryKind;

/// Steepest contact angle accepted by the solvers; the ghost closure
/// degenerates as `|phi| -> 1`.
pub const MAX_STEEPNESS: f64 = 0.95;

/// Samples used to bound `max |phi|` for Fourier data.
const FOURIER_SAMPLES: usize = 4096;

/// Boundary datum `phi` as written in configs.
#[derive(Debug, Clone, PartialEq)]
pub enum PhiSpec {
    Constant(f64),
    /// `a0 + sum_k (a_k cos k theta + b_k sin k theta)`, stored as
    /// `[a0, a1, b1, a2, b2, ...]`.
    Fourier(Vec<f64>),
}

impl PhiSpec {
    pub fn eval(&self, theta: f64) -> f64 {
        match self {
            PhiSpec::Constant(c) => *c,
            PhiSpec::Fourier(c) => {
                let mut v = c.first().copied().unwrap_or(0.0);
                for (k, pair) in c[1.min(c.len())..].chunks(2).enumerate() {
                    let m = (k + 1) as f64;
                    v += pair[0] * (m * theta).cos();
                    if let Some(b) = pair.get(1) {
                        v += b * (m * theta).sin();
                    }
                }
                v
            }
        }
    }

    /// `max |phi|` over the circle (sampled densely for Fourier data).
    pub fn sup_norm(&self) -> f64 {
        match self {
            PhiSpec::Constant(c) => c.abs(),
            PhiSpec::Fourier(_) => (0..FOURIER_SAMPLES)
                .map(|s| {
                    let theta = 2.0 * std::f64::consts::PI * s as f64 / FOURIER_SAMPLES as f64;
                    self.eval(theta).abs()
                })
                .fold(0.0, f64::max),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            PhiSpec::Constant(c) => *c == 0.0,
            PhiSpec::Fourier(c) => c.iter().all(|&v| v == 0.0),
        }
    }
}

impl FromStr for PhiSpec {
    type Err = McfError;

    fn from_str(s: &str) -> Result<Self> {
        let parse = |t: &str| -> Result<f64> {
            let v: f64 = t
                .trim()
                .parse()
                .map_err(|_| McfError::InvalidAngle(format!("not a number: `{t}`")))?;
            if !v.is_finite() {
                return Err(McfError::InvalidAngle(format!("non-finite value `{t}`")));
            }
            Ok(v)
        };
        if let Some(rest) = s.strip_prefix("const:") {
            Ok(PhiSpec::Constant(parse(rest)?))
        } else if let Some(rest) = s.strip_prefix("fourier:") {
            let coeffs = rest.split(',').map(parse).collect::<Result<Vec<_>>>()?;
            if coeffs.is_empty() {
                return Err(McfError::InvalidAngle("empty Fourier series".into()));
            }
            Ok(PhiSpec::Fourier(coeffs))
        } else {
            Err(McfError::InvalidAngle(format!(
                "expected `const:<v>` or `fourier:<a0,a1,b1,...>`, got `{s}`"
            )))
        }
    }
}

impl Serialize for PhiSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PhiSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(de::Error::custom)
    }
}

impl fmt::Display for PhiSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhiSpec::Constant(c) => write!(f, "const:{c}"),
            PhiSpec::Fourier(cs) => {
                write!(f, "fourier:")?;
                for (k, c) in cs.iter().enumerate() {
                    if k > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{c}")?;
                }
                Ok(())
            }
        }
    }
}

/// Contact-angle datum on the boundary nodes with its extension to the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleData {
    boundary: Vec<f64>,
    phi0: f64,
    extension: Vec<f64>,
}

impl AngleData {
    pub fn new(grid: &Grid, spec: &PhiSpec) -> Result<Self> {
        if matches!(spec, PhiSpec::Fourier(_)) && !grid.is_polar() {
            return Err(McfError::InvalidAngle(
                "Fourier contact angles need a polar disk; use const:<v>".into(),
            ));
        }
        let boundary = match grid.kind() {
            GeometryKind::Interval1D => vec![spec.eval(0.0); 2],
            GeometryKind::RadialBall => vec![spec.eval(0.0)],
            GeometryKind::PolarDisk => (0..grid.n_theta()).map(|j| spec.eval(grid.theta(j))).collect(),
        };
        let mut data = Self::from_boundary(grid, boundary)?;
        data.phi0 = data.phi0.max(spec.sup_norm());
        Ok(data)
    }

    /// From explicit boundary values in `Grid::boundary_nodes` order.
    pub fn from_boundary(grid: &Grid, boundary: Vec<f64>) -> Result<Self> {
        if boundary.len() != grid.num_boundary_nodes() {
            return Err(McfError::GridMismatch(format!(
                "expected {} boundary values, got {}",
                grid.num_boundary_nodes(),
                boundary.len()
            )));
        }
        let phi0 = boundary.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if !phi0.is_finite() {
            return Err(McfError::NonFinite);
        }
        if phi0 >= 1.0 {
            return Err(McfError::IllPosedAngle(phi0));
        }
        let nt = grid.n_theta();
        let n = grid.n();
        let mut extension = vec![0.0; grid.num_nodes()];
        for i in 0..=n {
            for j in 0..nt {
                extension[i * nt + j] = match grid.kind() {
                    GeometryKind::Interval1D => {
                        // constant along the normal line from the nearer endpoint
                        if 2 * i <= n {
                            boundary[0]
                        } else {
                            boundary[1]
                        }
                    }
                    GeometryKind::RadialBall => boundary[0],
                    GeometryKind::PolarDisk => boundary[j],
                };
            }
        }
        Ok(AngleData {
            boundary,
            phi0,
            extension,
        })
    }

    pub fn zero(grid: &Grid) -> Self {
        Self::from_boundary(grid, vec![0.0; grid.num_boundary_nodes()]).unwrap()
    }

    /// `phi` at the boundary nodes.
    pub fn boundary(&self) -> &[f64] {
        &self.boundary
    }

    /// `max |phi|`.
    pub fn phi0(&self) -> f64 {
        self.phi0
    }

    /// `phi` extended to every node.
    pub fn extension(&self) -> &[f64] {
        &self.extension
    }

    /// Refuses data steeper than `limit`.
    pub fn check_steepness(&self, limit: f64) -> Result<()> {
        if self.phi0 >= limit {
            return Err(McfError::AngleTooSteep {
                value: self.phi0,
                limit,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CurvatureModel, Geometry};

    #[test]
    fn parses_and_prints_specs() {
        let c: PhiSpec = "const:-0.25".parse().unwrap();
        assert_eq!(c, PhiSpec::Constant(-0.25));
        assert_eq!(c.to_string(), "const:-0.25");
        let f: PhiSpec = "fourier:0.01,0.02,-0.03".parse().unwrap();
        assert_eq!(f.to_string(), "fourier:0.01,0.02,-0.03");
        assert!((f.eval(0.0) - 0.03).abs() < 1e-15);
        assert!("cos:1".parse::<PhiSpec>().is_err());
        assert!("const:abc".parse::<PhiSpec>().is_err());
    }

    #[test]
    fn rejects_ill_posed_angles() {
        let g = Geometry::interval(-1.0, 1.0).unwrap();
        let grid = Grid::new(&g, 16, 1).unwrap();
        assert!(matches!(
            AngleData::new(&grid, &PhiSpec::Constant(1.0)),
            Err(McfError::IllPosedAngle(_))
        ));
        let steep = AngleData::new(&grid, &PhiSpec::Constant(0.97)).unwrap();
        assert!(steep.check_steepness(MAX_STEEPNESS).is_err());
        assert!(AngleData::new(&grid, &PhiSpec::Fourier(vec![0.1])).is_err());
    }

    #[test]
    fn extension_is_constant_along_radial_lines() {
        let g = Geometry::polar_disk(CurvatureModel::Flat, 1.0).unwrap();
        let grid = Grid::new(&g, 8, 8).unwrap();
        let spec: PhiSpec = "fourier:0,0.1".parse().unwrap();
        let angle = AngleData::new(&grid, &spec).unwrap();
        for i in 0..=8 {
            for j in 0..8 {
                assert_eq!(angle.extension()[i * 8 + j], angle.boundary()[j]);
            }
        }
        assert!((angle.phi0() - 0.1).abs() < 1e-12);
    }
}
