//! Supported Riemannian settings: a flat interval and geodesic balls / polar
//! disks in the model spaces, all written in geodesic polar coordinates so
//! that `g = dr^2 + sigma(r)^{2/(n-1)} g_{S^{n-1}}`.
//!
//! Every metric quantity the solvers and the hypothesis checker need
//! (volume weight, Ricci bound, boundary curvature, defining function) is
//! available in closed form for this catalog.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{McfError, Result};

/// Slack allowed when checking that a coordinate lies in the closed domain.
const DOMAIN_SLACK: f64 = 1e-12;

/// Number of samples used to bound the Hessian of the smoothed distance.
const HESSIAN_SAMPLES: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryKind {
    #[serde(rename = "interval")]
    Interval1D,
    RadialBall,
    PolarDisk,
}

/// Sectional curvature model of the ambient space `N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurvatureModel {
    Flat,
    /// Constant sectional curvature `-K^2`.
    Hyperbolic(f64),
    /// Cartan-Hadamard with sectional curvature in `[-K^2, 0]`. The metric is
    /// modelled by the hyperbolic one; only the hypothesis checker treats it
    /// differently.
    PinchedCh(f64),
}

impl CurvatureModel {
    /// The curvature scale `K`, zero when flat.
    pub fn scale(&self) -> f64 {
        match *self {
            CurvatureModel::Flat => 0.0,
            CurvatureModel::Hyperbolic(k) | CurvatureModel::PinchedCh(k) => k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurvatureName {
    Flat,
    Hyperbolic,
    PinchedCh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvatureConfig {
    pub model: CurvatureName,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
}

/// JSON description of a geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub kind: GeometryKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curvature: Option<CurvatureConfig>,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
}

/// Metric quantities of the catalog geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricData {
    /// Lower bound of `Ric(v, v)` over unit vectors.
    pub ricci_lower: f64,
}

/// Data attached to the boundary: the smoothed distance and, for balls, the
/// convex defining function `h = r^2/(2R) - R/2` with its constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryData {
    /// Onset of the plateau of the smoothed distance, `min(1, inradius)`.
    pub delta: f64,
    /// Bound on `|Hess d|` for the smoothed distance.
    pub c_d: f64,
    pub k1: Option<f64>,
    pub kappa0: Option<f64>,
    pub m1: Option<f64>,
}

/// Value of `h` and the extreme eigenvalues of `Hess h` at a radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefiningFunction {
    pub h: f64,
    pub hess_min: f64,
    pub hess_max: f64,
}

/// A validated geometry from the catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    kind: GeometryKind,
    dim: usize,
    curvature: CurvatureModel,
    lo: f64,
    hi: f64,
    metric: MetricData,
    boundary: BoundaryData,
}

fn positive_finite(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

/// Builds a geometry from its JSON description.
pub fn make_geometry(config: &GeometryConfig) -> Result<Geometry> {
    let curvature = match &config.curvature {
        None => CurvatureModel::Flat,
        Some(c) => {
            let scale = || -> Result<f64> {
                match c.k {
                    Some(k) if positive_finite(k) => Ok(k),
                    Some(k) => Err(McfError::InvalidGeometry(format!(
                        "curvature scale K must be positive, got {k}"
                    ))),
                    None => Err(McfError::InvalidGeometry(
                        "curvature model requires K".into(),
                    )),
                }
            };
            match c.model {
                CurvatureName::Flat => CurvatureModel::Flat,
                CurvatureName::Hyperbolic => CurvatureModel::Hyperbolic(scale()?),
                CurvatureName::PinchedCh => CurvatureModel::PinchedCh(scale()?),
            }
        }
    };
    match config.kind {
        GeometryKind::Interval1D => {
            if curvature != CurvatureModel::Flat {
                return Err(McfError::InvalidGeometry(
                    "an interval must carry the flat metric".into(),
                ));
            }
            if let Some(n) = config.n {
                if n != 1 {
                    return Err(McfError::InvalidGeometry(format!(
                        "an interval has dimension 1, got n = {n}"
                    )));
                }
            }
            let (a, b) = match (config.a, config.b) {
                (Some(a), Some(b)) => (a, b),
                _ => {
                    return Err(McfError::InvalidGeometry(
                        "an interval requires endpoints a and b".into(),
                    ))
                }
            };
            Geometry::interval(a, b)
        }
        GeometryKind::RadialBall => {
            let n = config.n.unwrap_or(2);
            let radius = config.radius.ok_or_else(|| {
                McfError::InvalidGeometry("a radial ball requires a radius R".into())
            })?;
            Geometry::radial_ball(n, curvature, radius)
        }
        GeometryKind::PolarDisk => {
            if let Some(n) = config.n {
                if n != 2 {
                    return Err(McfError::InvalidGeometry(format!(
                        "a polar disk has dimension 2, got n = {n}"
                    )));
                }
            }
            let radius = config.radius.ok_or_else(|| {
                McfError::InvalidGeometry("a polar disk requires a radius R".into())
            })?;
            Geometry::polar_disk(curvature, radius)
        }
    }
}

impl Geometry {
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(McfError::InvalidGeometry(format!(
                "interval endpoints must be finite with a < b, got ({a}, {b})"
            )));
        }
        Ok(Self::assemble(
            GeometryKind::Interval1D,
            1,
            CurvatureModel::Flat,
            a,
            b,
        ))
    }

    pub fn radial_ball(dim: usize, curvature: CurvatureModel, radius: f64) -> Result<Self> {
        if dim < 2 {
            return Err(McfError::InvalidGeometry(format!(
                "a radial ball needs n >= 2, got {dim}"
            )));
        }
        if !positive_finite(radius) {
            return Err(McfError::InvalidGeometry(format!(
                "radius must be positive and finite, got {radius}"
            )));
        }
        Ok(Self::assemble(
            GeometryKind::RadialBall,
            dim,
            curvature,
            0.0,
            radius,
        ))
    }

    pub fn polar_disk(curvature: CurvatureModel, radius: f64) -> Result<Self> {
        let mut g = Self::radial_ball(2, curvature, radius)?;
        g.kind = GeometryKind::PolarDisk;
        Ok(g)
    }

    fn assemble(kind: GeometryKind, dim: usize, curvature: CurvatureModel, lo: f64, hi: f64) -> Self {
        let k = curvature.scale();
        let metric = MetricData {
            ricci_lower: -((dim - 1) as f64) * k * k,
        };
        let mut geom = Geometry {
            kind,
            dim,
            curvature,
            lo,
            hi,
            metric,
            boundary: BoundaryData {
                delta: 0.0,
                c_d: 0.0,
                k1: None,
                kappa0: None,
                m1: None,
            },
        };
        geom.boundary = geom.compute_boundary_data();
        geom
    }

    fn compute_boundary_data(&self) -> BoundaryData {
        let inradius = match self.kind {
            GeometryKind::Interval1D => 0.5 * (self.hi - self.lo),
            _ => self.hi,
        };
        let delta = inradius.min(1.0);
        let mut data = BoundaryData {
            delta,
            c_d: 0.0,
            k1: None,
            kappa0: None,
            m1: None,
        };
        data.c_d = self.distance_hessian_bound(delta);
        if self.kind != GeometryKind::Interval1D {
            let radius = self.hi;
            let k = self.curvature.scale();
            data.k1 = Some(1.0 / radius);
            data.kappa0 = Some(match self.curvature {
                CurvatureModel::Hyperbolic(_) => k / (k * radius).tanh(),
                CurvatureModel::Flat | CurvatureModel::PinchedCh(_) => 1.0 / radius,
            });
            data.m1 = Some(match self.curvature {
                CurvatureModel::Flat => 1.0 / radius,
                _ => k / (k * radius).tanh(),
            });
        }
        data
    }

    /// `sup |Hess d|` of the smoothed distance: the radial part is the ramp's
    /// second derivative, the tangential part is `d'(s)` times the curvature of
    /// the geodesic sphere through the point.
    fn distance_hessian_bound(&self, delta: f64) -> f64 {
        let ramp_max = 3.0 / delta;
        if self.kind == GeometryKind::Interval1D {
            return ramp_max;
        }
        let radius = self.hi;
        let mut bound = ramp_max;
        for i in 0..=HESSIAN_SAMPLES {
            let s = delta * i as f64 / HESSIAN_SAMPLES as f64;
            let (_, slope, _) = distance_ramp(s, delta);
            let r = radius - s;
            if slope <= 0.0 || r <= 0.0 {
                continue;
            }
            bound = bound.max(slope * self.sphere_curvature(r));
        }
        bound
    }

    pub fn kind(&self) -> GeometryKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn curvature(&self) -> CurvatureModel {
        self.curvature
    }

    pub fn metric(&self) -> &MetricData {
        &self.metric
    }

    pub fn boundary(&self) -> &BoundaryData {
        &self.boundary
    }

    /// Radius of the ball; `None` for intervals.
    pub fn radius(&self) -> Option<f64> {
        match self.kind {
            GeometryKind::Interval1D => None,
            _ => Some(self.hi),
        }
    }

    /// Coordinate range `[lo, hi]` of the first coordinate (x or r).
    pub fn extent(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Area `|S^{n-1}|` of the unit sphere in the tangent space (1 for the
    /// interval, whose boundary measure is counting measure).
    pub fn sphere_area(&self) -> f64 {
        match self.kind {
            GeometryKind::Interval1D => 1.0,
            _ => unit_sphere_area(self.dim),
        }
    }

    /// Volume weight `sigma(r)` without domain checks.
    pub(crate) fn sigma(&self, r: f64) -> f64 {
        let p = (self.dim - 1) as i32;
        match (self.kind, self.curvature) {
            (GeometryKind::Interval1D, _) => 1.0,
            (_, CurvatureModel::Flat) => r.powi(p),
            (_, CurvatureModel::Hyperbolic(k) | CurvatureModel::PinchedCh(k)) => {
                ((k * r).sinh() / k).powi(p)
            }
        }
    }

    /// Length element of the angular direction, `sigma^{1/(n-1)}` (r or
    /// sinh(Kr)/K).
    pub(crate) fn angular_scale(&self, r: f64) -> f64 {
        match self.curvature {
            CurvatureModel::Flat => r,
            CurvatureModel::Hyperbolic(k) | CurvatureModel::PinchedCh(k) => (k * r).sinh() / k,
        }
    }

    /// Integral of `sigma` over `[r0, r1]` (closed form where available).
    pub(crate) fn sigma_integral(&self, r0: f64, r1: f64) -> f64 {
        let n = self.dim as i32;
        match (self.kind, self.curvature) {
            (GeometryKind::Interval1D, _) => r1 - r0,
            (_, CurvatureModel::Flat) => (r1.powi(n) - r0.powi(n)) / n as f64,
            (_, CurvatureModel::Hyperbolic(k) | CurvatureModel::PinchedCh(k)) if n == 2 => {
                ((k * r1).cosh() - (k * r0).cosh()) / (k * k)
            }
            _ => gauss_legendre(|r| self.sigma(r), r0, r1),
        }
    }

    /// Principal curvature of the geodesic sphere of radius `r`
    /// (eigenvalue of `Hess r` orthogonal to `dr`).
    pub(crate) fn sphere_curvature(&self, r: f64) -> f64 {
        match self.curvature {
            CurvatureModel::Flat => 1.0 / r,
            CurvatureModel::Hyperbolic(k) | CurvatureModel::PinchedCh(k) => k / (k * r).tanh(),
        }
    }

    fn check_coord(&self, coord: f64) -> Result<()> {
        if !(coord >= self.lo - DOMAIN_SLACK && coord <= self.hi + DOMAIN_SLACK) {
            return Err(McfError::OutOfDomain {
                coord,
                lo: self.lo,
                hi: self.hi,
            });
        }
        Ok(())
    }

    /// Volume weight `sigma(r)`: `r^{n-1}` (flat), `(sinh(Kr)/K)^{n-1}`
    /// (hyperbolic), 1 on the interval.
    pub fn volume_weight(&self, r: f64) -> Result<f64> {
        self.check_coord(r)?;
        Ok(self.sigma(r.clamp(self.lo, self.hi)))
    }

    /// Exact distance from a point (given by x or r) to the boundary.
    pub fn boundary_distance(&self, coord: f64) -> f64 {
        match self.kind {
            GeometryKind::Interval1D => (coord - self.lo).min(self.hi - coord).max(0.0),
            _ => (self.hi - coord).max(0.0),
        }
    }

    /// Smoothed distance `d` at a point and the Hessian bound `C_d`.
    pub fn smoothed_distance(&self, coord: f64) -> (f64, f64) {
        let s = self.boundary_distance(coord.clamp(self.lo, self.hi));
        let (d, _, _) = distance_ramp(s, self.boundary.delta);
        (d, self.boundary.c_d)
    }

    /// Smoothed distance and its derivative along the coordinate.
    pub(crate) fn distance_profile(&self, coord: f64) -> (f64, f64) {
        let c = coord.clamp(self.lo, self.hi);
        let s = self.boundary_distance(c);
        let (d, slope, _) = distance_ramp(s, self.boundary.delta);
        let ds = match self.kind {
            GeometryKind::Interval1D if c - self.lo < self.hi - c => 1.0,
            _ => -1.0,
        };
        (d, slope * ds)
    }

    /// `h = r^2/(2R) - R/2` with the extreme eigenvalues of its Hessian.
    pub fn defining_function(&self, r: f64) -> Result<DefiningFunction> {
        let radius = self.radius().ok_or_else(|| {
            McfError::Unsupported("the interval has no convex defining function".into())
        })?;
        self.check_coord(r)?;
        let r = r.clamp(0.0, radius);
        let h = r * r / (2.0 * radius) - radius / 2.0;
        let radial = 1.0 / radius;
        let tangential = match self.curvature {
            CurvatureModel::Flat => 1.0,
            CurvatureModel::Hyperbolic(k) | CurvatureModel::PinchedCh(k) => x_coth_x(k * r),
        } / radius;
        Ok(DefiningFunction {
            h,
            hess_min: radial.min(tangential),
            hess_max: radial.max(tangential),
        })
    }
}

/// `x coth x`, continuous at 0.
fn x_coth_x(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 + x * x / 3.0
    } else {
        x / x.tanh()
    }
}

/// Exact distance near the boundary, blended into the plateau `3 delta / 4` by
/// a C^2 polynomial ramp on `[delta/2, delta]`. Returns `(d, d', d'')` with
/// derivatives taken with respect to the exact distance `s`.
pub(crate) fn distance_ramp(s: f64, delta: f64) -> (f64, f64, f64) {
    let half = 0.5 * delta;
    if s <= half {
        (s, 1.0, 0.0)
    } else if s >= delta {
        (0.75 * delta, 0.0, 0.0)
    } else {
        let t = (s - half) / half;
        let d = half + half * (t - t.powi(3) + 0.5 * t.powi(4));
        let slope = 1.0 - t * t * (3.0 - 2.0 * t);
        let curv = -6.0 * t * (1.0 - t) / half;
        (d, slope, curv)
    }
}

/// `|S^{n-1}|` via the recurrence `|S^{k+1}| = 2 pi |S^{k-1}| / k`.
pub fn unit_sphere_area(n: usize) -> f64 {
    match n {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI * unit_sphere_area(n - 2) / (n - 2) as f64,
    }
}

/// Eight-point Gauss-Legendre quadrature on `[a, b]`.
fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    const NODES: [(f64, f64); 4] = [
        (0.183_434_642_495_649_8, 0.362_683_783_378_362),
        (0.525_532_409_916_329, 0.313_706_645_877_887_3),
        (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
        (0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
    ];
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    NODES
        .iter()
        .map(|&(x, w)| w * (f(mid - half * x) + f(mid + half * x)))
        .sum::<f64>()
        * half
}
