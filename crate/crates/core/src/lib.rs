//! Numerical laboratory for graphical mean curvature flow with a prescribed
//! contact angle over domains in `N x R`.

pub mod config;
pub mod diagnostics;
pub mod discretization;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod hypothesis;
pub mod run;
pub mod soliton;
mod linalg;

pub use discretization::{AngleData, Field, Grid, PhiSpec};
pub use error::{McfError, Result};
pub use geometry::{make_geometry, CurvatureModel, Geometry, GeometryConfig, GeometryKind};
pub use config::{parse_config, RunConfig};
pub use run::{emit_outputs, execute, Command, RunOutput};
