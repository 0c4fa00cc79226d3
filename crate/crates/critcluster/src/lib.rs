//! Critical clusters of congruent bodies touching a central unit ball.
//!
//! Cylinders are modelled by their axes, which are lines tangent to the unit
//! sphere; balls by their touch points. On top of the geometry sits a
//! criticality analyzer for functions of the form `min{F_1, ..., F_m}`.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod ball_clusters;
pub mod cyl_clusters;
pub mod delta_rotation;
pub mod galois_probe;
pub mod geom3;
pub mod min_morse;
pub mod optimize;

mod rng;

pub use ball_clusters::BallTouchConfig;
pub use cyl_clusters::LineCluster;
pub use geom3::{SpherePoint, TangentLine, Vec3};
pub use min_morse::{CriticalityReport, LinearQuadraticBundle};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("input outside the domain: {0}")]
    Domain(String),
    #[error("chart violation: {0}")]
    Chart(String),
    #[error("structure not detected: {0}")]
    Structure(String),
    #[error("unknown name `{0}`")]
    UnknownName(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Default seed for every sampling routine.
pub const DEFAULT_SEED: u64 = 42;
