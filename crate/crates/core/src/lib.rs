//! Operator systems over polyhedral cones.

pub mod cones;
pub mod cpmaps;
pub mod error;
pub mod herm;
pub mod lift;
pub mod linalg;
pub mod opsys;
pub mod sample;
pub mod sdp;
pub mod slack;
pub mod sos;

pub use error::{Error, Result};
pub use herm::{HermBasis, HermMatrix, C64, DEFAULT_TOL};
