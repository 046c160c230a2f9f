//! Spectral flow of paths of self-adjoint operators over weighted-trace
//! operator models, computed by four independent engines, together with the
//! Atiyah–Patodi–Singer index of the discretized suspension operator
//! `∂_u + D_u`.

pub mod error;
pub mod exec;
pub mod generators;
pub mod geometry;
pub mod apsindex;
pub mod engines;
pub mod linalg;
pub mod path;
pub mod quadrature;
pub mod tracemodel;

pub use error::{Error, Result};
