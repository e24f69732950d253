//! 2D incompressible Euler flows in domains with corners.
//!
//! Velocity fields are reconstructed from discrete vortex blobs through the
//! Biot-Savart law of the domain, evaluated by transplanting the unit-disk
//! Green's function through a Riemann map. The crate provides:
//!
//! - evaluable conformal maps (identity on the disk, closed-form sector
//!   chains, Schwarz-Christoffel for polygons),
//! - the disk Green's function, its perpendicular-gradient kernel, and the
//!   odd-reflection combination for symmetric domains,
//! - blob/tracer transport with RK4 and boundary-collision detection,
//! - quantitative diagnostics: corner-exponent fits, Lyapunov growth bounds,
//!   boundedness of the singular boundary integral, axis-velocity exponents
//!   and collision-time extrapolation.
//!
//! The `parallel` feature (on by default) parallelizes batch velocity
//! evaluation and diagnostic sampling with rayon; without it everything runs
//! on a single thread with identical results.

pub mod biot_savart;
pub mod conformal;
pub mod diagnostics;
pub mod geometry;
pub mod greens;
pub mod parallel;
pub mod quad;
pub mod report;
pub mod transport;
pub mod tree;

mod error;

pub use error::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
