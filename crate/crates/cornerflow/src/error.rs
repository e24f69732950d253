use crate::geometry::Point;

/// Errors shared by all modules of the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("point ({},{}) is outside the domain", .0.x1, .0.x2)]
    OutsideDomain(Point),

    #[error("evaluation at or too close to a corner at ({},{})", .0.x1, .0.x2)]
    AtCorner(Point),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Schwarz-Christoffel parameter problem did not converge: residual {residual:.3e} after {iterations} iterations")]
    ScNonConvergence { residual: f64, iterations: usize },

    #[error("quadrature did not reach the requested accuracy: achieved {achieved:.3e}, requested {requested:.3e}")]
    QuadratureBudget { achieved: f64, requested: f64 },

    #[error("vorticity configuration misuse: {0}")]
    ConfigMisuse(String),

    #[error("empty blob set: initial vorticity support misses the grid")]
    EmptyBlobSet,

    #[error("time step underflow below {dt_min:.1e} at t = {t:.6} near ({}, {})", .location.x1, .location.x2)]
    Stiffness { t: f64, dt_min: f64, location: Point },

    #[error("fit refused: {0}")]
    FitRefused(String),

    #[error("wrong sign: {0}")]
    WrongSign(String),
}
