use thiserror::Error;

/// Errors raised by the stability solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("derivative of order {order} is not available for a {kind} profile")]
    OrderUnavailable { order: u8, kind: &'static str },

    #[error("x2 = {x2} lies outside the profile domain [0, {h_plus}]")]
    OutOfDomain { x2: f64, h_plus: f64 },

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("degenerate shear at critical layer s = {s}: |U'(s)| = {u_prime:e}")]
    DegenerateShear { s: f64, u_prime: f64 },

    #[error("critical speed {c_r} coincides with an endpoint value of the profile")]
    EndpointCritical { c_r: f64 },

    #[error("y(0) vanishes relative to the solution size (|y(0)|/max|y| = {ratio:e}); channel-type mode")]
    DegenerateAtInterface { ratio: f64 },

    #[error("Rayleigh coefficient nearly singular: min |U - c| = {min_distance:e}")]
    NearSingularCoefficient { min_distance: f64 },

    #[error("critical layer patches overlap (radius {radius:e})")]
    SeriesRadiusTooSmall { radius: f64 },

    #[error("incompatible depths: {0}")]
    IncompatibleDepths(String),

    #[error("surface tension must be positive for a finite Kelvin-Helmholtz threshold")]
    RequiresSurfaceTension,

    #[error("no critical layer: c_k = {c_k} is outside the range of the air profile")]
    NoCriticalLayer { c_k: f64 },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("integrator failure at x2 = {x2}: {reason}")]
    Integration { x2: f64, reason: String },

    #[error("root finder did not converge after {iterations} iterations (|residual| = {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("residual vanishes on the contour near c = {re} + {im}i")]
    BoundaryZero { re: f64, im: f64 },

    #[error("argument jump along the contour could not be resolved")]
    PhaseJumpUnresolved,

    #[error("continuation branch lost at epsilon = {epsilon}: {reason}")]
    BranchLost { epsilon: f64, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
