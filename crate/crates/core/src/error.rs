use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {z} lies outside the domain")]
    OutOfDomain { z: Complex64 },

    #[error("derivative stencil at {z} leaves the domain (distance to boundary {distance:.3e} < margin {margin:.3e})")]
    StencilOutOfDomain { z: Complex64, distance: f64, margin: f64 },

    #[error("integration path vertex {z} lies outside the domain")]
    PathOutOfDomain { z: Complex64 },

    #[error("adaptive quadrature did not converge within depth {depth} (last estimate difference {difference:.3e})")]
    NoConvergence { depth: usize, difference: f64 },

    #[error("compatibility condition violated: relative residual {residual:.3e} > {tolerance:.3e}")]
    CompatibilityViolated { residual: f64, tolerance: f64 },

    #[error("degenerate generating pair at {z}: Im(conj(F) G) = {value:.3e}")]
    DegeneratePair { z: Complex64, value: f64 },

    #[error("function is not pseudoanalytic: Vekua residual {residual:.3e} > {tolerance:.3e}")]
    NotPseudoanalytic { residual: f64, tolerance: f64 },

    #[error("function is not a solution: residual {residual:.3e} > {tolerance:.3e}")]
    NotASolution { residual: f64, tolerance: f64 },

    #[error("path dependence: two paths disagree by {discrepancy:.3e} > {tolerance:.3e}")]
    PathDependence { discrepancy: f64, tolerance: f64 },

    #[error("gradient of rho vanishes at {z} (|grad rho| = {norm:.3e})")]
    GradientVanishes { z: Complex64, norm: f64 },

    #[error("insufficient samples: {got} < {needed}")]
    InsufficientSamples { got: usize, needed: usize },

    #[error("particular solution f0 vanishes at {z} (|f0| = {value:.3e})")]
    VanishingSolution { z: Complex64, value: f64 },

    #[error("multiplier phi vanishes at {z}")]
    VanishingMultiplier { z: Complex64 },

    #[error("finite-difference noise dominates at derivative order {order} (estimated relative noise {noise:.3e})")]
    NoiseDominated { order: usize, noise: f64 },

    #[error("exponent {requested} exceeds the recursion budget {budget}")]
    BudgetExceeded { requested: usize, budget: usize },

    #[error("remainder {remainder:.3e} at radius {radius} is below the noise floor {floor:.3e}")]
    NoiseFloorReached { radius: f64, remainder: f64, floor: f64 },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
