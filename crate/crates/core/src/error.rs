use thiserror::Error;

/// Error variants shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Polygon vertex list fails the convexity cross-product test.
    #[error("polygon is not convex: {0}")]
    NonConvex(String),

    /// Domain has zero (or negative) volume.
    #[error("degenerate domain: {0}")]
    Degenerate(String),

    /// Grid resolution below the minimum of 2 cells per axis.
    #[error("resolution too low: {0} (need at least 2 cells per axis)")]
    ResolutionTooLow(u32),

    /// Density integrates to zero, no probability measure can be built.
    #[error("density has zero mass")]
    ZeroMass,

    /// Density has negative values where a nonnegative one is required.
    #[error("density is negative at node {node} (value {value})")]
    NegativeDensity { node: usize, value: f64 },

    /// Density does not integrate to 1 where a probability density is required.
    #[error("density mass {0} differs from 1 beyond tolerance")]
    NotNormalized(f64),

    /// Field does not change sign, so the signed-split measure pair is undefined.
    #[error("field does not change sign; the split measure pair is undefined")]
    OneSigned,

    /// Measures live in different ambient dimensions, or a 1D-only routine got
    /// a multidimensional input.
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    /// Exact solver instance exceeds the configured atom-pair cap.
    #[error("exact solve too large: {pairs} atom pairs exceed cap {cap}")]
    TooLarge { pairs: usize, cap: usize },

    /// Marginal masses differ beyond 1e-10; indicates an upstream bug.
    #[error("transport infeasible: total masses differ by {0}")]
    Infeasible(f64),

    /// Iterative solver failed to reach its residual target.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// Interpolation time outside [0, 1].
    #[error("interpolation time {0} outside [0, 1]")]
    BadTime(f64),

    /// Target density has a zero-mass plateau under positive transported mass,
    /// so the transport derivative is undefined there.
    #[error("degenerate CDF: zero-density plateau receives positive mass (source cell {0})")]
    DegenerateCdf(usize),

    /// Signed-power constraint residual above the admission tolerance.
    #[error("constraint violated: signed-power residual {residual} exceeds tolerance {tolerance}")]
    ConstraintViolated { residual: f64, tolerance: f64 },

    /// Operation is not defined for this grid kind.
    #[error("unsupported grid: {0}")]
    UnsupportedGrid(String),

    /// Exponent outside the admissible range for the operation.
    #[error("invalid exponent: {0}")]
    InvalidExponent(String),

    /// Two fields or measures that must share a grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Field expression failed to parse.
    #[error("expression parse error: {0}")]
    ParseError(String),
}

pub type Result<T> = std::result::Result<T, Error>;
