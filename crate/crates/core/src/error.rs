use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A domain mask ended up with no interior nodes.
    #[error("degenerate domain: {0}")]
    DegenerateDomain(String),

    /// A parameter violated a documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Operand shapes (dimension, components, node counts) do not match.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Evaluation of a weight or kernel at its singular point.
    #[error("singular evaluation: {0}")]
    SingularEvaluation(String),

    /// A (kind, parameter) combination with no closed-form fundamental solution here.
    #[error("unsupported fundamental solution: {0}")]
    UnsupportedFundamentalSolution(String),

    /// Iterative linear solve did not reach the requested residual.
    #[error("solver did not converge: achieved relative residual {achieved:.3e} after {iterations} iterations (target {target:.3e})")]
    SolverDidNotConverge {
        achieved: f64,
        target: f64,
        iterations: usize,
    },

    /// Extremal eigenvalue iteration stagnated; best estimate attached.
    #[error("eigenvalue iteration stagnated: best estimate {best_estimate:.9e}, residual {residual:.3e} after {iterations} iterations")]
    EigenIterationStagnated {
        best_estimate: f64,
        residual: f64,
        iterations: usize,
    },

    /// Bisection bracket endpoints yield the same sign of the minimum eigenvalue.
    #[error("bracket does not straddle threshold at this resolution: [{lo}, {hi}] with signs ({sign_lo}, {sign_hi})")]
    BracketDoesNotStraddle {
        lo: f64,
        hi: f64,
        sign_lo: i8,
        sign_hi: i8,
    },

    /// lhs nonzero while rhs is zero in a normalized ratio.
    #[error("inconsistent zero: lhs = {lhs:.3e} but rhs = 0")]
    InconsistentZero { lhs: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
