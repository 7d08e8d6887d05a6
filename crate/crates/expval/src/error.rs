use thiserror::Error;

/// Errors surfaced by the estimation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid observable: {0}")]
    InvalidObservable(String),

    #[error("invalid composition: {0}")]
    InvalidComposition(String),

    #[error("exact multinomial arithmetic supports at most {max} copies, got {n}")]
    CopiesOverflow { n: u32, max: u32 },

    #[error("invalid deviation measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("quadrature did not converge for {context}: best error {achieved:.3e}, target {target:.3e}")]
    QuadratureNonConvergence {
        context: String,
        achieved: f64,
        target: f64,
    },

    #[error("objective not finite at omega = {omega}: {context}")]
    NonFiniteObjective { omega: f64, context: String },

    #[error("solver failed for composition {composition}: {source}")]
    SolverFailure {
        composition: String,
        #[source]
        source: Box<Error>,
    },

    #[error("operator dimension {dim} exceeds the guard {max}")]
    DimensionGuard { dim: usize, max: usize },

    #[error("POVM carries no estimators")]
    MissingEstimators,

    #[error("POVM invariant violated: {0}")]
    PovmInvariant(String),

    #[error("singular element sum while building a random POVM ({0} attempts)")]
    SingularPovmSum(u32),

    #[error("no estimator table entry for composition {0}")]
    MissingTableEntry(String),

    #[error("rejection bound violated: density {density} > bound {bound} at theta = {theta}")]
    RejectionBound { theta: f64, density: f64, bound: f64 },

    #[error("rejection sampling did not accept within {0} proposals")]
    RejectionExhausted(u64),
}

pub type Result<T> = std::result::Result<T, Error>;
