use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Leading coefficient matrix of a higher-order model is singular or
    /// too close to singular to invert reliably.
    #[error("leading coefficient matrix is singular or near-singular (rcond = {rcond:.3e})")]
    NonsingularityViolation { rcond: f64 },

    /// An uncertain parameter lies outside its admissible box.
    #[error("uncertain parameter {name}[{index}] = {value} exceeds bound {bound}")]
    BoundViolation {
        name: &'static str,
        index: usize,
        value: f64,
        bound: f64,
    },

    /// Vertex enumeration guard: 2^(p+q) corners would be generated.
    #[error("vertex enumeration over {params} parameters exceeds the 2^{limit} guard")]
    TooManyVertices { params: usize, limit: usize },

    /// A matrix argument contains NaN or infinite entries.
    #[error("matrix contains non-finite entries")]
    InvalidMatrix,

    /// Fractional order outside the supported open interval (0, 2).
    #[error("fractional order {alpha} outside supported range (0, 2)")]
    InvalidOrder { alpha: f64 },

    /// Fractional order outside the branch an assembler or lemma handles.
    #[error("fractional order {alpha} outside branch {branch}")]
    WrongBranch { alpha: f64, branch: &'static str },

    /// Incompatible matrix dimensions.
    #[error("dimension mismatch: {0}")]
    DimensionError(String),

    /// A conic program with no constraints.
    #[error("conic program has no constraints")]
    EmptyProblem,

    /// The SDP backend failed numerically (iteration limit, ill-conditioning).
    #[error("solver failure: {0}")]
    SolverFailure(String),

    /// Output matrix C does not have full row rank, so B_c/D_c cannot be
    /// recovered from the change of variables.
    #[error("output matrix C is rank deficient (rank {rank} of {rows} rows)")]
    RankDeficientC { rank: usize, rows: usize },

    /// Controller recovery hit a singular Lyapunov-variable block.
    #[error("controller recovery failed: {0}")]
    RecoveryFailure(String),

    /// The implicit stepping matrix I - h^alpha * A is singular.
    #[error("implicit stepping matrix is singular at the configured step size")]
    StepFailure,

    /// Unknown solver backend name (e.g. from FRACLMI_SOLVER).
    #[error("unknown solver backend {0:?}")]
    UnknownBackend(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed input file (bad JSON, ragged arrays, missing fields).
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
