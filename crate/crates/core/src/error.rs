use thiserror::Error;

/// Errors raised by the analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("denominator vanishes at parameter point {point:?}")]
    PoleAtParameter { point: Vec<[f64; 2]> },
    #[error("division by the zero function")]
    DivisionByZeroFunction,
    #[error("parameter point has {got} coordinates, expected {expected}")]
    ParameterDimension { expected: usize, got: usize },
    #[error("series centers or dimensions do not match")]
    CenterMismatch,
    #[error("leading coefficient is singular at the working parameter point")]
    SingularLeadingCoefficient,
    #[error("truncation {truncation} is too short (need at least {required})")]
    InsufficientTruncation { truncation: i64, required: i64 },
    #[error("pole locations {first} and {second} collide at the working parameter point")]
    PoleCollisionAtParameter { first: usize, second: usize },
    #[error("gauge transformation is singular")]
    SingularGauge,
    #[error("sample point x = {x:?} sits on a singularity")]
    SampleAtSingularity { x: [f64; 2] },
    #[error("eigenvalues of A0 differ by the integer {order}; the order-{order} Sylvester equation is singular")]
    ResonantEigenvalues { order: usize },
    #[error("eigenvalue gap {gap:?} is close to an integer but cannot be separated stably")]
    EigenvalueClusterAmbiguity { gap: [f64; 2] },
    #[error("local system violates an invariant: {0}")]
    InvalidLocalSystem(String),
    #[error("evaluation failed: {0}")]
    EvaluationFailure(String),
    #[error("path comes within {distance:.3e} of pole {pole} (clearance {clearance:.3e})")]
    PathTooCloseToPole {
        pole: usize,
        distance: f64,
        clearance: f64,
    },
    #[error("step size underflow at arclength {at}")]
    StepSizeUnderflow { at: f64 },
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("eigenvalue {eigenvalue:?} lies on the branch cut of the logarithm")]
    BranchAmbiguity { eigenvalue: [f64; 2] },
    #[error("no convergence after {iterations} iterations (best residual {residual:.3e})")]
    MaxIterationsExceeded { iterations: usize, residual: f64 },
    #[error("fit stalled at residual {residual:.3e}; a Fuchsian realization is unlikely")]
    NonFuchsianLikely { residual: f64 },
    #[error("Wronskian vanishes at degree {m} but the reconstruction fails verification")]
    InconsistentSamples { m: usize },
    #[error("at grid point {index}: {source}")]
    AtGridPoint { index: usize, source: Box<Error> },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
