use crate::optimizer::OptimizationResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid problem size: {0}")]
    InvalidSize(String),

    #[error("parameter mismatch: expected depth {expected}, got {got}")]
    ParameterMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("statevector capacity exceeded: n = {n}, limit = {limit}")]
    Capacity { n: u32, limit: u32 },

    #[error("target bitstring has {got} bits but the state has {expected} qubits")]
    TargetMismatch { expected: usize, got: usize },

    #[error("optimizer did not converge after {iterations} iterations (best grad norm {:.3e})", best.grad_norm)]
    NonConvergence {
        iterations: usize,
        best: Box<OptimizationResult>,
    },

    #[error("all {restarts} restarts failed to converge")]
    AllRestartsFailed {
        restarts: usize,
        failures: Vec<Error>,
    },

    #[error("no root found for n = {n} after scanning {scanned} points up to beta = {upper:.6}")]
    RootNotFound { n: u64, scanned: usize, upper: f64 },

    #[error("Hessian is not negative definite at the seed point; refusing a saddle correction")]
    SaddleRejected,

    #[error("degenerate fit input: {0}")]
    Degenerate(String),

    #[error("fit did not converge: {0}")]
    FitNonConvergence(String),

    #[error("sweep failed at n = {n}: {source}")]
    Sweep {
        n: u64,
        #[source]
        source: Box<Error>,
    },
}
