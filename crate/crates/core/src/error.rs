use thiserror::Error;

/// Errors produced by mesh handling, assembly, recovery and the coupled solver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("mesh parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("degenerate triangle {index} (signed area {area:e})")]
    DegenerateTriangle { index: usize, area: f64 },

    #[error("node index {index} out of range (mesh has {count} nodes)")]
    NodeOutOfRange { index: usize, count: usize },

    #[error("interface polyline: {0}")]
    Interface(String),

    #[error("patch around node {node} exhausted the mesh with only {found} nodes")]
    PatchExhausted { node: usize, found: usize },

    #[error("rank-deficient quadratic fit at node {node} (condition estimate {condition:e})")]
    RankDeficient { node: usize, condition: f64 },

    #[error("no recovered jacobian at node {0}")]
    MissingJacobian(usize),

    #[error("linear solve failed: relative residual {residual:e} after {iterations} iterations")]
    SolveFailed { residual: f64, iterations: usize },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("{phase} solve failed in coupling iteration {iteration}: {source}")]
    Subproblem {
        phase: &'static str,
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("rate fit needs at least 3 rows with distinct h, got {0}")]
    RateFit(usize),

    #[error("nothing to emit: no rows")]
    EmptyRows,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
