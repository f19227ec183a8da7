use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed graph document: {0}")]
    Malformed(String),

    #[error("graph has no vertices")]
    EmptyVertexSet,

    #[error("graph has no edges")]
    EmptyEdgeSet,

    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },

    #[error("edge `{edge}` references unknown vertex `{vertex}`")]
    DanglingEndpoint { edge: String, vertex: String },

    #[error("labels must be present on every edge or on none (edge `{edge}` differs)")]
    PartialLabelling { edge: String },

    #[error("labelling is not deterministic: vertex `{vertex}` has two outgoing edges labelled `{label}`")]
    NondeterministicLabelling { vertex: String, label: String },

    #[error("graph is not strongly connected: no path from `{from}` to `{to}`")]
    NotConnected { from: String, to: String },

    #[error("word is not admissible at position {position}")]
    InadmissibleWord { position: usize },

    #[error("vector has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("edge weight exp(-theta) is not representable for edge {edge} (theta = {theta})")]
    Overflow { edge: usize, theta: f64 },

    #[error("eigen-solver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("direction must be nonzero")]
    ZeroDirection,

    #[error("graph is cyclic; the only growth direction is {direction:?}")]
    CyclicGraph { direction: Vec<f64> },

    #[error("growth solver did not converge after {iterations} iterations (gradient norm {gradient_norm:e}) and no divergence certificate was found")]
    SolverStalled { iterations: usize, gradient_norm: f64 },

    #[error("prediction refused: {0}")]
    OutOfDomain(String),

    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("vertex index {0} out of range")]
    UnknownVertex(usize),
}
