use thiserror::Error;

/// Errors raised by the model, solver, network and engine layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A barrier or composite objective was evaluated outside the strict
    /// interior of its constraint.
    #[error("domain violation: constraint value {value} is not strictly negative")]
    DomainViolation { value: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("generator precondition failed: {0}")]
    Generator(String),

    #[error("node id {id} out of range for graph with {n} nodes")]
    NodeOutOfRange { id: usize, n: usize },

    #[error("invalid graph: {0}")]
    Graph(String),

    #[error("subproblem infeasible: {0}")]
    Infeasible(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("initialization failed: {0}")]
    Init(String),

    /// A leader's neighborhood update failed; `dump` holds the engine state.
    #[error("iteration {k}, leader {leader}: {source}\n{dump}")]
    StepFailed {
        k: usize,
        leader: usize,
        source: Box<Error>,
        dump: String,
    },

    #[error("finite-difference step left the domain of the primal function: {0}")]
    FiniteDifference(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
