use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The Vandermonde system of a polynomial fit is rank-deficient.
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("graph is not connected")]
    Disconnected,

    #[error("node set does not induce a connected subgraph: {0:?}")]
    NotConnected(Vec<usize>),

    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("invalid mixing matrix: {0}")]
    InvalidMixing(String),

    #[error("invalid scenario: {}", .0.join("; "))]
    InvalidScenario(Vec<String>),

    #[error("agent {0} has no interior gradient samples (every round clipped by the projection)")]
    NoInteriorSamples(usize),

    #[error("agent {0} belongs to the coalition")]
    CoalitionMember(usize),

    #[error("good agents do not form a connected subgraph once coalition edges are removed")]
    NotAdmissible,

    #[error("alternative objectives are inconsistent with the observations (residual {0:e})")]
    InconsistentAlternative(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
