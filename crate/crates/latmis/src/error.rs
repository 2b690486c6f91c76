use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("vertex {vertex} out of range for graph with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("graph is not connected")]
    Disconnected,
    #[error("graph is not planar")]
    NotPlanar,
    #[error("degenerate drawing: {0}")]
    DegenerateDrawing(String),
    #[error("gadget overlap: edge {edge} takes part in more than one crossing")]
    GadgetOverlap { edge: usize },
    #[error("threshold J = {threshold} exceeds min |J_ik| = {min_coupling}")]
    ThresholdViolation { threshold: f64, min_coupling: f64 },
    #[error("coupling on ({0}, {1}) is not antiferromagnetic")]
    SignViolation(usize, usize),
    #[error("gauge violation on link ({0}, {1})")]
    GaugeViolation(usize, usize),
    #[error("cluster {0} is not a connected tree")]
    TreeViolation(usize),
    #[error("inter-cluster link ({0}, {1}) is effectively ferromagnetic under the propagated gauge")]
    InterClusterSignConflict(usize, usize),
    #[error("budget exceeded: {what} = {size} > {budget}")]
    BudgetExceeded { what: &'static str, size: usize, budget: usize },
    #[error("embedding overflow: {0}")]
    EmbeddingOverflow(String),
    #[error("pattern mismatch: {0}")]
    PatternMismatch(String),
    #[error("site {0} already deleted")]
    AlreadyDeleted(usize),
    #[error("certification patch of {size} spins exceeds budget {budget}")]
    PatchTooLarge { size: usize, budget: usize },
    #[error("routing failed for link ({0}, {1})")]
    RoutingFailed(usize, usize),
    #[error("eigensolver failed to converge at gamma = {0}")]
    ConvergenceFailure(f64),
    #[error("unitarity drift {0:e} exceeds bound")]
    StepTooLarge(f64),
    #[error("config error: {0}")]
    Config(String),
    #[error("missing artifact: {0}")]
    MissingArtifact(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable identifier.
    pub fn code(&self) -> &'static str {
        match self {
            Error::SelfLoop(_) => "SelfLoop",
            Error::DuplicateEdge(..) => "DuplicateEdge",
            Error::VertexOutOfRange { .. } => "VertexOutOfRange",
            Error::Parse(_) => "ParseError",
            Error::Disconnected => "Disconnected",
            Error::NotPlanar => "NotPlanar",
            Error::DegenerateDrawing(_) => "DegenerateDrawing",
            Error::GadgetOverlap { .. } => "GadgetOverlap",
            Error::ThresholdViolation { .. } => "ThresholdViolation",
            Error::SignViolation(..) => "SignViolation",
            Error::GaugeViolation(..) => "GaugeViolation",
            Error::TreeViolation(_) => "TreeViolation",
            Error::InterClusterSignConflict(..) => "InterClusterSignConflict",
            Error::BudgetExceeded { .. } => "BudgetExceeded",
            Error::EmbeddingOverflow(_) => "EmbeddingOverflow",
            Error::PatternMismatch(_) => "PatternMismatch",
            Error::AlreadyDeleted(_) => "AlreadyDeleted",
            Error::PatchTooLarge { .. } => "PatchTooLarge",
            Error::RoutingFailed(..) => "RoutingFailed",
            Error::ConvergenceFailure(_) => "ConvergenceFailure",
            Error::StepTooLarge(_) => "StepTooLarge",
            Error::Config(_) => "ConfigError",
            Error::MissingArtifact(_) => "MissingArtifact",
            Error::Io(_) => "IoError",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
