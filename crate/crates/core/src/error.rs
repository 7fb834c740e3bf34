use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("self-loop on node {0} rejected")]
    SelfLoop(String),
    #[error("node index {index} out of range for {node_count} nodes")]
    NodeOutOfRange { index: usize, node_count: usize },
    #[error("node {0} has no community label")]
    MissingLabel(String),
    #[error("node {0} appears more than once in the attribute file")]
    DuplicateAttribute(String),
    #[error("community {0} is empty")]
    EmptyCommunity(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("seed set is empty")]
    EmptySeedSet,
    #[error("graph has {edges} edges; exact enumeration supports at most {max}")]
    EnumerationBound { edges: usize, max: usize },
    #[error("node {0} is already in the seed set")]
    AlreadySeeded(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("budget {k} exceeds node count {node_count}")]
    BudgetExceedsNodes { k: usize, node_count: usize },
    #[error("no unselected node remains")]
    NoCandidates,
    #[error("pagerank did not converge within {0} iterations")]
    NonConvergence(usize),
    #[error("training pool is empty")]
    EmptyPool,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("method {0} exceeded its wall-clock budget")]
    TimedOut(String),
    #[error("unknown method `{name}`; valid methods: {valid}")]
    UnknownMethod { name: String, valid: String },
}

impl Error {
    /// Stable short tag used in machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
            Error::SelfLoop(_) => "self_loop",
            Error::NodeOutOfRange { .. } => "node_out_of_range",
            Error::MissingLabel(_) => "missing_label",
            Error::DuplicateAttribute(_) => "duplicate_attribute",
            Error::EmptyCommunity(_) => "empty_community",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::EmptySeedSet => "empty_seed_set",
            Error::EnumerationBound { .. } => "enumeration_bound",
            Error::AlreadySeeded(_) => "already_seeded",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::NonFinite(_) => "non_finite",
            Error::BudgetExceedsNodes { .. } => "budget_exceeds_nodes",
            Error::NoCandidates => "no_candidates",
            Error::NonConvergence(_) => "non_convergence",
            Error::EmptyPool => "empty_pool",
            Error::Checkpoint(_) => "checkpoint",
            Error::TimedOut(_) => "timed_out",
            Error::UnknownMethod { .. } => "unknown_method",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
