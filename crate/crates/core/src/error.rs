use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("dangling reference `{0}`")]
    DanglingReference(String),

    #[error("empty scope in `{0}`")]
    EmptyScope(String),

    #[error("malformed probability in `{id}`: {value}")]
    MalformedProbability { id: String, value: f64 },

    #[error("malformed graph document: {0}")]
    MalformedGraph(String),

    #[error("unknown builtin graph `{0}`")]
    UnknownBuiltin(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("missing outcome for test-driven relation `{0}`")]
    MissingOutcome(String),

    #[error("relation `{0}` is probabilistic; deterministic semantics required")]
    ProbabilisticRelation(String),

    #[error("wrong semantics: {0}")]
    WrongSemantics(String),

    #[error("no assignment satisfies the relations")]
    Infeasible,

    #[error("enumeration cap exceeded: size {size} > cap {cap}")]
    CapExceeded { size: usize, cap: usize },

    #[error("missing parameter: {0}")]
    MissingParameter(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("enumeration budget exceeded; verified kappa >= {partial_kappa}")]
    BudgetExceeded { partial_kappa: usize },

    #[error("reliability ranking does not cover module `{0}`")]
    IncompleteRanking(String),

    #[error("invalid scenario config: {0}")]
    Config(String),

    #[error("malformed dataset: {0}")]
    MalformedDataset(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable code, used by the CLI error envelope.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DuplicateId(_) => "duplicate_id",
            Error::DanglingReference(_) => "dangling_reference",
            Error::EmptyScope(_) => "empty_scope",
            Error::MalformedProbability { .. } => "malformed_probability",
            Error::MalformedGraph(_) => "malformed_graph",
            Error::UnknownBuiltin(_) => "unknown_builtin",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::MissingOutcome(_) => "missing_outcome",
            Error::ProbabilisticRelation(_) => "probabilistic_relation",
            Error::WrongSemantics(_) => "wrong_semantics",
            Error::Infeasible => "infeasible",
            Error::CapExceeded { .. } => "cap_exceeded",
            Error::MissingParameter(_) => "missing_parameter",
            Error::EmptyDataset => "empty_dataset",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::BudgetExceeded { .. } => "budget_exceeded",
            Error::IncompleteRanking(_) => "incomplete_ranking",
            Error::Config(_) => "invalid_config",
            Error::MalformedDataset(_) => "malformed_dataset",
            Error::Json(_) => "json",
        }
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, got })
    }
}
