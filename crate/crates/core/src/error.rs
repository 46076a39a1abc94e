use thiserror::Error;

pub type Result<T, E = JlcmError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum JlcmError {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("subject {subject}: non-numeric value `{value}` in column `{column}`")]
    NonNumeric {
        subject: String,
        column: String,
        value: String,
    },
    #[error("subject {subject}: unknown level `{level}` for factor `{column}`")]
    UnknownLevel {
        subject: String,
        column: String,
        level: String,
    },
    #[error("subject {0} has no observations")]
    EmptySubject(String),
    #[error("subject {subject}: follow-up time {followup} precedes last observation at {last_obs}")]
    FollowupBeforeObservation {
        subject: String,
        followup: f64,
        last_obs: f64,
    },
    #[error("subject {subject}: observation times are not strictly increasing")]
    UnorderedTimes { subject: String },
    #[error("subject {subject}: {reason}")]
    InvalidSurvival { subject: String, reason: String },
    #[error("subject {subject}: non-finite value in {field}")]
    NonFinite { subject: String, field: String },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("nonpositive variance: {0}")]
    NonpositiveVariance(String),
    #[error("nonpositive baseline hazard: {0}")]
    NonpositiveHazard(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("chain diverged at iteration {iteration}: non-finite log-likelihood")]
    Divergence { iteration: usize },
    #[error("chain holds no stored draws")]
    EmptyChain,
    #[error("undefined AUC: {0}")]
    UndefinedAuc(String),
    #[error("degenerate landmark for subject {subject}: survival at t={landmark} is zero")]
    DegenerateLandmark { subject: String, landmark: f64 },
    #[error("permutation search over {0} classes exceeds the limit of 6")]
    TooManyClasses(usize),
    #[error("{} validation error(s); first: {}", .0.len(), .0.first().map(|e| e.to_string()).unwrap_or_default())]
    Validation(Vec<JlcmError>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl JlcmError {
    /// Short machine-readable category, stable across releases.
    pub fn category(&self) -> &'static str {
        use JlcmError::*;
        match self {
            MissingColumn(_)
            | NonNumeric { .. }
            | UnknownLevel { .. }
            | EmptySubject(_)
            | FollowupBeforeObservation { .. }
            | UnorderedTimes { .. }
            | InvalidSurvival { .. }
            | NonFinite { .. } => "data",
            Dimension(_) => "dimension",
            NonpositiveVariance(_) | NonpositiveHazard(_) | InvalidParameter(_) => "parameter",
            Config(_) => "config",
            Divergence { .. } => "divergence",
            EmptyChain => "chain",
            UndefinedAuc(_) | DegenerateLandmark { .. } | TooManyClasses(_) => "inference",
            Validation(errs) => errs.first().map(|e| e.category()).unwrap_or("data"),
            Io(_) | Csv(_) => "io",
        }
    }
}
