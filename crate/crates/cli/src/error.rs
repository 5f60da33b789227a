use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("could not parse config: {0}")]
    Parse(String),

    #[error("invalid config at {key}: {message}")]
    Validation { key: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),

    #[error(transparent)]
    Model(#[from] levy_invest::Error),
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    key: Option<&'a str>,
    message: String,
}

#[derive(Serialize)]
struct ErrorDocument<'a> {
    error: ErrorBody<'a>,
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        use levy_invest::Error as E;
        match self {
            CliError::Parse(_) => "parse_error",
            CliError::Validation { .. } => "validation_error",
            CliError::Io(_) => "io_error",
            CliError::Model(e) => match e {
                E::Domain(_) => "domain_error",
                E::UnsupportedModel(_) => "unsupported_model",
                E::Construction(_) => "construction_error",
                E::BracketFailure { .. } => "bracket_failure",
                E::MonotonicityViolation { .. } => "monotonicity_violation",
                E::ConditionViolation(_) => "condition_violation",
            },
        }
    }

    /// Machine-readable rendering: `{"error": {"kind", "key"?, "message"}}`.
    pub fn to_json(&self) -> String {
        let key = match self {
            CliError::Validation { key, .. } => Some(key.as_str()),
            _ => None,
        };
        let doc = ErrorDocument {
            error: ErrorBody {
                kind: self.kind(),
                key,
                message: self.to_string(),
            },
        };
        serde_json::to_string(&doc).expect("error documents serialize")
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
