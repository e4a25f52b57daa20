use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Pipeline stage an error originated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Params,
    Family,
    Polyroots,
    Verifier,
    Oracle,
    Report,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Params => "params",
            Stage::Family => "family",
            Stage::Polyroots => "polyroots",
            Stage::Verifier => "verifier",
            Stage::Oracle => "oracle",
            Stage::Report => "report",
        };
        f.write_str(name)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("internal consistency error: {0}")]
    InternalConsistency(String),

    #[error("numerical error: {message} (worst residual {worst_residual:e})")]
    Numerical { message: String, worst_residual: f64 },

    #[error("root methods disagree: {0}")]
    MethodDisagreement(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("theorem violation at root {root}: {message}")]
    TheoremViolation { root: Complex64, message: String },

    #[error("lemma violation at root {root}: {message}")]
    LemmaViolation { root: Complex64, message: String },

    #[error("verification failure: {message}")]
    VerificationFailure {
        message: String,
        root: Option<Complex64>,
    },

    #[error("oracle mismatch: {0}")]
    OracleMismatch(String),

    #[error("oracle inconclusive: found {found} clusters, expected {expected}")]
    OracleInconclusive { found: usize, expected: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("schema version {found} cannot be loaded by this build (expects {expected})")]
    SchemaMigration { found: u32, expected: u32 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("[{stage}] {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn at(self, stage: Stage) -> Self {
        match self {
            already @ Error::Stage { .. } => already,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }

    /// The error with any stage annotation stripped.
    pub fn root_cause(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root_cause(),
            other => other,
        }
    }

    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }

    /// True for outcomes that mean "the checked mathematics failed", as
    /// opposed to usage, numerical or internal trouble.
    pub fn is_verification_failure(&self) -> bool {
        matches!(
            self.root_cause(),
            Error::TheoremViolation { .. }
                | Error::LemmaViolation { .. }
                | Error::VerificationFailure { .. }
                | Error::OracleMismatch(_)
        )
    }
}

pub(crate) trait StageExt<T> {
    fn at(self, stage: Stage) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn at(self, stage: Stage) -> Result<T> {
        self.map_err(|e| e.at(stage))
    }
}
