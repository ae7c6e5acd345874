use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("relation `{relation}` has arity {expected}, found {found}")]
    ArityMismatch {
        relation: String,
        expected: usize,
        found: usize,
    },
    #[error("duplicate head variable `{0}`")]
    DuplicateHeadVariable(String),
    #[error("head variable `{0}` does not occur in the body")]
    UnboundHeadVariable(String),
    #[error("conflicting annotations for relation `{0}`")]
    ConflictingAnnotation(String),
    #[error("answer has {found} values but the query head has {expected}")]
    AnswerArity { expected: usize, found: usize },
    #[error("query must be Boolean here (head has {0} variables)")]
    NotBoolean(usize),

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: {message}")]
    Data { file: String, line: u64, message: String },
    #[error("annotation line {line}: {message}")]
    Annotation { line: usize, message: String },
    #[error("tuple {0} is flagged both endogenous and exogenous")]
    ConflictingFlags(String),
    #[error("why-no candidate {0} is already in the database")]
    CandidateOverlap(String),

    #[error("the tuple is not an answer: the query is false on the database")]
    NotAnAnswer,
    #[error("the tuple is an answer: the query already holds on the exogenous database")]
    IsAnAnswer,
    #[error("tuple {0} is not endogenous")]
    NotEndogenous(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("resource limit exceeded: {what}{}", best.map(|b| format!(" (best contingency size so far: {b})")).unwrap_or_default())]
    ResourceLimit { what: String, best: Option<usize> },
    #[error("datalog program references unknown relation `{0}`")]
    UnknownProgramRelation(String),
    #[error("classifier consistency failure: {0}")]
    ClassifierBug(String),
    #[error("witness failed replay: {0}")]
    InvalidWitness(String),
}

impl Error {
    pub(crate) fn syntax(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    pub(crate) fn limit(what: impl Into<String>) -> Self {
        Error::ResourceLimit {
            what: what.into(),
            best: None,
        }
    }
}
