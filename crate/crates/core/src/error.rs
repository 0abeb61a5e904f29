use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::term::Term;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("invalid namespace prefix `{0}`")]
    InvalidNamespace(String),
    #[error("invalid local name `{0}` (expected [A-Za-z][A-Za-z0-9_]*)")]
    InvalidLocalName(String),
    #[error("`{0}` has no namespace prefix")]
    MissingPrefix(String),
    #[error("invalid decimal `{0}`")]
    InvalidDecimal(String),
    #[error("invalid literal `{0}`")]
    InvalidLiteral(String),
}

/// Parse failure with a 1-based position into the source text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub snippet: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)?;
        if !self.snippet.is_empty() {
            write!(f, " (near `{}`)", self.snippet)?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("unknown term {0}")]
    UnknownTerm(Term),
    #[error("{0} is not a relation")]
    NotARelation(Term),
    #[error("{0} is not a class")]
    NotAClass(Term),
    #[error("invalid schema: {0}")]
    Invalid(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StoreError {
    #[error("unknown predicate {0}")]
    UnknownPredicate(Term),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("cannot retract inferred triple ({0}); re-materialize instead")]
    CannotRetractInferred(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReasonerError {
    #[error("derived-triple limit of {limit} exceeded")]
    ResourceLimit { limit: usize },
    #[error("triple not found: {0}")]
    TripleNotFound(String),
    #[error("invalid rule: {0}")]
    InvalidRule(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("binding is not an answer of the query")]
    BindingNotAnAnswer,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FixtureError {
    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),
    #[error("fixture `{name}` is malformed: {message}")]
    Malformed { name: String, message: String },
}
