use geofault_core::{ParseError, ReasonerError, StoreError};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("no route for `{0}`")]
    RouteNotFound(String),
    #[error("project `{0}` not found")]
    ProjectNotFound(String),
    #[error("image `{0}` not found")]
    ImageNotFound(String),
    #[error("annotation or instance `{0}` not found")]
    AnnotationNotFound(String),
    #[error("unsupported media type `{0}` (expected image/png or image/jpeg)")]
    UnsupportedMediaType(String),
    #[error("image does not decode: {0}")]
    CorruptImage(String),
    #[error("unknown term `{0}`")]
    UnknownTerm(String),
    #[error("{0} is not offered for annotation")]
    NotUserFacingClass(String),
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("region out of bounds: {0}")]
    RegionOutOfBounds(String),
    #[error("inadmissible relation: {0}")]
    InadmissibleRelation(String),
    #[error("value out of range: {0}")]
    ValueOutOfRange(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Reasoner(#[from] ReasonerError),
    #[error("storage failure: {0}")]
    Io(#[from] std::io::Error),
}

/// Line and column of a parse failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

/// Wire body of a failed request: `{"error": {...}}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErrorBody {
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub position: Option<Position>,
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::RouteNotFound(_) => "not_found",
            ServiceError::ProjectNotFound(_) => "project_not_found",
            ServiceError::ImageNotFound(_) => "image_not_found",
            ServiceError::AnnotationNotFound(_) => "annotation_not_found",
            ServiceError::UnsupportedMediaType(_) => "unsupported_media_type",
            ServiceError::CorruptImage(_) => "corrupt_image",
            ServiceError::UnknownTerm(_) => "unknown_term",
            ServiceError::NotUserFacingClass(_) => "not_user_facing_class",
            ServiceError::InvalidRegion(_) => "invalid_region",
            ServiceError::RegionOutOfBounds(_) => "region_out_of_bounds",
            ServiceError::InadmissibleRelation(_) => "inadmissible_relation",
            ServiceError::ValueOutOfRange(_) => "value_out_of_range",
            ServiceError::InvalidRequest(_) => "invalid_request",
            ServiceError::Parse(_) => "parse_error",
            ServiceError::Store(_) => "invalid_triple",
            ServiceError::Reasoner(_) => "reasoner_limit",
            ServiceError::Io(_) => "storage_error",
        }
    }

    /// HTTP status code for this error.
    pub fn status(&self) -> u16 {
        match self {
            ServiceError::RouteNotFound(_)
            | ServiceError::ProjectNotFound(_)
            | ServiceError::ImageNotFound(_)
            | ServiceError::AnnotationNotFound(_) => 404,
            ServiceError::UnsupportedMediaType(_) => 415,
            ServiceError::Parse(_) | ServiceError::InvalidRequest(_) => 400,
            ServiceError::Io(_) => 500,
            _ => 422,
        }
    }

    pub fn body(&self) -> ErrorBody {
        let position = match self {
            ServiceError::Parse(e) => Some(Position { line: e.line, column: e.column }),
            _ => None,
        };
        ErrorBody { code: self.code(), message: self.to_string(), position }
    }
}
