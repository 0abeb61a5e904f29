//! Wire and persistence types.

use chrono::{DateTime, Utc};
use geofault_core::{
    BindingSet, ConsistencyReport, Decimal, ExplainedAnswer, Node, StructuredExport, Term, Unit, ValidationReport,
};
use image::ImageFormat;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MediaType {
    Png,
    Jpeg,
}

impl MediaType {
    /// Parses a `Content-Type` value, ignoring parameters.
    pub fn from_mime(mime: &str) -> Option<MediaType> {
        let essence = mime.split(';').next().unwrap_or_default().trim().to_ascii_lowercase();
        match essence.as_str() {
            "image/png" => Some(MediaType::Png),
            "image/jpeg" | "image/jpg" => Some(MediaType::Jpeg),
            _ => None,
        }
    }

    pub fn mime(self) -> &'static str {
        match self {
            MediaType::Png => "image/png",
            MediaType::Jpeg => "image/jpeg",
        }
    }

    pub(crate) fn format(self) -> ImageFormat {
        match self {
            MediaType::Png => ImageFormat::Png,
            MediaType::Jpeg => ImageFormat::Jpeg,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRef {
    pub id: String,
    pub media_type: MediaType,
    pub width: u32,
    pub height: u32,
    /// Lowercase hex SHA-256 of the stored bytes.
    pub checksum: String,
}

/// Pixel-space geometry of an annotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Region {
    Point { x: f64, y: f64 },
    Polygon { points: Vec<[f64; 2]> },
}

impl Region {
    pub fn vertices(&self) -> Vec<[f64; 2]> {
        match self {
            Region::Point { x, y } => vec![[*x, *y]],
            Region::Polygon { points } => points.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub id: String,
    pub image: String,
    pub region: Region,
    pub class: Term,
    pub instance: Term,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub from: Term,
    pub relation: Term,
    pub to: Node,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualityValue {
    pub kind: Term,
    pub magnitude: Decimal,
    pub unit: Unit,
}

/// A numeric quality attached to a bearer through a minted value node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualityRecord {
    pub id: String,
    pub bearer: Term,
    pub instance: Term,
    /// Class asserted on the value node; a dip band when the kind is a plain dip.
    pub class: Term,
    pub value: QualityValue,
}

/// Contents of `project.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectRecord {
    pub id: String,
    pub name: String,
    pub created_at: DateTime<Utc>,
    pub images: Vec<ImageRef>,
    pub annotations: Vec<Annotation>,
    pub links: Vec<Link>,
    pub qualities: Vec<QualityRecord>,
    /// Next value of the monotonic minting counter.
    pub next_serial: u64,
}

/// A project as returned by the API: its record plus the asserted graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Project {
    #[serde(flatten)]
    pub record: ProjectRecord,
    /// Asserted triples in Turtle.
    pub graph: String,
}

/// A relation as offered to annotators: no domain or range classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RelationOption {
    pub term: Term,
    pub label: String,
    /// True when the relation points at a literal value.
    pub literal: bool,
}

/// One class of the annotation menu. `parent` is omitted when the asserted
/// parent is not itself offered, so upper-ontology classes never appear.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VocabularyOption {
    pub term: Term,
    pub label: String,
    pub definition: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parent: Option<Term>,
    pub relations: Vec<RelationOption>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct CreateProject {
    pub name: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct AnnotationRequest {
    pub image: String,
    pub region: Region,
    /// Prefixed term or bare local name.
    pub class: String,
    #[serde(default)]
    pub label: Option<String>,
}

/// Endpoints are annotation ids, instance terms, or (for `to`) literals.
#[derive(Debug, Clone, Deserialize)]
pub struct SuggestRequest {
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct LinkRequest {
    pub from: String,
    pub relation: String,
    pub to: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct QualityRequest {
    /// Annotation id or instance term of the bearer.
    pub bearer: String,
    pub kind: String,
    pub magnitude: Decimal,
    pub unit: Unit,
}

#[derive(Debug, Clone, Deserialize)]
pub struct QueryRequest {
    pub query: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectStatus {
    pub consistency: ConsistencyReport,
    pub validation: ValidationReport,
    pub graph: StructuredExport,
}

#[derive(Debug, Clone, Serialize)]
pub struct QueryResponse {
    pub variables: Vec<String>,
    /// Every answer, duplicates kept unless the query is `DISTINCT`.
    pub bindings: Vec<BindingSet>,
    /// Distinct answers with one witnessing path each.
    pub answers: Vec<ExplainedAnswer>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ImportSummary {
    pub added: usize,
}
