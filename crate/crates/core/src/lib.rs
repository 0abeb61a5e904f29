//! GeoFault knowledge-graph engine.
//!
//! Load the fault ontology, store instance graphs with provenance, materialize
//! entailments, check consistency (open world), validate shapes (closed
//! world), and answer conjunctive queries with path explanations.

pub mod error;
pub mod fixtures;
pub mod query;
pub mod rdf_io;
pub mod reasoner;
pub mod schema;
pub mod store;
pub mod synthetic;
pub mod term;
pub mod validator;

pub use error::{FixtureError, ParseError, QueryError, ReasonerError, SchemaError, StoreError, TermError};
pub use fixtures::{load_fixture, load_graph, manifest, Fixture, FixtureKind, FixtureManifest};
pub use query::{
    evaluate, evaluate_explained, explain_answer, parse_query, parse_query_with, BindingSet, ExplainedAnswer,
    PathExplanation, Query,
};
pub use rdf_io::{
    default_prefixes, export_structured, parse_turtle, parse_turtle_named, serialize_turtle, Document, StructuredExport,
};
pub use reasoner::{
    check_consistency, compile_rules, explain, materialize, materialize_in_place, Clash, ClashKind,
    ConsistencyReport, Derivation, MaterializeOptions, Rule,
};
pub use schema::{builtin_schema, load_builtin_schema, ClassDef, Range, RelationDef, Schema, VocabularyEntry};
pub use store::{Assertion, Graph, PatternTerm, Provenance, Snapshot, Triple, TriplePattern};
pub use term::{Decimal, Literal, Node, Term, Unit};
pub use validator::{compile_shapes, validate, Severity, Shape, ValidationReport, Violation};
