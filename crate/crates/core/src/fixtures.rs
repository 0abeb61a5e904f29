//! Bundled datasets: schema export, use-case graphs, competency queries,
//! expected answers and mutation cases. Contents are compiled in.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::FixtureError;
use crate::query::{parse_query, BindingSet, Query};
use crate::rdf_io::{parse_turtle_named, Document};
use crate::schema::builtin_schema;
use crate::store::{Graph, Triple};
use crate::term::{Node, WELL_KNOWN};

/// Every bundled file, keyed by its path relative to the fixture root.
const FILES: &[(&str, &str)] = &[
    ("manifest.json", include_str!("../../../fixtures/manifest.json")),
    ("geofault.ttl", include_str!("../../../fixtures/geofault.ttl")),
    ("usecase1.ttl", include_str!("../../../fixtures/usecase1.ttl")),
    ("usecase2.ttl", include_str!("../../../fixtures/usecase2.ttl")),
    ("queries/cq1.gfq", include_str!("../../../fixtures/queries/cq1.gfq")),
    ("queries/cq2.gfq", include_str!("../../../fixtures/queries/cq2.gfq")),
    ("queries/cq3.gfq", include_str!("../../../fixtures/queries/cq3.gfq")),
    ("queries/cq4.gfq", include_str!("../../../fixtures/queries/cq4.gfq")),
    ("queries/cq5.gfq", include_str!("../../../fixtures/queries/cq5.gfq")),
    ("queries/cq6.gfq", include_str!("../../../fixtures/queries/cq6.gfq")),
    ("queries/cq7.gfq", include_str!("../../../fixtures/queries/cq7.gfq")),
    ("queries/cq8.gfq", include_str!("../../../fixtures/queries/cq8.gfq")),
    ("expected/cq1.json", include_str!("../../../fixtures/expected/cq1.json")),
    ("expected/cq2.json", include_str!("../../../fixtures/expected/cq2.json")),
    ("expected/cq3.json", include_str!("../../../fixtures/expected/cq3.json")),
    ("expected/cq4.json", include_str!("../../../fixtures/expected/cq4.json")),
    ("expected/cq5.json", include_str!("../../../fixtures/expected/cq5.json")),
    ("expected/cq6.json", include_str!("../../../fixtures/expected/cq6.json")),
    ("expected/cq7.json", include_str!("../../../fixtures/expected/cq7.json")),
    ("expected/cq8.json", include_str!("../../../fixtures/expected/cq8.json")),
    ("mutations/system_below_min.json", include_str!("../../../fixtures/mutations/system_below_min.json")),
    ("mutations/separation_third_wall.json", include_str!("../../../fixtures/mutations/separation_third_wall.json")),
    ("mutations/zone_and_surface.json", include_str!("../../../fixtures/mutations/zone_and_surface.json")),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FixtureKind {
    Schema,
    Instances,
    Query,
    Mutation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub path: String,
    pub kind: FixtureKind,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<String>,
    /// Instance graph a query or mutation runs against.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    /// Lowercase hex SHA-256 of the file bytes.
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureManifest {
    pub entries: Vec<ManifestEntry>,
}

impl FixtureManifest {
    pub fn entry(&self, name: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn of_kind(&self, kind: FixtureKind) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.kind == kind)
    }
}

/// Frozen answer set of a competency query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedAnswers {
    pub query: String,
    /// `published` for answers stated with the use cases, `dataset` for answers
    /// computed from the bundled graph.
    pub source: String,
    pub bindings: Vec<BTreeMap<String, Node>>,
}

impl ExpectedAnswers {
    pub fn binding_sets(&self) -> Vec<BindingSet> {
        let mut v: Vec<BindingSet> = self.bindings.iter().map(|b| BindingSet { bindings: b.clone() }).collect();
        v.sort();
        v
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutationExpectation {
    /// `validation` or `consistency`.
    pub check: String,
    /// Constraint local name for validation, clash kind for consistency.
    pub kind: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutationSpec {
    pub description: String,
    pub base: String,
    /// Turtle snippets; the well-known prefixes are predeclared.
    pub retract: String,
    pub assert: String,
    pub expect: MutationExpectation,
}

#[derive(Debug, Clone)]
pub struct Mutation {
    pub name: String,
    pub spec: MutationSpec,
    pub retract: Vec<Triple>,
    pub assert: Vec<Triple>,
}

impl Mutation {
    /// The base graph with the mutation applied, not yet materialized.
    pub fn apply(&self) -> Result<Graph, FixtureError> {
        let mut g = load_graph(&self.spec.base)?;
        let malformed = |e: String| FixtureError::Malformed { name: self.name.clone(), message: e };
        for t in &self.retract {
            if !g.retract(t).map_err(|e| malformed(e.to_string()))? {
                return Err(malformed(format!("{t} is not in {}", self.spec.base)));
            }
        }
        for t in &self.assert {
            g.insert(t.subject.clone(), t.predicate.clone(), t.object.clone()).map_err(|e| malformed(e.to_string()))?;
        }
        Ok(g)
    }
}

#[derive(Debug, Clone)]
pub enum Fixture {
    Schema(Document),
    Instances(Document),
    Query { query: Query, text: String, expected: ExpectedAnswers },
    Mutation(Mutation),
}

/// Raw text of a bundled file.
pub fn fixture_text(path: &str) -> Option<&'static str> {
    FILES.iter().find(|(p, _)| *p == path).map(|(_, text)| *text)
}

pub fn bundled_paths() -> impl Iterator<Item = &'static str> {
    FILES.iter().map(|(p, _)| *p)
}

pub fn manifest() -> &'static FixtureManifest {
    static MANIFEST: OnceLock<FixtureManifest> = OnceLock::new();
    MANIFEST.get_or_init(|| {
        serde_json::from_str(fixture_text("manifest.json").expect("manifest is bundled")).expect("bundled manifest parses")
    })
}

fn entry(name: &str) -> Result<(&'static ManifestEntry, &'static str), FixtureError> {
    let e = manifest().entry(name).ok_or_else(|| FixtureError::UnknownFixture(name.to_string()))?;
    let text = fixture_text(&e.path).ok_or_else(|| FixtureError::Malformed {
        name: name.to_string(),
        message: format!("{} is not bundled", e.path),
    })?;
    Ok((e, text))
}

fn prefixed(snippet: &str) -> String {
    let mut s: String = WELL_KNOWN.iter().map(|ns| format!("@prefix {}: <{}> .\n", ns.prefix, ns.iri)).collect();
    s.push_str(snippet);
    s
}

fn snippet_triples(name: &str, snippet: &str) -> Result<Vec<Triple>, FixtureError> {
    let doc = parse_turtle_named(&prefixed(snippet), name)
        .map_err(|e| FixtureError::Malformed { name: name.to_string(), message: e.to_string() })?;
    Ok(doc.triples.into_iter().map(|t| Triple::new(t.subject, t.predicate, t.object)).collect())
}

pub fn load_fixture(name: &str) -> Result<Fixture, FixtureError> {
    let (e, text) = entry(name)?;
    let malformed = |message: String| FixtureError::Malformed { name: name.to_string(), message };
    match e.kind {
        FixtureKind::Schema | FixtureKind::Instances => {
            let doc = parse_turtle_named(text, &e.path).map_err(|err| malformed(err.to_string()))?;
            Ok(if e.kind == FixtureKind::Schema { Fixture::Schema(doc) } else { Fixture::Instances(doc) })
        }
        FixtureKind::Query => {
            let query = parse_query(text).map_err(|err| malformed(err.to_string()))?;
            let path = e.expected.as_deref().ok_or_else(|| malformed("query has no expected answers".into()))?;
            let raw = fixture_text(path).ok_or_else(|| malformed(format!("{path} is not bundled")))?;
            let expected = serde_json::from_str(raw).map_err(|err| malformed(err.to_string()))?;
            Ok(Fixture::Query { query, text: text.to_string(), expected })
        }
        FixtureKind::Mutation => {
            let spec: MutationSpec = serde_json::from_str(text).map_err(|err| malformed(err.to_string()))?;
            let retract = snippet_triples(name, &spec.retract)?;
            let assert = snippet_triples(name, &spec.assert)?;
            Ok(Fixture::Mutation(Mutation { name: name.to_string(), spec, retract, assert }))
        }
    }
}

/// An instance fixture loaded into a graph over the builtin schema.
pub fn load_graph(name: &str) -> Result<Graph, FixtureError> {
    match load_fixture(name)? {
        Fixture::Instances(doc) => Graph::from_document(builtin_schema(), &doc)
            .map_err(|e| FixtureError::Malformed { name: name.to_string(), message: e.to_string() }),
        _ => Err(FixtureError::Malformed { name: name.to_string(), message: "not an instance graph".into() }),
    }
}
