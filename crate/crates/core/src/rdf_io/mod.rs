//! Turtle-subset I/O and the structured JSON export.

mod parser;
mod writer;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

pub use parser::{parse_turtle, parse_turtle_named, Document, ParsedTriple};
pub use writer::{literal_text, write_triples};

use crate::store::{Graph, Provenance};
use crate::term::{well_known_iri, Literal, Node, Term};

/// Serializes `g`. Inferred triples are skipped unless `include_inferred`.
pub fn serialize_turtle(g: &Graph, prefixes: &BTreeMap<String, String>, include_inferred: bool) -> String {
    let triples = g
        .assertions()
        .into_iter()
        .filter(|a| include_inferred || !a.provenance.is_inferred())
        .map(|a| (a.subject, a.predicate, a.object));
    write_triples(triples, prefixes)
}

/// Prefix map of the well-known namespaces used by `g`.
pub fn default_prefixes(g: &Graph) -> BTreeMap<String, String> {
    let mut tags = BTreeSet::new();
    for a in g.assertions() {
        tags.insert(a.subject.namespace().to_string());
        tags.insert(a.predicate.namespace().to_string());
        match &a.object {
            Node::Term(t) => {
                tags.insert(t.namespace().to_string());
            }
            Node::Literal(Literal::Decimal { unit: Some(u), .. }) => {
                tags.insert(u.datatype().namespace().to_string());
            }
            Node::Literal(_) => {}
        }
    }
    tags.into_iter()
        .filter_map(|t| well_known_iri(&t).map(|iri| (t, iri.to_string())))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExportNode {
    pub id: String,
    pub label: String,
    pub types: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExportEdge {
    pub from: String,
    pub rel: String,
    pub to: String,
    pub provenance: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
}

/// Node and edge lists for graph viewers. Field order is the wire order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructuredExport {
    pub nodes: Vec<ExportNode>,
    pub edges: Vec<ExportEdge>,
    pub prefixes: BTreeMap<String, String>,
}

impl StructuredExport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("export serializes")
    }
}

pub fn export_structured(g: &Graph) -> StructuredExport {
    let schema = g.schema().clone();
    let mut nodes: BTreeMap<Term, BTreeSet<Term>> = BTreeMap::new();
    let mut edges = Vec::new();
    for a in g.assertions() {
        nodes.entry(a.subject.clone()).or_default();
        if let Node::Term(o) = &a.object {
            nodes.entry(o.clone()).or_default();
        }
        if a.predicate.is_rdf_type() {
            if let Node::Term(c) = &a.object {
                nodes.get_mut(&a.subject).expect("inserted").insert(c.clone());
            }
            continue;
        }
        let to = match &a.object {
            Node::Term(t) => t.to_string(),
            Node::Literal(l) => literal_text(l),
        };
        let (provenance, rule) = match &a.provenance {
            Provenance::Inferred(r) => ("inferred", Some(r.clone())),
            p => (p.label(), None),
        };
        edges.push(ExportEdge { from: a.subject.to_string(), rel: a.predicate.to_string(), to, provenance, rule });
    }
    let nodes = nodes
        .into_iter()
        .map(|(t, types)| {
            let label = schema
                .get_class(&t)
                .map(|c| c.label.clone())
                .or_else(|| schema.get_relation(&t).map(|r| r.label.clone()))
                .unwrap_or_else(|| t.local_name().to_string());
            ExportNode { id: t.to_string(), label, types: types.iter().map(Term::to_string).collect() }
        })
        .collect();
    StructuredExport { nodes, edges, prefixes: default_prefixes(g) }
}
