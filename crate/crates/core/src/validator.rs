//! Closed-world shape validation.
//!
//! Each `some`, minimum and exact requirement of the schema becomes a
//! counting constraint on instances of its class. Counting happens after
//! materialization, so inferred types of fillers count.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::reasoner::counted_fillers;
use crate::schema::{AxiomKind, Schema};
use crate::store::Graph;
use crate::term::Term;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Constraint {
    /// Id of the axiom this constraint was compiled from.
    pub id: Term,
    pub relation: Term,
    pub filler: Term,
    pub min: u32,
    pub max: Option<u32>,
    pub severity: Severity,
    pub source_definition: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Shape {
    pub target_class: Term,
    pub constraints: Vec<Constraint>,
}

/// One shape per class carrying requirements, ordered by class.
pub fn compile_shapes(schema: &Schema) -> Vec<Shape> {
    let mut by_class: BTreeMap<Term, Vec<Constraint>> = BTreeMap::new();
    for ax in schema.requirement_axioms() {
        let (min, max) = match (ax.kind, ax.cardinality) {
            (AxiomKind::SomeValuesRequirement, _) => (1, None),
            (AxiomKind::MinQualifiedCardinality, Some(n)) => (n, None),
            (AxiomKind::ExactQualifiedCardinality, Some(n)) => (n, Some(n)),
            _ => continue,
        };
        by_class.entry(ax.operands[0].clone()).or_default().push(Constraint {
            id: ax.id.clone(),
            relation: ax.operands[1].clone(),
            filler: ax.operands[2].clone(),
            min,
            max,
            severity: Severity::Error,
            source_definition: ax.source_definition,
        });
    }
    by_class
        .into_iter()
        .map(|(target_class, mut constraints)| {
            constraints.sort_by(|a, b| a.id.cmp(&b.id));
            Shape { target_class, constraints }
        })
        .collect()
}

/// Field order is the wire order of the JSON report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub focus: Term,
    pub shape: Term,
    pub constraint: Term,
    pub found: u32,
    pub min: u32,
    pub max: Option<u32>,
    pub severity: Severity,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub conforms: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn errors(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| v.severity == Severity::Error)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn instances(g: &Graph, class: &Term) -> Vec<Term> {
    let Some(cid) = g.id_of_term(class) else { return Vec::new() };
    let mut v: Vec<Term> = g
        .scan(None, Some(g.type_id()), Some(cid))
        .filter_map(|t| g.node(t[0]).as_term().cloned())
        .collect();
    v.sort();
    v
}

pub fn validate(g: &Graph, shapes: &[Shape]) -> ValidationReport {
    let mut violations = Vec::new();
    for shape in shapes {
        for x in instances(g, &shape.target_class) {
            for c in &shape.constraints {
                let found = counted_fillers(g, &x, &c.relation, &c.filler).len() as u32;
                let message = if found < c.min {
                    let bound = if c.max == Some(c.min) { "exactly" } else { "at least" };
                    format!(
                        "{x} ({}) has {found} distinct {} filler(s) of type {}; {bound} {} required",
                        shape.target_class, c.relation, c.filler, c.min
                    )
                } else if c.max.is_some_and(|m| found > m) {
                    format!(
                        "{x} ({}) has {found} distinct {} filler(s) of type {}; at most {} allowed",
                        shape.target_class,
                        c.relation,
                        c.filler,
                        c.max.unwrap_or_default()
                    )
                } else {
                    continue;
                };
                violations.push(Violation {
                    focus: x.clone(),
                    shape: shape.target_class.clone(),
                    constraint: c.id.clone(),
                    found,
                    min: c.min,
                    max: c.max,
                    severity: c.severity,
                    message,
                });
            }
        }
    }
    violations.sort_by(|a, b| (&a.focus, &a.shape, &a.constraint).cmp(&(&b.focus, &b.shape, &b.constraint)));
    let conforms = !violations.iter().any(|v| v.severity == Severity::Error);
    ValidationReport { conforms, violations }
}
