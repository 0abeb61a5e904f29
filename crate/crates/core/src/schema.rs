//! The ontology schema: classes, relation profiles and axioms.
//!
//! Schemas are loaded from Turtle using a small reserved vocabulary
//! (`owl:Class`, `rdfs:subClassOf`, `owl:inverseOf`, characteristic types,
//! and `geofault-meta:` reified axioms). The bundled schema lives in
//! `fixtures/geofault.ttl` and is compiled into the library.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::Serialize;

use crate::error::SchemaError;
use crate::rdf_io::{parse_turtle_named, Document};
use crate::term::{Literal, Node, Term, BFO, GEOCORE, GEOFAULT, META, OWL, RDFS, SKOS};

pub const BUILTIN_SCHEMA_TTL: &str = include_str!("../../../fixtures/geofault.ttl");

/// Root of every class chain.
pub fn root_class() -> Term {
    Term::bfo("Entity")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassDef {
    pub term: Term,
    /// Single asserted parent; `None` only for the root.
    pub parent: Option<Term>,
    pub label: String,
    pub definition_text: String,
    pub user_facing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Characteristic {
    Transitive,
    Symmetric,
    Asymmetric,
    Irreflexive,
    Functional,
}

impl Characteristic {
    pub const ALL: [Characteristic; 5] = [
        Characteristic::Transitive,
        Characteristic::Symmetric,
        Characteristic::Asymmetric,
        Characteristic::Irreflexive,
        Characteristic::Functional,
    ];

    fn owl_local(self) -> &'static str {
        match self {
            Characteristic::Transitive => "TransitiveProperty",
            Characteristic::Symmetric => "SymmetricProperty",
            Characteristic::Asymmetric => "AsymmetricProperty",
            Characteristic::Irreflexive => "IrreflexiveProperty",
            Characteristic::Functional => "FunctionalProperty",
        }
    }
}

/// What a relation points at.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "class")]
pub enum Range {
    Class(Term),
    Literal,
}

impl Range {
    pub fn class(&self) -> Option<&Term> {
        match self {
            Range::Class(t) => Some(t),
            Range::Literal => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RelationDef {
    pub term: Term,
    pub label: String,
    pub domain: Term,
    pub range: Range,
    pub characteristics: BTreeSet<Characteristic>,
    pub inverse: Option<Term>,
    pub super_relation: Option<Term>,
}

impl RelationDef {
    pub fn has(&self, c: Characteristic) -> bool {
        self.characteristics.contains(&c)
    }

    pub fn is_literal_valued(&self) -> bool {
        self.range == Range::Literal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum AxiomKind {
    SubClassOf,
    DisjointClasses,
    SomeValuesRequirement,
    MinQualifiedCardinality,
    ExactQualifiedCardinality,
    DomainConstraint,
    RangeConstraint,
}

impl AxiomKind {
    fn from_meta(local: &str) -> Option<AxiomKind> {
        Some(match local {
            "SomeValuesRequirement" => AxiomKind::SomeValuesRequirement,
            "MinQualifiedCardinality" => AxiomKind::MinQualifiedCardinality,
            "ExactQualifiedCardinality" => AxiomKind::ExactQualifiedCardinality,
            "DisjointClasses" => AxiomKind::DisjointClasses,
            _ => return None,
        })
    }
}

impl fmt::Display for AxiomKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Axiom {
    pub id: Term,
    pub kind: AxiomKind,
    /// SubClassOf: [sub, super]. Disjoint: members. Requirements and
    /// cardinalities: [class, relation, filler]. Domain/Range: [relation, class].
    pub operands: Vec<Term>,
    pub cardinality: Option<u32>,
    /// Number of the textual definition this axiom encodes, when it has one.
    pub source_definition: Option<u32>,
}

#[derive(Debug, Clone)]
pub struct Schema {
    pub version: String,
    classes: BTreeMap<Term, ClassDef>,
    relations: BTreeMap<Term, RelationDef>,
    axioms: Vec<Axiom>,
    by_local: HashMap<String, Term>,
    ancestors: HashMap<Term, Vec<Term>>,
}

impl PartialEq for Schema {
    fn eq(&self, other: &Self) -> bool {
        self.version == other.version
            && self.classes == other.classes
            && self.relations == other.relations
            && self.axioms == other.axioms
    }
}

impl Eq for Schema {}

/// A user-facing class and the relations whose domain admits it.
#[derive(Debug, Clone, Serialize)]
pub struct VocabularyEntry {
    pub class: ClassDef,
    pub relations: Vec<RelationDef>,
}

static BUILTIN: OnceLock<Arc<Schema>> = OnceLock::new();

/// The bundled GeoFault, GeoCore and BFO-fragment schema.
pub fn load_builtin_schema() -> Schema {
    (*builtin_schema()).clone()
}

/// Shared handle to the bundled schema, parsed once per process.
pub fn builtin_schema() -> Arc<Schema> {
    BUILTIN
        .get_or_init(|| {
            let schema = Schema::from_turtle(BUILTIN_SCHEMA_TTL, "geofault.ttl")
                .unwrap_or_else(|e| panic!("bundled schema is corrupt: {e}"));
            Arc::new(schema)
        })
        .clone()
}

impl Schema {
    /// A schema with no classes except the root and no relations.
    pub fn empty() -> Schema {
        let root = root_class();
        let mut classes = BTreeMap::new();
        classes.insert(
            root.clone(),
            ClassDef {
                term: root,
                parent: None,
                label: "entity".into(),
                definition_text: String::new(),
                user_facing: false,
            },
        );
        Schema::assemble("0".into(), classes, BTreeMap::new(), Vec::new())
            .expect("empty schema is valid")
    }

    pub fn from_turtle(text: &str, source_name: &str) -> Result<Schema, SchemaError> {
        let doc = parse_turtle_named(text, source_name)?;
        Schema::from_document(&doc)
    }

    pub fn from_document(doc: &Document) -> Result<Schema, SchemaError> {
        Loader::default().load(doc)
    }

    fn assemble(
        version: String,
        classes: BTreeMap<Term, ClassDef>,
        relations: BTreeMap<Term, RelationDef>,
        explicit: Vec<Axiom>,
    ) -> Result<Schema, SchemaError> {
        let mut by_local = HashMap::new();
        for t in classes.keys().chain(relations.keys()) {
            if let Some(prev) = by_local.insert(t.local_name().to_string(), t.clone()) {
                return Err(SchemaError::Invalid(format!(
                    "local name `{}` used by both {prev} and {t}",
                    t.local_name()
                )));
            }
        }
        let mut schema = Schema {
            version,
            classes,
            relations,
            axioms: Vec::new(),
            by_local,
            ancestors: HashMap::new(),
        };
        schema.compute_ancestors()?;
        schema.check_relations()?;
        let mut axioms = schema.generated_axioms();
        axioms.extend(explicit);
        schema.axioms = axioms;
        schema.check_axioms()?;
        Ok(schema)
    }

    fn compute_ancestors(&mut self) -> Result<(), SchemaError> {
        let root = root_class();
        if !self.classes.contains_key(&root) {
            return Err(SchemaError::Invalid("missing root class bfo:Entity".into()));
        }
        for (t, def) in &self.classes {
            if def.parent.is_none() && *t != root {
                return Err(SchemaError::Invalid(format!("class {t} has no parent")));
            }
            if def.parent.is_some() && *t == root {
                return Err(SchemaError::Invalid("the root class cannot have a parent".into()));
            }
        }
        let mut ancestors = HashMap::new();
        for t in self.classes.keys() {
            let mut chain = vec![t.clone()];
            let mut cur = t;
            while let Some(p) = self.classes[cur].parent.as_ref() {
                if !self.classes.contains_key(p) {
                    return Err(SchemaError::Invalid(format!("class {cur} has unknown parent {p}")));
                }
                if chain.contains(p) || chain.len() > self.classes.len() {
                    return Err(SchemaError::Invalid(format!("subclass cycle through {p}")));
                }
                chain.push(p.clone());
                cur = p;
            }
            ancestors.insert(t.clone(), chain);
        }
        self.ancestors = ancestors;
        Ok(())
    }

    fn check_relations(&self) -> Result<(), SchemaError> {
        for r in self.relations.values() {
            let class_ok = |t: &Term| self.classes.contains_key(t);
            if !class_ok(&r.domain) {
                return Err(SchemaError::Invalid(format!("{}: unknown domain {}", r.term, r.domain)));
            }
            if let Range::Class(c) = &r.range {
                if !class_ok(c) {
                    return Err(SchemaError::Invalid(format!("{}: unknown range {c}", r.term)));
                }
            }
            if r.has(Characteristic::Symmetric) && r.has(Characteristic::Asymmetric) {
                return Err(SchemaError::Invalid(format!("{} is both symmetric and asymmetric", r.term)));
            }
            if let Some(inv) = &r.inverse {
                let other = self
                    .relations
                    .get(inv)
                    .ok_or_else(|| SchemaError::Invalid(format!("{}: unknown inverse {inv}", r.term)))?;
                if other.inverse.as_ref() != Some(&r.term) {
                    return Err(SchemaError::Invalid(format!("inverse of {} is not involutive", r.term)));
                }
                if r.is_literal_valued() || other.is_literal_valued() {
                    return Err(SchemaError::Invalid(format!("literal relation {} cannot have an inverse", r.term)));
                }
            }
            if r.is_literal_valued()
                && (r.has(Characteristic::Transitive) || r.has(Characteristic::Symmetric))
            {
                return Err(SchemaError::Invalid(format!("literal relation {} cannot be transitive or symmetric", r.term)));
            }
            let mut seen = vec![r.term.clone()];
            let mut cur = r;
            while let Some(sup) = &cur.super_relation {
                let next = self
                    .relations
                    .get(sup)
                    .ok_or_else(|| SchemaError::Invalid(format!("{}: unknown super relation {sup}", cur.term)))?;
                if seen.contains(sup) {
                    return Err(SchemaError::Invalid(format!("super relation cycle through {sup}")));
                }
                if next.is_literal_valued() != r.is_literal_valued() {
                    return Err(SchemaError::Invalid(format!("{} and {sup} differ in range kind", cur.term)));
                }
                seen.push(sup.clone());
                cur = next;
            }
        }
        Ok(())
    }

    fn generated_axioms(&self) -> Vec<Axiom> {
        let mut out = Vec::new();
        for c in self.classes.values() {
            if let Some(p) = &c.parent {
                out.push(Axiom {
                    id: Term::known(META, &format!("subclass_{}", c.term.local_name())),
                    kind: AxiomKind::SubClassOf,
                    operands: vec![c.term.clone(), p.clone()],
                    cardinality: None,
                    source_definition: None,
                });
            }
        }
        for r in self.relations.values() {
            out.push(Axiom {
                id: Term::known(META, &format!("domain_{}", r.term.local_name())),
                kind: AxiomKind::DomainConstraint,
                operands: vec![r.term.clone(), r.domain.clone()],
                cardinality: None,
                source_definition: None,
            });
            if let Range::Class(c) = &r.range {
                out.push(Axiom {
                    id: Term::known(META, &format!("range_{}", r.term.local_name())),
                    kind: AxiomKind::RangeConstraint,
                    operands: vec![r.term.clone(), c.clone()],
                    cardinality: None,
                    source_definition: None,
                });
            }
        }
        out
    }

    fn check_axioms(&self) -> Result<(), SchemaError> {
        let mut ids = BTreeSet::new();
        for ax in &self.axioms {
            if !ids.insert(&ax.id) {
                return Err(SchemaError::Invalid(format!("duplicate axiom id {}", ax.id)));
            }
            let bad = |m: &str| Err(SchemaError::Invalid(format!("axiom {}: {m}", ax.id)));
            match ax.kind {
                AxiomKind::DisjointClasses => {
                    let distinct: BTreeSet<_> = ax.operands.iter().collect();
                    if distinct.len() < 2 || distinct.len() != ax.operands.len() {
                        return bad("needs at least two distinct members");
                    }
                    for c in &ax.operands {
                        self.class(c)?;
                    }
                }
                AxiomKind::SomeValuesRequirement
                | AxiomKind::MinQualifiedCardinality
                | AxiomKind::ExactQualifiedCardinality => {
                    if ax.operands.len() != 3 {
                        return bad("needs class, relation and filler");
                    }
                    self.class(&ax.operands[0])?;
                    let r = self.relation_profile(&ax.operands[1])?;
                    self.class(&ax.operands[2])?;
                    if r.is_literal_valued() {
                        return bad("relation must be object-valued");
                    }
                    match (ax.kind, ax.cardinality) {
                        (AxiomKind::SomeValuesRequirement, None) => {}
                        (AxiomKind::SomeValuesRequirement, Some(_)) => return bad("unexpected cardinality"),
                        (_, Some(n)) if n >= 1 => {}
                        _ => return bad("cardinality must be at least 1"),
                    }
                }
                AxiomKind::SubClassOf | AxiomKind::DomainConstraint | AxiomKind::RangeConstraint => {}
            }
            if let Some(d) = ax.source_definition {
                if !(1..=30).contains(&d) {
                    return bad("definition number out of range");
                }
            }
        }
        Ok(())
    }

    pub fn classes(&self) -> impl Iterator<Item = &ClassDef> {
        self.classes.values()
    }

    pub fn relations(&self) -> impl Iterator<Item = &RelationDef> {
        self.relations.values()
    }

    pub fn axioms(&self) -> &[Axiom] {
        &self.axioms
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn class(&self, t: &Term) -> Result<&ClassDef, SchemaError> {
        self.classes.get(t).ok_or_else(|| {
            if self.relations.contains_key(t) {
                SchemaError::NotAClass(t.clone())
            } else {
                SchemaError::UnknownTerm(t.clone())
            }
        })
    }

    pub fn get_class(&self, t: &Term) -> Option<&ClassDef> {
        self.classes.get(t)
    }

    pub fn get_relation(&self, t: &Term) -> Option<&RelationDef> {
        self.relations.get(t)
    }

    pub fn is_class(&self, t: &Term) -> bool {
        self.classes.contains_key(t)
    }

    pub fn is_relation(&self, t: &Term) -> bool {
        self.relations.contains_key(t)
    }

    /// Resolves a bare local name against every class and relation.
    pub fn resolve_local(&self, local: &str) -> Option<&Term> {
        self.by_local.get(local)
    }

    /// Ancestors of `c` including `c`, ordered child to root.
    pub fn subclass_closure(&self, c: &Term) -> Result<Vec<Term>, SchemaError> {
        self.ancestors.get(c).cloned().ok_or_else(|| self.class(c).err().expect("missing class"))
    }

    pub fn ancestors(&self, c: &Term) -> &[Term] {
        self.ancestors.get(c).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_subclass_of(&self, c: &Term, d: &Term) -> bool {
        self.ancestors(c).contains(d)
    }

    pub fn relation_profile(&self, r: &Term) -> Result<&RelationDef, SchemaError> {
        self.relations.get(r).ok_or_else(|| {
            if self.classes.contains_key(r) {
                SchemaError::NotARelation(r.clone())
            } else {
                SchemaError::UnknownTerm(r.clone())
            }
        })
    }

    /// User-facing classes with the relations whose domain admits them.
    pub fn annotation_vocabulary(&self) -> Vec<VocabularyEntry> {
        let mut entries: Vec<VocabularyEntry> = self
            .classes
            .values()
            .filter(|c| c.user_facing)
            .map(|c| {
                let mut relations: Vec<RelationDef> = self
                    .relations
                    .values()
                    .filter(|r| self.is_subclass_of(&c.term, &r.domain))
                    .cloned()
                    .collect();
                relations.sort_by(|a, b| a.label.cmp(&b.label).then_with(|| a.term.cmp(&b.term)));
                VocabularyEntry { class: c.clone(), relations }
            })
            .collect();
        entries.sort_by(|a, b| {
            a.class.label.to_lowercase().cmp(&b.class.label.to_lowercase()).then_with(|| a.class.term.cmp(&b.class.term))
        });
        entries
    }

    /// Axioms of the three definitional kinds, in schema order.
    pub fn requirement_axioms(&self) -> impl Iterator<Item = &Axiom> {
        self.axioms.iter().filter(|a| {
            matches!(
                a.kind,
                AxiomKind::SomeValuesRequirement
                    | AxiomKind::MinQualifiedCardinality
                    | AxiomKind::ExactQualifiedCardinality
            )
        })
    }

    /// Serializes the schema back to its Turtle encoding.
    pub fn to_turtle(&self) -> String {
        use crate::rdf_io::write_triples;
        let mut triples = Vec::new();
        let t = |ns: &str, l: &str| Term::known(ns, l);
        let ty = Term::rdf_type();
        let lit = |s: &str| Node::Literal(Literal::String(s.to_string()));
        let onto = t(META, "GeoFaultSchema");
        triples.push((onto.clone(), ty.clone(), Node::Term(t(OWL, "Ontology"))));
        triples.push((onto, t(OWL, "versionInfo"), lit(&self.version)));
        for c in self.classes.values() {
            triples.push((c.term.clone(), ty.clone(), Node::Term(t(OWL, "Class"))));
            if let Some(p) = &c.parent {
                triples.push((c.term.clone(), t(RDFS, "subClassOf"), Node::Term(p.clone())));
            }
            triples.push((c.term.clone(), t(RDFS, "label"), lit(&c.label)));
            if !c.definition_text.is_empty() {
                triples.push((c.term.clone(), t(SKOS, "definition"), lit(&c.definition_text)));
            }
        }
        for r in self.relations.values() {
            let kind = if r.is_literal_valued() { "DatatypeProperty" } else { "ObjectProperty" };
            triples.push((r.term.clone(), ty.clone(), Node::Term(t(OWL, kind))));
            for ch in &r.characteristics {
                triples.push((r.term.clone(), ty.clone(), Node::Term(t(OWL, ch.owl_local()))));
            }
            triples.push((r.term.clone(), t(RDFS, "label"), lit(&r.label)));
            triples.push((r.term.clone(), t(RDFS, "domain"), Node::Term(r.domain.clone())));
            if let Range::Class(c) = &r.range {
                triples.push((r.term.clone(), t(RDFS, "range"), Node::Term(c.clone())));
            }
            if let Some(i) = &r.inverse {
                triples.push((r.term.clone(), t(OWL, "inverseOf"), Node::Term(i.clone())));
            }
            if let Some(s) = &r.super_relation {
                triples.push((r.term.clone(), t(RDFS, "subPropertyOf"), Node::Term(s.clone())));
            }
        }
        for ax in &self.axioms {
            let kind = match ax.kind {
                AxiomKind::SomeValuesRequirement => "SomeValuesRequirement",
                AxiomKind::MinQualifiedCardinality => "MinQualifiedCardinality",
                AxiomKind::ExactQualifiedCardinality => "ExactQualifiedCardinality",
                AxiomKind::DisjointClasses => "DisjointClasses",
                _ => continue,
            };
            triples.push((ax.id.clone(), ty.clone(), Node::Term(t(META, kind))));
            if ax.kind == AxiomKind::DisjointClasses {
                for m in &ax.operands {
                    triples.push((ax.id.clone(), t(META, "member"), Node::Term(m.clone())));
                }
            } else {
                triples.push((ax.id.clone(), t(META, "onClass"), Node::Term(ax.operands[0].clone())));
                triples.push((ax.id.clone(), t(META, "onProperty"), Node::Term(ax.operands[1].clone())));
                triples.push((ax.id.clone(), t(META, "filler"), Node::Term(ax.operands[2].clone())));
            }
            if let Some(n) = ax.cardinality {
                let pred = if ax.kind == AxiomKind::MinQualifiedCardinality {
                    "minQualifiedCardinality"
                } else {
                    "qualifiedCardinality"
                };
                triples.push((ax.id.clone(), t(META, pred), Node::Literal(Literal::decimal(crate::term::Decimal::from_int(n as i64).expect("small")))));
            }
            if let Some(d) = ax.source_definition {
                triples.push((ax.id.clone(), t(META, "sourceDefinition"), Node::Literal(Literal::decimal(crate::term::Decimal::from_int(d as i64).expect("small")))));
            }
        }
        let prefixes = ["bfo", "geocore", "geofault", "geofault-meta", "owl", "rdf", "rdfs", "skos"]
            .iter()
            .map(|p| (p.to_string(), crate::term::well_known_iri(p).expect("well known").to_string()))
            .collect();
        write_triples(triples, &prefixes)
    }
}

#[derive(Default)]
struct Loader {
    version: Option<String>,
    classes: BTreeMap<Term, ClassDef>,
    relations: BTreeMap<Term, RelationDef>,
    axioms: BTreeMap<Term, PartialAxiom>,
}

#[derive(Default)]
struct PartialAxiom {
    kind: Option<AxiomKind>,
    on_class: Option<Term>,
    on_property: Option<Term>,
    filler: Option<Term>,
    members: Vec<Term>,
    cardinality: Option<u32>,
    source_definition: Option<u32>,
    line: usize,
}

fn invalid<T>(line: usize, msg: impl fmt::Display) -> Result<T, SchemaError> {
    Err(SchemaError::Invalid(format!("line {line}: {msg}")))
}

fn small_int(node: &Node, line: usize) -> Result<u32, SchemaError> {
    if let Node::Literal(Literal::Decimal { unit: None, value }) = node {
        let m = value.micros();
        if m >= 0 && m % 1_000_000 == 0 && m / 1_000_000 <= u32::MAX as i64 {
            return Ok((m / 1_000_000) as u32);
        }
    }
    invalid(line, format!("expected a non-negative integer, found {node}"))
}

fn string_of(node: &Node, line: usize) -> Result<String, SchemaError> {
    match node {
        Node::Literal(Literal::String(s)) => Ok(s.clone()),
        _ => invalid(line, format!("expected a string, found {node}")),
    }
}

fn term_of(node: &Node, line: usize) -> Result<Term, SchemaError> {
    match node {
        Node::Term(t) => Ok(t.clone()),
        _ => invalid(line, format!("expected a term, found {node}")),
    }
}

impl Loader {
    fn load(mut self, doc: &Document) -> Result<Schema, SchemaError> {
        // First pass: declarations.
        for t in &doc.triples {
            if !t.predicate.is_rdf_type() {
                continue;
            }
            let ty = term_of(&t.object, t.line)?;
            match (ty.namespace(), ty.local_name()) {
                (OWL, "Class") => {
                    self.classes.entry(t.subject.clone()).or_insert_with(|| ClassDef {
                        term: t.subject.clone(),
                        parent: None,
                        label: t.subject.local_name().to_string(),
                        definition_text: String::new(),
                        user_facing: t.subject.namespace() == GEOFAULT,
                    });
                }
                (OWL, "ObjectProperty") | (OWL, "DatatypeProperty") => {
                    let range = if ty.local_name() == "DatatypeProperty" { Range::Literal } else { Range::Class(root_class()) };
                    let rel = self.relations.entry(t.subject.clone()).or_insert_with(|| RelationDef {
                        term: t.subject.clone(),
                        label: t.subject.local_name().replace('_', " "),
                        domain: root_class(),
                        range: range.clone(),
                        characteristics: BTreeSet::new(),
                        inverse: None,
                        super_relation: None,
                    });
                    rel.range = range;
                }
                (OWL, "Ontology") => {}
                (META, kind) => {
                    let Some(k) = AxiomKind::from_meta(kind) else {
                        return invalid(t.line, format!("unknown axiom kind {ty}"));
                    };
                    let ax = self.axioms.entry(t.subject.clone()).or_default();
                    ax.kind = Some(k);
                    ax.line = t.line;
                }
                (OWL, _) => {}
                _ => return invalid(t.line, format!("unsupported schema type {ty}")),
            }
        }
        for t in &doc.triples {
            if t.predicate.is_rdf_type() {
                let ty = term_of(&t.object, t.line)?;
                if ty.namespace() == OWL && ty.local_name().ends_with("Property") && !matches!(ty.local_name(), "ObjectProperty" | "DatatypeProperty") {
                    let ch = Characteristic::ALL
                        .into_iter()
                        .find(|c| c.owl_local() == ty.local_name())
                        .ok_or_else(|| SchemaError::Invalid(format!("line {}: unsupported characteristic {ty}", t.line)))?;
                    match self.relations.get_mut(&t.subject) {
                        Some(r) => {
                            r.characteristics.insert(ch);
                        }
                        None => return invalid(t.line, format!("{} is not declared as a property", t.subject)),
                    }
                } else if ty.namespace() == OWL && !matches!(ty.local_name(), "Class" | "ObjectProperty" | "DatatypeProperty" | "Ontology") {
                    return invalid(t.line, format!("unsupported schema type {ty}"));
                }
                continue;
            }
            let (ns, local) = (t.predicate.namespace(), t.predicate.local_name());
            match (ns, local) {
                (OWL, "versionInfo") => self.version = Some(string_of(&t.object, t.line)?),
                (RDFS, "subClassOf") => {
                    let parent = term_of(&t.object, t.line)?;
                    let Some(c) = self.classes.get_mut(&t.subject) else {
                        return invalid(t.line, format!("{} is not declared as a class", t.subject));
                    };
                    if c.parent.replace(parent).is_some() {
                        return invalid(t.line, format!("{} has more than one asserted parent", t.subject));
                    }
                }
                (RDFS, "label") | (SKOS, "definition") => {
                    let s = string_of(&t.object, t.line)?;
                    if let Some(c) = self.classes.get_mut(&t.subject) {
                        if local == "label" { c.label = s } else { c.definition_text = s }
                    } else if let Some(r) = self.relations.get_mut(&t.subject) {
                        if local == "label" { r.label = s }
                    } else {
                        return invalid(t.line, format!("{} is not declared", t.subject));
                    }
                }
                (RDFS, "domain") | (RDFS, "range") | (OWL, "inverseOf") | (RDFS, "subPropertyOf") => {
                    let v = term_of(&t.object, t.line)?;
                    let Some(r) = self.relations.get_mut(&t.subject) else {
                        return invalid(t.line, format!("{} is not declared as a property", t.subject));
                    };
                    match local {
                        "domain" => r.domain = v,
                        "range" => {
                            if r.range == Range::Literal {
                                if !(v.namespace() == RDFS && v.local_name() == "Literal") {
                                    return invalid(t.line, "datatype property range must be rdfs:Literal");
                                }
                            } else {
                                r.range = Range::Class(v);
                            }
                        }
                        "inverseOf" => r.inverse = Some(v),
                        _ => r.super_relation = Some(v),
                    }
                }
                (META, _) => {
                    let Some(ax) = self.axioms.get_mut(&t.subject) else {
                        return invalid(t.line, format!("{} is not declared as an axiom", t.subject));
                    };
                    match local {
                        "onClass" => ax.on_class = Some(term_of(&t.object, t.line)?),
                        "onProperty" => ax.on_property = Some(term_of(&t.object, t.line)?),
                        "filler" => ax.filler = Some(term_of(&t.object, t.line)?),
                        "member" => ax.members.push(term_of(&t.object, t.line)?),
                        "minQualifiedCardinality" | "qualifiedCardinality" => {
                            ax.cardinality = Some(small_int(&t.object, t.line)?)
                        }
                        "sourceDefinition" => ax.source_definition = Some(small_int(&t.object, t.line)?),
                        _ => return invalid(t.line, format!("unknown axiom property {}", t.predicate)),
                    }
                }
                _ => return invalid(t.line, format!("unsupported schema predicate {}", t.predicate)),
            }
        }
        for c in self.classes.values() {
            if ![BFO, GEOCORE, GEOFAULT].contains(&c.term.namespace()) {
                return Err(SchemaError::Invalid(format!("class {} is outside the bfo, geocore and geofault namespaces", c.term)));
            }
        }
        let mut axioms = Vec::new();
        for (id, p) in self.axioms {
            let kind = p.kind.expect("declared");
            let operands = if kind == AxiomKind::DisjointClasses {
                let mut m = p.members;
                m.sort();
                m
            } else {
                match (p.on_class, p.on_property, p.filler) {
                    (Some(c), Some(r), Some(f)) => vec![c, r, f],
                    _ => return invalid(p.line, format!("axiom {id} needs onClass, onProperty and filler")),
                }
            };
            if matches!(kind, AxiomKind::MinQualifiedCardinality | AxiomKind::ExactQualifiedCardinality) && p.cardinality.is_none() {
                return invalid(p.line, format!("axiom {id} needs a cardinality"));
            }
            axioms.push(Axiom { id, kind, operands, cardinality: p.cardinality, source_definition: p.source_definition });
        }
        axioms.sort_by(|a, b| {
            a.source_definition.unwrap_or(u32::MAX).cmp(&b.source_definition.unwrap_or(u32::MAX)).then_with(|| a.id.cmp(&b.id))
        });
        let version = self.version.unwrap_or_else(|| "unversioned".into());
        Schema::assemble(version, self.classes, self.relations, axioms)
    }
}
