//! Indexed triple store with provenance.
//!
//! Nodes are interned to dense `u32` ids local to one graph. Every triple is
//! kept in three ordered indexes (SPO, POS, OSP) plus a hash map from the
//! triple to its provenance, which doubles as the membership set.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::hash::BuildHasherDefault;
use std::ops::{Bound, Deref};
use std::sync::Arc;

use rustc_hash::FxHasher;
use serde::Serialize;

use crate::error::StoreError;
use crate::rdf_io::Document;
use crate::schema::{Range, Schema};
use crate::term::{Node, Term};

pub type Id = u32;
/// Subject, predicate, object ids.
pub type IdTriple = [Id; 3];

type FxMap<K, V> = HashMap<K, V, BuildHasherDefault<FxHasher>>;

/// Where a triple came from. Only the first derivation is kept.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", content = "source", rename_all = "lowercase")]
pub enum Provenance {
    Asserted,
    Imported(String),
    Inferred(String),
}

impl Provenance {
    pub fn is_inferred(&self) -> bool {
        matches!(self, Provenance::Inferred(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            Provenance::Asserted => "asserted",
            Provenance::Imported(_) => "imported",
            Provenance::Inferred(_) => "inferred",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Triple {
    pub subject: Term,
    pub predicate: Term,
    pub object: Node,
}

impl Triple {
    pub fn new(subject: Term, predicate: Term, object: impl Into<Node>) -> Self {
        Triple { subject, predicate, object: object.into() }
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.subject, self.predicate, self.object)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Assertion {
    pub subject: Term,
    pub predicate: Term,
    pub object: Node,
    pub provenance: Provenance,
}

impl Assertion {
    pub fn asserted(subject: Term, predicate: Term, object: impl Into<Node>) -> Self {
        Assertion { subject, predicate, object: object.into(), provenance: Provenance::Asserted }
    }

    pub fn triple(&self) -> Triple {
        Triple { subject: self.subject.clone(), predicate: self.predicate.clone(), object: self.object.clone() }
    }
}

impl fmt::Display for Assertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.subject, self.predicate, self.object)
    }
}

/// One position of a triple pattern.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum PatternTerm {
    Var(String),
    Const(Node),
}

impl PatternTerm {
    pub fn var(name: &str) -> Self {
        PatternTerm::Var(name.to_string())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            PatternTerm::Var(v) => Some(v),
            PatternTerm::Const(_) => None,
        }
    }
}

impl From<Term> for PatternTerm {
    fn from(t: Term) -> Self {
        PatternTerm::Const(Node::Term(t))
    }
}

impl From<Node> for PatternTerm {
    fn from(n: Node) -> Self {
        PatternTerm::Const(n)
    }
}

impl fmt::Display for PatternTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternTerm::Var(v) => write!(f, "?{v}"),
            PatternTerm::Const(n) => n.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct TriplePattern {
    pub subject: PatternTerm,
    pub predicate: PatternTerm,
    pub object: PatternTerm,
}

impl TriplePattern {
    pub fn new(s: impl Into<PatternTerm>, p: impl Into<PatternTerm>, o: impl Into<PatternTerm>) -> Self {
        TriplePattern { subject: s.into(), predicate: p.into(), object: o.into() }
    }

    pub fn positions(&self) -> [&PatternTerm; 3] {
        [&self.subject, &self.predicate, &self.object]
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.positions().into_iter().filter_map(PatternTerm::as_var)
    }
}

impl fmt::Display for TriplePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.subject, self.predicate, self.object)
    }
}

/// Compact provenance kept per stored triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Origin {
    Asserted,
    Imported(u32),
    /// `premises[1]` is `NO_TRIPLE` for single-premise rules.
    Inferred { rule: u32, premises: [IdTriple; 2] },
}

pub(crate) const NO_TRIPLE: IdTriple = [Id::MAX; 3];

#[derive(Clone, Default)]
struct Dictionary {
    nodes: Vec<Node>,
    ids: FxMap<Node, Id>,
}

impl Dictionary {
    fn intern(&mut self, n: &Node) -> Id {
        if let Some(&id) = self.ids.get(n) {
            return id;
        }
        let id = Id::try_from(self.nodes.len()).expect("dictionary overflow");
        self.nodes.push(n.clone());
        self.ids.insert(n.clone(), id);
        id
    }
}

#[derive(Clone)]
pub struct Graph {
    schema: Arc<Schema>,
    dict: Dictionary,
    facts: FxMap<IdTriple, Origin>,
    spo: BTreeSet<IdTriple>,
    pos: BTreeSet<IdTriple>,
    osp: BTreeSet<IdTriple>,
    pred_counts: FxMap<Id, usize>,
    names: Vec<Arc<str>>,
    name_ids: FxMap<Arc<str>, u32>,
    type_id: Id,
}

/// Immutable view of a graph at one point in time.
#[derive(Clone)]
pub struct Snapshot(Arc<Graph>);

impl Deref for Snapshot {
    type Target = Graph;

    fn deref(&self) -> &Graph {
        &self.0
    }
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph").field("triples", &self.facts.len()).finish()
    }
}

fn range_of(s: Option<Id>, p: Option<Id>, o: Option<Id>) -> (Bound<IdTriple>, Bound<IdTriple>) {
    let lo = [s.unwrap_or(0), p.unwrap_or(0), o.unwrap_or(0)];
    let hi = [s.unwrap_or(Id::MAX), p.unwrap_or(Id::MAX), o.unwrap_or(Id::MAX)];
    (Bound::Included(lo), Bound::Included(hi))
}

impl Graph {
    pub fn new(schema: Arc<Schema>) -> Graph {
        let mut dict = Dictionary::default();
        let type_id = dict.intern(&Node::Term(Term::rdf_type()));
        Graph {
            schema,
            dict,
            facts: FxMap::default(),
            spo: BTreeSet::new(),
            pos: BTreeSet::new(),
            osp: BTreeSet::new(),
            pred_counts: FxMap::default(),
            names: Vec::new(),
            name_ids: FxMap::default(),
            type_id,
        }
    }

    /// Loads every triple of `doc` with `imported(source_name)` provenance.
    pub fn from_document(schema: Arc<Schema>, doc: &Document) -> Result<Graph, StoreError> {
        let mut g = Graph::new(schema);
        g.load_document(doc, &Provenance::Imported(doc.source_name.clone()))?;
        Ok(g)
    }

    pub fn load_document(&mut self, doc: &Document, provenance: &Provenance) -> Result<usize, StoreError> {
        let mut added = 0;
        for t in &doc.triples {
            let a = Assertion {
                subject: t.subject.clone(),
                predicate: t.predicate.clone(),
                object: t.object.clone(),
                provenance: provenance.clone(),
            };
            added += usize::from(self.assert_triple(a)?);
        }
        Ok(added)
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn inferred_count(&self) -> usize {
        self.facts.values().filter(|o| matches!(o, Origin::Inferred { .. })).count()
    }

    /// Checks the predicate and object kind against the schema.
    pub fn check(&self, t: &Triple) -> Result<(), StoreError> {
        if t.predicate.is_rdf_type() {
            return match &t.object {
                Node::Term(c) if self.schema.is_class(c) => Ok(()),
                Node::Term(c) => Err(StoreError::TypeMismatch(format!("{c} is not a class of the schema"))),
                Node::Literal(_) => Err(StoreError::TypeMismatch("rdf:type needs a class, not a literal".into())),
            };
        }
        let rel = self
            .schema
            .get_relation(&t.predicate)
            .ok_or_else(|| StoreError::UnknownPredicate(t.predicate.clone()))?;
        match (&rel.range, &t.object) {
            (Range::Class(_), Node::Literal(l)) => Err(StoreError::TypeMismatch(format!(
                "{} is object-valued but got literal {l}",
                rel.term
            ))),
            (Range::Literal, Node::Term(o)) => Err(StoreError::TypeMismatch(format!(
                "{} is literal-valued but got term {o}",
                rel.term
            ))),
            _ => Ok(()),
        }
    }

    /// Adds a triple. Returns false when it was already present, in which
    /// case the stored provenance is left as is.
    pub fn assert_triple(&mut self, a: Assertion) -> Result<bool, StoreError> {
        let t = a.triple();
        self.check(&t)?;
        let ids = self.intern_triple(&t);
        if self.facts.contains_key(&ids) {
            return Ok(false);
        }
        let origin = match &a.provenance {
            Provenance::Asserted => Origin::Asserted,
            Provenance::Imported(src) => Origin::Imported(self.intern_name(src)),
            Provenance::Inferred(rule) => {
                Origin::Inferred { rule: self.intern_name(rule), premises: [NO_TRIPLE, NO_TRIPLE] }
            }
        };
        Ok(self.insert_id(ids, origin))
    }

    /// Shorthand for asserting with `asserted` provenance.
    pub fn insert(&mut self, s: Term, p: Term, o: impl Into<Node>) -> Result<bool, StoreError> {
        self.assert_triple(Assertion::asserted(s, p, o))
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.lookup_triple(t).is_some_and(|ids| self.facts.contains_key(&ids))
    }

    pub fn provenance(&self, t: &Triple) -> Option<Provenance> {
        let ids = self.lookup_triple(t)?;
        self.facts.get(&ids).map(|o| self.provenance_of(o))
    }

    /// Removes an asserted or imported triple. Absent triples are a no-op.
    pub fn retract(&mut self, t: &Triple) -> Result<bool, StoreError> {
        let Some(ids) = self.lookup_triple(t) else { return Ok(false) };
        match self.facts.get(&ids) {
            None => Ok(false),
            Some(Origin::Inferred { .. }) => Err(StoreError::CannotRetractInferred(t.to_string())),
            Some(_) => {
                self.facts.remove(&ids);
                let [s, p, o] = ids;
                self.spo.remove(&[s, p, o]);
                self.pos.remove(&[p, o, s]);
                self.osp.remove(&[o, s, p]);
                if let Some(c) = self.pred_counts.get_mut(&p) {
                    *c -= 1;
                }
                Ok(true)
            }
        }
    }

    /// Assertions unifying with `p`, ordered by subject, predicate, object.
    pub fn match_pattern(&self, p: &TriplePattern) -> Vec<Assertion> {
        let mut bound = [None; 3];
        for (i, pos) in p.positions().into_iter().enumerate() {
            if let PatternTerm::Const(n) = pos {
                match self.dict.ids.get(n) {
                    Some(&id) => bound[i] = Some(id),
                    None => return Vec::new(),
                }
            }
        }
        // A variable repeated across positions must bind consistently.
        let vars: Vec<Option<&str>> = p.positions().iter().map(|t| t.as_var()).collect();
        let mut out: Vec<(Triple, IdTriple)> = self
            .scan(bound[0], bound[1], bound[2])
            .filter(|t| {
                (0..3).all(|i| {
                    (i + 1..3).all(|j| match (vars[i], vars[j]) {
                        (Some(a), Some(b)) if a == b => t[i] == t[j],
                        _ => true,
                    })
                })
            })
            .map(|t| (self.triple_of(t), t))
            .collect();
        out.sort();
        out.into_iter()
            .map(|(t, ids)| Assertion {
                subject: t.subject,
                predicate: t.predicate,
                object: t.object,
                provenance: self.provenance_of(&self.facts[&ids]),
            })
            .collect()
    }

    /// Every assertion in deterministic order.
    pub fn assertions(&self) -> Vec<Assertion> {
        self.match_pattern(&TriplePattern::new(PatternTerm::var("s"), PatternTerm::var("p"), PatternTerm::var("o")))
    }

    /// Every triple as a set, ignoring provenance.
    pub fn triple_set(&self) -> BTreeSet<Triple> {
        self.facts.keys().map(|&t| self.triple_of(t)).collect()
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot(Arc::new(self.clone()))
    }

    /// The graph restricted to asserted and imported triples.
    pub fn base(&self) -> Graph {
        let mut g = Graph::new(self.schema.clone());
        let mut keep: Vec<(&IdTriple, &Origin)> =
            self.facts.iter().filter(|(_, o)| !matches!(o, Origin::Inferred { .. })).collect();
        keep.sort_by_key(|(t, _)| **t);
        for (t, o) in keep {
            let origin = match o {
                Origin::Imported(src) => Origin::Imported(g.intern_name(&self.names[*src as usize])),
                other => *other,
            };
            let ids = g.intern_triple(&self.triple_of(*t));
            g.insert_id(ids, origin);
        }
        g
    }

    /// Verifies that the three indexes and the fact map hold the same set.
    pub fn audit(&self) -> Result<(), String> {
        let n = self.facts.len();
        if self.spo.len() != n || self.pos.len() != n || self.osp.len() != n {
            return Err(format!(
                "index sizes differ: facts={n} spo={} pos={} osp={}",
                self.spo.len(),
                self.pos.len(),
                self.osp.len()
            ));
        }
        for &[s, p, o] in self.facts.keys() {
            if !self.spo.contains(&[s, p, o]) || !self.pos.contains(&[p, o, s]) || !self.osp.contains(&[o, s, p]) {
                return Err(format!("triple {:?} missing from an index", [s, p, o]));
            }
        }
        let total: usize = self.pred_counts.values().sum();
        if total != n {
            return Err(format!("predicate statistics sum to {total}, expected {n}"));
        }
        Ok(())
    }

    // ----- id-level access used by the reasoner, validator and query engine

    pub(crate) fn type_id(&self) -> Id {
        self.type_id
    }

    pub(crate) fn id_of(&self, n: &Node) -> Option<Id> {
        self.dict.ids.get(n).copied()
    }

    pub(crate) fn id_of_term(&self, t: &Term) -> Option<Id> {
        self.dict.ids.get(&Node::Term(t.clone())).copied()
    }

    pub(crate) fn node(&self, id: Id) -> &Node {
        &self.dict.nodes[id as usize]
    }

    pub(crate) fn intern(&mut self, n: &Node) -> Id {
        self.dict.intern(n)
    }

    pub(crate) fn intern_name(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.name_ids.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        let name: Arc<str> = name.into();
        self.names.push(name.clone());
        self.name_ids.insert(name, id);
        id
    }

    pub(crate) fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    fn intern_triple(&mut self, t: &Triple) -> IdTriple {
        [
            self.dict.intern(&Node::Term(t.subject.clone())),
            self.dict.intern(&Node::Term(t.predicate.clone())),
            self.dict.intern(&t.object),
        ]
    }

    pub(crate) fn lookup_triple(&self, t: &Triple) -> Option<IdTriple> {
        Some([
            self.id_of_term(&t.subject)?,
            self.id_of_term(&t.predicate)?,
            self.id_of(&t.object)?,
        ])
    }

    pub(crate) fn triple_of(&self, [s, p, o]: IdTriple) -> Triple {
        Triple {
            subject: self.node(s).as_term().expect("subject is a term").clone(),
            predicate: self.node(p).as_term().expect("predicate is a term").clone(),
            object: self.node(o).clone(),
        }
    }

    pub(crate) fn origin(&self, t: &IdTriple) -> Option<&Origin> {
        self.facts.get(t)
    }

    pub(crate) fn contains_id(&self, t: &IdTriple) -> bool {
        self.facts.contains_key(t)
    }

    pub(crate) fn provenance_of(&self, o: &Origin) -> Provenance {
        match o {
            Origin::Asserted => Provenance::Asserted,
            Origin::Imported(src) => Provenance::Imported(self.name(*src).to_string()),
            Origin::Inferred { rule, .. } => Provenance::Inferred(self.name(*rule).to_string()),
        }
    }

    /// Inserts without schema checks. Returns false if already present.
    pub(crate) fn insert_id(&mut self, t: IdTriple, origin: Origin) -> bool {
        use std::collections::hash_map::Entry;
        match self.facts.entry(t) {
            Entry::Occupied(_) => false,
            Entry::Vacant(v) => {
                v.insert(origin);
                let [s, p, o] = t;
                self.spo.insert([s, p, o]);
                self.pos.insert([p, o, s]);
                self.osp.insert([o, s, p]);
                *self.pred_counts.entry(p).or_insert(0) += 1;
                true
            }
        }
    }

    /// Stored triples matching the bound positions, via the best index.
    pub(crate) fn scan(&self, s: Option<Id>, p: Option<Id>, o: Option<Id>) -> Box<dyn Iterator<Item = IdTriple> + '_> {
        match (s, p, o) {
            (Some(s), Some(p), Some(o)) => {
                Box::new(self.facts.contains_key(&[s, p, o]).then_some([s, p, o]).into_iter())
            }
            (Some(_), _, None) => Box::new(self.spo.range(range_of(s, p, None)).copied()),
            (None, Some(_), _) => Box::new(self.pos.range(range_of(p, o, None)).map(|&[p, o, s]| [s, p, o])),
            (_, None, Some(_)) => Box::new(self.osp.range(range_of(o, s, None)).map(|&[o, s, p]| [s, p, o])),
            (None, None, None) => Box::new(self.spo.iter().copied()),
        }
    }

    /// Cheap upper-bound estimate of `scan` size for join ordering.
    pub(crate) fn estimate(&self, s: Option<Id>, p: Option<Id>, o: Option<Id>) -> usize {
        let per_pred = |p: Id| self.pred_counts.get(&p).copied().unwrap_or(0);
        match (s, p, o) {
            (Some(_), Some(_), Some(_)) => 1,
            (None, None, None) => self.facts.len(),
            (None, Some(p), None) => per_pred(p),
            // Bounded counts: walk at most a small prefix of the range.
            _ => {
                const CAP: usize = 4096;
                let n = self.scan(s, p, o).take(CAP).count();
                if n == CAP {
                    p.map(per_pred).unwrap_or(self.facts.len()).max(CAP)
                } else {
                    n
                }
            }
        }
    }

    /// Distinct predicates present, with counts.
    pub fn predicate_counts(&self) -> BTreeMap<Term, usize> {
        self.pred_counts
            .iter()
            .filter(|(_, &c)| c > 0)
            .map(|(&p, &c)| (self.node(p).as_term().expect("predicate").clone(), c))
            .collect()
    }
}
