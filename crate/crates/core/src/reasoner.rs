//! Rule compilation, semi-naive materialization, consistency checks and
//! derivation explanations.
//!
//! Rules are Horn clauses of one or two body atoms over triple patterns.
//! Existential requirements are never materialized; they are checked by the
//! validator instead.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use rustc_hash::FxHashMap;
use serde::Serialize;

use crate::error::ReasonerError;
use crate::schema::{AxiomKind, Characteristic, Range, Schema};
use crate::store::{Assertion, Graph, Id, IdTriple, Origin, PatternTerm, Triple, TriplePattern, NO_TRIPLE};
use crate::term::{Node, Term};

pub const DEFAULT_MAX_DERIVED: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rule {
    pub id: String,
    pub body: Vec<TriplePattern>,
    pub head: TriplePattern,
    /// Axiom id, or the relation whose characteristic produced the rule.
    pub source_axiom: Term,
}

impl Rule {
    /// Checks the shape this engine supports: one or two body atoms, every
    /// head variable bound by the body, literal-free subjects.
    pub fn validate(&self) -> Result<(), String> {
        if self.body.is_empty() || self.body.len() > 2 {
            return Err(format!("rule {} has {} body atoms (1 or 2 supported)", self.id, self.body.len()));
        }
        let bound: BTreeSet<&str> = self.body.iter().flat_map(|p| p.variables()).collect();
        for v in self.head.variables() {
            if !bound.contains(v) {
                return Err(format!("rule {}: head variable ?{v} is not bound by the body", self.id));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body: Vec<String> = self.body.iter().map(|p| format!("({p})")).collect();
        write!(f, "{}: {} => ({})", self.id, body.join(", "), self.head)
    }
}

fn var(v: &str) -> PatternTerm {
    PatternTerm::var(v)
}

/// Rules entailed by the schema, sorted by id.
pub fn compile_rules(schema: &Schema) -> Vec<Rule> {
    let ty = || PatternTerm::from(Term::rdf_type());
    let mut rules = Vec::new();
    for ax in schema.axioms() {
        match ax.kind {
            AxiomKind::SubClassOf => rules.push(Rule {
                id: format!("cax-sco:{}", ax.operands[0].local_name()),
                body: vec![TriplePattern::new(var("x"), ty(), ax.operands[0].clone())],
                head: TriplePattern::new(var("x"), ty(), ax.operands[1].clone()),
                source_axiom: ax.id.clone(),
            }),
            AxiomKind::DomainConstraint => {
                let r = &ax.operands[0];
                rules.push(Rule {
                    id: format!("prp-dom:{}", r.local_name()),
                    body: vec![TriplePattern::new(var("x"), r.clone(), var("y"))],
                    head: TriplePattern::new(var("x"), ty(), ax.operands[1].clone()),
                    source_axiom: ax.id.clone(),
                });
            }
            AxiomKind::RangeConstraint => {
                let r = &ax.operands[0];
                rules.push(Rule {
                    id: format!("prp-rng:{}", r.local_name()),
                    body: vec![TriplePattern::new(var("x"), r.clone(), var("y"))],
                    head: TriplePattern::new(var("y"), ty(), ax.operands[1].clone()),
                    source_axiom: ax.id.clone(),
                });
            }
            _ => {}
        }
    }
    for r in schema.relations() {
        let t = &r.term;
        let local = t.local_name();
        if let Some(inv) = &r.inverse {
            rules.push(Rule {
                id: format!("prp-inv:{local}"),
                body: vec![TriplePattern::new(var("x"), t.clone(), var("y"))],
                head: TriplePattern::new(var("y"), inv.clone(), var("x")),
                source_axiom: t.clone(),
            });
        }
        if r.has(Characteristic::Transitive) {
            rules.push(Rule {
                id: format!("prp-trp:{local}"),
                body: vec![
                    TriplePattern::new(var("x"), t.clone(), var("y")),
                    TriplePattern::new(var("y"), t.clone(), var("z")),
                ],
                head: TriplePattern::new(var("x"), t.clone(), var("z")),
                source_axiom: t.clone(),
            });
        }
        if r.has(Characteristic::Symmetric) && r.range != Range::Literal {
            rules.push(Rule {
                id: format!("prp-symp:{local}"),
                body: vec![TriplePattern::new(var("x"), t.clone(), var("y"))],
                head: TriplePattern::new(var("y"), t.clone(), var("x")),
                source_axiom: t.clone(),
            });
        }
        if let Some(sup) = &r.super_relation {
            rules.push(Rule {
                id: format!("prp-spo1:{local}"),
                body: vec![TriplePattern::new(var("x"), t.clone(), var("y"))],
                head: TriplePattern::new(var("x"), sup.clone(), var("y")),
                source_axiom: t.clone(),
            });
        }
    }
    rules.sort_by(|a, b| a.id.cmp(&b.id));
    rules
}

/// Substitutes premises into a rule. Returns the conclusion when every body
/// atom unifies with its premise under one consistent binding.
pub fn apply_rule(rule: &Rule, premises: &[Triple]) -> Option<Triple> {
    if premises.len() != rule.body.len() {
        return None;
    }
    let mut env: Vec<(&str, Node)> = Vec::new();
    for (pat, t) in rule.body.iter().zip(premises) {
        let values = [Node::Term(t.subject.clone()), Node::Term(t.predicate.clone()), t.object.clone()];
        for (pos, value) in pat.positions().into_iter().zip(values) {
            match pos {
                PatternTerm::Const(c) if *c != value => return None,
                PatternTerm::Const(_) => {}
                PatternTerm::Var(v) => match env.iter().find(|(n, _)| n == v) {
                    Some((_, bound)) if *bound != value => return None,
                    Some(_) => {}
                    None => env.push((v, value)),
                },
            }
        }
    }
    let get = |p: &PatternTerm| -> Option<Node> {
        match p {
            PatternTerm::Const(c) => Some(c.clone()),
            PatternTerm::Var(v) => env.iter().find(|(n, _)| n == v).map(|(_, val)| val.clone()),
        }
    };
    let s = get(&rule.head.subject)?.as_term()?.clone();
    let p = get(&rule.head.predicate)?.as_term()?.clone();
    Some(Triple { subject: s, predicate: p, object: get(&rule.head.object)? })
}

#[derive(Debug, Clone, Copy)]
enum Slot {
    Const(Id),
    Var(usize),
}

#[derive(Debug, Clone)]
struct CompiledRule {
    name: u32,
    body: Vec<[Slot; 3]>,
    head: [Slot; 3],
    nvars: usize,
}

fn compile_for(g: &mut Graph, rules: &[Rule]) -> Result<Vec<CompiledRule>, ReasonerError> {
    let mut out = Vec::with_capacity(rules.len());
    for r in rules {
        r.validate().map_err(ReasonerError::InvalidRule)?;
        let mut vars: Vec<String> = Vec::new();
        let mut slot = |g: &mut Graph, p: &PatternTerm| match p {
            PatternTerm::Const(n) => Slot::Const(g.intern(n)),
            PatternTerm::Var(v) => match vars.iter().position(|x| x == v) {
                Some(i) => Slot::Var(i),
                None => {
                    vars.push(v.clone());
                    Slot::Var(vars.len() - 1)
                }
            },
        };
        let mut body = Vec::new();
        for atom in &r.body {
            body.push([slot(g, &atom.subject), slot(g, &atom.predicate), slot(g, &atom.object)]);
        }
        let head = [slot(g, &r.head.subject), slot(g, &r.head.predicate), slot(g, &r.head.object)];
        let nvars = vars.len();
        let name = g.intern_name(&r.id);
        out.push(CompiledRule { name, body, head, nvars });
    }
    Ok(out)
}

fn unify(atom: &[Slot; 3], t: &IdTriple, env: &mut [Option<Id>]) -> bool {
    for (slot, &v) in atom.iter().zip(t) {
        match *slot {
            Slot::Const(c) if c != v => return false,
            Slot::Const(_) => {}
            Slot::Var(i) => match env[i] {
                Some(b) if b != v => return false,
                Some(_) => {}
                None => env[i] = Some(v),
            },
        }
    }
    true
}

fn resolve(slot: Slot, env: &[Option<Id>]) -> Option<Id> {
    match slot {
        Slot::Const(c) => Some(c),
        Slot::Var(i) => env[i],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaterializeOptions {
    pub max_derived: usize,
}

impl Default for MaterializeOptions {
    fn default() -> Self {
        MaterializeOptions { max_derived: DEFAULT_MAX_DERIVED }
    }
}

/// Summary of one materialization run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct MaterializeStats {
    pub input: usize,
    pub derived: usize,
    pub processed: usize,
}

/// Returns the least fixpoint of `g` under `rules` as a new graph.
pub fn materialize(g: &Graph, rules: &[Rule]) -> Result<Graph, ReasonerError> {
    let mut out = g.clone();
    materialize_in_place(&mut out, rules, MaterializeOptions::default())?;
    Ok(out)
}

/// Materializes into `g`. On `ResourceLimit` the graph holds a partial result.
pub fn materialize_in_place(
    g: &mut Graph,
    rules: &[Rule],
    opts: MaterializeOptions,
) -> Result<MaterializeStats, ReasonerError> {
    let compiled = compile_for(g, rules)?;
    let type_id = g.type_id();

    // Trigger index: predicate (and class for typing atoms) to (rule, atom).
    let mut by_pred: FxHashMap<Id, Vec<(usize, usize)>> = FxHashMap::default();
    let mut by_type: FxHashMap<Id, Vec<(usize, usize)>> = FxHashMap::default();
    let mut wildcard: Vec<(usize, usize)> = Vec::new();
    for (ri, r) in compiled.iter().enumerate() {
        for (ai, atom) in r.body.iter().enumerate() {
            match (atom[1], atom[2]) {
                (Slot::Const(p), Slot::Const(c)) if p == type_id => by_type.entry(c).or_default().push((ri, ai)),
                (Slot::Const(p), _) => by_pred.entry(p).or_default().push((ri, ai)),
                (Slot::Var(_), _) => wildcard.push((ri, ai)),
            }
        }
    }

    let mut queue: VecDeque<IdTriple> = {
        let mut initial: Vec<IdTriple> = g.scan(None, None, None).collect();
        initial.sort_unstable();
        initial.into()
    };
    let mut stats = MaterializeStats { input: g.len(), ..Default::default() };
    let mut triggers: Vec<(usize, usize)> = Vec::new();
    let mut heads: Vec<(IdTriple, u32, [IdTriple; 2])> = Vec::new();
    let mut env: Vec<Option<Id>> = Vec::new();

    while let Some(t) = queue.pop_front() {
        stats.processed += 1;
        triggers.clear();
        if let Some(v) = by_pred.get(&t[1]) {
            triggers.extend_from_slice(v);
        }
        if t[1] == type_id {
            if let Some(v) = by_type.get(&t[2]) {
                triggers.extend_from_slice(v);
            }
        }
        triggers.extend_from_slice(&wildcard);
        triggers.sort_unstable();

        heads.clear();
        for &(ri, ai) in &triggers {
            let rule = &compiled[ri];
            env.clear();
            env.resize(rule.nvars, None);
            if !unify(&rule.body[ai], &t, &mut env) {
                continue;
            }
            if rule.body.len() == 1 {
                if let Some(h) = instantiate(&rule.head, &env) {
                    heads.push((h, rule.name, [t, NO_TRIPLE]));
                }
                continue;
            }
            let other = 1 - ai;
            let atom = &rule.body[other];
            let (s, p, o) = (resolve(atom[0], &env), resolve(atom[1], &env), resolve(atom[2], &env));
            let saved = env.clone();
            for m in g.scan(s, p, o) {
                env.copy_from_slice(&saved);
                if !unify(atom, &m, &mut env) {
                    continue;
                }
                if let Some(h) = instantiate(&rule.head, &env) {
                    let premises = if ai == 0 { [t, m] } else { [m, t] };
                    heads.push((h, rule.name, premises));
                }
            }
        }
        for &(h, rule, premises) in &heads {
            if g.contains_id(&h) {
                continue;
            }
            // Heads with literal subjects or predicates are ill-formed; skip them.
            if g.node(h[0]).is_literal() || g.node(h[1]).is_literal() {
                continue;
            }
            if stats.derived >= opts.max_derived {
                return Err(ReasonerError::ResourceLimit { limit: opts.max_derived });
            }
            g.insert_id(h, Origin::Inferred { rule, premises });
            stats.derived += 1;
            queue.push_back(h);
        }
    }
    log::debug!("materialized {} triples from {} in {} steps", stats.derived, stats.input, stats.processed);
    Ok(stats)
}

fn instantiate(head: &[Slot; 3], env: &[Option<Id>]) -> Option<IdTriple> {
    Some([resolve(head[0], env)?, resolve(head[1], env)?, resolve(head[2], env)?])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClashKind {
    Disjointness,
    Irreflexivity,
    Asymmetry,
    ExactCardinalityExceeded,
}

impl fmt::Display for ClashKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClashKind::Disjointness => "disjointness",
            ClashKind::Irreflexivity => "irreflexivity",
            ClashKind::Asymmetry => "asymmetry",
            ClashKind::ExactCardinalityExceeded => "exact-cardinality-exceeded",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Clash {
    pub kind: ClashKind,
    pub participants: Vec<Term>,
    pub evidence: Vec<Assertion>,
    /// Axiom or relation that the clash violates.
    pub source: Term,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConsistencyReport {
    pub consistent: bool,
    pub clashes: Vec<Clash>,
}

fn assertion(g: &Graph, t: Triple) -> Assertion {
    let provenance = g.provenance(&t).expect("evidence is in the graph");
    Assertion { subject: t.subject, predicate: t.predicate, object: t.object, provenance }
}

/// Open-world consistency of a materialized graph.
pub fn check_consistency(g: &Graph, schema: &Schema) -> ConsistencyReport {
    let ty = Term::rdf_type();
    let mut clashes = Vec::new();
    let instances_of = |c: &Term| -> Vec<Term> {
        let Some(cid) = g.id_of_term(c) else { return Vec::new() };
        let mut v: Vec<Term> = g
            .scan(None, Some(g.type_id()), Some(cid))
            .map(|t| g.node(t[0]).as_term().expect("subject").clone())
            .collect();
        v.sort();
        v
    };
    for ax in schema.axioms() {
        match ax.kind {
            AxiomKind::DisjointClasses => {
                for (i, a) in ax.operands.iter().enumerate() {
                    for b in &ax.operands[i + 1..] {
                        for x in instances_of(a) {
                            let tb = Triple::new(x.clone(), ty.clone(), b.clone());
                            if g.contains(&tb) {
                                let ta = Triple::new(x.clone(), ty.clone(), a.clone());
                                clashes.push(Clash {
                                    kind: ClashKind::Disjointness,
                                    participants: vec![x.clone(), a.clone(), b.clone()],
                                    evidence: vec![assertion(g, ta), assertion(g, tb)],
                                    source: ax.id.clone(),
                                    message: format!("{x} is both {a} and {b}, which are disjoint"),
                                });
                            }
                        }
                    }
                }
            }
            AxiomKind::ExactQualifiedCardinality => {
                let (c, r, filler) = (&ax.operands[0], &ax.operands[1], &ax.operands[2]);
                let n = ax.cardinality.unwrap_or(0) as usize;
                for x in instances_of(c) {
                    let fillers = counted_fillers(g, &x, r, filler);
                    if fillers.len() > n {
                        let mut evidence = vec![assertion(g, Triple::new(x.clone(), ty.clone(), c.clone()))];
                        let mut participants = vec![x.clone(), c.clone()];
                        for y in &fillers {
                            evidence.push(assertion(g, Triple::new(x.clone(), r.clone(), y.clone())));
                            participants.push(y.clone());
                        }
                        clashes.push(Clash {
                            kind: ClashKind::ExactCardinalityExceeded,
                            participants,
                            evidence,
                            source: ax.id.clone(),
                            message: format!(
                                "{x} has {} distinct {r} fillers of type {filler}; exactly {n} allowed",
                                fillers.len()
                            ),
                        });
                    }
                }
            }
            _ => {}
        }
    }
    for rel in schema.relations() {
        let irreflexive = rel.has(Characteristic::Irreflexive);
        let asymmetric = rel.has(Characteristic::Asymmetric);
        if !irreflexive && !asymmetric {
            continue;
        }
        let Some(pid) = g.id_of_term(&rel.term) else { continue };
        let mut edges: Vec<Triple> = g.scan(None, Some(pid), None).map(|t| g.triple_of(t)).collect();
        edges.sort();
        for t in edges {
            let Node::Term(o) = &t.object else { continue };
            if *o == t.subject {
                let kind = if irreflexive { ClashKind::Irreflexivity } else { ClashKind::Asymmetry };
                clashes.push(Clash {
                    kind,
                    participants: vec![t.subject.clone(), rel.term.clone()],
                    message: format!("{} is related to itself by {}", t.subject, rel.term),
                    evidence: vec![assertion(g, t)],
                    source: rel.term.clone(),
                });
            } else if asymmetric && t.subject < *o {
                let back = Triple::new(o.clone(), rel.term.clone(), t.subject.clone());
                if g.contains(&back) {
                    clashes.push(Clash {
                        kind: ClashKind::Asymmetry,
                        participants: vec![t.subject.clone(), o.clone(), rel.term.clone()],
                        message: format!("{} and {o} are related by {} in both directions", t.subject, rel.term),
                        evidence: vec![assertion(g, t.clone()), assertion(g, back)],
                        source: rel.term.clone(),
                    });
                }
            }
        }
    }
    clashes.sort_by(|a, b| (a.kind, &a.participants).cmp(&(b.kind, &b.participants)));
    ConsistencyReport { consistent: clashes.is_empty(), clashes }
}

/// Distinct `r`-successors of `x` typed with `filler`, sorted.
pub(crate) fn counted_fillers(g: &Graph, x: &Term, r: &Term, filler: &Term) -> Vec<Term> {
    let (Some(xid), Some(rid)) = (g.id_of_term(x), g.id_of_term(r)) else { return Vec::new() };
    let fid = g.id_of_term(filler);
    let mut out: Vec<Term> = g
        .scan(Some(xid), Some(rid), None)
        .filter(|t| fid.is_some_and(|f| g.contains_id(&[t[2], g.type_id(), f])))
        .filter_map(|t| g.node(t[2]).as_term().cloned())
        .collect();
    out.sort();
    out.dedup();
    out
}

/// Proof tree for one triple. Leaves are asserted or imported triples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Derivation {
    pub conclusion: Assertion,
    pub rule: Option<String>,
    pub premises: Vec<Derivation>,
}

impl Derivation {
    pub fn is_leaf(&self) -> bool {
        self.premises.is_empty()
    }

    pub fn depth(&self) -> usize {
        1 + self.premises.iter().map(Derivation::depth).max().unwrap_or(0)
    }

    /// Leaf conclusions, left to right.
    pub fn leaves(&self) -> Vec<&Assertion> {
        if self.is_leaf() {
            return vec![&self.conclusion];
        }
        self.premises.iter().flat_map(Derivation::leaves).collect()
    }

    fn render(&self, indent: usize, out: &mut String) {
        use std::fmt::Write;
        let _ = write!(out, "{:indent$}{}", "", self.conclusion, indent = indent);
        match &self.rule {
            Some(r) => {
                let _ = writeln!(out, "  [{r}]");
            }
            None => {
                let _ = writeln!(out, "  [{}]", self.conclusion.provenance.label());
            }
        }
        for p in &self.premises {
            p.render(indent + 2, out);
        }
    }
}

impl fmt::Display for Derivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.render(0, &mut s);
        f.write_str(&s)
    }
}

pub fn explain(g: &Graph, triple: &Triple) -> Result<Derivation, ReasonerError> {
    let ids = g
        .lookup_triple(triple)
        .filter(|ids| g.contains_id(ids))
        .ok_or_else(|| ReasonerError::TripleNotFound(triple.to_string()))?;
    Ok(explain_ids(g, ids))
}

fn explain_ids(g: &Graph, ids: IdTriple) -> Derivation {
    let origin = *g.origin(&ids).expect("present");
    let t = g.triple_of(ids);
    let conclusion = Assertion { subject: t.subject, predicate: t.predicate, object: t.object, provenance: g.provenance_of(&origin) };
    match origin {
        Origin::Inferred { rule, premises } => Derivation {
            conclusion,
            rule: Some(g.name(rule).to_string()),
            premises: premises.iter().filter(|p| **p != NO_TRIPLE).map(|p| explain_ids(g, *p)).collect(),
        },
        _ => Derivation { conclusion, rule: None, premises: Vec::new() },
    }
}

/// Stored first derivation of an inferred triple: rule id and premises.
pub fn stored_derivation(g: &Graph, triple: &Triple) -> Option<(String, Vec<Triple>)> {
    let ids = g.lookup_triple(triple)?;
    match g.origin(&ids)? {
        Origin::Inferred { rule, premises } => Some((
            g.name(*rule).to_string(),
            premises.iter().filter(|p| **p != NO_TRIPLE).map(|p| g.triple_of(*p)).collect(),
        )),
        _ => None,
    }
}
