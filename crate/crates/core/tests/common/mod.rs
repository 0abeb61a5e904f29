//! Independent oracles and random generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use geofault_core::schema::{Characteristic, Range};
use geofault_core::{Decimal, Graph, Literal, Node, PatternTerm, Query, Schema, Term, Triple, TriplePattern, Unit};
use rand::seq::IndexedRandom;
use rand::Rng;

pub type Set = BTreeSet<Triple>;

fn parent_chain(schema: &Schema, c: &Term) -> Vec<Term> {
    let mut out = Vec::new();
    let mut cur = schema.get_class(c).and_then(|d| d.parent.clone());
    while let Some(p) = cur {
        cur = schema.get_class(&p).and_then(|d| d.parent.clone());
        out.push(p);
    }
    out
}

/// Applies every schema entailment to the whole set until nothing changes.
/// No indexes, no deltas: each round rescans all triples and all pairs.
pub fn naive_closure(schema: &Schema, input: &Set) -> Set {
    let ty = Term::rdf_type();
    let mut facts = input.clone();
    loop {
        let mut new = Vec::new();
        let all: Vec<&Triple> = facts.iter().collect();
        for t in &all {
            if t.predicate == ty {
                if let Node::Term(c) = &t.object {
                    for a in parent_chain(schema, c) {
                        new.push(Triple::new(t.subject.clone(), ty.clone(), a));
                    }
                }
                continue;
            }
            let Some(r) = schema.get_relation(&t.predicate) else { continue };
            new.push(Triple::new(t.subject.clone(), ty.clone(), r.domain.clone()));
            if let (Range::Class(c), Node::Term(_)) = (&r.range, &t.object) {
                new.push(Triple::new(t.object.as_term().unwrap().clone(), ty.clone(), c.clone()));
            }
            if let Some(sup) = &r.super_relation {
                new.push(Triple::new(t.subject.clone(), sup.clone(), t.object.clone()));
            }
            let Node::Term(o) = &t.object else { continue };
            if let Some(inv) = &r.inverse {
                new.push(Triple::new(o.clone(), inv.clone(), t.subject.clone()));
            }
            if r.has(Characteristic::Symmetric) {
                new.push(Triple::new(o.clone(), t.predicate.clone(), t.subject.clone()));
            }
            if r.has(Characteristic::Transitive) {
                for u in &all {
                    if u.predicate == t.predicate && u.subject == *o {
                        new.push(Triple::new(t.subject.clone(), t.predicate.clone(), u.object.clone()));
                    }
                }
            }
        }
        let before = facts.len();
        facts.extend(new);
        if facts.len() == before {
            return facts;
        }
    }
}

fn slot_value(t: &PatternTerm, env: &BTreeMap<String, Node>) -> Option<Node> {
    match t {
        PatternTerm::Const(n) => Some(n.clone()),
        PatternTerm::Var(v) => env.get(v).cloned(),
    }
}

/// Enumerates every assignment of the query variables over the active domain
/// (all nodes of the graph), pruning as soon as a fully bound pattern is
/// absent. Returns the projected rows, sorted, duplicates kept unless the
/// query is distinct.
pub fn brute_force(set: &Set, q: &Query) -> Vec<BTreeMap<String, Node>> {
    let mut domain: BTreeSet<Node> = BTreeSet::new();
    for t in set {
        domain.insert(Node::Term(t.subject.clone()));
        domain.insert(Node::Term(t.predicate.clone()));
        domain.insert(t.object.clone());
    }
    let domain: Vec<Node> = domain.into_iter().collect();
    let mut vars: Vec<String> = Vec::new();
    for p in &q.patterns {
        for v in p.variables() {
            if !vars.iter().any(|x| x == v) {
                vars.push(v.to_string());
            }
        }
    }
    let holds = |p: &TriplePattern, env: &BTreeMap<String, Node>| -> Option<bool> {
        let s = slot_value(&p.subject, env)?;
        let pr = slot_value(&p.predicate, env)?;
        let o = slot_value(&p.object, env)?;
        Some(match (s, pr) {
            (Node::Term(s), Node::Term(pr)) => set.contains(&Triple::new(s, pr, o)),
            _ => false,
        })
    };
    let mut rows = Vec::new();
    fn go(
        i: usize,
        vars: &[String],
        domain: &[Node],
        env: &mut BTreeMap<String, Node>,
        q: &Query,
        holds: &dyn Fn(&TriplePattern, &BTreeMap<String, Node>) -> Option<bool>,
        rows: &mut Vec<BTreeMap<String, Node>>,
    ) {
        if q.patterns.iter().any(|p| holds(p, env) == Some(false)) {
            return;
        }
        if i == vars.len() {
            rows.push(q.projection.iter().map(|v| (v.clone(), env[v].clone())).collect());
            return;
        }
        for d in domain {
            env.insert(vars[i].clone(), d.clone());
            go(i + 1, vars, domain, env, q, holds, rows);
        }
        env.remove(&vars[i]);
    }
    go(0, &vars, &domain, &mut BTreeMap::new(), q, &holds, &mut rows);
    rows.sort();
    if q.distinct {
        rows.dedup();
    }
    rows
}

/// Random instance graph over the schema with at most `max` triples.
pub fn random_graph<R: Rng>(rng: &mut R, schema: &std::sync::Arc<Schema>, max: usize) -> Graph {
    let classes: Vec<Term> = schema.classes().map(|c| c.term.clone()).collect();
    let object_rels: Vec<Term> =
        schema.relations().filter(|r| !r.is_literal_valued()).map(|r| r.term.clone()).collect();
    let literal_rels: Vec<Term> = schema.relations().filter(|r| r.is_literal_valued()).map(|r| r.term.clone()).collect();
    let n_inds = rng.random_range(3..=24);
    let inds: Vec<Term> = (0..n_inds).map(|i| Term::geofault(&format!("I{i}"))).collect();
    // A few hot relations make long chains and joins likely.
    let hot: Vec<Term> = ["part_of", "has_part", "east_of", "coeval", "structure_of", "older"]
        .iter()
        .filter_map(|l| schema.resolve_local(l).cloned())
        .collect();
    let mut g = Graph::new(schema.clone());
    let target = rng.random_range(0..=max);
    while g.len() < target {
        let s = inds.choose(rng).unwrap().clone();
        let roll = rng.random_range(0..100);
        if roll < 30 {
            g.insert(s, Term::rdf_type(), classes.choose(rng).unwrap().clone()).unwrap();
        } else if roll < 35 && !literal_rels.is_empty() {
            let lit = Literal::measure(Decimal::from_micros(rng.random_range(0..90_000_000)), Unit::Degree);
            g.insert(s, literal_rels.choose(rng).unwrap().clone(), lit).unwrap();
        } else {
            let r = if roll < 75 { hot.choose(rng) } else { object_rels.choose(rng) }.unwrap().clone();
            g.insert(s, r, inds.choose(rng).unwrap().clone()).unwrap();
        }
    }
    g
}

/// Random connected conjunctive query built from a walk over `set`, so most
/// queries have answers. Some constants are swapped for random nodes.
pub fn random_query<R: Rng>(rng: &mut R, set: &Set, max_patterns: usize) -> Option<Query> {
    let triples: Vec<&Triple> = set.iter().collect();
    let first = *triples.choose(rng)?;
    let mut picked = vec![first.clone()];
    let n = rng.random_range(1..=max_patterns);
    for _ in 1..n {
        let touched: BTreeSet<Node> = picked
            .iter()
            .flat_map(|t| [Node::Term(t.subject.clone()), t.object.clone()])
            .collect();
        let near: Vec<&&Triple> = triples
            .iter()
            .filter(|t| touched.contains(&Node::Term(t.subject.clone())) || touched.contains(&t.object))
            .collect();
        picked.push((**near.choose(rng)?).clone());
    }
    let nodes: Vec<Node> = triples.iter().map(|t| Node::Term(t.subject.clone())).collect();
    let mut var_of: BTreeMap<Node, String> = BTreeMap::new();
    let mut keep_const: BTreeSet<Node> = BTreeSet::new();
    let mut slot = |rng: &mut R, n: Node, var_of: &mut BTreeMap<Node, String>| -> PatternTerm {
        if keep_const.contains(&n) {
            return PatternTerm::Const(n);
        }
        if let Some(v) = var_of.get(&n) {
            return PatternTerm::var(v);
        }
        if n.is_literal() || rng.random_bool(0.3) {
            keep_const.insert(n.clone());
            if rng.random_bool(0.1) {
                return PatternTerm::Const(nodes.choose(rng).unwrap().clone());
            }
            return PatternTerm::Const(n);
        }
        let v = format!("v{}", var_of.len());
        var_of.insert(n, v.clone());
        PatternTerm::var(&v)
    };
    let mut patterns = Vec::new();
    let mut pred_var = 0;
    for t in picked {
        let s = slot(rng, Node::Term(t.subject.clone()), &mut var_of);
        let p = if pred_var == 0 && rng.random_bool(0.1) {
            pred_var += 1;
            PatternTerm::var("p0")
        } else {
            PatternTerm::Const(Node::Term(t.predicate.clone()))
        };
        // Class objects stay constant most of the time: a chain of `?x TYPE ?t`
        // patterns multiplies the answer count by the depth of the taxonomy.
        let o = if t.predicate.is_rdf_type() && !var_of.contains_key(&t.object) && rng.random_bool(0.85) {
            PatternTerm::Const(t.object.clone())
        } else {
            slot(rng, t.object.clone(), &mut var_of)
        };
        patterns.push(TriplePattern { subject: s, predicate: p, object: o });
    }
    let mut vars: Vec<String> = Vec::new();
    for p in &patterns {
        for v in p.variables() {
            if !vars.iter().any(|x| x == v) {
                vars.push(v.to_string());
            }
        }
    }
    if vars.is_empty() {
        return None;
    }
    let mut projection: Vec<String> = vars.iter().filter(|_| rng.random_bool(0.6)).cloned().collect();
    if projection.is_empty() {
        projection.push(vars[0].clone());
    }
    Some(Query { patterns, projection, distinct: rng.random_bool(0.5) })
}
