//! Conjunctive queries: text syntax, evaluation and answer explanations.
//!
//! ```text
//! SELECT ?f [DISTINCT] WHERE ?f TYPE FaultVolume ; ?f has_part ?c
//! ```
//!
//! Bare names resolve against the schema's classes and relations, and
//! otherwise name `geofault:` individuals. `TYPE` (or `a`) is `rdf:type`;
//! on a materialized graph it matches every inferred type.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::error::{ParseError, QueryError};
use crate::schema::{builtin_schema, Schema};
use crate::store::{Assertion, Graph, Id, IdTriple, PatternTerm, Triple, TriplePattern};
use crate::term::{is_valid_local_name, Decimal, Literal, Node, Term, GEOFAULT};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Query {
    pub patterns: Vec<TriplePattern>,
    pub projection: Vec<String>,
    pub distinct: bool,
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SELECT")?;
        for v in &self.projection {
            write!(f, " ?{v}")?;
        }
        if self.distinct {
            f.write_str(" DISTINCT")?;
        }
        f.write_str(" WHERE ")?;
        for (i, p) in self.patterns.iter().enumerate() {
            if i > 0 {
                f.write_str(" ; ")?;
            }
            let render = |t: &PatternTerm| match t {
                PatternTerm::Var(v) => format!("?{v}"),
                PatternTerm::Const(Node::Term(t)) if t.is_rdf_type() => "TYPE".to_string(),
                PatternTerm::Const(Node::Term(t)) => t.to_string(),
                PatternTerm::Const(Node::Literal(l)) => crate::rdf_io::literal_text(l),
            };
            write!(f, "{} {} {}", render(&p.subject), render(&p.predicate), render(&p.object))?;
        }
        Ok(())
    }
}

/// Values of the projected variables for one answer.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct BindingSet {
    pub bindings: BTreeMap<String, Node>,
}

impl BindingSet {
    pub fn get(&self, var: &str) -> Option<&Node> {
        self.bindings.get(var)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PathExplanation {
    /// One witnessing edge per pattern, in pattern order.
    pub edges: Vec<Assertion>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExplainedAnswer {
    pub binding: BindingSet,
    pub explanation: PathExplanation,
}

pub fn parse_query(text: &str) -> Result<Query, ParseError> {
    parse_query_with(text, &builtin_schema())
}

pub fn parse_query_with(text: &str, schema: &Schema) -> Result<Query, ParseError> {
    let tokens = lex(text)?;
    QueryParser { tokens, pos: 0, schema, eof: end_of(text) }.query()
}

#[derive(Debug, Clone, PartialEq)]
enum QTok {
    Var(String),
    Word(String),
    PName(String, String),
    Str(String),
    Number(String),
    Semi,
    Dot,
}

#[derive(Debug, Clone)]
struct QToken {
    tok: QTok,
    line: usize,
    column: usize,
    text: String,
}

fn end_of(text: &str) -> (usize, usize) {
    let mut pos = (1, 1);
    for c in text.chars() {
        pos = if c == '\n' { (pos.0 + 1, 1) } else { (pos.0, pos.1 + 1) };
    }
    pos
}

fn perr(line: usize, column: usize, message: impl Into<String>, snippet: &str) -> ParseError {
    ParseError { line, column, message: message.into(), snippet: snippet.chars().take(24).collect() }
}

fn lex(text: &str) -> Result<Vec<QToken>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let is_name = |c: char| c.is_ascii_alphanumeric() || c == '_' || c == '-';
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let start = i;
        let advance = |i: &mut usize, line: &mut usize, col: &mut usize| {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col);
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col);
            }
            continue;
        }
        let tok = match c {
            ';' => {
                advance(&mut i, &mut line, &mut col);
                QTok::Semi
            }
            '.' => {
                advance(&mut i, &mut line, &mut col);
                QTok::Dot
            }
            '?' => {
                advance(&mut i, &mut line, &mut col);
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    advance(&mut i, &mut line, &mut col);
                }
                let name: String = chars[start + 1..i].iter().collect();
                if !is_valid_local_name(&name) {
                    return Err(perr(l0, c0, "variable names look like ?name", &format!("?{name}")));
                }
                QTok::Var(name)
            }
            '"' => {
                advance(&mut i, &mut line, &mut col);
                let mut s = String::new();
                loop {
                    if i >= chars.len() || chars[i] == '\n' {
                        return Err(perr(l0, c0, "unterminated string", &format!("\"{s}")));
                    }
                    let ch = chars[i];
                    advance(&mut i, &mut line, &mut col);
                    match ch {
                        '"' => break,
                        '\\' if i < chars.len() => {
                            let e = chars[i];
                            advance(&mut i, &mut line, &mut col);
                            s.push(match e {
                                'n' => '\n',
                                't' => '\t',
                                other => other,
                            });
                        }
                        ch => s.push(ch),
                    }
                }
                QTok::Str(s)
            }
            '+' | '-' | '0'..='9' => {
                advance(&mut i, &mut line, &mut col);
                while i < chars.len()
                    && (chars[i].is_ascii_digit()
                        || (chars[i] == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())))
                {
                    advance(&mut i, &mut line, &mut col);
                }
                QTok::Number(chars[start..i].iter().collect())
            }
            c if c.is_ascii_alphabetic() => {
                while i < chars.len() && is_name(chars[i]) {
                    advance(&mut i, &mut line, &mut col);
                }
                let word: String = chars[start..i].iter().collect();
                if i < chars.len() && chars[i] == ':' {
                    advance(&mut i, &mut line, &mut col);
                    let ls = i;
                    while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                        advance(&mut i, &mut line, &mut col);
                    }
                    QTok::PName(word, chars[ls..i].iter().collect())
                } else {
                    QTok::Word(word)
                }
            }
            other => return Err(perr(l0, c0, format!("unexpected character `{other}`"), &other.to_string())),
        };
        out.push(QToken { tok, line: l0, column: c0, text: chars[start..i].iter().collect() });
    }
    Ok(out)
}

struct QueryParser<'a> {
    tokens: Vec<QToken>,
    pos: usize,
    schema: &'a Schema,
    eof: (usize, usize),
}

impl QueryParser<'_> {
    fn peek(&self) -> Option<&QToken> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self, what: &str) -> Result<QToken, ParseError> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t.ok_or_else(|| perr(self.eof.0, self.eof.1, format!("unexpected end of query, expected {what}"), ""))
    }

    fn at(t: &QToken, message: impl Into<String>) -> ParseError {
        perr(t.line, t.column, message, &t.text)
    }

    fn keyword(t: &QToken, kw: &str) -> bool {
        matches!(&t.tok, QTok::Word(w) if w.eq_ignore_ascii_case(kw))
    }

    fn query(mut self) -> Result<Query, ParseError> {
        let select = self.next("SELECT")?;
        if !Self::keyword(&select, "SELECT") {
            return Err(Self::at(&select, "query must start with SELECT"));
        }
        let mut distinct = false;
        let mut projection: Vec<(String, QToken)> = Vec::new();
        loop {
            let t = self.next("a variable or WHERE")?;
            match &t.tok {
                QTok::Var(v) => {
                    if !projection.iter().any(|(p, _)| p == v) {
                        projection.push((v.clone(), t.clone()));
                    }
                }
                _ if Self::keyword(&t, "DISTINCT") => distinct = true,
                _ if Self::keyword(&t, "WHERE") => {
                    if projection.is_empty() {
                        return Err(Self::at(&t, "SELECT needs at least one variable"));
                    }
                    break;
                }
                _ => return Err(Self::at(&t, "expected a variable, DISTINCT or WHERE")),
            }
        }
        let mut patterns = Vec::new();
        loop {
            patterns.push(self.pattern()?);
            match self.peek().map(|t| t.tok.clone()) {
                None => break,
                Some(QTok::Semi) => {
                    self.pos += 1;
                    if matches!(self.peek().map(|t| &t.tok), None | Some(QTok::Dot)) {
                        self.pos += usize::from(self.peek().is_some());
                        break;
                    }
                }
                Some(QTok::Dot) => {
                    self.pos += 1;
                    break;
                }
                Some(_) => {
                    let t = self.peek().expect("peeked").clone();
                    return Err(Self::at(&t, "expected `;` between patterns"));
                }
            }
        }
        if let Some(t) = self.peek() {
            return Err(Self::at(t, "unexpected text after the last pattern"));
        }
        let used: BTreeSet<&str> = patterns.iter().flat_map(TriplePattern::variables).collect();
        for (v, t) in &projection {
            if !used.contains(v.as_str()) {
                return Err(Self::at(t, format!("projected variable ?{v} does not appear in any pattern")));
            }
        }
        Ok(Query { patterns, projection: projection.into_iter().map(|(v, _)| v).collect(), distinct })
    }

    fn pattern(&mut self) -> Result<TriplePattern, ParseError> {
        let s = self.next("a subject")?;
        let subject = match &s.tok {
            QTok::Var(v) => PatternTerm::Var(v.clone()),
            QTok::Word(_) | QTok::PName(..) => PatternTerm::from(self.term(&s, false)?),
            _ => return Err(Self::at(&s, "expected a subject term or variable")),
        };
        let p = self.next("a relation")?;
        let predicate = match &p.tok {
            QTok::Var(v) => PatternTerm::Var(v.clone()),
            QTok::Word(w) if w == "TYPE" || w == "a" => PatternTerm::from(Term::rdf_type()),
            QTok::Word(_) | QTok::PName(..) => {
                let t = self.term(&p, true)?;
                if !t.is_rdf_type() && !self.schema.is_relation(&t) {
                    return Err(Self::at(&p, format!("{t} is not a relation of the schema")));
                }
                PatternTerm::from(t)
            }
            _ => return Err(Self::at(&p, "expected a relation, TYPE or a variable")),
        };
        let o = self.next("an object")?;
        let object = match &o.tok {
            QTok::Var(v) => PatternTerm::Var(v.clone()),
            QTok::Word(w) if w == "true" || w == "false" => PatternTerm::Const(Node::Literal(Literal::Boolean(w == "true"))),
            QTok::Word(_) | QTok::PName(..) => PatternTerm::from(self.term(&o, false)?),
            QTok::Str(s) => PatternTerm::Const(Node::Literal(Literal::String(s.clone()))),
            QTok::Number(n) => {
                let d: Decimal = n.parse().map_err(|_| Self::at(&o, "invalid number"))?;
                PatternTerm::Const(Node::Literal(Literal::decimal(d)))
            }
            _ => return Err(Self::at(&o, "expected an object term, literal or variable")),
        };
        Ok(TriplePattern { subject, predicate, object })
    }

    fn term(&self, t: &QToken, relation: bool) -> Result<Term, ParseError> {
        match &t.tok {
            QTok::PName(prefix, local) => {
                if prefix == "rdf" && local == "type" {
                    return Ok(Term::rdf_type());
                }
                Term::new(prefix, local).map_err(|e| Self::at(t, e.to_string()))
            }
            QTok::Word(w) => {
                if let Some(found) = self.schema.resolve_local(w) {
                    return Ok(found.clone());
                }
                if relation {
                    return Err(Self::at(t, format!("unknown relation `{w}`")));
                }
                Term::new(GEOFAULT, w).map_err(|e| Self::at(t, e.to_string()))
            }
            _ => Err(Self::at(t, "expected a term")),
        }
    }
}

#[derive(Clone, Copy)]
enum QSlot {
    Const(Id),
    Var(usize),
}

struct Plan {
    atoms: Vec<[QSlot; 3]>,
    /// Atom indexes in evaluation order.
    order: Vec<usize>,
    vars: Vec<String>,
}

/// Resolves constants to ids. `None` when a constant is absent from the graph.
fn plan(g: &Graph, q: &Query, fixed: &BTreeMap<String, Node>) -> Option<Plan> {
    let mut vars: Vec<String> = Vec::new();
    let mut atoms = Vec::with_capacity(q.patterns.len());
    for p in &q.patterns {
        let mut atom = [QSlot::Var(0); 3];
        for (i, pos) in p.positions().into_iter().enumerate() {
            atom[i] = match pos {
                PatternTerm::Const(n) => QSlot::Const(g.id_of(n)?),
                PatternTerm::Var(v) => match fixed.get(v) {
                    Some(n) => QSlot::Const(g.id_of(n)?),
                    None => match vars.iter().position(|x| x == v) {
                        Some(k) => QSlot::Var(k),
                        None => {
                            vars.push(v.clone());
                            QSlot::Var(vars.len() - 1)
                        }
                    },
                },
            };
        }
        atoms.push(atom);
    }
    // Greedy: cheapest pattern first, then prefer patterns joined to bound
    // variables, each scored by index statistics.
    let mut bound = vec![false; vars.len()];
    let mut remaining: Vec<usize> = (0..atoms.len()).collect();
    let mut order = Vec::with_capacity(atoms.len());
    while !remaining.is_empty() {
        let score = |ai: usize| -> (bool, usize, usize) {
            let a = &atoms[ai];
            let c = |s: QSlot| match s {
                QSlot::Const(id) => Some(id),
                QSlot::Var(_) => None,
            };
            let mut est = g.estimate(c(a[0]), c(a[1]), c(a[2]));
            let mut joined = false;
            for s in a {
                if let QSlot::Var(v) = s {
                    if bound[*v] {
                        joined = true;
                        est /= 16;
                    }
                }
            }
            let connected = joined || order.is_empty() || a.iter().all(|s| matches!(s, QSlot::Const(_)));
            (!connected, est, ai)
        };
        let (k, _) = remaining
            .iter()
            .enumerate()
            .min_by_key(|(_, &ai)| score(ai))
            .expect("non-empty");
        let ai = remaining.remove(k);
        for s in &atoms[ai] {
            if let QSlot::Var(v) = s {
                bound[*v] = true;
            }
        }
        order.push(ai);
    }
    Some(Plan { atoms, order, vars })
}

/// Calls `emit` with every homomorphism: variable values and the matched
/// triple per pattern (in pattern order).
fn solve(g: &Graph, plan: &Plan, emit: &mut dyn FnMut(&[Option<Id>], &[IdTriple])) {
    let mut env = vec![None; plan.vars.len()];
    let mut witness = vec![[0; 3]; plan.atoms.len()];
    step(g, plan, 0, &mut env, &mut witness, emit);
}

fn step(
    g: &Graph,
    plan: &Plan,
    depth: usize,
    env: &mut Vec<Option<Id>>,
    witness: &mut Vec<IdTriple>,
    emit: &mut dyn FnMut(&[Option<Id>], &[IdTriple]),
) {
    if depth == plan.order.len() {
        emit(env, witness);
        return;
    }
    let ai = plan.order[depth];
    let atom = plan.atoms[ai];
    let get = |s: QSlot, env: &[Option<Id>]| match s {
        QSlot::Const(c) => Some(c),
        QSlot::Var(v) => env[v],
    };
    let (s, p, o) = (get(atom[0], env), get(atom[1], env), get(atom[2], env));
    let matches: Vec<IdTriple> = g.scan(s, p, o).collect();
    for t in matches {
        let saved = env.clone();
        let mut ok = true;
        for (slot, &v) in atom.iter().zip(&t) {
            if let QSlot::Var(k) = *slot {
                match env[k] {
                    Some(b) if b != v => {
                        ok = false;
                        break;
                    }
                    Some(_) => {}
                    None => env[k] = Some(v),
                }
            }
        }
        if ok {
            witness[ai] = t;
            step(g, plan, depth + 1, env, witness, emit);
        }
        *env = saved;
    }
}

fn project(g: &Graph, plan: &Plan, q: &Query, env: &[Option<Id>], fixed: &BTreeMap<String, Node>) -> BindingSet {
    let bindings = q
        .projection
        .iter()
        .map(|v| {
            let node = match fixed.get(v) {
                Some(n) => n.clone(),
                None => {
                    let k = plan.vars.iter().position(|x| x == v).expect("projected variable is planned");
                    g.node(env[k].expect("all variables bound")).clone()
                }
            };
            (v.clone(), node)
        })
        .collect();
    BindingSet { bindings }
}

/// All answers, sorted by projected values. Duplicates are kept unless the
/// query is `DISTINCT`.
pub fn evaluate(g: &Graph, q: &Query) -> Vec<BindingSet> {
    let fixed = BTreeMap::new();
    let Some(plan) = plan(g, q, &fixed) else { return Vec::new() };
    let mut out = Vec::new();
    solve(g, &plan, &mut |env, _| out.push(project(g, &plan, q, env, &fixed)));
    out.sort();
    if q.distinct {
        out.dedup();
    }
    out
}

/// Witness edges for one answer. Among all homomorphisms producing `b`, the
/// one with the smallest edge list (pattern order, triple order) is chosen.
pub fn explain_answer(g: &Graph, q: &Query, b: &BindingSet) -> Result<PathExplanation, QueryError> {
    if b.bindings.len() != q.projection.len() || q.projection.iter().any(|v| !b.bindings.contains_key(v)) {
        return Err(QueryError::BindingNotAnAnswer);
    }
    let plan = plan(g, q, &b.bindings).ok_or(QueryError::BindingNotAnAnswer)?;
    let mut best: Option<Vec<Triple>> = None;
    solve(g, &plan, &mut |_, witness| {
        let edges: Vec<Triple> = witness.iter().map(|t| g.triple_of(*t)).collect();
        if best.as_ref().is_none_or(|b| edges < *b) {
            best = Some(edges);
        }
    });
    let edges = best.ok_or(QueryError::BindingNotAnAnswer)?;
    Ok(PathExplanation {
        edges: edges
            .into_iter()
            .map(|t| {
                let provenance = g.provenance(&t).expect("witness edge is stored");
                Assertion { subject: t.subject, predicate: t.predicate, object: t.object, provenance }
            })
            .collect(),
    })
}

/// Evaluates and explains every distinct answer.
pub fn evaluate_explained(g: &Graph, q: &Query) -> Vec<ExplainedAnswer> {
    let mut answers = evaluate(g, q);
    answers.dedup();
    answers
        .into_iter()
        .map(|binding| {
            let explanation = explain_answer(g, q, &binding).expect("answers are explainable");
            ExplainedAnswer { binding, explanation }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reasoner::{compile_rules, materialize};

    fn gf(l: &str) -> Term {
        Term::geofault(l)
    }

    const CQ1: &str = "SELECT ?f WHERE ?f TYPE FaultVolume ; ?f has_part ?c ; ?c TYPE FaultCore ; ?c constituted_by ?r ; ?r TYPE FaultBreccia ; ?s structure_of ?f ; ?s TYPE StrikeSlipFault";

    #[test]
    fn parses_seven_patterns() {
        let q = parse_query(CQ1).unwrap();
        assert_eq!(q.patterns.len(), 7);
        assert_eq!(q.projection, ["f"]);
        assert_eq!(q.patterns[1].predicate, PatternTerm::from(Term::bfo("has_part")));
        assert_eq!(q.patterns[3].predicate, PatternTerm::from(Term::geocore("constituted_by")));
    }

    #[test]
    fn simple_and_missing_where() {
        assert!(parse_query("SELECT ?x WHERE ?x TYPE FaultVolume").is_ok());
        let e = parse_query("SELECT ?x ?x TYPE FaultVolume").unwrap_err();
        assert_eq!((e.line, e.column), (1, 14));
        assert!(parse_query("SELECT ?y WHERE ?x TYPE FaultVolume").is_err());
        assert!(parse_query("SELECT ?x WHERE ?x bogus_rel ?y").is_err());
    }

    #[test]
    fn display_round_trips() {
        let q = parse_query(&format!("# comment\n{CQ1} ;")).unwrap();
        assert_eq!(parse_query(&q.to_string()).unwrap(), q);
        let d = parse_query("SELECT DISTINCT ?a WHERE FV7 east_of ?a").unwrap();
        assert!(d.distinct);
        assert_eq!(d.patterns[0].subject, PatternTerm::from(gf("FV7")));
    }

    fn small_graph() -> Graph {
        let s = builtin_schema();
        let mut g = Graph::new(s.clone());
        g.insert(gf("FV7"), Term::rdf_type(), gf("FaultVolume")).unwrap();
        g.insert(gf("C7"), Term::bfo("part_of"), gf("FV7")).unwrap();
        g.insert(gf("C7"), Term::rdf_type(), gf("FaultCore")).unwrap();
        g.insert(gf("C7"), Term::geocore("constituted_by"), gf("B7")).unwrap();
        g.insert(gf("B7"), Term::rdf_type(), gf("FaultBreccia")).unwrap();
        g.insert(gf("S7"), Term::rdf_type(), gf("DextralStrikeSlipFault")).unwrap();
        g.insert(gf("S7"), gf("structure_of"), gf("FV7")).unwrap();
        materialize(&g, &compile_rules(&s)).unwrap()
    }

    #[test]
    fn evaluates_through_inference() {
        let g = small_graph();
        let q = parse_query(CQ1).unwrap();
        let answers = evaluate(&g, &q);
        assert_eq!(answers.len(), 1);
        assert_eq!(answers[0].get("f"), Some(&Node::Term(gf("FV7"))));
        let ex = explain_answer(&g, &q, &answers[0]).unwrap();
        assert_eq!(ex.edges.len(), 7);
        assert_eq!(ex.edges[1].triple(), Triple::new(gf("FV7"), Term::bfo("has_part"), gf("C7")));
    }

    #[test]
    fn unsatisfiable_and_wrong_binding() {
        let g = small_graph();
        let q = parse_query("SELECT ?x WHERE ?x TYPE Horst").unwrap();
        assert!(evaluate(&g, &q).is_empty());
        let q = parse_query("SELECT ?x WHERE ?x TYPE FaultVolume").unwrap();
        let bad = BindingSet { bindings: [("x".to_string(), Node::Term(gf("C7")))].into() };
        assert_eq!(explain_answer(&g, &q, &bad), Err(QueryError::BindingNotAnAnswer));
    }

    #[test]
    fn distinct_collapses_duplicates() {
        let g = small_graph();
        let all = evaluate(&g, &parse_query("SELECT ?x WHERE ?x TYPE ?t").unwrap());
        let distinct = evaluate(&g, &parse_query("SELECT DISTINCT ?x WHERE ?x TYPE ?t").unwrap());
        assert!(all.len() > distinct.len());
        assert_eq!(distinct.len(), 4);
    }
}
