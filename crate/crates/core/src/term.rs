//! Terms, literals and the fixed namespace table.
//!
//! A [`Term`] is a `(namespace, local_name)` pair where the namespace is a
//! short prefix tag. Well-known prefixes map to fixed IRIs; documents may
//! declare additional prefixes of their own.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::TermError;

/// A prefix tag bound to a namespace IRI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Namespace {
    pub prefix: &'static str,
    pub iri: &'static str,
}

pub const BFO: &str = "bfo";
pub const GEOCORE: &str = "geocore";
pub const GEOFAULT: &str = "geofault";
pub const META: &str = "geofault-meta";
pub const PROJECT: &str = "geofault-proj";
pub const RDF: &str = "rdf";
pub const RDFS: &str = "rdfs";
pub const OWL: &str = "owl";
pub const XSD: &str = "xsd";
pub const SKOS: &str = "skos";
pub const UNIT: &str = "unit";

/// Prefixes whose IRIs are fixed for every document and schema.
pub const WELL_KNOWN: &[Namespace] = &[
    Namespace { prefix: BFO, iri: "http://purl.obolibrary.org/obo/bfo#" },
    Namespace { prefix: GEOCORE, iri: "https://w3id.org/geocore#" },
    Namespace { prefix: GEOFAULT, iri: "https://w3id.org/geofault#" },
    Namespace { prefix: META, iri: "https://w3id.org/geofault/meta#" },
    Namespace { prefix: PROJECT, iri: "https://w3id.org/geofault/project#" },
    Namespace { prefix: RDF, iri: "http://www.w3.org/1999/02/22-rdf-syntax-ns#" },
    Namespace { prefix: RDFS, iri: "http://www.w3.org/2000/01/rdf-schema#" },
    Namespace { prefix: OWL, iri: "http://www.w3.org/2002/07/owl#" },
    Namespace { prefix: XSD, iri: "http://www.w3.org/2001/XMLSchema#" },
    Namespace { prefix: SKOS, iri: "http://www.w3.org/2004/02/skos/core#" },
    Namespace { prefix: UNIT, iri: "https://w3id.org/geofault/unit#" },
];

pub fn well_known_iri(prefix: &str) -> Option<&'static str> {
    WELL_KNOWN.iter().find(|ns| ns.prefix == prefix).map(|ns| ns.iri)
}

pub fn well_known_prefix(iri: &str) -> Option<&'static str> {
    WELL_KNOWN.iter().find(|ns| ns.iri == iri).map(|ns| ns.prefix)
}

/// Returns true when `s` matches `[A-Za-z][A-Za-z0-9_]*`.
pub fn is_valid_local_name(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn is_valid_prefix(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') && !s.ends_with('-')
}

/// Interned-friendly identifier naming a class, relation or individual.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Term {
    namespace: Arc<str>,
    local: Arc<str>,
}

impl Term {
    pub fn new(namespace: &str, local: &str) -> Result<Self, TermError> {
        if !is_valid_prefix(namespace) {
            return Err(TermError::InvalidNamespace(namespace.to_string()));
        }
        if !is_valid_local_name(local) {
            return Err(TermError::InvalidLocalName(local.to_string()));
        }
        Ok(Term { namespace: namespace.into(), local: local.into() })
    }

    /// Builds a term from parts known to be valid. Panics otherwise.
    pub fn known(namespace: &str, local: &str) -> Self {
        Term::new(namespace, local).unwrap_or_else(|e| panic!("invalid built-in term: {e}"))
    }

    pub fn geofault(local: &str) -> Self {
        Term::known(GEOFAULT, local)
    }

    pub fn bfo(local: &str) -> Self {
        Term::known(BFO, local)
    }

    pub fn geocore(local: &str) -> Self {
        Term::known(GEOCORE, local)
    }

    /// The reserved typing predicate `rdf:type`.
    pub fn rdf_type() -> Self {
        Term::known(RDF, "type")
    }

    pub fn namespace(&self) -> &str {
        &self.namespace
    }

    pub fn local_name(&self) -> &str {
        &self.local
    }

    pub fn is_rdf_type(&self) -> bool {
        &*self.namespace == RDF && &*self.local == "type"
    }

    /// Full IRI when the namespace is well known.
    pub fn iri(&self) -> Option<String> {
        well_known_iri(&self.namespace).map(|ns| format!("{ns}{}", self.local))
    }
}

impl Ord for Term {
    fn cmp(&self, other: &Self) -> Ordering {
        self.namespace
            .cmp(&other.namespace)
            .then_with(|| self.local.cmp(&other.local))
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.namespace, self.local)
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for Term {
    type Err = TermError;

    /// Parses `prefix:local`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            Some((ns, local)) => Term::new(ns, local),
            None => Err(TermError::MissingPrefix(s.to_string())),
        }
    }
}

impl Serialize for Term {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Term {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Fixed-point decimal with six fractional digits.
///
/// Stored as an integer count of millionths so that comparison is exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Decimal(i64);

pub const DECIMAL_SCALE: i64 = 1_000_000;
const FRACTION_DIGITS: usize = 6;

impl Decimal {
    pub fn from_micros(micros: i64) -> Self {
        Decimal(micros)
    }

    pub fn from_int(v: i64) -> Option<Self> {
        v.checked_mul(DECIMAL_SCALE).map(Decimal)
    }

    /// Rounds to six fractional digits. Rejects non-finite or out-of-range input.
    pub fn from_f64(v: f64) -> Option<Self> {
        if !v.is_finite() {
            return None;
        }
        let scaled = (v * DECIMAL_SCALE as f64).round();
        if scaled.abs() >= i64::MAX as f64 {
            return None;
        }
        Some(Decimal(scaled as i64))
    }

    pub fn micros(self) -> i64 {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / DECIMAL_SCALE as f64
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }
}

impl FromStr for Decimal {
    type Err = TermError;

    /// Accepts `[+-]?[0-9]+(\.[0-9]+)?` with at most six fractional digits.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TermError::InvalidDecimal(s.to_string());
        let (negative, digits) = match s.as_bytes().first() {
            Some(b'-') => (true, &s[1..]),
            Some(b'+') => (false, &s[1..]),
            _ => (false, s),
        };
        let (int_part, frac_part) = match digits.split_once('.') {
            Some((i, f)) => (i, f),
            None => (digits, ""),
        };
        if int_part.is_empty() || !int_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        if digits.contains('.') && frac_part.is_empty() {
            return Err(bad());
        }
        if !frac_part.bytes().all(|b| b.is_ascii_digit()) || frac_part.len() > FRACTION_DIGITS {
            return Err(bad());
        }
        let int: i64 = int_part.parse().map_err(|_| bad())?;
        let mut frac: i64 = 0;
        for (i, b) in frac_part.bytes().enumerate() {
            frac += i64::from(b - b'0') * 10_i64.pow((FRACTION_DIGITS - 1 - i) as u32);
        }
        let magnitude = int
            .checked_mul(DECIMAL_SCALE)
            .and_then(|v| v.checked_add(frac))
            .ok_or_else(bad)?;
        Ok(Decimal(if negative { -magnitude } else { magnitude }))
    }
}

impl Serialize for Decimal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Decimal {
    /// Accepts the lexical string form or a JSON number.
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Decimal;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a decimal number or string")
            }

            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<Decimal, E> {
                v.parse().map_err(E::custom)
            }

            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<Decimal, E> {
                Decimal::from_int(v).ok_or_else(|| E::custom(format!("{v} is out of range")))
            }

            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<Decimal, E> {
                i64::try_from(v).ok().and_then(Decimal::from_int).ok_or_else(|| E::custom(format!("{v} is out of range")))
            }

            fn visit_f64<E: serde::de::Error>(self, v: f64) -> Result<Decimal, E> {
                Decimal::from_f64(v).ok_or_else(|| E::custom(format!("{v} is out of range")))
            }
        }
        deserializer.deserialize_any(V)
    }
}

impl fmt::Display for Decimal {
    /// Up to six fractional digits, trailing zeros trimmed.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let int = abs / DECIMAL_SCALE as u64;
        let frac = abs % DECIMAL_SCALE as u64;
        if frac == 0 {
            return write!(f, "{sign}{int}");
        }
        let frac = format!("{frac:06}");
        write!(f, "{sign}{int}.{}", frac.trim_end_matches('0'))
    }
}

/// Measurement unit attached to a decimal literal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    Degree,
    Meter,
}

impl Unit {
    /// The datatype term used to encode this unit in Turtle.
    pub fn datatype(self) -> Term {
        match self {
            Unit::Degree => Term::known(UNIT, "degree"),
            Unit::Meter => Term::known(UNIT, "meter"),
        }
    }

    pub fn from_datatype(t: &Term) -> Option<Unit> {
        if t.namespace() != UNIT {
            return None;
        }
        match t.local_name() {
            "degree" => Some(Unit::Degree),
            "meter" => Some(Unit::Meter),
            _ => None,
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Unit::Degree => "degree",
            Unit::Meter => "meter",
        })
    }
}

/// Literal values. Ordering is by kind, then unit, then value.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Literal {
    String(String),
    Decimal { unit: Option<Unit>, value: Decimal },
    Boolean(bool),
}

impl Literal {
    pub fn decimal(value: Decimal) -> Self {
        Literal::Decimal { unit: None, value }
    }

    pub fn measure(value: Decimal, unit: Unit) -> Self {
        Literal::Decimal { unit: Some(unit), value }
    }

    /// Lexical form without quotes or datatype.
    pub fn lexical(&self) -> String {
        match self {
            Literal::String(s) => s.clone(),
            Literal::Decimal { value, .. } => value.to_string(),
            Literal::Boolean(b) => b.to_string(),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::String(s) => write!(f, "{s:?}"),
            Literal::Decimal { value, unit: None } => write!(f, "{value}"),
            Literal::Decimal { value, unit: Some(u) } => write!(f, "{value} {u}"),
            Literal::Boolean(b) => write!(f, "{b}"),
        }
    }
}

/// Graph node: a term, or a literal (object position only).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Term(Term),
    Literal(Literal),
}

impl Node {
    pub fn as_term(&self) -> Option<&Term> {
        match self {
            Node::Term(t) => Some(t),
            Node::Literal(_) => None,
        }
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Node::Literal(_))
    }
}

impl From<Term> for Node {
    fn from(t: Term) -> Self {
        Node::Term(t)
    }
}

impl From<Literal> for Node {
    fn from(l: Literal) -> Self {
        Node::Literal(l)
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Term(t) => t.fmt(f),
            Node::Literal(l) => l.fmt(f),
        }
    }
}

impl Serialize for Node {
    /// Terms as `prefix:local`, literals in Turtle form.
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Node::Term(t) => serializer.collect_str(t),
            Node::Literal(l) => serializer.serialize_str(&crate::rdf_io::literal_text(l)),
        }
    }
}

impl FromStr for Node {
    type Err = TermError;

    /// Inverse of the serialized form.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TermError::InvalidLiteral(s.to_string());
        if let Some(rest) = s.strip_prefix('"') {
            let (body, tail) = rest.rsplit_once('"').ok_or_else(bad)?;
            if tail.is_empty() {
                return Ok(Node::Literal(Literal::String(body.replace("\\\"", "\"").replace("\\\\", "\\"))));
            }
            let unit = tail.strip_prefix("^^").and_then(|d| d.parse::<Term>().ok()).and_then(|d| Unit::from_datatype(&d));
            let value: Decimal = body.parse().map_err(|_| bad())?;
            return unit.map(|u| Node::Literal(Literal::measure(value, u))).ok_or_else(bad);
        }
        match s {
            "true" => return Ok(Node::Literal(Literal::Boolean(true))),
            "false" => return Ok(Node::Literal(Literal::Boolean(false))),
            _ => {}
        }
        if s.starts_with(|c: char| c.is_ascii_digit() || c == '-' || c == '+') {
            return s.parse::<Decimal>().map(|d| Node::Literal(Literal::decimal(d))).map_err(|_| bad());
        }
        s.parse::<Term>().map(Node::Term)
    }
}

impl<'de> Deserialize<'de> for Node {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
