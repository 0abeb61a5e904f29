//! Deterministic Turtle serializer.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write;

use crate::term::{well_known_iri, Literal, Node, Term};

struct Renderer<'a> {
    /// Namespace IRI to the label chosen for it.
    by_iri: HashMap<&'a str, &'a str>,
    prefixes: &'a BTreeMap<String, String>,
}

impl<'a> Renderer<'a> {
    fn new(prefixes: &'a BTreeMap<String, String>) -> Self {
        let mut by_iri = HashMap::new();
        // BTreeMap order makes the first label win for duplicated IRIs.
        for (label, iri) in prefixes {
            by_iri.entry(iri.as_str()).or_insert(label.as_str());
        }
        Renderer { by_iri, prefixes }
    }

    fn term(&self, t: &Term) -> String {
        let ns_iri = well_known_iri(t.namespace())
            .or_else(|| self.prefixes.get(t.namespace()).map(String::as_str));
        match ns_iri {
            Some(iri) => match self.by_iri.get(iri) {
                Some(label) => format!("{label}:{}", t.local_name()),
                None => format!("<{iri}{}>", t.local_name()),
            },
            None => t.to_string(),
        }
    }

    fn node(&self, n: &Node) -> String {
        match n {
            Node::Term(t) => self.term(t),
            Node::Literal(Literal::String(s)) => quote(s),
            Node::Literal(Literal::Boolean(b)) => b.to_string(),
            Node::Literal(Literal::Decimal { value, unit: None }) => value.to_string(),
            Node::Literal(Literal::Decimal { value, unit: Some(u) }) => {
                format!("\"{value}\"^^{}", self.term(&u.datatype()))
            }
        }
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Literal in Turtle form, with units written as `unit:` names.
pub fn literal_text(l: &Literal) -> String {
    match l {
        Literal::String(s) => quote(s),
        Literal::Boolean(b) => b.to_string(),
        Literal::Decimal { value, unit: None } => value.to_string(),
        Literal::Decimal { value, unit: Some(u) } => format!("\"{value}\"^^unit:{u}"),
    }
}

/// Renders a triple set. Output depends only on the set and the prefixes.
pub fn write_triples<I>(triples: I, prefixes: &BTreeMap<String, String>) -> String
where
    I: IntoIterator<Item = (Term, Term, Node)>,
{
    let r = Renderer::new(prefixes);
    let mut out = String::new();
    for (label, iri) in prefixes {
        let _ = writeln!(out, "@prefix {label}: <{iri}> .");
    }
    // subject -> predicate -> objects, all keyed by rendered text.
    let mut grouped: BTreeMap<String, BTreeMap<(bool, String), BTreeSet<String>>> = BTreeMap::new();
    for (s, p, o) in triples {
        let pkey = if p.is_rdf_type() { (false, "a".to_string()) } else { (true, r.term(&p)) };
        grouped.entry(r.term(&s)).or_default().entry(pkey).or_default().insert(r.node(&o));
    }
    for (subject, preds) in grouped {
        out.push('\n');
        out.push_str(&subject);
        let n = preds.len();
        for (i, ((_, pred), objects)) in preds.into_iter().enumerate() {
            if i == 0 {
                out.push(' ');
            } else {
                out.push_str("    ");
            }
            out.push_str(&pred);
            out.push(' ');
            out.push_str(&objects.into_iter().collect::<Vec<_>>().join(", "));
            out.push_str(if i + 1 == n { " .\n" } else { " ;\n" });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{Decimal, Unit, GEOFAULT};

    fn prefixes() -> BTreeMap<String, String> {
        [GEOFAULT, "bfo", "unit"].iter().map(|p| (p.to_string(), well_known_iri(p).unwrap().to_string())).collect()
    }

    #[test]
    fn empty_set_is_prefix_block() {
        let out = write_triples(Vec::new(), &prefixes());
        assert_eq!(out.lines().count(), 3);
        assert!(out.lines().all(|l| l.starts_with("@prefix")));
    }

    #[test]
    fn layout_groups_and_sorts() {
        let fv = Term::geofault("FV7");
        let triples = vec![
            (fv.clone(), Term::bfo("part_of"), Node::Term(Term::geofault("Z"))),
            (fv.clone(), Term::bfo("part_of"), Node::Term(Term::geofault("A"))),
            (fv.clone(), Term::rdf_type(), Node::Term(Term::geofault("FaultVolume"))),
            (Term::geofault("Q"), Term::geofault("magnitude"), Node::Literal(Literal::measure(Decimal::from_int(35).unwrap(), Unit::Degree))),
        ];
        let out = write_triples(triples, &prefixes());
        let body: Vec<&str> = out.lines().skip(3).collect();
        assert_eq!(
            body,
            vec![
                "",
                "geofault:FV7 a geofault:FaultVolume ;",
                "    bfo:part_of geofault:A, geofault:Z .",
                "",
                "geofault:Q geofault:magnitude \"35\"^^unit:degree .",
            ]
        );
    }

    #[test]
    fn undeclared_known_namespace_uses_full_iri() {
        let out = write_triples(
            vec![(Term::geocore("R"), Term::rdf_type(), Node::Term(Term::geocore("Rock")))],
            &BTreeMap::new(),
        );
        assert_eq!(out, "\n<https://w3id.org/geocore#R> a <https://w3id.org/geocore#Rock> .\n");
    }

    #[test]
    fn strings_are_escaped() {
        assert_eq!(quote("a\"b\\c\n"), "\"a\\\"b\\\\c\\n\"");
    }
}
