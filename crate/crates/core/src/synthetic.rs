//! Synthetic graphs for load tests.

use crate::schema::builtin_schema;
use crate::store::Graph;
use crate::term::Term;

/// Classes along one parthood chain, outermost first.
const CHAIN: [&str; 5] = ["FaultSystem", "FaultVolume", "FaultZone", "FaultCore", "FaultCoreMembrane"];

/// Asserted triples per complete chain: one type per link plus the part_of edges.
pub const TRIPLES_PER_CHAIN: usize = 2 * CHAIN.len() - 1;

/// Builds exactly `n` asserted triples as independent five-level parthood
/// chains (system, volume, zone, core, membrane). Each member is typed and
/// `part_of` its parent, so materialization adds the transitive closure,
/// the inverses and every supertype.
pub fn parthood_chains(n: usize) -> Graph {
    let mut g = Graph::new(builtin_schema());
    let ty = Term::rdf_type();
    let part_of = Term::bfo("part_of");
    let classes: Vec<Term> = CHAIN.iter().map(|c| Term::geofault(c)).collect();
    let mut chain = 0usize;
    'outer: loop {
        let members: Vec<Term> = (0..CHAIN.len()).map(|k| Term::geofault(&format!("C{chain}_{k}"))).collect();
        for k in 0..CHAIN.len() {
            if g.len() == n {
                break 'outer;
            }
            g.insert(members[k].clone(), ty.clone(), classes[k].clone()).expect("schema terms");
            if k > 0 {
                if g.len() == n {
                    break 'outer;
                }
                g.insert(members[k].clone(), part_of.clone(), members[k - 1].clone()).expect("schema terms");
            }
        }
        chain += 1;
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_size() {
        for n in [0, 1, 9, 10, 100] {
            assert_eq!(parthood_chains(n).len(), n);
        }
        assert_eq!(TRIPLES_PER_CHAIN, 9);
    }
}
