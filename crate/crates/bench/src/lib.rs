//! Inputs shared by the benchmarks.

use geofault_core::{compile_rules, load_fixture, load_graph, materialize, Fixture, Graph, Query, Rule};

/// A bundled instance graph, asserted and materialized.
pub struct Prepared {
    pub asserted: Graph,
    pub materialized: Graph,
    pub rules: Vec<Rule>,
}

pub fn prepared(name: &str) -> Prepared {
    let asserted = load_graph(name).expect("bundled graph");
    let rules = compile_rules(asserted.schema());
    let materialized = materialize(&asserted, &rules).expect("bundled graph materializes");
    Prepared { asserted, materialized, rules }
}

/// Competency queries with the instance graph each one runs against.
pub fn competency_queries() -> Vec<(String, Query, String)> {
    (1..=8)
        .map(|i| {
            let name = format!("cq{i}");
            let Ok(Fixture::Query { query, .. }) = load_fixture(&name) else { panic!("{name} is a query fixture") };
            let dataset = geofault_core::manifest().entry(&name).and_then(|e| e.dataset.clone()).expect("dataset");
            (name, query, dataset)
        })
        .collect()
}
