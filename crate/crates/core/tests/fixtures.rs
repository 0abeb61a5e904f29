use std::path::PathBuf;

use geofault_core::fixtures::{bundled_paths, fixture_text, FixtureKind};
use geofault_core::*;
use sha2::{Digest, Sha256};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn gf(l: &str) -> Term {
    Term::geofault(l)
}

#[test]
fn no_byte_drift() {
    let m = manifest();
    for e in &m.entries {
        let disk = std::fs::read(root().join(&e.path)).unwrap();
        assert_eq!(hex::encode(Sha256::digest(&disk)), e.sha256, "{} changed on disk", e.path);
        assert_eq!(fixture_text(&e.path).unwrap().as_bytes(), &disk[..], "{} differs from the bundled copy", e.path);
    }
    for p in bundled_paths() {
        let disk = std::fs::read(root().join(p)).unwrap();
        assert_eq!(fixture_text(p).unwrap().as_bytes(), &disk[..], "{p}");
    }
}

#[test]
fn manifest_shape() {
    let m = manifest();
    assert_eq!(m.of_kind(FixtureKind::Schema).count(), 1);
    assert_eq!(m.of_kind(FixtureKind::Instances).count(), 2);
    assert_eq!(m.of_kind(FixtureKind::Query).count(), 8);
    assert_eq!(m.of_kind(FixtureKind::Mutation).count(), 3);
    for e in m.of_kind(FixtureKind::Query) {
        assert!(root().join(e.expected.as_ref().unwrap()).exists());
    }
    for e in &m.entries {
        assert!(root().join(&e.path).exists(), "{}", e.path);
        assert!(load_fixture(&e.name).is_ok(), "{}", e.name);
    }
}

#[test]
fn usecase1_contents() {
    let g = load_graph("usecase1").unwrap();
    let m = materialize(&g, &compile_rules(g.schema())).unwrap();
    let has = |s: &str, p: Term, o: &str| m.contains(&Triple::new(gf(s), p, gf(o)));
    for i in 1..=9 {
        assert!(has(&format!("FV{i}"), Term::rdf_type(), "FaultVolume"));
        let strike = [6, 7, 9].contains(&i);
        let st = format!("FaultStructure{i}");
        assert!(has(&st, gf("structure_of"), &format!("FV{i}")));
        assert_eq!(has(&st, Term::rdf_type(), "StrikeSlipFault"), strike);
        assert_eq!(has(&st, Term::rdf_type(), "NormalFault"), !strike);
        let group = if strike { "StrikeSlipFaultGroup" } else { "NormalFaultGroup" };
        assert!(has(group, Term::bfo("has_part"), &format!("FV{i}")));
    }
    let cb = Term::geocore("constituted_by");
    assert!(has("FaultCore1", cb.clone(), "FaultBreccia1") && has("FaultBreccia1", Term::rdf_type(), "FaultBreccia"));
    assert!(has("FaultCore1", cb.clone(), "FaultGouge1") && has("FaultGouge1", Term::rdf_type(), "FaultGouge"));
    assert!(has("FaultCore7", cb, "FaultBreccia7") && has("FaultBreccia7", Term::rdf_type(), "FaultBreccia"));
    assert!(has("PhysicalSlipSurface1", Term::bfo("part_of"), "FaultWall1"));
    assert!(has("FV7", gf("east_of"), "FV9") && has("FV7", gf("west_of"), "FV6") && has("FV9", gf("west_of"), "FV6"));
}

#[test]
fn usecase2_contents() {
    let g = load_graph("usecase2").unwrap();
    let m = materialize(&g, &compile_rules(g.schema())).unwrap();
    let has = |s: &str, p: Term, o: &str| m.contains(&Triple::new(gf(s), p, gf(o)));
    for z in ["TFZ", "VFZ", "OFC"] {
        assert!(has(&format!("{z}_Zone"), Term::rdf_type(), "FaultZone"));
        assert!(has(&format!("{z}_Zone"), Term::bfo("has_role"), &format!("{z}_MajorRole")));
        assert!(has(&format!("{z}_MajorRole"), Term::rdf_type(), "MajorFault"));
    }
    assert!(has("OFC_Structure", Term::rdf_type(), "NormalFault"));
    assert!(has("TK_System", gf("older"), "EM_System") && has("EM_System", gf("younger"), "TK_System"));
    assert!(has("TK_System", Term::rdf_type(), "FaultSystem") && has("EM_System", Term::rdf_type(), "FaultSystem"));
    assert!(has("OFC_HangingWallRole", Term::rdf_type(), "HangingWall"));
}

#[test]
fn reconstructed_edges_are_marked() {
    for name in ["usecase1.ttl", "usecase2.ttl"] {
        let text = fixture_text(name).unwrap();
        let marked = text.lines().filter(|l| l.ends_with("# reconstructed")).count();
        let triples = text.lines().filter(|l| l.starts_with("geofault:")).count();
        assert!(marked > 0 && marked < triples, "{name}: {marked}/{triples}");
    }
}
