//! HTTP contract of the annotation service, exercised against a live server.

mod common;

use std::collections::BTreeSet;

use common::{error_code, jpeg, png, start, start_in, start_with};
use geofault_core::fixtures::fixture_text;
use serde_json::{json, Value};

fn triples(v: &Value) -> Vec<(String, String, String)> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|e| {
            let s = |k: &str| e[k].as_str().unwrap().to_string();
            (s("subject"), s("predicate"), s("object"))
        })
        .collect()
}

#[tokio::test(flavor = "multi_thread")]
async fn image_upload_contract() {
    let srv = start().await;
    let pid = srv.project("outcrop").await;
    let path = format!("/projects/{pid}/images");

    let r = srv.post_bytes(&path, png(1, 1), "image/png").await;
    assert_eq!(r.status, 201, "{}", r.text);
    assert_eq!((r.body["width"].as_u64(), r.body["height"].as_u64()), (Some(1), Some(1)));
    assert_eq!(r.body["media_type"], "png");
    let checksum = r.body["checksum"].as_str().unwrap().to_string();
    assert_eq!(checksum.len(), 64);

    let again = srv.post_bytes(&path, png(1, 1), "image/png").await;
    assert_eq!(again.status, 200);
    assert_eq!(again.body["checksum"], checksum.as_str());
    assert_eq!(again.body["id"], r.body["id"]);
    let blobs = srv.dir.path().join("projects").join(&pid).join("blobs");
    let stored: Vec<_> = std::fs::read_dir(&blobs).unwrap().collect();
    assert_eq!(stored.len(), 1);
    assert_eq!(std::fs::read(blobs.join(&checksum)).unwrap(), png(1, 1));

    let full = jpeg(32, 24);
    let ok = srv.post_bytes(&path, full.clone(), "image/jpeg").await;
    assert_eq!(ok.status, 201, "{}", ok.text);
    assert_eq!((ok.body["width"].as_u64(), ok.body["height"].as_u64()), (Some(32), Some(24)));
    let truncated = full[..full.len() / 2].to_vec();
    let bad = srv.post_bytes(&path, truncated, "image/jpeg").await;
    assert_eq!(bad.status, 422);
    assert_eq!(error_code(&bad), "corrupt_image");
    let garbage = srv.post_bytes(&path, b"not a png".to_vec(), "image/png").await;
    assert_eq!(error_code(&garbage), "corrupt_image");

    let gif = srv.post_bytes(&path, b"GIF89a".to_vec(), "image/gif").await;
    assert_eq!(gif.status, 415);
    assert_eq!(error_code(&gif), "unsupported_media_type");

    let image_id = r.body["id"].as_str().unwrap();
    let raw = srv.client.get(srv.url(&format!("{path}/{image_id}"))).send().await.unwrap();
    assert_eq!(raw.headers()["content-type"], "image/png");
    assert_eq!(raw.bytes().await.unwrap().to_vec(), png(1, 1));
}

#[tokio::test(flavor = "multi_thread")]
async fn annotation_contract() {
    let srv = start().await;
    let pid = srv.project("p").await;
    let img = srv.image(&pid, 40, 30).await;
    let path = format!("/projects/{pid}/annotations");

    let square = json!({ "type": "polygon", "points": [[0, 0], [40, 0], [40, 30], [0, 30]] });
    let r = srv.post(&path, json!({ "image": img, "region": square, "class": "geofault:FaultCore" })).await;
    assert_eq!(r.status, 201, "{}", r.text);
    assert_eq!(r.body["class"], "geofault:FaultCore");
    assert_eq!(r.body["label"], "Fault Core 1");
    let instance = r.body["instance"].as_str().unwrap().to_string();
    assert_eq!(instance, format!("geofault-proj:p{pid}_1"));

    let ttl = srv.get(&format!("/projects/{pid}/export?format=ttl")).await;
    let typing: Vec<&str> = ttl.text.lines().filter(|l| l.contains(" a ") || l.contains("rdf:type")).collect();
    assert_eq!(typing.len(), 1, "{}", ttl.text);
    assert!(typing[0].contains("geofault:FaultCore"));

    let hidden = srv.post(&path, json!({ "image": img, "region": square, "class": "bfo:Continuant" })).await;
    assert_eq!(hidden.status, 422);
    assert_eq!(error_code(&hidden), "not_user_facing_class");

    let outside = json!({ "type": "polygon", "points": [[45, 0], [10, 10], [0, 20]] });
    let oob = srv.post(&path, json!({ "image": img, "region": outside, "class": "FaultZone" })).await;
    assert_eq!(error_code(&oob), "region_out_of_bounds");
    let point = json!({ "type": "point", "x": 3, "y": 31 });
    let oob = srv.post(&path, json!({ "image": img, "region": point, "class": "FaultZone" })).await;
    assert_eq!(error_code(&oob), "region_out_of_bounds");

    let segment = json!({ "type": "polygon", "points": [[0, 0], [1, 1]] });
    let thin = srv.post(&path, json!({ "image": img, "region": segment, "class": "FaultZone" })).await;
    assert_eq!(error_code(&thin), "invalid_region");

    let unknown = srv.post(&path, json!({ "image": img, "region": point, "class": "geofault:NoSuchClass" })).await;
    assert_eq!(error_code(&unknown), "unknown_term");
    let no_image = srv.post(&path, json!({ "image": "img_0", "region": square, "class": "FaultZone" })).await;
    assert_eq!(no_image.status, 404);

    // Rejected requests leave the graph untouched.
    let project = srv.get(&format!("/projects/{pid}")).await;
    assert_eq!(project.body["annotations"].as_array().unwrap().len(), 1);
    assert_eq!(project.body["next_serial"], 2);
}

#[tokio::test(flavor = "multi_thread")]
async fn suggestions_follow_domain_and_range() {
    let srv = start().await;
    let pid = srv.project("p").await;
    let img = srv.image(&pid, 8, 8).await;
    let core = srv.annotate(&pid, &img, "FaultCore").await;
    let zone = srv.annotate(&pid, &img, "FaultZone").await;
    let breccia = srv.annotate(&pid, &img, "FaultBreccia").await;
    let surface = srv.annotate(&pid, &img, "FaultSurface").await;
    let dip = srv.annotate(&pid, &img, "FaultDip").await;

    assert!(srv.suggest(&pid, &core, &zone).await.contains(&"bfo:part_of".to_string()));
    assert!(srv.suggest(&pid, &core, &breccia).await.contains(&"geocore:constituted_by".to_string()));

    let to_dip = srv.suggest(&pid, &surface, &dip).await;
    assert!(!to_dip.contains(&"bfo:part_of".to_string()), "{to_dip:?}");
    let to_literal = srv.suggest(&pid, &surface, "\"55\"^^unit:degree").await;
    assert!(!to_literal.contains(&"bfo:part_of".to_string()));
    assert!(to_literal.is_empty(), "{to_literal:?}");
    assert_eq!(srv.suggest(&pid, &dip, "\"55\"^^unit:degree").await, vec!["geofault:magnitude"]);

    let reversed = srv.post(&format!("/projects/{pid}/links:suggest"), json!({ "from": dip, "to": surface })).await;
    let labels: Vec<&str> =
        reversed.body["relations"].as_array().unwrap().iter().map(|r| r["label"].as_str().unwrap()).collect();
    let mut sorted = labels.clone();
    sorted.sort();
    assert_eq!(labels, sorted);

    let missing = srv.post(&format!("/projects/{pid}/links:suggest"), json!({ "from": "a99", "to": zone })).await;
    assert_eq!(missing.status, 404);
}

#[tokio::test(flavor = "multi_thread")]
async fn links_and_qualities() {
    let srv = start().await;
    let pid = srv.project("p").await;
    let img = srv.image(&pid, 8, 8).await;
    let core = srv.annotate(&pid, &img, "FaultCore").await;
    let zone = srv.annotate(&pid, &img, "FaultZone").await;
    let location = srv.annotate(&pid, &img, "FaultSurfaceLocation").await;
    let membrane = srv.annotate(&pid, &img, "FaultCoreMembrane").await;
    let smeared = srv.annotate(&pid, &img, "IsSmeared").await;

    let ok = srv.link(&pid, &core, "part_of", &zone).await;
    assert_eq!(ok.status, 201, "{}", ok.text);
    assert_eq!(ok.body["relation"], "bfo:part_of");
    let ok = srv.link(&pid, &membrane, "bfo:has_quality", &smeared).await;
    assert_eq!(ok.status, 201, "{}", ok.text);

    let bad = srv.link(&pid, &zone, "constituted_by", &core).await;
    assert_eq!(bad.status, 422);
    assert_eq!(error_code(&bad), "inadmissible_relation");
    let bad = srv.link(&pid, &location, "part_of", &zone).await;
    assert_eq!(error_code(&bad), "inadmissible_relation");

    let q = format!("/projects/{pid}/qualities");
    let too_steep = srv.post(&q, json!({ "bearer": location, "kind": "FaultDip", "magnitude": 95, "unit": "degree" })).await;
    assert_eq!(too_steep.status, 422);
    assert_eq!(error_code(&too_steep), "value_out_of_range");
    let azimuth = srv.post(&q, json!({ "bearer": location, "kind": "FaultAzimuth", "magnitude": 360, "unit": "degree" })).await;
    assert_eq!(error_code(&azimuth), "value_out_of_range");
    let negative = srv
        .post(&q, json!({ "bearer": location, "kind": "FaultMaximumSeparation", "magnitude": "-1", "unit": "meter" }))
        .await;
    assert_eq!(error_code(&negative), "value_out_of_range");

    let dip = srv.post(&q, json!({ "bearer": location, "kind": "FaultDip", "magnitude": "55.5", "unit": "degree" })).await;
    assert_eq!(dip.status, 201, "{}", dip.text);
    assert_eq!(dip.body["class"], "geofault:Steep");
    assert_eq!(dip.body["value"]["magnitude"], "55.5");
    let value = dip.body["instance"].as_str().unwrap();

    let res = srv
        .post(&format!("/projects/{pid}/query"), json!({ "query": format!("SELECT ?m WHERE {value} magnitude ?m") }))
        .await;
    assert_eq!(res.body["bindings"], json!([{ "m": "\"55.5\"^^unit:degree" }]));
    let res = srv
        .post(&format!("/projects/{pid}/query"), json!({ "query": format!("SELECT ?q WHERE ?q quality_of {}", "?b ; ?b TYPE FaultSurfaceLocation") }))
        .await;
    assert_eq!(res.body["bindings"].as_array().unwrap().len(), 1);

    let status = srv.get(&format!("/projects/{pid}/status")).await;
    assert_eq!(status.status, 200);
    assert_eq!(status.body["consistency"]["consistent"], true, "{}", status.text);
}

#[tokio::test(flavor = "multi_thread")]
async fn status_reports() {
    let srv = start().await;
    let fresh = srv.project("fresh").await;
    let st = srv.get(&format!("/projects/{fresh}/status")).await;
    assert_eq!(st.body["consistency"], json!({ "consistent": true, "clashes": [] }));
    assert_eq!(st.body["validation"], json!({ "conforms": true, "violations": [] }));
    assert_eq!(st.body["graph"]["nodes"], json!([]));

    let pid = srv.project("lonely system").await;
    let img = srv.image(&pid, 8, 8).await;
    let system = srv.annotate(&pid, &img, "FaultSystem").await;
    let volume = srv.annotate(&pid, &img, "FaultVolume").await;
    assert_eq!(srv.link(&pid, &system, "has_part", &volume).await.status, 201);
    let st = srv.get(&format!("/projects/{pid}/status")).await;
    let violations = st.body["validation"]["violations"].as_array().unwrap();
    let def15: Vec<&Value> = violations
        .iter()
        .filter(|v| v["constraint"] == "geofault-meta:def15_FaultSystem_has_part_min2_FaultVolume")
        .collect();
    assert_eq!(def15.len(), 1, "{}", st.text);
    assert_eq!(def15[0]["found"], 1);
    assert_eq!(def15[0]["min"], 2);
    assert_eq!(st.body["validation"]["conforms"], false);
    let edges = st.body["graph"]["edges"].as_array().unwrap();
    assert!(edges.iter().any(|e| e["rel"] == "bfo:part_of" && e["provenance"] == "inferred"));

    // A returned status is a snapshot: later edits show up only in new reports.
    let before = st.text.clone();
    let other = srv.annotate(&pid, &img, "FaultVolume").await;
    assert_eq!(srv.link(&pid, &system, "has_part", &other).await.status, 201);
    let after = srv.get(&format!("/projects/{pid}/status")).await;
    assert_ne!(after.text, before);
    assert!(!after.text.contains("def15_FaultSystem_has_part_min2_FaultVolume"));
}

#[tokio::test(flavor = "multi_thread")]
async fn usecase1_project_answers_cq1() {
    let srv = start().await;
    let pid = srv.project("Maiella").await;
    let ttl = fixture_text("usecase1.ttl").unwrap().to_string();
    let imported = srv.client.post(srv.url(&format!("/projects/{pid}/import"))).body(ttl).send().await.unwrap();
    assert_eq!(imported.status(), 200);

    let st = srv.get(&format!("/projects/{pid}/status")).await;
    assert_eq!(st.body["consistency"]["consistent"], true);
    assert_eq!(st.body["validation"]["conforms"], true, "{}", st.text);

    let cq1 = fixture_text("queries/cq1.gfq").unwrap();
    let r = srv.post(&format!("/projects/{pid}/query"), json!({ "query": cq1 })).await;
    assert_eq!(r.status, 200, "{}", r.text);
    assert_eq!(r.body["variables"], json!(["f"]));
    assert_eq!(r.body["bindings"], json!([{ "f": "geofault:FV7" }]));
    let answers = r.body["answers"].as_array().unwrap();
    assert_eq!(answers.len(), 1);
    let path = triples(&answers[0]["explanation"]["edges"]);
    let t = |s: &str, p: &str, o: &str| (s.to_string(), p.to_string(), o.to_string());
    assert_eq!(path, vec![
        t("geofault:FV7", "rdf:type", "geofault:FaultVolume"),
        t("geofault:FV7", "bfo:has_part", "geofault:FaultCore7"),
        t("geofault:FaultCore7", "rdf:type", "geofault:FaultCore"),
        t("geofault:FaultCore7", "geocore:constituted_by", "geofault:FaultBreccia7"),
        t("geofault:FaultBreccia7", "rdf:type", "geofault:FaultBreccia"),
        t("geofault:FaultStructure7", "geofault:structure_of", "geofault:FV7"),
        t("geofault:FaultStructure7", "rdf:type", "geofault:StrikeSlipFault"),
    ]);
    let provenance: Vec<&str> = answers[0]["explanation"]["edges"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["provenance"]["kind"].as_str().unwrap())
        .collect();
    assert_eq!(provenance[1], "inferred");
    assert_eq!(provenance[6], "inferred");
}

#[tokio::test(flavor = "multi_thread")]
async fn query_errors_and_empty_results() {
    let srv = start().await;
    let pid = srv.project("q").await;
    let empty = srv.post(&format!("/projects/{pid}/query"), json!({ "query": "SELECT ?x WHERE ?x TYPE FaultCore" })).await;
    assert_eq!(empty.status, 200);
    assert_eq!(empty.body["bindings"], json!([]));
    assert_eq!(empty.body["answers"], json!([]));

    let bad = srv.post(&format!("/projects/{pid}/query"), json!({ "query": "SELECT ?x ?x TYPE FaultVolume" })).await;
    assert_eq!(bad.status, 400);
    assert_eq!(error_code(&bad), "parse_error");
    assert_eq!(bad.body["error"]["position"], json!({ "line": 1, "column": 14 }));

    let malformed = srv.client.post(srv.url(&format!("/projects/{pid}/query"))).body("{").send().await.unwrap();
    assert_eq!(malformed.status(), 400);
    let body: Value = malformed.json().await.unwrap();
    assert_eq!(body["error"]["code"], "invalid_request");
    assert!(body["error"].get("position").is_none());
}

#[tokio::test(flavor = "multi_thread")]
async fn exports_and_unknown_projects() {
    let srv = start().await;
    let pid = srv.project("x").await;
    let img = srv.image(&pid, 4, 4).await;
    let core = srv.annotate(&pid, &img, "FaultCore").await;
    let zone = srv.annotate(&pid, &img, "FaultZone").await;
    srv.link(&pid, &core, "part_of", &zone).await;

    let ttl = srv.get(&format!("/projects/{pid}/export?format=ttl")).await;
    assert_eq!(ttl.status, 200);
    assert!(ttl.text.contains("@prefix geofault-proj:"), "{}", ttl.text);
    assert!(!ttl.text.contains("has_part"), "inferred triples stay out of the Turtle export");
    let js = srv.get(&format!("/projects/{pid}/export?format=json")).await;
    let edges = js.body["edges"].as_array().unwrap();
    assert!(edges.iter().any(|e| e["rel"] == "bfo:has_part" && e["provenance"] == "inferred"));
    assert_eq!(srv.get(&format!("/projects/{pid}/export?format=xml")).await.status, 400);

    for path in ["/projects/0123/status", "/projects/..%2Fetc", "/projects/abc/export"] {
        let r = srv.get(path).await;
        assert_eq!(r.status, 404, "{path}");
        assert_eq!(error_code(&r), "project_not_found");
    }
    let r = srv.post("/projects/ffff/annotations", json!({})).await;
    assert_eq!(r.status, 400, "malformed bodies are rejected before lookup");
    let r = srv.get("/nowhere").await;
    assert!(r.body["error"]["code"].is_string());
}

#[tokio::test(flavor = "multi_thread")]
async fn vocabulary_offers_only_user_facing_classes() {
    let srv = start().await;
    let r = srv.get("/vocabulary").await;
    assert_eq!(r.status, 200);
    let schema = srv.service.schema().clone();
    let entries = r.body.as_array().unwrap();
    let offered: BTreeSet<&str> = entries.iter().map(|e| e["term"].as_str().unwrap()).collect();
    let expected: BTreeSet<String> = schema.classes().filter(|c| c.user_facing).map(|c| c.term.to_string()).collect();
    assert_eq!(offered, expected.iter().map(String::as_str).collect());
    for e in entries {
        for key in ["term", "parent"] {
            if let Some(t) = e[key].as_str() {
                assert!(t.starts_with("geofault:"), "{t}");
                assert!(schema.get_class(&t.parse().unwrap()).unwrap().user_facing);
            }
        }
        assert!(e.get("domain").is_none());
    }
    assert!(!r.text.contains("bfo:Continuant") && !r.text.contains("bfo:Entity"));
    assert!(!r.text.contains("\"bfo:MaterialEntity\"") && !r.text.contains("geocore:GeologicalObject"));
}

#[tokio::test(flavor = "multi_thread")]
async fn projects_survive_restart() {
    let srv = start().await;
    let pid = srv.project("durable").await;
    let img = srv.image(&pid, 4, 4).await;
    let core = srv.annotate(&pid, &img, "FaultCore").await;
    let zone = srv.annotate(&pid, &img, "FaultZone").await;
    srv.link(&pid, &core, "part_of", &zone).await;
    let before = srv.get(&format!("/projects/{pid}")).await;
    let status_before = srv.get(&format!("/projects/{pid}/status")).await;
    let dir = srv.dir;

    let srv = start_in(dir).await;
    let after = srv.get(&format!("/projects/{pid}")).await;
    assert_eq!(after.body, before.body);
    assert_eq!(srv.get(&format!("/projects/{pid}/status")).await.body, status_before.body);
    assert_eq!(srv.get("/projects").await.body["projects"], json!([pid]));
    // The counter continues after reload.
    let next = srv.annotate(&pid, &img, "FaultWall").await;
    assert_eq!(next, "a3");
}

#[tokio::test(flavor = "multi_thread")]
async fn concurrent_writers_are_serialized() {
    let srv = std::sync::Arc::new(start().await);
    let pids = [srv.project("one").await, srv.project("two").await];
    let mut tasks = Vec::new();
    for pid in &pids {
        let img = srv.image(pid, 4, 4).await;
        for _ in 0..16 {
            let (srv, pid, img) = (srv.clone(), pid.clone(), img.clone());
            tasks.push(tokio::spawn(async move { (pid.clone(), srv.annotate(&pid, &img, "FaultCore").await) }));
        }
    }
    let mut ids: Vec<(String, String)> = Vec::new();
    for t in tasks {
        ids.push(t.await.unwrap());
    }
    for pid in &pids {
        let mine: BTreeSet<&str> = ids.iter().filter(|(p, _)| p == pid).map(|(_, a)| a.as_str()).collect();
        let want: BTreeSet<String> = (1..=16).map(|n| format!("a{n}")).collect();
        assert_eq!(mine, want.iter().map(String::as_str).collect());
        let r = srv.get(&format!("/projects/{pid}/export?format=json")).await;
        let nodes = r.body["nodes"].as_array().unwrap();
        assert_eq!(nodes.iter().filter(|n| n["id"].as_str().unwrap().starts_with("geofault-proj:")).count(), 16);
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn export_import_round_trip() {
    let srv = start().await;
    let pid = srv.project("source").await;
    let img = srv.image(&pid, 16, 16).await;
    let system = srv.annotate(&pid, &img, "FaultSystem").await;
    let v1 = srv.annotate(&pid, &img, "FaultVolume").await;
    let zone = srv.annotate(&pid, &img, "FaultZone").await;
    let core = srv.annotate(&pid, &img, "FaultCore").await;
    let walls = [srv.annotate(&pid, &img, "FaultWall").await, srv.annotate(&pid, &img, "FaultWall").await];
    srv.link(&pid, &system, "has_part", &v1).await;
    srv.link(&pid, &zone, "part_of", &v1).await;
    srv.link(&pid, &core, "part_of", &zone).await;
    let q = format!("/projects/{pid}/qualities");
    let sep = srv.post(&q, json!({ "bearer": walls[0], "kind": "FaultMaximumSeparation", "magnitude": 120, "unit": "meter" })).await;
    assert_eq!(sep.status, 201, "{}", sep.text);
    let sep_id = sep.body["id"].as_str().unwrap();
    assert_eq!(srv.link(&pid, sep_id, "quality_of", &walls[1]).await.status, 201);

    for source in [pid.clone(), {
        let p = srv.project("usecase2").await;
        srv.client
            .post(srv.url(&format!("/projects/{p}/import")))
            .body(fixture_text("usecase2.ttl").unwrap())
            .send()
            .await
            .unwrap();
        p
    }] {
        let ttl = srv.get(&format!("/projects/{source}/export?format=ttl")).await.text;
        let copy = srv.project("copy").await;
        let r = srv.client.post(srv.url(&format!("/projects/{copy}/import"))).body(ttl.clone()).send().await.unwrap();
        assert_eq!(r.status(), 200);
        let a = srv.get(&format!("/projects/{source}/status")).await.body;
        let b = srv.get(&format!("/projects/{copy}/status")).await.body;
        assert_eq!(a["consistency"], b["consistency"]);
        assert_eq!(a["validation"], b["validation"]);
        assert_eq!(srv.get(&format!("/projects/{copy}/export?format=ttl")).await.text, ttl);
    }

    let broken = srv.client.post(srv.url(&format!("/projects/{pid}/import"))).body("geofault:X a .").send().await.unwrap();
    assert_eq!(broken.status(), 400);
    let body: Value = broken.json().await.unwrap();
    assert_eq!(body["error"]["code"], "parse_error");
    assert!(body["error"]["position"]["line"].is_number());
}

#[tokio::test(flavor = "multi_thread")]
async fn static_route_serves_ui_assets() {
    let assets = tempfile::tempdir().unwrap();
    std::fs::write(assets.path().join("index.html"), "<!doctype html><title>annotator</title>").unwrap();
    std::fs::create_dir(assets.path().join("js")).unwrap();
    std::fs::write(assets.path().join("js/app.js"), "console.log(1);").unwrap();
    let s = start_with(tempfile::tempdir().unwrap(), Some(assets.path().to_path_buf())).await;

    let index = s.get("/").await;
    assert_eq!(index.status, 200);
    assert!(index.text.contains("annotator"));
    let js = s.client.get(s.url("/js/app.js")).send().await.unwrap();
    assert_eq!(js.status(), 200);
    assert!(js.headers()["content-type"].to_str().unwrap().contains("javascript"));
    assert_eq!(s.get("/missing.css").await.status, 404);
    // API routes take precedence over assets.
    assert_eq!(s.get("/vocabulary").await.status, 200);
    assert_eq!(s.post("/projects", json!({"name": "ui"})).await.status, 201);

    let bare = start().await;
    let r = bare.get("/index.html").await;
    assert_eq!(r.status, 404);
    assert_eq!(error_code(&r), "not_found");
}
