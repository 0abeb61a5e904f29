//! Project store and annotation operations, independent of HTTP.
//!
//! Each project lives in its own directory:
//! `project.json` (record), `graph.ttl` (asserted triples) and
//! `blobs/{sha256}` (image bytes). Mutations on one project are serialized
//! by a per-project lock; reads work on the materialized snapshot taken
//! after the last mutation.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard};

use chrono::Utc;
use geofault_core::term::PROJECT;
use geofault_core::{
    check_consistency, compile_rules, compile_shapes, default_prefixes, evaluate, evaluate_explained,
    export_structured, materialize, parse_query_with, parse_turtle_named, serialize_turtle, validate, Decimal,
    Graph, Literal, Node, PatternTerm, Provenance, Range, RelationDef, Rule, Schema, Shape, StructuredExport, Term,
    TriplePattern, Unit,
};
use sha2::{Digest, Sha256};

use crate::error::ServiceError;
use crate::model::*;

type Result<T> = std::result::Result<T, ServiceError>;

struct ProjectState {
    record: ProjectRecord,
    /// Asserted triples only.
    graph: Graph,
    materialized: Arc<Graph>,
}

pub struct Service {
    root: PathBuf,
    schema: Arc<Schema>,
    rules: Vec<Rule>,
    shapes: Vec<Shape>,
    projects: Mutex<HashMap<String, Arc<Mutex<ProjectState>>>>,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|p| p.into_inner())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    fs::rename(tmp, path)
}

fn valid_project_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.bytes().all(|b| b.is_ascii_hexdigit() && !b.is_ascii_uppercase())
}

/// A JPEG must end its last scan with an end-of-image marker.
fn jpeg_complete(bytes: &[u8]) -> bool {
    let last = |marker: u8| bytes.windows(2).rposition(|w| w == [0xFF, marker]);
    match (last(0xDA), last(0xD9)) {
        (Some(sos), Some(eoi)) => eoi > sos,
        _ => false,
    }
}

impl Service {
    /// Opens (or creates) a store rooted at `root` over `schema`.
    pub fn open(root: impl Into<PathBuf>, schema: Arc<Schema>) -> Result<Service> {
        let root = root.into();
        fs::create_dir_all(root.join("projects"))?;
        Ok(Service {
            root,
            rules: compile_rules(&schema),
            shapes: compile_shapes(&schema),
            schema,
            projects: Mutex::new(HashMap::new()),
        })
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn data_dir(&self) -> &Path {
        &self.root
    }

    fn project_dir(&self, id: &str) -> PathBuf {
        self.root.join("projects").join(id)
    }

    fn project(&self, id: &str) -> Result<Arc<Mutex<ProjectState>>> {
        let not_found = || ServiceError::ProjectNotFound(id.to_string());
        if !valid_project_id(id) {
            return Err(not_found());
        }
        let mut projects = lock(&self.projects);
        if let Some(p) = projects.get(id) {
            return Ok(p.clone());
        }
        let dir = self.project_dir(id);
        let raw = fs::read(dir.join("project.json")).map_err(|_| not_found())?;
        let record: ProjectRecord =
            serde_json::from_slice(&raw).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        let text = fs::read_to_string(dir.join("graph.ttl"))?;
        let doc = parse_turtle_named(&text, "graph.ttl")?;
        let mut graph = Graph::new(self.schema.clone());
        graph.load_document(&doc, &Provenance::Asserted)?;
        let materialized = Arc::new(materialize(&graph, &self.rules)?);
        let state = Arc::new(Mutex::new(ProjectState { record, graph, materialized }));
        projects.insert(id.to_string(), state.clone());
        Ok(state)
    }

    fn persist(&self, state: &ProjectState) -> Result<()> {
        let dir = self.project_dir(&state.record.id);
        fs::create_dir_all(dir.join("blobs"))?;
        let json = serde_json::to_vec_pretty(&state.record).expect("record serializes");
        write_atomic(&dir.join("project.json"), &json)?;
        let ttl = serialize_turtle(&state.graph, &default_prefixes(&state.graph), false);
        write_atomic(&dir.join("graph.ttl"), ttl.as_bytes())?;
        Ok(())
    }

    /// Replaces the asserted graph, re-materializes and persists.
    fn commit(&self, state: &mut ProjectState, graph: Graph) -> Result<()> {
        let materialized = materialize(&graph, &self.rules)?;
        state.graph = graph;
        state.materialized = Arc::new(materialized);
        self.persist(state)
    }

    fn view(state: &ProjectState) -> Project {
        Project {
            record: state.record.clone(),
            graph: serialize_turtle(&state.graph, &default_prefixes(&state.graph), false),
        }
    }

    pub fn create_project(&self, name: &str) -> Result<Project> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let record = ProjectRecord {
            id: id.clone(),
            name: name.to_string(),
            created_at: Utc::now(),
            images: Vec::new(),
            annotations: Vec::new(),
            links: Vec::new(),
            qualities: Vec::new(),
            next_serial: 1,
        };
        let graph = Graph::new(self.schema.clone());
        let materialized = Arc::new(graph.clone());
        let state = ProjectState { record, graph, materialized };
        self.persist(&state)?;
        let view = Self::view(&state);
        lock(&self.projects).insert(id, Arc::new(Mutex::new(state)));
        log::info!("created project {}", view.record.id);
        Ok(view)
    }

    pub fn get_project(&self, id: &str) -> Result<Project> {
        let p = self.project(id)?;
        let state = lock(&p);
        Ok(Self::view(&state))
    }

    /// Ids of every stored project, sorted.
    pub fn list_projects(&self) -> Result<Vec<String>> {
        let mut ids: Vec<String> = fs::read_dir(self.root.join("projects"))?
            .filter_map(|e| e.ok())
            .filter(|e| e.path().join("project.json").is_file())
            .filter_map(|e| e.file_name().into_string().ok())
            .filter(|id| valid_project_id(id))
            .collect();
        ids.sort();
        Ok(ids)
    }

    /// Stores an image; identical bytes return the existing reference.
    /// The flag is true when a new image was stored.
    pub fn upload_image(&self, project: &str, bytes: &[u8], media_type: &str) -> Result<(ImageRef, bool)> {
        let media = MediaType::from_mime(media_type)
            .ok_or_else(|| ServiceError::UnsupportedMediaType(media_type.to_string()))?;
        let checksum = hex::encode(Sha256::digest(bytes));
        let p = self.project(project)?;
        let mut state = lock(&p);
        if let Some(existing) = state.record.images.iter().find(|i| i.checksum == checksum) {
            return Ok((existing.clone(), false));
        }
        if media == MediaType::Jpeg && !jpeg_complete(bytes) {
            return Err(ServiceError::CorruptImage("JPEG stream is truncated".into()));
        }
        let img = image::load_from_memory_with_format(bytes, media.format())
            .map_err(|e| ServiceError::CorruptImage(e.to_string()))?;
        if img.width() == 0 || img.height() == 0 {
            return Err(ServiceError::CorruptImage("image has no pixels".into()));
        }
        let image = ImageRef {
            id: format!("img_{}", &checksum[..16]),
            media_type: media,
            width: img.width(),
            height: img.height(),
            checksum: checksum.clone(),
        };
        let blobs = self.project_dir(project).join("blobs");
        fs::create_dir_all(&blobs)?;
        let blob = blobs.join(&checksum);
        if !blob.exists() {
            write_atomic(&blob, bytes)?;
        }
        state.record.images.push(image.clone());
        self.persist(&state)?;
        Ok((image, true))
    }

    /// Stored bytes of an image, with their media type.
    pub fn image_bytes(&self, project: &str, image: &str) -> Result<(Vec<u8>, MediaType)> {
        let p = self.project(project)?;
        let img = {
            let state = lock(&p);
            state.record.images.iter().find(|i| i.id == image).cloned()
        }
        .ok_or_else(|| ServiceError::ImageNotFound(image.to_string()))?;
        let bytes = fs::read(self.project_dir(project).join("blobs").join(&img.checksum))?;
        Ok((bytes, img.media_type))
    }

    /// Classes offered for annotation, each with the relations it admits as subject.
    pub fn vocabulary(&self) -> Vec<VocabularyOption> {
        let offered = |t: &Term| self.schema.get_class(t).is_some_and(|c| c.user_facing);
        self.schema
            .annotation_vocabulary()
            .into_iter()
            .map(|e| VocabularyOption {
                parent: e.class.parent.filter(|p| offered(p)),
                term: e.class.term,
                label: e.class.label,
                definition: e.class.definition_text,
                relations: e
                    .relations
                    .into_iter()
                    .map(|r| RelationOption { literal: r.is_literal_valued(), term: r.term, label: r.label })
                    .collect(),
            })
            .collect()
    }

    fn resolve_term(&self, s: &str) -> Result<Term> {
        if s.contains(':') {
            s.parse().map_err(|_| ServiceError::UnknownTerm(s.to_string()))
        } else {
            self.schema.resolve_local(s).cloned().ok_or_else(|| ServiceError::UnknownTerm(s.to_string()))
        }
    }

    fn resolve_class(&self, s: &str) -> Result<Term> {
        let t = self.resolve_term(s)?;
        match self.schema.get_class(&t) {
            Some(c) if c.user_facing => Ok(t),
            Some(_) => Err(ServiceError::NotUserFacingClass(t.to_string())),
            None => Err(ServiceError::UnknownTerm(s.to_string())),
        }
    }

    fn resolve_relation(&self, s: &str) -> Result<&RelationDef> {
        let t = self.resolve_term(s)?;
        self.schema.get_relation(&t).ok_or_else(|| ServiceError::UnknownTerm(s.to_string()))
    }

    pub fn add_annotation(&self, project: &str, req: &AnnotationRequest) -> Result<Annotation> {
        let class = self.resolve_class(&req.class)?;
        let p = self.project(project)?;
        let mut state = lock(&p);
        let image = state
            .record
            .images
            .iter()
            .find(|i| i.id == req.image)
            .cloned()
            .ok_or_else(|| ServiceError::ImageNotFound(req.image.clone()))?;
        check_region(&req.region, &image)?;
        let serial = state.record.next_serial;
        let instance = Term::new(PROJECT, &format!("p{}_{serial}", state.record.id)).expect("minted name is valid");
        let mut graph = state.graph.clone();
        graph.insert(instance.clone(), Term::rdf_type(), class.clone())?;
        let label = req.label.clone().unwrap_or_else(|| {
            let base = &self.schema.get_class(&class).expect("resolved").label;
            format!("{base} {serial}")
        });
        let annotation =
            Annotation { id: format!("a{serial}"), image: image.id, region: req.region.clone(), class, instance, label };
        state.record.next_serial += 1;
        state.record.annotations.push(annotation.clone());
        self.commit(&mut state, graph)?;
        Ok(annotation)
    }

    /// An endpoint reference: annotation id, quality id, or an instance term in the graph.
    fn resolve_instance(state: &ProjectState, s: &str) -> Result<Term> {
        if let Some(a) = state.record.annotations.iter().find(|a| a.id == s) {
            return Ok(a.instance.clone());
        }
        if let Some(q) = state.record.qualities.iter().find(|q| q.id == s) {
            return Ok(q.instance.clone());
        }
        let not_found = || ServiceError::AnnotationNotFound(s.to_string());
        let t: Term = if s.contains(':') { s.parse().map_err(|_| not_found())? } else { Term::geofault(s) };
        let g = &state.materialized;
        let (p, o) = (PatternTerm::var("p"), PatternTerm::var("o"));
        let used = !g.match_pattern(&TriplePattern::new(t.clone(), p.clone(), o.clone())).is_empty()
            || !g.match_pattern(&TriplePattern::new(o, p, t.clone())).is_empty();
        if used {
            Ok(t)
        } else {
            Err(not_found())
        }
    }

    fn resolve_target(state: &ProjectState, s: &str) -> Result<Node> {
        let literal_like = s.starts_with('"')
            || s.starts_with(|c: char| c.is_ascii_digit() || c == '-' || c == '+')
            || s == "true"
            || s == "false";
        if literal_like {
            match s.parse::<Node>() {
                Ok(n @ Node::Literal(_)) => Ok(n),
                _ => Err(ServiceError::InvalidRequest(format!("`{s}` is not a literal"))),
            }
        } else {
            Self::resolve_instance(state, s).map(Node::Term)
        }
    }

    /// Relations admissible from `from` to `to`, sorted by label.
    pub fn suggest_links(&self, project: &str, req: &SuggestRequest) -> Result<Vec<RelationDef>> {
        let p = self.project(project)?;
        let state = lock(&p);
        let from = Self::resolve_instance(&state, &req.from)?;
        let to = Self::resolve_target(&state, &req.to)?;
        let from_types = types_of(&state.materialized, &from);
        let to_types = match &to {
            Node::Term(t) => Some(types_of(&state.materialized, t)),
            Node::Literal(_) => None,
        };
        Ok(admissible_relations(&self.schema, &from_types, to_types.as_deref()))
    }

    pub fn add_link(&self, project: &str, req: &LinkRequest) -> Result<Link> {
        let relation = self.resolve_relation(&req.relation)?.clone();
        let p = self.project(project)?;
        let mut state = lock(&p);
        let from = Self::resolve_instance(&state, &req.from)?;
        let to = Self::resolve_target(&state, &req.to)?;
        let from_types = types_of(&state.materialized, &from);
        let to_types = match &to {
            Node::Term(t) => Some(types_of(&state.materialized, t)),
            Node::Literal(_) => None,
        };
        if !admits(&self.schema, &relation, &from_types, to_types.as_deref()) {
            return Err(ServiceError::InadmissibleRelation(format!(
                "{} does not admit {from} -> {to} under its domain {} and range",
                relation.term, relation.domain
            )));
        }
        let mut graph = state.graph.clone();
        graph.insert(from.clone(), relation.term.clone(), to.clone())?;
        let link = Link { from, relation: relation.term, to };
        if !state.record.links.contains(&link) {
            state.record.links.push(link.clone());
        }
        self.commit(&mut state, graph)?;
        Ok(link)
    }

    pub fn set_quality(&self, project: &str, req: &QualityRequest) -> Result<QualityRecord> {
        let kind = self.resolve_class(&req.kind)?;
        if !self.schema.is_subclass_of(&kind, &Term::bfo("Quality")) {
            return Err(ServiceError::InvalidRequest(format!("{kind} is not a quality")));
        }
        let class = quality_class(&kind, req.magnitude, req.unit)?;
        let p = self.project(project)?;
        let mut state = lock(&p);
        let bearer = Self::resolve_instance(&state, &req.bearer)?;
        let quality_of = self.schema.get_relation(&Term::bfo("quality_of")).expect("schema defines quality_of").clone();
        let mut kind_types = self.schema.ancestors(&class).to_vec();
        kind_types.push(class.clone());
        let bearer_types = types_of(&state.materialized, &bearer);
        if !admits(&self.schema, &quality_of, &kind_types, Some(&bearer_types)) {
            return Err(ServiceError::InadmissibleRelation(format!("{class} cannot be a quality of {bearer}")));
        }
        let serial = state.record.next_serial;
        let instance = Term::new(PROJECT, &format!("p{}_{serial}", state.record.id)).expect("minted name is valid");
        let mut graph = state.graph.clone();
        graph.insert(instance.clone(), Term::rdf_type(), class.clone())?;
        graph.insert(instance.clone(), quality_of.term.clone(), bearer.clone())?;
        graph.insert(instance.clone(), Term::geofault("magnitude"), Literal::measure(req.magnitude, req.unit))?;
        let record = QualityRecord {
            id: format!("q{serial}"),
            bearer,
            instance,
            class,
            value: QualityValue { kind, magnitude: req.magnitude, unit: req.unit },
        };
        state.record.next_serial += 1;
        state.record.qualities.push(record.clone());
        self.commit(&mut state, graph)?;
        Ok(record)
    }

    fn snapshot(&self, project: &str) -> Result<Arc<Graph>> {
        let p = self.project(project)?;
        let state = lock(&p);
        Ok(state.materialized.clone())
    }

    /// Consistency, validation and export of the current snapshot.
    pub fn status(&self, project: &str) -> Result<ProjectStatus> {
        let g = self.snapshot(project)?;
        Ok(ProjectStatus {
            consistency: check_consistency(&g, &self.schema),
            validation: validate(&g, &self.shapes),
            graph: export_structured(&g),
        })
    }

    pub fn run_query(&self, project: &str, text: &str) -> Result<QueryResponse> {
        let q = parse_query_with(text, &self.schema)?;
        let g = self.snapshot(project)?;
        Ok(QueryResponse { variables: q.projection.clone(), bindings: evaluate(&g, &q), answers: evaluate_explained(&g, &q) })
    }

    /// Asserted triples as Turtle.
    pub fn export_turtle(&self, project: &str) -> Result<String> {
        let p = self.project(project)?;
        let state = lock(&p);
        Ok(serialize_turtle(&state.graph, &default_prefixes(&state.graph), false))
    }

    /// Materialized graph as node and edge lists.
    pub fn export_json(&self, project: &str) -> Result<StructuredExport> {
        Ok(export_structured(self.snapshot(project)?.as_ref()))
    }

    /// Adds every triple of a Turtle document as an assertion, or none on error.
    pub fn import_turtle(&self, project: &str, text: &str) -> Result<ImportSummary> {
        let doc = parse_turtle_named(text, "import")?;
        let p = self.project(project)?;
        let mut state = lock(&p);
        let mut graph = state.graph.clone();
        let added = graph.load_document(&doc, &Provenance::Asserted)?;
        self.commit(&mut state, graph)?;
        Ok(ImportSummary { added })
    }
}

fn check_region(region: &Region, image: &ImageRef) -> Result<()> {
    if let Region::Polygon { points } = region {
        if points.len() < 3 {
            return Err(ServiceError::InvalidRegion(format!("polygon has {} vertices, at least 3 required", points.len())));
        }
    }
    for [x, y] in region.vertices() {
        if !x.is_finite() || !y.is_finite() {
            return Err(ServiceError::InvalidRegion("coordinates must be finite".into()));
        }
        if x < 0.0 || y < 0.0 || x > image.width as f64 || y > image.height as f64 {
            return Err(ServiceError::RegionOutOfBounds(format!(
                "vertex ({x}, {y}) lies outside the {}x{} image",
                image.width, image.height
            )));
        }
    }
    Ok(())
}

/// Classes asserted on `x`, including inferred ones.
fn types_of(g: &Graph, x: &Term) -> Vec<Term> {
    g.match_pattern(&TriplePattern::new(x.clone(), Term::rdf_type(), PatternTerm::var("c")))
        .into_iter()
        .filter_map(|a| a.object.as_term().cloned())
        .collect()
}

/// Whether `r` admits a subject typed `from` and an object typed `to`
/// (`None` for a literal object).
pub fn admits(schema: &Schema, r: &RelationDef, from: &[Term], to: Option<&[Term]>) -> bool {
    let domain_ok = from.iter().any(|c| schema.is_subclass_of(c, &r.domain));
    let range_ok = match (&r.range, to) {
        (Range::Class(d), Some(types)) => types.iter().any(|c| schema.is_subclass_of(c, d)),
        (Range::Literal, None) => true,
        _ => false,
    };
    domain_ok && range_ok
}

/// Every relation of `schema` admitting the two type sets, sorted by label.
pub fn admissible_relations(schema: &Schema, from: &[Term], to: Option<&[Term]>) -> Vec<RelationDef> {
    let mut out: Vec<RelationDef> = schema.relations().filter(|r| admits(schema, r, from, to)).cloned().collect();
    out.sort_by(|a, b| a.label.cmp(&b.label).then_with(|| a.term.cmp(&b.term)));
    out
}

/// Dip band of an angle in degrees.
pub fn dip_band(degrees: Decimal) -> Term {
    let d = degrees.micros();
    let at = |v: i64| v * 1_000_000;
    Term::geofault(if d >= at(80) {
        "Vertical"
    } else if d >= at(45) {
        "Steep"
    } else {
        "LowAngle"
    })
}

/// Checks unit and range of a quality value and returns the class to assert.
fn quality_class(kind: &Term, magnitude: Decimal, unit: Unit) -> Result<Term> {
    let gf = Term::geofault;
    let out_of_range = |what: &str| ServiceError::ValueOutOfRange(format!("{what}, got {magnitude} {unit}"));
    let need = |u: Unit, what: &str| {
        if unit == u {
            Ok(())
        } else {
            Err(ServiceError::ValueOutOfRange(format!("{what} is measured in {u}s, got {unit}")))
        }
    };
    let zero = Decimal::from_micros(0);
    let bands = ["Vertical", "Steep", "LowAngle"].map(gf);
    if *kind == gf("FaultDip") || bands.contains(kind) {
        need(Unit::Degree, "dip")?;
        if magnitude < zero || magnitude > Decimal::from_int(90).expect("small") {
            return Err(out_of_range("dip must lie in [0, 90] degrees"));
        }
        let band = dip_band(magnitude);
        if *kind != gf("FaultDip") && *kind != band {
            return Err(out_of_range(&format!("{kind} does not match the band {band}")));
        }
        return Ok(band);
    }
    if *kind == gf("FaultAzimuth") {
        need(Unit::Degree, "azimuth")?;
        if magnitude < zero || magnitude >= Decimal::from_int(360).expect("small") {
            return Err(out_of_range("azimuth must lie in [0, 360) degrees"));
        }
    } else if *kind == gf("FaultMaximumSeparation") {
        need(Unit::Meter, "separation")?;
        if magnitude < zero {
            return Err(out_of_range("separation must be non-negative"));
        }
    }
    Ok(kind.clone())
}
