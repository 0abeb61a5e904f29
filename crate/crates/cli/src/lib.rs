//! `geofault` command line: each subcommand composes library calls and
//! writes results to the output stream, diagnostics to the error stream.
//!
//! Exit codes: 0 success, 1 domain failure (inconsistent, non-conforming,
//! no answers under `--expect-nonempty`, derivation limit), 2 usage, file
//! or parse error.

use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use geofault_core::rdf_io::write_triples;
use geofault_core::term::GEOFAULT;
use geofault_core::{
    builtin_schema, check_consistency, compile_rules, compile_shapes, default_prefixes, evaluate, explain_answer,
    export_structured, materialize_in_place, parse_query_with, parse_turtle_named, serialize_turtle, validate, Graph,
    MaterializeOptions, Node, Provenance, Schema,
};

pub const SCHEMA_ENV: &str = "GEOFAULT_SCHEMA";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Ttl,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "geofault", version, about = "Fault ontology knowledge graphs: check, validate, query, export")]
pub struct Cli {
    /// Schema in Turtle; defaults to the bundled one.
    #[arg(long, global = true, env = SCHEMA_ENV, value_name = "PATH")]
    pub schema: Option<PathBuf>,
    /// Output format; each subcommand accepts a subset.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Upper bound on derived triples during materialization.
    #[arg(long, global = true, value_name = "N")]
    pub max_derived: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Materialize and check open-world consistency.
    Check {
        #[arg(required = true)]
        data: Vec<PathBuf>,
    },
    /// Materialize and validate definitional shapes.
    Validate {
        #[arg(required = true)]
        data: Vec<PathBuf>,
    },
    /// Run a conjunctive query over the materialized graph.
    Query {
        data: PathBuf,
        query: PathBuf,
        /// Exit 1 when the query has no answers.
        #[arg(long)]
        expect_nonempty: bool,
        /// Print the witnessing edges under each answer.
        #[arg(long)]
        explain: bool,
    },
    /// Materialize and report what was derived.
    Reason {
        #[arg(required = true)]
        data: Vec<PathBuf>,
        /// Write the inferred triples as Turtle.
        #[arg(long)]
        emit_inferred: bool,
    },
    /// Write the graph as canonical Turtle or structured JSON.
    Export {
        #[arg(required = true)]
        data: Vec<PathBuf>,
    },
    /// Start the annotation service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Project store root; falls back to GEOFAULT_DATA_DIR, then ./geofault-data.
        #[arg(long, env = geofault_service::DATA_DIR_ENV, value_name = "DIR")]
        data_dir: Option<PathBuf>,
        /// Directory of static UI assets served for unmatched paths.
        #[arg(long, env = geofault_service::STATIC_DIR_ENV, value_name = "DIR")]
        static_dir: Option<PathBuf>,
    },
    /// Inspect the active schema.
    Schema {
        /// One line per class: term, label, offered-for-annotation flag.
        #[arg(long)]
        list_classes: bool,
    },
}

/// A failure with its exit code; the message goes to the error stream.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

fn domain(message: impl Into<String>) -> Failure {
    Failure { code: 1, message: message.into() }
}

type Result<T> = std::result::Result<T, Failure>;

/// Parses `argv` (program name first), runs it, and returns the exit code.
pub fn run<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes()).map_err(|e| usage(format!("cannot write output: {e}")))
}

pub fn load_schema(path: Option<&Path>) -> Result<Arc<Schema>> {
    match path {
        None => Ok(builtin_schema()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| usage(format!("cannot read {}: {e}", p.display())))?;
            Schema::from_turtle(&text, &p.display().to_string())
                .map(Arc::new)
                .map_err(|e| usage(format!("{}: {e}", p.display())))
        }
    }
}

/// Reads and merges Turtle files. Triples carry `imported` provenance
/// naming their file.
pub fn load_data(schema: &Arc<Schema>, paths: &[PathBuf]) -> Result<Graph> {
    let mut g = Graph::new(schema.clone());
    for p in paths {
        let shown = p.display().to_string();
        let text = std::fs::read_to_string(p).map_err(|e| usage(format!("cannot read {shown}: {e}")))?;
        let doc = parse_turtle_named(&text, &shown).map_err(|e| usage(format!("{shown}:{e}")))?;
        let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or(shown.clone());
        g.load_document(&doc, &Provenance::Imported(name)).map_err(|e| usage(format!("{shown}: {e}")))?;
    }
    Ok(g)
}

fn materialized(cli: &Cli, schema: &Arc<Schema>, paths: &[PathBuf]) -> Result<Graph> {
    materialize_loaded(cli, schema, load_data(schema, paths)?)
}

fn materialize_loaded(cli: &Cli, schema: &Arc<Schema>, mut g: Graph) -> Result<Graph> {
    let mut opts = MaterializeOptions::default();
    if let Some(n) = cli.max_derived {
        opts.max_derived = n;
    }
    let stats = materialize_in_place(&mut g, &compile_rules(schema), opts).map_err(|e| domain(e.to_string()))?;
    log::info!("materialized {} input triples, {} derived", stats.input, stats.derived);
    Ok(g)
}

/// Compact rendering used in query rows: geofault terms by local name.
pub fn render_node(n: &Node) -> String {
    match n {
        Node::Term(t) if t.namespace() == GEOFAULT => t.local_name().to_string(),
        other => other.to_string(),
    }
}

fn format_of(cli: &Cli, allowed: &[Format], default: Format) -> Result<Format> {
    let f = cli.format.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err(usage(format!("--format {f:?} is not supported here").to_lowercase()))
    }
}

fn pretty<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("value serializes");
    s.push('\n');
    s
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    if let Command::Serve { port, host, data_dir, static_dir } = &cli.command {
        return serve(cli, *port, host, data_dir.clone(), static_dir.clone());
    }
    let schema = load_schema(cli.schema.as_deref())?;
    match &cli.command {
        Command::Check { data } => {
            let fmt = format_of(cli, &[Format::Text, Format::Json], Format::Text)?;
            let g = materialized(cli, &schema, data)?;
            let report = check_consistency(&g, &schema);
            if fmt == Format::Json {
                write_out(out, &pretty(&report))?;
            } else {
                let mut s = String::from(if report.consistent { "consistent\n" } else { "inconsistent\n" });
                for c in &report.clashes {
                    s.push_str(&format!("{}\t{}\t{}\n", c.kind, c.source, c.message));
                }
                write_out(out, &s)?;
            }
            Ok(if report.consistent { 0 } else { 1 })
        }
        Command::Validate { data } => {
            let fmt = format_of(cli, &[Format::Text, Format::Json], Format::Text)?;
            let g = materialized(cli, &schema, data)?;
            let report = validate(&g, &compile_shapes(&schema));
            if fmt == Format::Json {
                write_out(out, &report.to_json())?;
                write_out(out, "\n")?;
            } else {
                let mut s = String::from(if report.conforms { "conforms\n" } else { "does not conform\n" });
                for v in &report.violations {
                    s.push_str(&format!("{}\t{}\t{}\t{}\n", v.severity, v.focus, v.constraint, v.message));
                }
                write_out(out, &s)?;
            }
            Ok(if report.conforms { 0 } else { 1 })
        }
        Command::Query { data, query, expect_nonempty, explain } => {
            let fmt = format_of(cli, &[Format::Text, Format::Json], Format::Text)?;
            let g = load_data(&schema, std::slice::from_ref(data))?;
            let shown = query.display().to_string();
            let text = std::fs::read_to_string(query).map_err(|e| usage(format!("cannot read {shown}: {e}")))?;
            let q = parse_query_with(&text, &schema).map_err(|e| usage(format!("{shown}:{e}")))?;
            let g = materialize_loaded(cli, &schema, g)?;
            let answers = evaluate(&g, &q);
            if fmt == Format::Json {
                let rows: Vec<serde_json::Value> = answers
                    .iter()
                    .map(|b| {
                        let mut row = serde_json::json!({ "binding": b });
                        if *explain {
                            let ex = explain_answer(&g, &q, b).expect("answers are explainable");
                            row["explanation"] = serde_json::to_value(ex).expect("explanation serializes");
                        }
                        row
                    })
                    .collect();
                write_out(out, &pretty(&serde_json::json!({ "variables": q.projection, "answers": rows })))?;
            } else {
                let mut s = String::new();
                for b in &answers {
                    let row: Vec<String> = q.projection.iter().map(|v| render_node(&b.bindings[v])).collect();
                    s.push_str(&row.join("\t"));
                    s.push('\n');
                    if *explain {
                        for e in explain_answer(&g, &q, b).expect("answers are explainable").edges {
                            s.push_str(&format!(
                                "  {} {} {}\t{}\n",
                                e.subject,
                                e.predicate,
                                e.object,
                                provenance_text(&e.provenance)
                            ));
                        }
                    }
                }
                write_out(out, &s)?;
            }
            log::info!("{} answer(s)", answers.len());
            if *expect_nonempty && answers.is_empty() {
                return Err(domain("query has no answers"));
            }
            Ok(0)
        }
        Command::Reason { data, emit_inferred } => {
            let fmt = format_of(cli, &[Format::Text, Format::Ttl, Format::Json], Format::Text)?;
            let g = materialized(cli, &schema, data)?;
            match fmt {
                Format::Json => write_out(out, &export_structured(&g).to_json())?,
                _ if *emit_inferred || fmt == Format::Ttl => {
                    let triples = g
                        .assertions()
                        .into_iter()
                        .filter(|a| !*emit_inferred || a.provenance.is_inferred())
                        .map(|a| (a.subject, a.predicate, a.object));
                    write_out(out, &write_triples(triples, &default_prefixes(&g)))?;
                }
                _ => write_out(
                    out,
                    &format!("asserted\t{}\ninferred\t{}\n", g.len() - g.inferred_count(), g.inferred_count()),
                )?,
            }
            Ok(0)
        }
        Command::Export { data } => {
            let fmt = format_of(cli, &[Format::Ttl, Format::Json], Format::Ttl)?;
            if fmt == Format::Ttl {
                let g = load_data(&schema, data)?;
                write_out(out, &serialize_turtle(&g, &default_prefixes(&g), false))?;
            } else {
                let g = materialized(cli, &schema, data)?;
                write_out(out, &export_structured(&g).to_json())?;
                write_out(out, "\n")?;
            }
            Ok(0)
        }
        Command::Schema { list_classes } => {
            if *list_classes {
                let mut classes: Vec<_> = schema.classes().collect();
                classes.sort_by(|a, b| a.term.cmp(&b.term));
                let lines: String = classes
                    .iter()
                    .map(|c| {
                        let flag = if c.user_facing { "offered" } else { "hidden" };
                        format!("{}\t{}\t{flag}\n", c.term, c.label)
                    })
                    .collect();
                write_out(out, &lines)?;
            } else {
                write_out(out, &schema.to_turtle())?;
            }
            Ok(0)
        }
        Command::Serve { .. } => unreachable!("handled above"),
    }
}

fn provenance_text(p: &Provenance) -> String {
    match p {
        Provenance::Asserted => "asserted".into(),
        Provenance::Imported(src) => format!("imported:{src}"),
        Provenance::Inferred(rule) => format!("inferred:{rule}"),
    }
}

fn serve(cli: &Cli, port: u16, host: &str, data_dir: Option<PathBuf>, static_dir: Option<PathBuf>) -> Result<i32> {
    let schema = load_schema(cli.schema.as_deref())?;
    let addr: SocketAddr =
        format!("{host}:{port}").parse().map_err(|e| usage(format!("invalid address {host}:{port}: {e}")))?;
    let root = data_dir.unwrap_or_else(|| PathBuf::from("geofault-data"));
    let service = geofault_service::Service::open(&root, schema)
        .map_err(|e| usage(format!("cannot open {}: {e}", root.display())))?;
    let rt = tokio::runtime::Runtime::new().map_err(|e| usage(format!("cannot start runtime: {e}")))?;
    rt.block_on(geofault_service::serve(Arc::new(service), addr, static_dir))
        .map_err(|e| usage(format!("server failed: {e}")))?;
    Ok(0)
}
