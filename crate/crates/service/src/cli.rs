//! `rosetta` command line. Each subcommand opens the knowledge base in the
//! data directory, performs one library operation and prints the result,
//! as text or (with `--json`) as the same JSON the HTTP API returns.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rosetta_kb::crosswalk::{CrosswalkSpec, TargetDocument};
use rosetta_kb::display::Template;
use rosetta_kb::kb::{StatementRequest, TermInput};
use rosetta_kb::model::{Datatype, LiteralValue, Upri, Value};
use rosetta_kb::query::{Answer, QueryDocument, QuestionSpec};
use rosetta_kb::schema::{Constraint, LogicalFlag, Paradigm, ReferenceSchema, WizardAnswers};
use rosetta_kb::store::Tag;
use rosetta_kb::terms::{MappingKind, TermKind, TermsDocument};
use rosetta_kb::{Error, KnowledgeBase};
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::config::ServiceConfig;
use crate::ops::{self, ClassifyRequest, ErrorBody, WizardRequest};
use crate::ServeError;

#[derive(Debug, Parser)]
#[command(name = "rosetta", version, about = "Statement-centric knowledge base")]
pub struct Cli {
    /// Data directory holding the event log and snapshot.
    #[arg(long, global = true, env = "ROSETTA_DATA_DIR")]
    pub data_dir: Option<PathBuf>,
    /// YAML service configuration; the data directory flag or variable
    /// overrides its data-directory.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print machine-readable JSON.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reference schemata.
    #[command(subcommand)]
    Schema(SchemaCmd),
    /// Terms, mappings and vocabulary resolution.
    #[command(subcommand)]
    Term(TermCmd),
    /// Statements: create, edit, delete, version, render.
    #[command(subcommand)]
    Stmt(StmtCmd),
    /// Crosswalks to other formats.
    #[command(subcommand)]
    Crosswalk(CrosswalkCmd),
    /// Questions.
    #[command(subcommand)]
    Query(QueryCmd),
    /// Dynamic labels and mind-map patterns.
    #[command(subcommand)]
    Template(TemplateCmd),
    /// Bundled demonstration data.
    #[command(subcommand)]
    Demo(DemoCmd),
    /// Counts of what the knowledge base holds.
    Health,
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        bind: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum SchemaCmd {
    /// Create a schema from wizard answers; asks the questions when no file
    /// is given.
    New {
        #[arg(long)]
        answers: Option<PathBuf>,
        #[arg(long)]
        paradigm: Option<Paradigm>,
    },
    /// Latest version of every schema.
    List,
    Show { id: Upri },
    /// Shape document with per-position cardinalities.
    Shape { id: Upri },
    /// Derived OWL properties and their crosswalk.
    Owl { id: Upri },
    /// The wizard questions, with the answers reproducing a schema if given.
    WizardSpec { id: Option<Upri> },
    /// Add optional positions from a YAML/JSON list.
    Evolve { id: Upri, additions: PathBuf },
    /// Publish a schema document.
    Import { file: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum TermCmd {
    /// Register a single term.
    Add(TermArgs),
    /// Register a terms document (terms, then mappings).
    Import { file: PathBuf },
    /// Add a mapping from a foreign term to a reference term.
    Map {
        source: Upri,
        target: Upri,
        #[arg(long, value_parser = parse_serde::<MappingKind>, default_value = "equivalent-class")]
        kind: MappingKind,
    },
    /// Translate a term into a vocabulary through the reference hub.
    Resolve {
        id: Upri,
        #[arg(long)]
        vocab: String,
        #[arg(long, value_parser = parse_serde::<MappingKind>, default_value = "equivalent-class")]
        kind: MappingKind,
    },
    Show { id: Upri },
    List,
}

#[derive(Debug, Args)]
pub struct TermArgs {
    #[arg(long)]
    pub label: String,
    #[arg(long, value_parser = parse_serde::<TermKind>, default_value = "class-term")]
    pub kind: TermKind,
    #[arg(long, default_value = "local")]
    pub vocabulary: String,
    #[arg(long)]
    pub upri: Option<Upri>,
    #[arg(long = "parent")]
    pub parents: Vec<Upri>,
    #[arg(long, default_value = "")]
    pub definition: String,
}

#[derive(Debug, Subcommand)]
pub enum StmtCmd {
    /// Create a statement from a request document.
    Create {
        file: PathBuf,
        #[arg(long)]
        paradigm: Option<Paradigm>,
    },
    Show {
        id: Upri,
        #[arg(long)]
        include_deleted: bool,
    },
    List {
        #[arg(long)]
        schema: Option<Upri>,
        #[arg(long)]
        include_deleted: bool,
    },
    /// Set a position. The value is a resource identifier, a literal when
    /// `--datatype` is given, or a JSON value document starting with `{`.
    Edit {
        id: Upri,
        label: String,
        value: String,
        #[arg(long, value_parser = parse_serde::<Datatype>)]
        datatype: Option<Datatype>,
        #[arg(long)]
        creator: Option<String>,
    },
    /// Soft-delete a statement.
    Delete {
        id: Upri,
        #[arg(long)]
        creator: Option<String>,
    },
    /// Every position instance ever bound, optionally for one label.
    History {
        id: Upri,
        #[arg(long)]
        label: Option<String>,
    },
    /// The input and metadata that recreate the statement.
    Reconstruct {
        id: Upri,
        #[arg(long)]
        include_deleted: bool,
    },
    /// Freeze the current positions as a version.
    Version {
        id: Upri,
        #[arg(long)]
        creator: Option<String>,
    },
    /// The positions as they were at a version.
    VersionView { id: Upri, version: Upri },
    /// Add (or with `--remove`, drop) a classification tag.
    Classify {
        id: Upri,
        tag: String,
        #[arg(long)]
        remove: bool,
        /// Cardinality operator: =, <, <=, >, >=.
        #[arg(long)]
        op: Option<String>,
        #[arg(long)]
        n: Option<u32>,
    },
    /// Dynamic label text.
    Render {
        id: Upri,
        #[arg(long)]
        template: Option<Upri>,
    },
    /// Mind-map graph of the statement.
    Mindmap {
        id: Upri,
        #[arg(long)]
        pattern: Option<Upri>,
    },
    /// The light structure of a full-paradigm statement.
    ToLight { id: Upri },
}

#[derive(Debug, Subcommand)]
pub enum CrosswalkCmd {
    /// Register a crosswalk for a schema.
    Define {
        file: PathBuf,
        #[arg(long)]
        schema: Option<Upri>,
    },
    Show { id: Upri },
    List,
    /// Export a statement as a target document.
    Export { crosswalk: Upri, statement: Upri },
    /// Create a statement from a target document.
    Import {
        crosswalk: Upri,
        file: PathBuf,
        #[arg(long)]
        creator: Option<String>,
    },
    /// Convert a document between two crosswalks of the same schema.
    Convert { from: Upri, to: Upri, file: PathBuf },
    /// Crosswalks needed for n schemas, pairwise versus hub.
    Counts { n: u64 },
}

#[derive(Debug, Subcommand)]
pub enum QueryCmd {
    /// Evaluate a question or composite document.
    Run { file: PathBuf },
    /// Print the query plan.
    Explain { file: PathBuf },
    /// Store a question as a question-tagged statement.
    Store {
        file: PathBuf,
        #[arg(long)]
        creator: Option<String>,
    },
    Show { id: Upri },
}

#[derive(Debug, Subcommand)]
pub enum TemplateCmd {
    /// Register a dynamic label or mind-map pattern.
    Add { file: PathBuf },
    Show { id: Upri },
    List {
        #[arg(long)]
        schema: Option<Upri>,
    },
}

#[derive(Debug, Subcommand)]
pub enum DemoCmd {
    /// Load the bundled terms, schemas, crosswalks and travel label.
    Load {
        /// Also create the apple weight and travel statements.
        #[arg(long)]
        with_statements: bool,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Kb(#[from] Error),
    #[error(transparent)]
    Serve(#[from] ServeError),
    #[error("{0}")]
    Input(String),
}

impl CliError {
    fn body(&self) -> ErrorBody {
        match self {
            CliError::Kb(e) | CliError::Serve(ServeError::Kb(e)) => ErrorBody::from_error(e),
            CliError::Serve(e) => ErrorBody::new("ServiceError", e.to_string()),
            CliError::Input(m) => ErrorBody::new("InputError", m.clone()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// What a command prints: human text and the JSON form.
pub struct Reply {
    text: String,
    json: serde_json::Value,
}

impl Reply {
    fn doc<T: Serialize>(v: &T) -> CliResult<Reply> {
        let json = json(v)?;
        let text = serde_yaml::to_string(&json).map_err(|e| CliError::Input(e.to_string()))?;
        Ok(Reply { text: text.trim_end().to_owned(), json })
    }

    fn id(upri: &Upri) -> Reply {
        Reply { text: upri.to_string(), json: serde_json::json!({ "upri": upri }) }
    }

    fn text<T: Serialize>(text: impl Into<String>, v: &T) -> CliResult<Reply> {
        Ok(Reply { text: text.into(), json: json(v)? })
    }
}

fn json<T: Serialize>(v: &T) -> CliResult<serde_json::Value> {
    serde_json::to_value(v).map_err(|e| CliError::Input(e.to_string()))
}

fn parse_serde<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_owned())).map_err(|e| e.to_string())
}

fn read_text(path: &Path, stdin: &mut dyn BufRead) -> CliResult<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        stdin.read_to_string(&mut s).map_err(|e| CliError::Input(format!("stdin: {e}")))?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }
}

/// Reads a YAML or JSON document (`-` for standard input).
fn read_doc<T: DeserializeOwned>(path: &Path, stdin: &mut dyn BufRead) -> CliResult<T> {
    let text = read_text(path, stdin)?;
    // Through a JSON value, so enums read the same as in HTTP bodies.
    let bad = |e: String| CliError::Input(format!("{}: {e}", path.display()));
    let value: serde_json::Value = serde_yaml::from_str(&text).map_err(|e| bad(e.to_string()))?;
    serde_json::from_value(value).map_err(|e| bad(e.to_string()))
}

/// Parses the arguments and runs the command. Returns the process exit
/// code: 0 on success, 1 when the operation fails, 2 on usage errors.
pub fn run<I, T>(args: I, stdin: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return u8::try_from(code).unwrap_or(2);
        }
    };
    let as_json = cli.json;
    match execute(cli, stdin, out, err) {
        Ok(reply) => {
            let printed = if as_json {
                serde_json::to_string_pretty(&reply.json).map(|s| writeln!(out, "{s}"))
            } else if reply.text.is_empty() {
                Ok(Ok(()))
            } else {
                Ok(writeln!(out, "{}", reply.text))
            };
            match printed {
                Ok(Ok(())) => 0,
                _ => 1,
            }
        }
        Err(e) => {
            if as_json {
                let body = serde_json::to_string(&e.body()).unwrap_or_default();
                let _ = writeln!(err, "{body}");
            } else {
                let _ = writeln!(err, "error: {e}");
            }
            1
        }
    }
}

fn config(cli: &Cli) -> CliResult<ServiceConfig> {
    let mut config = match &cli.config {
        Some(path) => ServiceConfig::from_file(path)?,
        None => ServiceConfig::default(),
    };
    if let Some(dir) = &cli.data_dir {
        config.data_directory = dir.clone();
    }
    Ok(config)
}

fn execute(cli: Cli, stdin: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<Reply> {
    let config = config(&cli)?;
    let open = || crate::open(&config).map_err(CliError::from);
    match cli.command {
        Command::Serve { bind } => {
            let mut config = config.clone();
            if let Some(b) = bind {
                config.bind_address = b;
            }
            let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Input(e.to_string()))?;
            rt.block_on(crate::serve(config, |addr| {
                let _ = writeln!(out, "listening on {addr}");
                let _ = out.flush();
            }))?;
            Ok(Reply { text: String::new(), json: serde_json::Value::Null })
        }
        Command::Health => Reply::doc(&open()?.health()),
        Command::Schema(c) => schema(c, &open, stdin, err),
        Command::Term(c) => term(c, &open, stdin),
        Command::Stmt(c) => stmt(c, &open, stdin),
        Command::Crosswalk(c) => crosswalk(c, &open, stdin),
        Command::Query(c) => query(c, &open, stdin),
        Command::Template(c) => template(c, &open, stdin),
        Command::Demo(DemoCmd::Load { with_statements }) => {
            let ids = ops::install_demo(&mut open()?, with_statements)?;
            let text = ids.iter().map(|(k, v)| format!("{k}\t{v}")).collect::<Vec<_>>().join("\n");
            Reply::text(text, &ids)
        }
    }
}

type Opener<'a> = &'a dyn Fn() -> CliResult<KnowledgeBase>;

fn schema(c: SchemaCmd, open: Opener, stdin: &mut dyn BufRead, err: &mut dyn Write) -> CliResult<Reply> {
    match c {
        SchemaCmd::New { answers, paradigm } => {
            let answers = match answers {
                Some(path) => read_doc(&path, stdin)?,
                None => ask_wizard(stdin, err)?,
            };
            let mut kb = open()?;
            let created = ops::create_schema(&mut kb, &WizardRequest { answers, paradigm })?;
            Reply::text(created.schema.statement_class.to_string(), &created)
        }
        SchemaCmd::List => {
            let kb = open()?;
            let all: Vec<&ReferenceSchema> = kb.schemas().latest().collect();
            let text = all
                .iter()
                .map(|s| format!("{}\t{} (v{})", s.statement_class, s.predicate_label, s.version))
                .collect::<Vec<_>>()
                .join("\n");
            Reply::text(text, &all)
        }
        SchemaCmd::Show { id } => Reply::doc(open()?.schema(&id)?),
        SchemaCmd::Shape { id } => Reply::doc(&open()?.shape(&id)?),
        SchemaCmd::Owl { id } => Reply::doc(&open()?.owl_schema(&id)?),
        SchemaCmd::WizardSpec { id } => match id {
            Some(id) => Reply::doc(&ops::wizard_spec(&open()?, Some(&id))?),
            None => Reply::doc(&ops::WizardSpec { questions: KnowledgeBase::wizard_spec(), answers: None }),
        },
        SchemaCmd::Evolve { id, additions } => {
            let additions = read_doc(&additions, stdin)?;
            Reply::doc(&open()?.evolve_schema(&id, additions)?)
        }
        SchemaCmd::Import { file } => {
            let schema: ReferenceSchema = read_doc(&file, stdin)?;
            let id = schema.statement_class.clone();
            open()?.import_schema(schema)?;
            Ok(Reply::id(&id))
        }
    }
}

fn term(c: TermCmd, open: Opener, stdin: &mut dyn BufRead) -> CliResult<Reply> {
    match c {
        TermCmd::Add(a) => {
            let input = TermInput {
                upri: a.upri,
                label: a.label,
                kind: a.kind,
                definition: a.definition,
                parents: a.parents.into_iter().collect(),
                vocabulary: a.vocabulary,
            };
            Ok(Reply::id(&open()?.register_term(input)?))
        }
        TermCmd::Import { file } => {
            let doc: TermsDocument = read_doc(&file, stdin)?;
            let (terms, mappings) = open()?.import_terms(&doc, None)?;
            Reply::text(
                format!("{terms} terms, {mappings} mappings"),
                &serde_json::json!({ "terms": terms, "mappings": mappings }),
            )
        }
        TermCmd::Map { source, target, kind } => Ok(Reply::id(&open()?.add_mapping(&source, &target, kind, None)?)),
        TermCmd::Resolve { id, vocab, kind } => {
            let resolved = open()?.resolve(&id, &vocab, kind)?;
            let body = ops::Resolved { term: id, vocabulary: vocab, kind, resolved };
            Reply::text(body.resolved.to_string(), &body)
        }
        TermCmd::Show { id } => Reply::doc(open()?.terms().term(&id)?),
        TermCmd::List => {
            let kb = open()?;
            let all: Vec<_> = kb.terms().terms().collect();
            let text = all.iter().map(|t| format!("{}\t{}", t.upri, t.label)).collect::<Vec<_>>().join("\n");
            Reply::text(text, &all)
        }
    }
}

fn value_arg(value: &str, datatype: Option<Datatype>) -> CliResult<Value> {
    match datatype {
        Some(dt) => Ok(Value::Literal(LiteralValue::new(value, dt)?)),
        None if value.trim_start().starts_with('{') => {
            serde_json::from_str(value).map_err(|e| CliError::Input(format!("value: {e}")))
        }
        None => Ok(Value::individual(Upri::new(value)?)),
    }
}

fn stmt(c: StmtCmd, open: Opener, stdin: &mut dyn BufRead) -> CliResult<Reply> {
    match c {
        StmtCmd::Create { file, paradigm } => {
            let mut req: StatementRequest = read_doc(&file, stdin)?;
            if paradigm.is_some() {
                req.paradigm = paradigm;
            }
            let mut kb = open()?;
            let id = kb.create_statement(req)?;
            Reply::text(id.to_string(), &kb.statement_document(&id, false)?)
        }
        StmtCmd::Show { id, include_deleted } => Reply::doc(&open()?.statement_document(&id, include_deleted)?),
        StmtCmd::List { schema, include_deleted } => {
            let kb = open()?;
            let records = kb.statements(schema.as_ref(), include_deleted);
            let lines = records
                .iter()
                .map(|r| {
                    let label = if r.current { kb.render_label(&r.upri, None).unwrap_or_default() } else { "(deleted)".into() };
                    format!("{}\t{label}", r.upri)
                })
                .collect::<Vec<_>>();
            let docs: Vec<_> = records.iter().map(|r| r.document()).collect();
            Reply::text(lines.join("\n"), &docs)
        }
        StmtCmd::Edit { id, label, value, datatype, creator } => {
            let value = value_arg(&value, datatype)?;
            Reply::doc(&open()?.edit_position(&id, &label, value, creator.as_deref())?)
        }
        StmtCmd::Delete { id, creator } => {
            let mut kb = open()?;
            kb.delete_statement(&id, creator.as_deref())?;
            Reply::text(format!("deleted {id}"), &kb.statement_document(&id, true)?)
        }
        StmtCmd::History { id, label } => Reply::doc(&open()?.history(&id, label.as_deref())?),
        StmtCmd::Reconstruct { id, include_deleted } => Reply::doc(&open()?.reconstruct(&id, include_deleted)?),
        StmtCmd::Version { id, creator } => {
            let v = open()?.create_version(&id, creator.as_deref())?;
            Reply::text(v.upri.to_string(), &v)
        }
        StmtCmd::VersionView { id, version } => Reply::doc(&open()?.version_view(&id, &version)?),
        StmtCmd::Classify { id, tag, remove, op, n } => {
            let mut body = serde_json::json!({ "tag": tag, "remove": remove });
            if let Some(op) = op {
                body["op"] = op.into();
            }
            if let Some(n) = n {
                body["n"] = n.into();
            }
            let req: ClassifyRequest = serde_json::from_value(body).map_err(|e| CliError::Input(format!("tag: {e}")))?;
            let _: &Tag = &req.tag;
            Reply::doc(&ops::classify(&mut open()?, &id, &req)?)
        }
        StmtCmd::Render { id, template } => {
            let r = ops::render(&open()?, &id, template.as_ref())?;
            Reply::text(r.label.clone(), &r)
        }
        StmtCmd::Mindmap { id, pattern } => Reply::doc(&open()?.render_mindmap(&id, pattern.as_ref())?),
        StmtCmd::ToLight { id } => Reply::doc(&open()?.full_to_light(&id)?),
    }
}

fn crosswalk(c: CrosswalkCmd, open: Opener, stdin: &mut dyn BufRead) -> CliResult<Reply> {
    match c {
        CrosswalkCmd::Define { file, schema } => {
            let spec: CrosswalkSpec = read_doc(&file, stdin)?;
            let created = ops::define_crosswalk(&mut open()?, spec, schema.as_ref())?;
            Ok(Reply::id(&created.upri))
        }
        CrosswalkCmd::Show { id } => Reply::doc(open()?.crosswalk(&id)?),
        CrosswalkCmd::List => {
            let kb = open()?;
            let all: Vec<_> = kb.crosswalks().all().collect();
            let text = all.iter().map(|c| format!("{}\t{}", c.id, c.target.name)).collect::<Vec<_>>().join("\n");
            Reply::text(text, &all)
        }
        CrosswalkCmd::Export { crosswalk, statement } => {
            let exported = open()?.export_statement(&crosswalk, &statement)?;
            Reply::text(exported.document.to_text()?.trim_end(), &exported)
        }
        CrosswalkCmd::Import { crosswalk, file, creator } => {
            let mut kb = open()?;
            let kind = kb.crosswalk(&crosswalk)?.target.kind;
            let doc = TargetDocument::parse(kind, &read_text(&file, stdin)?)?;
            let id = kb.import_statement(&crosswalk, &doc, creator.as_deref())?;
            Reply::text(id.to_string(), &kb.statement_document(&id, false)?)
        }
        CrosswalkCmd::Convert { from, to, file } => {
            let kb = open()?;
            let kind = kb.crosswalk(&from)?.target.kind;
            let doc = TargetDocument::parse(kind, &read_text(&file, stdin)?)?;
            let exported = kb.transit_convert(&doc, &from, &to)?;
            Reply::text(exported.document.to_text()?.trim_end(), &exported)
        }
        CrosswalkCmd::Counts { n } => {
            let counts = KnowledgeBase::crosswalk_counts(n)?;
            Reply::text(format!("pairwise {}, hub {}", counts.pairwise, counts.hub), &counts)
        }
    }
}

fn answer_text(kb: &KnowledgeBase, answer: &Answer) -> String {
    match answer {
        Answer::Boolean(b) => b.to_string(),
        Answer::Statements(ids) if ids.is_empty() => "no matching statements".into(),
        Answer::Statements(ids) => ids
            .iter()
            .map(|id| format!("{id}\t{}", kb.render_label(id, None).unwrap_or_default()))
            .collect::<Vec<_>>()
            .join("\n"),
        Answer::Tuples(rows) if rows.is_empty() => "no matching statements".into(),
        Answer::Tuples(rows) => rows
            .iter()
            .map(|row| row.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" "))
            .collect::<Vec<_>>()
            .join("\n"),
    }
}

fn query(c: QueryCmd, open: Opener, stdin: &mut dyn BufRead) -> CliResult<Reply> {
    match c {
        QueryCmd::Run { file } => {
            let doc: QueryDocument = read_doc(&file, stdin)?;
            let kb = open()?;
            let answer = kb.evaluate(&doc)?;
            Reply::text(answer_text(&kb, &answer), &answer)
        }
        QueryCmd::Explain { file } => {
            let doc: QueryDocument = read_doc(&file, stdin)?;
            let plan = open()?.explain(&doc)?;
            Reply::text(plan.clone(), &serde_json::json!({ "plan": plan }))
        }
        QueryCmd::Store { file, creator } => {
            let spec: QuestionSpec = read_doc(&file, stdin)?;
            Ok(Reply::id(&open()?.store_question(&spec, creator.as_deref())?))
        }
        QueryCmd::Show { id } => Reply::doc(open()?.question(&id)?),
    }
}

fn template(c: TemplateCmd, open: Opener, stdin: &mut dyn BufRead) -> CliResult<Reply> {
    match c {
        TemplateCmd::Add { file } => {
            let t: Template = read_doc(&file, stdin)?;
            Ok(Reply::id(&open()?.register_template(t)?))
        }
        TemplateCmd::Show { id } => Reply::doc(open()?.templates().get(&id)?),
        TemplateCmd::List { schema } => {
            let kb = open()?;
            let all: BTreeMap<&Upri, &Template> = match &schema {
                Some(s) => kb.templates().for_schema(s).collect(),
                None => kb.templates().all().collect(),
            };
            let text = all.keys().map(ToString::to_string).collect::<Vec<_>>().join("\n");
            Reply::text(text, &all)
        }
    }
}

// ---- interactive wizard ----

struct Asker<'a> {
    input: &'a mut dyn BufRead,
    prompt: &'a mut dyn Write,
}

impl Asker<'_> {
    fn line(&mut self, prompt: &str) -> CliResult<String> {
        write!(self.prompt, "{prompt}").map_err(|e| CliError::Input(e.to_string()))?;
        let _ = self.prompt.flush();
        let mut s = String::new();
        let n = self.input.read_line(&mut s).map_err(|e| CliError::Input(e.to_string()))?;
        if n == 0 {
            return Err(CliError::Input("input ended before the wizard was complete".into()));
        }
        Ok(s.trim().to_owned())
    }

    fn say(&mut self, text: &str) {
        let _ = writeln!(self.prompt, "{text}");
    }
}

fn parse_constraint(line: &str) -> CliResult<Constraint> {
    let bad = |e: String| CliError::Input(format!("constraint `{line}`: {e}"));
    if line.starts_with('{') {
        return serde_yaml::from_str(line).map_err(|e| bad(e.to_string()));
    }
    match line.strip_prefix("literal ") {
        Some(dt) => Ok(Constraint::literal(parse_serde(dt.trim()).map_err(bad)?)),
        None => Ok(Constraint::resource(Upri::new(line)?)),
    }
}

/// Asks the ten editor questions in order on the prompt stream.
fn ask_wizard(input: &mut dyn BufRead, prompt: &mut dyn Write) -> CliResult<WizardAnswers> {
    let questions = KnowledgeBase::wizard_spec();
    let mut a = Asker { input, prompt };
    let q = |n: usize| format!("Q{n}. {}", questions[n - 1].prompt);

    a.say(&format!("{}\n    (one per line, empty line to finish)", q(1)));
    let mut examples = Vec::new();
    loop {
        let line = a.line("  > ")?;
        if line.is_empty() {
            break;
        }
        examples.push(line);
    }
    let predicate = a.line(&format!("{}\n  > ", q(2)))?;
    let description = a.line(&format!("{}\n  > ", q(3)))?;
    let count: usize = a
        .line(&format!("{}\n  > ", q(4)))?
        .parse()
        .map_err(|_| CliError::Input("the position count must be a number".into()))?;
    let labels: Vec<String> = a
        .line(&format!("{}\n    (subject first, then {count} positions, separated by spaces)\n  > ", q(5)))?
        .split([' ', ','])
        .filter(|s| !s.is_empty())
        .map(str::to_owned)
        .collect();
    if labels.len() != count + 1 {
        return Err(CliError::Input(format!("expected {} labels, got {}", count + 1, labels.len())));
    }
    a.say(&q(6));
    let mut required = Vec::new();
    for l in &labels[1..] {
        let ans = a.line(&format!("  {l} required? [y/n] "))?;
        required.push(matches!(ans.to_lowercase().as_str(), "y" | "yes" | ""));
    }
    a.say(&q(7));
    let mut descriptions = Vec::new();
    for l in &labels[1..] {
        descriptions.push(a.line(&format!("  {l}: "))?);
    }
    a.say(&format!("{}\n    (a class identifier, `literal <datatype>`, or an inline constraint document)", q(8)));
    let mut constraints = Vec::new();
    for l in &labels {
        constraints.push(parse_constraint(&a.line(&format!("  {l}: "))?)?);
    }
    a.say(&format!("{}\n    (transitive, symmetric, reflexive; comma-separated, empty for none)", q(9)));
    let mut logical = Vec::new();
    for l in &labels[1..] {
        let flags = a
            .line(&format!("  {l}: "))?
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| parse_serde::<LogicalFlag>(s).map_err(CliError::Input))
            .collect::<CliResult<_>>()?;
        logical.push(flags);
    }
    if logical.iter().all(|f: &std::collections::BTreeSet<LogicalFlag>| f.is_empty()) {
        logical.clear();
    }
    let label = a.line(&format!("{}\n  > ", q(10)))?;
    Ok(WizardAnswers {
        q1_examples: examples,
        q2_predicate: predicate,
        q3_description: description,
        q4_position_count: count,
        q5_labels: labels,
        q6_required: required,
        q7_position_descriptions: descriptions,
        q8_constraints: constraints,
        q9_logical: logical,
        q10_dynamic_label: label,
    })
}
