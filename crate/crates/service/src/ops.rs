//! Request and response bodies shared by the HTTP routes and the CLI, and
//! the few operations that combine several library calls.

use std::collections::BTreeMap;

use rosetta_kb::crosswalk::{CrosswalkSpec, TargetDocument};
use rosetta_kb::display::DynamicLabel;
use rosetta_kb::kb::WizardQuestion;
use rosetta_kb::model::{Upri, Value};
use rosetta_kb::schema::{ObjectPositionSpec, Paradigm, ReferenceSchema, Violation, WizardAnswers};
use rosetta_kb::store::{StatementDocument, Tag};
use rosetta_kb::terms::MappingKind;
use rosetta_kb::{Error, ErrorClass, KnowledgeBase, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WizardRequest {
    #[serde(flatten)]
    pub answers: WizardAnswers,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paradigm: Option<Paradigm>,
}

/// A freshly published schema with the default label to confirm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WizardResponse {
    pub schema: ReferenceSchema,
    pub default_label: DynamicLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WizardSpec {
    pub questions: Vec<WizardQuestion>,
    /// The answers that reproduce the schema, when one is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answers: Option<WizardAnswers>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolveRequest {
    pub additions: Vec<ObjectPositionSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingRequest {
    pub source: Upri,
    pub target: Upri,
    #[serde(default = "equivalent")]
    pub kind: MappingKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub creator: Option<String>,
}

fn equivalent() -> MappingKind {
    MappingKind::EquivalentClass
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolved {
    pub term: Upri,
    pub vocabulary: String,
    pub kind: MappingKind,
    pub resolved: Upri,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditRequest {
    pub value: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub creator: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreatorBody {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub creator: Option<String>,
}

/// Adds a classification tag, or removes it when `remove` is set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifyRequest {
    #[serde(flatten)]
    pub tag: Tag,
    #[serde(default)]
    pub remove: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportRequest {
    /// Graph and tree documents as JSON, tabular documents as CSV text.
    pub document: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub creator: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Created {
    pub upri: Upri,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rendered {
    pub statement: Upri,
    pub label: String,
}

/// Error body of both transports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<Violation>,
}

impl ErrorBody {
    pub fn from_error(e: &Error) -> Self {
        let violations = match e {
            Error::ValidationFailed(r) | Error::ConstraintViolation(r) => r.violations.clone(),
            _ => Vec::new(),
        };
        Self { error: error_kind(e), message: e.to_string(), violations }
    }

    pub fn new(kind: &str, message: impl Into<String>) -> Self {
        Self { error: kind.into(), message: message.into(), violations: Vec::new() }
    }
}

/// The variant name, e.g. `UnknownStatement`.
pub fn error_kind(e: &Error) -> String {
    format!("{e:?}").chars().take_while(char::is_ascii_alphanumeric).collect()
}

pub fn http_status(class: ErrorClass) -> u16 {
    match class {
        ErrorClass::NotFound => 404,
        ErrorClass::Invalid => 422,
        ErrorClass::Conflict => 409,
        ErrorClass::Internal => 500,
    }
}

pub fn parse_upri(s: &str) -> Result<Upri> {
    Upri::new(s)
}

pub fn create_schema(kb: &mut KnowledgeBase, req: &WizardRequest) -> Result<WizardResponse> {
    let schema = kb.create_schema_from_wizard(&req.answers, req.paradigm)?;
    let default_label = kb.templates().default_label(&schema.statement_class)?.clone();
    Ok(WizardResponse { schema, default_label })
}

pub fn wizard_spec(kb: &KnowledgeBase, schema: Option<&Upri>) -> Result<WizardSpec> {
    let answers = schema.map(|id| kb.schema(id).map(ReferenceSchema::to_answers)).transpose()?;
    Ok(WizardSpec { questions: KnowledgeBase::wizard_spec(), answers })
}

pub fn classify(kb: &mut KnowledgeBase, statement: &Upri, req: &ClassifyRequest) -> Result<StatementDocument> {
    if req.remove {
        kb.declassify(statement, req.tag)?;
    } else {
        kb.classify(statement, req.tag)?;
    }
    kb.statement_document(statement, false)
}

pub fn import_document(kb: &mut KnowledgeBase, crosswalk: &Upri, req: &ImportRequest) -> Result<StatementDocument> {
    let kind = kb.crosswalk(crosswalk)?.target.kind;
    let doc = TargetDocument::from_json(kind, req.document.clone())?;
    let id = kb.import_statement(crosswalk, &doc, req.creator.as_deref())?;
    kb.statement_document(&id, false)
}

pub fn define_crosswalk(kb: &mut KnowledgeBase, spec: CrosswalkSpec, schema: Option<&Upri>) -> Result<Created> {
    Ok(Created { upri: kb.define_crosswalk(spec, schema)? })
}

pub fn render(kb: &KnowledgeBase, statement: &Upri, template: Option<&Upri>) -> Result<Rendered> {
    Ok(Rendered { statement: statement.clone(), label: kb.render_label(statement, template)? })
}

/// Identifiers of everything a data set loaded by `demo` registers.
pub fn install_demo(kb: &mut KnowledgeBase, with_statements: bool) -> Result<BTreeMap<String, Upri>> {
    use rosetta_kb::fixtures::{self, upri, Demo};
    let d = Demo::install(kb)?;
    let mut ids = BTreeMap::from([
        ("weight-schema".to_owned(), d.weight.clone()),
        ("travel-schema".to_owned(), d.travel.clone()),
        ("has-part-schema".to_owned(), d.has_part.clone()),
        ("ci-weight-schema".to_owned(), d.ci_weight.clone()),
        ("obi-crosswalk".to_owned(), d.obi.clone()),
        ("oboe-crosswalk".to_owned(), d.oboe.clone()),
        ("qudt-crosswalk".to_owned(), d.qudt.clone()),
        ("csv-crosswalk".to_owned(), d.csv.clone()),
        ("tree-crosswalk".to_owned(), d.tree.clone()),
        ("travel-label".to_owned(), d.travel_label.clone()),
    ]);
    if with_statements {
        ids.insert("apple-statement".into(), kb.create_statement(d.apple_request())?);
        let travel = d.travel_request(
            fixtures::ADA,
            fixtures::BERLIN,
            &[
                ("TRANSPORTATION", Value::individual(upri(fixtures::TRAIN))),
                ("DEPARTURE_LOCATION", Value::individual(upri(fixtures::HANNOVER))),
                ("DATETIME", fixtures::date("2023-05-01")),
            ],
        );
        ids.insert("travel-statement".into(), kb.create_statement(travel)?);
    }
    Ok(ids)
}
