//! JSON-over-HTTP interface. Every handler takes the knowledge base lock
//! once; writes hold the write lock until the event is logged and applied.

use std::sync::{Arc, RwLock, RwLockReadGuard, RwLockWriteGuard};

use axum::extract::{FromRequest, FromRequestParts, Path, Query, Request, State};
use axum::http::request::Parts;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::{Json, Router};
use rosetta_kb::crosswalk::{CrosswalkCounts, CrosswalkSpec};
use rosetta_kb::display::Template;
use rosetta_kb::kb::{Health, StatementRequest, TermInput};
use rosetta_kb::model::{Snapshot, Upri};
use rosetta_kb::query::{Answer, QueryDocument};
use rosetta_kb::store::{ObjectPositionInstance, Reconstructed, StatementDocument};
use rosetta_kb::terms::{MappingKind, TermRecord, TermsDocument};
use rosetta_kb::{Error, KnowledgeBase};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::ops::{self, *};

pub type Shared = Arc<RwLock<KnowledgeBase>>;

pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        Self { status: StatusCode::BAD_REQUEST, body: ErrorBody::new("BadRequest", message) }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = StatusCode::from_u16(http_status(e.class())).expect("valid status");
        Self { status, body: ErrorBody::from_error(&e) }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// JSON body whose rejections use the service error format.
pub struct Body<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for Body<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, ApiError> {
        Json::<T>::from_request(req, state)
            .await
            .map(|Json(v)| Body(v))
            .map_err(|e| ApiError::bad_request(e.body_text()))
    }
}

/// Query string with the same rejection format.
pub struct Params<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequestParts<S> for Params<T> {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &S) -> Result<Self, ApiError> {
        Query::<T>::from_request_parts(parts, state)
            .await
            .map(|Query(v)| Params(v))
            .map_err(|e| ApiError::bad_request(e.body_text()))
    }
}

fn read(kb: &Shared) -> Result<RwLockReadGuard<'_, KnowledgeBase>, ApiError> {
    kb.read().map_err(|_| Error::Internal("knowledge base lock poisoned".into()).into())
}

fn write(kb: &Shared) -> Result<RwLockWriteGuard<'_, KnowledgeBase>, ApiError> {
    kb.write().map_err(|_| Error::Internal("knowledge base lock poisoned".into()).into())
}

fn id(s: &str) -> Result<Upri, ApiError> {
    Ok(ops::parse_upri(s)?)
}

fn opt_id(s: Option<&str>) -> Result<Option<Upri>, ApiError> {
    s.map(id).transpose()
}

fn created<T: Serialize>(v: T) -> (StatusCode, Json<T>) {
    (StatusCode::CREATED, Json(v))
}

pub fn router(kb: Shared) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/schemas", get(list_schemas))
        .route("/schemas/wizard", post(create_schema))
        .route("/schemas/wizard-spec", get(blank_wizard_spec))
        .route("/schemas/{id}", get(get_schema))
        .route("/schemas/{id}/shape", get(get_shape))
        .route("/schemas/{id}/owl", get(get_owl))
        .route("/schemas/{id}/wizard-spec", get(get_wizard_spec))
        .route("/schemas/{id}/evolve", post(evolve_schema))
        .route("/terms", get(list_terms).post(add_term))
        .route("/terms/import", post(import_terms))
        .route("/terms/mappings", post(add_mapping))
        .route("/terms/{id}", get(get_term))
        .route("/terms/{id}/resolve", get(resolve_term))
        .route("/statements", get(list_statements).post(create_statement))
        .route("/statements/{id}", get(get_statement).delete(delete_statement))
        .route("/statements/{id}/positions/{label}", patch(edit_position))
        .route("/statements/{id}/history", get(get_history))
        .route("/statements/{id}/reconstruct", get(get_reconstruct))
        .route("/statements/{id}/versions", post(create_version))
        .route("/statements/{id}/versions/{vid}", get(get_version))
        .route("/statements/{id}/classify", post(classify))
        .route("/statements/{id}/render", get(render))
        .route("/statements/{id}/mindmap", get(mindmap))
        .route("/crosswalks", get(list_crosswalks).post(define_crosswalk))
        .route("/crosswalks/counts", get(counts))
        .route("/crosswalks/{id}", get(get_crosswalk))
        .route("/crosswalks/{id}/export/{stmt}", post(export))
        .route("/crosswalks/{id}/import", post(import))
        .route("/queries", post(store_question))
        .route("/queries/evaluate", post(evaluate))
        .route("/queries/explain", post(explain))
        .route("/queries/{id}", get(get_question))
        .route("/templates", get(list_templates).post(add_template))
        .route("/templates/{id}", get(get_template))
        .with_state(kb)
}

async fn health(State(kb): State<Shared>) -> ApiResult<Health> {
    Ok(Json(read(&kb)?.health()))
}

// ---- schemas ----

async fn list_schemas(State(kb): State<Shared>) -> ApiResult<Vec<rosetta_kb::schema::ReferenceSchema>> {
    Ok(Json(read(&kb)?.schemas().latest().cloned().collect()))
}

async fn create_schema(State(kb): State<Shared>, Body(req): Body<WizardRequest>) -> Result<impl IntoResponse, ApiError> {
    Ok(created(ops::create_schema(&mut *write(&kb)?, &req)?))
}

async fn blank_wizard_spec(State(kb): State<Shared>) -> ApiResult<WizardSpec> {
    Ok(Json(ops::wizard_spec(&*read(&kb)?, None)?))
}

async fn get_schema(State(kb): State<Shared>, Path(s): Path<String>) -> ApiResult<rosetta_kb::schema::ReferenceSchema> {
    Ok(Json(read(&kb)?.schema(&id(&s)?)?.clone()))
}

async fn get_shape(State(kb): State<Shared>, Path(s): Path<String>) -> ApiResult<rosetta_kb::schema::ShapeDoc> {
    Ok(Json(read(&kb)?.shape(&id(&s)?)?))
}

async fn get_owl(State(kb): State<Shared>, Path(s): Path<String>) -> ApiResult<rosetta_kb::schema::OwlSchemaDoc> {
    Ok(Json(read(&kb)?.owl_schema(&id(&s)?)?))
}

async fn get_wizard_spec(State(kb): State<Shared>, Path(s): Path<String>) -> ApiResult<WizardSpec> {
    Ok(Json(ops::wizard_spec(&*read(&kb)?, Some(&id(&s)?))?))
}

async fn evolve_schema(
    State(kb): State<Shared>,
    Path(s): Path<String>,
    Body(req): Body<EvolveRequest>,
) -> ApiResult<rosetta_kb::schema::ReferenceSchema> {
    Ok(Json(write(&kb)?.evolve_schema(&id(&s)?, req.additions)?))
}

// ---- terms ----

async fn list_terms(State(kb): State<Shared>) -> ApiResult<Vec<TermRecord>> {
    Ok(Json(read(&kb)?.terms().terms().cloned().collect()))
}

async fn add_term(State(kb): State<Shared>, Body(req): Body<TermInput>) -> Result<impl IntoResponse, ApiError> {
    Ok(created(Created { upri: write(&kb)?.register_term(req)? }))
}

#[derive(Serialize)]
struct Imported {
    terms: usize,
    mappings: usize,
}

async fn import_terms(State(kb): State<Shared>, Body(doc): Body<TermsDocument>) -> Result<impl IntoResponse, ApiError> {
    let (terms, mappings) = write(&kb)?.import_terms(&doc, None)?;
    Ok(created(Imported { terms, mappings }))
}

async fn add_mapping(State(kb): State<Shared>, Body(req): Body<MappingRequest>) -> Result<impl IntoResponse, ApiError> {
    let upri = write(&kb)?.add_mapping(&req.source, &req.target, req.kind, req.creator.as_deref())?;
    Ok(created(Created { upri }))
}

async fn get_term(State(kb): State<Shared>, Path(s): Path<String>) -> ApiResult<TermRecord> {
    Ok(Json(read(&kb)?.terms().term(&id(&s)?)?.clone()))
}

#[derive(Deserialize)]
struct ResolveParams {
    vocab: String,
    kind: Option<MappingKind>,
}

async fn resolve_term(State(kb): State<Shared>, Path(s): Path<String>, Params(p): Params<ResolveParams>) -> ApiResult<Resolved> {
    let term = id(&s)?;
    let kind = p.kind.unwrap_or(MappingKind::EquivalentClass);
    let resolved = read(&kb)?.resolve(&term, &p.vocab, kind)?;
    Ok(Json(Resolved { term, vocabulary: p.vocab, kind, resolved }))
}

// ---- statements ----

#[derive(Deserialize)]
struct ListParams {
    schema: Option<String>,
    #[serde(default)]
    include_deleted: bool,
}

async fn list_statements(State(kb): State<Shared>, Params(p): Params<ListParams>) -> ApiResult<Vec<StatementDocument>> {
    let schema = opt_id(p.schema.as_deref())?;
    Ok(Json(read(&kb)?.statements(schema.as_ref(), p.include_deleted).into_iter().map(|r| r.document()).collect()))
}

async fn create_statement(State(kb): State<Shared>, Body(req): Body<StatementRequest>) -> Result<impl IntoResponse, ApiError> {
    let mut kb = write(&kb)?;
    let id = kb.create_statement(req)?;
    Ok(created(kb.statement_document(&id, false)?))
}

#[derive(Deserialize)]
struct DeletedParam {
    #[serde(default)]
    include_deleted: bool,
}

async fn get_statement(
    State(kb): State<Shared>,
    Path(s): Path<String>,
    Params(p): Params<DeletedParam>,
) -> ApiResult<StatementDocument> {
    Ok(Json(read(&kb)?.statement_document(&id(&s)?, p.include_deleted)?))
}

#[derive(Deserialize)]
struct CreatorParam {
    creator: Option<String>,
}

async fn delete_statement(
    State(kb): State<Shared>,
    Path(s): Path<String>,
    Params(p): Params<CreatorParam>,
) -> ApiResult<StatementDocument> {
    let stmt = id(&s)?;
    let mut kb = write(&kb)?;
    kb.delete_statement(&stmt, p.creator.as_deref())?;
    Ok(Json(kb.statement_document(&stmt, true)?))
}

async fn edit_position(
    State(kb): State<Shared>,
    Path((s, label)): Path<(String, String)>,
    Body(req): Body<EditRequest>,
) -> ApiResult<ObjectPositionInstance> {
    Ok(Json(write(&kb)?.edit_position(&id(&s)?, &label, req.value, req.creator.as_deref())?))
}

#[derive(Deserialize)]
struct HistoryParams {
    label: Option<String>,
}

async fn get_history(
    State(kb): State<Shared>,
    Path(s): Path<String>,
    Params(p): Params<HistoryParams>,
) -> ApiResult<Vec<ObjectPositionInstance>> {
    Ok(Json(read(&kb)?.history(&id(&s)?, p.label.as_deref())?))
}

async fn get_reconstruct(
    State(kb): State<Shared>,
    Path(s): Path<String>,
    Params(p): Params<DeletedParam>,
) -> ApiResult<Reconstructed> {
    Ok(Json(read(&kb)?.reconstruct(&id(&s)?, p.include_deleted)?))
}

async fn create_version(
    State(kb): State<Shared>,
    Path(s): Path<String>,
    body: axum::body::Bytes,
) -> Result<impl IntoResponse, ApiError> {
    // The body is optional: an empty request creates an anonymous version.
    let creator = if body.iter().all(u8::is_ascii_whitespace) {
        None
    } else {
        serde_json::from_slice::<CreatorBody>(&body).map_err(|e| ApiError::bad_request(e.to_string()))?.creator
    };
    Ok(created(write(&kb)?.create_version(&id(&s)?, creator.as_deref())?))
}

async fn get_version(State(kb): State<Shared>, Path((s, v)): Path<(String, String)>) -> ApiResult<Snapshot> {
    Ok(Json(read(&kb)?.version_view(&id(&s)?, &id(&v)?)?))
}

async fn classify(
    State(kb): State<Shared>,
    Path(s): Path<String>,
    Body(req): Body<ClassifyRequest>,
) -> ApiResult<StatementDocument> {
    Ok(Json(ops::classify(&mut *write(&kb)?, &id(&s)?, &req)?))
}

#[derive(Deserialize)]
struct RenderParams {
    template: Option<String>,
}

async fn render(State(kb): State<Shared>, Path(s): Path<String>, Params(p): Params<RenderParams>) -> ApiResult<Rendered> {
    let template = opt_id(p.template.as_deref())?;
    Ok(Json(ops::render(&*read(&kb)?, &id(&s)?, template.as_ref())?))
}

#[derive(Deserialize)]
struct MindmapParams {
    pattern: Option<String>,
}

async fn mindmap(
    State(kb): State<Shared>,
    Path(s): Path<String>,
    Params(p): Params<MindmapParams>,
) -> ApiResult<rosetta_kb::display::MindMapDoc> {
    let pattern = opt_id(p.pattern.as_deref())?;
    Ok(Json(read(&kb)?.render_mindmap(&id(&s)?, pattern.as_ref())?))
}

// ---- crosswalks ----

async fn list_crosswalks(State(kb): State<Shared>) -> ApiResult<Vec<rosetta_kb::crosswalk::Crosswalk>> {
    Ok(Json(read(&kb)?.crosswalks().all().cloned().collect()))
}

#[derive(Deserialize)]
struct SchemaParam {
    schema: Option<String>,
}

async fn define_crosswalk(
    State(kb): State<Shared>,
    Params(p): Params<SchemaParam>,
    Body(spec): Body<CrosswalkSpec>,
) -> Result<impl IntoResponse, ApiError> {
    let schema = opt_id(p.schema.as_deref())?;
    Ok(created(ops::define_crosswalk(&mut *write(&kb)?, spec, schema.as_ref())?))
}

async fn get_crosswalk(State(kb): State<Shared>, Path(s): Path<String>) -> ApiResult<rosetta_kb::crosswalk::Crosswalk> {
    Ok(Json(read(&kb)?.crosswalk(&id(&s)?)?.clone()))
}

#[derive(Deserialize)]
struct CountParams {
    n: u64,
}

async fn counts(Params(p): Params<CountParams>) -> ApiResult<CrosswalkCounts> {
    Ok(Json(KnowledgeBase::crosswalk_counts(p.n)?))
}

async fn export(
    State(kb): State<Shared>,
    Path((c, s)): Path<(String, String)>,
) -> ApiResult<rosetta_kb::crosswalk::Exported> {
    Ok(Json(read(&kb)?.export_statement(&id(&c)?, &id(&s)?)?))
}

async fn import(
    State(kb): State<Shared>,
    Path(c): Path<String>,
    Body(req): Body<ImportRequest>,
) -> Result<impl IntoResponse, ApiError> {
    Ok(created(ops::import_document(&mut *write(&kb)?, &id(&c)?, &req)?))
}

// ---- queries ----

async fn evaluate(State(kb): State<Shared>, Body(doc): Body<QueryDocument>) -> ApiResult<Answer> {
    Ok(Json(read(&kb)?.evaluate(&doc)?))
}

#[derive(Serialize)]
struct Plan {
    plan: String,
}

async fn explain(State(kb): State<Shared>, Body(doc): Body<QueryDocument>) -> ApiResult<Plan> {
    Ok(Json(Plan { plan: read(&kb)?.explain(&doc)? }))
}

async fn store_question(
    State(kb): State<Shared>,
    Params(p): Params<CreatorParam>,
    Body(spec): Body<rosetta_kb::query::QuestionSpec>,
) -> Result<impl IntoResponse, ApiError> {
    Ok(created(Created { upri: write(&kb)?.store_question(&spec, p.creator.as_deref())? }))
}

async fn get_question(State(kb): State<Shared>, Path(s): Path<String>) -> ApiResult<rosetta_kb::query::QuestionStatement> {
    Ok(Json(read(&kb)?.question(&id(&s)?)?.clone()))
}

// ---- templates ----

#[derive(Serialize)]
struct TemplateEntry {
    upri: Upri,
    #[serde(flatten)]
    template: Template,
}

async fn list_templates(State(kb): State<Shared>) -> ApiResult<Vec<TemplateEntry>> {
    let kb = read(&kb)?;
    Ok(Json(kb.templates().all().map(|(u, t)| TemplateEntry { upri: u.clone(), template: t.clone() }).collect()))
}

async fn add_template(State(kb): State<Shared>, Body(t): Body<Template>) -> Result<impl IntoResponse, ApiError> {
    Ok(created(Created { upri: write(&kb)?.register_template(t)? }))
}

async fn get_template(State(kb): State<Shared>, Path(s): Path<String>) -> ApiResult<Template> {
    Ok(Json(read(&kb)?.templates().get(&id(&s)?)?.clone()))
}
