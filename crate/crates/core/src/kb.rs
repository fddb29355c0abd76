//! The knowledge base: all registries behind one write path.
//!
//! Every mutation is expressed as an [`Event`] carrying the identifiers and
//! timestamps it needs. An event is checked against the current state,
//! appended to the log, and only then applied, so replaying the log
//! rebuilds the exact same state.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::sync::atomic::{AtomicI64, Ordering};

use chrono::{DateTime, DurationRound, TimeDelta, Utc};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::crosswalk::{self, Crosswalk, CrosswalkCounts, CrosswalkRegistry, CrosswalkSpec, Exported, TargetDocument};
use crate::display::{default_label_id, default_pattern_id, DynamicLabel, MindMapDoc, MindMapPattern, Template, TemplateRegistry};
use crate::error::{Error, Result};
use crate::model::{ProvenanceStamp, Resource, ResourceKind, Snapshot, Upri, UpriMinter, Value};
use crate::persist::{self, EventLog};
use crate::query::{self, Answer, QueryDocument, QuestionSpec, QuestionStatement};
use crate::schema::{
    self, create_from_wizard, derive_owl_schema, ObjectPositionSpec, OwlSchemaDoc, Paradigm, ReferenceSchema,
    SchemaRegistry, ShapeDoc, WizardAnswers,
};
use crate::store::{
    Classification, LightRepresentation, NewStatement, ObjectPositionInstance, Reconstructed, StatementDocument,
    StatementInput, StatementMetadata, StatementRecord, Store, Tag, VersionNode,
};
use crate::terms::{MappingKind, TermKind, TermMapping, TermRecord, TermRegistry, TermsDocument};

pub const DEFAULT_NAMESPACE: &str = "urn:rosetta:";
const ANONYMOUS: &str = "anonymous";

#[derive(Debug, Clone, PartialEq)]
pub struct KbConfig {
    /// Where the event log and snapshot live; `None` keeps everything in
    /// memory.
    pub data_dir: Option<PathBuf>,
    pub namespace: String,
    pub reference_vocabulary: String,
    pub default_paradigm: Paradigm,
    /// Write a snapshot after this many events (0 disables snapshots).
    pub snapshot_every: u64,
    /// Seed for reproducible identifiers.
    pub seed: Option<u64>,
}

impl Default for KbConfig {
    fn default() -> Self {
        Self {
            data_dir: None,
            namespace: DEFAULT_NAMESPACE.into(),
            reference_vocabulary: crate::terms::DEFAULT_REFERENCE_VOCABULARY.into(),
            default_paradigm: Paradigm::Light,
            snapshot_every: 256,
            seed: None,
        }
    }
}

impl KbConfig {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn seeded(seed: u64) -> Self {
        Self { seed: Some(seed), ..Self::default() }
    }

    pub fn at(dir: impl Into<PathBuf>) -> Self {
        Self { data_dir: Some(dir.into()), ..Self::default() }
    }
}

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// Advances by a fixed step on every reading; for reproducible runs.
#[derive(Debug)]
pub struct StepClock {
    next_micros: AtomicI64,
    step_micros: i64,
}

impl StepClock {
    pub fn new(start: DateTime<Utc>, step: TimeDelta) -> Self {
        Self {
            next_micros: AtomicI64::new(start.timestamp_micros()),
            step_micros: step.num_microseconds().unwrap_or(1).max(0),
        }
    }
}

impl Clock for StepClock {
    fn now(&self) -> DateTime<Utc> {
        let t = self.next_micros.fetch_add(self.step_micros, Ordering::SeqCst);
        DateTime::from_timestamp_micros(t).unwrap_or_default()
    }
}

/// Everything the knowledge base knows. Serializes deterministically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KbState {
    pub terms: TermRegistry,
    pub schemas: SchemaRegistry,
    pub store: Store,
    pub crosswalks: CrosswalkRegistry,
    pub templates: TemplateRegistry,
    pub questions: IndexMap<Upri, QuestionStatement>,
}

impl KbState {
    pub fn new(reference_vocabulary: &str) -> Self {
        Self {
            terms: TermRegistry::new(reference_vocabulary),
            schemas: SchemaRegistry::default(),
            store: Store::default(),
            crosswalks: CrosswalkRegistry::default(),
            templates: TemplateRegistry::default(),
            questions: IndexMap::new(),
        }
    }

    fn knows(&self, u: &Upri) -> bool {
        self.terms.contains(u)
            || self.schemas.contains(u)
            || self.store.contains(u)
            || self.crosswalks.contains(u)
            || self.templates.contains(u)
            || self.questions.contains_key(u)
    }
}

/// One logged mutation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Event {
    RegisterTerm {
        record: TermRecord,
    },
    AddParent {
        term: Upri,
        parent: Upri,
    },
    AddMapping {
        mapping: TermMapping,
    },
    /// A schema version plus the terms, templates and crosswalks that come
    /// with it.
    PublishSchema {
        schema: ReferenceSchema,
        #[serde(default)]
        terms: Vec<TermRecord>,
        #[serde(default)]
        templates: Vec<(Upri, Template)>,
        #[serde(default)]
        crosswalks: Vec<Crosswalk>,
    },
    CreateStatement {
        statement: NewStatement,
    },
    EditPosition {
        statement: Upri,
        label: String,
        value: Value,
        provenance: ProvenanceStamp,
        instance: Upri,
    },
    DeleteStatement {
        statement: Upri,
        provenance: ProvenanceStamp,
    },
    CreateVersion {
        statement: Upri,
        version: Upri,
        created: ProvenanceStamp,
    },
    Classify {
        statement: Upri,
        tag: Tag,
    },
    Declassify {
        statement: Upri,
        tag: Tag,
    },
    DefineCrosswalk {
        crosswalk: Crosswalk,
    },
    RegisterTemplate {
        id: Upri,
        template: Template,
    },
    StoreQuestion {
        question: QuestionStatement,
        record: NewStatement,
    },
}

impl Event {
    fn timestamp(&self) -> Option<DateTime<Utc>> {
        match self {
            Event::AddMapping { mapping } => Some(mapping.provenance.created_at),
            Event::CreateStatement { statement } | Event::StoreQuestion { record: statement, .. } => {
                Some(statement.provenance.created_at)
            }
            Event::EditPosition { provenance, .. } | Event::DeleteStatement { provenance, .. } => {
                Some(provenance.created_at)
            }
            Event::CreateVersion { created, .. } => Some(created.created_at),
            _ => None,
        }
    }
}

/// Term registration input; the identifier is minted when absent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermInput {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upri: Option<Upri>,
    pub label: String,
    pub kind: TermKind,
    #[serde(default)]
    pub definition: String,
    #[serde(default)]
    pub parents: BTreeSet<Upri>,
    pub vocabulary: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatementRequest {
    pub schema: Upri,
    pub subject: Resource,
    #[serde(default)]
    pub bindings: BTreeMap<String, Value>,
    #[serde(default)]
    pub metadata: StatementMetadata,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paradigm: Option<Paradigm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub creator: Option<String>,
}

impl StatementRequest {
    pub fn new(input: StatementInput) -> Self {
        Self {
            schema: input.schema,
            subject: input.subject,
            bindings: input.bindings,
            metadata: StatementMetadata::default(),
            paradigm: None,
            creator: None,
        }
    }

    pub fn paradigm(mut self, p: Paradigm) -> Self {
        self.paradigm = Some(p);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WizardQuestion {
    pub number: usize,
    pub field: String,
    pub prompt: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub terms: usize,
    pub mappings: usize,
    pub schemas: usize,
    pub statements: usize,
    pub current_statements: usize,
    pub records: usize,
    pub crosswalks: usize,
    pub templates: usize,
    pub questions: usize,
    pub events: u64,
}

pub struct KnowledgeBase {
    state: KbState,
    config: KbConfig,
    minter: UpriMinter,
    clock: Box<dyn Clock>,
    last_time: DateTime<Utc>,
    log: Option<EventLog>,
    seq: u64,
    poisoned: bool,
}

impl std::fmt::Debug for KnowledgeBase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KnowledgeBase").field("config", &self.config).field("seq", &self.seq).finish()
    }
}

impl KnowledgeBase {
    pub fn open(config: KbConfig) -> Result<Self> {
        Self::open_with_clock(config, Box::new(SystemClock))
    }

    pub fn in_memory() -> Self {
        Self::open(KbConfig::in_memory()).expect("in-memory configuration is valid")
    }

    /// Opens the knowledge base, recovering state from the snapshot and the
    /// event log when a data directory is configured.
    pub fn open_with_clock(config: KbConfig, clock: Box<dyn Clock>) -> Result<Self> {
        let mut kb = KnowledgeBase {
            state: KbState::new(&config.reference_vocabulary),
            minter: UpriMinter::seeded(config.namespace.clone(), 0)?,
            clock,
            last_time: DateTime::<Utc>::MIN_UTC,
            log: None,
            seq: 0,
            poisoned: false,
            config,
        };
        if let Some(dir) = kb.config.data_dir.clone() {
            let snapshot = persist::read_snapshot::<KbState>(&dir)?;
            let fresh = snapshot.is_none();
            let (log, replayed) = EventLog::open::<Event>(&dir)?;
            let base = match snapshot {
                Some(s) => {
                    kb.state = s.state;
                    s.log_seq
                }
                None => 0,
            };
            let last = replayed.events.last().map_or(0, |(s, _)| *s);
            if base > last {
                return Err(Error::Replay {
                    line: 0,
                    reason: format!("snapshot covers event {base} but the log ends at {last}"),
                });
            }
            for ((seq, event), line) in replayed.events.iter().zip(&replayed.lines) {
                if let Some(t) = event.timestamp() {
                    kb.last_time = kb.last_time.max(t);
                }
                if *seq > base {
                    kb.apply(event, false).map_err(|e| Error::Replay { line: *line, reason: e.to_string() })?;
                }
            }
            kb.seq = last;
            kb.log = Some(log);
            if fresh {
                // Pins the reference vocabulary (and speeds up the next open).
                kb.snapshot()?;
            }
            let stored = kb.state.terms.reference_vocabulary();
            if stored != kb.config.reference_vocabulary {
                return Err(Error::InvalidConfig(format!(
                    "data directory uses reference vocabulary `{stored}`, not `{}`",
                    kb.config.reference_vocabulary
                )));
            }
        }
        kb.minter = match kb.config.seed {
            // Mix in the log position so a reopened store does not re-mint
            // identifiers it already handed out.
            Some(seed) => {
                UpriMinter::seeded(kb.config.namespace.clone(), seed ^ kb.seq.wrapping_mul(0x9E37_79B9_7F4A_7C15))?
            }
            None => UpriMinter::new(kb.config.namespace.clone())?,
        };
        Ok(kb)
    }

    pub fn state(&self) -> &KbState {
        &self.state
    }

    pub fn config(&self) -> &KbConfig {
        &self.config
    }

    pub fn terms(&self) -> &TermRegistry {
        &self.state.terms
    }

    pub fn schemas(&self) -> &SchemaRegistry {
        &self.state.schemas
    }

    pub fn store(&self) -> &Store {
        &self.state.store
    }

    pub fn crosswalks(&self) -> &CrosswalkRegistry {
        &self.state.crosswalks
    }

    pub fn templates(&self) -> &TemplateRegistry {
        &self.state.templates
    }

    /// Number of events applied so far.
    pub fn event_count(&self) -> u64 {
        self.seq
    }

    pub fn health(&self) -> Health {
        let s = &self.state;
        Health {
            status: "ok".into(),
            terms: s.terms.len(),
            mappings: s.terms.mappings().len(),
            schemas: s.schemas.len(),
            statements: s.store.len(),
            current_statements: s.store.current().count(),
            records: s.store.record_count(),
            crosswalks: s.crosswalks.len(),
            templates: s.templates.len(),
            questions: s.questions.len(),
            events: self.seq,
        }
    }

    /// Writes a snapshot now (no-op without a data directory).
    pub fn snapshot(&self) -> Result<()> {
        match &self.log {
            Some(log) => log.write_snapshot(self.seq, &self.state),
            None => Ok(()),
        }
    }

    fn now(&mut self) -> DateTime<Utc> {
        let t = self.clock.now().max(self.last_time);
        // Stored timestamps carry microseconds; truncating here keeps the
        // in-memory state equal to what a replay reads back.
        let t = t.duration_trunc(TimeDelta::microseconds(1)).unwrap_or(t);
        self.last_time = t;
        t
    }

    fn stamp(&mut self, creator: Option<&str>) -> ProvenanceStamp {
        let now = self.now();
        ProvenanceStamp::new(creator.unwrap_or(ANONYMOUS), now)
    }

    fn mint(&mut self, kind: &str) -> Result<Upri> {
        let u = self.minter.mint(kind);
        if self.state.knows(&u) {
            return Err(Error::UpriCollision(u));
        }
        Ok(u)
    }

    fn commit(&mut self, event: Event) -> Result<()> {
        if self.poisoned {
            return Err(Error::Internal("an earlier write failed after logging; reopen the store".into()));
        }
        self.apply(&event, true)?;
        if let Some(log) = &mut self.log {
            log.append(self.seq + 1, &event)?;
        }
        if let Err(e) = self.apply(&event, false) {
            self.poisoned = true;
            return Err(Error::Internal(format!("logged event failed to apply: {e}")));
        }
        self.seq += 1;
        if let Some(t) = event.timestamp() {
            self.last_time = self.last_time.max(t);
        }
        if self.config.snapshot_every > 0 && self.seq.is_multiple_of(self.config.snapshot_every) {
            if let Err(e) = self.snapshot() {
                log::warn!("snapshot failed: {e}");
            }
        }
        Ok(())
    }

    /// Checks an event against the current state and, unless `dry_run`,
    /// applies it. A failed check leaves the state untouched.
    fn apply(&mut self, event: &Event, dry_run: bool) -> Result<()> {
        let s = &mut self.state;
        match event {
            Event::RegisterTerm { record } => {
                s.terms.check_term(record.clone())?;
                if !dry_run {
                    s.terms.register(record.clone())?;
                }
            }
            Event::AddParent { term, parent } => {
                s.terms.check_parent(term, parent)?;
                if !dry_run {
                    s.terms.add_parent(term, parent)?;
                }
            }
            Event::AddMapping { mapping } => {
                s.terms.check_mapping(&mapping.source, &mapping.target)?;
                if !dry_run {
                    s.terms.add_mapping(mapping.clone())?;
                }
            }
            Event::PublishSchema { schema, terms, templates, crosswalks } => {
                s.schemas.check_publish(schema, &s.terms)?;
                let mut fresh = BTreeSet::new();
                for t in terms {
                    s.terms.check_term(t.clone())?;
                    if !fresh.insert(&t.upri) {
                        return Err(Error::DuplicateTerm(t.upri.clone()));
                    }
                }
                for (id, t) in templates {
                    if s.templates.contains(id) {
                        return Err(Error::UpriCollision(id.clone()));
                    }
                    t.check(schema)?;
                }
                for c in crosswalks {
                    if s.crosswalks.contains(&c.id) {
                        return Err(Error::UpriCollision(c.id.clone()));
                    }
                    c.check(schema)?;
                }
                if !dry_run {
                    for t in terms {
                        s.terms.register(t.clone())?;
                    }
                    s.schemas.publish_unchecked(schema.clone());
                    for (id, t) in templates {
                        s.templates.insert(id.clone(), t.clone());
                    }
                    for c in crosswalks {
                        s.crosswalks.insert(c.clone());
                    }
                }
            }
            Event::CreateStatement { statement } => {
                s.store.check_create(&s.schemas, &s.terms, statement)?;
                if !dry_run {
                    s.store.create(&s.schemas, &s.terms, statement.clone())?;
                }
            }
            Event::EditPosition { statement, label, value, provenance, instance } => {
                s.store.check_edit(&s.schemas, &s.terms, statement, label, value, provenance)?;
                if !dry_run {
                    s.store.edit(&s.schemas, &s.terms, statement, label, value.clone(), provenance.clone(), instance.clone())?;
                }
            }
            Event::DeleteStatement { statement, provenance } => {
                s.store.check_delete(statement)?;
                if !dry_run {
                    s.store.delete(statement, provenance.clone())?;
                }
            }
            Event::CreateVersion { statement, version, created } => {
                s.store.check_version(&s.schemas, statement)?;
                if !dry_run {
                    s.store.create_version(&s.schemas, statement, version.clone(), created.clone())?;
                }
            }
            Event::Classify { statement, tag } => {
                s.store.check_classify(statement, *tag)?;
                if !dry_run {
                    s.store.classify(statement, *tag)?;
                }
            }
            Event::Declassify { statement, tag } => {
                s.store.check_declassify(statement, *tag)?;
                if !dry_run {
                    s.store.declassify(statement, *tag)?;
                }
            }
            Event::DefineCrosswalk { crosswalk } => {
                s.crosswalks.check_define(crosswalk, &s.schemas)?;
                if !dry_run {
                    s.crosswalks.insert(crosswalk.clone());
                }
            }
            Event::RegisterTemplate { id, template } => {
                if s.templates.contains(id) {
                    return Err(Error::UpriCollision(id.clone()));
                }
                template.check(s.schemas.get(template.schema())?)?;
                if let Template::DynamicLabel(DynamicLabel { default: true, schema, .. }) = template {
                    if s.templates.default_label(schema).is_ok_and(|l| l.default) {
                        return Err(Error::MalformedTemplate("the schema already has a default label".into()));
                    }
                }
                if !dry_run {
                    s.templates.insert(id.clone(), template.clone());
                }
            }
            Event::StoreQuestion { question, record } => {
                let id = question.upri.as_ref().ok_or_else(|| Error::Internal("stored question without id".into()))?;
                if s.questions.contains_key(id) || id != &record.upri {
                    return Err(Error::UpriCollision(id.clone()));
                }
                s.store.check_create(&s.schemas, &s.terms, record)?;
                if !dry_run {
                    s.store.create(&s.schemas, &s.terms, record.clone())?;
                    s.questions.insert(id.clone(), question.clone());
                }
            }
        }
        Ok(())
    }

    // ---- terms ----

    pub fn register_term(&mut self, input: TermInput) -> Result<Upri> {
        let upri = match input.upri {
            Some(u) => u,
            None => self.mint("term")?,
        };
        let mut record = TermRecord::new(upri.clone(), &input.label, input.kind, &input.vocabulary)
            .with_definition(&input.definition);
        record.parents = input.parents;
        self.commit(Event::RegisterTerm { record })?;
        Ok(upri)
    }

    pub fn add_parent(&mut self, term: &Upri, parent: &Upri) -> Result<()> {
        self.commit(Event::AddParent { term: term.clone(), parent: parent.clone() })
    }

    pub fn add_mapping(&mut self, source: &Upri, target: &Upri, kind: MappingKind, creator: Option<&str>) -> Result<Upri> {
        let id = self.mint("mapping")?;
        let provenance = self.stamp(creator);
        let mapping = TermMapping { id: id.clone(), source: source.clone(), target: target.clone(), kind, provenance };
        self.commit(Event::AddMapping { mapping })?;
        Ok(id)
    }

    /// Registers every term, then every mapping, in document order.
    /// Returns how many of each were added.
    pub fn import_terms(&mut self, doc: &TermsDocument, creator: Option<&str>) -> Result<(usize, usize)> {
        for t in &doc.terms {
            self.commit(Event::RegisterTerm { record: t.clone() })?;
        }
        for m in &doc.mappings {
            self.add_mapping(&m.source, &m.target, m.kind, creator)?;
        }
        Ok((doc.terms.len(), doc.mappings.len()))
    }

    pub fn resolve(&self, term: &Upri, vocabulary: &str, minimum: MappingKind) -> Result<Upri> {
        self.state.terms.resolve(term, vocabulary, minimum)
    }

    // ---- schemas ----

    pub fn create_schema_from_wizard(&mut self, answers: &WizardAnswers, paradigm: Option<Paradigm>) -> Result<ReferenceSchema> {
        let paradigm = paradigm.unwrap_or(self.config.default_paradigm);
        let schema = {
            let minter = &mut self.minter;
            create_from_wizard(answers, paradigm, &self.state.terms, &mut |k| minter.mint(k))?
        };
        self.publish_new(schema.clone())?;
        Ok(schema)
    }

    /// Publishes a schema read from a file: a new statement class at
    /// version 1, or the next compatible version of an existing one.
    pub fn import_schema(&mut self, schema: ReferenceSchema) -> Result<()> {
        if self.state.schemas.contains(&schema.statement_class) {
            let terms = self.position_class_terms(&schema);
            self.commit(Event::PublishSchema { schema, terms, templates: Vec::new(), crosswalks: Vec::new() })
        } else {
            self.publish_new(schema)
        }
    }

    fn publish_new(&mut self, schema: ReferenceSchema) -> Result<()> {
        for id in std::iter::once(&schema.statement_class).chain(schema.positions.iter().filter_map(|p| p.position_class.as_ref())) {
            if self.state.schemas.contains(id) || self.state.store.contains(id) || self.state.crosswalks.contains(id) {
                return Err(Error::UpriCollision(id.clone()));
            }
        }
        let mut terms = Vec::new();
        if !self.state.terms.contains(&schema.statement_class) {
            terms.push(
                TermRecord::new(
                    schema.statement_class.clone(),
                    &schema::statement_class_label(&schema.predicate_label),
                    TermKind::ClassTerm,
                    "local",
                )
                .with_definition(&schema.description),
            );
        }
        terms.extend(self.position_class_terms(&schema));
        let label = DynamicLabel {
            schema: schema.statement_class.clone(),
            name: "default".into(),
            template: schema.dynamic_label.clone(),
            optional_segments: BTreeMap::new(),
            default: true,
        };
        let templates = vec![
            (default_label_id(&schema.statement_class)?, Template::DynamicLabel(label)),
            (default_pattern_id(&schema.statement_class)?, Template::MindMapPattern(MindMapPattern::default_for(&schema))),
        ];
        let crosswalks = match derive_owl_schema(&schema, &self.state.terms) {
            Ok(doc) => vec![doc.crosswalk],
            Err(Error::NoResourcePositions) => Vec::new(),
            Err(e) => return Err(e),
        };
        self.commit(Event::PublishSchema { schema, terms, templates, crosswalks })
    }

    fn position_class_terms(&self, schema: &ReferenceSchema) -> Vec<TermRecord> {
        schema
            .positions
            .iter()
            .filter_map(|p| p.position_class.as_ref().map(|c| (p, c)))
            .filter(|(_, c)| !self.state.terms.contains(c))
            .map(|(p, c)| {
                TermRecord::new(
                    c.clone(),
                    &format!("{} {} position", schema.predicate_label, p.label),
                    TermKind::ClassTerm,
                    "local",
                )
                .with_definition(&p.description)
            })
            .collect()
    }

    pub fn evolve_schema(&mut self, id: &Upri, additions: Vec<ObjectPositionSpec>) -> Result<ReferenceSchema> {
        let current = self.state.schemas.get(id)?.clone();
        let next = {
            let minter = &mut self.minter;
            current.evolve(additions, &self.state.terms, &mut |k| minter.mint(k))?
        };
        self.import_schema(next.clone())?;
        Ok(next)
    }

    pub fn schema(&self, id: &Upri) -> Result<&ReferenceSchema> {
        self.state.schemas.get(id)
    }

    pub fn shape(&self, id: &Upri) -> Result<ShapeDoc> {
        Ok(self.schema(id)?.shape())
    }

    pub fn owl_schema(&self, id: &Upri) -> Result<OwlSchemaDoc> {
        derive_owl_schema(self.schema(id)?, &self.state.terms)
    }

    pub fn wizard_spec() -> Vec<WizardQuestion> {
        schema::WIZARD_QUESTIONS
            .iter()
            .enumerate()
            .map(|(i, (field, prompt))| WizardQuestion { number: i + 1, field: (*field).into(), prompt: (*prompt).into() })
            .collect()
    }

    // ---- statements ----

    pub fn create_statement(&mut self, request: StatementRequest) -> Result<Upri> {
        self.create_statement_from(request, None)
    }

    fn create_statement_from(&mut self, request: StatementRequest, imported_from: Option<String>) -> Result<Upri> {
        let schema = self.state.schemas.get(&request.schema)?;
        let paradigm = request.paradigm.unwrap_or(schema.paradigm);
        let upri = self.mint("stmt")?;
        let instance_ids = match paradigm {
            Paradigm::Light => Vec::new(),
            Paradigm::Full => (0..request.bindings.len()).map(|_| self.mint("position")).collect::<Result<_>>()?,
        };
        let mut provenance = self.stamp(request.creator.as_deref());
        provenance.imported_from = imported_from;
        let statement = NewStatement {
            upri: upri.clone(),
            input: StatementInput { schema: request.schema, subject: request.subject, bindings: request.bindings },
            paradigm,
            provenance,
            metadata: request.metadata,
            classification: Classification::default(),
            instance_ids,
        };
        self.commit(Event::CreateStatement { statement })?;
        Ok(upri)
    }

    pub fn edit_position(&mut self, statement: &Upri, label: &str, value: Value, creator: Option<&str>) -> Result<ObjectPositionInstance> {
        let instance = self.mint("position")?;
        let provenance = self.stamp(creator);
        self.commit(Event::EditPosition {
            statement: statement.clone(),
            label: label.to_owned(),
            value,
            provenance,
            instance,
        })?;
        let r = self.state.store.get_any(statement)?;
        Ok(r.positions.last().cloned().expect("edit appended an instance"))
    }

    pub fn delete_statement(&mut self, statement: &Upri, creator: Option<&str>) -> Result<()> {
        let provenance = self.stamp(creator);
        self.commit(Event::DeleteStatement { statement: statement.clone(), provenance })
    }

    pub fn create_version(&mut self, statement: &Upri, creator: Option<&str>) -> Result<VersionNode> {
        let version = self.mint("version")?;
        let created = self.stamp(creator);
        self.commit(Event::CreateVersion { statement: statement.clone(), version, created })?;
        let r = self.state.store.get_any(statement)?;
        Ok(r.versions.last().cloned().expect("version appended"))
    }

    pub fn classify(&mut self, statement: &Upri, tag: Tag) -> Result<()> {
        self.commit(Event::Classify { statement: statement.clone(), tag })
    }

    pub fn declassify(&mut self, statement: &Upri, tag: Tag) -> Result<()> {
        self.commit(Event::Declassify { statement: statement.clone(), tag })
    }

    /// A current statement.
    pub fn statement(&self, id: &Upri) -> Result<&StatementRecord> {
        self.state.store.get(id)
    }

    pub fn statement_document(&self, id: &Upri, include_deleted: bool) -> Result<StatementDocument> {
        let r = if include_deleted { self.state.store.get_any(id)? } else { self.state.store.get(id)? };
        Ok(r.document())
    }

    pub fn statements(&self, schema: Option<&Upri>, include_deleted: bool) -> Vec<&StatementRecord> {
        self.state
            .store
            .all()
            .filter(|r| include_deleted || r.current)
            .filter(|r| schema.is_none_or(|s| &r.statement_class == s))
            .collect()
    }

    pub fn history(&self, statement: &Upri, label: Option<&str>) -> Result<Vec<ObjectPositionInstance>> {
        Ok(self.state.store.history(&self.state.schemas, statement, label)?.into_iter().cloned().collect())
    }

    pub fn current_view(&self, statement: &Upri) -> Result<Snapshot> {
        Ok(self.state.store.get_any(statement)?.snapshot())
    }

    pub fn version_view(&self, statement: &Upri, version: &Upri) -> Result<Snapshot> {
        self.state.store.version_view(statement, version)
    }

    pub fn reconstruct(&self, statement: &Upri, include_deleted: bool) -> Result<Reconstructed> {
        self.state.store.reconstruct(statement, include_deleted)
    }

    pub fn full_to_light(&self, statement: &Upri) -> Result<LightRepresentation> {
        self.state.store.full_to_light(statement)
    }

    pub fn light_to_full(&self, statement: &Upri) -> Result<()> {
        self.state.store.light_to_full(statement)
    }

    // ---- crosswalks ----

    pub fn define_crosswalk(&mut self, spec: CrosswalkSpec, schema: Option<&Upri>) -> Result<Upri> {
        let source = spec
            .source_schema
            .clone()
            .or_else(|| schema.cloned())
            .ok_or_else(|| Error::InvalidScaffold("no source schema given".into()))?;
        let id = match &spec.id {
            Some(id) => id.clone(),
            None => self.mint("crosswalk")?,
        };
        let crosswalk = Crosswalk::from_spec(spec, id.clone(), source);
        self.commit(Event::DefineCrosswalk { crosswalk })?;
        Ok(id)
    }

    pub fn crosswalk(&self, id: &Upri) -> Result<&Crosswalk> {
        self.state.crosswalks.get(id)
    }

    pub fn export_statement(&self, crosswalk: &Upri, statement: &Upri) -> Result<Exported> {
        let c = self.state.crosswalks.get(crosswalk)?;
        let r = self.state.store.get(statement)?;
        if r.statement_class != c.source_schema {
            return Err(Error::SchemaMismatch { expected: c.source_schema.clone(), actual: r.statement_class.clone() });
        }
        let schema = self.state.schemas.get(&r.statement_class)?;
        crosswalk::export(c, schema, &r.snapshot(), &self.state.terms)
    }

    /// Reads a document through a crosswalk into reference-schema input
    /// without storing anything.
    pub fn decode_document(&self, crosswalk: &Upri, document: &TargetDocument) -> Result<StatementInput> {
        let c = self.state.crosswalks.get(crosswalk)?;
        let schema = self.state.schemas.get(&c.source_schema)?;
        crosswalk::decode(c, schema, document, &self.state.terms)
    }

    pub fn import_statement(&mut self, crosswalk: &Upri, document: &TargetDocument, creator: Option<&str>) -> Result<Upri> {
        let input = self.decode_document(crosswalk, document)?;
        let source = self.state.crosswalks.get(crosswalk)?.target.name.clone();
        let mut request = StatementRequest::new(input);
        request.creator = creator.map(str::to_owned);
        self.create_statement_from(request, Some(source))
    }

    /// Converts between two targets through the reference schema.
    pub fn transit_convert(&self, document: &TargetDocument, from: &Upri, to: &Upri) -> Result<Exported> {
        let c_in = self.state.crosswalks.get(from)?;
        let c_out = self.state.crosswalks.get(to)?;
        if c_in.source_schema != c_out.source_schema {
            return Err(Error::SchemaMismatch { expected: c_in.source_schema.clone(), actual: c_out.source_schema.clone() });
        }
        let schema = self.state.schemas.get(&c_in.source_schema)?;
        let input = crosswalk::decode(c_in, schema, document, &self.state.terms)?;
        schema
            .validate(&Value::Resource(input.subject.clone()), &input.bindings, &self.state.terms)
            .into_result()?;
        let snapshot = Snapshot { subject: input.subject, positions: input.bindings };
        crosswalk::export(c_out, schema, &snapshot, &self.state.terms)
    }

    pub fn crosswalk_counts(n: u64) -> Result<CrosswalkCounts> {
        crosswalk::crosswalk_counts(n)
    }

    // ---- display ----

    pub fn register_template(&mut self, template: Template) -> Result<Upri> {
        let id = self.mint("template")?;
        self.commit(Event::RegisterTemplate { id: id.clone(), template })?;
        Ok(id)
    }

    pub fn render_label(&self, statement: &Upri, template: Option<&Upri>) -> Result<String> {
        let r = self.state.store.get(statement)?;
        let schema = self.state.schemas.get(&r.statement_class)?;
        let label = match template {
            Some(id) => match self.state.templates.get(id)? {
                Template::DynamicLabel(l) if l.schema == r.statement_class => l,
                _ => return Err(Error::TemplateSchemaMismatch),
            },
            None => self.state.templates.default_label(&r.statement_class)?,
        };
        label.render(&r.snapshot(), schema, &self.state.terms)
    }

    pub fn render_mindmap(&self, statement: &Upri, pattern: Option<&Upri>) -> Result<MindMapDoc> {
        let r = self.state.store.get(statement)?;
        let schema = self.state.schemas.get(&r.statement_class)?;
        let fallback;
        let p = match pattern {
            Some(id) => match self.state.templates.get(id)? {
                Template::MindMapPattern(p) if p.schema == r.statement_class => p,
                _ => return Err(Error::PatternSchemaMismatch),
            },
            None => match self.state.templates.default_pattern(&r.statement_class) {
                Some(p) => p,
                None => {
                    fallback = MindMapPattern::default_for(schema);
                    &fallback
                }
            },
        };
        Ok(p.render(statement, &r.snapshot(), schema, &self.state.terms))
    }

    // ---- queries ----

    pub fn build_question(&self, spec: &QuestionSpec) -> Result<QuestionStatement> {
        query::build_question(spec, &self.state.schemas, &self.state.terms)
    }

    pub fn evaluate(&self, doc: &QueryDocument) -> Result<Answer> {
        match doc {
            QueryDocument::Single(spec) => Ok(query::evaluate(&self.build_question(spec)?, &self.state.store, &self.state.terms)),
            QueryDocument::Composite { composite } => Ok(Answer::Tuples(query::evaluate_composite(
                composite,
                &self.state.schemas,
                &self.state.store,
                &self.state.terms,
            )?)),
        }
    }

    pub fn explain(&self, doc: &QueryDocument) -> Result<String> {
        match doc {
            QueryDocument::Single(spec) => Ok(query::explain_plan(&self.build_question(spec)?)),
            QueryDocument::Composite { composite } => {
                query::explain_composite(composite, &self.state.schemas, &self.state.terms)
            }
        }
    }

    /// Persists a question as a statement tagged `question`; placeholders
    /// become some-/every-instance resources.
    pub fn store_question(&mut self, spec: &QuestionSpec, creator: Option<&str>) -> Result<Upri> {
        let mut question = self.build_question(spec)?;
        let id = self.mint("question")?;
        let schema = self.state.schemas.get(&question.schema)?;
        let subject_class = schema.subject.class.clone();
        let (subject, bindings) = {
            let minter = &mut self.minter;
            let terms = &self.state.terms;
            let mut fresh = || minter.mint("placeholder");
            let subject = match query::placeholder_value(&question.subject, &mut fresh, terms) {
                Some(Value::Resource(r)) => r,
                _ => Resource::new(fresh(), ResourceKind::SomeInstance { of: subject_class }),
            };
            let bindings: BTreeMap<String, Value> = question
                .positions
                .iter()
                .filter_map(|(l, b)| query::placeholder_value(b, &mut fresh, terms).map(|v| (l.clone(), v)))
                .collect();
            (subject, bindings)
        };
        question.upri = Some(id.clone());
        question.stored = true;
        let record = NewStatement {
            upri: id.clone(),
            input: StatementInput { schema: question.schema.clone(), subject, bindings },
            paradigm: Paradigm::Light,
            provenance: self.stamp(creator),
            metadata: StatementMetadata::default(),
            classification: Classification { question: true, negation: question.negated, ..Classification::default() },
            instance_ids: Vec::new(),
        };
        self.commit(Event::StoreQuestion { question, record })?;
        Ok(id)
    }

    pub fn question(&self, id: &Upri) -> Result<&QuestionStatement> {
        self.state.questions.get(id).ok_or_else(|| Error::UnknownQuestion(id.clone()))
    }
}
