//! Statement storage in the light and full paradigms.
//!
//! Nothing is ever removed: deletion clears the statement's `current` flag,
//! edits append a new object-position instance and retire the old one, and
//! versions are immutable nodes chained by `previous` links.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use chrono::{DateTime, Utc};
use indexmap::{IndexMap, IndexSet};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{canonical_serialize, content_hash, rfc3339, ProvenanceStamp, Resource, Snapshot, Upri, Value};
use crate::schema::{Paradigm, ReferenceSchema, SchemaRegistry, ValidationReport};
use crate::terms::TermRegistry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TruthTag {
    #[default]
    Assertional,
    Contingent,
    Prototypical,
    Universal,
}

impl fmt::Display for TruthTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TruthTag::Assertional => "assertional",
            TruthTag::Contingent => "contingent",
            TruthTag::Prototypical => "prototypical",
            TruthTag::Universal => "universal",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CardinalityOp {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
}

impl fmt::Display for CardinalityOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CardinalityOp::Eq => "=",
            CardinalityOp::Lt => "<",
            CardinalityOp::Le => "<=",
            CardinalityOp::Gt => ">",
            CardinalityOp::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cardinality {
    pub op: CardinalityOp,
    pub n: u32,
}

/// One classification tag, as accepted by classify/declassify.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "lowercase")]
pub enum Tag {
    Assertional,
    Contingent,
    Prototypical,
    Universal,
    Negation,
    Question,
    Cardinality { op: CardinalityOp, n: u32 },
}

impl Tag {
    fn truth(self) -> Option<TruthTag> {
        match self {
            Tag::Assertional => Some(TruthTag::Assertional),
            Tag::Contingent => Some(TruthTag::Contingent),
            Tag::Prototypical => Some(TruthTag::Prototypical),
            Tag::Universal => Some(TruthTag::Universal),
            _ => None,
        }
    }

    fn from_truth(t: TruthTag) -> Self {
        match t {
            TruthTag::Assertional => Tag::Assertional,
            TruthTag::Contingent => Tag::Contingent,
            TruthTag::Prototypical => Tag::Prototypical,
            TruthTag::Universal => Tag::Universal,
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::Negation => f.write_str("negation"),
            Tag::Question => f.write_str("question"),
            Tag::Cardinality { op, n } => write!(f, "cardinality({op}{n})"),
            other => write!(f, "{}", other.truth().unwrap_or_default()),
        }
    }
}

/// Exactly one truth-function tag plus the independent markers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Classification {
    pub truth: TruthTag,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub negation: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub question: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cardinality: Option<Cardinality>,
}

impl Classification {
    pub fn tags(&self) -> Vec<Tag> {
        let mut tags = vec![Tag::from_truth(self.truth)];
        if self.negation {
            tags.push(Tag::Negation);
        }
        if self.question {
            tags.push(Tag::Question);
        }
        if let Some(Cardinality { op, n }) = self.cardinality {
            tags.push(Tag::Cardinality { op, n });
        }
        tags
    }

    pub fn has(&self, tag: Tag) -> bool {
        self.tags().contains(&tag)
    }

    /// The assertional default may be overridden; any other truth tag must
    /// be removed before a different one is set.
    pub fn check_add(&self, tag: Tag) -> Result<()> {
        let conflict = |existing: String| Err(Error::ConflictingTruthTag { existing, requested: tag.to_string() });
        match tag {
            t if t.truth().is_some() => {
                let t = t.truth().unwrap_or_default();
                if self.truth != TruthTag::Assertional && self.truth != t {
                    return conflict(self.truth.to_string());
                }
            }
            Tag::Cardinality { op, n } => {
                if let Some(c) = self.cardinality.filter(|c| *c != Cardinality { op, n }) {
                    return conflict(Tag::Cardinality { op: c.op, n: c.n }.to_string());
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn add(&mut self, tag: Tag) -> Result<()> {
        self.check_add(tag)?;
        match tag {
            Tag::Negation => self.negation = true,
            Tag::Question => self.question = true,
            Tag::Cardinality { op, n } => self.cardinality = Some(Cardinality { op, n }),
            t => self.truth = t.truth().unwrap_or_default(),
        }
        Ok(())
    }

    pub fn check_remove(&self, tag: Tag) -> Result<()> {
        if tag == Tag::Assertional || self.has(tag) {
            Ok(())
        } else {
            Err(Error::TagNotPresent(tag.to_string()))
        }
    }

    /// Removing a truth tag falls back to the assertional default.
    pub fn remove(&mut self, tag: Tag) -> Result<()> {
        self.check_remove(tag)?;
        match tag {
            Tag::Negation => self.negation = false,
            Tag::Question => self.question = false,
            Tag::Cardinality { .. } => self.cardinality = None,
            _ => self.truth = TruthTag::Assertional,
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidityInterval {
    #[serde(with = "rfc3339")]
    pub from: DateTime<Utc>,
    #[serde(with = "rfc3339")]
    pub until: DateTime<Utc>,
}

/// Optional statement-level metadata. Access restrictions are recorded, not
/// enforced.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StatementMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub license: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validity: Option<ValidityInterval>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub evidence: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub access: Option<String>,
}

impl StatementMetadata {
    pub fn check(&self) -> Result<()> {
        if let Some(c) = self.confidence {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::InvalidMetadata(format!("confidence {c} is outside [0, 1]")));
            }
        }
        if let Some(v) = &self.validity {
            if v.from > v.until {
                return Err(Error::InvalidMetadata("validity interval ends before it starts".into()));
            }
        }
        Ok(())
    }
}

/// A direct statement-to-value link (light paradigm).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LightLink {
    pub label: String,
    pub value: Value,
}

/// One input event at one object position (full paradigm). Value and
/// provenance never change; only `current` and `version_ids` do.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectPositionInstance {
    pub upri: Upri,
    pub statement: Upri,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position_class: Option<Upri>,
    pub value: Value,
    pub current: bool,
    pub provenance: ProvenanceStamp,
    #[serde(default)]
    pub version_ids: BTreeSet<Upri>,
    pub seq: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VersionNode {
    pub upri: Upri,
    pub statement: Upri,
    pub created: ProvenanceStamp,
    pub content_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub previous: Option<Upri>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatementRecord {
    pub upri: Upri,
    pub statement_class: Upri,
    pub schema_version: u32,
    pub paradigm: Paradigm,
    pub subject: Resource,
    pub current: bool,
    pub classification: Classification,
    pub provenance: ProvenanceStamp,
    #[serde(default)]
    pub metadata: StatementMetadata,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub links: Vec<LightLink>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub positions: Vec<ObjectPositionInstance>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub versions: Vec<VersionNode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub current_version: Option<Upri>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deleted: Option<ProvenanceStamp>,
    pub seq: u64,
}

impl StatementRecord {
    /// Current value per label, in first-bound order.
    pub fn current_values(&self) -> Vec<(&str, &Value)> {
        match self.paradigm {
            Paradigm::Light => self.links.iter().map(|l| (l.label.as_str(), &l.value)).collect(),
            Paradigm::Full => {
                let mut order: IndexMap<&str, Option<&Value>> = IndexMap::new();
                for p in &self.positions {
                    let slot = order.entry(p.label.as_str()).or_insert(None);
                    if p.current {
                        *slot = Some(&p.value);
                    }
                }
                order.into_iter().filter_map(|(l, v)| v.map(|v| (l, v))).collect()
            }
        }
    }

    pub fn current_value(&self, label: &str) -> Option<&Value> {
        match self.paradigm {
            Paradigm::Light => self.links.iter().find(|l| l.label == label).map(|l| &l.value),
            Paradigm::Full => self.positions.iter().find(|p| p.current && p.label == label).map(|p| &p.value),
        }
    }

    pub fn bindings(&self) -> BTreeMap<String, Value> {
        self.current_values().into_iter().map(|(l, v)| (l.to_owned(), v.clone())).collect()
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot { subject: self.subject.clone(), positions: self.bindings() }
    }

    /// Stored records attributable to this statement: the statement itself,
    /// its subject link, its position links or instances, and its versions.
    pub fn record_count(&self) -> usize {
        2 + self.links.len() + self.positions.len() + self.versions.len()
    }

    pub fn is_question(&self) -> bool {
        self.classification.question
    }

    pub fn light_view(&self) -> LightRepresentation {
        LightRepresentation {
            statement_class: self.statement_class.clone(),
            schema_version: self.schema_version,
            subject: self.subject.clone(),
            links: self
                .current_values()
                .into_iter()
                .map(|(label, value)| LightLink { label: label.to_owned(), value: value.clone() })
                .collect(),
        }
    }

    pub fn document(&self) -> StatementDocument {
        let positions = match self.paradigm {
            Paradigm::Light => self
                .links
                .iter()
                .map(|l| PositionEntry {
                    label: l.label.clone(),
                    value: l.value.clone(),
                    current: true,
                    provenance: self.provenance.clone(),
                    version_ids: BTreeSet::new(),
                })
                .collect(),
            Paradigm::Full => self
                .positions
                .iter()
                .map(|p| PositionEntry {
                    label: p.label.clone(),
                    value: p.value.clone(),
                    current: p.current,
                    provenance: p.provenance.clone(),
                    version_ids: p.version_ids.clone(),
                })
                .collect(),
        };
        StatementDocument {
            upri: self.upri.clone(),
            statement_class: self.statement_class.clone(),
            schema_version: self.schema_version,
            paradigm: self.paradigm,
            subject: self.subject.clone(),
            current: self.current,
            positions,
            classification: self.classification.tags(),
            metadata: self.metadata.clone(),
            provenance: self.provenance.clone(),
            versions: self
                .versions
                .iter()
                .map(|v| VersionEntry { upri: v.upri.clone(), hash: v.content_hash.clone(), previous: v.previous.clone() })
                .collect(),
            current_version: self.current_version.clone(),
            deleted: self.deleted.clone(),
        }
    }
}

/// Statement exchange document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatementDocument {
    pub upri: Upri,
    pub statement_class: Upri,
    pub schema_version: u32,
    pub paradigm: Paradigm,
    pub subject: Resource,
    pub current: bool,
    pub positions: Vec<PositionEntry>,
    pub classification: Vec<Tag>,
    pub metadata: StatementMetadata,
    pub provenance: ProvenanceStamp,
    pub versions: Vec<VersionEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub current_version: Option<Upri>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deleted: Option<ProvenanceStamp>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositionEntry {
    pub label: String,
    pub value: Value,
    pub current: bool,
    pub provenance: ProvenanceStamp,
    pub version_ids: BTreeSet<Upri>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VersionEntry {
    pub upri: Upri,
    pub hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub previous: Option<Upri>,
}

/// The light structure of a statement, without its identifier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LightRepresentation {
    pub statement_class: Upri,
    pub schema_version: u32,
    pub subject: Resource,
    pub links: Vec<LightLink>,
}

impl LightRepresentation {
    /// Subject link plus one link per bound position.
    pub fn link_count(&self) -> usize {
        1 + self.links.len()
    }
}

/// What a user would have to enter to recreate a statement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatementInput {
    pub schema: Upri,
    pub subject: Resource,
    #[serde(default)]
    pub bindings: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reconstructed {
    pub input: StatementInput,
    pub metadata: StatementMetadata,
}

/// Everything needed to store a validated statement; identifiers and
/// timestamps are decided by the caller so that replays are exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewStatement {
    pub upri: Upri,
    pub input: StatementInput,
    pub paradigm: Paradigm,
    pub provenance: ProvenanceStamp,
    #[serde(default)]
    pub metadata: StatementMetadata,
    #[serde(default)]
    pub classification: Classification,
    /// One per bound position, in schema order (full paradigm only).
    #[serde(default)]
    pub instance_ids: Vec<Upri>,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Index {
    by_class: HashMap<Upri, IndexSet<Upri>>,
    by_subject: HashMap<(Upri, Upri), IndexSet<Upri>>,
    by_value: HashMap<(Upri, String, Upri), IndexSet<Upri>>,
}

impl Index {
    fn add_statement(&mut self, r: &StatementRecord) {
        self.by_class.entry(r.statement_class.clone()).or_default().insert(r.upri.clone());
        self.by_subject
            .entry((r.statement_class.clone(), r.subject.upri.clone()))
            .or_default()
            .insert(r.upri.clone());
        for (label, value) in r.current_values() {
            self.add_value(r, label, value);
        }
    }

    fn add_value(&mut self, r: &StatementRecord, label: &str, value: &Value) {
        if let Value::Resource(res) = value {
            self.by_value
                .entry((r.statement_class.clone(), label.to_owned(), res.upri.clone()))
                .or_default()
                .insert(r.upri.clone());
        }
    }
}

/// All statements, in creation order. Indexes are candidate generators only:
/// entries may be stale after edits, so callers re-check every candidate.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "StoreData")]
pub struct Store {
    statements: IndexMap<Upri, StatementRecord>,
    next_seq: u64,
    #[serde(skip)]
    index: Index,
}

#[derive(Deserialize)]
struct StoreData {
    statements: IndexMap<Upri, StatementRecord>,
    next_seq: u64,
}

impl From<StoreData> for Store {
    fn from(d: StoreData) -> Self {
        let mut index = Index::default();
        for r in d.statements.values() {
            index.add_statement(r);
        }
        Store { statements: d.statements, next_seq: d.next_seq, index }
    }
}

impl Store {
    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    pub fn contains(&self, upri: &Upri) -> bool {
        self.statements.contains_key(upri)
    }

    /// A current statement; deleted ones read as not found.
    pub fn get(&self, upri: &Upri) -> Result<&StatementRecord> {
        self.get_any(upri)
            .ok()
            .filter(|r| r.current)
            .ok_or_else(|| Error::UnknownStatement(upri.clone()))
    }

    /// Any statement, deleted or not.
    pub fn get_any(&self, upri: &Upri) -> Result<&StatementRecord> {
        self.statements.get(upri).ok_or_else(|| Error::UnknownStatement(upri.clone()))
    }

    fn get_live(&self, upri: &Upri) -> Result<&StatementRecord> {
        let r = self.get_any(upri)?;
        if !r.current {
            return Err(Error::StatementDeleted(upri.clone()));
        }
        Ok(r)
    }

    pub fn all(&self) -> impl Iterator<Item = &StatementRecord> {
        self.statements.values()
    }

    pub fn current(&self) -> impl Iterator<Item = &StatementRecord> {
        self.statements.values().filter(|r| r.current)
    }

    /// Total stored records, including deleted and superseded ones.
    pub fn record_count(&self) -> usize {
        self.statements.values().map(StatementRecord::record_count).sum()
    }

    pub fn candidates_by_class(&self, class: &Upri) -> Vec<&StatementRecord> {
        self.lookup(self.index.by_class.get(class))
    }

    pub fn candidates_by_subject(&self, class: &Upri, subject: &Upri) -> Vec<&StatementRecord> {
        self.lookup(self.index.by_subject.get(&(class.clone(), subject.clone())))
    }

    pub fn candidates_by_value(&self, class: &Upri, label: &str, value: &Upri) -> Vec<&StatementRecord> {
        self.lookup(self.index.by_value.get(&(class.clone(), label.to_owned(), value.clone())))
    }

    fn lookup(&self, ids: Option<&IndexSet<Upri>>) -> Vec<&StatementRecord> {
        ids.into_iter().flatten().filter_map(|id| self.statements.get(id)).collect()
    }

    pub fn check_create(&self, schemas: &SchemaRegistry, terms: &TermRegistry, new: &NewStatement) -> Result<()> {
        if self.statements.contains_key(&new.upri) {
            return Err(Error::UpriCollision(new.upri.clone()));
        }
        let schema = schemas.get(&new.input.schema)?;
        if new.classification.question {
            // Questions hold placeholders rather than real values; only the
            // position labels are checked.
            if let Some(l) = new.input.bindings.keys().find(|l| schema.position(l).is_none()) {
                return Err(Error::UnknownPosition(l.clone()));
            }
        } else {
            schema
                .validate(&Value::Resource(new.input.subject.clone()), &new.input.bindings, terms)
                .into_result()?;
        }
        new.metadata.check()?;
        let expected = match new.paradigm {
            Paradigm::Light => 0,
            Paradigm::Full => new.input.bindings.len(),
        };
        if new.instance_ids.len() != expected {
            return Err(Error::Internal(format!(
                "expected {expected} position-instance identifiers, got {}",
                new.instance_ids.len()
            )));
        }
        Ok(())
    }

    pub fn create(&mut self, schemas: &SchemaRegistry, terms: &TermRegistry, new: NewStatement) -> Result<&StatementRecord> {
        self.check_create(schemas, terms, &new)?;
        let schema = schemas.get(&new.input.schema)?;
        let bound: Vec<_> = schema
            .positions
            .iter()
            .filter_map(|p| new.input.bindings.get(&p.label).map(|v| (p, v)))
            .collect();
        let mut record = StatementRecord {
            upri: new.upri.clone(),
            statement_class: schema.statement_class.clone(),
            schema_version: schema.version,
            paradigm: new.paradigm,
            subject: new.input.subject,
            current: true,
            classification: new.classification,
            provenance: new.provenance.clone(),
            metadata: new.metadata,
            links: Vec::new(),
            positions: Vec::new(),
            versions: Vec::new(),
            current_version: None,
            deleted: None,
            seq: self.bump(),
        };
        match new.paradigm {
            Paradigm::Light => {
                record.links =
                    bound.iter().map(|(p, v)| LightLink { label: p.label.clone(), value: (*v).clone() }).collect();
            }
            Paradigm::Full => {
                for ((p, v), id) in bound.iter().zip(new.instance_ids) {
                    let seq = self.bump();
                    record.positions.push(ObjectPositionInstance {
                        upri: id,
                        statement: new.upri.clone(),
                        label: p.label.clone(),
                        position_class: p.position_class.clone(),
                        value: (*v).clone(),
                        current: true,
                        provenance: new.provenance.clone(),
                        version_ids: BTreeSet::new(),
                        seq,
                    });
                }
            }
        }
        self.index.add_statement(&record);
        self.statements.insert(new.upri.clone(), record);
        Ok(&self.statements[&new.upri])
    }

    fn bump(&mut self) -> u64 {
        let s = self.next_seq;
        self.next_seq += 1;
        s
    }

    pub fn check_edit(
        &self,
        schemas: &SchemaRegistry,
        terms: &TermRegistry,
        statement: &Upri,
        label: &str,
        value: &Value,
        provenance: &ProvenanceStamp,
    ) -> Result<()> {
        let r = self.get_live(statement)?;
        if r.paradigm == Paradigm::Light {
            return Err(Error::LightModeImmutable);
        }
        let schema = schemas.get(&r.statement_class)?;
        let spec = schema.position(label).ok_or_else(|| Error::UnknownPosition(label.to_owned()))?;
        if let Some((reason, detail)) = spec.constraint.check(value, terms) {
            let mut report = ValidationReport::default();
            report.push(label, reason, detail);
            return Err(Error::ConstraintViolation(report));
        }
        let latest = r.positions.iter().filter(|p| p.label == label).map(|p| p.provenance.created_at).max();
        if latest.is_some_and(|t| t > provenance.created_at) {
            return Err(Error::NonMonotonicTimestamp(label.to_owned()));
        }
        Ok(())
    }

    /// Retires the current instance at `label` (if any) and appends a new
    /// current one.
    #[allow(clippy::too_many_arguments)]
    pub fn edit(
        &mut self,
        schemas: &SchemaRegistry,
        terms: &TermRegistry,
        statement: &Upri,
        label: &str,
        value: Value,
        provenance: ProvenanceStamp,
        instance: Upri,
    ) -> Result<&ObjectPositionInstance> {
        self.check_edit(schemas, terms, statement, label, &value, &provenance)?;
        let schema = schemas.get(&self.statements[statement].statement_class)?;
        let position_class = schema.position(label).and_then(|p| p.position_class.clone());
        let introduced_in = schemas
            .history(&schema.statement_class)?
            .iter()
            .find(|s| s.position(label).is_some())
            .map(|s| s.version)
            .unwrap_or(schema.version);
        let seq = self.bump();
        let r = self.statements.get_mut(statement).expect("checked above");
        for p in r.positions.iter_mut().filter(|p| p.label == label) {
            p.current = false;
        }
        r.schema_version = r.schema_version.max(introduced_in);
        r.positions.push(ObjectPositionInstance {
            upri: instance,
            statement: statement.clone(),
            label: label.to_owned(),
            position_class,
            value,
            current: true,
            provenance,
            version_ids: BTreeSet::new(),
            seq,
        });
        let r = &self.statements[statement];
        let added = r.positions.last().expect("just pushed");
        self.index.add_value(r, label, &added.value);
        Ok(self.statements[statement].positions.last().expect("just pushed"))
    }

    pub fn check_delete(&self, statement: &Upri) -> Result<()> {
        let r = self.get_any(statement)?;
        if !r.current {
            return Err(Error::AlreadyDeleted(statement.clone()));
        }
        Ok(())
    }

    pub fn delete(&mut self, statement: &Upri, provenance: ProvenanceStamp) -> Result<()> {
        self.check_delete(statement)?;
        let r = self.statements.get_mut(statement).expect("checked above");
        r.current = false;
        r.deleted = Some(provenance);
        Ok(())
    }

    /// Position instances sorted by creation time, ties by insertion order.
    pub fn history(&self, schemas: &SchemaRegistry, statement: &Upri, label: Option<&str>) -> Result<Vec<&ObjectPositionInstance>> {
        let r = self.get_any(statement)?;
        if r.paradigm == Paradigm::Light {
            return Err(Error::RequiresFullParadigm("history"));
        }
        if let Some(l) = label {
            if schemas.get(&r.statement_class)?.position(l).is_none() {
                return Err(Error::UnknownPosition(l.to_owned()));
            }
        }
        let mut items: Vec<_> = r.positions.iter().filter(|p| label.is_none_or(|l| p.label == l)).collect();
        items.sort_by_key(|p| (p.provenance.created_at, p.seq));
        Ok(items)
    }

    /// Content hash of the statement's current snapshot.
    pub fn current_hash(&self, schemas: &SchemaRegistry, statement: &Upri) -> Result<String> {
        let r = self.get_any(statement)?;
        let schema = schemas.get_version(&r.statement_class, r.schema_version)?;
        hash_snapshot(&r.snapshot(), schema)
    }

    pub fn check_version(&self, schemas: &SchemaRegistry, statement: &Upri) -> Result<String> {
        let r = self.get_live(statement)?;
        if r.paradigm == Paradigm::Light {
            return Err(Error::RequiresFullParadigm("versioning"));
        }
        let schema = schemas.get_version(&r.statement_class, r.schema_version)?;
        hash_snapshot(&r.snapshot(), schema).map_err(|e| match e {
            Error::IncompleteSnapshot(label) => Error::IncompleteStatement(label),
            other => other,
        })
    }

    /// Freezes the current state as a new version and stamps its identifier
    /// into every current position instance.
    pub fn create_version(
        &mut self,
        schemas: &SchemaRegistry,
        statement: &Upri,
        version: Upri,
        created: ProvenanceStamp,
    ) -> Result<&VersionNode> {
        let content_hash = self.check_version(schemas, statement)?;
        let r = self.statements.get_mut(statement).expect("checked above");
        for p in r.positions.iter_mut().filter(|p| p.current) {
            p.version_ids.insert(version.clone());
        }
        r.versions.push(VersionNode {
            upri: version.clone(),
            statement: statement.clone(),
            created,
            content_hash,
            previous: r.current_version.replace(version),
        });
        Ok(r.versions.last().expect("just pushed"))
    }

    pub fn version(&self, statement: &Upri, version: &Upri) -> Result<&VersionNode> {
        self.get_any(statement)?
            .versions
            .iter()
            .find(|v| &v.upri == version)
            .ok_or_else(|| Error::UnknownVersion(version.clone()))
    }

    /// The statement as it was when `version` was created.
    pub fn version_view(&self, statement: &Upri, version: &Upri) -> Result<Snapshot> {
        self.version(statement, version)?;
        let r = &self.statements[statement];
        let positions = r
            .positions
            .iter()
            .filter(|p| p.version_ids.contains(version))
            .map(|p| (p.label.clone(), p.value.clone()))
            .collect();
        Ok(Snapshot { subject: r.subject.clone(), positions })
    }

    pub fn check_classify(&self, statement: &Upri, tag: Tag) -> Result<()> {
        self.get_live(statement)?.classification.check_add(tag)
    }

    pub fn classify(&mut self, statement: &Upri, tag: Tag) -> Result<()> {
        self.check_classify(statement, tag)?;
        self.statements.get_mut(statement).expect("checked above").classification.add(tag)
    }

    pub fn check_declassify(&self, statement: &Upri, tag: Tag) -> Result<()> {
        self.get_live(statement)?.classification.check_remove(tag)
    }

    pub fn declassify(&mut self, statement: &Upri, tag: Tag) -> Result<()> {
        self.check_declassify(statement, tag)?;
        self.statements.get_mut(statement).expect("checked above").classification.remove(tag)
    }

    pub fn full_to_light(&self, statement: &Upri) -> Result<LightRepresentation> {
        let r = self.get_any(statement)?;
        if r.paradigm == Paradigm::Light {
            return Err(Error::RequiresFullParadigm("full-to-light conversion"));
        }
        Ok(r.light_view())
    }

    /// Upgrading a light statement would have to invent history it never
    /// had, so it is always refused.
    pub fn light_to_full(&self, statement: &Upri) -> Result<()> {
        self.get_any(statement)?;
        Err(Error::LightToFullUnsupported)
    }

    pub fn reconstruct(&self, statement: &Upri, include_deleted: bool) -> Result<Reconstructed> {
        let r = if include_deleted { self.get_any(statement)? } else { self.get(statement)? };
        Ok(Reconstructed {
            input: StatementInput {
                schema: r.statement_class.clone(),
                subject: r.subject.clone(),
                bindings: r.bindings(),
            },
            metadata: r.metadata.clone(),
        })
    }
}

/// Canonical content hash of a snapshot under a schema's required labels.
pub fn hash_snapshot(snapshot: &Snapshot, schema: &ReferenceSchema) -> Result<String> {
    Ok(content_hash(&canonical_serialize(snapshot, &schema.required_labels())?))
}
