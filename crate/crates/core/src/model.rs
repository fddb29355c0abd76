//! Shared domain values: identifiers, resources, literals, provenance, and the
//! canonical byte form that version hashes are computed over.

use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, NaiveDate, SecondsFormat, Utc};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// A unique persistent identifier. External vocabulary terms keep their
/// native form (`wikidata:Q89`); locally minted ones are URN-shaped.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Upri(String);

impl Upri {
    pub fn new(value: impl Into<String>) -> Result<Self> {
        let value = value.into();
        if value.trim().is_empty() || value.chars().any(char::is_whitespace) {
            return Err(Error::InvalidUpri(value));
        }
        Ok(Self(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Upri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::str::FromStr for Upri {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Upri::new(s)
    }
}

impl AsRef<str> for Upri {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// What sort of thing a resource identifier denotes.
///
/// Placeholder kinds (`some-instance`, `every-instance`) always carry the
/// class they range over.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ResourceKind {
    NamedIndividual,
    ClassTerm,
    PropertyTerm,
    SomeInstance { of: Upri },
    EveryInstance { of: Upri },
}

impl ResourceKind {
    pub fn name(&self) -> &'static str {
        match self {
            ResourceKind::NamedIndividual => "named-individual",
            ResourceKind::ClassTerm => "class-term",
            ResourceKind::PropertyTerm => "property-term",
            ResourceKind::SomeInstance { .. } => "some-instance",
            ResourceKind::EveryInstance { .. } => "every-instance",
        }
    }

    /// The class a placeholder ranges over.
    pub fn range_class(&self) -> Option<&Upri> {
        match self {
            ResourceKind::SomeInstance { of } | ResourceKind::EveryInstance { of } => Some(of),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Resource {
    pub upri: Upri,
    #[serde(flatten)]
    pub kind: ResourceKind,
}

impl Resource {
    pub fn new(upri: Upri, kind: ResourceKind) -> Self {
        Self { upri, kind }
    }

    pub fn individual(upri: Upri) -> Self {
        Self::new(upri, ResourceKind::NamedIndividual)
    }

    pub fn class(upri: Upri) -> Self {
        Self::new(upri, ResourceKind::ClassTerm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Datatype {
    Text,
    Decimal,
    Integer,
    Boolean,
    Date,
    Datetime,
    Uri,
}

impl Datatype {
    pub const ALL: [Datatype; 7] = [
        Datatype::Text,
        Datatype::Decimal,
        Datatype::Integer,
        Datatype::Boolean,
        Datatype::Date,
        Datatype::Datetime,
        Datatype::Uri,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Datatype::Text => "text",
            Datatype::Decimal => "decimal",
            Datatype::Integer => "integer",
            Datatype::Boolean => "boolean",
            Datatype::Date => "date",
            Datatype::Datetime => "datetime",
            Datatype::Uri => "uri",
        }
    }

    /// Prefixed XML Schema name, used when a literal is written into a
    /// foreign graph document.
    pub fn xsd_name(self) -> &'static str {
        match self {
            Datatype::Text => "xsd:string",
            Datatype::Decimal => "xsd:decimal",
            Datatype::Integer => "xsd:integer",
            Datatype::Boolean => "xsd:boolean",
            Datatype::Date => "xsd:date",
            Datatype::Datetime => "xsd:dateTime",
            Datatype::Uri => "xsd:anyURI",
        }
    }

    pub fn from_xsd_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.xsd_name() == name)
    }

    pub fn is_numeric(self) -> bool {
        matches!(self, Datatype::Decimal | Datatype::Integer)
    }

    /// Does `lexical` parse under this datatype?
    pub fn accepts(self, lexical: &str) -> bool {
        match self {
            Datatype::Text => true,
            Datatype::Decimal => is_decimal_lexical(lexical),
            Datatype::Integer => is_integer_lexical(lexical),
            Datatype::Boolean => matches!(lexical, "true" | "false"),
            Datatype::Date => NaiveDate::parse_from_str(lexical, "%Y-%m-%d").is_ok(),
            Datatype::Datetime => DateTime::parse_from_rfc3339(lexical)
                .map(|dt| dt.offset().local_minus_utc() == 0)
                .unwrap_or(false),
            Datatype::Uri => url::Url::parse(lexical).is_ok(),
        }
    }
}

impl fmt::Display for Datatype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn is_integer_lexical(s: &str) -> bool {
    let digits = s.strip_prefix(['+', '-']).unwrap_or(s);
    !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
}

fn is_decimal_lexical(s: &str) -> bool {
    let body = s.strip_prefix(['+', '-']).unwrap_or(s);
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    let all_digits = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
    match frac {
        None => !int.is_empty() && all_digits(int),
        Some(f) => (!int.is_empty() || !f.is_empty()) && all_digits(int) && all_digits(f),
    }
}

/// A literal kept as its lexical form plus datatype; numeric views are parsed
/// on demand so the original input is never reformatted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LiteralValue {
    pub lexical: String,
    pub datatype: Datatype,
}

impl LiteralValue {
    pub fn new(lexical: impl Into<String>, datatype: Datatype) -> Result<Self> {
        let lexical = lexical.into();
        if !datatype.accepts(&lexical) {
            return Err(Error::InvalidLiteral { lexical, datatype });
        }
        Ok(Self { lexical, datatype })
    }

    pub fn decimal(lexical: &str) -> Result<Self> {
        Self::new(lexical, Datatype::Decimal)
    }

    pub fn text(lexical: &str) -> Self {
        Self { lexical: lexical.to_owned(), datatype: Datatype::Text }
    }

    pub fn is_well_formed(&self) -> bool {
        self.datatype.accepts(&self.lexical)
    }

    pub fn numeric(&self) -> Option<f64> {
        if self.datatype.is_numeric() {
            self.lexical.parse().ok()
        } else {
            None
        }
    }

    /// Value equality: numerics compare by magnitude, everything else by
    /// lexical form.
    pub fn same_value(&self, other: &LiteralValue) -> bool {
        match (self.numeric(), other.numeric()) {
            (Some(a), Some(b)) => a == b,
            _ => self.datatype == other.datatype && self.lexical == other.lexical,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Value {
    Resource(Resource),
    Literal(LiteralValue),
}

impl Value {
    pub fn resource(upri: Upri, kind: ResourceKind) -> Self {
        Value::Resource(Resource::new(upri, kind))
    }

    pub fn individual(upri: Upri) -> Self {
        Value::Resource(Resource::individual(upri))
    }

    pub fn as_resource(&self) -> Option<&Resource> {
        match self {
            Value::Resource(r) => Some(r),
            Value::Literal(_) => None,
        }
    }

    pub fn as_literal(&self) -> Option<&LiteralValue> {
        match self {
            Value::Literal(l) => Some(l),
            Value::Resource(_) => None,
        }
    }

    /// Join/match equality: resources by identifier, literals by value.
    pub fn same_value(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Resource(a), Value::Resource(b)) => a.upri == b.upri,
            (Value::Literal(a), Value::Literal(b)) => a.same_value(b),
            _ => false,
        }
    }
}

impl From<Resource> for Value {
    fn from(r: Resource) -> Self {
        Value::Resource(r)
    }
}

impl From<LiteralValue> for Value {
    fn from(l: LiteralValue) -> Self {
        Value::Literal(l)
    }
}

/// Who produced an input event, and when.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceStamp {
    pub creator: String,
    #[serde(with = "rfc3339")]
    pub created_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imported_from: Option<String>,
}

impl ProvenanceStamp {
    pub fn new(creator: impl Into<String>, created_at: DateTime<Utc>) -> Self {
        Self { creator: creator.into(), created_at, imported_from: None }
    }
}

/// Timestamps are always written as UTC RFC3339 with microsecond precision so
/// that a value survives a JSON round trip unchanged.
pub mod rfc3339 {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn format(dt: &DateTime<Utc>) -> String {
        dt.to_rfc3339_opts(SecondsFormat::Micros, true)
    }

    pub fn serialize<S: Serializer>(dt: &DateTime<Utc>, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format(dt))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<DateTime<Utc>, D::Error> {
        let text = String::deserialize(d)?;
        DateTime::parse_from_rfc3339(&text)
            .map(|dt| dt.with_timezone(&Utc))
            .map_err(serde::de::Error::custom)
    }
}

/// Mints fresh identifiers: `namespace + entity-kind + ":" + 128-bit token`.
pub struct UpriMinter {
    namespace: String,
    rng: ChaCha20Rng,
}

impl UpriMinter {
    pub fn new(namespace: impl Into<String>) -> Result<Self> {
        Self::build(namespace.into(), ChaCha20Rng::from_entropy())
    }

    /// Deterministic minter, for reproducible fixtures.
    pub fn seeded(namespace: impl Into<String>, seed: u64) -> Result<Self> {
        Self::build(namespace.into(), ChaCha20Rng::seed_from_u64(seed))
    }

    fn build(namespace: String, rng: ChaCha20Rng) -> Result<Self> {
        if namespace.trim().is_empty() {
            return Err(Error::InvalidConfig("namespace must be non-empty".into()));
        }
        Ok(Self { namespace, rng })
    }

    pub fn namespace(&self) -> &str {
        &self.namespace
    }

    pub fn mint(&mut self, entity_kind: &str) -> Upri {
        let mut token = [0u8; 16];
        self.rng.fill_bytes(&mut token);
        Upri(format!("{}{}:{}", self.namespace, entity_kind, hex::encode(token)))
    }
}

impl fmt::Debug for UpriMinter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UpriMinter").field("namespace", &self.namespace).finish()
    }
}

/// Subject plus position bindings of one statement at one point in time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub subject: Resource,
    pub positions: BTreeMap<String, Value>,
}

impl Snapshot {
    pub fn new(subject: Resource) -> Self {
        Self { subject, positions: BTreeMap::new() }
    }

    pub fn with(mut self, label: &str, value: Value) -> Self {
        self.positions.insert(label.to_owned(), value);
        self
    }
}

fn escape_into(out: &mut String, text: &str) {
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            other => out.push(other),
        }
    }
}

fn encode_resource(out: &mut String, r: &Resource) {
    out.push_str("R\t");
    escape_into(out, r.upri.as_str());
    out.push('\t');
    out.push_str(r.kind.name());
    if let Some(of) = r.kind.range_class() {
        out.push('\t');
        escape_into(out, of.as_str());
    }
}

/// Deterministic UTF-8 encoding of a snapshot: the subject line first, then
/// one line per bound position in label order.
///
/// `required` lists the labels that must be bound.
pub fn canonical_serialize<S: AsRef<str>>(snapshot: &Snapshot, required: &[S]) -> Result<Vec<u8>> {
    if let Some(missing) = required.iter().find(|l| !snapshot.positions.contains_key(l.as_ref())) {
        return Err(Error::IncompleteSnapshot(missing.as_ref().to_owned()));
    }
    let mut out = String::from("subject\t");
    encode_resource(&mut out, &snapshot.subject);
    out.push('\n');
    for (label, value) in &snapshot.positions {
        escape_into(&mut out, label);
        out.push('\t');
        match value {
            Value::Resource(r) => encode_resource(&mut out, r),
            Value::Literal(l) => {
                out.push_str("L\t");
                out.push_str(l.datatype.name());
                out.push('\t');
                escape_into(&mut out, &l.lexical);
            }
        }
        out.push('\n');
    }
    Ok(out.into_bytes())
}

/// Lowercase hex SHA-256 digest.
pub fn content_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
