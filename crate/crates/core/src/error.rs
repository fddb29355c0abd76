use thiserror::Error;

use crate::model::{Datatype, Upri};
use crate::schema::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid identifier `{0}`")]
    InvalidUpri(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("`{lexical}` is not a valid {datatype} literal")]
    InvalidLiteral { lexical: String, datatype: Datatype },
    #[error("snapshot is incomplete: required position {0} is unbound")]
    IncompleteSnapshot(String),
    #[error("identifier collision on {0}")]
    UpriCollision(Upri),

    #[error("taxonomy cycle: {term} cannot have parent {parent}")]
    CycleDetected { term: Upri, parent: Upri },
    #[error("unknown parent term {0}")]
    UnknownParent(Upri),
    #[error("{0} is not a class term")]
    NotAClass(Upri),
    #[error("unknown term {0}")]
    UnknownTerm(Upri),
    #[error("term {0} is already registered")]
    DuplicateTerm(Upri),
    #[error("invalid term: {0}")]
    InvalidTerm(String),
    #[error("a term cannot be mapped to itself ({0})")]
    SelfMapping(Upri),
    #[error("mapping {source_term} -> {target} does not touch a reference term")]
    HubViolation { source_term: Upri, target: Upri },
    #[error("a mapping between {source_term} and {target} already exists")]
    DuplicateMapping { source_term: Upri, target: Upri },
    #[error("no mapping from {term} into vocabulary `{vocabulary}`")]
    NoMapping { term: Upri, vocabulary: String },
    #[error("label `{label}` does not identify exactly one term ({candidates} candidates)")]
    AmbiguousLabel { label: String, candidates: usize },

    #[error("inconsistent wizard answers: {0}")]
    InconsistentAnswers(String),
    #[error("constraint class {0} is not a registered class term")]
    UnknownConstraintClass(Upri),
    #[error("a schema needs at least one required object position")]
    NoRequiredPosition,
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("unknown schema {0}")]
    UnknownSchema(Upri),
    #[error("schema {0} has no version {1}")]
    UnknownSchemaVersion(Upri, u32),
    #[error("schema has no resource-constrained required position")]
    NoResourcePositions,
    #[error("schema evolution may only add optional positions ({0} is required)")]
    RequiredAdditionRejected(String),
    #[error("schema evolution may not modify existing position {0}")]
    BreakingChangeRejected(String),

    #[error("statement does not conform to its schema: {0}")]
    ValidationFailed(ValidationReport),
    #[error("new value violates the position constraint: {0}")]
    ConstraintViolation(ValidationReport),
    #[error("unknown statement {0}")]
    UnknownStatement(Upri),
    #[error("light-paradigm statements are immutable; delete and recreate instead")]
    LightModeImmutable,
    #[error("`{0}` requires a full-paradigm statement")]
    RequiresFullParadigm(&'static str),
    #[error("statement {0} is deleted")]
    StatementDeleted(Upri),
    #[error("statement {0} is already deleted")]
    AlreadyDeleted(Upri),
    #[error("unknown position {0}")]
    UnknownPosition(String),
    #[error("statement has no current value for required position {0}")]
    IncompleteStatement(String),
    #[error("unknown version {0}")]
    UnknownVersion(Upri),
    #[error("statement is already tagged {existing}; cannot also be {requested}")]
    ConflictingTruthTag { existing: String, requested: String },
    #[error("statement is not tagged {0}")]
    TagNotPresent(String),
    #[error("light statements cannot be converted to the full paradigm")]
    LightToFullUnsupported,
    #[error("invalid statement metadata: {0}")]
    InvalidMetadata(String),
    #[error("provenance timestamp goes backwards for {0}")]
    NonMonotonicTimestamp(String),

    #[error("required slot {0} is not aligned")]
    UncoveredRequiredSlot(String),
    #[error("slot {0} is aligned more than once")]
    DuplicateAlignment(String),
    #[error("unknown source slot {0}")]
    UnknownSlot(String),
    #[error("invalid scaffold: {0}")]
    InvalidScaffold(String),
    #[error("unknown crosswalk {0}")]
    UnknownCrosswalk(Upri),
    #[error("cannot translate {term} into vocabulary `{vocabulary}`")]
    TermTranslationFailed { term: Upri, vocabulary: String },
    #[error("statement class {actual} does not match crosswalk source {expected}")]
    SchemaMismatch { expected: Upri, actual: Upri },
    #[error("document does not match the crosswalk target: {0}")]
    DocumentShapeMismatch(String),
    #[error("schema count must be at least 1")]
    InvalidCount,

    #[error("binding for {slot} is incompatible: {reason}")]
    IncompatibleBinding { slot: String, reason: String },
    #[error("incompatible join: {0}")]
    IncompatibleJoin(String),
    #[error("unknown question {0}")]
    UnknownQuestion(Upri),

    #[error("template variable ${{{0}}} is not a slot of the schema")]
    UnknownVariable(String),
    #[error("malformed template: {0}")]
    MalformedTemplate(String),
    #[error("unknown template {0}")]
    UnknownTemplate(Upri),
    #[error("template belongs to another schema")]
    TemplateSchemaMismatch,
    #[error("mind-map pattern belongs to another schema")]
    PatternSchemaMismatch,

    #[error("io error: {0}")]
    Io(String),
    #[error("event log replay failed at line {line}: {reason}")]
    Replay { line: usize, reason: String },
    #[error("serialization error: {0}")]
    Serialization(String),
    #[error("internal error: {0}")]
    Internal(String),
}

/// Coarse classification used by the transport layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    NotFound,
    Invalid,
    Conflict,
    Internal,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            UnknownParent(_) | UnknownTerm(_) | UnknownSchema(_) | UnknownSchemaVersion(..)
            | UnknownStatement(_) | UnknownPosition(_) | UnknownVersion(_) | UnknownCrosswalk(_)
            | UnknownQuestion(_) | UnknownTemplate(_) | NoMapping { .. } => ErrorClass::NotFound,
            DuplicateTerm(_) | DuplicateMapping { .. } | AlreadyDeleted(_) | StatementDeleted(_)
            | ConflictingTruthTag { .. } | UpriCollision(_) | NonMonotonicTimestamp(_) => ErrorClass::Conflict,
            Io(_) | Replay { .. } | Serialization(_) | Internal(_) => ErrorClass::Internal,
            _ => ErrorClass::Invalid,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl From<serde_yaml::Error> for Error {
    fn from(e: serde_yaml::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
