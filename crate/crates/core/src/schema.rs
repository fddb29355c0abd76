//! Reference schemata: the subject slot plus ordered object positions of one
//! statement type, with the constraints every instance must satisfy.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use indexmap::IndexMap;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::crosswalk::{self, Crosswalk};
use crate::display::template_variables;
use crate::error::{Error, Result};
use crate::model::{Datatype, LiteralValue, Upri, Value};
use crate::terms::{TermKind, TermRegistry};

/// Superproperty of every property derived from a required position.
pub const REQUIRED_OBJECT_POSITION: &str = "rosetta:requiredObjectPosition";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Paradigm {
    #[default]
    Light,
    Full,
}

impl std::str::FromStr for Paradigm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "light" => Ok(Paradigm::Light),
            "full" => Ok(Paradigm::Full),
            other => Err(Error::InvalidConfig(format!("unknown paradigm `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogicalFlag {
    Transitive,
    Symmetric,
    Reflexive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct NumericRange {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub min_exclusive: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub max_exclusive: bool,
}

impl NumericRange {
    pub fn above(min: f64) -> Self {
        Self { min: Some(min), min_exclusive: true, ..Self::default() }
    }

    pub fn between(min: f64, max: f64) -> Self {
        Self { min: Some(min), max: Some(max), ..Self::default() }
    }

    pub fn contains(&self, x: f64) -> bool {
        let lower = match self.min {
            None => true,
            Some(m) if self.min_exclusive => x > m,
            Some(m) => x >= m,
        };
        let upper = match self.max {
            None => true,
            Some(m) if self.max_exclusive => x < m,
            Some(m) => x <= m,
        };
        lower && upper
    }
}

impl fmt::Display for NumericRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let open = if self.min_exclusive { '(' } else { '[' };
        let close = if self.max_exclusive { ')' } else { ']' };
        let show = |b: Option<f64>| b.map(|v| v.to_string()).unwrap_or_else(|| "*".into());
        write!(f, "{open}{}, {}{close}", show(self.min), show(self.max))
    }
}

/// What may fill a slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Constraint {
    /// Any resource falling under `class` (subclass-closed).
    Resource { class: Upri },
    Literal {
        datatype: Datatype,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pattern: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        range: Option<NumericRange>,
    },
}

impl Constraint {
    pub fn resource(class: Upri) -> Self {
        Constraint::Resource { class }
    }

    pub fn literal(datatype: Datatype) -> Self {
        Constraint::Literal { datatype, pattern: None, range: None }
    }

    pub fn class(&self) -> Option<&Upri> {
        match self {
            Constraint::Resource { class } => Some(class),
            Constraint::Literal { .. } => None,
        }
    }

    pub fn datatype(&self) -> Option<Datatype> {
        match self {
            Constraint::Literal { datatype, .. } => Some(*datatype),
            Constraint::Resource { .. } => None,
        }
    }

    fn check_well_formed(&self, slot: &str, terms: &TermRegistry) -> Result<()> {
        match self {
            Constraint::Resource { class } => match terms.get(class) {
                Some(t) if t.kind == TermKind::ClassTerm => Ok(()),
                _ => Err(Error::UnknownConstraintClass(class.clone())),
            },
            Constraint::Literal { datatype, pattern, range } => {
                if let Some(p) = pattern {
                    anchored(p).map_err(|e| Error::InvalidSchema(format!("{slot}: bad pattern: {e}")))?;
                }
                if range.is_some() && !datatype.is_numeric() {
                    return Err(Error::InvalidSchema(format!("{slot}: range on non-numeric datatype {datatype}")));
                }
                Ok(())
            }
        }
    }

    /// Checks one value, returning the violation if any.
    pub fn check(&self, value: &Value, terms: &TermRegistry) -> Option<(ViolationReason, String)> {
        match (self, value) {
            (Constraint::Resource { class }, Value::Resource(r)) => {
                if terms.satisfies_class(r, class) {
                    None
                } else {
                    Some((ViolationReason::ClassViolation, format!("{} does not fall under {class}", r.upri)))
                }
            }
            (Constraint::Literal { datatype, pattern, range }, Value::Literal(l)) => {
                check_literal(l, *datatype, pattern.as_deref(), range.as_ref())
            }
            (Constraint::Resource { .. }, Value::Literal(_)) => {
                Some((ViolationReason::WrongKind, "expected a resource, found a literal".into()))
            }
            (Constraint::Literal { .. }, Value::Resource(_)) => {
                Some((ViolationReason::WrongKind, "expected a literal, found a resource".into()))
            }
        }
    }
}

fn anchored(pattern: &str) -> std::result::Result<Regex, regex::Error> {
    Regex::new(&format!("^(?:{pattern})$"))
}

pub(crate) fn check_literal(
    literal: &LiteralValue,
    datatype: Datatype,
    pattern: Option<&str>,
    range: Option<&NumericRange>,
) -> Option<(ViolationReason, String)> {
    if literal.datatype != datatype {
        return Some((ViolationReason::DatatypeViolation, format!("expected {datatype}, found {}", literal.datatype)));
    }
    if !literal.is_well_formed() {
        return Some((ViolationReason::DatatypeViolation, format!("`{}` is not a valid {datatype}", literal.lexical)));
    }
    if let Some(p) = pattern {
        let matches = anchored(p).map(|re| re.is_match(&literal.lexical)).unwrap_or(false);
        if !matches {
            return Some((ViolationReason::PatternViolation, format!("`{}` does not match /{p}/", literal.lexical)));
        }
    }
    if let Some(r) = range {
        match literal.numeric() {
            Some(x) if r.contains(x) => {}
            _ => return Some((ViolationReason::RangeViolation, format!("{} is outside {r}", literal.lexical))),
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubjectSpec {
    pub label: String,
    pub class: Upri,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectPositionSpec {
    pub label: String,
    pub required: bool,
    pub constraint: Constraint,
    #[serde(default)]
    pub description: String,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub logical: BTreeSet<LogicalFlag>,
    /// Object-position class, minted for full-paradigm schemata.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position_class: Option<Upri>,
}

impl ObjectPositionSpec {
    pub fn new(label: &str, required: bool, constraint: Constraint) -> Self {
        Self {
            label: label.to_owned(),
            required,
            constraint,
            description: String::new(),
            logical: BTreeSet::new(),
            position_class: None,
        }
    }

    pub fn optional(label: &str, constraint: Constraint) -> Self {
        Self::new(label, false, constraint)
    }

    pub fn required(label: &str, constraint: Constraint) -> Self {
        Self::new(label, true, constraint)
    }

    /// Same slot definition, ignoring the minted position class.
    fn same_definition(&self, other: &ObjectPositionSpec) -> bool {
        self.label == other.label
            && self.required == other.required
            && self.constraint == other.constraint
            && self.logical == other.logical
    }
}

/// The machine-actionable formalization of one statement type. Its identity
/// is the statement class; evolution keeps the class and bumps `version`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSchema {
    pub statement_class: Upri,
    pub predicate_label: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub examples: Vec<String>,
    #[serde(default)]
    pub paradigm: Paradigm,
    pub subject: SubjectSpec,
    pub positions: Vec<ObjectPositionSpec>,
    pub dynamic_label: String,
    #[serde(default = "first_version")]
    pub version: u32,
}

fn first_version() -> u32 {
    1
}

/// Reserved slot name for the subject in crosswalk alignments and joins.
pub const SUBJECT_SLOT: &str = "subject";

impl ReferenceSchema {
    pub fn position(&self, label: &str) -> Option<&ObjectPositionSpec> {
        self.positions.iter().find(|p| p.label == label)
    }

    pub fn required_labels(&self) -> Vec<&str> {
        self.positions.iter().filter(|p| p.required).map(|p| p.label.as_str()).collect()
    }

    /// Subject label followed by every position label.
    pub fn slot_labels(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.subject.label.as_str()).chain(self.positions.iter().map(|p| p.label.as_str()))
    }

    pub fn from_yaml(text: &str) -> Result<Self> {
        Ok(serde_yaml::from_str(text)?)
    }

    pub fn to_yaml(&self) -> Result<String> {
        Ok(serde_yaml::to_string(self)?)
    }

    /// Structural well-formedness against the current term registry.
    pub fn check(&self, terms: &TermRegistry) -> Result<()> {
        if self.predicate_label.trim().is_empty() {
            return Err(Error::InvalidSchema("predicate label is empty".into()));
        }
        if self.version == 0 {
            return Err(Error::InvalidSchema("versions start at 1".into()));
        }
        let mut seen = BTreeSet::new();
        for label in self.slot_labels() {
            check_label(label)?;
            if !seen.insert(label) {
                return Err(Error::InvalidSchema(format!("duplicate slot label {label}")));
            }
        }
        if !self.positions.iter().any(|p| p.required) {
            return Err(Error::NoRequiredPosition);
        }
        Constraint::resource(self.subject.class.clone()).check_well_formed(&self.subject.label, terms)?;
        for p in &self.positions {
            p.constraint.check_well_formed(&p.label, terms)?;
            if self.paradigm == Paradigm::Full && p.position_class.is_none() {
                return Err(Error::InvalidSchema(format!("{} lacks an object-position class", p.label)));
            }
        }
        check_label_mentions(&self.dynamic_label, self)
    }

    /// Validates a candidate statement. A clean report means the statement
    /// may be stored.
    pub fn validate(&self, subject: &Value, bindings: &BTreeMap<String, Value>, terms: &TermRegistry) -> ValidationReport {
        let mut report = ValidationReport::default();
        let subject_constraint = Constraint::resource(self.subject.class.clone());
        if let Some((reason, detail)) = subject_constraint.check(subject, terms) {
            report.push(&self.subject.label, reason, detail);
        }
        for p in &self.positions {
            match bindings.get(&p.label) {
                None if p.required => report.push(&p.label, ViolationReason::MissingRequired, "required position is unbound"),
                None => {}
                Some(v) => {
                    if let Some((reason, detail)) = p.constraint.check(v, terms) {
                        report.push(&p.label, reason, detail);
                    }
                }
            }
        }
        for label in bindings.keys() {
            if self.position(label).is_none() {
                report.push(label, ViolationReason::UnknownPosition, "not a position of this schema");
            }
        }
        report
    }

    /// Neutral shape document: cardinality and value constraints per slot.
    pub fn shape(&self) -> ShapeDoc {
        ShapeDoc {
            target_class: self.statement_class.clone(),
            subject: ShapeSubject { class: self.subject.class.clone() },
            properties: self
                .positions
                .iter()
                .map(|p| ShapeProperty {
                    label: p.label.clone(),
                    min: u32::from(p.required),
                    max: 1,
                    constraint: p.constraint.clone(),
                })
                .collect(),
        }
    }

    /// The next version with `additions` appended. Only new optional
    /// positions are allowed, so every statement valid under this version
    /// stays valid.
    pub fn evolve(
        &self,
        additions: Vec<ObjectPositionSpec>,
        terms: &TermRegistry,
        mint: &mut dyn FnMut(&str) -> Upri,
    ) -> Result<ReferenceSchema> {
        if additions.is_empty() {
            return Err(Error::InvalidSchema("evolution adds no positions".into()));
        }
        let mut next = self.clone();
        for mut addition in additions {
            if self.position(&addition.label).is_some() || addition.label == self.subject.label {
                return Err(Error::BreakingChangeRejected(addition.label));
            }
            if addition.required {
                return Err(Error::RequiredAdditionRejected(addition.label));
            }
            if self.paradigm == Paradigm::Full && addition.position_class.is_none() {
                addition.position_class = Some(mint("position"));
            }
            next.positions.push(addition);
        }
        next.version += 1;
        next.check(terms)?;
        Ok(next)
    }

    /// Accepts `next` as the successor of this schema only if it is a
    /// backward-compatible extension.
    pub fn check_successor(&self, next: &ReferenceSchema) -> Result<()> {
        if next.version != self.version + 1 {
            return Err(Error::InvalidSchema(format!(
                "expected version {}, found {}",
                self.version + 1,
                next.version
            )));
        }
        if next.statement_class != self.statement_class
            || next.subject != self.subject
            || next.paradigm != self.paradigm
            || next.predicate_label != self.predicate_label
        {
            return Err(Error::BreakingChangeRejected(self.subject.label.clone()));
        }
        for old in &self.positions {
            match next.position(&old.label) {
                Some(new) if new.same_definition(old) && new.position_class == old.position_class => {}
                _ => return Err(Error::BreakingChangeRejected(old.label.clone())),
            }
        }
        for new in &next.positions {
            if self.position(&new.label).is_none() && new.required {
                return Err(Error::RequiredAdditionRejected(new.label.clone()));
            }
        }
        Ok(())
    }

    /// Recovers the wizard answers that would produce this schema.
    pub fn to_answers(&self) -> WizardAnswers {
        WizardAnswers {
            q1_examples: self.examples.clone(),
            q2_predicate: self.predicate_label.clone(),
            q3_description: self.description.clone(),
            q4_position_count: self.positions.len(),
            q5_labels: self.slot_labels().map(str::to_owned).collect(),
            q6_required: self.positions.iter().map(|p| p.required).collect(),
            q7_position_descriptions: self.positions.iter().map(|p| p.description.clone()).collect(),
            q8_constraints: std::iter::once(Constraint::resource(self.subject.class.clone()))
                .chain(self.positions.iter().map(|p| p.constraint.clone()))
                .collect(),
            q9_logical: if self.positions.iter().all(|p| p.logical.is_empty()) {
                Vec::new()
            } else {
                self.positions.iter().map(|p| p.logical.clone()).collect()
            },
            q10_dynamic_label: self.dynamic_label.clone(),
        }
    }
}

fn check_label(label: &str) -> Result<()> {
    let ok = !label.is_empty()
        && label != SUBJECT_SLOT
        && label.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidSchema(format!("invalid thematic label `{label}`")))
    }
}

/// The label template must name the subject and every required position, and
/// nothing else.
fn check_label_mentions(template: &str, schema: &ReferenceSchema) -> Result<()> {
    let vars = template_variables(template)?;
    for v in &vars {
        if !schema.slot_labels().any(|l| l == v) {
            return Err(Error::UnknownVariable(v.clone()));
        }
    }
    let needed = std::iter::once(schema.subject.label.as_str()).chain(schema.required_labels());
    for label in needed {
        if !vars.iter().any(|v| v == label) {
            return Err(Error::InconsistentAnswers(format!("dynamic label does not mention ${{{label}}}")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationReason {
    MissingRequired,
    WrongKind,
    ClassViolation,
    DatatypeViolation,
    PatternViolation,
    RangeViolation,
    UnknownPosition,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub slot: String,
    pub reason: ViolationReason,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn push(&mut self, slot: &str, reason: ViolationReason, detail: impl Into<String>) {
        self.violations.push(Violation { slot: slot.to_owned(), reason, detail: detail.into() });
    }

    pub fn has(&self, slot: &str, reason: ViolationReason) -> bool {
        self.violations.iter().any(|v| v.slot == slot && v.reason == reason)
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(Error::ValidationFailed(self))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .violations
            .iter()
            .map(|v| format!("{:?}({}): {}", v.reason, v.slot, v.detail))
            .collect();
        f.write_str(&parts.join("; "))
    }
}

/// Answers to the ten editor questions, one field per question.
///
/// `q5_labels` and `q8_constraints` list the subject first, then each object
/// position; the other per-position lists have one entry per position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WizardAnswers {
    #[serde(default)]
    pub q1_examples: Vec<String>,
    pub q2_predicate: String,
    #[serde(default)]
    pub q3_description: String,
    pub q4_position_count: usize,
    pub q5_labels: Vec<String>,
    pub q6_required: Vec<bool>,
    #[serde(default)]
    pub q7_position_descriptions: Vec<String>,
    pub q8_constraints: Vec<Constraint>,
    #[serde(default)]
    pub q9_logical: Vec<BTreeSet<LogicalFlag>>,
    pub q10_dynamic_label: String,
}

/// Prompt text and target field for each editor question, shared by the CLI
/// and the UI.
pub const WIZARD_QUESTIONS: [(&str, &str); 10] = [
    ("q1_examples", "Provide some example statements."),
    ("q2_predicate", "What is the predicate or verb of the statement?"),
    (
        "q3_description",
        "Give a description or characterization of the type of statement you want to add. What kind of statement will it cover?",
    ),
    ("q4_position_count", "Indicate the number of object-positions the statement should cover."),
    ("q5_labels", "Give the subject-position and each object-position a short and meaningful label."),
    (
        "q6_required",
        "Specify which of these object-positions are required (i.e., arguments) to form a semantically meaningful statement with the subject and the predicate, with all other object-positions being optional (i.e., adjuncts).",
    ),
    (
        "q7_position_descriptions",
        "For each object-position, provide a brief description of the type of objects covered by the object-position and give some typical examples.",
    ),
    (
        "q8_constraints",
        "For each object-position, decide whether the object must be represented in the form of a resource or a literal. In the case of a resource, choose a Wikidata class that best specifies the type of entity that is allowed for the object-position, and in the case of a literal, choose the datatype and define datatype-specific constraints if necessary.",
    ),
    (
        "q9_logical",
        "Decide whether any logical properties apply to the predicate of the statement (e.g., transitivity) and, if so, which object-position is affected by them.",
    ),
    (
        "q10_dynamic_label",
        "Write a human-readable statement using the thematic labels for the subject, the different object-positions, and the predicate.",
    ),
];

impl WizardAnswers {
    fn check_shape(&self) -> Result<()> {
        let n = self.q4_position_count;
        let mismatch = |what: &str, expected: usize, found: usize| {
            Err(Error::InconsistentAnswers(format!("{what}: expected {expected} entries, found {found}")))
        };
        if self.q2_predicate.trim().is_empty() {
            return Err(Error::InconsistentAnswers("q2: predicate is empty".into()));
        }
        if self.q5_labels.len() != n + 1 {
            return mismatch("q5 (subject + positions)", n + 1, self.q5_labels.len());
        }
        if self.q6_required.len() != n {
            return mismatch("q6", n, self.q6_required.len());
        }
        if !self.q7_position_descriptions.is_empty() && self.q7_position_descriptions.len() != n {
            return mismatch("q7", n, self.q7_position_descriptions.len());
        }
        if self.q8_constraints.len() != n + 1 {
            return mismatch("q8 (subject + positions)", n + 1, self.q8_constraints.len());
        }
        if !self.q9_logical.is_empty() && self.q9_logical.len() != n {
            return mismatch("q9", n, self.q9_logical.len());
        }
        if !matches!(self.q8_constraints[0], Constraint::Resource { .. }) {
            return Err(Error::InconsistentAnswers("q8: the subject must be a resource".into()));
        }
        let mut seen = BTreeSet::new();
        for l in &self.q5_labels {
            check_label(l).map_err(|_| Error::InconsistentAnswers(format!("q5: invalid label `{l}`")))?;
            if !seen.insert(l) {
                return Err(Error::InconsistentAnswers(format!("q5: duplicate label {l}")));
            }
        }
        Ok(())
    }
}

/// Builds a schema from wizard answers. Identifiers come from `mint`, first
/// the statement class, then (full paradigm) one class per position.
pub fn create_from_wizard(
    answers: &WizardAnswers,
    paradigm: Paradigm,
    terms: &TermRegistry,
    mint: &mut dyn FnMut(&str) -> Upri,
) -> Result<ReferenceSchema> {
    answers.check_shape()?;
    for c in &answers.q8_constraints {
        c.check_well_formed("q8", terms)?;
    }
    if !answers.q6_required.iter().any(|r| *r) {
        return Err(Error::NoRequiredPosition);
    }
    let Constraint::Resource { class: subject_class } = &answers.q8_constraints[0] else {
        unreachable!("checked in check_shape")
    };
    let statement_class = mint("class");
    let positions = (0..answers.q4_position_count)
        .map(|i| ObjectPositionSpec {
            label: answers.q5_labels[i + 1].clone(),
            required: answers.q6_required[i],
            constraint: answers.q8_constraints[i + 1].clone(),
            description: answers.q7_position_descriptions.get(i).cloned().unwrap_or_default(),
            logical: answers.q9_logical.get(i).cloned().unwrap_or_default(),
            position_class: (paradigm == Paradigm::Full).then(|| mint("position")),
        })
        .collect();
    let schema = ReferenceSchema {
        statement_class,
        predicate_label: answers.q2_predicate.trim().to_owned(),
        description: answers.q3_description.clone(),
        examples: answers.q1_examples.clone(),
        paradigm,
        subject: SubjectSpec { label: answers.q5_labels[0].clone(), class: subject_class.clone() },
        positions,
        dynamic_label: answers.q10_dynamic_label.clone(),
        version: 1,
    };
    schema.check(terms)?;
    Ok(schema)
}

/// Label of the class term registered for a schema's statement class.
pub fn statement_class_label(predicate: &str) -> String {
    format!("{predicate} statement")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeDoc {
    pub target_class: Upri,
    pub subject: ShapeSubject,
    pub properties: Vec<ShapeProperty>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapeSubject {
    pub class: Upri,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeProperty {
    pub label: String,
    pub min: u32,
    pub max: u32,
    pub constraint: Constraint,
}

/// An object property derived from one resource-constrained required
/// position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivedProperty {
    pub iri: Upri,
    pub label: String,
    pub sub_property_of: String,
    pub domain: Upri,
    pub range: Upri,
    pub axioms: BTreeSet<LogicalFlag>,
    pub position: String,
    /// Annotation: the statement class this property belongs to.
    pub statement_class: Upri,
    pub statement_class_label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OwlSchemaDoc {
    pub statement_class: Upri,
    pub statement_class_label: String,
    pub properties: Vec<DerivedProperty>,
    /// Slot alignment between the reference schema and the derived schema.
    pub crosswalk: Crosswalk,
}

/// `has` + the predicate words that are not the verb or the position itself +
/// the position label, e.g. "material has-part" / PART → "has material part".
pub fn derived_property_label(predicate: &str, position_label: &str) -> String {
    let position_words: Vec<String> =
        position_label.split('_').filter(|w| !w.is_empty()).map(str::to_lowercase).collect();
    let fragment: Vec<String> = predicate
        .split(|c: char| c.is_whitespace() || c == '_' || c == '-')
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .filter(|w| w != "has" && !position_words.contains(w))
        .collect();
    let mut words = vec!["has".to_owned()];
    words.extend(fragment);
    words.extend(position_words);
    words.join(" ")
}

pub fn derive_owl_schema(schema: &ReferenceSchema, terms: &TermRegistry) -> Result<OwlSchemaDoc> {
    let class_label = terms
        .label_of(&schema.statement_class)
        .map(str::to_owned)
        .unwrap_or_else(|| statement_class_label(&schema.predicate_label));
    let properties: Vec<DerivedProperty> = schema
        .positions
        .iter()
        .filter(|p| p.required)
        .filter_map(|p| p.constraint.class().map(|range| (p, range)))
        .map(|(p, range)| {
            let label = derived_property_label(&schema.predicate_label, &p.label);
            let iri = Upri::new(format!("{}/property/{}", schema.statement_class, label.replace(' ', "-")))?;
            Ok(DerivedProperty {
                iri,
                label,
                sub_property_of: REQUIRED_OBJECT_POSITION.to_owned(),
                domain: schema.subject.class.clone(),
                range: range.clone(),
                axioms: p.logical.clone(),
                position: p.label.clone(),
                statement_class: schema.statement_class.clone(),
                statement_class_label: class_label.clone(),
            })
        })
        .collect::<Result<_>>()?;
    if properties.is_empty() {
        return Err(Error::NoResourcePositions);
    }
    let crosswalk = crosswalk::owl_crosswalk(schema, &class_label, &properties, terms.reference_vocabulary())?;
    Ok(OwlSchemaDoc { statement_class: schema.statement_class.clone(), statement_class_label: class_label, properties, crosswalk })
}

/// Every published version of every schema.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SchemaRegistry {
    versions: IndexMap<Upri, Vec<ReferenceSchema>>,
}

impl SchemaRegistry {
    pub fn get(&self, id: &Upri) -> Result<&ReferenceSchema> {
        self.versions
            .get(id)
            .and_then(|v| v.last())
            .ok_or_else(|| Error::UnknownSchema(id.clone()))
    }

    pub fn get_version(&self, id: &Upri, version: u32) -> Result<&ReferenceSchema> {
        let all = self.versions.get(id).ok_or_else(|| Error::UnknownSchema(id.clone()))?;
        all.iter()
            .find(|s| s.version == version)
            .ok_or_else(|| Error::UnknownSchemaVersion(id.clone(), version))
    }

    pub fn contains(&self, id: &Upri) -> bool {
        self.versions.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.versions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.versions.is_empty()
    }

    /// Latest version of each schema, in publication order.
    pub fn latest(&self) -> impl Iterator<Item = &ReferenceSchema> {
        self.versions.values().filter_map(|v| v.last())
    }

    pub fn history(&self, id: &Upri) -> Result<&[ReferenceSchema]> {
        self.versions.get(id).map(Vec::as_slice).ok_or_else(|| Error::UnknownSchema(id.clone()))
    }

    /// Checks that `schema` may be published: either version 1 of a new
    /// statement class or a compatible successor of the latest version.
    pub fn check_publish(&self, schema: &ReferenceSchema, terms: &TermRegistry) -> Result<()> {
        schema.check(terms)?;
        match self.versions.get(&schema.statement_class).and_then(|v| v.last()) {
            None if schema.version == 1 => Ok(()),
            None => Err(Error::InvalidSchema(format!("a new schema must start at version 1, found {}", schema.version))),
            Some(latest) => latest.check_successor(schema),
        }
    }

    pub(crate) fn publish_unchecked(&mut self, schema: ReferenceSchema) {
        self.versions.entry(schema.statement_class.clone()).or_default().push(schema);
    }
}
