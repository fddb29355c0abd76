//! Question statements: a schema's slots filled with exact values or
//! placeholders, evaluated against the current statements of that schema.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Datatype, LiteralValue, Resource, ResourceKind, Upri, Value};
use crate::schema::{check_literal, Constraint, NumericRange, ReferenceSchema, SchemaRegistry, SUBJECT_SLOT};
use crate::store::{StatementRecord, Store, TruthTag};
use crate::terms::{TermKind, TermRegistry};

/// What a question puts into one slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "binding", rename_all = "kebab-case")]
pub enum Binding {
    Resource {
        upri: Upri,
    },
    Literal {
        lexical: String,
        datatype: Datatype,
    },
    /// Any value that instantiates the class (subclass-closed).
    SomeInstanceOf {
        class: Upri,
    },
    /// Only universal statements about every instance of the class.
    EveryInstanceOf {
        class: Upri,
    },
    /// Values directly typed by exactly this class.
    Class {
        class: Upri,
    },
    LiteralFilter {
        datatype: Datatype,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        range: Option<NumericRange>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pattern: Option<String>,
    },
    #[default]
    Unbound,
}

impl Binding {
    pub fn is_exact(&self) -> bool {
        matches!(self, Binding::Resource { .. } | Binding::Literal { .. })
    }

    fn name(&self) -> &'static str {
        match self {
            Binding::Resource { .. } => "resource",
            Binding::Literal { .. } => "literal",
            Binding::SomeInstanceOf { .. } => "some-instance-of",
            Binding::EveryInstanceOf { .. } => "every-instance-of",
            Binding::Class { .. } => "class",
            Binding::LiteralFilter { .. } => "literal-filter",
            Binding::Unbound => "unbound",
        }
    }

    /// Does a slot value (absent for unbound optional positions) satisfy
    /// this binding?
    pub fn matches(&self, value: Option<&Value>, terms: &TermRegistry) -> bool {
        match (self, value) {
            (Binding::Unbound, _) => true,
            (_, None) => false,
            (Binding::Resource { upri }, Some(Value::Resource(r))) => &r.upri == upri,
            (Binding::Literal { lexical, datatype }, Some(Value::Literal(l))) => {
                l.same_value(&LiteralValue { lexical: lexical.clone(), datatype: *datatype })
            }
            (Binding::SomeInstanceOf { class }, Some(Value::Resource(r))) => terms.instantiates(r, class),
            (Binding::EveryInstanceOf { class }, Some(Value::Resource(r))) => match &r.kind {
                ResourceKind::EveryInstance { of } => of == class,
                ResourceKind::ClassTerm => &r.upri == class,
                _ => false,
            },
            (Binding::Class { class }, Some(Value::Resource(r))) => terms.direct_classes(r).contains(class),
            (Binding::LiteralFilter { datatype, range, pattern }, Some(Value::Literal(l))) => {
                check_literal(l, *datatype, pattern.as_deref(), range.as_ref()).is_none()
            }
            _ => false,
        }
    }

    fn check(&self, slot: &str, constraint: &Constraint, terms: &TermRegistry) -> Result<()> {
        let incompatible = |reason: String| Err(Error::IncompatibleBinding { slot: slot.to_owned(), reason });
        match (self, constraint) {
            (Binding::Unbound, _) => Ok(()),
            (Binding::Resource { upri }, Constraint::Resource { class }) => match terms.get(upri) {
                None => incompatible(format!("{upri} is not a registered term")),
                Some(t) if !terms.satisfies_class(&t.resource(), class) => {
                    incompatible(format!("{upri} does not fall under {class}"))
                }
                Some(_) => Ok(()),
            },
            (
                Binding::SomeInstanceOf { class: c } | Binding::EveryInstanceOf { class: c } | Binding::Class { class: c },
                Constraint::Resource { class },
            ) => match terms.get(c) {
                Some(t) if t.kind == TermKind::ClassTerm => {
                    if terms.is_subclass_of(c, class)? {
                        Ok(())
                    } else {
                        incompatible(format!("{c} is not a subclass of {class}"))
                    }
                }
                _ => incompatible(format!("{c} is not a registered class term")),
            },
            (Binding::Literal { lexical, datatype }, Constraint::Literal { datatype: slot_type, .. }) => {
                if datatype != slot_type {
                    return incompatible(format!("expected a {slot_type} literal, found {datatype}"));
                }
                LiteralValue::new(lexical.clone(), *datatype).map(|_| ())
            }
            (Binding::LiteralFilter { datatype, range, pattern }, Constraint::Literal { datatype: slot_type, .. }) => {
                if datatype != slot_type {
                    return incompatible(format!("expected a {slot_type} filter, found {datatype}"));
                }
                if range.is_some() && !datatype.is_numeric() {
                    return incompatible(format!("range filter on non-numeric {datatype}"));
                }
                if let Some(p) = pattern {
                    if regex::Regex::new(p).is_err() {
                        return incompatible(format!("bad pattern /{p}/"));
                    }
                }
                Ok(())
            }
            (b, Constraint::Resource { .. }) => incompatible(format!("{} binding on a resource slot", b.name())),
            (b, Constraint::Literal { .. }) => incompatible(format!("{} binding on a literal slot", b.name())),
        }
    }

    fn describe(&self) -> String {
        match self {
            Binding::Resource { upri } => format!("= {upri}"),
            Binding::Literal { lexical, datatype } => format!("= \"{lexical}\"^^{datatype}"),
            Binding::SomeInstanceOf { class } => format!("some instance of {class}"),
            Binding::EveryInstanceOf { class } => format!("every instance of {class}"),
            Binding::Class { class } => format!("directly typed {class}"),
            Binding::LiteralFilter { datatype, range, pattern } => {
                let mut s = format!("{datatype}");
                if let Some(r) = range {
                    let _ = write!(s, " in {r}");
                }
                if let Some(p) = pattern {
                    let _ = write!(s, " matching /{p}/");
                }
                s
            }
            Binding::Unbound => "any".into(),
        }
    }
}

/// A question as submitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionSpec {
    pub schema: Upri,
    #[serde(default)]
    pub subject: Binding,
    #[serde(default)]
    pub positions: BTreeMap<String, Binding>,
    /// Ask about negation-tagged statements instead of positive ones.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub negated: bool,
}

/// A checked question. Unbound required positions have been replaced by
/// their implicit placeholder; unbound optional positions are absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionStatement {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upri: Option<Upri>,
    pub schema: Upri,
    pub subject: Binding,
    pub positions: BTreeMap<String, Binding>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub negated: bool,
    #[serde(default)]
    pub stored: bool,
}

impl QuestionStatement {
    /// Only exact values everywhere: the answer is yes or no.
    pub fn is_fully_specified(&self) -> bool {
        self.subject.is_exact() && self.positions.values().all(Binding::is_exact)
    }

    fn wants_universal(&self) -> bool {
        std::iter::once(&self.subject)
            .chain(self.positions.values())
            .any(|b| matches!(b, Binding::EveryInstanceOf { .. }))
    }

    /// Is `r` in scope and does it satisfy every binding?
    pub fn matches(&self, r: &StatementRecord, terms: &TermRegistry) -> bool {
        self.in_scope(r)
            && self.subject.matches(Some(&Value::Resource(r.subject.clone())), terms)
            && self.positions.iter().all(|(label, b)| b.matches(r.current_value(label), terms))
    }

    fn in_scope(&self, r: &StatementRecord) -> bool {
        r.current
            && !r.is_question()
            && r.statement_class == self.schema
            && r.classification.negation == self.negated
            && (!self.wants_universal() || r.classification.truth == TruthTag::Universal)
    }
}

pub fn build_question(spec: &QuestionSpec, schemas: &SchemaRegistry, terms: &TermRegistry) -> Result<QuestionStatement> {
    let schema = schemas.get(&spec.schema)?;
    spec.subject.check(&schema.subject.label, &Constraint::resource(schema.subject.class.clone()), terms)?;
    for (label, binding) in &spec.positions {
        let p = schema.position(label).ok_or_else(|| Error::UnknownPosition(label.clone()))?;
        binding.check(label, &p.constraint, terms)?;
    }
    let mut positions = BTreeMap::new();
    for p in &schema.positions {
        let binding = match spec.positions.get(&p.label) {
            Some(Binding::Unbound) | None if p.required => implicit_binding(&p.constraint),
            Some(Binding::Unbound) | None => continue,
            Some(b) => b.clone(),
        };
        positions.insert(p.label.clone(), binding);
    }
    Ok(QuestionStatement {
        upri: None,
        schema: schema.statement_class.clone(),
        subject: spec.subject.clone(),
        positions,
        negated: spec.negated,
        stored: false,
    })
}

fn implicit_binding(constraint: &Constraint) -> Binding {
    match constraint {
        Constraint::Resource { class } => Binding::SomeInstanceOf { class: class.clone() },
        Constraint::Literal { datatype, .. } => Binding::LiteralFilter { datatype: *datatype, range: None, pattern: None },
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Answer {
    Boolean(bool),
    Statements(Vec<Upri>),
    Tuples(Vec<BTreeMap<String, Upri>>),
}

/// How candidates are fetched before filtering.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Access {
    Subject(Upri),
    Value(String, Upri),
    ClassScan,
}

fn choose_access(q: &QuestionStatement) -> Access {
    if let Binding::Resource { upri } = &q.subject {
        return Access::Subject(upri.clone());
    }
    for (label, b) in &q.positions {
        if let Binding::Resource { upri } = b {
            return Access::Value(label.clone(), upri.clone());
        }
    }
    Access::ClassScan
}

/// Matching statements in store order.
pub fn matching<'a>(q: &QuestionStatement, store: &'a Store, terms: &TermRegistry) -> Vec<&'a StatementRecord> {
    let candidates = match choose_access(q) {
        Access::Subject(s) => store.candidates_by_subject(&q.schema, &s),
        Access::Value(label, v) => store.candidates_by_value(&q.schema, &label, &v),
        Access::ClassScan => store.candidates_by_class(&q.schema),
    };
    let mut hits: Vec<&StatementRecord> = candidates.into_iter().filter(|r| q.matches(r, terms)).collect();
    hits.sort_by_key(|r| r.seq);
    hits
}

/// Closed-world answer: yes/no for fully specified questions, the matching
/// statements otherwise.
pub fn evaluate(q: &QuestionStatement, store: &Store, terms: &TermRegistry) -> Answer {
    let hits = matching(q, store, terms);
    if q.is_fully_specified() {
        Answer::Boolean(!hits.is_empty())
    } else {
        Answer::Statements(hits.into_iter().map(|r| r.upri.clone()).collect())
    }
}

pub fn explain_plan(q: &QuestionStatement) -> String {
    let mut out = String::new();
    let _ = match choose_access(q) {
        Access::Subject(s) => writeln!(out, "index lookup (statement class, subject) = ({}, {s})", q.schema),
        Access::Value(label, v) => {
            writeln!(out, "index lookup (statement class, position, resource) = ({}, {label}, {v})", q.schema)
        }
        Access::ClassScan => writeln!(out, "class scan {}", q.schema),
    };
    let mut scope = String::from("filter scope: current, not a question");
    scope.push_str(if q.negated { ", negation-tagged" } else { ", not negation-tagged" });
    if q.wants_universal() {
        scope.push_str(", universal");
    }
    let _ = writeln!(out, "{scope}");
    if q.subject != Binding::Unbound {
        let _ = writeln!(out, "filter subject {}", q.subject.describe());
    }
    for (label, b) in &q.positions {
        let _ = writeln!(out, "filter {label} {}", b.describe());
    }
    let _ = writeln!(out, "answer {}", if q.is_fully_specified() { "boolean" } else { "statements" });
    out
}

/// One side of a join: a slot of a named sub-question.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SlotRef {
    pub question: String,
    pub slot: String,
}

/// Requires the two slots to hold the same value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Join {
    pub left: SlotRef,
    pub right: SlotRef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum Composite {
    Leaf {
        name: String,
        question: QuestionSpec,
    },
    And {
        children: Vec<Composite>,
        #[serde(default)]
        joins: Vec<Join>,
    },
    Or {
        children: Vec<Composite>,
        #[serde(default)]
        joins: Vec<Join>,
    },
}

/// A statement per sub-question name.
pub type Tuple = BTreeMap<String, Upri>;

#[derive(Debug, Clone, PartialEq)]
enum Plan {
    Leaf { name: String, question: QuestionStatement },
    And { children: Vec<Plan>, joins: Vec<Join> },
    Or { children: Vec<Plan> },
}

impl Plan {
    fn names(&self, out: &mut BTreeMap<String, Upri>) {
        match self {
            Plan::Leaf { name, question } => {
                out.insert(name.clone(), question.schema.clone());
            }
            Plan::And { children, .. } | Plan::Or { children } => children.iter().for_each(|c| c.names(out)),
        }
    }
}

fn compile(node: &Composite, schemas: &SchemaRegistry, terms: &TermRegistry) -> Result<Plan> {
    match node {
        Composite::Leaf { name, question } => {
            if name.is_empty() {
                return Err(Error::IncompatibleJoin("sub-questions need a name".into()));
            }
            Ok(Plan::Leaf { name: name.clone(), question: build_question(question, schemas, terms)? })
        }
        Composite::Or { children, joins } => {
            if !joins.is_empty() {
                return Err(Error::IncompatibleJoin("joins are only meaningful under AND".into()));
            }
            if children.is_empty() {
                return Err(Error::IncompatibleJoin("OR without operands".into()));
            }
            Ok(Plan::Or { children: children.iter().map(|c| compile(c, schemas, terms)).collect::<Result<_>>()? })
        }
        Composite::And { children, joins } => {
            if children.is_empty() {
                return Err(Error::IncompatibleJoin("AND without operands".into()));
            }
            let children: Vec<Plan> = children.iter().map(|c| compile(c, schemas, terms)).collect::<Result<_>>()?;
            let mut names = BTreeMap::new();
            children.iter().for_each(|c| c.names(&mut names));
            for j in joins {
                let left = join_constraint(&j.left, &names, schemas)?;
                let right = join_constraint(&j.right, &names, schemas)?;
                check_join_types(&left, &right, terms)
                    .map_err(|reason| Error::IncompatibleJoin(format!("{}.{} ~ {}.{}: {reason}", j.left.question, j.left.slot, j.right.question, j.right.slot)))?;
            }
            Ok(Plan::And { children, joins: joins.clone() })
        }
    }
}

fn join_constraint(side: &SlotRef, names: &BTreeMap<String, Upri>, schemas: &SchemaRegistry) -> Result<Constraint> {
    let schema_id = names
        .get(&side.question)
        .ok_or_else(|| Error::IncompatibleJoin(format!("no sub-question named {}", side.question)))?;
    let schema: &ReferenceSchema = schemas.get(schema_id)?;
    if side.slot == SUBJECT_SLOT {
        return Ok(Constraint::resource(schema.subject.class.clone()));
    }
    schema
        .position(&side.slot)
        .map(|p| p.constraint.clone())
        .ok_or_else(|| Error::IncompatibleJoin(format!("{} has no slot {}", side.question, side.slot)))
}

fn check_join_types(a: &Constraint, b: &Constraint, terms: &TermRegistry) -> std::result::Result<(), String> {
    match (a, b) {
        (Constraint::Resource { class: x }, Constraint::Resource { class: y }) => {
            let related = terms.is_subclass_of(x, y).unwrap_or(false) || terms.is_subclass_of(y, x).unwrap_or(false);
            if related {
                Ok(())
            } else {
                Err(format!("classes {x} and {y} are unrelated"))
            }
        }
        (Constraint::Literal { datatype: x, .. }, Constraint::Literal { datatype: y, .. }) if x == y => Ok(()),
        (Constraint::Literal { datatype: x, .. }, Constraint::Literal { datatype: y, .. }) => {
            Err(format!("datatypes {x} and {y} differ"))
        }
        _ => Err("cannot join a resource slot with a literal slot".into()),
    }
}

fn slot_value(r: &StatementRecord, slot: &str) -> Option<Value> {
    if slot == SUBJECT_SLOT {
        Some(Value::Resource(r.subject.clone()))
    } else {
        r.current_value(slot).cloned()
    }
}

fn join_holds(t: &Tuple, j: &Join, store: &Store) -> bool {
    let value = |side: &SlotRef| {
        t.get(&side.question)
            .and_then(|id| store.get_any(id).ok())
            .and_then(|r| slot_value(r, &side.slot))
    };
    match (value(&j.left), value(&j.right)) {
        (Some(a), Some(b)) => a.same_value(&b),
        _ => false,
    }
}

fn run(plan: &Plan, store: &Store, terms: &TermRegistry) -> BTreeSet<Tuple> {
    match plan {
        Plan::Leaf { name, question } => matching(question, store, terms)
            .into_iter()
            .map(|r| Tuple::from([(name.clone(), r.upri.clone())]))
            .collect(),
        Plan::Or { children } => children.iter().flat_map(|c| run(c, store, terms)).collect(),
        Plan::And { children, joins } => {
            let mut acc: BTreeSet<Tuple> = BTreeSet::from([Tuple::new()]);
            for child in children {
                let right = run(child, store, terms);
                acc = acc
                    .iter()
                    .flat_map(|l| right.iter().filter_map(move |r| natural_join(l, r)))
                    .collect();
                if acc.is_empty() {
                    break;
                }
            }
            acc.into_iter().filter(|t| joins.iter().all(|j| join_holds(t, j, store))).collect()
        }
    }
}

/// Merges two tuples that agree on every shared name.
fn natural_join(a: &Tuple, b: &Tuple) -> Option<Tuple> {
    if b.iter().any(|(k, v)| a.get(k).is_some_and(|w| w != v)) {
        return None;
    }
    let mut out = a.clone();
    out.extend(b.iter().map(|(k, v)| (k.clone(), v.clone())));
    Some(out)
}

/// AND is a natural join on shared sub-question names plus the declared
/// joins; OR is set union. Tuples come back sorted.
pub fn evaluate_composite(node: &Composite, schemas: &SchemaRegistry, store: &Store, terms: &TermRegistry) -> Result<Vec<Tuple>> {
    let plan = compile(node, schemas, terms)?;
    Ok(run(&plan, store, terms).into_iter().collect())
}

pub fn explain_composite(node: &Composite, schemas: &SchemaRegistry, terms: &TermRegistry) -> Result<String> {
    let plan = compile(node, schemas, terms)?;
    let mut out = String::new();
    describe_plan(&plan, 0, &mut out);
    Ok(out)
}

fn describe_plan(plan: &Plan, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    match plan {
        Plan::Leaf { name, question } => {
            let _ = writeln!(out, "{pad}question {name}:");
            for line in explain_plan(question).lines() {
                let _ = writeln!(out, "{pad}  {line}");
            }
        }
        Plan::Or { children } => {
            let _ = writeln!(out, "{pad}union of {} branches", children.len());
            children.iter().for_each(|c| describe_plan(c, depth + 1, out));
        }
        Plan::And { children, joins } => {
            let _ = writeln!(out, "{pad}join of {} operands, left to right", children.len());
            children.iter().for_each(|c| describe_plan(c, depth + 1, out));
            let _ = writeln!(out, "{pad}natural join on shared sub-question names");
            for j in joins {
                let _ = writeln!(out, "{pad}join key {}.{} = {}.{}", j.left.question, j.left.slot, j.right.question, j.right.slot);
            }
        }
    }
}

/// A question document: a single question or a composite tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QueryDocument {
    Composite { composite: Composite },
    Single(QuestionSpec),
}

/// Resource standing in for a placeholder when a question is stored as a
/// statement; `None` for bindings that have no value form.
pub fn placeholder_value(binding: &Binding, fresh: &mut dyn FnMut() -> Upri, terms: &TermRegistry) -> Option<Value> {
    match binding {
        Binding::Resource { upri } => {
            Some(Value::Resource(terms.get(upri).map(|t| t.resource()).unwrap_or_else(|| Resource::individual(upri.clone()))))
        }
        Binding::Literal { lexical, datatype } => {
            Some(Value::Literal(LiteralValue { lexical: lexical.clone(), datatype: *datatype }))
        }
        Binding::SomeInstanceOf { class } => Some(Value::resource(fresh(), ResourceKind::SomeInstance { of: class.clone() })),
        Binding::EveryInstanceOf { class } => Some(Value::resource(fresh(), ResourceKind::EveryInstance { of: class.clone() })),
        Binding::Class { class } => Some(Value::Resource(Resource::class(class.clone()))),
        Binding::LiteralFilter { .. } | Binding::Unbound => None,
    }
}
