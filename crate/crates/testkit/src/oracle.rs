//! Brute-force reference answers. Everything here reads raw records and the
//! bundled term document directly, never the registries' indexes.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rosetta_kb::model::{Datatype, LiteralValue, Resource, ResourceKind, Upri, Value};
use rosetta_kb::query::{Binding, Composite, Join, QuestionSpec, Tuple};
use rosetta_kb::schema::{NumericRange, Paradigm, ReferenceSchema};
use rosetta_kb::store::{StatementRecord, TruthTag};
use rosetta_kb::terms::{TermKind, TermsDocument};

/// Parent edges and kinds of every fixture term.
#[derive(Debug, Clone, Default)]
pub struct Taxonomy {
    parents: BTreeMap<Upri, BTreeSet<Upri>>,
    kinds: BTreeMap<Upri, TermKind>,
}

impl Taxonomy {
    pub fn from_document(doc: &TermsDocument) -> Self {
        let mut t = Taxonomy::default();
        for term in &doc.terms {
            t.parents.insert(term.upri.clone(), term.parents.clone());
            t.kinds.insert(term.upri.clone(), term.kind);
        }
        t
    }

    /// `u` and everything reachable over parent edges.
    pub fn closure(&self, u: &Upri) -> BTreeSet<Upri> {
        let mut seen = BTreeSet::from([u.clone()]);
        let mut queue = VecDeque::from([u.clone()]);
        while let Some(x) = queue.pop_front() {
            for p in self.parents.get(&x).into_iter().flatten() {
                if seen.insert(p.clone()) {
                    queue.push_back(p.clone());
                }
            }
        }
        seen
    }

    pub fn is_subclass(&self, a: &Upri, b: &Upri) -> bool {
        self.closure(a).contains(b)
    }

    /// Is the resource an instance (real or placeholder) of `class`?
    pub fn instance_of(&self, r: &Resource, class: &Upri) -> bool {
        match &r.kind {
            ResourceKind::NamedIndividual => {
                self.parents.get(&r.upri).into_iter().flatten().any(|p| self.is_subclass(p, class))
            }
            ResourceKind::SomeInstance { of } | ResourceKind::EveryInstance { of } => self.is_subclass(of, class),
            _ => false,
        }
    }

    fn directly_typed(&self, r: &Resource, class: &Upri) -> bool {
        match &r.kind {
            ResourceKind::NamedIndividual => self.parents.get(&r.upri).is_some_and(|p| p.contains(class)),
            ResourceKind::SomeInstance { of } | ResourceKind::EveryInstance { of } => of == class,
            _ => false,
        }
    }

    pub fn kind(&self, u: &Upri) -> Option<TermKind> {
        self.kinds.get(u).copied()
    }
}

/// Current value per label, read from the raw links or position instances.
pub fn current_values(r: &StatementRecord) -> BTreeMap<String, Value> {
    match r.paradigm {
        Paradigm::Light => r.links.iter().map(|l| (l.label.clone(), l.value.clone())).collect(),
        Paradigm::Full => r.positions.iter().filter(|p| p.current).map(|p| (p.label.clone(), p.value.clone())).collect(),
    }
}

fn decimal(l: &LiteralValue) -> Option<f64> {
    matches!(l.datatype, Datatype::Decimal | Datatype::Integer).then(|| l.lexical.parse().ok()).flatten()
}

pub fn same_value(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Resource(x), Value::Resource(y)) => x.upri == y.upri,
        (Value::Literal(x), Value::Literal(y)) => {
            x.datatype == y.datatype
                && match (decimal(x), decimal(y)) {
                    (Some(p), Some(q)) => p == q,
                    _ => x.lexical == y.lexical,
                }
        }
        _ => false,
    }
}

fn in_range(x: f64, r: &NumericRange) -> bool {
    let above = match r.min {
        Some(m) if r.min_exclusive => x > m,
        Some(m) => x >= m,
        None => true,
    };
    let below = match r.max {
        Some(m) if r.max_exclusive => x < m,
        Some(m) => x <= m,
        None => true,
    };
    above && below
}

/// Does the slot value satisfy the binding? Pattern filters are not
/// generated by the workloads and are treated as unsupported.
pub fn binding_holds(tax: &Taxonomy, b: &Binding, v: Option<&Value>) -> bool {
    let Some(v) = v else { return matches!(b, Binding::Unbound) };
    match (b, v) {
        (Binding::Unbound, _) => true,
        (Binding::Resource { upri }, Value::Resource(r)) => &r.upri == upri,
        (Binding::Literal { lexical, datatype }, Value::Literal(_)) => {
            same_value(v, &Value::Literal(LiteralValue { lexical: lexical.clone(), datatype: *datatype }))
        }
        (Binding::SomeInstanceOf { class }, Value::Resource(r)) => tax.instance_of(r, class),
        (Binding::EveryInstanceOf { class }, Value::Resource(r)) => match &r.kind {
            ResourceKind::EveryInstance { of } => of == class,
            ResourceKind::ClassTerm => &r.upri == class,
            _ => false,
        },
        (Binding::Class { class }, Value::Resource(r)) => tax.directly_typed(r, class),
        (Binding::LiteralFilter { datatype, range, pattern }, Value::Literal(l)) => {
            assert!(pattern.is_none(), "oracle does not evaluate patterns");
            l.datatype == *datatype && range.as_ref().is_none_or(|r| decimal(l).is_some_and(|x| in_range(x, r)))
        }
        _ => false,
    }
}

fn is_exact(b: &Binding) -> bool {
    matches!(b, Binding::Resource { .. } | Binding::Literal { .. })
}

/// Does the record answer the question? Unbound positions accept anything,
/// including absence.
pub fn question_matches(tax: &Taxonomy, q: &QuestionSpec, r: &StatementRecord) -> bool {
    let universal = std::iter::once(&q.subject)
        .chain(q.positions.values())
        .any(|b| matches!(b, Binding::EveryInstanceOf { .. }));
    if !r.current
        || r.classification.question
        || r.statement_class != q.schema
        || r.classification.negation != q.negated
        || (universal && r.classification.truth != TruthTag::Universal)
    {
        return false;
    }
    let values = current_values(r);
    binding_holds(tax, &q.subject, Some(&Value::Resource(r.subject.clone())))
        && q.positions.iter().all(|(l, b)| binding_holds(tax, b, values.get(l)))
}

/// Exact subject and exact values for every required position and every
/// position mentioned.
pub fn is_fully_specified(q: &QuestionSpec, schema: &ReferenceSchema) -> bool {
    is_exact(&q.subject)
        && schema.positions.iter().all(|p| match q.positions.get(&p.label) {
            Some(b) => is_exact(b) || (!p.required && *b == Binding::Unbound),
            None => !p.required,
        })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleAnswer {
    Boolean(bool),
    Statements(BTreeSet<Upri>),
}

pub fn answer(tax: &Taxonomy, q: &QuestionSpec, schema: &ReferenceSchema, records: &[&StatementRecord]) -> OracleAnswer {
    let hits: BTreeSet<Upri> = records.iter().filter(|r| question_matches(tax, q, r)).map(|r| r.upri.clone()).collect();
    if is_fully_specified(q, schema) {
        OracleAnswer::Boolean(!hits.is_empty())
    } else {
        OracleAnswer::Statements(hits)
    }
}

fn slot(r: &StatementRecord, slot: &str) -> Option<Value> {
    if slot == "subject" {
        Some(Value::Resource(r.subject.clone()))
    } else {
        current_values(r).remove(slot)
    }
}

/// Tuples answering a composite: AND is every consistent combination of
/// the children's tuples that satisfies the joins, OR is the union.
pub fn composite(tax: &Taxonomy, node: &Composite, records: &[&StatementRecord]) -> BTreeSet<Tuple> {
    match node {
        Composite::Leaf { name, question } => records
            .iter()
            .filter(|r| question_matches(tax, question, r))
            .map(|r| Tuple::from([(name.clone(), r.upri.clone())]))
            .collect(),
        Composite::Or { children, .. } => children.iter().flat_map(|c| composite(tax, c, records)).collect(),
        Composite::And { children, joins } => {
            let parts: Vec<BTreeSet<Tuple>> = children.iter().map(|c| composite(tax, c, records)).collect();
            let mut out = BTreeSet::new();
            product(&parts, 0, Tuple::new(), &mut |t| {
                if joins.iter().all(|j| join_holds(j, &t, records)) {
                    out.insert(t);
                }
            });
            out
        }
    }
}

fn product(parts: &[BTreeSet<Tuple>], i: usize, acc: Tuple, emit: &mut dyn FnMut(Tuple)) {
    if i == parts.len() {
        emit(acc);
        return;
    }
    for t in &parts[i] {
        let consistent = t.iter().all(|(k, v)| acc.get(k).is_none_or(|w| w == v));
        if consistent {
            let mut next = acc.clone();
            next.extend(t.clone());
            product(parts, i + 1, next, emit);
        }
    }
}

fn join_holds(j: &Join, t: &Tuple, records: &[&StatementRecord]) -> bool {
    let value = |question: &str, s: &str| {
        let id = t.get(question)?;
        let r = records.iter().find(|r| &r.upri == id)?;
        slot(r, s)
    };
    match (value(&j.left.question, &j.left.slot), value(&j.right.question, &j.right.slot)) {
        (Some(a), Some(b)) => same_value(&a, &b),
        _ => false,
    }
}
