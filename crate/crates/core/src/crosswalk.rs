//! Crosswalks between a reference schema and a foreign target: a graph
//! template, a CSV table, or a JSON tree. One definition drives both export
//! and import.

use std::collections::{BTreeMap, BTreeSet};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{canonical_serialize, content_hash, LiteralValue, Resource, ResourceKind, Snapshot, Upri, Value};
use crate::schema::{Constraint, DerivedProperty, ReferenceSchema, SchemaRegistry, SUBJECT_SLOT};
use crate::store::StatementInput;
use crate::terms::{MappingKind, TermKind, TermRegistry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetKind {
    GraphTemplate,
    Tabular,
    Tree,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetDescriptor {
    pub name: String,
    pub kind: TargetKind,
    pub vocabulary: String,
}

/// How a resource is written into the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    #[default]
    Upri,
    Label,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alignment {
    /// `subject` or a position label.
    pub source_slot: String,
    /// Anchor name (graph), column (tabular) or dotted path (tree).
    pub target_path: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub term_translate: bool,
    #[serde(default, skip_serializing_if = "is_default_encoding")]
    pub encode: Encoding,
}

fn is_default_encoding(e: &Encoding) -> bool {
    *e == Encoding::Upri
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaffoldNode {
    pub id: String,
    pub label: String,
    pub class: String,
}

/// An edge of the scaffold. Endpoints are scaffold node ids or `@anchor`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaffoldEdge {
    pub from: String,
    pub rel: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphScaffold {
    /// Scaffold node carrying the predicate, if the target has one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root: Option<String>,
    #[serde(default)]
    pub nodes: Vec<ScaffoldNode>,
    pub edges: Vec<ScaffoldEdge>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabularScaffold {
    pub columns: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub constants: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct TreeScaffold {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub constants: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scaffold {
    Graph(GraphScaffold),
    Tabular(TabularScaffold),
    Tree(TreeScaffold),
}

impl Scaffold {
    fn kind(&self) -> TargetKind {
        match self {
            Scaffold::Graph(_) => TargetKind::GraphTemplate,
            Scaffold::Tabular(_) => TargetKind::Tabular,
            Scaffold::Tree(_) => TargetKind::Tree,
        }
    }
}

/// A crosswalk as written in a definition file; `id` and `source_schema`
/// may be supplied by the caller instead.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrosswalkSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<Upri>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_schema: Option<Upri>,
    pub target: TargetDescriptor,
    pub alignments: Vec<Alignment>,
    pub scaffold: Scaffold,
}

impl CrosswalkSpec {
    pub fn from_yaml(text: &str) -> Result<Self> {
        Ok(serde_yaml::from_str(text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Crosswalk {
    pub id: Upri,
    pub source_schema: Upri,
    pub target: TargetDescriptor,
    pub alignments: Vec<Alignment>,
    pub scaffold: Scaffold,
}

impl Crosswalk {
    pub fn from_spec(spec: CrosswalkSpec, id: Upri, source_schema: Upri) -> Self {
        Crosswalk {
            id: spec.id.unwrap_or(id),
            source_schema: spec.source_schema.unwrap_or(source_schema),
            target: spec.target,
            alignments: spec.alignments,
            scaffold: spec.scaffold,
        }
    }

    pub fn to_yaml(&self) -> Result<String> {
        Ok(serde_yaml::to_string(self)?)
    }

    fn alignment(&self, slot: &str) -> Option<&Alignment> {
        self.alignments.iter().find(|a| a.source_slot == slot)
    }

    /// Structural check against the source schema.
    pub fn check(&self, schema: &ReferenceSchema) -> Result<()> {
        if self.scaffold.kind() != self.target.kind {
            return Err(Error::InvalidScaffold(format!(
                "scaffold shape does not fit a {:?} target",
                self.target.kind
            )));
        }
        let mut slots = BTreeSet::new();
        let mut paths = BTreeSet::new();
        for a in &self.alignments {
            let constraint = slot_constraint(schema, &a.source_slot)?;
            if !slots.insert(a.source_slot.as_str()) {
                return Err(Error::DuplicateAlignment(a.source_slot.clone()));
            }
            if !paths.insert(a.target_path.as_str()) {
                return Err(Error::DuplicateAlignment(a.target_path.clone()));
            }
            if a.target_path.is_empty() {
                return Err(Error::InvalidScaffold(format!("empty target path for {}", a.source_slot)));
            }
            if (a.term_translate || a.encode == Encoding::Label) && constraint.class().is_none() {
                return Err(Error::InvalidScaffold(format!(
                    "{} is a literal slot; term translation and label encoding apply to resources only",
                    a.source_slot
                )));
            }
        }
        if !slots.contains(SUBJECT_SLOT) {
            return Err(Error::UncoveredRequiredSlot(SUBJECT_SLOT.into()));
        }
        for required in schema.required_labels() {
            if !slots.contains(required) {
                return Err(Error::UncoveredRequiredSlot(required.into()));
            }
        }
        match &self.scaffold {
            Scaffold::Graph(g) => check_graph(g, &paths),
            Scaffold::Tabular(t) => check_table(t, &paths),
            Scaffold::Tree(t) => check_tree(t, &paths),
        }
    }
}

fn slot_constraint(schema: &ReferenceSchema, slot: &str) -> Result<Constraint> {
    if slot == SUBJECT_SLOT {
        return Ok(Constraint::resource(schema.subject.class.clone()));
    }
    schema
        .position(slot)
        .map(|p| p.constraint.clone())
        .ok_or_else(|| Error::UnknownSlot(slot.to_owned()))
}

fn anchor(endpoint: &str) -> Option<&str> {
    endpoint.strip_prefix('@')
}

fn check_graph(g: &GraphScaffold, paths: &BTreeSet<&str>) -> Result<()> {
    let mut ids = BTreeSet::new();
    for n in &g.nodes {
        if n.id.is_empty() || n.id.starts_with('@') || !ids.insert(n.id.as_str()) {
            return Err(Error::InvalidScaffold(format!("bad or duplicate node id `{}`", n.id)));
        }
    }
    if let Some(root) = &g.root {
        if !ids.contains(root.as_str()) {
            return Err(Error::InvalidScaffold(format!("root `{root}` is not a scaffold node")));
        }
    }
    let mut used = BTreeSet::new();
    for e in &g.edges {
        for end in [&e.from, &e.to] {
            match anchor(end) {
                Some(a) if paths.contains(a) => {
                    used.insert(a);
                }
                Some(a) => return Err(Error::InvalidScaffold(format!("anchor @{a} has no alignment"))),
                None if ids.contains(end.as_str()) => {}
                None => return Err(Error::InvalidScaffold(format!("edge endpoint `{end}` is not a node"))),
            }
        }
    }
    if let Some(unused) = paths.iter().find(|p| !used.contains(*p)) {
        return Err(Error::InvalidScaffold(format!("alignment target @{unused} is not used by any edge")));
    }
    Ok(())
}

fn check_table(t: &TabularScaffold, paths: &BTreeSet<&str>) -> Result<()> {
    let columns: BTreeSet<&str> = t.columns.iter().map(String::as_str).collect();
    if columns.len() != t.columns.len() {
        return Err(Error::InvalidScaffold("duplicate column".into()));
    }
    for p in paths {
        if !columns.contains(p) {
            return Err(Error::InvalidScaffold(format!("column {p} is not declared")));
        }
    }
    for c in &t.columns {
        let aligned = paths.contains(c.as_str());
        let constant = t.constants.contains_key(c);
        if aligned == constant {
            return Err(Error::InvalidScaffold(format!("column {c} must be either aligned or constant")));
        }
    }
    if let Some(c) = t.constants.keys().find(|c| !columns.contains(c.as_str())) {
        return Err(Error::InvalidScaffold(format!("constant column {c} is not declared")));
    }
    Ok(())
}

fn check_tree(t: &TreeScaffold, paths: &BTreeSet<&str>) -> Result<()> {
    let all: Vec<&str> = paths.iter().copied().chain(t.constants.keys().map(String::as_str)).collect();
    for p in &all {
        if p.split('.').any(str::is_empty) {
            return Err(Error::InvalidScaffold(format!("bad path `{p}`")));
        }
    }
    for (i, a) in all.iter().enumerate() {
        for b in &all[i + 1..] {
            let clash = a == b || b.starts_with(&format!("{a}.")) || a.starts_with(&format!("{b}."));
            if clash {
                return Err(Error::InvalidScaffold(format!("paths `{a}` and `{b}` overlap")));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: String,
    pub label: String,
    pub class: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub from: String,
    pub rel: String,
    pub to: String,
}

/// Edge-list graph document.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDoc {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetDocument {
    Graph(GraphDoc),
    Table(String),
    Tree(serde_json::Value),
}

impl TargetDocument {
    /// Reads a document sent as JSON, interpreting it for the given kind.
    pub fn from_json(kind: TargetKind, value: serde_json::Value) -> Result<Self> {
        let mismatch = |e: String| Error::DocumentShapeMismatch(e);
        match kind {
            TargetKind::GraphTemplate => {
                serde_json::from_value(value).map(TargetDocument::Graph).map_err(|e| mismatch(e.to_string()))
            }
            TargetKind::Tabular => match value {
                serde_json::Value::String(s) => Ok(TargetDocument::Table(s)),
                _ => Err(mismatch("a tabular document must be CSV text".into())),
            },
            TargetKind::Tree => match value {
                v @ serde_json::Value::Object(_) => Ok(TargetDocument::Tree(v)),
                _ => Err(mismatch("a tree document must be a JSON object".into())),
            },
        }
    }

    /// Reads a document from file text.
    pub fn parse(kind: TargetKind, text: &str) -> Result<Self> {
        match kind {
            TargetKind::Tabular => Ok(TargetDocument::Table(text.to_owned())),
            _ => {
                let v: serde_json::Value =
                    serde_json::from_str(text).map_err(|e| Error::DocumentShapeMismatch(e.to_string()))?;
                Self::from_json(kind, v)
            }
        }
    }

    /// Text form: CSV as-is, JSON pretty-printed.
    pub fn to_text(&self) -> Result<String> {
        match self {
            TargetDocument::Table(s) => Ok(s.clone()),
            TargetDocument::Graph(g) => Ok(serde_json::to_string_pretty(g)?),
            TargetDocument::Tree(t) => Ok(serde_json::to_string_pretty(t)?),
        }
    }

    pub fn kind(&self) -> TargetKind {
        match self {
            TargetDocument::Graph(_) => TargetKind::GraphTemplate,
            TargetDocument::Table(_) => TargetKind::Tabular,
            TargetDocument::Tree(_) => TargetKind::Tree,
        }
    }

    pub fn as_graph(&self) -> Option<&GraphDoc> {
        match self {
            TargetDocument::Graph(g) => Some(g),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exported {
    pub kind: TargetKind,
    pub document: TargetDocument,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

fn slot_value<'a>(snapshot: &'a Snapshot, schema: &ReferenceSchema, slot: &str) -> Option<std::borrow::Cow<'a, Value>> {
    if slot == SUBJECT_SLOT || slot == schema.subject.label {
        Some(std::borrow::Cow::Owned(Value::Resource(snapshot.subject.clone())))
    } else {
        snapshot.positions.get(slot).map(std::borrow::Cow::Borrowed)
    }
}

/// An encoded slot value: the cell/leaf text plus the node label and class
/// used by graph targets.
struct Cell {
    text: String,
    label: String,
    class: String,
    literal: bool,
}

/// Encodes a value under an alignment; translated resources are looked up
/// in the target vocabulary.
fn encode_value(value: &Value, a: &Alignment, target: &TargetDescriptor, terms: &TermRegistry) -> Result<Cell> {
    match value {
        Value::Literal(l) => Ok(Cell {
            text: l.lexical.clone(),
            label: l.lexical.clone(),
            class: l.datatype.xsd_name().to_owned(),
            literal: true,
        }),
        Value::Resource(r) => {
            let upri = if a.term_translate {
                terms.resolve(&r.upri, &target.vocabulary, MappingKind::EquivalentClass).map_err(|_| {
                    Error::TermTranslationFailed { term: r.upri.clone(), vocabulary: target.vocabulary.clone() }
                })?
            } else {
                r.upri.clone()
            };
            let label = terms.label_of(&upri).map(str::to_owned).unwrap_or_else(|| upri.to_string());
            let text = match a.encode {
                Encoding::Upri => upri.to_string(),
                Encoding::Label => label.clone(),
            };
            Ok(Cell { text, label, class: resource_class(&upri, &r.kind, terms), literal: false })
        }
    }
}

fn resource_class(upri: &Upri, kind: &ResourceKind, terms: &TermRegistry) -> String {
    match kind {
        ResourceKind::SomeInstance { of } | ResourceKind::EveryInstance { of } => of.to_string(),
        _ => match terms.get(upri) {
            Some(t) if t.kind == TermKind::ClassTerm => "owl:Class".into(),
            Some(t) if t.kind == TermKind::PropertyTerm => "owl:ObjectProperty".into(),
            Some(t) => t.parents.iter().next().map(Upri::to_string).unwrap_or_else(|| "owl:NamedIndividual".into()),
            None => "owl:NamedIndividual".into(),
        },
    }
}

/// Writes a snapshot into the crosswalk's target. Output depends only on
/// the snapshot, so identical statements give byte-identical documents.
pub fn export(crosswalk: &Crosswalk, schema: &ReferenceSchema, snapshot: &Snapshot, terms: &TermRegistry) -> Result<Exported> {
    if schema.statement_class != crosswalk.source_schema {
        return Err(Error::SchemaMismatch {
            expected: crosswalk.source_schema.clone(),
            actual: schema.statement_class.clone(),
        });
    }
    let mut warnings = Vec::new();
    for label in snapshot.positions.keys() {
        if crosswalk.alignment(label).is_none() {
            warnings.push(format!("{} has no slot for {label}; value dropped", crosswalk.target.name));
        }
    }
    let mut cells: IndexMap<&str, Cell> = IndexMap::new();
    for a in &crosswalk.alignments {
        if let Some(v) = slot_value(snapshot, schema, &a.source_slot) {
            cells.insert(a.target_path.as_str(), encode_value(&v, a, &crosswalk.target, terms)?);
        }
    }
    let document = match &crosswalk.scaffold {
        Scaffold::Graph(g) => TargetDocument::Graph(export_graph(g, crosswalk, &cells, &doc_prefix(snapshot, schema)?)),
        Scaffold::Tabular(t) => TargetDocument::Table(export_table(t, &cells)?),
        Scaffold::Tree(t) => TargetDocument::Tree(export_tree(t, &cells)),
    };
    Ok(Exported { kind: crosswalk.target.kind, document, warnings })
}

fn doc_prefix(snapshot: &Snapshot, schema: &ReferenceSchema) -> Result<String> {
    let bytes = canonical_serialize(snapshot, &schema.required_labels())?;
    Ok(format!("urn:rosetta:doc:{}", &content_hash(&bytes)[..16]))
}

fn export_graph(g: &GraphScaffold, crosswalk: &Crosswalk, cells: &IndexMap<&str, Cell>, prefix: &str) -> GraphDoc {
    let node_id = |end: &str| -> Option<String> {
        match anchor(end) {
            Some(a) => cells.get(a).map(|c| if c.literal { format!("{prefix}#{a}") } else { c.text.clone() }),
            None => Some(format!("{prefix}#{end}")),
        }
    };
    let mut doc = GraphDoc::default();
    for n in &g.nodes {
        doc.nodes.push(GraphNode { id: format!("{prefix}#{}", n.id), label: n.label.clone(), class: n.class.clone() });
    }
    for a in &crosswalk.alignments {
        let Some(cell) = cells.get(a.target_path.as_str()) else { continue };
        let id = node_id(&format!("@{}", a.target_path)).expect("cell present");
        if !doc.nodes.iter().any(|n| n.id == id) {
            doc.nodes.push(GraphNode { id, label: cell.label.clone(), class: cell.class.clone() });
        }
    }
    for e in &g.edges {
        if let (Some(from), Some(to)) = (node_id(&e.from), node_id(&e.to)) {
            doc.edges.push(GraphEdge { from, rel: e.rel.clone(), to });
        }
    }
    doc
}

fn export_table(t: &TabularScaffold, cells: &IndexMap<&str, Cell>) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(&t.columns).map_err(csv_error)?;
    let row: Vec<&str> = t
        .columns
        .iter()
        .map(|c| {
            t.constants
                .get(c)
                .map(String::as_str)
                .or_else(|| cells.get(c.as_str()).map(|cell| cell.text.as_str()))
                .unwrap_or("")
        })
        .collect();
    w.write_record(&row).map_err(csv_error)?;
    let bytes = w.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
}

fn csv_error(e: csv::Error) -> Error {
    Error::DocumentShapeMismatch(e.to_string())
}

fn export_tree(t: &TreeScaffold, cells: &IndexMap<&str, Cell>) -> serde_json::Value {
    let mut root = serde_json::Map::new();
    let entries = t
        .constants
        .iter()
        .map(|(p, v)| (p.as_str(), v.as_str()))
        .chain(cells.iter().map(|(p, cell)| (*p, cell.text.as_str())));
    for (path, text) in entries {
        let mut segments: Vec<&str> = path.split('.').collect();
        let leaf = segments.pop().expect("split yields at least one segment");
        let mut node = &mut root;
        for s in segments {
            node = node
                .entry(s.to_owned())
                .or_insert_with(|| serde_json::Value::Object(serde_json::Map::new()))
                .as_object_mut()
                .expect("paths do not overlap");
        }
        node.insert(leaf.to_owned(), serde_json::Value::String(text.to_owned()));
    }
    serde_json::Value::Object(root)
}

/// Reads a target document back into reference-schema input. Translated
/// terms are mapped back into the reference vocabulary.
pub fn decode(
    crosswalk: &Crosswalk,
    schema: &ReferenceSchema,
    document: &TargetDocument,
    terms: &TermRegistry,
) -> Result<StatementInput> {
    if document.kind() != crosswalk.target.kind {
        return Err(Error::DocumentShapeMismatch(format!(
            "expected a {:?} document, found {:?}",
            crosswalk.target.kind,
            document.kind()
        )));
    }
    let cells = match (&crosswalk.scaffold, document) {
        (Scaffold::Graph(g), TargetDocument::Graph(d)) => decode_graph(g, crosswalk, schema, d)?,
        (Scaffold::Tabular(t), TargetDocument::Table(text)) => decode_table(t, text)?,
        (Scaffold::Tree(t), TargetDocument::Tree(v)) => decode_tree(t, crosswalk, v)?,
        _ => return Err(Error::DocumentShapeMismatch("scaffold and document kinds differ".into())),
    };
    let mut subject = None;
    let mut bindings = BTreeMap::new();
    for a in &crosswalk.alignments {
        let Some(text) = cells.get(a.target_path.as_str()) else { continue };
        let constraint = slot_constraint(schema, &a.source_slot)?;
        let value = match &constraint {
            Constraint::Literal { datatype, .. } => {
                Value::Literal(LiteralValue { lexical: text.clone(), datatype: *datatype })
            }
            Constraint::Resource { class } => Value::Resource(decode_resource(text, a, class, crosswalk, terms)?),
        };
        if a.source_slot == SUBJECT_SLOT {
            match value {
                Value::Resource(r) => subject = Some(r),
                Value::Literal(_) => unreachable!("subject slots are resource-constrained"),
            }
        } else {
            bindings.insert(a.source_slot.clone(), value);
        }
    }
    let subject = subject.ok_or_else(|| Error::DocumentShapeMismatch("document carries no subject".into()))?;
    Ok(StatementInput { schema: schema.statement_class.clone(), subject, bindings })
}

fn decode_resource(
    text: &str,
    a: &Alignment,
    slot_class: &Upri,
    crosswalk: &Crosswalk,
    terms: &TermRegistry,
) -> Result<Resource> {
    let found = match a.encode {
        Encoding::Upri => Upri::new(text).map_err(|_| Error::DocumentShapeMismatch(format!("`{text}` is not an identifier")))?,
        Encoding::Label => {
            let vocabulary = a.term_translate.then_some(crosswalk.target.vocabulary.as_str());
            let candidates: Vec<_> = terms.find_by_label(text, vocabulary).collect();
            let fitting: Vec<_> = if a.term_translate {
                candidates
            } else {
                candidates.into_iter().filter(|t| terms.satisfies_class(&t.resource(), slot_class)).collect()
            };
            let individuals: Vec<_> = fitting.iter().filter(|t| t.kind == TermKind::NamedIndividual).collect();
            let pick = match (individuals.len(), fitting.len()) {
                (1, _) => individuals[0],
                (0, 1) => &fitting[0],
                (_, n) => return Err(Error::AmbiguousLabel { label: text.to_owned(), candidates: n }),
            };
            pick.upri.clone()
        }
    };
    let upri = if a.term_translate {
        terms
            .resolve(&found, terms.reference_vocabulary(), MappingKind::EquivalentClass)
            .map_err(|_| Error::TermTranslationFailed { term: found.clone(), vocabulary: terms.reference_vocabulary().to_owned() })?
    } else {
        found
    };
    let record = terms.term(&upri)?;
    Ok(record.resource())
}

/// Binds scaffold names and anchors to document nodes by repeatedly
/// matching scaffold edges whose relation occurs exactly once among the
/// still-compatible document edges.
fn decode_graph(
    g: &GraphScaffold,
    crosswalk: &Crosswalk,
    schema: &ReferenceSchema,
    doc: &GraphDoc,
) -> Result<BTreeMap<String, String>> {
    let nodes: BTreeMap<&str, &GraphNode> = doc.nodes.iter().map(|n| (n.id.as_str(), n)).collect();
    let scaffold_class: BTreeMap<&str, &str> = g.nodes.iter().map(|n| (n.id.as_str(), n.class.as_str())).collect();
    let mut bound: BTreeMap<&str, &str> = BTreeMap::new();
    let fits = |name: &str, id: &str, bound: &BTreeMap<&str, &str>| -> bool {
        if let Some(b) = bound.get(name) {
            return *b == id;
        }
        match scaffold_class.get(name) {
            Some(class) => nodes.get(id).is_some_and(|n| n.class == *class),
            None => true,
        }
    };
    let mut pending: Vec<&ScaffoldEdge> = g.edges.iter().collect();
    loop {
        let mut progressed = false;
        pending.retain(|e| {
            let matches: Vec<&GraphEdge> = doc
                .edges
                .iter()
                .filter(|d| d.rel == e.rel && fits(&e.from, &d.from, &bound) && fits(&e.to, &d.to, &bound))
                .collect();
            if matches.len() == 1 {
                bound.insert(e.from.as_str(), matches[0].from.as_str());
                bound.insert(e.to.as_str(), matches[0].to.as_str());
                progressed = true;
                false
            } else {
                true
            }
        });
        if !progressed || pending.is_empty() {
            break;
        }
    }
    let mut cells = BTreeMap::new();
    for a in &crosswalk.alignments {
        let name = format!("@{}", a.target_path);
        match bound.get(name.as_str()) {
            Some(id) => {
                let literal = slot_constraint(schema, &a.source_slot)?.class().is_none();
                let text = if literal {
                    nodes.get(id).map(|n| n.label.clone()).ok_or_else(|| {
                        Error::DocumentShapeMismatch(format!("edge endpoint `{id}` has no node"))
                    })?
                } else if a.encode == Encoding::Label {
                    nodes.get(id).map(|n| n.label.clone()).unwrap_or_else(|| (*id).to_owned())
                } else {
                    (*id).to_owned()
                };
                cells.insert(a.target_path.clone(), text);
            }
            None => {
                let required = a.source_slot == SUBJECT_SLOT || schema.position(&a.source_slot).is_some_and(|p| p.required);
                if required {
                    return Err(Error::DocumentShapeMismatch(format!("no edge carries anchor {name}")));
                }
            }
        }
    }
    Ok(cells)
}

fn decode_table(t: &TabularScaffold, text: &str) -> Result<BTreeMap<String, String>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers().map_err(csv_error)?.iter().map(str::to_owned).collect();
    let rows: Vec<csv::StringRecord> = reader.records().collect::<std::result::Result<_, _>>().map_err(csv_error)?;
    let [row] = rows.as_slice() else {
        return Err(Error::DocumentShapeMismatch(format!("expected exactly one data row, found {}", rows.len())));
    };
    let mut cells = BTreeMap::new();
    for c in &t.columns {
        let i = header
            .iter()
            .position(|h| h == c)
            .ok_or_else(|| Error::DocumentShapeMismatch(format!("missing column {c}")))?;
        let v = row.get(i).unwrap_or("").to_owned();
        match t.constants.get(c) {
            Some(expected) if *expected != v => {
                return Err(Error::DocumentShapeMismatch(format!("column {c} must be `{expected}`, found `{v}`")))
            }
            Some(_) => {}
            None if v.is_empty() => {}
            None => {
                cells.insert(c.clone(), v);
            }
        }
    }
    Ok(cells)
}

fn decode_tree(t: &TreeScaffold, crosswalk: &Crosswalk, doc: &serde_json::Value) -> Result<BTreeMap<String, String>> {
    let lookup = |path: &str| -> Result<Option<String>> {
        let mut node = doc;
        for s in path.split('.') {
            match node.get(s) {
                Some(n) => node = n,
                None => return Ok(None),
            }
        }
        match node {
            serde_json::Value::String(s) => Ok(Some(s.clone())),
            other => Err(Error::DocumentShapeMismatch(format!("`{path}` holds {other}, expected a string"))),
        }
    };
    for (path, expected) in &t.constants {
        if lookup(path)?.as_deref() != Some(expected.as_str()) {
            return Err(Error::DocumentShapeMismatch(format!("`{path}` must be `{expected}`")));
        }
    }
    let mut cells = BTreeMap::new();
    for a in &crosswalk.alignments {
        if let Some(v) = lookup(&a.target_path)? {
            cells.insert(a.target_path.clone(), v);
        }
    }
    Ok(cells)
}

/// Maps every resource that has a counterpart in the reference vocabulary
/// onto that counterpart.
pub fn normalize(input: &StatementInput, terms: &TermRegistry) -> StatementInput {
    let norm = |r: &Resource| -> Resource {
        terms
            .resolve(&r.upri, terms.reference_vocabulary(), MappingKind::EquivalentClass)
            .ok()
            .and_then(|u| terms.get(&u).map(|t| t.resource()))
            .unwrap_or_else(|| r.clone())
    };
    StatementInput {
        schema: input.schema.clone(),
        subject: norm(&input.subject),
        bindings: input
            .bindings
            .iter()
            .map(|(l, v)| {
                let v = match v {
                    Value::Resource(r) => Value::Resource(norm(r)),
                    other => other.clone(),
                };
                (l.clone(), v)
            })
            .collect(),
    }
}

/// Number of crosswalks needed to connect `n` schemata of one statement
/// type: every pair directly, or each one to the reference hub.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrosswalkCounts {
    pub pairwise: u64,
    pub hub: u64,
}

pub fn crosswalk_counts(n: u64) -> Result<CrosswalkCounts> {
    if n < 1 {
        return Err(Error::InvalidCount);
    }
    Ok(CrosswalkCounts { pairwise: n * (n - 1) / 2, hub: n })
}

/// Graph crosswalk between a reference schema and its derived OWL schema:
/// each position hangs off the subject by its derived property, or by a
/// per-slot relation when no property was derived for it.
pub fn owl_crosswalk(
    schema: &ReferenceSchema,
    class_label: &str,
    properties: &[DerivedProperty],
    vocabulary: &str,
) -> Result<Crosswalk> {
    let subject_anchor = format!("@{}", schema.subject.label);
    let mut alignments = vec![Alignment {
        source_slot: SUBJECT_SLOT.into(),
        target_path: schema.subject.label.clone(),
        term_translate: false,
        encode: Encoding::Upri,
    }];
    let mut edges = Vec::new();
    for p in &schema.positions {
        let rel = properties
            .iter()
            .find(|d| d.position == p.label)
            .map(|d| d.iri.to_string())
            .unwrap_or_else(|| format!("{}/slot/{}", schema.statement_class, p.label));
        alignments.push(Alignment {
            source_slot: p.label.clone(),
            target_path: p.label.clone(),
            term_translate: false,
            encode: Encoding::Upri,
        });
        edges.push(ScaffoldEdge { from: subject_anchor.clone(), rel, to: format!("@{}", p.label) });
    }
    Ok(Crosswalk {
        id: owl_crosswalk_id(&schema.statement_class)?,
        source_schema: schema.statement_class.clone(),
        target: TargetDescriptor {
            name: format!("{class_label} (OWL)"),
            kind: TargetKind::GraphTemplate,
            vocabulary: vocabulary.to_owned(),
        },
        alignments,
        scaffold: Scaffold::Graph(GraphScaffold { root: None, nodes: Vec::new(), edges }),
    })
}

pub fn owl_crosswalk_id(schema: &Upri) -> Result<Upri> {
    Upri::new(format!("{schema}/crosswalk/owl"))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrosswalkRegistry {
    crosswalks: IndexMap<Upri, Crosswalk>,
}

impl CrosswalkRegistry {
    pub fn get(&self, id: &Upri) -> Result<&Crosswalk> {
        self.crosswalks.get(id).ok_or_else(|| Error::UnknownCrosswalk(id.clone()))
    }

    pub fn contains(&self, id: &Upri) -> bool {
        self.crosswalks.contains_key(id)
    }

    pub fn for_schema<'a>(&'a self, schema: &'a Upri) -> impl Iterator<Item = &'a Crosswalk> + 'a {
        self.crosswalks.values().filter(move |c| &c.source_schema == schema)
    }

    pub fn all(&self) -> impl Iterator<Item = &Crosswalk> {
        self.crosswalks.values()
    }

    pub fn len(&self) -> usize {
        self.crosswalks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.crosswalks.is_empty()
    }

    pub fn check_define(&self, crosswalk: &Crosswalk, schemas: &SchemaRegistry) -> Result<()> {
        if self.crosswalks.contains_key(&crosswalk.id) {
            return Err(Error::UpriCollision(crosswalk.id.clone()));
        }
        crosswalk.check(schemas.get(&crosswalk.source_schema)?)
    }

    pub(crate) fn insert(&mut self, crosswalk: Crosswalk) {
        self.crosswalks.insert(crosswalk.id.clone(), crosswalk);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_follow_closed_forms() {
        assert_eq!(crosswalk_counts(8).unwrap(), CrosswalkCounts { pairwise: 28, hub: 8 });
        assert_eq!(crosswalk_counts(1).unwrap(), CrosswalkCounts { pairwise: 0, hub: 1 });
        assert_eq!(crosswalk_counts(5).unwrap(), CrosswalkCounts { pairwise: 10, hub: 5 });
        assert_eq!(crosswalk_counts(0), Err(Error::InvalidCount));
    }

    #[test]
    fn scaffold_kinds_are_distinguished() {
        let g: Scaffold = serde_yaml::from_str("edges: []").unwrap();
        assert!(matches!(g, Scaffold::Graph(_)));
        let t: Scaffold = serde_yaml::from_str("columns: [A]").unwrap();
        assert!(matches!(t, Scaffold::Tabular(_)));
        let tree: Scaffold = serde_yaml::from_str("constants: {a.b: x}").unwrap();
        assert!(matches!(tree, Scaffold::Tree(_)));
    }

    #[test]
    fn tree_paths_must_not_overlap() {
        let paths = BTreeSet::from(["a.b", "a.b.c"]);
        assert!(check_tree(&TreeScaffold::default(), &paths).is_err());
        let paths = BTreeSet::from(["a.b", "a.c"]);
        assert!(check_tree(&TreeScaffold::default(), &paths).is_ok());
    }

    #[test]
    fn tree_export_nests_paths() {
        let mut cells = IndexMap::new();
        cells.insert(
            "m.value",
            Cell { text: "1.5".into(), label: "1.5".into(), class: "xsd:decimal".into(), literal: true },
        );
        let t = TreeScaffold { constants: BTreeMap::from([("m.kind".to_owned(), "weight".to_owned())]) };
        let v = export_tree(&t, &cells);
        assert_eq!(v, serde_json::json!({"m": {"kind": "weight", "value": "1.5"}}));
    }
}
