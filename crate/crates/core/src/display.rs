//! Human-readable renderings of stored statements: text labels built from
//! `${LABEL}` templates, and mind-map graphs.

use std::collections::{BTreeMap, BTreeSet};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ResourceKind, Resource, Snapshot, Upri, Value};
use crate::schema::ReferenceSchema;
use crate::terms::TermRegistry;

/// One piece of a parsed template.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece<'a> {
    Text(&'a str),
    Var(&'a str),
}

fn parse(template: &str) -> Result<Vec<Piece<'_>>> {
    let mut pieces = Vec::new();
    let mut rest = template;
    while let Some(start) = rest.find("${") {
        if start > 0 {
            pieces.push(Piece::Text(&rest[..start]));
        }
        let after = &rest[start + 2..];
        let end = after
            .find('}')
            .ok_or_else(|| Error::MalformedTemplate(format!("unterminated variable in `{template}`")))?;
        let name = &after[..end];
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(Error::MalformedTemplate(format!("bad variable name `{name}`")));
        }
        pieces.push(Piece::Var(name));
        rest = &after[end + 1..];
    }
    if !rest.is_empty() {
        pieces.push(Piece::Text(rest));
    }
    Ok(pieces)
}

/// Variable names in order of appearance (with repeats).
pub fn template_variables(template: &str) -> Result<Vec<String>> {
    Ok(parse(template)?
        .into_iter()
        .filter_map(|p| match p {
            Piece::Var(v) => Some(v.to_owned()),
            Piece::Text(_) => None,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DynamicLabel {
    pub schema: Upri,
    pub name: String,
    pub template: String,
    /// Fragments of `template` dropped whole when their position is unbound.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub optional_segments: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub default: bool,
}

impl DynamicLabel {
    pub fn check(&self, schema: &ReferenceSchema) -> Result<()> {
        check_schema(&self.schema, schema, Error::TemplateSchemaMismatch)?;
        let vars = template_variables(&self.template)?;
        for v in &vars {
            if !schema.slot_labels().any(|l| l == v) {
                return Err(Error::UnknownVariable(v.clone()));
            }
        }
        for required in schema.required_labels() {
            if !vars.iter().any(|v| v == required) {
                return Err(Error::MalformedTemplate(format!("required position {required} is not referenced")));
            }
        }
        for (label, fragment) in &self.optional_segments {
            match schema.position(label) {
                None => return Err(Error::UnknownVariable(label.clone())),
                Some(p) if p.required => {
                    return Err(Error::MalformedTemplate(format!("{label} is required and cannot be elided")))
                }
                Some(_) => {}
            }
            if !self.template.contains(fragment.as_str()) {
                return Err(Error::MalformedTemplate(format!("segment `{fragment}` does not occur in the template")));
            }
            if !template_variables(fragment)?.iter().any(|v| v == label) {
                return Err(Error::MalformedTemplate(format!("segment `{fragment}` does not mention ${{{label}}}")));
            }
        }
        Ok(())
    }

    /// Substitutes current values. Segments of unbound optional positions are
    /// removed first; any other unbound variable renders empty and the
    /// surrounding whitespace is collapsed.
    pub fn render(&self, snapshot: &Snapshot, schema: &ReferenceSchema, terms: &TermRegistry) -> Result<String> {
        let mut template = self.template.clone();
        let mut elided = false;
        for (label, fragment) in &self.optional_segments {
            if !snapshot.positions.contains_key(label) {
                elided |= template.contains(fragment.as_str());
                template = template.replace(fragment.as_str(), "");
            }
        }
        let mut out = String::new();
        for piece in parse(&template)? {
            match piece {
                Piece::Text(t) => out.push_str(t),
                Piece::Var(v) if v == schema.subject.label => out.push_str(&resource_text(&snapshot.subject, terms)),
                Piece::Var(v) => match snapshot.positions.get(v) {
                    Some(value) => out.push_str(&value_text(value, terms)),
                    None => elided = true,
                },
            }
        }
        if elided {
            out = out.split_whitespace().collect::<Vec<_>>().join(" ");
        }
        Ok(out)
    }
}

fn check_schema(declared: &Upri, schema: &ReferenceSchema, mismatch: Error) -> Result<()> {
    if declared != &schema.statement_class {
        return Err(mismatch);
    }
    Ok(())
}

/// Term label of a resource; placeholders read "some X" / "every X".
pub fn resource_text(r: &Resource, terms: &TermRegistry) -> String {
    let label = |u: &Upri| terms.label_of(u).map(str::to_owned).unwrap_or_else(|| u.to_string());
    match &r.kind {
        ResourceKind::SomeInstance { of } => format!("some {}", label(of)),
        ResourceKind::EveryInstance { of } => format!("every {}", label(of)),
        _ => label(&r.upri),
    }
}

pub fn value_text(v: &Value, terms: &TermRegistry) -> String {
    match v {
        Value::Resource(r) => resource_text(r, terms),
        Value::Literal(l) => l.lexical.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MindMapPattern {
    pub schema: Upri,
    pub name: String,
    pub predicate_node_label: String,
    /// One label per slot: the subject edge and each position edge.
    pub edge_labels: BTreeMap<String, String>,
}

impl MindMapPattern {
    /// Predicate label in the middle, slot labels in lower case on the edges.
    pub fn default_for(schema: &ReferenceSchema) -> Self {
        Self {
            schema: schema.statement_class.clone(),
            name: "default".into(),
            predicate_node_label: schema.predicate_label.clone(),
            edge_labels: schema
                .slot_labels()
                .map(|l| (l.to_owned(), l.to_lowercase().replace('_', " ")))
                .collect(),
        }
    }

    pub fn check(&self, schema: &ReferenceSchema) -> Result<()> {
        check_schema(&self.schema, schema, Error::PatternSchemaMismatch)?;
        for key in self.edge_labels.keys() {
            if !schema.slot_labels().any(|l| l == key) {
                return Err(Error::UnknownVariable(key.clone()));
            }
        }
        for slot in schema.slot_labels() {
            if !self.edge_labels.contains_key(slot) {
                return Err(Error::MalformedTemplate(format!("no edge label for slot {slot}")));
            }
        }
        Ok(())
    }

    pub fn render(&self, statement: &Upri, snapshot: &Snapshot, schema: &ReferenceSchema, terms: &TermRegistry) -> MindMapDoc {
        let mut doc = MindMapDoc::default();
        let subject_id = snapshot.subject.upri.to_string();
        let predicate_id = format!("{statement}#predicate");
        doc.add_node(MindMapNode {
            id: subject_id.clone(),
            label: resource_text(&snapshot.subject, terms),
            role: NodeRole::Subject,
        });
        doc.add_node(MindMapNode { id: predicate_id.clone(), label: self.predicate_node_label.clone(), role: NodeRole::Predicate });
        doc.add_edge(MindMapEdge {
            from: subject_id,
            to: predicate_id.clone(),
            label: self.edge_labels[&schema.subject.label].clone(),
        });
        for p in &schema.positions {
            let Some(value) = snapshot.positions.get(&p.label) else { continue };
            let id = match value {
                Value::Resource(r) => r.upri.to_string(),
                Value::Literal(_) => format!("{statement}#{}", p.label),
            };
            doc.add_node(MindMapNode { id: id.clone(), label: value_text(value, terms), role: NodeRole::Object });
            doc.add_edge(MindMapEdge { from: predicate_id.clone(), to: id, label: self.edge_labels[&p.label].clone() });
        }
        doc
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeRole {
    Subject,
    Object,
    Predicate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MindMapNode {
    pub id: String,
    pub label: String,
    pub role: NodeRole,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MindMapEdge {
    pub from: String,
    pub to: String,
    pub label: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MindMapDoc {
    pub nodes: Vec<MindMapNode>,
    pub edges: Vec<MindMapEdge>,
}

impl MindMapDoc {
    /// Nodes are unique by id; the first occurrence wins.
    fn add_node(&mut self, node: MindMapNode) {
        if !self.nodes.iter().any(|n| n.id == node.id) {
            self.nodes.push(node);
        }
    }

    fn add_edge(&mut self, edge: MindMapEdge) {
        if !self.edges.contains(&edge) {
            self.edges.push(edge);
        }
    }

    /// Combines documents, sharing nodes that denote the same resource.
    pub fn merge<'a>(docs: impl IntoIterator<Item = &'a MindMapDoc>) -> MindMapDoc {
        let mut out = MindMapDoc::default();
        for d in docs {
            for n in &d.nodes {
                out.add_node(n.clone());
            }
            for e in &d.edges {
                out.add_edge(e.clone());
            }
        }
        out
    }

    pub fn node_ids(&self) -> BTreeSet<&str> {
        self.nodes.iter().map(|n| n.id.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Template {
    DynamicLabel(DynamicLabel),
    MindMapPattern(MindMapPattern),
}

impl Template {
    pub fn schema(&self) -> &Upri {
        match self {
            Template::DynamicLabel(l) => &l.schema,
            Template::MindMapPattern(p) => &p.schema,
        }
    }

    pub fn check(&self, schema: &ReferenceSchema) -> Result<()> {
        match self {
            Template::DynamicLabel(l) => l.check(schema),
            Template::MindMapPattern(p) => p.check(schema),
        }
    }
}

/// Identifier of the label registered from the wizard's last answer.
pub fn default_label_id(schema: &Upri) -> Result<Upri> {
    Upri::new(format!("{schema}/label/default"))
}

pub fn default_pattern_id(schema: &Upri) -> Result<Upri> {
    Upri::new(format!("{schema}/mindmap/default"))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateRegistry {
    templates: IndexMap<Upri, Template>,
}

impl TemplateRegistry {
    pub fn get(&self, id: &Upri) -> Result<&Template> {
        self.templates.get(id).ok_or_else(|| Error::UnknownTemplate(id.clone()))
    }

    pub fn contains(&self, id: &Upri) -> bool {
        self.templates.contains_key(id)
    }

    pub fn for_schema<'a>(&'a self, schema: &Upri) -> impl Iterator<Item = (&'a Upri, &'a Template)> + 'a {
        let schema = schema.clone();
        self.templates.iter().filter(move |(_, t)| t.schema() == &schema)
    }

    pub fn all(&self) -> impl Iterator<Item = (&Upri, &Template)> {
        self.templates.iter()
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    /// The default label of a schema, falling back to its first label.
    pub fn default_label(&self, schema: &Upri) -> Result<&DynamicLabel> {
        let labels = || {
            self.for_schema(schema).filter_map(|(_, t)| match t {
                Template::DynamicLabel(l) => Some(l),
                Template::MindMapPattern(_) => None,
            })
        };
        labels()
            .find(|l| l.default)
            .or_else(|| labels().next())
            .ok_or_else(|| Error::UnknownTemplate(default_label_id(schema).unwrap_or_else(|_| schema.clone())))
    }

    pub fn default_pattern(&self, schema: &Upri) -> Option<&MindMapPattern> {
        self.for_schema(schema).find_map(|(_, t)| match t {
            Template::MindMapPattern(p) => Some(p),
            Template::DynamicLabel(_) => None,
        })
    }

    pub(crate) fn insert(&mut self, id: Upri, template: Template) {
        self.templates.insert(id, template);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_variables() {
        assert_eq!(
            template_variables("This ${OBJECT} has ${VALUE} ${UNIT}").unwrap(),
            vec!["OBJECT", "VALUE", "UNIT"]
        );
        assert!(template_variables("").unwrap().is_empty());
        assert!(matches!(template_variables("${OPEN"), Err(Error::MalformedTemplate(_))));
        assert!(matches!(template_variables("${}"), Err(Error::MalformedTemplate(_))));
        assert!(matches!(template_variables("${a b}"), Err(Error::MalformedTemplate(_))));
    }

    #[test]
    fn literal_dollar_text_is_kept() {
        let pieces = parse("costs $5 for ${X}").unwrap();
        assert_eq!(pieces, vec![Piece::Text("costs $5 for "), Piece::Var("X")]);
    }

    #[test]
    fn merge_deduplicates_nodes_by_id() {
        let node = |id: &str| MindMapNode { id: id.into(), label: id.into(), role: NodeRole::Object };
        let a = MindMapDoc { nodes: vec![node("s"), node("p1")], edges: vec![] };
        let b = MindMapDoc { nodes: vec![node("s"), node("p2")], edges: vec![] };
        let m = MindMapDoc::merge([&a, &b]);
        assert_eq!(m.nodes.len(), 3);
        assert_eq!(m.node_ids(), BTreeSet::from(["s", "p1", "p2"]));
    }
}
