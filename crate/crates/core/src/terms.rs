//! Vocabulary terms, their subclass taxonomy, and term mappings routed
//! through reference terms.
//!
//! Every mapping must touch a reference term, so translating a term between
//! two foreign vocabularies takes at most two hops: foreign → reference →
//! foreign. Same-as mappings satisfy any request that asks for
//! equivalent-class interoperability.

use std::collections::{BTreeSet, HashMap, VecDeque};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ProvenanceStamp, Resource, ResourceKind, Upri};

pub const DEFAULT_REFERENCE_VOCABULARY: &str = "wikidata";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TermKind {
    NamedIndividual,
    ClassTerm,
    PropertyTerm,
}

impl TermKind {
    pub fn resource_kind(self) -> ResourceKind {
        match self {
            TermKind::NamedIndividual => ResourceKind::NamedIndividual,
            TermKind::ClassTerm => ResourceKind::ClassTerm,
            TermKind::PropertyTerm => ResourceKind::PropertyTerm,
        }
    }
}

/// A registered term. For class terms `parents` are superclasses; for named
/// individuals they are the classes the individual instantiates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermRecord {
    pub upri: Upri,
    pub label: String,
    pub kind: TermKind,
    #[serde(default)]
    pub definition: String,
    #[serde(default)]
    pub parents: BTreeSet<Upri>,
    pub vocabulary: String,
    #[serde(default)]
    pub reference: bool,
}

impl TermRecord {
    pub fn new(upri: Upri, label: &str, kind: TermKind, vocabulary: &str) -> Self {
        Self {
            upri,
            label: label.to_owned(),
            kind,
            definition: String::new(),
            parents: BTreeSet::new(),
            vocabulary: vocabulary.to_owned(),
            reference: false,
        }
    }

    pub fn with_parent(mut self, parent: Upri) -> Self {
        self.parents.insert(parent);
        self
    }

    pub fn with_definition(mut self, definition: &str) -> Self {
        self.definition = definition.to_owned();
        self
    }

    pub fn resource(&self) -> Resource {
        Resource::new(self.upri.clone(), self.kind.resource_kind())
    }
}

/// Ordered by strength: same-as implies equivalent-class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MappingKind {
    EquivalentClass,
    SameAs,
}

impl MappingKind {
    pub fn satisfies(self, minimum: MappingKind) -> bool {
        self >= minimum
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermMapping {
    pub id: Upri,
    pub source: Upri,
    pub target: Upri,
    pub kind: MappingKind,
    pub provenance: ProvenanceStamp,
}

impl TermMapping {
    fn other_end(&self, term: &Upri) -> &Upri {
        if &self.source == term {
            &self.target
        } else {
            &self.source
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "RegistryData")]
pub struct TermRegistry {
    reference_vocabulary: String,
    terms: IndexMap<Upri, TermRecord>,
    mappings: Vec<TermMapping>,
    #[serde(skip)]
    adjacency: HashMap<Upri, Vec<usize>>,
}

#[derive(Deserialize)]
struct RegistryData {
    reference_vocabulary: String,
    terms: IndexMap<Upri, TermRecord>,
    mappings: Vec<TermMapping>,
}

impl From<RegistryData> for TermRegistry {
    fn from(data: RegistryData) -> Self {
        let mut registry = TermRegistry {
            reference_vocabulary: data.reference_vocabulary,
            terms: data.terms,
            mappings: data.mappings,
            adjacency: HashMap::new(),
        };
        for (i, m) in registry.mappings.iter().enumerate() {
            registry.adjacency.entry(m.source.clone()).or_default().push(i);
            registry.adjacency.entry(m.target.clone()).or_default().push(i);
        }
        registry
    }
}

impl Default for TermRegistry {
    fn default() -> Self {
        Self::new(DEFAULT_REFERENCE_VOCABULARY)
    }
}

impl TermRegistry {
    pub fn new(reference_vocabulary: &str) -> Self {
        Self {
            reference_vocabulary: reference_vocabulary.to_owned(),
            terms: IndexMap::new(),
            mappings: Vec::new(),
            adjacency: HashMap::new(),
        }
    }

    pub fn reference_vocabulary(&self) -> &str {
        &self.reference_vocabulary
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn contains(&self, upri: &Upri) -> bool {
        self.terms.contains_key(upri)
    }

    pub fn get(&self, upri: &Upri) -> Option<&TermRecord> {
        self.terms.get(upri)
    }

    pub fn term(&self, upri: &Upri) -> Result<&TermRecord> {
        self.terms.get(upri).ok_or_else(|| Error::UnknownTerm(upri.clone()))
    }

    pub fn terms(&self) -> impl Iterator<Item = &TermRecord> {
        self.terms.values()
    }

    pub fn mappings(&self) -> &[TermMapping] {
        &self.mappings
    }

    pub fn label_of(&self, upri: &Upri) -> Option<&str> {
        self.terms.get(upri).map(|t| t.label.as_str())
    }

    pub fn is_reference(&self, upri: &Upri) -> bool {
        self.terms.get(upri).is_some_and(|t| t.reference)
    }

    /// Checks a term for registration without storing it. The `reference`
    /// flag is derived from the vocabulary.
    pub fn check_term(&self, mut record: TermRecord) -> Result<TermRecord> {
        if record.label.trim().is_empty() {
            return Err(Error::InvalidTerm(format!("{} has an empty label", record.upri)));
        }
        if record.vocabulary.trim().is_empty() {
            return Err(Error::InvalidTerm(format!("{} has no vocabulary", record.upri)));
        }
        if self.terms.contains_key(&record.upri) {
            return Err(Error::DuplicateTerm(record.upri));
        }
        if record.parents.contains(&record.upri) {
            return Err(Error::CycleDetected { term: record.upri.clone(), parent: record.upri });
        }
        for parent in &record.parents {
            let p = self.terms.get(parent).ok_or_else(|| Error::UnknownParent(parent.clone()))?;
            if p.kind != TermKind::ClassTerm {
                return Err(Error::NotAClass(parent.clone()));
            }
        }
        record.reference = record.vocabulary == self.reference_vocabulary;
        Ok(record)
    }

    pub fn register(&mut self, record: TermRecord) -> Result<Upri> {
        let record = self.check_term(record)?;
        let upri = record.upri.clone();
        self.terms.insert(upri.clone(), record);
        Ok(upri)
    }

    /// Adds a parent link after registration, rejecting links that would
    /// close a cycle.
    pub fn add_parent(&mut self, term: &Upri, parent: &Upri) -> Result<()> {
        self.check_parent(term, parent)?;
        self.terms.get_mut(term).expect("checked").parents.insert(parent.clone());
        Ok(())
    }

    pub fn check_parent(&self, term: &Upri, parent: &Upri) -> Result<()> {
        self.term(term)?;
        let p = self.terms.get(parent).ok_or_else(|| Error::UnknownParent(parent.clone()))?;
        if p.kind != TermKind::ClassTerm {
            return Err(Error::NotAClass(parent.clone()));
        }
        if self.reaches(parent, term) {
            return Err(Error::CycleDetected { term: term.clone(), parent: parent.clone() });
        }
        Ok(())
    }

    /// Validates a mapping against the hub discipline and duplicates.
    pub fn check_mapping(&self, source: &Upri, target: &Upri) -> Result<()> {
        if source == target {
            return Err(Error::SelfMapping(source.clone()));
        }
        let s = self.term(source)?;
        let t = self.term(target)?;
        if !s.reference && !t.reference {
            return Err(Error::HubViolation { source_term: source.clone(), target: target.clone() });
        }
        let duplicate = self.mapping_indices(source).any(|i| self.mappings[i].other_end(source) == target);
        if duplicate {
            return Err(Error::DuplicateMapping { source_term: source.clone(), target: target.clone() });
        }
        Ok(())
    }

    pub fn add_mapping(&mut self, mapping: TermMapping) -> Result<Upri> {
        self.check_mapping(&mapping.source, &mapping.target)?;
        let index = self.mappings.len();
        self.adjacency.entry(mapping.source.clone()).or_default().push(index);
        self.adjacency.entry(mapping.target.clone()).or_default().push(index);
        let id = mapping.id.clone();
        self.mappings.push(mapping);
        Ok(id)
    }

    fn mapping_indices<'a>(&'a self, term: &Upri) -> impl Iterator<Item = usize> + 'a {
        self.adjacency.get(term).into_iter().flatten().copied()
    }

    fn neighbours<'a>(&'a self, term: &'a Upri, minimum: MappingKind) -> impl Iterator<Item = &'a Upri> + 'a {
        self.mapping_indices(term)
            .map(|i| &self.mappings[i])
            .filter(move |m| m.kind.satisfies(minimum))
            .map(move |m| m.other_end(term))
    }

    /// Translates `term` into `target_vocabulary` through at most two
    /// mapping hops, the middle one a reference term. Shorter paths win, then
    /// the lexicographically smallest identifier.
    pub fn resolve(&self, term: &Upri, target_vocabulary: &str, minimum: MappingKind) -> Result<Upri> {
        let record = self.term(term)?;
        if record.vocabulary == target_vocabulary {
            return Ok(term.clone());
        }
        let in_target = |u: &Upri| self.terms.get(u).is_some_and(|t| t.vocabulary == target_vocabulary);
        let mut best: Option<(u8, &Upri)> = None;
        for first in self.neighbours(term, minimum) {
            if in_target(first) {
                consider(&mut best, 1, first);
            }
            if self.is_reference(first) {
                for second in self.neighbours(first, minimum) {
                    if second != term && in_target(second) {
                        consider(&mut best, 2, second);
                    }
                }
            }
        }
        best.map(|(_, u)| u.clone()).ok_or_else(|| Error::NoMapping {
            term: term.clone(),
            vocabulary: target_vocabulary.to_owned(),
        })
    }

    /// Reflexive, transitive subclass test over parent links.
    pub fn is_subclass_of(&self, sub: &Upri, sup: &Upri) -> Result<bool> {
        self.term(sub)?;
        self.term(sup)?;
        Ok(self.reaches(sub, sup))
    }

    fn reaches(&self, from: &Upri, to: &Upri) -> bool {
        if from == to {
            return true;
        }
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([from]);
        while let Some(current) = queue.pop_front() {
            let Some(record) = self.terms.get(current) else { continue };
            for parent in &record.parents {
                if parent == to {
                    return true;
                }
                if seen.insert(parent) {
                    queue.push_back(parent);
                }
            }
        }
        false
    }

    /// Does the resource denote something that falls under `class`?
    /// Individuals are checked through their types, placeholders through the
    /// class they range over, and class terms through subsumption.
    pub fn satisfies_class(&self, resource: &Resource, class: &Upri) -> bool {
        match &resource.kind {
            ResourceKind::NamedIndividual => self
                .terms
                .get(&resource.upri)
                .is_some_and(|t| t.parents.iter().any(|p| self.reaches(p, class))),
            ResourceKind::ClassTerm => self.contains(&resource.upri) && self.reaches(&resource.upri, class),
            ResourceKind::SomeInstance { of } | ResourceKind::EveryInstance { of } => self.reaches(of, class),
            ResourceKind::PropertyTerm => false,
        }
    }

    /// True when the resource is an instance (actual or placeholder) of
    /// `class`. Unlike [`satisfies_class`](Self::satisfies_class), class terms
    /// are not instances of their superclasses.
    pub fn instantiates(&self, resource: &Resource, class: &Upri) -> bool {
        match resource.kind {
            ResourceKind::ClassTerm | ResourceKind::PropertyTerm => false,
            _ => self.satisfies_class(resource, class),
        }
    }

    /// The classes a resource is directly typed by.
    pub fn direct_classes(&self, resource: &Resource) -> BTreeSet<Upri> {
        match &resource.kind {
            ResourceKind::NamedIndividual => {
                self.terms.get(&resource.upri).map(|t| t.parents.clone()).unwrap_or_default()
            }
            ResourceKind::SomeInstance { of } | ResourceKind::EveryInstance { of } => BTreeSet::from([of.clone()]),
            ResourceKind::ClassTerm | ResourceKind::PropertyTerm => BTreeSet::new(),
        }
    }

    pub fn find_by_label<'a>(&'a self, label: &'a str, vocabulary: Option<&'a str>) -> impl Iterator<Item = &'a TermRecord> + 'a {
        self.terms
            .values()
            .filter(move |t| t.label == label && vocabulary.is_none_or(|v| t.vocabulary == v))
    }

    pub fn export(&self) -> TermsDocument {
        TermsDocument {
            terms: self.terms.values().cloned().collect(),
            mappings: self
                .mappings
                .iter()
                .map(|m| MappingEntry { source: m.source.clone(), target: m.target.clone(), kind: m.kind })
                .collect(),
        }
    }
}

fn consider<'a>(best: &mut Option<(u8, &'a Upri)>, hops: u8, candidate: &'a Upri) {
    let better = match best {
        None => true,
        Some((h, u)) => (hops, candidate) < (*h, *u),
    };
    if better {
        *best = Some((hops, candidate));
    }
}

/// Bulk import/export document.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermsDocument {
    #[serde(default)]
    pub terms: Vec<TermRecord>,
    #[serde(default)]
    pub mappings: Vec<MappingEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingEntry {
    pub source: Upri,
    pub target: Upri,
    pub kind: MappingKind,
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};

    fn u(s: &str) -> Upri {
        Upri::new(s).unwrap()
    }

    fn stamp() -> ProvenanceStamp {
        ProvenanceStamp::new("tester", Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap())
    }

    fn class(id: &str, label: &str, vocab: &str) -> TermRecord {
        TermRecord::new(u(id), label, TermKind::ClassTerm, vocab)
    }

    fn mapping(n: usize, s: &str, t: &str, kind: MappingKind) -> TermMapping {
        TermMapping { id: u(&format!("urn:m:{n}")), source: u(s), target: u(t), kind, provenance: stamp() }
    }

    fn taxonomy() -> TermRegistry {
        let mut r = TermRegistry::default();
        r.register(class("wikidata:Q223557", "material object", "wikidata")).unwrap();
        r.register(class("wikidata:Q89", "apple", "wikidata").with_parent(u("wikidata:Q223557"))).unwrap();
        r.register(class("wikidata:Q3314483", "fruit", "wikidata").with_parent(u("wikidata:Q223557"))).unwrap();
        r.register(class("wikidata:Q1420", "car", "wikidata").with_parent(u("wikidata:Q223557"))).unwrap();
        r
    }

    #[test]
    fn registers_fixture_terms() {
        let mut r = taxonomy();
        assert!(r.is_reference(&u("wikidata:Q89")));
        r.register(TermRecord::new(u("wikidata:Q41803"), "gram", TermKind::NamedIndividual, "wikidata")).unwrap();
        assert_eq!(r.label_of(&u("wikidata:Q41803")), Some("gram"));
    }

    #[test]
    fn self_parent_is_a_cycle() {
        let mut r = TermRegistry::default();
        let err = r.register(class("urn:x:a", "a", "local").with_parent(u("urn:x:a"))).unwrap_err();
        assert!(matches!(err, Error::CycleDetected { .. }));
    }

    #[test]
    fn unknown_and_non_class_parents_are_rejected() {
        let mut r = taxonomy();
        assert_eq!(
            r.register(class("urn:x:a", "a", "local").with_parent(u("urn:x:nope"))),
            Err(Error::UnknownParent(u("urn:x:nope")))
        );
        r.register(TermRecord::new(u("urn:x:ind"), "i", TermKind::NamedIndividual, "local")).unwrap();
        assert_eq!(
            r.register(class("urn:x:b", "b", "local").with_parent(u("urn:x:ind"))),
            Err(Error::NotAClass(u("urn:x:ind")))
        );
    }

    #[test]
    fn add_parent_rejects_cycles() {
        let mut r = taxonomy();
        let err = r.add_parent(&u("wikidata:Q223557"), &u("wikidata:Q89")).unwrap_err();
        assert!(matches!(err, Error::CycleDetected { .. }));
        r.add_parent(&u("wikidata:Q89"), &u("wikidata:Q3314483")).unwrap();
        assert!(r.is_subclass_of(&u("wikidata:Q89"), &u("wikidata:Q3314483")).unwrap());
    }

    #[test]
    fn subclass_queries() {
        let r = taxonomy();
        assert!(r.is_subclass_of(&u("wikidata:Q89"), &u("wikidata:Q89")).unwrap());
        assert!(r.is_subclass_of(&u("wikidata:Q89"), &u("wikidata:Q223557")).unwrap());
        assert!(!r.is_subclass_of(&u("wikidata:Q89"), &u("wikidata:Q1420")).unwrap());
        assert!(!r.is_subclass_of(&u("wikidata:Q223557"), &u("wikidata:Q89")).unwrap());
        assert_eq!(r.is_subclass_of(&u("urn:x:z"), &u("wikidata:Q89")), Err(Error::UnknownTerm(u("urn:x:z"))));
    }

    #[test]
    fn mapping_rules() {
        let mut r = TermRegistry::default();
        r.register(class("wikidata:weight", "weight", "wikidata")).unwrap();
        r.register(class("pato:weight", "weight", "pato")).unwrap();
        r.register(class("ncit:weight", "weight", "ncit")).unwrap();
        assert_eq!(
            r.add_mapping(mapping(0, "pato:weight", "pato:weight", MappingKind::SameAs)),
            Err(Error::SelfMapping(u("pato:weight")))
        );
        assert!(matches!(
            r.add_mapping(mapping(1, "pato:weight", "ncit:weight", MappingKind::SameAs)),
            Err(Error::HubViolation { .. })
        ));
        r.add_mapping(mapping(2, "pato:weight", "wikidata:weight", MappingKind::SameAs)).unwrap();
        assert!(matches!(
            r.add_mapping(mapping(3, "wikidata:weight", "pato:weight", MappingKind::EquivalentClass)),
            Err(Error::DuplicateMapping { .. })
        ));
        r.add_mapping(mapping(4, "ncit:weight", "wikidata:weight", MappingKind::SameAs)).unwrap();
        assert_eq!(r.resolve(&u("pato:weight"), "ncit", MappingKind::SameAs), Ok(u("ncit:weight")));
        assert_eq!(r.resolve(&u("ncit:weight"), "pato", MappingKind::EquivalentClass), Ok(u("pato:weight")));
        assert_eq!(r.resolve(&u("ncit:weight"), "wikidata", MappingKind::SameAs), Ok(u("wikidata:weight")));
        assert_eq!(r.resolve(&u("ncit:weight"), "ncit", MappingKind::SameAs), Ok(u("ncit:weight")));
    }

    #[test]
    fn equivalent_class_does_not_imply_same_as() {
        let mut r = TermRegistry::default();
        r.register(class("wikidata:virus", "virus", "wikidata")).unwrap();
        r.register(class("covoc:virus", "viruses", "covoc")).unwrap();
        r.register(class("vido:virus", "virus", "vido")).unwrap();
        r.add_mapping(mapping(0, "covoc:virus", "wikidata:virus", MappingKind::EquivalentClass)).unwrap();
        r.add_mapping(mapping(1, "vido:virus", "wikidata:virus", MappingKind::EquivalentClass)).unwrap();
        assert_eq!(r.resolve(&u("covoc:virus"), "vido", MappingKind::EquivalentClass), Ok(u("vido:virus")));
        assert!(matches!(r.resolve(&u("covoc:virus"), "vido", MappingKind::SameAs), Err(Error::NoMapping { .. })));
    }

    #[test]
    fn hub_reduction_with_eight_vocabularies() {
        let mut r = TermRegistry::default();
        r.register(class("wikidata:weight", "weight", "wikidata")).unwrap();
        let vocabularies: Vec<String> = (0..8).map(|i| format!("v{i}")).collect();
        for (i, v) in vocabularies.iter().enumerate() {
            r.register(class(&format!("{v}:weight"), "weight", v)).unwrap();
            r.add_mapping(mapping(i, &format!("{v}:weight"), "wikidata:weight", MappingKind::SameAs)).unwrap();
        }
        assert_eq!(r.mappings().len(), 8);
        let mut pairs = 0;
        for a in &vocabularies {
            for b in &vocabularies {
                if a < b {
                    pairs += 1;
                    let resolved = r.resolve(&u(&format!("{a}:weight")), b, MappingKind::SameAs).unwrap();
                    assert_eq!(resolved, u(&format!("{b}:weight")));
                }
            }
        }
        assert_eq!(pairs, 28);
    }

    #[test]
    fn individuals_satisfy_classes_through_their_types() {
        let mut r = taxonomy();
        r.register(TermRecord::new(u("urn:x:apple-1"), "apple", TermKind::NamedIndividual, "local").with_parent(u("wikidata:Q89")))
            .unwrap();
        let apple = Resource::individual(u("urn:x:apple-1"));
        assert!(r.satisfies_class(&apple, &u("wikidata:Q223557")));
        assert!(!r.satisfies_class(&apple, &u("wikidata:Q1420")));
        let some = Resource::new(u("urn:x:s"), ResourceKind::SomeInstance { of: u("wikidata:Q89") });
        assert!(r.instantiates(&some, &u("wikidata:Q223557")));
        let class_value = Resource::class(u("wikidata:Q89"));
        assert!(r.satisfies_class(&class_value, &u("wikidata:Q223557")));
        assert!(!r.instantiates(&class_value, &u("wikidata:Q223557")));
    }

    #[test]
    fn serde_round_trip_rebuilds_the_mapping_index() {
        let mut r = TermRegistry::default();
        r.register(class("wikidata:w", "w", "wikidata")).unwrap();
        r.register(class("a:w", "w", "a")).unwrap();
        r.add_mapping(mapping(0, "a:w", "wikidata:w", MappingKind::SameAs)).unwrap();
        let json = serde_json::to_string(&r).unwrap();
        let back: TermRegistry = serde_json::from_str(&json).unwrap();
        assert_eq!(back.resolve(&u("a:w"), "wikidata", MappingKind::SameAs), Ok(u("wikidata:w")));
        assert_eq!(back, r);
    }
}
