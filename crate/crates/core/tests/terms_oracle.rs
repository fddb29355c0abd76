use std::collections::{BTreeMap, BTreeSet};

use chrono::{TimeZone, Utc};
use proptest::prelude::*;
use rosetta_kb::model::{ProvenanceStamp, Upri};
use rosetta_kb::terms::{MappingKind, TermKind, TermMapping, TermRecord, TermRegistry};
use rosetta_kb::Error;

fn u(s: &str) -> Upri {
    Upri::new(s).unwrap()
}

const VOCABS: [&str; 3] = ["uo", "qudt", "oboe"];

/// A random hub: `refs` reference terms, foreign terms spread over three
/// vocabularies, and mappings that each touch the reference vocabulary.
#[derive(Debug, Clone)]
struct Hub {
    refs: usize,
    foreign: Vec<usize>,
    mappings: Vec<(usize, usize, bool)>,
}

fn hub() -> impl Strategy<Value = Hub> {
    (2usize..6, prop::collection::vec(0usize..3, 2..10)).prop_flat_map(|(refs, foreign)| {
        let n = foreign.len();
        let edges = prop::collection::vec((0..refs, 0..n + refs, any::<bool>()), 0..25);
        (Just(refs), Just(foreign), edges).prop_map(|(refs, foreign, mappings)| Hub { refs, foreign, mappings })
    })
}

fn name(h: &Hub, i: usize) -> Upri {
    if i < h.refs {
        u(&format!("wikidata:R{i}"))
    } else {
        let f = i - h.refs;
        u(&format!("{}:F{f}", VOCABS[h.foreign[f]]))
    }
}

fn vocab(h: &Hub, i: usize) -> &'static str {
    if i < h.refs {
        "wikidata"
    } else {
        VOCABS[h.foreign[i - h.refs]]
    }
}

/// Builds the registry, returning the mappings it accepted as
/// (a, b, same-as) over term indices.
fn build(h: &Hub) -> (TermRegistry, Vec<(usize, usize, bool)>) {
    let mut reg = TermRegistry::new("wikidata");
    let total = h.refs + h.foreign.len();
    for i in 0..total {
        reg.register(TermRecord::new(name(h, i), &format!("t{i}"), TermKind::ClassTerm, vocab(h, i))).unwrap();
    }
    let t = Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap();
    let mut accepted = Vec::new();
    for (k, &(a, b, same)) in h.mappings.iter().enumerate() {
        let kind = if same { MappingKind::SameAs } else { MappingKind::EquivalentClass };
        let m = TermMapping {
            id: u(&format!("urn:m:{k}")),
            source: name(h, b),
            target: name(h, a),
            kind,
            provenance: ProvenanceStamp::new("t", t),
        };
        let duplicate = accepted.iter().any(|&(x, y, _)| (x, y) == (a, b) || (x, y) == (b, a));
        match reg.add_mapping(m) {
            Ok(_) => {
                assert!(a != b && !duplicate);
                accepted.push((a, b, same));
            }
            Err(Error::SelfMapping(_)) => assert_eq!(a, b),
            Err(Error::DuplicateMapping { .. }) => assert!(duplicate),
            Err(e) => panic!("unexpected {e}"),
        }
    }
    (reg, accepted)
}

/// Every one- and two-hop path, the middle term a reference term; shortest
/// first, then smallest identifier.
fn brute_resolve(h: &Hub, edges: &[(usize, usize, bool)], from: usize, target: &str, min_same: bool) -> Option<Upri> {
    if vocab(h, from) == target {
        return Some(name(h, from));
    }
    let ok = |same: bool| same || !min_same;
    let ends = |x: usize| -> Vec<usize> {
        edges
            .iter()
            .filter(|e| ok(e.2))
            .filter_map(|&(a, b, _)| if a == x { Some(b) } else if b == x { Some(a) } else { None })
            .collect()
    };
    let mut candidates: Vec<(u8, Upri)> = Vec::new();
    for mid in ends(from) {
        if vocab(h, mid) == target {
            candidates.push((1, name(h, mid)));
        }
        if mid < h.refs {
            for end in ends(mid) {
                if end != from && vocab(h, end) == target {
                    candidates.push((2, name(h, end)));
                }
            }
        }
    }
    candidates.into_iter().min().map(|(_, n)| n)
}

proptest! {
    #[test]
    fn resolve_matches_path_enumeration(h in hub()) {
        let (reg, edges) = build(&h);
        let total = h.refs + h.foreign.len();
        for from in 0..total {
            for target in ["wikidata", "uo", "qudt", "oboe"] {
                for (min, min_same) in [(MappingKind::EquivalentClass, false), (MappingKind::SameAs, true)] {
                    let want = brute_resolve(&h, &edges, from, target, min_same);
                    let got = reg.resolve(&name(&h, from), target, min).ok();
                    prop_assert_eq!(got, want, "{} -> {}", name(&h, from), target);
                }
            }
        }
    }

    #[test]
    fn foreign_to_foreign_mappings_are_rejected(h in hub()) {
        let (mut reg, _) = build(&h);
        if h.foreign.len() >= 2 {
            let a = name(&h, h.refs);
            let b = name(&h, h.refs + 1);
            let m = TermMapping {
                id: u("urn:m:bad"),
                source: a,
                target: b,
                kind: MappingKind::SameAs,
                provenance: ProvenanceStamp::new("t", Utc::now()),
            };
            prop_assert!(
                matches!(reg.add_mapping(m), Err(Error::HubViolation { .. })),
                "a mapping between two foreign terms must be rejected"
            );
        }
    }

    /// Random parent links: accepted ones never form a cycle, rejected ones
    /// would have; subclass tests agree with a brute-force closure.
    #[test]
    fn taxonomy_matches_closure(links in prop::collection::vec((0usize..8, 0usize..8), 0..30)) {
        let mut reg = TermRegistry::new("wikidata");
        for i in 0..8 {
            reg.register(TermRecord::new(u(&format!("wikidata:C{i}")), &format!("c{i}"), TermKind::ClassTerm, "wikidata")).unwrap();
        }
        let mut parents: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        let reach = |p: &BTreeMap<usize, BTreeSet<usize>>, a: usize, b: usize| {
            let mut seen = BTreeSet::from([a]);
            let mut stack = vec![a];
            while let Some(x) = stack.pop() {
                for &y in p.get(&x).into_iter().flatten() {
                    if seen.insert(y) {
                        stack.push(y);
                    }
                }
            }
            seen.contains(&b)
        };
        for (a, b) in links {
            let res = reg.add_parent(&u(&format!("wikidata:C{a}")), &u(&format!("wikidata:C{b}")));
            if reach(&parents, b, a) {
                prop_assert!(matches!(res, Err(Error::CycleDetected { .. })), "cycle not detected");
            } else {
                prop_assert!(res.is_ok());
                parents.entry(a).or_default().insert(b);
            }
        }
        for a in 0..8 {
            for b in 0..8 {
                let got = reg.is_subclass_of(&u(&format!("wikidata:C{a}")), &u(&format!("wikidata:C{b}"))).unwrap();
                prop_assert_eq!(got, reach(&parents, a, b));
            }
        }
    }
}

#[test]
fn fixture_units_resolve_across_vocabularies() {
    let mut kb = rosetta_kb::KnowledgeBase::in_memory();
    kb.import_terms(&rosetta_kb::fixtures::terms_document(), None).unwrap();
    let eq = MappingKind::EquivalentClass;
    assert_eq!(kb.resolve(&u("uo:0000021"), "qudt", eq).unwrap(), u("qudt:unit-GM"));
    assert_eq!(kb.resolve(&u("oboe:Gram"), "uo", eq).unwrap(), u("uo:0000021"));
    // oboe:Gram is only an equivalent class of gram, so same-as paths stop.
    assert!(matches!(kb.resolve(&u("oboe:Gram"), "uo", MappingKind::SameAs), Err(Error::NoMapping { .. })));
    assert_eq!(kb.resolve(&u("qudt:unit-GM"), "uo", MappingKind::SameAs).unwrap(), u("uo:0000021"));
}
