use std::collections::BTreeSet;

use proptest::prelude::*;
use rosetta_kb::crosswalk::{normalize, CrosswalkCounts};
use rosetta_kb::fixtures::{Demo, APPLE, APPLE_2, APPLE_3, GRAM, KILOGRAM};
use rosetta_kb::schema::Paradigm;
use rosetta_kb::{Error, KbConfig, KnowledgeBase};

/// Unordered pairs of distinct systems, by enumeration.
fn pairs(n: u64) -> u64 {
    let mut seen = BTreeSet::new();
    for a in 0..n {
        for b in 0..n {
            if a != b {
                seen.insert((a.min(b), a.max(b)));
            }
        }
    }
    seen.len() as u64
}

#[test]
fn counts_match_pair_enumeration() {
    for n in 1..=50 {
        assert_eq!(KnowledgeBase::crosswalk_counts(n).unwrap(), CrosswalkCounts { pairwise: pairs(n), hub: n }, "n={n}");
    }
    assert_eq!(KnowledgeBase::crosswalk_counts(8).unwrap(), CrosswalkCounts { pairwise: 28, hub: 8 });
    assert_eq!(KnowledgeBase::crosswalk_counts(0), Err(Error::InvalidCount));
}

fn decimal() -> impl Strategy<Value = String> {
    (0u32..100_000, 0u32..100).prop_map(|(i, f)| format!("{i}.{f:02}"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn random_weights_round_trip(
        subject in prop::sample::select(vec![APPLE, APPLE_2, APPLE_3]),
        value in decimal(),
        unit in prop::sample::select(vec![GRAM, KILOGRAM]),
        full in any::<bool>(),
    ) {
        let mut kb = KnowledgeBase::open(KbConfig::seeded(3)).unwrap();
        let d = Demo::install(&mut kb).unwrap();
        let mut req = d.weight_request(subject, &value, unit);
        if full {
            req = req.paradigm(Paradigm::Full);
        }
        let s = kb.create_statement(req).unwrap();
        let original = normalize(&kb.reconstruct(&s, false).unwrap().input, kb.terms());
        for cw in [&d.obi, &d.oboe, &d.qudt, &d.csv, &d.tree] {
            let doc = kb.export_statement(cw, &s).unwrap().document;
            let back = kb.decode_document(cw, &doc).unwrap();
            prop_assert_eq!(normalize(&back, kb.terms()), original.clone(), "crosswalk {}", cw);
            let text = doc.to_text().unwrap();
            let reparsed = rosetta_kb::crosswalk::TargetDocument::parse(doc.kind(), &text).unwrap();
            prop_assert_eq!(reparsed, doc);
        }
    }
}
