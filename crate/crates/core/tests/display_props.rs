use std::collections::BTreeSet;

use proptest::prelude::*;
use rosetta_kb::display::MindMapDoc;
use rosetta_kb::fixtures::{Demo, ADA, APPLE, BERLIN};
use rosetta_kb::{KbConfig, KnowledgeBase, Value};
use rosetta_testkit::oracle::current_values;
use rosetta_testkit::World;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Labels never leak variables, rendering is repeatable, and mind maps
    /// have one node for the predicate, the subject and each bound slot;
    /// a resource bound twice is one node.
    #[test]
    fn renders_are_total_and_sized(seed in any::<u64>()) {
        let mut w = World::new(seed);
        w.populate(30).unwrap();
        for r in w.records().into_iter().filter(|r| r.current) {
            let label = w.kb.render_label(&r.upri, None).unwrap();
            prop_assert!(!label.contains("${"), "{}", label);
            prop_assert_eq!(w.kb.render_label(&r.upri, None).unwrap(), label);
            let map = w.kb.render_mindmap(&r.upri, None).unwrap();
            let values = current_values(r);
            let mut ids: BTreeSet<String> = values
                .iter()
                .map(|(l, v)| match v {
                    Value::Resource(x) => x.upri.to_string(),
                    Value::Literal(_) => format!("{}#{l}", r.upri),
                })
                .collect();
            ids.insert(r.subject.upri.to_string());
            prop_assert_eq!(map.nodes.len(), 1 + ids.len());
            prop_assert_eq!(map.edges.len(), 1 + current_values(r).len());
        }
    }
}

#[test]
fn travel_mind_map_has_predicate_and_values() {
    let mut kb = KnowledgeBase::open(KbConfig::seeded(1)).unwrap();
    let d = Demo::install(&mut kb).unwrap();
    let s = kb.create_statement(d.travel_request(ADA, BERLIN, &[])).unwrap();
    let map = kb.render_mindmap(&s, None).unwrap();
    assert_eq!(map.nodes.len(), 3);
}

#[test]
fn statements_sharing_a_subject_merge_to_one_node() {
    let mut kb = KnowledgeBase::open(KbConfig::seeded(1)).unwrap();
    let d = Demo::install(&mut kb).unwrap();
    let a = kb.create_statement(d.apple_request()).unwrap();
    let b = kb.create_statement(d.weight_request(APPLE, "1", rosetta_kb::fixtures::KILOGRAM)).unwrap();
    let (ma, mb) = (kb.render_mindmap(&a, None).unwrap(), kb.render_mindmap(&b, None).unwrap());
    let merged = MindMapDoc::merge([&ma, &mb]);
    let subjects = merged.nodes.iter().filter(|n| n.id == APPLE).count();
    assert_eq!(subjects, 1);
    assert_eq!(merged.node_ids().len(), merged.nodes.len());
}
