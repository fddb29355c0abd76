use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rosetta_kb::model::{Snapshot, Value};
use rosetta_kb::schema::Paradigm;
use rosetta_kb::store::{hash_snapshot, StatementRecord};
use rosetta_kb::Error;
use rosetta_testkit::workload::Op;
use rosetta_testkit::World;

/// Every full statement has exactly one current instance per label it has
/// ever bound; light statements have no instances; `current` mirrors the
/// deletion stamp.
fn assert_single_current(records: &[&StatementRecord]) {
    for r in records {
        assert_eq!(r.current, r.deleted.is_none(), "{}", r.upri);
        match r.paradigm {
            Paradigm::Light => assert!(r.positions.is_empty()),
            Paradigm::Full => {
                let mut current: BTreeMap<&str, usize> = BTreeMap::new();
                for p in &r.positions {
                    *current.entry(p.label.as_str()).or_default() += usize::from(p.current);
                }
                for (label, n) in current {
                    assert_eq!(n, 1, "{} {label}", r.upri);
                }
            }
        }
    }
}

fn run_ops(seed: u64, steps: usize) -> usize {
    let mut w = World::new(seed);
    let mut last = w.kb.store().record_count();
    let mut accepted = 0;
    for _ in 0..steps {
        let op = w.random_op();
        let target = match &op {
            Op::Create(_) => None,
            Op::Edit { statement, .. } | Op::Delete(statement) | Op::Version(statement) => Some(statement.clone()),
        };
        let fingerprint = |w: &World| {
            let record = target.as_ref().map(|t| w.kb.store().get_any(t).unwrap().clone());
            (w.kb.store().len(), w.kb.store().record_count(), record)
        };
        let before = fingerprint(&w);
        match w.apply(op) {
            Ok(()) => accepted += 1,
            Err(_) => assert!(fingerprint(&w) == before, "rejected op changed the store"),
        }
        let count = w.kb.store().record_count();
        assert!(count >= last, "record count fell from {last} to {count}");
        last = count;
        assert_single_current(&w.records());
    }
    accepted
}

#[test]
fn thousand_random_operations_keep_invariants() {
    let accepted = run_ops(5, 1000);
    assert!(accepted > 500, "only {accepted} operations accepted");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn random_operation_sequences_keep_invariants(seed in any::<u64>(), steps in 1usize..150) {
        run_ops(seed, steps);
    }

    #[test]
    fn versions_reconstruct_their_snapshots(seed in any::<u64>(), steps in 1usize..40) {
        check_versions(seed, steps);
    }
}

fn check_versions(seed: u64, steps: usize) {
    let mut w = World::new(seed);
    let req = w.random_request().paradigm(Paradigm::Full);
    let schema_id = req.schema.clone();
    let mut model: BTreeMap<String, Value> = req.bindings.clone();
    let subject = req.subject.clone();
    let s = w.kb.create_statement(req).unwrap();
    let schema = w.kb.schema(&schema_id).unwrap().clone();
    let labels: Vec<String> = schema.positions.iter().map(|p| p.label.clone()).collect();
    let mut captured = Vec::new();
    for _ in 0..steps {
        if w.rng.gen_bool(0.4) {
            let v = w.kb.create_version(&s, None).unwrap();
            captured.push((v, Snapshot { subject: subject.clone(), positions: model.clone() }));
        } else {
            let label = labels.choose(&mut w.rng).unwrap().clone();
            let other = w.random_request();
            let value = if other.schema == schema_id {
                other.bindings.get(&label).cloned()
            } else {
                None
            };
            if let Some(value) = value {
                w.kb.edit_position(&s, &label, value.clone(), None).unwrap();
                model.insert(label, value);
            }
        }
    }
    for (v, snap) in &captured {
        assert_eq!(&w.kb.version_view(&s, &v.upri).unwrap(), snap);
        assert_eq!(hash_snapshot(snap, &schema).unwrap(), v.content_hash);
    }
    for pair in captured.windows(2) {
        assert_eq!(pair[1].0.previous.as_ref(), Some(&pair[0].0.upri));
    }
}

#[test]
fn hundred_version_interleavings() {
    for seed in 0..100 {
        check_versions(seed, 30);
    }
}

#[test]
fn deleted_statements_stay_in_history() {
    let mut w = World::new(9);
    let req = w.demo.apple_request().paradigm(Paradigm::Full);
    let s = w.kb.create_statement(req).unwrap();
    let before = w.kb.store().record_count();
    w.kb.delete_statement(&s, Some("ann")).unwrap();
    assert_eq!(w.kb.store().record_count(), before);
    assert!(matches!(w.kb.statement(&s), Err(Error::UnknownStatement(_))));
    assert!(matches!(w.kb.delete_statement(&s, None), Err(Error::AlreadyDeleted(_))));
    let doc = w.kb.statement_document(&s, true).unwrap();
    assert!(doc.deleted.is_some());
    assert!(w.kb.reconstruct(&s, true).is_ok());
}

#[test]
fn light_statements_are_immutable() {
    let mut w = World::new(10);
    let s = w.kb.create_statement(w.demo.apple_request()).unwrap();
    let err = w.kb.edit_position(&s, "VALUE", rosetta_kb::fixtures::decimal("1"), None).unwrap_err();
    assert_eq!(err, Error::LightModeImmutable);
    assert!(matches!(w.kb.history(&s, None), Err(Error::RequiresFullParadigm(_))));
}

#[test]
fn edit_outside_constraint_is_rejected() {
    let mut w = World::new(12);
    let s = w.kb.create_statement(w.demo.apple_request().paradigm(Paradigm::Full)).unwrap();
    let err = w.kb.edit_position(&s, "UNIT", Value::individual(rosetta_kb::fixtures::upri(rosetta_kb::fixtures::BERLIN)), None).unwrap_err();
    assert!(matches!(err, Error::ConstraintViolation(_)), "{err:?}");
    assert_eq!(w.kb.history(&s, Some("UNIT")).unwrap().len(), 1);
}
