use rosetta_kb::crosswalk::{normalize, TargetDocument};
use rosetta_kb::fixtures::{self, upri, Demo, ADA, APPLE, BERLIN, GRAM, HANNOVER, TRAIN};
use rosetta_kb::schema::Paradigm;
use rosetta_kb::store::Tag;
use rosetta_kb::{Error, KbConfig, KnowledgeBase, Value};

fn demo() -> (KnowledgeBase, Demo) {
    let mut kb = KnowledgeBase::open(KbConfig::seeded(7)).unwrap();
    let d = Demo::install(&mut kb).unwrap();
    (kb, d)
}

#[test]
fn apple_statement_is_three_links() {
    let (mut kb, d) = demo();
    let s = kb.create_statement(d.apple_request()).unwrap();
    let r = kb.statement(&s).unwrap();
    assert_eq!(r.light_view().link_count(), 3);
    assert_eq!(kb.render_label(&s, None).unwrap(), "This apple has a weight of 212.45 gram");
}

#[test]
fn graph_exports_have_five_or_six_edges() {
    let (mut kb, d) = demo();
    let s = kb.create_statement(d.apple_request()).unwrap();
    let count = |cw| kb.export_statement(cw, &s).unwrap().document.as_graph().unwrap().edges.len();
    assert_eq!(count(&d.obi), 5);
    assert_eq!(count(&d.oboe), 6);
    assert_eq!(count(&d.qudt), 5);
}

#[test]
fn csv_export_matches_table_row() {
    let (mut kb, d) = demo();
    let s = kb.create_statement(d.apple_request()).unwrap();
    let out = kb.export_statement(&d.csv, &s).unwrap();
    assert_eq!(out.document, TargetDocument::Table("OBJECT,QUALITY,VALUE,UNIT\napple,weight,212.45,gram\n".into()));
}

#[test]
fn every_fixture_crosswalk_round_trips() {
    let (mut kb, d) = demo();
    let s = kb.create_statement(d.apple_request()).unwrap();
    let original = normalize(&kb.reconstruct(&s, false).unwrap().input, kb.terms());
    for cw in [&d.obi, &d.oboe, &d.qudt, &d.csv, &d.tree] {
        let doc = kb.export_statement(cw, &s).unwrap().document;
        let back = kb.decode_document(cw, &doc).unwrap();
        assert_eq!(normalize(&back, kb.terms()), original, "crosswalk {cw}");
    }
}

#[test]
fn translated_units_use_target_vocabulary() {
    let (mut kb, d) = demo();
    let s = kb.create_statement(d.apple_request()).unwrap();
    let obi = kb.export_statement(&d.obi, &s).unwrap().document;
    assert!(obi.as_graph().unwrap().edges.iter().any(|e| e.to == "uo:0000021"));
    let qudt = kb.export_statement(&d.qudt, &s).unwrap().document;
    assert!(qudt.as_graph().unwrap().edges.iter().any(|e| e.to == "qudt:unit-GM"));
}

#[test]
fn untranslatable_unit_fails_export() {
    let (mut kb, d) = demo();
    kb.register_term(rosetta_kb::kb::TermInput {
        upri: Some(upri("urn:rosetta:demo:grain")),
        label: "grain".into(),
        kind: rosetta_kb::terms::TermKind::NamedIndividual,
        definition: String::new(),
        parents: [upri("wikidata:Q3647172")].into(),
        vocabulary: "local".into(),
    })
    .unwrap();
    let s = kb.create_statement(d.weight_request(APPLE, "3", "urn:rosetta:demo:grain")).unwrap();
    let err = kb.export_statement(&d.qudt, &s).unwrap_err();
    assert!(matches!(err, Error::TermTranslationFailed { .. }), "{err:?}");
}

#[test]
fn import_csv_row_creates_statement() {
    let (mut kb, d) = demo();
    let doc = TargetDocument::Table("OBJECT,QUALITY,VALUE,UNIT\napple,weight,212.45,gram\n".into());
    let s = kb.import_statement(&d.csv, &doc, Some("importer")).unwrap();
    let r = kb.statement(&s).unwrap();
    assert_eq!(r.subject.upri, upri(APPLE));
    assert_eq!(r.current_value("UNIT"), Some(&Value::individual(upri(GRAM))));
    assert_eq!(r.provenance.imported_from.as_deref(), Some("weight table"));
}

#[test]
fn non_numeric_csv_value_is_rejected() {
    let (mut kb, d) = demo();
    let doc = TargetDocument::Table("OBJECT,QUALITY,VALUE,UNIT\napple,weight,heavy,gram\n".into());
    let err = kb.import_statement(&d.csv, &doc, None).unwrap_err();
    match err {
        Error::ValidationFailed(report) => {
            assert!(report.has("VALUE", rosetta_kb::schema::ViolationReason::DatatypeViolation))
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn oboe_to_obi_via_reference() {
    let (mut kb, d) = demo();
    let s = kb.create_statement(d.apple_request()).unwrap();
    let oboe = kb.export_statement(&d.oboe, &s).unwrap().document;
    let via = kb.transit_convert(&oboe, &d.oboe, &d.obi).unwrap();
    assert_eq!(via, kb.export_statement(&d.obi, &s).unwrap());
}

#[test]
fn travel_label_elides_unbound_segments() {
    let (mut kb, d) = demo();
    let full = kb
        .create_statement(d.travel_request(
            ADA,
            BERLIN,
            &[
                ("TRANSPORTATION", Value::individual(upri(TRAIN))),
                ("DEPARTURE_LOCATION", Value::individual(upri(HANNOVER))),
                ("DATETIME", fixtures::date("2023-05-01")),
            ],
        ))
        .unwrap();
    let bare = kb.create_statement(d.travel_request(ADA, BERLIN, &[])).unwrap();
    let by_train = kb
        .create_statement(d.travel_request(ADA, BERLIN, &[("TRANSPORTATION", Value::individual(upri(TRAIN)))]))
        .unwrap();
    let label = Some(&d.travel_label);
    assert_eq!(kb.render_label(&full, label).unwrap(), "Ada travels by train from Hannover to Berlin on the 2023-05-01");
    assert_eq!(kb.render_label(&bare, label).unwrap(), "Ada travels to Berlin");
    assert_eq!(kb.render_label(&by_train, label).unwrap(), "Ada travels by train to Berlin");
}

#[test]
fn has_part_schema_derives_golden_property() {
    let (kb, d) = demo();
    let doc = kb.owl_schema(&d.has_part).unwrap();
    let golden = fixtures::HAS_PART_OWL_GOLDEN.replace("${CLASS}", d.has_part.as_str());
    let golden: serde_json::Value = serde_json::from_str(&golden).unwrap();
    assert_eq!(serde_json::to_value(&doc.properties).unwrap(), golden["properties"]);
    assert_eq!(doc.statement_class_label, golden["statement_class_label"]);
}

#[test]
fn full_statement_downgrades_to_light_shape() {
    let (mut kb, d) = demo();
    let light = kb.create_statement(d.apple_request()).unwrap();
    let full = kb.create_statement(d.apple_request().paradigm(Paradigm::Full)).unwrap();
    let a = kb.full_to_light(&full).unwrap();
    let b = kb.statement(&light).unwrap().light_view();
    assert_eq!(a, b);
    assert_eq!(kb.light_to_full(&light).unwrap_err(), Error::LightToFullUnsupported);
}

#[test]
fn edits_versions_and_deletion() {
    let (mut kb, d) = demo();
    let s = kb.create_statement(d.apple_request().paradigm(Paradigm::Full)).unwrap();
    let v1 = kb.create_version(&s, Some("ann")).unwrap();
    kb.edit_position(&s, "VALUE", fixtures::decimal("212.50"), Some("bob")).unwrap();
    assert_eq!(kb.history(&s, Some("VALUE")).unwrap().len(), 2);
    let view = kb.version_view(&s, &v1.upri).unwrap();
    assert_eq!(view.positions["VALUE"], fixtures::decimal("212.45"));
    kb.delete_statement(&s, None).unwrap();
    assert!(matches!(kb.statement(&s), Err(Error::UnknownStatement(_))));
    assert_eq!(kb.history(&s, None).unwrap().len(), 3);
}

#[test]
fn classification_tags() {
    let (mut kb, d) = demo();
    let s = kb.create_statement(d.apple_request()).unwrap();
    kb.classify(&s, Tag::Contingent).unwrap();
    assert!(matches!(kb.classify(&s, Tag::Universal), Err(Error::ConflictingTruthTag { .. })));
    kb.declassify(&s, Tag::Contingent).unwrap();
    kb.classify(&s, Tag::Universal).unwrap();
}

#[test]
fn mind_map_for_weight_statement() {
    let (mut kb, d) = demo();
    let s = kb.create_statement(d.apple_request()).unwrap();
    let doc = kb.render_mindmap(&s, None).unwrap();
    assert_eq!(doc.nodes.len(), 4);
    assert_eq!(doc.edges.len(), 3);
}
