//! Bundled demonstration data: a small term hub, four wizard answer sets,
//! crosswalks for the weight schema, and helpers that load them into a
//! knowledge base.

use std::collections::BTreeMap;

use crate::crosswalk::CrosswalkSpec;
use crate::display::{DynamicLabel, Template};
use crate::error::Result;
use crate::kb::{KnowledgeBase, StatementRequest};
use crate::model::{Datatype, LiteralValue, Resource, Upri, Value};
use crate::schema::WizardAnswers;
use crate::terms::TermsDocument;

pub const TERMS_JSON: &str = include_str!("../fixtures/terms.json");
pub const WEIGHT_WIZARD: &str = include_str!("../fixtures/wizard/weight.yaml");
pub const TRAVEL_WIZARD: &str = include_str!("../fixtures/wizard/travel.yaml");
pub const HAS_PART_WIZARD: &str = include_str!("../fixtures/wizard/has_part.yaml");
pub const CI_WEIGHT_WIZARD: &str = include_str!("../fixtures/wizard/ci_weight.yaml");
pub const OBI_CROSSWALK: &str = include_str!("../fixtures/crosswalks/obi.yaml");
pub const OBOE_CROSSWALK: &str = include_str!("../fixtures/crosswalks/oboe.yaml");
pub const QUDT_CROSSWALK: &str = include_str!("../fixtures/crosswalks/qudt.yaml");
pub const CSV_CROSSWALK: &str = include_str!("../fixtures/crosswalks/csv.yaml");
pub const TREE_CROSSWALK: &str = include_str!("../fixtures/crosswalks/tree.yaml");
/// Expected derived properties of the has-part schema; `${CLASS}` stands
/// for the minted statement class.
pub const HAS_PART_OWL_GOLDEN: &str = include_str!("../fixtures/golden/has_part_owl.json");

pub const APPLE: &str = "urn:rosetta:demo:apple-1";
pub const APPLE_2: &str = "urn:rosetta:demo:apple-2";
pub const APPLE_3: &str = "urn:rosetta:demo:apple-3";
pub const GRAM: &str = "wikidata:Q41803";
pub const KILOGRAM: &str = "wikidata:Q11570";
pub const APPLE_CLASS: &str = "wikidata:Q89";
pub const MATERIAL_OBJECT: &str = "wikidata:Q223557";
pub const HUMAN: &str = "wikidata:Q5";
pub const LOCATION: &str = "wikidata:Q17334923";
pub const AIRPORT: &str = "wikidata:Q1248784";
pub const ADA: &str = "urn:rosetta:demo:ada";
pub const BERLIN: &str = "wikidata:Q64";
pub const HANNOVER: &str = "wikidata:Q1583";
pub const TRAIN: &str = "wikidata:Q870";
pub const BER_AIRPORT: &str = "wikidata:Q160556";

/// The travel label with each optional position wrapped in an elidable
/// segment.
pub const TRAVEL_LABEL: &str =
    "${PERSON} travels by ${TRANSPORTATION} from ${DEPARTURE_LOCATION} to ${DESTINATION_LOCATION} on the ${DATETIME}";
pub const TRAVEL_SEGMENTS: [(&str, &str); 3] = [
    ("TRANSPORTATION", " by ${TRANSPORTATION}"),
    ("DEPARTURE_LOCATION", " from ${DEPARTURE_LOCATION}"),
    ("DATETIME", " on the ${DATETIME}"),
];

pub fn upri(s: &str) -> Upri {
    Upri::new(s).expect("fixture identifiers are valid")
}

pub fn terms_document() -> TermsDocument {
    serde_json::from_str(TERMS_JSON).expect("bundled terms parse")
}

pub fn wizard(yaml: &str) -> WizardAnswers {
    serde_yaml::from_str(yaml).expect("bundled wizard answers parse")
}

pub fn crosswalk_spec(yaml: &str) -> CrosswalkSpec {
    CrosswalkSpec::from_yaml(yaml).expect("bundled crosswalk parses")
}

/// Identifiers of everything [`Demo::install`] registers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Demo {
    pub weight: Upri,
    pub travel: Upri,
    pub has_part: Upri,
    pub ci_weight: Upri,
    pub obi: Upri,
    pub oboe: Upri,
    pub qudt: Upri,
    pub csv: Upri,
    pub tree: Upri,
    pub travel_label: Upri,
}

impl Demo {
    /// Loads the terms, the four wizard schemas, the weight crosswalks and
    /// the segmented travel label.
    pub fn install(kb: &mut KnowledgeBase) -> Result<Demo> {
        kb.import_terms(&terms_document(), Some("fixtures"))?;
        let weight = kb.create_schema_from_wizard(&wizard(WEIGHT_WIZARD), None)?.statement_class;
        let travel = kb.create_schema_from_wizard(&wizard(TRAVEL_WIZARD), None)?.statement_class;
        let has_part = kb.create_schema_from_wizard(&wizard(HAS_PART_WIZARD), None)?.statement_class;
        let ci_weight = kb.create_schema_from_wizard(&wizard(CI_WEIGHT_WIZARD), None)?.statement_class;
        let mut cw = |yaml| kb.define_crosswalk(crosswalk_spec(yaml), Some(&weight));
        let obi = cw(OBI_CROSSWALK)?;
        let oboe = cw(OBOE_CROSSWALK)?;
        let qudt = cw(QUDT_CROSSWALK)?;
        let csv = cw(CSV_CROSSWALK)?;
        let tree = cw(TREE_CROSSWALK)?;
        let travel_label = kb.register_template(Template::DynamicLabel(DynamicLabel {
            schema: travel.clone(),
            name: "travel with optional details".into(),
            template: TRAVEL_LABEL.into(),
            optional_segments: TRAVEL_SEGMENTS.iter().map(|(l, s)| ((*l).to_owned(), (*s).to_owned())).collect(),
            default: false,
        }))?;
        Ok(Demo { weight, travel, has_part, ci_weight, obi, oboe, qudt, csv, tree, travel_label })
    }

    /// `subject` has a weight of `value` `unit`.
    pub fn weight_request(&self, subject: &str, value: &str, unit: &str) -> StatementRequest {
        StatementRequest::new(crate::store::StatementInput {
            schema: self.weight.clone(),
            subject: Resource::individual(upri(subject)),
            bindings: BTreeMap::from([
                ("VALUE".to_owned(), decimal(value)),
                ("UNIT".to_owned(), Value::individual(upri(unit))),
            ]),
        })
    }

    /// The apple of the running example: 212.45 gram.
    pub fn apple_request(&self) -> StatementRequest {
        self.weight_request(APPLE, "212.45", GRAM)
    }

    /// `person` travels to `destination`, with any optional details given
    /// as (label, value) pairs.
    pub fn travel_request(&self, person: &str, destination: &str, optional: &[(&str, Value)]) -> StatementRequest {
        let mut bindings = BTreeMap::from([("DESTINATION_LOCATION".to_owned(), Value::individual(upri(destination)))]);
        bindings.extend(optional.iter().map(|(l, v)| ((*l).to_owned(), v.clone())));
        StatementRequest::new(crate::store::StatementInput {
            schema: self.travel.clone(),
            subject: Resource::individual(upri(person)),
            bindings,
        })
    }

    pub fn has_part_request(&self, whole: &str, part: &str) -> StatementRequest {
        StatementRequest::new(crate::store::StatementInput {
            schema: self.has_part.clone(),
            subject: Resource::individual(upri(whole)),
            bindings: BTreeMap::from([("PART".to_owned(), Value::individual(upri(part)))]),
        })
    }
}

pub fn decimal(lexical: &str) -> Value {
    Value::Literal(LiteralValue::new(lexical, Datatype::Decimal).expect("fixture decimals are valid"))
}

pub fn date(lexical: &str) -> Value {
    Value::Literal(LiteralValue::new(lexical, Datatype::Date).expect("fixture dates are valid"))
}
