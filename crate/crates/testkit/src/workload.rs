//! A seeded demo knowledge base plus random statements, operations and
//! questions over it.

use std::collections::BTreeMap;

use chrono::{TimeDelta, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rosetta_kb::fixtures::{self, upri, Demo};
use rosetta_kb::kb::{StepClock, StatementRequest};
use rosetta_kb::model::{Resource, ResourceKind, Upri, Value};
use rosetta_kb::query::{Binding, Composite, Join, QuestionSpec, SlotRef};
use rosetta_kb::schema::{NumericRange, Paradigm};
use rosetta_kb::store::{StatementInput, StatementRecord, Tag};
use rosetta_kb::{Datatype, KbConfig, KnowledgeBase, Result};

use crate::oracle::Taxonomy;

const WEIGHT_SUBJECTS: &[&str] = &[
    fixtures::APPLE,
    fixtures::APPLE_2,
    fixtures::APPLE_3,
    "urn:rosetta:demo:pear-1",
    "urn:rosetta:demo:car-1",
    "urn:rosetta:demo:engine-1",
    fixtures::ADA,
];
const UNITS: &[&str] = &[fixtures::GRAM, fixtures::KILOGRAM];
const VALUES: &[&str] = &["100", "150.0", "199.99", "200", "212.45", "250.5", "300.2", "1000"];
const PERSONS: &[&str] = &[fixtures::ADA, "urn:rosetta:demo:grace"];
const PLACES: &[&str] = &[fixtures::BERLIN, "wikidata:Q90", fixtures::HANNOVER, fixtures::BER_AIRPORT];
const TRANSPORT: &[&str] = &[fixtures::TRAIN, "wikidata:Q197"];
const DATES: &[&str] = &["2023-05-01", "2024-01-15", "2024-07-30"];
const WHOLES: &[&str] = &[fixtures::BERLIN, "wikidata:Q90", fixtures::BER_AIRPORT, "urn:rosetta:demo:car-1"];
const PARTS: &[&str] = &[fixtures::BER_AIRPORT, "urn:rosetta:demo:engine-1", fixtures::BERLIN, fixtures::HANNOVER];
const EVERY_APPLE: &str = "urn:rosetta:demo:every-apple";

const APPLE_CLASS: &str = fixtures::APPLE_CLASS;
const PEAR_CLASS: &str = "wikidata:Q13184";
const UNIT_OF_MASS: &str = "wikidata:Q3647172";
const CITY: &str = "wikidata:Q515";
const MODE_OF_TRANSPORT: &str = "wikidata:Q334166";

/// One step of a random store workload.
#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    Create(StatementRequest),
    Edit { statement: Upri, label: String, value: Value },
    Delete(Upri),
    Version(Upri),
}

pub struct World {
    pub kb: KnowledgeBase,
    pub demo: Demo,
    pub tax: Taxonomy,
    pub rng: ChaCha8Rng,
    statements: Vec<Upri>,
}

fn pick<'a>(rng: &mut ChaCha8Rng, xs: &[&'a str]) -> &'a str {
    xs.choose(rng).expect("non-empty pool")
}

fn resource(u: &str) -> Binding {
    Binding::Resource { upri: upri(u) }
}

fn some(c: &str) -> Binding {
    Binding::SomeInstanceOf { class: upri(c) }
}

fn individual(u: &str) -> Value {
    Value::individual(upri(u))
}

pub fn test_clock() -> Box<StepClock> {
    Box::new(StepClock::new(Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap(), TimeDelta::seconds(1)))
}

impl World {
    /// In-memory demo world.
    pub fn new(seed: u64) -> Self {
        Self::with_config(KbConfig::seeded(seed), seed)
    }

    pub fn with_config(config: KbConfig, seed: u64) -> Self {
        let mut kb = KnowledgeBase::open_with_clock(config, test_clock()).expect("open knowledge base");
        let demo = Demo::install(&mut kb).expect("install fixtures");
        Self::attach(kb, demo, seed)
    }

    /// Wraps an already populated knowledge base.
    pub fn attach(kb: KnowledgeBase, demo: Demo, seed: u64) -> Self {
        let statements = kb.store().all().map(|r| r.upri.clone()).collect();
        World {
            kb,
            demo,
            tax: Taxonomy::from_document(&fixtures::terms_document()),
            rng: ChaCha8Rng::seed_from_u64(seed),
            statements,
        }
    }

    pub fn records(&self) -> Vec<&StatementRecord> {
        self.kb.store().all().collect()
    }

    pub fn statements(&self) -> &[Upri] {
        &self.statements
    }

    fn value_for(&mut self, schema: &Upri, label: &str) -> Value {
        let rng = &mut self.rng;
        if schema == &self.demo.weight {
            match label {
                "VALUE" => fixtures::decimal(pick(rng, VALUES)),
                _ => individual(pick(rng, UNITS)),
            }
        } else if schema == &self.demo.travel {
            match label {
                "TRANSPORTATION" => individual(pick(rng, TRANSPORT)),
                "DATETIME" => fixtures::date(pick(rng, DATES)),
                _ => individual(pick(rng, PLACES)),
            }
        } else {
            individual(pick(rng, PARTS))
        }
    }

    pub fn random_request(&mut self) -> StatementRequest {
        let roll: f64 = self.rng.gen();
        let (schema, subject, labels): (Upri, Resource, Vec<&str>) = if roll < 0.5 {
            let subject = if self.rng.gen_bool(0.08) {
                Resource::new(upri(EVERY_APPLE), ResourceKind::EveryInstance { of: upri(APPLE_CLASS) })
            } else {
                Resource::individual(upri(pick(&mut self.rng, WEIGHT_SUBJECTS)))
            };
            (self.demo.weight.clone(), subject, vec!["VALUE", "UNIT"])
        } else if roll < 0.8 {
            let mut labels = vec!["DESTINATION_LOCATION"];
            for l in ["DEPARTURE_LOCATION", "TRANSPORTATION", "DATETIME"] {
                if self.rng.gen_bool(0.5) {
                    labels.push(l);
                }
            }
            (self.demo.travel.clone(), Resource::individual(upri(pick(&mut self.rng, PERSONS))), labels)
        } else {
            (self.demo.has_part.clone(), Resource::individual(upri(pick(&mut self.rng, WHOLES))), vec!["PART"])
        };
        let bindings: BTreeMap<String, Value> =
            labels.into_iter().map(|l| (l.to_owned(), self.value_for(&schema, l))).collect();
        let paradigm = if self.rng.gen_bool(0.4) { Paradigm::Full } else { Paradigm::Light };
        StatementRequest::new(StatementInput { schema, subject, bindings }).paradigm(paradigm)
    }

    /// Creates `n` statements, then tags, edits and deletes some of them.
    pub fn populate(&mut self, n: usize) -> Result<()> {
        for _ in 0..n {
            let req = self.random_request();
            let every = matches!(req.subject.kind, ResourceKind::EveryInstance { .. });
            let s = self.kb.create_statement(req)?;
            self.statements.push(s.clone());
            if every || self.rng.gen_bool(0.05) {
                self.kb.classify(&s, Tag::Universal)?;
            } else if self.rng.gen_bool(0.15) {
                self.kb.classify(&s, Tag::Contingent)?;
            }
            if self.rng.gen_bool(0.1) {
                self.kb.classify(&s, Tag::Negation)?;
            }
            let record = self.kb.store().get_any(&s)?;
            if record.paradigm == Paradigm::Full && self.rng.gen_bool(0.3) {
                let schema = record.statement_class.clone();
                let labels: Vec<String> = record.bindings().into_keys().collect();
                let label = labels.choose(&mut self.rng).expect("bound label").clone();
                let value = self.value_for(&schema, &label);
                self.kb.edit_position(&s, &label, value, Some("editor"))?;
            }
            if self.rng.gen_bool(0.1) {
                self.kb.delete_statement(&s, None)?;
            }
        }
        Ok(())
    }

    pub fn random_op(&mut self) -> Op {
        if self.statements.is_empty() || self.rng.gen_bool(0.35) {
            return Op::Create(self.random_request());
        }
        let s = self.statements.choose(&mut self.rng).expect("non-empty").clone();
        let roll: f64 = self.rng.gen();
        if roll < 0.5 {
            let r = self.kb.store().get_any(&s).expect("known statement");
            let schema = r.statement_class.clone();
            let labels: Vec<String> = match self.kb.schema(&schema) {
                Ok(sc) => sc.slot_labels().filter(|l| *l != sc.subject.label).map(str::to_owned).collect(),
                Err(_) => Vec::new(),
            };
            let label = labels.choose(&mut self.rng).cloned().unwrap_or_else(|| "VALUE".into());
            let value = self.value_for(&schema, &label);
            Op::Edit { statement: s, label, value }
        } else if roll < 0.7 {
            Op::Delete(s)
        } else {
            Op::Version(s)
        }
    }

    /// Applies an operation; rejected operations leave the store unchanged.
    pub fn apply(&mut self, op: Op) -> Result<()> {
        match op {
            Op::Create(req) => {
                let s = self.kb.create_statement(req)?;
                self.statements.push(s);
            }
            Op::Edit { statement, label, value } => {
                self.kb.edit_position(&statement, &label, value, Some("editor"))?;
            }
            Op::Delete(s) => self.kb.delete_statement(&s, None)?,
            Op::Version(s) => {
                self.kb.create_version(&s, None)?;
            }
        }
        Ok(())
    }

    fn range(&mut self) -> NumericRange {
        let a: f64 = pick(&mut self.rng, VALUES).parse().expect("numeric");
        match self.rng.gen_range(0..3) {
            0 => NumericRange { min: Some(a), min_exclusive: true, ..NumericRange::default() },
            1 => NumericRange { max: Some(a), ..NumericRange::default() },
            _ => {
                let b: f64 = pick(&mut self.rng, VALUES).parse().expect("numeric");
                NumericRange { min: Some(a.min(b)), max: Some(a.max(b)), ..NumericRange::default() }
            }
        }
    }

    pub fn random_question(&mut self) -> QuestionSpec {
        let roll: f64 = self.rng.gen();
        let mut positions = BTreeMap::new();
        let (schema, subject) = if roll < 0.5 {
            if self.rng.gen_bool(0.2) {
                // Fully specified.
                let subject = resource(pick(&mut self.rng, WEIGHT_SUBJECTS));
                let value = pick(&mut self.rng, VALUES);
                positions.insert("VALUE".into(), Binding::Literal { lexical: value.into(), datatype: Datatype::Decimal });
                positions.insert("UNIT".into(), resource(pick(&mut self.rng, UNITS)));
                (self.demo.weight.clone(), subject)
            } else {
                let subject = match self.rng.gen_range(0..7) {
                    0 => Binding::Unbound,
                    1 => resource(pick(&mut self.rng, WEIGHT_SUBJECTS)),
                    2 => some(APPLE_CLASS),
                    3 => some(fixtures::MATERIAL_OBJECT),
                    4 => some(PEAR_CLASS),
                    5 => Binding::Class { class: upri(APPLE_CLASS) },
                    _ => Binding::EveryInstanceOf { class: upri(APPLE_CLASS) },
                };
                let value = match self.rng.gen_range(0..3) {
                    0 => Binding::Unbound,
                    1 => Binding::Literal { lexical: pick(&mut self.rng, VALUES).into(), datatype: Datatype::Decimal },
                    _ => Binding::LiteralFilter { datatype: Datatype::Decimal, range: Some(self.range()), pattern: None },
                };
                let unit = match self.rng.gen_range(0..3) {
                    0 => Binding::Unbound,
                    1 => resource(pick(&mut self.rng, UNITS)),
                    _ => some(UNIT_OF_MASS),
                };
                positions.insert("VALUE".into(), value);
                positions.insert("UNIT".into(), unit);
                (self.demo.weight.clone(), subject)
            }
        } else if roll < 0.8 {
            let subject = match self.rng.gen_range(0..3) {
                0 => Binding::Unbound,
                1 => resource(pick(&mut self.rng, PERSONS)),
                _ => some(fixtures::HUMAN),
            };
            let dest = match self.rng.gen_range(0..5) {
                0 => Binding::Unbound,
                1 => resource(pick(&mut self.rng, PLACES)),
                2 => some(CITY),
                3 => some(fixtures::AIRPORT),
                _ => Binding::Class { class: upri(CITY) },
            };
            positions.insert("DESTINATION_LOCATION".into(), dest);
            match self.rng.gen_range(0..3) {
                0 => {}
                1 => {
                    positions.insert("TRANSPORTATION".into(), resource(pick(&mut self.rng, TRANSPORT)));
                }
                _ => {
                    positions.insert("TRANSPORTATION".into(), some(MODE_OF_TRANSPORT));
                }
            }
            match self.rng.gen_range(0..3) {
                0 => {}
                1 => {
                    let d = pick(&mut self.rng, DATES);
                    positions.insert("DATETIME".into(), Binding::Literal { lexical: d.into(), datatype: Datatype::Date });
                }
                _ => {
                    positions.insert(
                        "DATETIME".into(),
                        Binding::LiteralFilter { datatype: Datatype::Date, range: None, pattern: None },
                    );
                }
            }
            (self.demo.travel.clone(), subject)
        } else {
            let subject = match self.rng.gen_range(0..3) {
                0 => Binding::Unbound,
                1 => resource(pick(&mut self.rng, WHOLES)),
                _ => some(fixtures::LOCATION),
            };
            let part = match self.rng.gen_range(0..4) {
                0 => Binding::Unbound,
                1 => resource(pick(&mut self.rng, PARTS)),
                2 => some(fixtures::MATERIAL_OBJECT),
                _ => some(fixtures::AIRPORT),
            };
            positions.insert("PART".into(), part);
            (self.demo.has_part.clone(), subject)
        };
        QuestionSpec { schema, subject, positions, negated: self.rng.gen_bool(0.1) }
    }

    fn question_for(&mut self, schema: &Upri) -> QuestionSpec {
        loop {
            let q = self.random_question();
            if &q.schema == schema {
                return q;
            }
        }
    }

    fn leaf(&mut self, name: &str, schema: &Upri) -> Composite {
        let question = self.question_for(schema);
        Composite::Leaf { name: name.into(), question }
    }

    pub fn random_composite(&mut self) -> Composite {
        let (weight, travel, has_part) = (self.demo.weight.clone(), self.demo.travel.clone(), self.demo.has_part.clone());
        let join = |lq: &str, ls: &str, rq: &str, rs: &str| Join {
            left: SlotRef { question: lq.into(), slot: ls.into() },
            right: SlotRef { question: rq.into(), slot: rs.into() },
        };
        match self.rng.gen_range(0..6) {
            0 => Composite::And {
                children: vec![self.leaf("t", &travel), self.leaf("h", &has_part)],
                joins: vec![join("t", "DESTINATION_LOCATION", "h", "subject")],
            },
            1 => Composite::Or { children: vec![self.leaf("a", &weight), self.leaf("b", &weight)], joins: vec![] },
            2 => Composite::And {
                children: vec![self.leaf("w1", &weight), self.leaf("w2", &weight)],
                joins: vec![join("w1", "subject", "w2", "subject")],
            },
            3 => Composite::And {
                children: vec![
                    Composite::Or { children: vec![self.leaf("t", &travel), self.leaf("t", &travel)], joins: vec![] },
                    self.leaf("h", &has_part),
                ],
                joins: vec![join("t", "DESTINATION_LOCATION", "h", "subject")],
            },
            4 => Composite::And {
                children: vec![self.leaf("h1", &has_part), self.leaf("h2", &has_part)],
                joins: vec![join("h1", "PART", "h2", "subject")],
            },
            _ => Composite::And {
                children: vec![self.leaf("a", &weight), self.leaf("b", &weight)],
                joins: vec![join("a", "VALUE", "b", "VALUE")],
            },
        }
    }
}
