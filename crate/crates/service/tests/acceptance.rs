//! Acceptance suite: one line per criterion, `criterion N: PASS|FAIL`.
//! Runs without a test harness so the lines always reach the output.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::Path;
use std::process::{Child, Command, ExitCode, Stdio};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rosetta_kb::crosswalk::normalize;
use rosetta_kb::fixtures::{self, upri, Demo, ADA, APPLE, BERLIN, GRAM, HANNOVER, TRAIN};
use rosetta_kb::kb::StatementRequest;
use rosetta_kb::model::{Resource, Snapshot, Value};
use rosetta_kb::query::{Answer, QueryDocument};
use rosetta_kb::schema::Paradigm;
use rosetta_kb::store::{hash_snapshot, StatementInput, StatementRecord};
use rosetta_kb::{Error, KbConfig, KnowledgeBase};
use rosetta_testkit::oracle::{self, OracleAnswer};
use rosetta_testkit::workload::Op;
use rosetta_testkit::World;
use serde_json::{json, Value as Json};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn demo() -> Result<(KnowledgeBase, Demo), String> {
    let mut kb = KnowledgeBase::open(KbConfig::seeded(2024)).map_err(fail)?;
    let d = Demo::install(&mut kb).map_err(fail)?;
    Ok((kb, d))
}

/// Light apple statement: 3 links; OBI and OBOE exports: 5 and 6 edges.
fn criterion_1() -> Outcome {
    let (mut kb, d) = demo()?;
    let s = kb.create_statement(d.apple_request()).map_err(fail)?;
    let links = kb.statement(&s).map_err(fail)?.light_view().link_count();
    let edges = |cw| -> Result<usize, String> {
        let doc = kb.export_statement(cw, &s).map_err(fail)?.document;
        Ok(doc.as_graph().ok_or("not a graph")?.edges.len())
    };
    let (obi, oboe) = (edges(&d.obi)?, edges(&d.oboe)?);
    ensure!(links == 3 && obi == 5 && oboe == 6, "links {links}, OBI {obi}, OBOE {oboe}");
    Ok(format!("light links 3, OBI edges {obi}, OBOE edges {oboe}"))
}

/// Pairwise versus hub crosswalk counts.
fn criterion_2() -> Outcome {
    let c8 = KnowledgeBase::crosswalk_counts(8).map_err(fail)?;
    ensure!((c8.pairwise, c8.hub) == (28, 8), "n=8 gave {c8:?}");
    for n in 1..=50u64 {
        let mut pairs = BTreeSet::new();
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    pairs.insert((a.min(b), a.max(b)));
                }
            }
        }
        let c = KnowledgeBase::crosswalk_counts(n).map_err(fail)?;
        ensure!(c.pairwise == pairs.len() as u64 && c.hub == n, "n={n}: {c:?} vs {} pairs", pairs.len());
    }
    Ok("n=8 -> pairwise 28, hub 8; n=1..50 match pair enumeration".into())
}

fn single_current(records: &[&StatementRecord]) -> Result<(), String> {
    for r in records {
        ensure!(r.current == r.deleted.is_none(), "{} current flag disagrees with deletion", r.upri);
        if r.paradigm == Paradigm::Light {
            ensure!(r.positions.is_empty(), "light statement {} has position instances", r.upri);
        } else {
            let mut current: BTreeMap<&str, usize> = BTreeMap::new();
            for p in &r.positions {
                *current.entry(p.label.as_str()).or_default() += usize::from(p.current);
            }
            ensure!(current.values().all(|&n| n == 1), "{} has a label without exactly one current instance", r.upri);
        }
    }
    Ok(())
}

/// 1,000 random operations: record count never falls, single-current holds.
fn criterion_3() -> Outcome {
    let mut w = World::new(31);
    let mut last = w.kb.store().record_count();
    let mut tally: BTreeMap<&str, usize> = BTreeMap::new();
    for step in 0..1000 {
        let op = w.random_op();
        let kind = match op {
            Op::Create(_) => "create",
            Op::Edit { .. } => "edit",
            Op::Delete(_) => "delete",
            Op::Version(_) => "version",
        };
        let before = w.kb.state().clone();
        if w.apply(op).is_ok() {
            *tally.entry(kind).or_default() += 1;
        } else {
            ensure!(w.kb.state() == &before, "step {step}: a rejected {kind} changed the store");
        }
        let count = w.kb.store().record_count();
        ensure!(count >= last, "step {step}: record count fell from {last} to {count}");
        last = count;
        single_current(&w.records()).map_err(|e| format!("step {step}: {e}"))?;
    }
    Ok(format!("0 violations; accepted {tally:?}; {last} records"))
}

/// 100 edit/version interleavings against a snapshot model.
fn criterion_4() -> Outcome {
    let mut versions = 0;
    for seed in 0..100 {
        let mut w = World::new(1000 + seed);
        let req = w.random_request().paradigm(Paradigm::Full);
        let schema_id = req.schema.clone();
        let subject = req.subject.clone();
        let mut model: BTreeMap<String, Value> = req.bindings.clone();
        let s = w.kb.create_statement(req).map_err(fail)?;
        let schema = w.kb.schema(&schema_id).map_err(fail)?.clone();
        let labels: Vec<String> = schema.positions.iter().map(|p| p.label.clone()).collect();
        let mut captured = Vec::new();
        for _ in 0..30 {
            if w.rng.gen_bool(0.4) {
                let v = w.kb.create_version(&s, None).map_err(fail)?;
                captured.push((v, Snapshot { subject: subject.clone(), positions: model.clone() }));
            } else {
                let label = labels.choose(&mut w.rng).ok_or("schema without positions")?.clone();
                let other = w.random_request();
                if other.schema == schema_id {
                    if let Some(value) = other.bindings.get(&label) {
                        w.kb.edit_position(&s, &label, value.clone(), None).map_err(fail)?;
                        model.insert(label, value.clone());
                    }
                }
            }
        }
        for (v, snap) in &captured {
            let view = w.kb.version_view(&s, &v.upri).map_err(fail)?;
            ensure!(&view == snap, "seed {seed}: view of {} differs from the captured snapshot", v.upri);
            let hash = hash_snapshot(snap, &schema).map_err(fail)?;
            ensure!(hash == v.content_hash, "seed {seed}: hash mismatch for {}", v.upri);
        }
        versions += captured.len();
    }
    Ok(format!("100 interleavings, {versions} versions reconstructed and hashed"))
}

/// 80 single and 20 composite questions over 200 statements.
fn criterion_5() -> Outcome {
    let mut w = World::new(55);
    w.populate(200).map_err(fail)?;
    let (mut nonempty, mut tuples) = (0, 0);
    for i in 0..80 {
        let q = w.random_question();
        let got = w.kb.evaluate(&QueryDocument::Single(q.clone())).map_err(fail)?;
        let schema = w.kb.schema(&q.schema).map_err(fail)?;
        let want = oracle::answer(&w.tax, &q, schema, &w.records());
        match (got, want) {
            (Answer::Boolean(a), OracleAnswer::Boolean(b)) => {
                ensure!(a == b, "question {i}: {a} vs oracle {b}");
                nonempty += usize::from(a);
            }
            (Answer::Statements(a), OracleAnswer::Statements(b)) => {
                let a: BTreeSet<_> = a.into_iter().collect();
                ensure!(a == b, "question {i}: {} answers vs oracle {}", a.len(), b.len());
                nonempty += usize::from(!a.is_empty());
            }
            (a, b) => return Err(format!("question {i}: answer kinds differ ({a:?} vs {b:?})")),
        }
    }
    for i in 0..20 {
        let c = w.random_composite();
        let got = w.kb.evaluate(&QueryDocument::Composite { composite: c.clone() }).map_err(fail)?;
        let want = oracle::composite(&w.tax, &c, &w.records());
        let Answer::Tuples(t) = got else { return Err(format!("composite {i} did not answer tuples")) };
        let t: BTreeSet<_> = t.into_iter().collect();
        ensure!(t == want, "composite {i}: {} tuples vs oracle {}", t.len(), want.len());
        tuples += usize::from(!t.is_empty());
    }
    Ok(format!("100/100 equal to oracle ({nonempty} non-empty singles, {tuples} non-empty composites)"))
}

/// import(export(s)) reproduces the reconstructed input for OBI, OBOE,
/// QUDT and CSV.
fn criterion_6() -> Outcome {
    let (mut kb, d) = demo()?;
    let mut checked = 0;
    for (subject, value, unit) in
        [(APPLE, "212.45", GRAM), (fixtures::APPLE_2, "0.3", fixtures::KILOGRAM), (fixtures::APPLE_3, "150", GRAM)]
    {
        for paradigm in [Paradigm::Light, Paradigm::Full] {
            let s = kb.create_statement(d.weight_request(subject, value, unit).paradigm(paradigm)).map_err(fail)?;
            let original = normalize(&kb.reconstruct(&s, false).map_err(fail)?.input, kb.terms());
            for (name, cw) in [("OBI", &d.obi), ("OBOE", &d.oboe), ("QUDT", &d.qudt), ("CSV", &d.csv)] {
                let doc = kb.export_statement(cw, &s).map_err(fail)?.document;
                let back = kb.import_statement(cw, &doc, None).map_err(|e| format!("{name}: {e}"))?;
                let input = normalize(&kb.reconstruct(&back, false).map_err(fail)?.input, kb.terms());
                ensure!(input == original, "{name} round trip of {subject} {value} differs");
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} round trips exact"))
}

/// Has-part schema against the golden OWL document.
fn criterion_7() -> Outcome {
    let (kb, d) = demo()?;
    let doc = kb.owl_schema(&d.has_part).map_err(fail)?;
    let golden: Json =
        serde_json::from_str(&fixtures::HAS_PART_OWL_GOLDEN.replace("${CLASS}", d.has_part.as_str())).map_err(fail)?;
    let props = serde_json::to_value(&doc.properties).map_err(fail)?;
    ensure!(props == golden["properties"], "properties differ: {props}");
    ensure!(doc.statement_class_label == golden["statement_class_label"], "class label differs");
    let p = &golden["properties"][0];
    Ok(format!("'{}' subPropertyOf {} domain=range={} axioms {}", p["label"].as_str().unwrap_or(""), p["sub_property_of"], p["domain"], p["axioms"]))
}

/// Exact label strings.
fn criterion_8() -> Outcome {
    let (mut kb, d) = demo()?;
    let apple = kb.create_statement(d.apple_request()).map_err(fail)?;
    let got = kb.render_label(&apple, None).map_err(fail)?;
    ensure!(got == "This apple has a weight of 212.45 gram", "apple rendered as {got:?}");
    let cases: [(&[(&str, Value)], &str); 3] = [
        (
            &[
                ("TRANSPORTATION", Value::individual(upri(TRAIN))),
                ("DEPARTURE_LOCATION", Value::individual(upri(HANNOVER))),
                ("DATETIME", fixtures::date("2023-05-01")),
            ],
            "Ada travels by train from Hannover to Berlin on the 2023-05-01",
        ),
        (&[], "Ada travels to Berlin"),
        (&[("TRANSPORTATION", Value::individual(upri(TRAIN)))], "Ada travels by train to Berlin"),
    ];
    for (optional, want) in cases {
        let s = kb.create_statement(d.travel_request(ADA, BERLIN, optional)).map_err(fail)?;
        let got = kb.render_label(&s, Some(&d.travel_label)).map_err(fail)?;
        ensure!(got == want, "travel rendered as {got:?}, expected {want:?}");
    }
    Ok("apple label and 3 travel elision variants exact".into())
}

/// full_to_light(create(full, x)) == create(light, x); light to full rejected.
fn criterion_9() -> Outcome {
    let mut w = World::new(99);
    let d = w.demo.clone();
    let mut inputs = vec![
        d.apple_request(),
        d.travel_request(ADA, BERLIN, &[("TRANSPORTATION", Value::individual(upri(TRAIN)))]),
        d.has_part_request(APPLE, fixtures::APPLE_2),
        StatementRequest::new(StatementInput {
            schema: d.ci_weight.clone(),
            subject: Resource::individual(upri(APPLE)),
            bindings: BTreeMap::from([
                ("VALUE".to_owned(), fixtures::decimal("212.45")),
                ("UNIT".to_owned(), Value::individual(upri(GRAM))),
                ("LOWER_BOUND".to_owned(), fixtures::decimal("210")),
                ("UPPER_BOUND".to_owned(), fixtures::decimal("215")),
                ("CONFIDENCE_LEVEL".to_owned(), fixtures::decimal("0.95")),
            ]),
        }),
    ];
    inputs.extend((0..60).map(|_| w.random_request()));
    let mut schemas = BTreeSet::new();
    for req in inputs {
        schemas.insert(req.schema.clone());
        let full = w.kb.create_statement(req.clone().paradigm(Paradigm::Full)).map_err(fail)?;
        let light = w.kb.create_statement(req.paradigm(Paradigm::Light)).map_err(fail)?;
        let a = w.kb.full_to_light(&full).map_err(fail)?;
        let b = w.kb.statement(&light).map_err(fail)?.light_view();
        ensure!(a == b, "downgrade of {full} differs from {light}");
        ensure!(
            matches!(w.kb.light_to_full(&light), Err(Error::LightToFullUnsupported)),
            "light to full conversion was not rejected"
        );
    }
    Ok(format!("64 inputs over {} schemas equal; light to full rejected", schemas.len()))
}

// ---- criterion 10: a real process killed mid-sequence ----

struct Server {
    child: Child,
    addr: String,
}

impl Server {
    fn start(dir: &Path) -> Result<Server, String> {
        let mut child = Command::new(env!("CARGO_BIN_EXE_rosetta"))
            .args(["serve", "--bind", "127.0.0.1:0"])
            .env("ROSETTA_DATA_DIR", dir)
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(fail)?;
        let mut line = String::new();
        BufReader::new(child.stdout.take().ok_or("no stdout")?).read_line(&mut line).map_err(fail)?;
        let addr = line.trim().strip_prefix("listening on ").ok_or_else(|| format!("unexpected banner {line:?}"))?.to_owned();
        Ok(Server { child, addr })
    }

    /// SIGKILL: no shutdown hooks, no final snapshot.
    fn kill(mut self) -> Result<(), String> {
        self.child.kill().map_err(fail)?;
        self.child.wait().map_err(fail)?;
        Ok(())
    }

    fn call(&self, method: &str, path: &str, body: Option<&Json>) -> Result<(u16, Json), String> {
        let mut stream = TcpStream::connect(&self.addr).map_err(fail)?;
        let payload = body.map(Json::to_string).unwrap_or_default();
        write!(
            stream,
            "{method} {path} HTTP/1.1\r\nHost: {}\r\nConnection: close\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{payload}",
            self.addr,
            payload.len()
        )
        .map_err(fail)?;
        let mut raw = Vec::new();
        stream.read_to_end(&mut raw).map_err(fail)?;
        let text = String::from_utf8(raw).map_err(fail)?;
        let (head, body) = text.split_once("\r\n\r\n").ok_or("malformed response")?;
        ensure!(!head.to_ascii_lowercase().contains("transfer-encoding: chunked"), "chunked response");
        let status = head.split_whitespace().nth(1).and_then(|s| s.parse().ok()).ok_or("no status")?;
        let json = if body.is_empty() { Json::Null } else { serde_json::from_str(body).map_err(fail)? };
        Ok((status, json))
    }

    fn ok(&self, method: &str, path: &str, body: Option<&Json>) -> Result<Json, String> {
        let (status, v) = self.call(method, path, body)?;
        ensure!((200..300).contains(&status), "{method} {path} -> {status}: {v}");
        Ok(v)
    }

    fn ids(&self, path: &str, key: &str) -> Result<Vec<String>, String> {
        let list = self.ok("GET", path, None)?;
        Ok(list.as_array().ok_or("not a list")?.iter().filter_map(|v| v[key].as_str().map(str::to_owned)).collect())
    }

    /// Every readable resource, as status plus key-sorted body.
    fn observe(&self) -> Result<BTreeMap<String, (u16, String)>, String> {
        let mut paths = vec![
            "/health".to_owned(),
            "/schemas".into(),
            "/terms".into(),
            "/crosswalks".into(),
            "/templates".into(),
            "/statements?include_deleted=true".into(),
            "/crosswalks/counts?n=8".into(),
            "/terms/uo:0000021/resolve?vocab=qudt".into(),
        ];
        for s in self.ids("/schemas", "statement_class")? {
            for tail in ["", "/shape", "/owl", "/wizard-spec"] {
                paths.push(format!("/schemas/{s}{tail}"));
            }
        }
        for c in self.ids("/crosswalks", "id")? {
            paths.push(format!("/crosswalks/{c}"));
        }
        for t in self.ids("/templates", "upri")? {
            paths.push(format!("/templates/{t}"));
        }
        let statements = self.ok("GET", "/statements?include_deleted=true", None)?;
        for doc in statements.as_array().ok_or("not a list")? {
            let s = doc["upri"].as_str().ok_or("statement without id")?;
            for tail in ["", "?include_deleted=true", "/history", "/reconstruct?include_deleted=true", "/render", "/mindmap"] {
                paths.push(format!("/statements/{s}{tail}"));
            }
            for v in doc["versions"].as_array().into_iter().flatten() {
                paths.push(format!("/statements/{s}/versions/{}", v["upri"].as_str().unwrap_or_default()));
            }
        }
        paths.into_iter().map(|p| self.call("GET", &p, None).map(|(st, v)| (p, (st, common::sorted(&v))))).collect()
    }
}

fn mutations(ids: &BTreeMap<String, String>, rng: &mut impl Rng, n: usize) -> Vec<(String, String, Option<Json>)> {
    let weight = &ids["weight-schema"];
    let mut ops = Vec::new();
    for i in 0..n {
        let value = format!("{}.{:02}", rng.gen_range(1..900), rng.gen_range(0..100));
        let subject = [APPLE, fixtures::APPLE_2, fixtures::APPLE_3][i % 3];
        let paradigm = if i % 2 == 0 { "full" } else { "light" };
        ops.push(("POST".into(), "/statements".into(), Some(common::weight_request(weight, subject, &value, GRAM, paradigm))));
    }
    ops
}

fn compare(label: &str, before: &BTreeMap<String, (u16, String)>, after: &BTreeMap<String, (u16, String)>) -> Result<(), String> {
    ensure!(before.len() == after.len(), "{label}: {} resources before, {} after", before.len(), after.len());
    for (path, got) in after {
        ensure!(before.get(path) == Some(got), "{label}: GET {path} differs after recovery");
    }
    Ok(())
}

/// Runs statement writes against a live server, kills it mid-sequence and
/// twice more, and checks every GET response after each restart.
fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().map_err(fail)?;
    let status = Command::new(env!("CARGO_BIN_EXE_rosetta"))
        .args(["--json", "demo", "load", "--with-statements"])
        .env("ROSETTA_DATA_DIR", dir.path())
        .output()
        .map_err(fail)?;
    ensure!(status.status.success(), "demo load failed: {}", String::from_utf8_lossy(&status.stderr));
    let ids: BTreeMap<String, String> = serde_json::from_slice(&status.stdout).map_err(fail)?;
    let mut rng = StdRng::seed_from_u64(10);
    let mut compared = 0;
    let mut server = Server::start(dir.path())?;
    let mut created: Vec<(String, bool)> = Vec::new();
    for round in 0..3 {
        for (method, path, body) in mutations(&ids, &mut rng, 12) {
            let v = server.ok(&method, &path, body.as_ref())?;
            created.push((v["upri"].as_str().unwrap_or_default().to_owned(), v["paradigm"] == "full"));
        }
        // edits, versions, classifications and deletions on what exists so far
        for (i, (s, full)) in created.clone().iter().enumerate().filter(|(i, _)| i % 3 == round) {
            if *full {
                server.ok("POST", &format!("/statements/{s}/versions"), Some(&json!({"creator": "ann"})))?;
                let edit = json!({"value": common::literal(&format!("{}.5", i + 1), "decimal"), "creator": "bob"});
                server.ok("PATCH", &format!("/statements/{s}/positions/VALUE"), Some(&edit))?;
            }
            if i % 4 == 0 {
                let _ = server.call("POST", &format!("/statements/{s}/classify"), Some(&json!({"tag": "contingent"})))?;
            }
            if i % 5 == 1 {
                let _ = server.call("DELETE", &format!("/statements/{s}?creator=carl"), None)?;
            }
        }
        let before = server.observe()?;
        server.kill()?;
        if round == 2 {
            // a write torn by the crash
            let mut log = std::fs::OpenOptions::new().append(true).open(dir.path().join("events.jsonl")).map_err(fail)?;
            log.write_all(br#"{"seq":999999,"event":{"type":"create-sta"#).map_err(fail)?;
        }
        server = Server::start(dir.path())?;
        let after = server.observe()?;
        compare(&format!("restart {}", round + 1), &before, &after)?;
        compared += after.len();
    }
    server.kill()?;
    Ok(format!("3 kills, {compared} GET responses identical after replay"))
}

fn main() -> ExitCode {
    let criteria: [(u8, fn() -> Outcome); 10] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
    ];
    let start = Instant::now();
    let mut failed = 0;
    let mut out = std::io::stdout().lock();
    for (n, check) in criteria {
        let t = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let ms = t.elapsed().as_millis();
        let _ = match &result {
            Ok(detail) => writeln!(out, "criterion {n}: PASS ({detail}; {ms} ms)"),
            Err(why) => {
                failed += 1;
                writeln!(out, "criterion {n}: FAIL ({why}; {ms} ms)")
            }
        };
    }
    let _ = writeln!(out, "acceptance: {}/10 passed in {:.1} s", 10 - failed, start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
