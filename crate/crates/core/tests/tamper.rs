use audit_trail::federation::{export_evidence, publish_pointer, verify_package, verify_pointer, ExportOptions};
use audit_trail::ledger::{read_records, Ledger};
use audit_trail::verify::Verifier;
use audit_trail::{generate_keypair, EventDraft, EventFilter, EventStore, EventType, ScopeKey};
use proptest::prelude::*;
use serde_json::{json, Value};

fn build(n: usize) -> (tempfile::TempDir, Ledger) {
    let dir = tempfile::tempdir().unwrap();
    let mut ledger = Ledger::open(dir.path().join("l.jsonl"), None, true).unwrap();
    for i in 0..n {
        let draft = EventDraft::new(EventType::Evaluation, "ci", "bot")
            .with_scope(ScopeKey::ModelId, format!("m{}", i % 4))
            .with_details(json!({"i": i, "score": 0.5 + i as f64 / 1000.0, "ok": i % 2 == 0}));
        ledger.append(draft).unwrap();
    }
    (dir, ledger)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn any_single_byte_change_is_caught(pos_frac in 0.0f64..1.0, byte in any::<u8>()) {
        let (_dir, ledger) = build(20);
        let original = std::fs::read(ledger.path()).unwrap();
        let pos = ((original.len() as f64) * pos_frac) as usize % original.len();
        prop_assume!(original[pos] != byte);
        let mut bytes = original.clone();
        bytes[pos] = byte;
        let record_index = original[..pos].iter().filter(|&&b| b == b'\n').count();
        let report = Verifier::new().verify_bytes(&bytes);
        prop_assert!(!report.valid);
        prop_assert!(report.first_mismatch.unwrap() <= record_index);
    }
}

/// Every scalar leaf of `v`, as a JSON pointer.
fn leaves(v: &Value, path: String, out: &mut Vec<String>) {
    match v {
        Value::Object(m) => {
            for (k, c) in m {
                leaves(c, format!("{path}/{}", k.replace('~', "~0").replace('/', "~1")), out)
            }
        }
        Value::Array(a) => {
            for (i, c) in a.iter().enumerate() {
                leaves(c, format!("{path}/{i}"), out)
            }
        }
        _ => out.push(path),
    }
}

fn perturb(v: &mut Value) {
    *v = match v.take() {
        Value::String(s) if s.is_empty() => json!("x"),
        Value::String(s) => {
            let mut chars: Vec<char> = s.chars().collect();
            chars[0] = if chars[0] == 'a' { 'b' } else { 'a' };
            Value::String(chars.into_iter().collect())
        }
        Value::Number(n) => json!(n.as_f64().unwrap() + 1.0),
        Value::Bool(b) => json!(!b),
        Value::Null => json!("x"),
        other => other,
    };
}

#[test]
fn package_rejects_every_leaf_mutation() {
    let (_dir, mut ledger) = build(8);
    let key = generate_keypair(Some(b"exporter"));
    let filter = EventFilter::new().scope(ScopeKey::ModelId, "m1");
    let opts = ExportOptions {
        redact_non_matching: true,
        actor: "auditor".into(),
    };
    let pkg = export_evidence(&mut ledger, &filter, &key, &opts).unwrap();
    assert!(verify_package(&pkg, Some(&key.public_key), None).ok());
    assert!(!pkg.redacted_event_ids.is_empty());

    let value = serde_json::to_value(&pkg).unwrap();
    let mut paths = Vec::new();
    leaves(&value, String::new(), &mut paths);
    assert!(paths.len() > 50);
    for p in paths {
        let mut v = value.clone();
        perturb(v.pointer_mut(&p).unwrap());
        let accepted = serde_json::from_value(v)
            .map(|m| verify_package(&m, Some(&key.public_key), None).ok())
            .unwrap_or(false);
        assert!(!accepted, "mutation at {p} went unnoticed");
    }
}

#[test]
fn pointer_rejects_every_leaf_mutation() {
    let (_dir, mut ledger) = build(5);
    let key = generate_keypair(Some(b"publisher"));
    let target = read_records(ledger.path()).unwrap().records[3].clone();
    let pointer = publish_pointer(&mut ledger, &target.event_id, &["/score".into(), "/ok".into()], &key, "pub").unwrap();
    let check = verify_pointer(&pointer, &key.public_key, Some(&target));
    assert!(check.sig_ok && check.event_ok == Some(true));

    let value = serde_json::to_value(&pointer).unwrap();
    let mut paths = Vec::new();
    leaves(&value, String::new(), &mut paths);
    for p in paths {
        let mut v = value.clone();
        perturb(v.pointer_mut(&p).unwrap());
        if let Ok(m) = serde_json::from_value(v) {
            assert!(!verify_pointer(&m, &key.public_key, None).sig_ok, "mutation at {p} went unnoticed");
        }
    }

    let mut changed = target.clone();
    changed.details["score"] = json!(0.99);
    assert_eq!(verify_pointer(&pointer, &key.public_key, Some(&changed)).event_ok, Some(false));
    let other = generate_keypair(Some(b"someone else"));
    assert!(!verify_pointer(&pointer, &other.public_key, None).sig_ok);
    assert_eq!(ledger.read_all().unwrap().records.last().unwrap().event_type, EventType::PointerPublished);
}
