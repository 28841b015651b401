//! Read-side helpers: filters, scoped timelines, release diffs and ordering
//! checks. "Before" always means earlier ledger position; timestamps are
//! shown but never used for ordering.

use std::fmt;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::canonical::canonical_string;
use crate::event::{EventRecord, EventType, ScopeKey};

const SUMMARY_MAX_CHARS: usize = 120;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QueryError {
    #[error("unknown event id {0}")]
    UnknownEventId(String),
    #[error("time_from is after time_to")]
    InvertedRange,
}

/// Conjunctive filter; unset fields match everything. Time bounds are
/// inclusive at `time_from` and exclusive at `time_to`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventFilter {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deployment_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_types: Option<Vec<EventType>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_from: Option<DateTime<Utc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_to: Option<DateTime<Utc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actor: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<String>,
}

impl EventFilter {
    pub fn new() -> Self {
        EventFilter::default()
    }

    pub fn scope(mut self, key: ScopeKey, value: impl Into<String>) -> Self {
        let v = Some(value.into());
        match key {
            ScopeKey::ModelId => self.model_id = v,
            ScopeKey::DatasetId => self.dataset_id = v,
            ScopeKey::DeploymentId => self.deployment_id = v,
        }
        self
    }

    pub fn types(mut self, types: impl IntoIterator<Item = EventType>) -> Self {
        self.event_types = Some(types.into_iter().collect());
        self
    }

    pub fn is_empty(&self) -> bool {
        *self == EventFilter::default()
    }

    pub fn validate(&self) -> Result<(), QueryError> {
        match (self.time_from, self.time_to) {
            (Some(a), Some(b)) if a > b => Err(QueryError::InvertedRange),
            _ => Ok(()),
        }
    }

    pub fn matches(&self, r: &EventRecord) -> bool {
        fn eq(want: &Option<String>, got: Option<&str>) -> bool {
            want.as_deref().is_none_or(|w| got == Some(w))
        }
        if !eq(&self.model_id, r.model_id.as_deref())
            || !eq(&self.dataset_id, r.dataset_id.as_deref())
            || !eq(&self.deployment_id, r.deployment_id.as_deref())
            || !eq(&self.actor, Some(&r.actor))
            || !eq(&self.system, Some(&r.system))
        {
            return false;
        }
        if let Some(types) = &self.event_types {
            if !types.contains(&r.event_type) {
                return false;
            }
        }
        if self.time_from.is_some() || self.time_to.is_some() {
            // records with unreadable timestamps never satisfy a time bound
            let Some(ts) = r.parsed_timestamp() else {
                return false;
            };
            if self.time_from.is_some_and(|from| ts < from) {
                return false;
            }
            if self.time_to.is_some_and(|to| ts >= to) {
                return false;
            }
        }
        true
    }
}

impl fmt::Display for EventFilter {
    /// Stable one-line rendering, used as an export's filter description.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (k, v) in [
            ("model_id", &self.model_id),
            ("dataset_id", &self.dataset_id),
            ("deployment_id", &self.deployment_id),
            ("actor", &self.actor),
            ("system", &self.system),
        ] {
            if let Some(v) = v {
                parts.push(format!("{k}={v}"));
            }
        }
        if let Some(types) = &self.event_types {
            let names: Vec<&str> = types.iter().map(EventType::as_str).collect();
            parts.push(format!("type={}", names.join(",")));
        }
        if let Some(t) = self.time_from {
            parts.push(format!("from={}", t.to_rfc3339_opts(SecondsFormat::AutoSi, true)));
        }
        if let Some(t) = self.time_to {
            parts.push(format!("to={}", t.to_rfc3339_opts(SecondsFormat::AutoSi, true)));
        }
        if parts.is_empty() {
            f.write_str("all")
        } else {
            f.write_str(&parts.join(" "))
        }
    }
}

/// Order-preserving subsequence of matching records.
pub fn filter_events<'a>(records: &'a [EventRecord], filter: &EventFilter) -> Vec<&'a EventRecord> {
    records.iter().filter(|r| filter.matches(r)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineRow {
    pub timestamp: String,
    pub event_type: EventType,
    pub event_id: String,
    pub summary: String,
}

pub fn summarize(details: &Value) -> String {
    let s = canonical_string(details).unwrap_or_else(|_| details.to_string());
    s.chars().take(SUMMARY_MAX_CHARS).collect()
}

pub fn timeline(records: &[EventRecord], key: ScopeKey, value: &str) -> Vec<TimelineRow> {
    let filter = EventFilter::new().scope(key, value);
    filter_events(records, &filter)
        .into_iter()
        .map(|r| TimelineRow {
            timestamp: r.timestamp.clone(),
            event_type: r.event_type.clone(),
            event_id: r.event_id.clone(),
            summary: summarize(&r.details),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Change {
    pub path: String,
    pub before: Value,
    pub after: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathValue {
    pub path: String,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReleaseDiff {
    pub base_event_id: String,
    pub other_event_id: String,
    pub changed: Vec<Change>,
    pub added: Vec<PathValue>,
    pub removed: Vec<PathValue>,
}

impl ReleaseDiff {
    pub fn is_empty(&self) -> bool {
        self.changed.is_empty() && self.added.is_empty() && self.removed.is_empty()
    }
}

/// Structural diff of the `details` of two events.
pub fn diff_releases(records: &[EventRecord], a: &str, b: &str) -> Result<ReleaseDiff, QueryError> {
    let find = |id: &str| {
        records
            .iter()
            .find(|r| r.event_id == id)
            .ok_or_else(|| QueryError::UnknownEventId(id.to_string()))
    };
    let ra = find(a)?;
    let rb = find(b)?;
    let mut diff = ReleaseDiff {
        base_event_id: a.to_string(),
        other_event_id: b.to_string(),
        changed: Vec::new(),
        added: Vec::new(),
        removed: Vec::new(),
    };
    diff_values(&ra.details, &rb.details, String::new(), &mut diff);
    diff.changed.sort_by(|x, y| x.path.cmp(&y.path));
    diff.added.sort_by(|x, y| x.path.cmp(&y.path));
    diff.removed.sort_by(|x, y| x.path.cmp(&y.path));
    Ok(diff)
}

fn escape_segment(s: &str) -> String {
    s.replace('~', "~0").replace('/', "~1")
}

// Objects recurse; everything else (arrays included) compares as a leaf.
fn diff_values(before: &Value, after: &Value, path: String, out: &mut ReleaseDiff) {
    match (before, after) {
        (Value::Object(a), Value::Object(b)) => {
            for (k, va) in a {
                let p = format!("{path}/{}", escape_segment(k));
                match b.get(k) {
                    Some(vb) => diff_values(va, vb, p, out),
                    None => out.removed.push(PathValue { path: p, value: va.clone() }),
                }
            }
            for (k, vb) in b {
                if !a.contains_key(k) {
                    let p = format!("{path}/{}", escape_segment(k));
                    out.added.push(PathValue { path: p, value: vb.clone() });
                }
            }
        }
        _ if before == after => {}
        _ => out.changed.push(Change {
            path,
            before: before.clone(),
            after: after.clone(),
        }),
    }
}

/// True iff every record matching `later` has some earlier-positioned
/// record matching `earlier`.
pub fn order_check(records: &[EventRecord], earlier: &EventFilter, later: &EventFilter) -> bool {
    let mut seen = false;
    for r in records {
        if later.matches(r) && !seen {
            return false;
        }
        seen |= earlier.matches(r);
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::GENESIS;
    use proptest::prelude::*;
    use serde_json::json;

    fn rec(i: usize, t: EventType, m: Option<&str>, d: Option<&str>, details: Value) -> EventRecord {
        EventRecord {
            event_id: format!("e{i}"),
            timestamp: format!("2025-01-{:02}T00:00:00Z", i + 1),
            system: "s".into(),
            actor: if i.is_multiple_of(2) { "alice" } else { "bob" }.into(),
            event_type: t,
            model_id: m.map(String::from),
            dataset_id: None,
            deployment_id: d.map(String::from),
            details,
            prev_hash: GENESIS.into(),
            curr_hash: String::new(),
            sig: None,
        }
    }

    fn five() -> Vec<EventRecord> {
        vec![
            rec(0, EventType::Evaluation, Some("m1"), None, json!({})),
            rec(1, EventType::Evaluation, Some("m2"), None, json!({})),
            rec(2, EventType::Approval, Some("m1"), Some("d1"), json!({})),
            rec(3, EventType::Approval, Some("m2"), Some("d2"), json!({})),
            rec(4, EventType::DeploymentCompleted, Some("m1"), Some("d1"), json!({})),
        ]
    }

    fn ids(rs: &[&EventRecord]) -> Vec<String> {
        rs.iter().map(|r| r.event_id.clone()).collect()
    }

    #[test]
    fn empty_filter_is_identity() {
        let r = five();
        assert_eq!(filter_events(&r, &EventFilter::new()).len(), 5);
    }

    #[test]
    fn model_filter() {
        let r = five();
        let f = EventFilter::new().scope(ScopeKey::ModelId, "m1");
        assert_eq!(ids(&filter_events(&r, &f)), ["e0", "e2", "e4"]);
    }

    #[test]
    fn conjunction() {
        let r = five();
        let f = EventFilter::new()
            .types([EventType::Approval])
            .scope(ScopeKey::DeploymentId, "d1");
        assert_eq!(ids(&filter_events(&r, &f)), ["e2"]);
    }

    #[test]
    fn time_bounds_half_open() {
        let r = five();
        let f = EventFilter {
            time_from: Some("2025-01-02T00:00:00Z".parse().unwrap()),
            time_to: Some("2025-01-04T00:00:00Z".parse().unwrap()),
            ..Default::default()
        };
        assert_eq!(ids(&filter_events(&r, &f)), ["e1", "e2"]);
        let inverted = EventFilter {
            time_from: f.time_to,
            time_to: f.time_from,
            ..Default::default()
        };
        assert_eq!(inverted.validate(), Err(QueryError::InvertedRange));
    }

    #[test]
    fn timeline_rows() {
        let r = five();
        let rows = timeline(&r, ScopeKey::DeploymentId, "d1");
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].event_type, EventType::Approval);
        assert_eq!(rows[1].event_id, "e4");
        assert!(timeline(&r, ScopeKey::DeploymentId, "nope").is_empty());
    }

    #[test]
    fn summary_is_sorted_and_truncated() {
        assert_eq!(summarize(&json!({"b":1,"a":2})), r#"{"a":2,"b":1}"#);
        let long = json!({"k": "x".repeat(300)});
        assert_eq!(summarize(&long).chars().count(), 120);
    }

    #[test]
    fn diff_examples() {
        let r = vec![
            rec(0, EventType::ServingConfigChanged, None, Some("d"), json!({"temperature":0.7})),
            rec(1, EventType::ServingConfigChanged, None, Some("d"), json!({"temperature":0.2})),
            rec(2, EventType::ServingConfigChanged, None, Some("d"), json!({"prompt_template":"v1"})),
            rec(3, EventType::ServingConfigChanged, None, Some("d"), json!({"prompt_template":"v2","guardrail":"on"})),
        ];
        let d = diff_releases(&r, "e0", "e1").unwrap();
        assert_eq!(
            d.changed,
            vec![Change { path: "/temperature".into(), before: json!(0.7), after: json!(0.2) }]
        );
        assert!(d.added.is_empty() && d.removed.is_empty());

        assert!(diff_releases(&r, "e0", "e0").unwrap().is_empty());

        let d = diff_releases(&r, "e2", "e3").unwrap();
        assert_eq!(d.changed.len(), 1);
        assert_eq!(d.changed[0].path, "/prompt_template");
        assert_eq!(d.added, vec![PathValue { path: "/guardrail".into(), value: json!("on") }]);

        assert_eq!(diff_releases(&r, "e0", "zz"), Err(QueryError::UnknownEventId("zz".into())));
    }

    #[test]
    fn diff_escapes_and_nests() {
        let r = vec![
            rec(0, EventType::Evaluation, Some("m"), None, json!({"a/b":{"x":1,"y":[1,2]}})),
            rec(1, EventType::Evaluation, Some("m"), None, json!({"a/b":{"x":2,"y":[1,3]}})),
        ];
        let d = diff_releases(&r, "e0", "e1").unwrap();
        let paths: Vec<_> = d.changed.iter().map(|c| c.path.as_str()).collect();
        assert_eq!(paths, ["/a~1b/x", "/a~1b/y"]);
    }

    #[test]
    fn order_check_examples() {
        let approval = EventFilter::new().types([EventType::Approval]).scope(ScopeKey::ModelId, "m1");
        let deployed = EventFilter::new()
            .types([EventType::DeploymentCompleted])
            .scope(ScopeKey::ModelId, "m1");
        let r = five();
        assert!(order_check(&r, &approval, &deployed));
        let without: Vec<_> = r.iter().filter(|x| x.event_id != "e2").cloned().collect();
        assert!(!order_check(&without, &approval, &deployed));
        let nothing = EventFilter::new().scope(ScopeKey::ModelId, "m9");
        assert!(order_check(&r, &approval, &nothing));
    }

    fn arb_records() -> impl Strategy<Value = Vec<EventRecord>> {
        let types = prop::sample::select(vec![
            EventType::Evaluation,
            EventType::Approval,
            EventType::DeploymentCompleted,
        ]);
        let scope = prop::option::of(prop::sample::select(vec!["m1", "m2"]));
        prop::collection::vec((types, scope.clone(), scope), 0..20).prop_map(|v| {
            v.into_iter()
                .enumerate()
                .map(|(i, (t, m, d))| rec(i, t, m, d, json!({"i": i})))
                .collect()
        })
    }

    fn arb_filter() -> impl Strategy<Value = EventFilter> {
        let s = prop::option::of(prop::sample::select(vec!["m1".to_string(), "m2".to_string()]));
        let t = prop::option::of(prop::sample::subsequence(
            vec![EventType::Evaluation, EventType::Approval, EventType::DeploymentCompleted],
            0..3,
        ));
        (s.clone(), s, t).prop_map(|(m, d, t)| EventFilter {
            model_id: m,
            deployment_id: d,
            event_types: t,
            ..Default::default()
        })
    }

    fn arb_details() -> impl Strategy<Value = Value> {
        let leaf = prop_oneof![Just(json!(null)), any::<i8>().prop_map(|i| json!(i)), "[ab]{0,2}".prop_map(Value::String)];
        leaf.prop_recursive(3, 20, 4, |inner| {
            prop::collection::btree_map("[abc/~]{1,2}", inner, 0..4)
                .prop_map(|m| Value::Object(m.into_iter().collect()))
        })
    }

    proptest! {
        #[test]
        fn filter_is_subsequence(r in arb_records(), f in arb_filter()) {
            let out = filter_events(&r, &f);
            let mut it = r.iter();
            for x in out {
                prop_assert!(it.any(|y| std::ptr::eq(x, y)));
            }
        }

        #[test]
        fn filters_compose(r in arb_records(), f1 in arb_filter(), f2 in arb_filter()) {
            let once: Vec<EventRecord> = filter_events(&r, &f1).into_iter().cloned().collect();
            let twice = ids(&filter_events(&once, &f2));
            let brute: Vec<String> = r.iter()
                .filter(|x| f1.matches(x) && f2.matches(x))
                .map(|x| x.event_id.clone())
                .collect();
            prop_assert_eq!(twice, brute);
        }

        #[test]
        fn diff_symmetry(a in arb_details(), b in arb_details()) {
            let r = vec![
                rec(0, EventType::Evaluation, Some("m"), None, a.clone()),
                rec(1, EventType::Evaluation, Some("m"), None, b.clone()),
            ];
            prop_assert!(diff_releases(&r, "e0", "e0").unwrap().is_empty());
            let ab = diff_releases(&r, "e0", "e1").unwrap();
            let ba = diff_releases(&r, "e1", "e0").unwrap();
            prop_assert_eq!(ab.is_empty(), a == b);
            prop_assert_eq!(&ab.added, &ba.removed);
            prop_assert_eq!(&ab.removed, &ba.added);
            let swapped: Vec<Change> = ba.changed.iter()
                .map(|c| Change { path: c.path.clone(), before: c.after.clone(), after: c.before.clone() })
                .collect();
            prop_assert_eq!(ab.changed, swapped);
        }

        #[test]
        fn order_check_monotone(r in arb_records(), pos in 0usize..20, earlier in arb_filter(), later in arb_filter()) {
            prop_assume!(order_check(&r, &earlier, &later));
            let Some(mut x) = r.iter().find(|x| earlier.matches(x)).cloned() else {
                return Ok(());
            };
            x.event_id = "inserted".into();
            let mut r2 = r.clone();
            let at = pos.min(r2.len());
            // a copy that also matches `later` needs its own predecessor
            if later.matches(&x) && !r2[..at].iter().any(|y| earlier.matches(y)) {
                return Ok(());
            }
            r2.insert(at, x);
            prop_assert!(order_check(&r2, &earlier, &later));
        }
    }
}
