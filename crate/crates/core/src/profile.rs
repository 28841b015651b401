//! Sector profiles: declarative rules over the core schema, loaded from YAML
//! and evaluated to a list of violations.
//!
//! ```yaml
//! name: high_risk
//! rules:
//!   - name: approval_before_deployment
//!     kind: require_before
//!     trigger_type: DeploymentCompleted
//!     required_type: Approval
//!     scope_keys: [model_id, deployment_id]
//! ```
//!
//! Cadence is the only rule kind that reads timestamps; everything else is
//! decided by ledger position.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::{DateTime, SecondsFormat, TimeDelta, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event::{detail_at, parse_timestamp, EventRecord, EventType, ScopeKey};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProfileError {
    #[error("cannot parse profile: {0}")]
    ParseFailure(String),
    #[error("rule {rule}: unknown kind {kind}")]
    UnknownRuleKind { rule: String, kind: String },
    #[error("rule {rule}: {reason}")]
    InvalidParameters { rule: String, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub name: String,
    pub rules: Vec<Rule>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub name: String,
    pub kind: RuleKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RuleKind {
    RequireBefore {
        trigger_type: EventType,
        required_type: EventType,
        scope_keys: Vec<ScopeKey>,
    },
    Cadence {
        event_type: EventType,
        max_interval: TimeDelta,
        scope_keys: Vec<ScopeKey>,
        window: Option<Window>,
    },
    RequiredFields {
        event_type: EventType,
        required_detail_paths: Vec<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub from: DateTime<Utc>,
    pub to: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gap {
    pub from_instant: String,
    pub to_instant: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule_name: String,
    pub event_id: Option<String>,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<Gap>,
}

// -- loading -----------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    name: String,
    #[serde(default)]
    rules: Vec<RawRule>,
}

#[derive(Deserialize)]
struct RawRule {
    name: String,
    kind: String,
    #[serde(flatten)]
    params: serde_yaml::Mapping,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RequireBeforeParams {
    trigger_type: EventType,
    required_type: EventType,
    scope_keys: Vec<ScopeKey>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CadenceParams {
    event_type: EventType,
    max_interval: String,
    scope_keys: Vec<ScopeKey>,
    #[serde(default)]
    window: Option<Window>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RequiredFieldsParams {
    event_type: EventType,
    required_detail_paths: Vec<String>,
}

pub fn load_profile(path: impl AsRef<Path>) -> Result<Profile, ProfileError> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| ProfileError::ParseFailure(format!("{}: {e}", path.as_ref().display())))?;
    Profile::from_yaml(&text)
}

impl Profile {
    pub fn from_yaml(text: &str) -> Result<Profile, ProfileError> {
        let raw: RawProfile =
            serde_yaml::from_str(text).map_err(|e| ProfileError::ParseFailure(e.to_string()))?;
        let mut names = BTreeSet::new();
        let mut rules = Vec::with_capacity(raw.rules.len());
        for r in raw.rules {
            let invalid = |reason: String| ProfileError::InvalidParameters {
                rule: r.name.clone(),
                reason,
            };
            if !names.insert(r.name.clone()) {
                return Err(invalid("duplicate rule name".into()));
            }
            let params = serde_yaml::Value::Mapping(r.params.clone());
            let kind = match r.kind.as_str() {
                "require_before" => {
                    let p: RequireBeforeParams =
                        serde_yaml::from_value(params).map_err(|e| invalid(e.to_string()))?;
                    known_type(&p.trigger_type).map_err(invalid)?;
                    known_type(&p.required_type).map_err(invalid)?;
                    scope_keys_ok(&p.scope_keys).map_err(invalid)?;
                    RuleKind::RequireBefore {
                        trigger_type: p.trigger_type,
                        required_type: p.required_type,
                        scope_keys: p.scope_keys,
                    }
                }
                "cadence" => {
                    let p: CadenceParams =
                        serde_yaml::from_value(params).map_err(|e| invalid(e.to_string()))?;
                    known_type(&p.event_type).map_err(invalid)?;
                    scope_keys_ok(&p.scope_keys).map_err(invalid)?;
                    let max_interval = parse_duration(&p.max_interval).map_err(invalid)?;
                    if let Some(w) = p.window {
                        if w.from > w.to {
                            return Err(invalid("window.from is after window.to".into()));
                        }
                    }
                    RuleKind::Cadence {
                        event_type: p.event_type,
                        max_interval,
                        scope_keys: p.scope_keys,
                        window: p.window,
                    }
                }
                "required_fields" => {
                    let p: RequiredFieldsParams =
                        serde_yaml::from_value(params).map_err(|e| invalid(e.to_string()))?;
                    known_type(&p.event_type).map_err(invalid)?;
                    if p.required_detail_paths.is_empty() {
                        return Err(invalid("required_detail_paths is empty".into()));
                    }
                    RuleKind::RequiredFields {
                        event_type: p.event_type,
                        required_detail_paths: p.required_detail_paths,
                    }
                }
                other => {
                    return Err(ProfileError::UnknownRuleKind {
                        rule: r.name.clone(),
                        kind: other.to_string(),
                    })
                }
            };
            rules.push(Rule { name: r.name, kind });
        }
        Ok(Profile { name: raw.name, rules })
    }
}

fn known_type(t: &EventType) -> Result<(), String> {
    if t.is_known() {
        Ok(())
    } else {
        Err(format!("unknown event type {t}"))
    }
}

fn scope_keys_ok(keys: &[ScopeKey]) -> Result<(), String> {
    if keys.is_empty() {
        Err("scope_keys is empty".into())
    } else {
        Ok(())
    }
}

/// Parses a positive ISO-8601 duration made of week, day, hour, minute and
/// second units. Years and months have no fixed length and are refused.
pub fn parse_duration(s: &str) -> Result<TimeDelta, String> {
    // the parser accepts trailing garbage, so check the alphabet first
    let body = s.strip_prefix('P').ok_or_else(|| format!("bad duration {s:?}"))?;
    if body.is_empty() || !body.chars().all(|c| c.is_ascii_digit() || "WDTHMS.,".contains(c)) {
        return Err(format!("bad duration {s:?}"));
    }
    let d: iso8601::Duration = s.parse()?;
    let delta = match d {
        iso8601::Duration::Weeks(w) => TimeDelta::weeks(w.into()),
        iso8601::Duration::YMDHMS {
            year,
            month,
            day,
            hour,
            minute,
            second,
            millisecond,
        } => {
            if year != 0 || month != 0 {
                return Err(format!("{s}: calendar years and months are not supported"));
            }
            TimeDelta::days(day.into())
                + TimeDelta::hours(hour.into())
                + TimeDelta::minutes(minute.into())
                + TimeDelta::seconds(second.into())
                + TimeDelta::milliseconds(millisecond.into())
        }
    };
    if delta <= TimeDelta::zero() {
        return Err(format!("max_interval {s} must be positive"));
    }
    Ok(delta)
}

// -- evaluation --------------------------------------------------------------

type ScopeTuple = Vec<Option<String>>;

fn scope_tuple(r: &EventRecord, keys: &[ScopeKey]) -> ScopeTuple {
    keys.iter().map(|k| r.scope(*k).map(String::from)).collect()
}

fn describe_scope(keys: &[ScopeKey], tuple: &ScopeTuple) -> String {
    let parts: Vec<String> = keys
        .iter()
        .zip(tuple)
        .filter_map(|(k, v)| v.as_ref().map(|v| format!("{k}={v}")))
        .collect();
    parts.join(",")
}

fn fmt_instant(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

/// Evaluates every rule. The result is sorted by offending ledger position,
/// then rule name; trailing cadence gaps sort after the last record.
pub fn evaluate(profile: &Profile, records: &[EventRecord]) -> Vec<Violation> {
    let mut found: Vec<(usize, Violation)> = Vec::new();
    for rule in &profile.rules {
        match &rule.kind {
            RuleKind::RequireBefore {
                trigger_type,
                required_type,
                scope_keys,
            } => require_before(rule, trigger_type, required_type, scope_keys, records, &mut found),
            RuleKind::Cadence {
                event_type,
                max_interval,
                scope_keys,
                window,
            } => cadence(rule, event_type, *max_interval, scope_keys, *window, records, &mut found),
            RuleKind::RequiredFields {
                event_type,
                required_detail_paths,
            } => {
                for (pos, r) in records.iter().enumerate() {
                    if r.event_type != *event_type {
                        continue;
                    }
                    let missing: Vec<&str> = required_detail_paths
                        .iter()
                        .filter(|p| detail_at(&r.details, p).is_none())
                        .map(String::as_str)
                        .collect();
                    if !missing.is_empty() {
                        found.push((
                            pos,
                            Violation {
                                rule_name: rule.name.clone(),
                                event_id: Some(r.event_id.clone()),
                                description: format!(
                                    "{event_type} {} is missing details {}",
                                    r.event_id,
                                    missing.join(", ")
                                ),
                                gap: None,
                            },
                        ));
                    }
                }
            }
        }
    }
    // stable: gaps from one rule keep their chronological order
    found.sort_by(|a, b| (a.0, &a.1.rule_name).cmp(&(b.0, &b.1.rule_name)));
    found.into_iter().map(|(_, v)| v).collect()
}

fn require_before(
    rule: &Rule,
    trigger_type: &EventType,
    required_type: &EventType,
    keys: &[ScopeKey],
    records: &[EventRecord],
    found: &mut Vec<(usize, Violation)>,
) {
    let mut seen: BTreeSet<ScopeTuple> = BTreeSet::new();
    for (pos, r) in records.iter().enumerate() {
        if r.event_type == *trigger_type {
            let want = scope_tuple(r, keys);
            // keys absent on the trigger do not constrain the match
            let satisfied = seen.iter().any(|have| {
                want.iter()
                    .zip(have)
                    .all(|(w, h)| w.is_none() || w == h)
            });
            if !satisfied {
                let scope = describe_scope(keys, &want);
                found.push((
                    pos,
                    Violation {
                        rule_name: rule.name.clone(),
                        event_id: Some(r.event_id.clone()),
                        description: format!(
                            "{trigger_type} {} has no earlier {required_type}{}",
                            r.event_id,
                            if scope.is_empty() { String::new() } else { format!(" in scope {scope}") }
                        ),
                        gap: None,
                    },
                ));
            }
        }
        // checked after the trigger test: an event never precedes itself
        if r.event_type == *required_type {
            seen.insert(scope_tuple(r, keys));
        }
    }
}

fn cadence(
    rule: &Rule,
    event_type: &EventType,
    max: TimeDelta,
    keys: &[ScopeKey],
    window: Option<Window>,
    records: &[EventRecord],
    found: &mut Vec<(usize, Violation)>,
) {
    // scope tuple -> (timestamp, position) of occurrences; events carrying
    // none of the rule's scope keys belong to no scope
    let mut groups: BTreeMap<ScopeTuple, Vec<(DateTime<Utc>, usize)>> = BTreeMap::new();
    for (pos, r) in records.iter().enumerate() {
        if r.event_type != *event_type {
            continue;
        }
        let tuple = scope_tuple(r, keys);
        if tuple.iter().all(Option::is_none) {
            continue;
        }
        let entry = groups.entry(tuple).or_default();
        let Ok(ts) = parse_timestamp(&r.timestamp) else {
            continue;
        };
        if let Some(w) = window {
            if ts < w.from || ts > w.to {
                continue;
            }
        }
        entry.push((ts, pos));
    }

    let max_text = humanize(max);
    for (tuple, mut hits) in groups {
        hits.sort();
        let scope = describe_scope(keys, &tuple);
        let mut push = |from: DateTime<Utc>, to: DateTime<Utc>, pos: usize| {
            if to - from > max {
                found.push((
                    pos,
                    Violation {
                        rule_name: rule.name.clone(),
                        event_id: None,
                        description: format!(
                            "{event_type} gap of {} exceeds {max_text} for {scope}",
                            humanize(to - from)
                        ),
                        gap: Some(Gap {
                            from_instant: fmt_instant(from),
                            to_instant: fmt_instant(to),
                        }),
                    },
                ));
            }
        };
        if let Some(w) = window {
            match hits.first() {
                Some(&(t, pos)) => push(w.from, t, pos),
                None => push(w.from, w.to, records.len()),
            }
        }
        for pair in hits.windows(2) {
            let ((a, _), (b, pos)) = (pair[0], pair[1]);
            push(a, b, pos);
        }
        if let (Some(w), Some(&(t, _))) = (window, hits.last()) {
            push(t, w.to, records.len());
        }
    }
}

fn humanize(d: TimeDelta) -> String {
    let secs = d.num_seconds();
    if secs % 86_400 == 0 {
        format!("{}d", secs / 86_400)
    } else if secs % 3600 == 0 {
        format!("{}h", secs / 3600)
    } else {
        format!("{secs}s")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::GENESIS;
    use proptest::prelude::*;
    use serde_json::json;

    const HIGH_RISK: &str = r#"
name: high_risk
rules:
  - name: approval_before_deployment
    kind: require_before
    trigger_type: DeploymentCompleted
    required_type: Approval
    scope_keys: [model_id, deployment_id]
"#;

    const CADENCE: &str = r#"
name: drift
rules:
  - name: evaluation_cadence
    kind: cadence
    event_type: Evaluation
    max_interval: P30D
    scope_keys: [model_id]
"#;

    fn rec(i: usize, t: EventType, model: Option<&str>, day: u32) -> EventRecord {
        let ts = chrono::NaiveDate::from_ymd_opt(2025, 1, 1)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap()
            .and_utc()
            + TimeDelta::days(day.into());
        EventRecord {
            event_id: format!("e{i}"),
            timestamp: fmt_instant(ts),
            system: "s".into(),
            actor: "a".into(),
            event_type: t,
            model_id: model.map(String::from),
            dataset_id: None,
            deployment_id: None,
            details: json!({"report": {"id": i}}),
            prev_hash: GENESIS.into(),
            curr_hash: String::new(),
            sig: None,
        }
    }

    #[test]
    fn loads_high_risk() {
        let p = Profile::from_yaml(HIGH_RISK).unwrap();
        assert_eq!(p.name, "high_risk");
        assert_eq!(p.rules.len(), 1);
        assert!(matches!(p.rules[0].kind, RuleKind::RequireBefore { .. }));
    }

    #[test]
    fn empty_rules_are_vacuous() {
        let p = Profile::from_yaml("name: none\nrules: []\n").unwrap();
        assert!(p.rules.is_empty());
        let r = vec![rec(0, EventType::DeploymentCompleted, Some("m1"), 0)];
        assert!(evaluate(&p, &r).is_empty());
    }

    #[test]
    fn load_errors() {
        let zero = CADENCE.replace("P30D", "P0D");
        assert!(matches!(Profile::from_yaml(&zero), Err(ProfileError::InvalidParameters { .. })));
        let months = CADENCE.replace("P30D", "P1M");
        assert!(matches!(Profile::from_yaml(&months), Err(ProfileError::InvalidParameters { .. })));
        let kind = HIGH_RISK.replace("require_before", "eventually");
        assert!(matches!(Profile::from_yaml(&kind), Err(ProfileError::UnknownRuleKind { .. })));
        assert!(matches!(Profile::from_yaml("name: [\n"), Err(ProfileError::ParseFailure(_))));
        let no_keys = HIGH_RISK.replace("[model_id, deployment_id]", "[]");
        assert!(matches!(Profile::from_yaml(&no_keys), Err(ProfileError::InvalidParameters { .. })));
        let bad_key = HIGH_RISK.replace("deployment_id]", "tenant_id]");
        assert!(matches!(Profile::from_yaml(&bad_key), Err(ProfileError::InvalidParameters { .. })));
        let extra = format!("{HIGH_RISK}    severity: high\n");
        assert!(matches!(Profile::from_yaml(&extra), Err(ProfileError::InvalidParameters { .. })));
        let dup = format!("{HIGH_RISK}{}", HIGH_RISK.split("rules:\n").nth(1).unwrap());
        assert!(matches!(Profile::from_yaml(&dup), Err(ProfileError::InvalidParameters { .. })));
    }

    #[test]
    fn durations() {
        assert_eq!(parse_duration("P30D").unwrap(), TimeDelta::days(30));
        assert_eq!(parse_duration("P2W").unwrap(), TimeDelta::days(14));
        assert_eq!(parse_duration("PT36H").unwrap(), TimeDelta::hours(36));
        assert_eq!(
            parse_duration("P1DT2H3M4S").unwrap(),
            TimeDelta::seconds(86_400 + 7_200 + 180 + 4)
        );
        for bad in ["P0D", "PT0S", "P1Y", "P1M", "30D", "P", "P30Dx", "", "-P1D"] {
            assert!(parse_duration(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn approval_then_deployment() {
        let p = Profile::from_yaml(HIGH_RISK).unwrap();
        let ok = vec![
            rec(0, EventType::Approval, Some("m1"), 0),
            rec(1, EventType::DeploymentCompleted, Some("m1"), 1),
        ];
        assert!(evaluate(&p, &ok).is_empty());

        let missing = vec![rec(0, EventType::DeploymentCompleted, Some("m1"), 0)];
        let v = evaluate(&p, &missing);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].event_id.as_deref(), Some("e0"));
        assert_eq!(v[0].rule_name, "approval_before_deployment");

        // an approval for a different model does not count
        let other = vec![
            rec(0, EventType::Approval, Some("m2"), 0),
            rec(1, EventType::DeploymentCompleted, Some("m1"), 1),
        ];
        assert_eq!(evaluate(&p, &other).len(), 1);

        // and one that comes later does not either
        let late = vec![
            rec(0, EventType::DeploymentCompleted, Some("m1"), 0),
            rec(1, EventType::Approval, Some("m1"), 1),
        ];
        assert_eq!(evaluate(&p, &late).len(), 1);
    }

    #[test]
    fn forty_five_day_gap() {
        let p = Profile::from_yaml(CADENCE).unwrap();
        // Jan 1 + 45 days = Feb 15
        let r = vec![
            rec(0, EventType::Evaluation, Some("m1"), 0),
            rec(1, EventType::Evaluation, Some("m1"), 45),
        ];
        let v = evaluate(&p, &r);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].event_id, None);
        assert_eq!(
            v[0].gap,
            Some(Gap {
                from_instant: "2025-01-01T00:00:00Z".into(),
                to_instant: "2025-02-15T00:00:00Z".into()
            })
        );
        // exactly 30 days is within bounds
        let r = vec![
            rec(0, EventType::Evaluation, Some("m1"), 0),
            rec(1, EventType::Evaluation, Some("m1"), 30),
        ];
        assert!(evaluate(&p, &r).is_empty());
    }

    #[test]
    fn cadence_groups_by_scope_and_window() {
        let yaml = format!(
            "{CADENCE}    window: {{from: '2025-01-01T00:00:00Z', to: '2025-04-01T00:00:00Z'}}\n"
        );
        let p = Profile::from_yaml(&yaml).unwrap();
        let r = vec![
            rec(0, EventType::Evaluation, Some("m1"), 10),
            rec(1, EventType::Evaluation, Some("m2"), 35),
            rec(2, EventType::Evaluation, Some("m1"), 30),
            rec(3, EventType::Evaluation, Some("m1"), 60),
        ];
        let v = evaluate(&p, &r);
        // m1: Jan 11, Jan 31, Mar 2 then window end Apr 1 (30d) -> clean
        // m2: window start -> Feb 5 is 35d, Feb 5 -> Apr 1 is 55d
        assert_eq!(v.len(), 2, "{v:?}");
        assert!(v.iter().all(|x| x.description.contains("model_id=m2")));
        assert_eq!(v[0].gap.as_ref().unwrap().from_instant, "2025-01-01T00:00:00Z");
        assert_eq!(v[1].gap.as_ref().unwrap().to_instant, "2025-04-01T00:00:00Z");
    }

    #[test]
    fn required_fields_rule() {
        let yaml = r#"
name: evals
rules:
  - name: eval_has_report
    kind: required_fields
    event_type: Evaluation
    required_detail_paths: [report/id, metrics]
"#;
        let p = Profile::from_yaml(yaml).unwrap();
        let mut r = vec![rec(0, EventType::Evaluation, Some("m"), 0), rec(1, EventType::Approval, Some("m"), 0)];
        r[0].details = json!({"report": {"id": 1}, "metrics": {}});
        assert!(evaluate(&p, &r).is_empty());
        r[0].details = json!({"report": {}});
        let v = evaluate(&p, &r);
        assert_eq!(v.len(), 1);
        assert!(v[0].description.contains("report/id, metrics"));
    }

    #[test]
    fn ordering_is_position_then_name() {
        let yaml = r#"
name: two
rules:
  - name: z_rule
    kind: require_before
    trigger_type: DeploymentCompleted
    required_type: Approval
    scope_keys: [model_id]
  - name: a_rule
    kind: required_fields
    event_type: DeploymentCompleted
    required_detail_paths: [missing]
"#;
        let p = Profile::from_yaml(yaml).unwrap();
        let r = vec![
            rec(0, EventType::DeploymentCompleted, Some("m1"), 0),
            rec(1, EventType::DeploymentCompleted, Some("m1"), 1),
        ];
        let names: Vec<_> = evaluate(&p, &r)
            .into_iter()
            .map(|v| (v.event_id.unwrap(), v.rule_name))
            .collect();
        assert_eq!(
            names,
            [("e0", "a_rule"), ("e0", "z_rule"), ("e1", "a_rule"), ("e1", "z_rule")]
                .map(|(a, b)| (a.to_string(), b.to_string()))
        );
    }

    // Quadratic oracles written straight from the rule definitions.
    fn oracle_require_before(records: &[EventRecord], keys: &[ScopeKey]) -> Vec<String> {
        let mut out = Vec::new();
        for i in 0..records.len() {
            if records[i].event_type != EventType::DeploymentCompleted {
                continue;
            }
            let ok = (0..i).any(|j| {
                records[j].event_type == EventType::Approval
                    && keys.iter().all(|k| {
                        records[i].scope(*k).is_none() || records[i].scope(*k) == records[j].scope(*k)
                    })
            });
            if !ok {
                out.push(records[i].event_id.clone());
            }
        }
        out
    }

    fn oracle_cadence(records: &[EventRecord], max_days: i64) -> usize {
        let mut gaps = 0;
        let models: BTreeSet<_> = records
            .iter()
            .filter(|r| r.event_type == EventType::Evaluation)
            .filter_map(|r| r.model_id.clone())
            .collect();
        for m in models {
            let mut ts: Vec<_> = records
                .iter()
                .filter(|r| r.event_type == EventType::Evaluation && r.model_id.as_deref() == Some(&m))
                .map(|r| r.parsed_timestamp().unwrap())
                .collect();
            ts.sort();
            // fixture timestamps are whole days
            gaps += ts.windows(2).filter(|w| (w[1] - w[0]).num_days() > max_days).count();
        }
        gaps
    }

    fn arb_log() -> impl Strategy<Value = Vec<EventRecord>> {
        let t = prop::sample::select(vec![
            EventType::Approval,
            EventType::DeploymentCompleted,
            EventType::Evaluation,
        ]);
        let m = prop::option::of(prop::sample::select(vec!["m1", "m2"]));
        prop::collection::vec((t, m, 0u32..200), 0..20).prop_map(|v| {
            v.into_iter()
                .enumerate()
                .map(|(i, (t, m, d))| rec(i, t, m, d))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn matches_brute_force(r in arb_log()) {
            let rb = Profile::from_yaml(&HIGH_RISK.replace(", deployment_id", "")).unwrap();
            let got: Vec<String> = evaluate(&rb, &r).into_iter().filter_map(|v| v.event_id).collect();
            prop_assert_eq!(got, oracle_require_before(&r, &[ScopeKey::ModelId]));

            let cad = Profile::from_yaml(CADENCE).unwrap();
            prop_assert_eq!(evaluate(&cad, &r).len(), oracle_cadence(&r, 30));
        }

        #[test]
        fn inserting_approval_repairs_one_trigger(r in arb_log(), pick in any::<prop::sample::Index>()) {
            let p = Profile::from_yaml(&HIGH_RISK.replace(", deployment_id", "")).unwrap();
            let before = evaluate(&p, &r);
            prop_assume!(!before.is_empty());
            let target = pick.get(&before).event_id.clone().unwrap();
            let pos = r.iter().position(|x| x.event_id == target).unwrap();
            let mut fixed = r.clone();
            let mut approval = r[pos].clone();
            approval.event_id = "approval".into();
            approval.event_type = EventType::Approval;
            fixed.insert(pos, approval);
            let after: BTreeSet<_> = evaluate(&p, &fixed).into_iter().filter_map(|v| v.event_id).collect();
            let expected: BTreeSet<_> = before.iter().filter_map(|v| v.event_id.clone())
                .filter(|id| *id != target).collect();
            // the repair may also cover later triggers in the same scope, but
            // never adds a violation and always removes the target's
            prop_assert!(!after.contains(&target));
            prop_assert!(after.is_subset(&expected));
        }

        #[test]
        fn rule_order_only_changes_ties(r in arb_log()) {
            let yaml = format!("{HIGH_RISK}{}", CADENCE.split("rules:\n").nth(1).unwrap());
            let p = Profile::from_yaml(&yaml).unwrap();
            let mut q = p.clone();
            q.rules.reverse();
            prop_assert_eq!(evaluate(&p, &r), evaluate(&q, &r));
        }
    }
}
