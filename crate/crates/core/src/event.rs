//! Event schema: the record shape, the lifecycle event taxonomy, governance
//! decision details, and schema validation.

use std::fmt;
use std::str::FromStr;

use base64::Engine;
use chrono::{DateTime, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Map, Value};

use crate::canonical::{canonical_serialize, CanonicalError};
use crate::chain::{compute_curr_hash, is_digest_hex, Signature, GENESIS};

/// Lifecycle stage an event type belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Development,
    Deployment,
    Operations,
    Governance,
    Plumbing,
}

macro_rules! event_types {
    ($($stage:ident => [$($name:ident),* $(,)?]),* $(,)?) => {
        /// Closed event taxonomy. Wire strings that are not part of it parse
        /// into [`EventType::Other`] so foreign ledgers can still be read.
        #[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum EventType {
            $($($name,)*)*
            Other(String),
        }

        impl EventType {
            /// Every known event type, in taxonomy order.
            pub const ALL: &'static [EventType] = &[$($(EventType::$name,)*)*];

            pub fn as_str(&self) -> &str {
                match self {
                    $($(EventType::$name => stringify!($name),)*)*
                    EventType::Other(s) => s.as_str(),
                }
            }

            /// Parses a wire string, keeping unknown values as `Other`.
            pub fn parse_lossy(s: &str) -> EventType {
                match s {
                    $($(stringify!($name) => EventType::$name,)*)*
                    other => EventType::Other(other.to_string()),
                }
            }

            pub fn stage(&self) -> Option<Stage> {
                match self {
                    $($(EventType::$name => Some(Stage::$stage),)*)*
                    EventType::Other(_) => None,
                }
            }
        }
    };
}

event_types! {
    Development => [
        DatasetRegistered, FineTuneStart, EpochEnd, Evaluation, CheckpointSaved,
        FineTuneEnd, ArtifactRegistered,
    ],
    Deployment => [
        DeploymentStarted, DeploymentCompleted, RolloutChanged, ServingConfigChanged,
        ModelDeployed,
    ],
    Operations => [
        InferenceRequestMetadata, InferenceResponseMetadata, GuardrailTriggered,
        DriftDetected, IncidentOpened, IncidentResolved,
    ],
    Governance => [Approval, RiskWaiver, Attestation],
    Plumbing => [ExportCreated, PointerPublished],
}

impl EventType {
    pub fn is_known(&self) -> bool {
        !matches!(self, EventType::Other(_))
    }

    pub fn is_governance(&self) -> bool {
        self.stage() == Some(Stage::Governance)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown event type `{0}`")]
pub struct UnknownEventType(pub String);

impl FromStr for EventType {
    type Err = UnknownEventType;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match EventType::parse_lossy(s) {
            EventType::Other(s) => Err(UnknownEventType(s)),
            known => Ok(known),
        }
    }
}

impl fmt::Display for EventType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for EventType {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for EventType {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Ok(EventType::parse_lossy(&s))
    }
}

/// One of the three top-level scope identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScopeKey {
    ModelId,
    DatasetId,
    DeploymentId,
}

impl ScopeKey {
    pub const ALL: [ScopeKey; 3] = [ScopeKey::ModelId, ScopeKey::DatasetId, ScopeKey::DeploymentId];

    pub fn as_str(self) -> &'static str {
        match self {
            ScopeKey::ModelId => "model_id",
            ScopeKey::DatasetId => "dataset_id",
            ScopeKey::DeploymentId => "deployment_id",
        }
    }
}

impl FromStr for ScopeKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "model_id" => Ok(ScopeKey::ModelId),
            "dataset_id" => Ok(ScopeKey::DatasetId),
            "deployment_id" => Ok(ScopeKey::DeploymentId),
            other => Err(format!(
                "unknown scope key `{other}` (expected model_id, dataset_id or deployment_id)"
            )),
        }
    }
}

impl fmt::Display for ScopeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A single ledger entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventRecord {
    pub event_id: String,
    pub timestamp: String,
    pub system: String,
    pub actor: String,
    pub event_type: EventType,
    pub model_id: Option<String>,
    pub dataset_id: Option<String>,
    pub deployment_id: Option<String>,
    pub details: Value,
    pub prev_hash: String,
    pub curr_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sig: Option<Signature>,
}

impl EventRecord {
    pub fn scope(&self, key: ScopeKey) -> Option<&str> {
        match key {
            ScopeKey::ModelId => self.model_id.as_deref(),
            ScopeKey::DatasetId => self.dataset_id.as_deref(),
            ScopeKey::DeploymentId => self.deployment_id.as_deref(),
        }
    }

    pub fn parsed_timestamp(&self) -> Option<DateTime<Utc>> {
        parse_timestamp(&self.timestamp).ok()
    }

    /// The hashed portion of the record.
    pub fn payload(&self) -> Value {
        payload_of(self)
    }

    /// The record as a single canonical JSON line, without the newline.
    pub fn to_canonical_line(&self) -> Result<Vec<u8>, CanonicalError> {
        let v = serde_json::to_value(self)
            .map_err(|e| CanonicalError::NonCanonicalizable(e.to_string()))?;
        canonical_serialize(&v)
    }

    /// Recomputes the chain digest from payload and `prev_hash`.
    pub fn recompute_hash(&self) -> Result<String, CanonicalError> {
        compute_curr_hash(&self.payload(), &self.prev_hash)
    }
}

/// Builds the hashed payload: the nine content fields, with absent scope
/// identifiers as explicit `null`. Integrity fields are never included.
pub fn payload_of(record: &EventRecord) -> Value {
    json!({
        "event_id": record.event_id,
        "timestamp": record.timestamp,
        "system": record.system,
        "actor": record.actor,
        "event_type": record.event_type.as_str(),
        "model_id": record.model_id,
        "dataset_id": record.dataset_id,
        "deployment_id": record.deployment_id,
        "details": record.details,
    })
}

/// Capture-side input: an event before the ledger attaches identity and
/// integrity fields. A missing timestamp is filled with the append time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventDraft {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    pub system: String,
    pub actor: String,
    pub event_type: EventType,
    #[serde(default)]
    pub model_id: Option<String>,
    #[serde(default)]
    pub dataset_id: Option<String>,
    #[serde(default)]
    pub deployment_id: Option<String>,
    #[serde(default = "empty_object")]
    pub details: Value,
}

fn empty_object() -> Value {
    Value::Object(Map::new())
}

impl EventDraft {
    pub fn new(event_type: EventType, system: impl Into<String>, actor: impl Into<String>) -> Self {
        EventDraft {
            event_id: None,
            timestamp: None,
            system: system.into(),
            actor: actor.into(),
            event_type,
            model_id: None,
            dataset_id: None,
            deployment_id: None,
            details: empty_object(),
        }
    }

    pub fn with_scope(mut self, key: ScopeKey, value: impl Into<String>) -> Self {
        *self.scope_mut(key) = Some(value.into());
        self
    }

    pub fn with_details(mut self, details: Value) -> Self {
        self.details = details;
        self
    }

    pub fn with_timestamp(mut self, ts: impl Into<String>) -> Self {
        self.timestamp = Some(ts.into());
        self
    }

    pub fn with_event_id(mut self, id: impl Into<String>) -> Self {
        self.event_id = Some(id.into());
        self
    }

    pub fn scope_mut(&mut self, key: ScopeKey) -> &mut Option<String> {
        match key {
            ScopeKey::ModelId => &mut self.model_id,
            ScopeKey::DatasetId => &mut self.dataset_id,
            ScopeKey::DeploymentId => &mut self.deployment_id,
        }
    }

    /// Attaches integrity fields. `event_id` and `timestamp` must already be
    /// resolved by the caller.
    pub(crate) fn into_record(self, event_id: String, timestamp: String) -> EventRecord {
        EventRecord {
            event_id,
            timestamp,
            system: self.system,
            actor: self.actor,
            event_type: self.event_type,
            model_id: self.model_id,
            dataset_id: self.dataset_id,
            deployment_id: self.deployment_id,
            details: self.details,
            prev_hash: GENESIS.to_string(),
            curr_hash: String::new(),
            sig: None,
        }
    }
}

/// Content of `details` for Approval, RiskWaiver and Attestation events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionDetails {
    pub owner: String,
    pub rationale_or_statement: String,
    pub scope: std::collections::BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constraints: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub references: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expires: Option<String>,
}

/// Parses an RFC3339 instant and requires a zero UTC offset.
pub fn parse_timestamp(s: &str) -> Result<DateTime<Utc>, String> {
    let dt = DateTime::parse_from_rfc3339(s).map_err(|e| format!("not RFC3339: {e}"))?;
    if dt.offset().local_minus_utc() != 0 {
        return Err("offset must be UTC".into());
    }
    Ok(dt.with_timezone(&Utc))
}

/// Looks up a slash-separated key path (leading slash optional) in a
/// details tree. Numeric segments index into arrays.
pub fn detail_at<'a>(details: &'a Value, path: &str) -> Option<&'a Value> {
    let trimmed = path.strip_prefix('/').unwrap_or(path);
    if trimmed.is_empty() {
        return Some(details);
    }
    trimmed.split('/').try_fold(details, |node, seg| match node {
        Value::Object(m) => m.get(seg),
        Value::Array(a) => seg.parse::<usize>().ok().and_then(|i| a.get(i)),
        _ => None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValidationMode {
    Strict,
    Lenient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// One broken schema rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaViolation {
    pub field: String,
    pub rule: String,
    pub severity: Severity,
}

impl SchemaViolation {
    fn error(field: impl Into<String>, rule: impl Into<String>) -> Self {
        SchemaViolation {
            field: field.into(),
            rule: rule.into(),
            severity: Severity::Error,
        }
    }
}

impl fmt::Display for SchemaViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.severity {
            Severity::Error => write!(f, "{}: {}", self.field, self.rule),
            Severity::Warning => write!(f, "{}: {} (warning)", self.field, self.rule),
        }
    }
}

/// Validates a complete record, including its integrity fields.
pub fn validate_event(record: &EventRecord, mode: ValidationMode) -> Vec<SchemaViolation> {
    let mut out = Vec::new();
    check_content(
        Content {
            event_id: Some(&record.event_id),
            timestamp: Some(&record.timestamp),
            system: &record.system,
            actor: &record.actor,
            event_type: &record.event_type,
            model_id: record.model_id.as_deref(),
            dataset_id: record.dataset_id.as_deref(),
            deployment_id: record.deployment_id.as_deref(),
            details: &record.details,
        },
        mode,
        &mut out,
    );

    if record.prev_hash != GENESIS && !is_digest_hex(&record.prev_hash) {
        out.push(SchemaViolation::error(
            "prev_hash",
            "must be 64 lowercase hex characters or GENESIS",
        ));
    }
    if !is_digest_hex(&record.curr_hash) {
        out.push(SchemaViolation::error(
            "curr_hash",
            "must be 64 lowercase hex characters",
        ));
    } else {
        match record.recompute_hash() {
            Ok(h) if h == record.curr_hash => {}
            Ok(_) => out.push(SchemaViolation::error(
                "curr_hash",
                "does not match the digest of payload and prev_hash",
            )),
            Err(e) => out.push(SchemaViolation::error("details", e.to_string())),
        }
    }
    if let Some(sig) = &record.sig {
        if sig.key_id.is_empty() {
            out.push(SchemaViolation::error("sig.key_id", "must be non-empty"));
        }
        if sig.algorithm.is_empty() {
            out.push(SchemaViolation::error("sig.algorithm", "must be non-empty"));
        }
        if base64::engine::general_purpose::STANDARD
            .decode(&sig.value)
            .is_err()
        {
            out.push(SchemaViolation::error("sig.value", "must be base64"));
        }
    }
    out
}

/// Validates a draft's content fields (everything the appender does not fill in).
pub fn validate_draft(draft: &EventDraft, mode: ValidationMode) -> Vec<SchemaViolation> {
    let mut out = Vec::new();
    check_content(
        Content {
            event_id: draft.event_id.as_deref(),
            timestamp: draft.timestamp.as_deref(),
            system: &draft.system,
            actor: &draft.actor,
            event_type: &draft.event_type,
            model_id: draft.model_id.as_deref(),
            dataset_id: draft.dataset_id.as_deref(),
            deployment_id: draft.deployment_id.as_deref(),
            details: &draft.details,
        },
        mode,
        &mut out,
    );
    out
}

/// Returns true when no violation is error-class.
pub fn is_acceptable(violations: &[SchemaViolation]) -> bool {
    violations.iter().all(|v| v.severity == Severity::Warning)
}

struct Content<'a> {
    event_id: Option<&'a str>,
    timestamp: Option<&'a str>,
    system: &'a str,
    actor: &'a str,
    event_type: &'a EventType,
    model_id: Option<&'a str>,
    dataset_id: Option<&'a str>,
    deployment_id: Option<&'a str>,
    details: &'a Value,
}

impl Content<'_> {
    fn scope(&self, key: ScopeKey) -> Option<&str> {
        match key {
            ScopeKey::ModelId => self.model_id,
            ScopeKey::DatasetId => self.dataset_id,
            ScopeKey::DeploymentId => self.deployment_id,
        }
    }
}

fn check_content(c: Content<'_>, mode: ValidationMode, out: &mut Vec<SchemaViolation>) {
    if let Some(id) = c.event_id {
        let ok = id.len() == 36 && uuid::Uuid::try_parse(id).is_ok();
        if !ok {
            out.push(SchemaViolation::error(
                "event_id",
                "must be a 36-character UUID string",
            ));
        }
    }
    if let Some(ts) = c.timestamp {
        if let Err(e) = parse_timestamp(ts) {
            out.push(SchemaViolation::error(
                "timestamp",
                format!("timestamp not RFC3339 UTC ({e})"),
            ));
        }
    }
    if c.system.trim().is_empty() {
        out.push(SchemaViolation::error("system", "must be non-empty"));
    }
    if c.actor.trim().is_empty() {
        out.push(SchemaViolation::error("actor", "must be non-empty"));
    }
    if let EventType::Other(name) = c.event_type {
        let rule = format!("unknown event type `{name}`");
        out.push(SchemaViolation {
            field: "event_type".into(),
            rule,
            severity: match mode {
                ValidationMode::Strict => Severity::Error,
                ValidationMode::Lenient => Severity::Warning,
            },
        });
    }
    for key in ScopeKey::ALL {
        if c.scope(key).is_some_and(|v| v.trim().is_empty()) {
            out.push(SchemaViolation::error(
                key.as_str(),
                "must be null or non-empty",
            ));
        }
    }

    match c.event_type.stage() {
        Some(Stage::Development | Stage::Deployment | Stage::Operations) => {
            if ScopeKey::ALL.iter().all(|k| c.scope(*k).is_none()) {
                out.push(SchemaViolation::error(
                    "scope",
                    "technical events need at least one of model_id, dataset_id, deployment_id",
                ));
            }
        }
        Some(Stage::Governance) => check_decision(&c, out),
        _ => {}
    }
}

fn check_decision(c: &Content<'_>, out: &mut Vec<SchemaViolation>) {
    let Some(details) = c.details.as_object() else {
        out.push(SchemaViolation::error(
            "details",
            "DecisionDetails must be an object",
        ));
        return;
    };
    for field in ["owner", "rationale_or_statement"] {
        let ok = details
            .get(field)
            .and_then(Value::as_str)
            .is_some_and(|s| !s.trim().is_empty());
        if !ok {
            out.push(SchemaViolation::error(
                format!("details.{field}"),
                format!("DecisionDetails.{field} empty"),
            ));
        }
    }
    match details.get("scope").and_then(Value::as_object) {
        Some(scope) if !scope.is_empty() => {
            for (k, v) in scope {
                let Some(v) = v.as_str().filter(|s| !s.is_empty()) else {
                    out.push(SchemaViolation::error(
                        format!("details.scope.{k}"),
                        "scope values must be non-empty strings",
                    ));
                    continue;
                };
                if let Ok(key) = k.parse::<ScopeKey>() {
                    if c.scope(key) != Some(v) {
                        out.push(SchemaViolation::error(
                            key.as_str(),
                            format!("must equal details.scope.{k}"),
                        ));
                    }
                }
            }
        }
        _ => out.push(SchemaViolation::error(
            "details.scope",
            "DecisionDetails.scope empty",
        )),
    }
    for field in ["constraints", "references"] {
        if let Some(v) = details.get(field) {
            let ok = v
                .as_array()
                .is_some_and(|a| a.iter().all(Value::is_string));
            if !ok {
                out.push(SchemaViolation::error(
                    format!("details.{field}"),
                    "must be a list of strings",
                ));
            }
        }
    }
    if let Some(v) = details.get("expires") {
        if *c.event_type != EventType::RiskWaiver {
            out.push(SchemaViolation::error(
                "details.expires",
                "only RiskWaiver events may carry an expiry",
            ));
        }
        let ok = v.as_str().is_some_and(|s| parse_timestamp(s).is_ok());
        if !ok {
            out.push(SchemaViolation::error(
                "details.expires",
                "must be an RFC3339 UTC instant",
            ));
        }
    }
}
