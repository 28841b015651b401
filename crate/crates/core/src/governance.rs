//! Governance checkpoints: Approval, RiskWaiver and Attestation events with
//! `DecisionDetails` content, captured from flags or interactive prompts.

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::event::{DecisionDetails, EventDraft, EventRecord, EventType, ScopeKey};
use crate::ledger::{recent_values, EventStore, LedgerError};

pub const SYSTEM: &str = "governance_cli";
const SUGGESTION_CAP: usize = 10;
const DEFAULT_PROMPTS: &str = include_str!("../../../config/prompts.yaml");

#[derive(Debug, Error)]
pub enum GovernanceError {
    #[error("missing required field {0}")]
    MissingRequiredField(String),
    #[error("prompt config: {0}")]
    Config(String),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecisionKind {
    Approval,
    RiskWaiver,
    Attestation,
}

impl DecisionKind {
    pub const ALL: [DecisionKind; 3] = [DecisionKind::Approval, DecisionKind::RiskWaiver, DecisionKind::Attestation];

    pub fn event_type(self) -> EventType {
        match self {
            DecisionKind::Approval => EventType::Approval,
            DecisionKind::RiskWaiver => EventType::RiskWaiver,
            DecisionKind::Attestation => EventType::Attestation,
        }
    }

    /// CLI command name.
    pub fn command(self) -> &'static str {
        match self {
            DecisionKind::Approval => "approve",
            DecisionKind::RiskWaiver => "waive",
            DecisionKind::Attestation => "attest",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromptField {
    pub field: String,
    pub label: String,
    #[serde(default)]
    pub required: bool,
    #[serde(default)]
    pub default: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromptConfig {
    pub approve: Vec<PromptField>,
    pub waive: Vec<PromptField>,
    pub attest: Vec<PromptField>,
}

impl Default for PromptConfig {
    fn default() -> Self {
        PromptConfig::from_yaml(DEFAULT_PROMPTS).expect("bundled prompts.yaml is valid")
    }
}

impl PromptConfig {
    pub fn from_yaml(text: &str) -> Result<PromptConfig, GovernanceError> {
        let cfg: PromptConfig =
            serde_yaml::from_str(text).map_err(|e| GovernanceError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<PromptConfig, GovernanceError> {
        PromptConfig::from_yaml(&std::fs::read_to_string(path)?)
    }

    pub fn fields(&self, kind: DecisionKind) -> &[PromptField] {
        match kind {
            DecisionKind::Approval => &self.approve,
            DecisionKind::RiskWaiver => &self.waive,
            DecisionKind::Attestation => &self.attest,
        }
    }

    fn check(&self) -> Result<(), GovernanceError> {
        for kind in DecisionKind::ALL {
            let fields = self.fields(kind);
            for must in ["owner", "rationale_or_statement"] {
                if !fields.iter().any(|f| f.field == must && f.required) {
                    return Err(GovernanceError::Config(format!(
                        "{}: {must} must be listed and required",
                        kind.command()
                    )));
                }
            }
            for f in fields {
                let known = matches!(
                    f.field.as_str(),
                    "owner" | "rationale_or_statement" | "constraints" | "references"
                ) || (f.field == "expires" && kind == DecisionKind::RiskWaiver)
                    || f.field.strip_prefix("scope.").is_some_and(|k| !k.is_empty());
                if !known {
                    return Err(GovernanceError::Config(format!(
                        "{}: unknown field {}",
                        kind.command(),
                        f.field
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Field values for one decision, from flags or prompts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DecisionInput {
    pub owner: Option<String>,
    pub rationale_or_statement: Option<String>,
    pub scope: BTreeMap<String, String>,
    pub constraints: Vec<String>,
    pub references: Vec<String>,
    pub expires: Option<String>,
    /// Fixed timestamp; defaults to the append time.
    pub timestamp: Option<String>,
    /// Fixed event id; defaults to a fresh UUID.
    pub event_id: Option<String>,
}

impl DecisionInput {
    /// Sets a prompt field. List fields accumulate.
    pub fn set(&mut self, field: &str, value: String) {
        match field {
            "owner" => self.owner = Some(value),
            "rationale_or_statement" => self.rationale_or_statement = Some(value),
            "constraints" => self.constraints.push(value),
            "references" => self.references.push(value),
            "expires" => self.expires = Some(value),
            other => {
                if let Some(key) = other.strip_prefix("scope.") {
                    self.scope.insert(key.to_string(), value);
                }
            }
        }
    }

    fn has(&self, field: &str) -> bool {
        fn filled(s: &Option<String>) -> bool {
            s.as_deref().is_some_and(|v| !v.trim().is_empty())
        }
        match field {
            "owner" => filled(&self.owner),
            "rationale_or_statement" => filled(&self.rationale_or_statement),
            "constraints" => !self.constraints.is_empty(),
            "references" => !self.references.is_empty(),
            "expires" => filled(&self.expires),
            other => other
                .strip_prefix("scope.")
                .and_then(|k| self.scope.get(k))
                .is_some_and(|v| !v.trim().is_empty()),
        }
    }
}

/// Builds the draft for a decision without appending it.
pub fn decision_draft(
    kind: DecisionKind,
    inputs: &DecisionInput,
    config: &PromptConfig,
) -> Result<EventDraft, GovernanceError> {
    for f in config.fields(kind) {
        if f.required && !inputs.has(&f.field) {
            return Err(GovernanceError::MissingRequiredField(f.field.clone()));
        }
    }
    // enforced regardless of config
    for must in ["owner", "rationale_or_statement"] {
        if !inputs.has(must) {
            return Err(GovernanceError::MissingRequiredField(must.into()));
        }
    }
    if inputs.scope.is_empty() {
        return Err(GovernanceError::MissingRequiredField("scope".into()));
    }
    let owner = inputs.owner.clone().unwrap_or_default();
    let details = DecisionDetails {
        owner: owner.clone(),
        rationale_or_statement: inputs.rationale_or_statement.clone().unwrap_or_default(),
        scope: inputs.scope.clone(),
        constraints: inputs.constraints.clone(),
        references: inputs.references.clone(),
        expires: inputs.expires.clone(),
    };
    let mut draft = EventDraft::new(kind.event_type(), SYSTEM, owner)
        .with_details(serde_json::to_value(&details).expect("DecisionDetails serializes"));
    for key in ScopeKey::ALL {
        if let Some(v) = inputs.scope.get(key.as_str()) {
            *draft.scope_mut(key) = Some(v.clone());
        }
    }
    draft.timestamp = inputs.timestamp.clone();
    draft.event_id = inputs.event_id.clone();
    Ok(draft)
}

/// Validates `inputs` against `config` and appends the decision event.
pub fn record_decision(
    kind: DecisionKind,
    inputs: &DecisionInput,
    store: &mut impl EventStore,
    config: &PromptConfig,
) -> Result<EventRecord, GovernanceError> {
    let draft = decision_draft(kind, inputs, config)?;
    Ok(store.append(draft)?)
}

/// Distinct values of `key` in the store, most recent first, at most ten.
pub fn suggest_identifiers(store: &impl EventStore, key: ScopeKey) -> Result<Vec<String>, LedgerError> {
    let records = store.read_all()?.records;
    Ok(recent_values(records.iter(), key, SUGGESTION_CAP))
}

/// Asks for each configured field on `output`, reading answers from `input`.
/// An empty answer takes the default, or skips an optional field. List
/// fields read one entry per line until a blank line. Running out of input
/// while a required field is unanswered is `MissingRequiredField`.
pub fn prompt_decision(
    kind: DecisionKind,
    config: &PromptConfig,
    suggestions: &BTreeMap<ScopeKey, Vec<String>>,
    input: &mut impl BufRead,
    output: &mut impl Write,
) -> Result<DecisionInput, GovernanceError> {
    let mut out = DecisionInput::default();
    for f in config.fields(kind) {
        let list = matches!(f.field.as_str(), "constraints" | "references");
        let mut label = f.label.clone();
        if let Some(d) = &f.default {
            label.push_str(&format!(" [{d}]"));
        }
        if let Some(key) = f.field.strip_prefix("scope.").and_then(|k| k.parse::<ScopeKey>().ok()) {
            if let Some(s) = suggestions.get(&key).filter(|s| !s.is_empty()) {
                label.push_str(&format!(" (recent: {})", s.join(", ")));
            }
        }
        if list {
            label.push_str(" (one per line, blank to finish)");
        }
        if f.required {
            label.push_str(" *");
        }
        writeln!(output, "{label}:")?;
        output.flush()?;

        loop {
            let answer = read_answer(input)?;
            match answer {
                None => {
                    if f.required && !out.has(&f.field) {
                        return Err(GovernanceError::MissingRequiredField(f.field.clone()));
                    }
                    break;
                }
                Some(a) if a.is_empty() => {
                    if let Some(d) = f.default.as_ref().filter(|_| !out.has(&f.field)) {
                        out.set(&f.field, d.clone());
                    }
                    if f.required && !out.has(&f.field) {
                        writeln!(output, "{} is required:", f.label)?;
                        continue;
                    }
                    break;
                }
                Some(a) => {
                    out.set(&f.field, a);
                    if !list {
                        break;
                    }
                }
            }
        }
    }
    Ok(out)
}

fn read_answer(input: &mut impl BufRead) -> io::Result<Option<String>> {
    let mut line = String::new();
    if input.read_line(&mut line)? == 0 {
        return Ok(None);
    }
    Ok(Some(line.trim().to_string()))
}
