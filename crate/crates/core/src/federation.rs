//! Cross-organization linkage: signed pointers to single events and
//! evidence packages holding a contiguous, independently verifiable ledger
//! slice. Both documents are signed over their canonical JSON form, and
//! producing either one is itself logged in the source ledger.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::canonical::{canonical_serialize, CanonicalError};
use crate::chain::{key_id_for, sha256_hex, sign_message, verify_message, ChainError, Signature, TrustStore, WriterKey, GENESIS};
use crate::event::{detail_at, EventDraft, EventRecord, EventType};
use crate::ledger::{now_rfc3339, EventStore, LedgerError};
use crate::query::{EventFilter, QueryError};
use crate::verify::{redaction_marker, VerificationReport, Verifier};

pub const SYSTEM: &str = "federation";

#[derive(Debug, Error)]
pub enum FederationError {
    #[error("unknown event id {0}")]
    UnknownEventId(String),
    #[error("event has no details at path {0}")]
    MissingPath(String),
    #[error("signing key has no private part")]
    MissingPrivateKey,
    #[error("filter selects no events")]
    EmptySelection,
    #[error("ledger has unreadable lines (first at line {0}); verify it before exporting")]
    UnreadableLedger(usize),
    #[error(transparent)]
    Filter(#[from] QueryError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Canonical(#[from] CanonicalError),
}

/// Reference to one event in someone else's ledger plus a few
/// non-sensitive detail values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignedPointer {
    pub store_uri: String,
    pub log_id: String,
    pub event_id: String,
    /// Detail path -> value, exactly as projected from the event.
    pub summary: Map<String, Value>,
    pub curr_hash: String,
    pub sig: Signature,
}

impl SignedPointer {
    fn signed_body(&self) -> Result<Vec<u8>, CanonicalError> {
        canonical_serialize(&json!({
            "store_uri": self.store_uri,
            "log_id": self.log_id,
            "event_id": self.event_id,
            "summary": self.summary,
            "curr_hash": self.curr_hash,
        }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointerCheck {
    pub sig_ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_ok: Option<bool>,
}

fn find<'a>(records: &'a [EventRecord], event_id: &str) -> Result<&'a EventRecord, FederationError> {
    records
        .iter()
        .find(|r| r.event_id == event_id)
        .ok_or_else(|| FederationError::UnknownEventId(event_id.to_string()))
}

fn readable(store: &impl EventStore) -> Result<Vec<EventRecord>, FederationError> {
    let out = store.read_all()?;
    if let Some(e) = out.errors.first() {
        return Err(FederationError::UnreadableLedger(e.line));
    }
    Ok(out.records)
}

/// Signs a pointer to `event_id` whose summary projects `summary_paths` of
/// the event's details, then logs a PointerPublished event.
pub fn publish_pointer(
    store: &mut impl EventStore,
    event_id: &str,
    summary_paths: &[String],
    key: &WriterKey,
    actor: &str,
) -> Result<SignedPointer, FederationError> {
    if !key.has_private() {
        return Err(FederationError::MissingPrivateKey);
    }
    let records = readable(store)?;
    let event = find(&records, event_id)?;
    let mut summary = Map::new();
    for path in summary_paths {
        let v = detail_at(&event.details, path).ok_or_else(|| FederationError::MissingPath(path.clone()))?;
        summary.insert(path.clone(), v.clone());
    }
    let mut pointer = SignedPointer {
        store_uri: store.store_uri(),
        log_id: store.log_id().to_string(),
        event_id: event.event_id.clone(),
        summary,
        curr_hash: event.curr_hash.clone(),
        sig: Signature {
            key_id: String::new(),
            algorithm: String::new(),
            value: String::new(),
        },
    };
    pointer.sig = sign_message(key, &pointer.signed_body()?)?;

    store.append(EventDraft::new(EventType::PointerPublished, SYSTEM, actor).with_details(json!({
        "event_id": pointer.event_id,
        "curr_hash": pointer.curr_hash,
        "summary_paths": summary_paths,
        "key_id": key.key_id,
    })))?;
    Ok(pointer)
}

/// Checks the pointer signature and, when given the referenced event,
/// that the event is the one pointed to and still matches its summary.
pub fn verify_pointer(pointer: &SignedPointer, publisher_key: &[u8], event: Option<&EventRecord>) -> PointerCheck {
    let sig_ok = pointer.sig.key_id == key_id_for(publisher_key)
        && pointer
            .signed_body()
            .ok()
            .and_then(|body| verify_message(&pointer.sig, &body, publisher_key).ok())
            .unwrap_or(false);
    let event_ok = event.map(|e| {
        e.event_id == pointer.event_id
            && e.curr_hash == pointer.curr_hash
            && e.recompute_hash().is_ok_and(|h| h == e.curr_hash)
            && pointer
                .summary
                .iter()
                .all(|(path, v)| detail_at(&e.details, path) == Some(v))
    });
    PointerCheck { sig_ok, event_ok }
}

/// A contiguous ledger slice with the metadata needed to re-verify it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvidencePackage {
    pub source_log_id: String,
    pub anchor_prev_hash: String,
    pub records: Vec<EventRecord>,
    pub created_at: String,
    pub filter_description: String,
    /// Records in the slice whose details were replaced by the redaction
    /// marker. Their content cannot be checked; their links still can.
    #[serde(default)]
    pub redacted_event_ids: Vec<String>,
    /// Signature over the canonical manifest: every field above except the
    /// records, plus the head hash, record count and a digest of the
    /// canonical records array. The digest is what binds the non-detail
    /// fields of redacted records, which the chain replay cannot check.
    pub head_attestation: Signature,
}

impl EvidencePackage {
    fn manifest(&self) -> Result<Vec<u8>, CanonicalError> {
        canonical_serialize(&json!({
            "source_log_id": self.source_log_id,
            "anchor_prev_hash": self.anchor_prev_hash,
            "head_hash": self.records.last().map(|r| r.curr_hash.as_str()),
            "count": self.records.len(),
            "records_digest": sha256_hex(&canonical_serialize(&serde_json::to_value(&self.records).map_err(
                |e| CanonicalError::NonCanonicalizable(e.to_string())
            )?)?),
            "created_at": self.created_at,
            "filter_description": self.filter_description,
            "redacted_event_ids": self.redacted_event_ids,
        }))
    }
}

#[derive(Debug, Clone)]
pub struct ExportOptions {
    /// Replace the details of non-matching records inside the slice.
    pub redact_non_matching: bool,
    /// Requesting actor, recorded in the ExportCreated event.
    pub actor: String,
}

impl Default for ExportOptions {
    fn default() -> Self {
        ExportOptions {
            redact_non_matching: false,
            actor: "unknown".into(),
        }
    }
}

/// Packages the smallest contiguous slice covering every record matching
/// `filter`, signs its head, then logs an ExportCreated event.
pub fn export_evidence(
    store: &mut impl EventStore,
    filter: &EventFilter,
    key: &WriterKey,
    options: &ExportOptions,
) -> Result<EvidencePackage, FederationError> {
    if !key.has_private() {
        return Err(FederationError::MissingPrivateKey);
    }
    filter.validate()?;
    let records = readable(store)?;
    let hits: Vec<usize> = (0..records.len()).filter(|&i| filter.matches(&records[i])).collect();
    let (Some(&first), Some(&last)) = (hits.first(), hits.last()) else {
        return Err(FederationError::EmptySelection);
    };
    let mut slice = records[first..=last].to_vec();
    let anchor_prev_hash = if first == 0 { GENESIS.to_string() } else { records[first - 1].curr_hash.clone() };

    let mut redacted_event_ids = Vec::new();
    if options.redact_non_matching {
        for r in slice.iter_mut().filter(|r| !filter.matches(r)) {
            r.details = redaction_marker();
            redacted_event_ids.push(r.event_id.clone());
        }
    }

    let mut pkg = EvidencePackage {
        source_log_id: store.log_id().to_string(),
        anchor_prev_hash,
        records: slice,
        created_at: now_rfc3339(),
        filter_description: filter.to_string(),
        redacted_event_ids,
        head_attestation: Signature {
            key_id: String::new(),
            algorithm: String::new(),
            value: String::new(),
        },
    };
    pkg.head_attestation = sign_message(key, &pkg.manifest()?)?;

    let head_hash = pkg.records.last().map(|r| r.curr_hash.clone());
    store.append(EventDraft::new(EventType::ExportCreated, SYSTEM, options.actor.clone()).with_details(json!({
        "filter_description": pkg.filter_description,
        "requesting_actor": options.actor,
        "first_event_id": pkg.records[0].event_id,
        "count": pkg.records.len(),
        "head_hash": head_hash,
        "redacted": pkg.redacted_event_ids.len(),
        "key_id": key.key_id,
    })))?;
    Ok(pkg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackageReport {
    pub segment: VerificationReport,
    /// Absent when no publisher key was supplied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attestation_ok: Option<bool>,
}

impl PackageReport {
    pub fn ok(&self) -> bool {
        self.segment.valid && self.attestation_ok != Some(false)
    }
}

/// Replays the package slice from its anchor and, given the publisher's
/// public key, checks the head attestation.
pub fn verify_package(pkg: &EvidencePackage, publisher_key: Option<&[u8]>, trust: Option<&TrustStore>) -> PackageReport {
    let mut v = Verifier::new().allow_redacted(pkg.redacted_event_ids.iter().cloned());
    if let Some(t) = trust {
        v = v.trust(t.clone());
    }
    let segment = v.verify_segment(&pkg.records, &pkg.anchor_prev_hash);
    let attestation_ok = publisher_key.map(|pk| {
        !pkg.records.is_empty()
            && pkg.head_attestation.key_id == key_id_for(pk)
            && pkg
                .manifest()
                .ok()
                .and_then(|m| verify_message(&pkg.head_attestation, &m, pk).ok())
                .unwrap_or(false)
    });
    PackageReport { segment, attestation_ok }
}
