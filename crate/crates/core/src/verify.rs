//! Chain replay over a ledger file or an exported segment.
//!
//! For each record, in order: it must parse (and, for ledger files, be
//! stored in canonical form); its `prev_hash` must equal the anchor
//! (`GENESIS` for a whole ledger) or the previous record's `curr_hash`; its
//! `curr_hash` must match the recomputed digest; and a signature by a trusted
//! key must verify. Replay stops at the first failure.
//!
//! The chain alone cannot reveal records removed from the tail. Detecting
//! that needs a head attested elsewhere, such as an evidence package's head
//! attestation or a published pointer.

use std::collections::BTreeSet;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::chain::{verify_signature, TrustStore, GENESIS};
use crate::event::EventRecord;
use crate::ledger::{parse_line, split_lines};

/// Key under which redacted records keep their marker in `details`.
pub const REDACTION_KEY: &str = "__redacted__";

/// Replacement `details` for a record whose content was withheld from an
/// export.
pub fn redaction_marker() -> Value {
    json!({ REDACTION_KEY: true })
}

pub fn is_redaction_marker(details: &Value) -> bool {
    *details == redaction_marker()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MismatchKind {
    Hash,
    Link,
    Signature,
    Parse,
    Genesis,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub valid: bool,
    pub events_checked: usize,
    pub first_mismatch: Option<usize>,
    pub mismatch_kind: Option<MismatchKind>,
    /// Signer key ids seen without a configured trust anchor.
    pub key_warnings: Vec<String>,
    /// Indices whose content was redacted; their hashes were taken as stored.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub redacted: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl VerificationReport {
    fn ok(events_checked: usize, key_warnings: Vec<String>, redacted: Vec<usize>) -> Self {
        VerificationReport {
            valid: true,
            events_checked,
            first_mismatch: None,
            mismatch_kind: None,
            key_warnings,
            redacted,
            detail: None,
        }
    }
}

/// Replay configuration.
#[derive(Debug, Clone)]
pub struct Verifier {
    trust: TrustStore,
    require_canonical: bool,
    redacted_ids: BTreeSet<String>,
}

impl Default for Verifier {
    fn default() -> Self {
        Verifier {
            trust: TrustStore::new(),
            require_canonical: true,
            redacted_ids: BTreeSet::new(),
        }
    }
}

impl Verifier {
    pub fn new() -> Self {
        Verifier::default()
    }

    pub fn trust(mut self, trust: TrustStore) -> Self {
        self.trust = trust;
        self
    }

    /// Whether ledger lines must be byte-identical to their canonical
    /// encoding (default true). Turning this off accepts foreign ledgers
    /// written with other JSON formatting.
    pub fn require_canonical(mut self, yes: bool) -> Self {
        self.require_canonical = yes;
        self
    }

    /// Event ids whose `details` may carry the redaction marker instead of
    /// the hashed content.
    pub fn allow_redacted<I, S>(mut self, ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.redacted_ids = ids.into_iter().map(Into::into).collect();
        self
    }

    pub fn verify_log(&self, path: impl AsRef<Path>) -> io::Result<VerificationReport> {
        let bytes = std::fs::read(path)?;
        Ok(self.verify_bytes(&bytes))
    }

    pub fn verify_bytes(&self, bytes: &[u8]) -> VerificationReport {
        let items = split_lines(bytes).into_iter().map(|line| {
            let rec = parse_line(line)?;
            if self.require_canonical {
                match rec.to_canonical_line() {
                    Ok(canon) if canon == line => {}
                    _ => return Err("line is not in canonical form".to_string()),
                }
            }
            Ok(rec)
        });
        self.replay(items, GENESIS)
    }

    pub fn verify_segment(&self, records: &[EventRecord], anchor_prev_hash: &str) -> VerificationReport {
        self.replay(records.iter().cloned().map(Ok), anchor_prev_hash)
    }

    fn replay<I>(&self, items: I, anchor: &str) -> VerificationReport
    where
        I: Iterator<Item = Result<EventRecord, String>>,
    {
        let mut expected_prev = anchor.to_string();
        let mut key_warnings: Vec<String> = Vec::new();
        let mut redacted = Vec::new();
        let mut checked = 0usize;

        let fail = |i: usize, kind: MismatchKind, detail: String, kw: Vec<String>, red: Vec<usize>| {
            VerificationReport {
                valid: false,
                events_checked: i,
                first_mismatch: Some(i),
                mismatch_kind: Some(kind),
                key_warnings: kw,
                redacted: red,
                detail: Some(detail),
            }
        };

        for (i, item) in items.enumerate() {
            let rec = match item {
                Ok(r) => r,
                Err(e) => return fail(i, MismatchKind::Parse, e, key_warnings, redacted),
            };

            if rec.prev_hash != expected_prev {
                let kind = if i == 0 && anchor == GENESIS {
                    MismatchKind::Genesis
                } else {
                    MismatchKind::Link
                };
                let detail = format!("prev_hash {} != expected {}", rec.prev_hash, expected_prev);
                return fail(i, kind, detail, key_warnings, redacted);
            }

            if self.redacted_ids.contains(&rec.event_id) && is_redaction_marker(&rec.details) {
                redacted.push(i);
            } else {
                match rec.recompute_hash() {
                    Ok(h) if h == rec.curr_hash => {}
                    Ok(h) => {
                        let detail = format!("curr_hash {} != recomputed {}", rec.curr_hash, h);
                        return fail(i, MismatchKind::Hash, detail, key_warnings, redacted);
                    }
                    Err(e) => return fail(i, MismatchKind::Hash, e.to_string(), key_warnings, redacted),
                }
            }

            if let Some(sig) = &rec.sig {
                match self.trust.get(&sig.key_id) {
                    Some(pk) => match verify_signature(sig, &rec.curr_hash, pk) {
                        Ok(true) => {}
                        Ok(false) => {
                            let detail = format!("signature by {} does not verify", sig.key_id);
                            return fail(i, MismatchKind::Signature, detail, key_warnings, redacted);
                        }
                        Err(e) => {
                            return fail(i, MismatchKind::Signature, e.to_string(), key_warnings, redacted)
                        }
                    },
                    None => {
                        if !key_warnings.contains(&sig.key_id) {
                            key_warnings.push(sig.key_id.clone());
                        }
                    }
                }
            }

            expected_prev = rec.curr_hash;
            checked = i + 1;
        }
        VerificationReport::ok(checked, key_warnings, redacted)
    }
}

/// Replays the chain of a ledger file from `GENESIS`.
pub fn verify_log(path: impl AsRef<Path>, trust: Option<&TrustStore>) -> io::Result<VerificationReport> {
    verifier_with(trust).verify_log(path)
}

/// Replays a contiguous slice of a ledger from its anchor.
pub fn verify_segment(
    records: &[EventRecord],
    anchor_prev_hash: &str,
    trust: Option<&TrustStore>,
) -> VerificationReport {
    verifier_with(trust).verify_segment(records, anchor_prev_hash)
}

fn verifier_with(trust: Option<&TrustStore>) -> Verifier {
    let v = Verifier::new();
    match trust {
        Some(t) => v.trust(t.clone()),
        None => v,
    }
}
