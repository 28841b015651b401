//! Tamper-evident audit trail for model lifecycle and governance events.
//!
//! Events are captured in a fixed core schema ([`event`]), chained with
//! SHA-256 and optionally signed per writer ([`chain`]), and persisted in an
//! append-only JSONL ledger ([`ledger`]). The read side covers chain
//! replay ([`verify`]), scoped queries and release diffs ([`query`]),
//! declarative compliance profiles ([`profile`]), governance decision
//! capture ([`governance`]) and cross-organization pointers and evidence
//! exports ([`federation`]).

pub mod canonical;
pub mod chain;
pub mod event;
pub mod federation;
pub mod governance;
pub mod ledger;
pub mod profile;
pub mod query;
pub mod verify;

pub use canonical::{canonical_serialize, CanonicalError};
pub use chain::{
    compute_curr_hash, generate_keypair, sign_hash, verify_signature, ChainError, ChainHead,
    Signature, TrustStore, WriterKey, GENESIS,
};
pub use event::{
    payload_of, validate_draft, validate_event, DecisionDetails, EventDraft, EventRecord,
    EventType, SchemaViolation, ScopeKey, ValidationMode,
};
pub use ledger::{EventStore, Ledger, LedgerError, ReadOutcome};
pub use verify::{verify_log, verify_segment, MismatchKind, VerificationReport, Verifier};
pub use query::{diff_releases, filter_events, order_check, timeline, EventFilter, QueryError, ReleaseDiff};
pub use profile::{evaluate, load_profile, Profile, ProfileError, Rule, RuleKind, Violation};
pub use governance::{record_decision, suggest_identifiers, DecisionInput, DecisionKind, GovernanceError, PromptConfig};
pub use federation::{export_evidence, publish_pointer, verify_package, verify_pointer, EvidencePackage, ExportOptions, FederationError, SignedPointer};
