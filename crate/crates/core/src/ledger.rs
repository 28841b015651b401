//! Append-only JSONL ledger.
//!
//! `<name>.jsonl` holds one canonical JSON record per line. The sidecar
//! `<name>.jsonl.meta` holds `{log_id, created_at}` plus a head cache; the
//! cache is only a shortcut and the data file always wins.
//!
//! Writers serialize on an advisory lock over the data file. Every append
//! re-reads the head under the lock, so separate handles (threads or
//! processes) interleave into one valid chain.

use std::collections::BTreeSet;
use std::fs::{self, File, OpenOptions, TryLockError};
use std::io::{self, BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::thread;
use std::time::{Duration, Instant};

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical::CanonicalError;
use crate::chain::{compute_curr_hash, sign_hash, ChainError, ChainHead, WriterKey};
use crate::event::{
    validate_draft, validate_event, EventDraft, EventRecord, SchemaViolation, ValidationMode,
};

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("ledger not found: {0}")]
    NotFound(PathBuf),
    #[error("ledger header missing: {0}")]
    MissingHeader(PathBuf),
    #[error("corrupt tail in {path}: {reason}")]
    CorruptTail { path: PathBuf, reason: String },
    #[error("validation failed: {}", format_violations(.0))]
    ValidationFailed(Vec<SchemaViolation>),
    #[error("event_id {0} already present in ledger")]
    DuplicateEventId(String),
    #[error("ledger lock unavailable after {0:?}")]
    LockUnavailable(Duration),
    #[error("spool line {line}: {reason}")]
    Spool { line: usize, reason: String },
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Canonical(#[from] CanonicalError),
    #[error("i/o failure: {0}")]
    Io(#[from] io::Error),
}

fn format_violations(v: &[SchemaViolation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Storage abstraction for an append-only event trail. The JSONL
/// [`Ledger`] is the only backend shipped.
pub trait EventStore {
    fn log_id(&self) -> &str;
    fn head(&self) -> &ChainHead;
    /// Location other parties can use to refer to this store.
    fn store_uri(&self) -> String;
    fn append(&mut self, draft: EventDraft) -> Result<EventRecord, LedgerError>;
    fn read_all(&self) -> Result<ReadOutcome, LedgerError>;
}

/// A line that could not be parsed into a record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineError {
    /// 1-based line number.
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReadOutcome {
    pub records: Vec<EventRecord>,
    pub errors: Vec<LineError>,
    /// Lenient-validation findings, keyed by 1-based line number.
    pub warnings: Vec<(usize, SchemaViolation)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LedgerMeta {
    log_id: String,
    created_at: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    head_cache: Option<HeadCache>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct HeadCache {
    last_hash: String,
    count: u64,
    byte_len: u64,
}

/// Handle on one JSONL ledger. Not meant to be shared across threads; open
/// one handle per writer.
#[derive(Debug)]
pub struct Ledger {
    path: PathBuf,
    meta_path: PathBuf,
    log_id: String,
    created_at: String,
    head: ChainHead,
    byte_len: u64,
    writer_key: Option<WriterKey>,
    lock_timeout: Duration,
}

pub fn meta_path_for(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

pub fn now_rfc3339() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl Ledger {
    /// Opens (or with `create`, initializes) the ledger at `path`.
    pub fn open(
        path: impl AsRef<Path>,
        writer_key: Option<WriterKey>,
        create: bool,
    ) -> Result<Ledger, LedgerError> {
        let path = path.as_ref().to_path_buf();
        let meta_path = meta_path_for(&path);

        if !path.exists() {
            if !create {
                return Err(LedgerError::NotFound(path));
            }
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            OpenOptions::new().create(true).append(true).open(&path)?;
        }

        let meta = match fs::read(&meta_path) {
            Ok(bytes) => serde_json::from_slice::<LedgerMeta>(&bytes).map_err(|e| {
                LedgerError::Io(io::Error::new(io::ErrorKind::InvalidData, e))
            })?,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                if !create {
                    return Err(LedgerError::MissingHeader(meta_path));
                }
                let meta = LedgerMeta {
                    log_id: hex::encode(rand::random::<[u8; 16]>()),
                    created_at: now_rfc3339(),
                    head_cache: None,
                };
                write_meta(&meta_path, &meta)?;
                meta
            }
            Err(e) => return Err(e.into()),
        };

        let mut ledger = Ledger {
            path,
            meta_path,
            log_id: meta.log_id.clone(),
            created_at: meta.created_at.clone(),
            head: ChainHead::genesis(),
            byte_len: 0,
            writer_key,
            lock_timeout: Duration::from_secs(10),
        };
        let file = File::open(&ledger.path)?;
        let (head, len) = ledger.load_head(&file, meta.head_cache.as_ref())?;
        ledger.head = head;
        ledger.byte_len = len;
        Ok(ledger)
    }

    /// Creates a new ledger; fails if one already exists at `path`.
    pub fn init(path: impl AsRef<Path>) -> Result<Ledger, LedgerError> {
        let path = path.as_ref();
        if path.exists() || meta_path_for(path).exists() {
            return Err(LedgerError::Io(io::Error::new(
                io::ErrorKind::AlreadyExists,
                format!("{} already exists", path.display()),
            )));
        }
        Ledger::open(path, None, true)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn created_at(&self) -> &str {
        &self.created_at
    }

    pub fn writer_key(&self) -> Option<&WriterKey> {
        self.writer_key.as_ref()
    }

    pub fn set_writer_key(&mut self, key: Option<WriterKey>) {
        self.writer_key = key;
    }

    pub fn set_lock_timeout(&mut self, timeout: Duration) {
        self.lock_timeout = timeout;
    }

    /// Re-reads the head from disk, picking up appends from other handles.
    pub fn refresh(&mut self) -> Result<&ChainHead, LedgerError> {
        let file = File::open(&self.path)?;
        self.sync_head(&file)?;
        Ok(&self.head)
    }

    fn load_head(
        &self,
        file: &File,
        cache: Option<&HeadCache>,
    ) -> Result<(ChainHead, u64), LedgerError> {
        let len = file.metadata()?.len();
        if len == 0 {
            return Ok((ChainHead::genesis(), 0));
        }
        let last = self.last_record(file, len)?;
        let count = match cache {
            Some(c) if c.byte_len == len && c.last_hash == last.curr_hash => c.count,
            _ => count_newlines(file, 0)?,
        };
        Ok((
            ChainHead {
                last_hash: last.curr_hash,
                count,
            },
            len,
        ))
    }

    fn last_record(&self, file: &File, len: u64) -> Result<EventRecord, LedgerError> {
        let corrupt = |reason: String| LedgerError::CorruptTail {
            path: self.path.clone(),
            reason,
        };
        let line = read_last_line(file, len)?;
        let Some(body) = line.strip_suffix(b"\n") else {
            return Err(corrupt("final line is not newline-terminated".into()));
        };
        serde_json::from_slice::<EventRecord>(body)
            .map_err(|e| corrupt(format!("final line does not parse: {e}")))
    }

    fn sync_head(&mut self, file: &File) -> Result<(), LedgerError> {
        let len = file.metadata()?.len();
        if len == self.byte_len {
            return Ok(());
        }
        if len == 0 {
            self.head = ChainHead::genesis();
        } else {
            let last = self.last_record(file, len)?;
            let count = if len > self.byte_len {
                self.head.count + count_newlines(file, self.byte_len)?
            } else {
                // the file shrank under us; do not trust anything cached
                count_newlines(file, 0)?
            };
            self.head = ChainHead {
                last_hash: last.curr_hash,
                count,
            };
        }
        self.byte_len = len;
        Ok(())
    }

    fn lock(&self) -> Result<File, LedgerError> {
        let file = OpenOptions::new().read(true).append(true).open(&self.path)?;
        let start = Instant::now();
        loop {
            match file.try_lock() {
                Ok(()) => return Ok(file),
                Err(TryLockError::WouldBlock) => {
                    if start.elapsed() >= self.lock_timeout {
                        return Err(LedgerError::LockUnavailable(self.lock_timeout));
                    }
                    thread::sleep(Duration::from_millis(2));
                }
                Err(TryLockError::Error(e)) => return Err(e.into()),
            }
        }
    }

    fn contains_event_id(&self, event_id: &str) -> Result<bool, LedgerError> {
        let outcome = read_records(&self.path)?;
        Ok(outcome.records.iter().any(|r| r.event_id == event_id))
    }

    fn append_locked(&mut self, file: &mut File, draft: EventDraft) -> Result<EventRecord, LedgerError> {
        self.sync_head(file)?;

        let event_id = match &draft.event_id {
            Some(id) => {
                if self.contains_event_id(id)? {
                    return Err(LedgerError::DuplicateEventId(id.clone()));
                }
                id.clone()
            }
            None => uuid::Uuid::new_v4().to_string(),
        };
        let timestamp = draft.timestamp.clone().unwrap_or_else(now_rfc3339);

        let mut record = draft.into_record(event_id, timestamp);
        record.prev_hash = self.head.last_hash.clone();
        record.curr_hash = compute_curr_hash(&record.payload(), &record.prev_hash)?;
        if let Some(key) = &self.writer_key {
            record.sig = Some(sign_hash(key, &record.curr_hash)?);
        }

        let mut line = record.to_canonical_line()?;
        line.push(b'\n');

        let before = self.byte_len;
        let written = file.write_all(&line).and_then(|_| file.sync_data());
        if let Err(e) = written {
            // roll back a partial line so the tail stays parseable
            let _ = file.set_len(before);
            return Err(e.into());
        }

        self.byte_len = before + line.len() as u64;
        self.head = ChainHead {
            last_hash: record.curr_hash.clone(),
            count: self.head.count + 1,
        };
        self.store_head_cache();
        Ok(record)
    }

    fn store_head_cache(&self) {
        let meta = LedgerMeta {
            log_id: self.log_id.clone(),
            created_at: self.created_at.clone(),
            head_cache: Some(HeadCache {
                last_hash: self.head.last_hash.clone(),
                count: self.head.count,
                byte_len: self.byte_len,
            }),
        };
        if let Err(e) = write_meta(&self.meta_path, &meta) {
            tracing::warn!(path = %self.meta_path.display(), error = %e, "head cache not updated");
        }
    }

    /// Validates and appends every draft in a JSONL spool file, in order.
    /// Nothing is appended if any line fails to parse or validate.
    pub fn ingest_spool(&mut self, spool: impl AsRef<Path>) -> Result<Vec<EventRecord>, LedgerError> {
        let file = File::open(spool.as_ref())?;
        let mut drafts = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let draft: EventDraft = serde_json::from_str(&line).map_err(|e| LedgerError::Spool {
                line: i + 1,
                reason: e.to_string(),
            })?;
            let violations = validate_draft(&draft, ValidationMode::Strict);
            if !violations.is_empty() {
                return Err(LedgerError::Spool {
                    line: i + 1,
                    reason: format_violations(&violations),
                });
            }
            drafts.push(draft);
        }
        drafts.into_iter().map(|d| self.append(d)).collect()
    }
}

impl EventStore for Ledger {
    fn log_id(&self) -> &str {
        &self.log_id
    }

    fn head(&self) -> &ChainHead {
        &self.head
    }

    fn store_uri(&self) -> String {
        let abs = fs::canonicalize(&self.path).unwrap_or_else(|_| self.path.clone());
        format!("file://{}", abs.display())
    }

    /// Validates `draft` strictly, then chains, signs and writes it as one
    /// line. On any error the ledger and head are left unchanged.
    fn append(&mut self, draft: EventDraft) -> Result<EventRecord, LedgerError> {
        let violations = validate_draft(&draft, ValidationMode::Strict);
        if !violations.is_empty() {
            return Err(LedgerError::ValidationFailed(violations));
        }
        let mut file = self.lock()?;
        let result = self.append_locked(&mut file, draft);
        let _ = file.unlock();
        result
    }

    fn read_all(&self) -> Result<ReadOutcome, LedgerError> {
        Ok(read_records(&self.path)?)
    }
}

fn write_meta(path: &Path, meta: &LedgerMeta) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp-{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    {
        let mut f = File::create(&tmp)?;
        serde_json::to_writer_pretty(&mut f, meta)?;
        f.write_all(b"\n")?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// Reads the final line including its trailing newline, if any.
fn read_last_line(mut file: &File, len: u64) -> io::Result<Vec<u8>> {
    const CHUNK: u64 = 8 * 1024;
    let mut tail: Vec<u8> = Vec::new();
    let mut pos = len;
    loop {
        let start = pos.saturating_sub(CHUNK);
        let mut buf = vec![0u8; (pos - start) as usize];
        file.seek(SeekFrom::Start(start))?;
        file.read_exact(&mut buf)?;
        buf.extend_from_slice(&tail);
        tail = buf;
        // skip the terminating newline when looking for the line start
        let search_end = if tail.last() == Some(&b'\n') { tail.len() - 1 } else { tail.len() };
        if let Some(i) = tail[..search_end].iter().rposition(|&b| b == b'\n') {
            return Ok(tail.split_off(i + 1));
        }
        if start == 0 {
            return Ok(tail);
        }
        pos = start;
    }
}

fn count_newlines(mut file: &File, from: u64) -> io::Result<u64> {
    file.seek(SeekFrom::Start(from))?;
    let mut reader = BufReader::new(file);
    let mut count = 0u64;
    loop {
        let buf = reader.fill_buf()?;
        if buf.is_empty() {
            break;
        }
        count += buf.iter().filter(|&&b| b == b'\n').count() as u64;
        let n = buf.len();
        reader.consume(n);
    }
    Ok(count)
}

/// Parses one ledger line.
pub fn parse_line(line: &[u8]) -> Result<EventRecord, String> {
    if line.iter().all(u8::is_ascii_whitespace) {
        return Err("empty line".into());
    }
    serde_json::from_slice(line).map_err(|e| e.to_string())
}

/// Splits ledger bytes into lines. A trailing newline does not start a new
/// line; a final unterminated fragment is returned as a line.
pub fn split_lines(bytes: &[u8]) -> Vec<&[u8]> {
    if bytes.is_empty() {
        return Vec::new();
    }
    let body = bytes.strip_suffix(b"\n").unwrap_or(bytes);
    body.split(|&b| b == b'\n').collect()
}

/// Reads every line of a ledger file with lenient validation.
pub fn read_records(path: impl AsRef<Path>) -> io::Result<ReadOutcome> {
    let bytes = fs::read(path)?;
    Ok(read_bytes(&bytes))
}

pub fn read_bytes(bytes: &[u8]) -> ReadOutcome {
    let mut out = ReadOutcome::default();
    for (i, line) in split_lines(bytes).into_iter().enumerate() {
        match parse_line(line) {
            Ok(rec) => {
                for v in validate_event(&rec, ValidationMode::Lenient) {
                    out.warnings.push((i + 1, v));
                }
                out.records.push(rec);
            }
            Err(message) => out.errors.push(LineError { line: i + 1, message }),
        }
    }
    out
}

/// Distinct values of a scope key, most recent first.
pub fn recent_values<'a>(
    records: impl DoubleEndedIterator<Item = &'a EventRecord>,
    key: crate::event::ScopeKey,
    cap: usize,
) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for r in records.rev() {
        if out.len() >= cap {
            break;
        }
        if let Some(v) = r.scope(key) {
            if seen.insert(v) {
                out.push(v.to_string());
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{generate_keypair, verify_signature, GENESIS};
    use crate::event::{EventType, ScopeKey};
    use serde_json::json;
    use std::collections::BTreeMap;
    use sha2::{Digest, Sha256};

    fn draft(i: usize) -> EventDraft {
        EventDraft::new(EventType::EpochEnd, "training", "trainer")
            .with_scope(ScopeKey::ModelId, "m1")
            .with_timestamp(format!("2025-10-02T18:{:02}:00Z", i % 60))
            .with_details(json!({"epoch": i, "loss": 1.0 / (i as f64 + 1.0)}))
    }

    fn fresh() -> (tempfile::TempDir, Ledger) {
        let dir = tempfile::tempdir().unwrap();
        let l = Ledger::open(dir.path().join("audit_trail.jsonl"), None, true).unwrap();
        (dir, l)
    }

    // independent digest route: rebuild the payload bytes by hand
    fn oracle_hash(r: &EventRecord) -> String {
        let mut payload = serde_json::Map::new();
        for k in ["event_id", "timestamp", "system", "actor", "event_type", "model_id", "dataset_id", "deployment_id", "details"] {
            payload.insert(k.to_string(), serde_json::to_value(r).unwrap()[k].clone());
        }
        let sorted: BTreeMap<_, _> = payload.into_iter().collect();
        let mut bytes = serde_json::to_vec(&sorted).unwrap();
        bytes.extend_from_slice(r.prev_hash.as_bytes());
        hex::encode(Sha256::digest(&bytes))
    }

    #[test]
    fn new_ledger_is_genesis() {
        let (_d, l) = fresh();
        assert_eq!(l.head().count, 0);
        assert_eq!(l.head().last_hash, GENESIS);
        assert_eq!(l.log_id().len(), 32);
        assert!(l.read_all().unwrap().records.is_empty());
    }

    #[test]
    fn missing_without_create() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            Ledger::open(dir.path().join("x.jsonl"), None, false),
            Err(LedgerError::NotFound(_))
        ));
    }

    #[test]
    fn chain_links_and_reopen() {
        let (_d, mut l) = fresh();
        let a = l.append(draft(0)).unwrap();
        let b = l.append(draft(1)).unwrap();
        let c = l.append(draft(2)).unwrap();
        assert_eq!(a.prev_hash, GENESIS);
        assert_eq!(b.prev_hash, a.curr_hash);
        assert_eq!(c.prev_hash, b.curr_hash);
        for r in [&a, &b, &c] {
            assert_eq!(oracle_hash(r), r.curr_hash);
        }
        let log_id = l.log_id().to_string();
        let path = l.path().to_path_buf();
        drop(l);

        let reopened = Ledger::open(&path, None, false).unwrap();
        assert_eq!(reopened.head().count, 3);
        assert_eq!(reopened.head().last_hash, c.curr_hash);
        assert_eq!(reopened.log_id(), log_id);

        // stale cache: count must come from a full scan
        fs::write(meta_path_for(&path), format!(
            r#"{{"log_id":"{log_id}","created_at":"x","head_cache":{{"last_hash":"{}","count":99,"byte_len":1}}}}"#,
            c.curr_hash
        )).unwrap();
        assert_eq!(Ledger::open(&path, None, false).unwrap().head().count, 3);

        let read = reopened.read_all().unwrap();
        assert_eq!(read.records, vec![a, b, c]);
        assert!(read.errors.is_empty());
    }

    #[test]
    fn lines_are_canonical() {
        let (_d, mut l) = fresh();
        let r = l.append(draft(3)).unwrap();
        let text = fs::read_to_string(l.path()).unwrap();
        let mut expected = r.to_canonical_line().unwrap();
        expected.push(b'\n');
        assert_eq!(text.as_bytes(), expected.as_slice());
    }

    #[test]
    fn append_only_prefix() {
        let (_d, mut l) = fresh();
        for i in 0..5 {
            let before = fs::read(l.path()).unwrap();
            l.append(draft(i)).unwrap();
            let after = fs::read(l.path()).unwrap();
            assert!(after.starts_with(&before));
            assert!(after.len() > before.len());
        }
    }

    #[test]
    fn truncated_tail_is_corrupt() {
        let (_d, mut l) = fresh();
        l.append(draft(0)).unwrap();
        l.append(draft(1)).unwrap();
        let path = l.path().to_path_buf();
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 10]).unwrap();
        assert!(matches!(
            Ledger::open(&path, None, false),
            Err(LedgerError::CorruptTail { .. })
        ));
        // unterminated but otherwise whole line is still refused
        fs::write(&path, &bytes[..bytes.len() - 1]).unwrap();
        assert!(matches!(
            Ledger::open(&path, None, false),
            Err(LedgerError::CorruptTail { .. })
        ));
    }

    #[test]
    fn garbage_line_reported() {
        let (_d, mut l) = fresh();
        l.append(draft(0)).unwrap();
        l.append(draft(1)).unwrap();
        let mut bytes = fs::read(l.path()).unwrap();
        let first_nl = bytes.iter().position(|&b| b == b'\n').unwrap();
        bytes.splice(first_nl + 1..first_nl + 1, b"not json at all\n".iter().copied());
        fs::write(l.path(), &bytes).unwrap();
        let out = l.read_all().unwrap();
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.errors.len(), 1);
        assert_eq!(out.errors[0].line, 2);
    }

    #[test]
    fn invalid_draft_leaves_ledger_untouched() {
        let (_d, mut l) = fresh();
        l.append(draft(0)).unwrap();
        let before = fs::read(l.path()).unwrap();
        let head = l.head().clone();
        let bad = EventDraft::new(EventType::parse_lossy("Nope"), "s", "a")
            .with_scope(ScopeKey::ModelId, "m1");
        match l.append(bad) {
            Err(LedgerError::ValidationFailed(v)) => assert_eq!(v[0].field, "event_type"),
            other => panic!("{other:?}"),
        }
        assert_eq!(fs::read(l.path()).unwrap(), before);
        assert_eq!(l.head(), &head);
    }

    #[test]
    fn duplicate_event_id_rejected() {
        let (_d, mut l) = fresh();
        let id = "0b7f6c1e-3c1a-4c5e-9a43-2f1a8d7e6b10";
        l.append(draft(0).with_event_id(id)).unwrap();
        assert!(matches!(
            l.append(draft(1).with_event_id(id)),
            Err(LedgerError::DuplicateEventId(_))
        ));
        assert_eq!(l.head().count, 1);
    }

    #[test]
    fn signed_appends() {
        let dir = tempfile::tempdir().unwrap();
        let key = generate_keypair(Some(b"w"));
        let mut l = Ledger::open(dir.path().join("s.jsonl"), Some(key.clone()), true).unwrap();
        let r = l.append(draft(0)).unwrap();
        let sig = r.sig.as_ref().unwrap();
        assert_eq!(sig.key_id, key.key_id);
        assert!(verify_signature(sig, &r.curr_hash, &key.public_key).unwrap());
    }

    #[test]
    fn documented_example_line() {
        let (_d, mut l) = fresh();
        let r = l
            .append(
                EventDraft::new(EventType::DatasetRegistered, "data_engineering", "Data Eng")
                    .with_scope(ScopeKey::DatasetId, "hf:stanfordnlp/imdb")
                    .with_timestamp("2025-10-02T18:33:11Z")
                    .with_details(json!({
                        "source": "huggingface://datasets/stanfordnlp/imdb",
                        "version": "latest",
                        "rows": 100000,
                        "license": "unknown"
                    })),
            )
            .unwrap();
        let v: serde_json::Value = serde_json::from_str(fs::read_to_string(l.path()).unwrap().trim()).unwrap();
        let keys: Vec<_> = v.as_object().unwrap().keys().map(String::as_str).collect();
        let mut expected = vec![
            "actor", "curr_hash", "dataset_id", "deployment_id", "details", "event_id",
            "event_type", "model_id", "prev_hash", "system", "timestamp",
        ];
        expected.sort();
        let mut got = keys.clone();
        got.sort();
        assert_eq!(got, expected);
        assert_eq!(v["model_id"], serde_json::Value::Null);
        assert_eq!(r.details["rows"], 100000);
    }

    #[test]
    fn two_handles_interleave() {
        let (_d, l) = fresh();
        let path = l.path().to_path_buf();
        drop(l);
        let handles: Vec<_> = (0..2)
            .map(|t| {
                let path = path.clone();
                thread::spawn(move || {
                    let mut l = Ledger::open(&path, None, false).unwrap();
                    for i in 0..25 {
                        l.append(draft(t * 100 + i)).unwrap();
                    }
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        let records = read_records(&path).unwrap().records;
        assert_eq!(records.len(), 50);
        let mut prev = GENESIS.to_string();
        for r in &records {
            assert_eq!(r.prev_hash, prev);
            assert_eq!(r.recompute_hash().unwrap(), r.curr_hash);
            prev = r.curr_hash.clone();
        }
        assert_eq!(Ledger::open(&path, None, false).unwrap().head().count, 50);
    }

    #[test]
    fn spool_is_all_or_nothing() {
        let (d, mut l) = fresh();
        let spool = d.path().join("spool.jsonl");
        let good = serde_json::to_string(&draft(0)).unwrap();
        fs::write(&spool, format!("{good}\n{{\"system\":\"s\"}}\n")).unwrap();
        assert!(matches!(l.ingest_spool(&spool), Err(LedgerError::Spool { line: 2, .. })));
        assert_eq!(l.head().count, 0);
        fs::write(&spool, format!("{good}\n\n{good}\n")).unwrap();
        assert_eq!(l.ingest_spool(&spool).unwrap().len(), 2);
    }

    #[test]
    fn recent_values_order() {
        let (_d, mut l) = fresh();
        for m in ["m1", "m2", "m1"] {
            l.append(draft(0).with_scope(ScopeKey::ModelId, m)).unwrap();
        }
        let recs = l.read_all().unwrap().records;
        assert_eq!(recent_values(recs.iter(), ScopeKey::ModelId, 10), vec!["m1", "m2"]);
        assert!(recent_values(recs.iter(), ScopeKey::DeploymentId, 10).is_empty());
    }
}
