//! Hash chaining, writer keys, and detached signatures.
//!
//! The chain digest of a record is
//! `sha256(canonical(payload) || ascii(prev_hash))`, hex-encoded in lowercase,
//! with no separator between the two parts. The first record of a ledger uses
//! the literal `GENESIS` as its `prev_hash`.
//!
//! Signatures are Ed25519 over the ASCII hex of `curr_hash`, so the signed
//! message is exactly the string stored in the record.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use ed25519_dalek::{Signer, SigningKey, VerifyingKey};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::canonical::{canonical_serialize, CanonicalError};

pub const GENESIS: &str = "GENESIS";
pub const ED25519: &str = "ed25519";

#[derive(Debug, Error)]
pub enum ChainError {
    #[error(transparent)]
    Canonical(#[from] CanonicalError),
    #[error("malformed prev_hash `{0}`")]
    MalformedPrevHash(String),
    #[error("writer key has no private part")]
    MissingPrivateKey,
    #[error("unsupported signature algorithm `{0}`")]
    UnsupportedAlgorithm(String),
    #[error("invalid key material: {0}")]
    InvalidKey(String),
    #[error("key file {path}: {source}")]
    KeyFile {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// True for exactly 64 lowercase hex characters.
pub fn is_digest_hex(s: &str) -> bool {
    s.len() == 64 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Chain digest of `payload` linked to `prev_hash`.
pub fn compute_curr_hash(payload: &Value, prev_hash: &str) -> Result<String, CanonicalError> {
    let mut hasher = Sha256::new();
    hasher.update(canonical_serialize(payload)?);
    hasher.update(prev_hash.as_bytes());
    Ok(hex::encode(hasher.finalize()))
}

/// Like [`compute_curr_hash`] but rejects a `prev_hash` that is neither a
/// digest nor `GENESIS`.
pub fn compute_curr_hash_checked(payload: &Value, prev_hash: &str) -> Result<String, ChainError> {
    if prev_hash != GENESIS && !is_digest_hex(prev_hash) {
        return Err(ChainError::MalformedPrevHash(prev_hash.to_string()));
    }
    Ok(compute_curr_hash(payload, prev_hash)?)
}

/// Integrity cursor of a ledger.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainHead {
    pub last_hash: String,
    pub count: u64,
}

impl ChainHead {
    pub fn genesis() -> Self {
        ChainHead {
            last_hash: GENESIS.to_string(),
            count: 0,
        }
    }

    pub fn is_genesis(&self) -> bool {
        self.count == 0
    }
}

impl Default for ChainHead {
    fn default() -> Self {
        ChainHead::genesis()
    }
}

/// Detached signature carried next to a record or document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Signature {
    pub key_id: String,
    pub algorithm: String,
    pub value: String,
}

/// A writer's Ed25519 key. The private half is optional so the same type can
/// hold trust anchors.
#[derive(Clone, PartialEq, Eq)]
pub struct WriterKey {
    pub key_id: String,
    pub public_key: Vec<u8>,
    private_key: Option<Vec<u8>>,
}

impl fmt::Debug for WriterKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WriterKey")
            .field("key_id", &self.key_id)
            .field("has_private", &self.private_key.is_some())
            .finish()
    }
}

/// Fingerprint of a public key: lowercase hex SHA-256.
pub fn key_id_for(public_key: &[u8]) -> String {
    sha256_hex(public_key)
}

impl WriterKey {
    fn from_signing(sk: &SigningKey) -> Self {
        let public_key = sk.verifying_key().to_bytes().to_vec();
        WriterKey {
            key_id: key_id_for(&public_key),
            public_key,
            private_key: Some(sk.to_bytes().to_vec()),
        }
    }

    pub fn from_public(public_key: Vec<u8>) -> Result<Self, ChainError> {
        verifying_key(&public_key)?;
        Ok(WriterKey {
            key_id: key_id_for(&public_key),
            public_key,
            private_key: None,
        })
    }

    pub fn from_private(private_key: &[u8]) -> Result<Self, ChainError> {
        let bytes: [u8; 32] = private_key
            .try_into()
            .map_err(|_| ChainError::InvalidKey("private key must be 32 bytes".into()))?;
        Ok(WriterKey::from_signing(&SigningKey::from_bytes(&bytes)))
    }

    pub fn has_private(&self) -> bool {
        self.private_key.is_some()
    }

    /// Copy without the private half.
    pub fn public_only(&self) -> WriterKey {
        WriterKey {
            key_id: self.key_id.clone(),
            public_key: self.public_key.clone(),
            private_key: None,
        }
    }

    fn signing_key(&self) -> Result<SigningKey, ChainError> {
        let bytes = self.private_key.as_ref().ok_or(ChainError::MissingPrivateKey)?;
        let arr: [u8; 32] = bytes
            .as_slice()
            .try_into()
            .map_err(|_| ChainError::InvalidKey("private key must be 32 bytes".into()))?;
        Ok(SigningKey::from_bytes(&arr))
    }
}

/// Generates a writer key. With a seed the key is derived as
/// `sha256(seed)`, so the same seed always yields the same key.
pub fn generate_keypair(seed: Option<&[u8]>) -> WriterKey {
    let secret: [u8; 32] = match seed {
        Some(s) => Sha256::digest(s).into(),
        None => rand::random(),
    };
    WriterKey::from_signing(&SigningKey::from_bytes(&secret))
}

/// Signs arbitrary message bytes.
pub fn sign_message(key: &WriterKey, message: &[u8]) -> Result<Signature, ChainError> {
    let sk = key.signing_key()?;
    let sig = sk.sign(message);
    Ok(Signature {
        key_id: key.key_id.clone(),
        algorithm: ED25519.to_string(),
        value: B64.encode(sig.to_bytes()),
    })
}

/// Signs the ASCII hex of a chain digest.
pub fn sign_hash(key: &WriterKey, curr_hash: &str) -> Result<Signature, ChainError> {
    sign_message(key, curr_hash.as_bytes())
}

fn verifying_key(public_key: &[u8]) -> Result<VerifyingKey, ChainError> {
    let arr: [u8; 32] = public_key
        .try_into()
        .map_err(|_| ChainError::InvalidKey("public key must be 32 bytes".into()))?;
    VerifyingKey::from_bytes(&arr).map_err(|e| ChainError::InvalidKey(e.to_string()))
}

/// Verifies `sig` over `message`. Malformed signatures or keys verify as
/// `false`; only an unknown algorithm is an error.
pub fn verify_message(sig: &Signature, message: &[u8], public_key: &[u8]) -> Result<bool, ChainError> {
    if sig.algorithm != ED25519 {
        return Err(ChainError::UnsupportedAlgorithm(sig.algorithm.clone()));
    }
    let Ok(vk) = verifying_key(public_key) else {
        return Ok(false);
    };
    let Ok(raw) = B64.decode(&sig.value) else {
        return Ok(false);
    };
    let Ok(sig) = ed25519_dalek::Signature::from_slice(&raw) else {
        return Ok(false);
    };
    Ok(vk.verify_strict(message, &sig).is_ok())
}

/// Verifies a record signature over the ASCII hex of `curr_hash`.
pub fn verify_signature(sig: &Signature, curr_hash: &str, public_key: &[u8]) -> Result<bool, ChainError> {
    verify_message(sig, curr_hash.as_bytes(), public_key)
}

/// On-disk key envelope: `{key_id, algorithm, public, private?}` with base64
/// key material.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KeyFile {
    pub key_id: String,
    pub algorithm: String,
    pub public: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub private: Option<String>,
}

impl KeyFile {
    pub fn from_key(key: &WriterKey, include_private: bool) -> Self {
        KeyFile {
            key_id: key.key_id.clone(),
            algorithm: ED25519.to_string(),
            public: B64.encode(&key.public_key),
            private: if include_private {
                key.private_key.as_ref().map(|p| B64.encode(p))
            } else {
                None
            },
        }
    }

    pub fn into_key(self) -> Result<WriterKey, ChainError> {
        if self.algorithm != ED25519 {
            return Err(ChainError::UnsupportedAlgorithm(self.algorithm));
        }
        let public = B64
            .decode(&self.public)
            .map_err(|e| ChainError::InvalidKey(format!("public: {e}")))?;
        let key = match &self.private {
            Some(p) => {
                let private = B64
                    .decode(p)
                    .map_err(|e| ChainError::InvalidKey(format!("private: {e}")))?;
                let key = WriterKey::from_private(&private)?;
                if key.public_key != public {
                    return Err(ChainError::InvalidKey(
                        "public key does not match private key".into(),
                    ));
                }
                key
            }
            None => WriterKey::from_public(public)?,
        };
        if key.key_id != self.key_id {
            return Err(ChainError::InvalidKey(format!(
                "key_id {} does not match public key fingerprint {}",
                self.key_id, key.key_id
            )));
        }
        Ok(key)
    }
}

pub fn load_key(path: impl AsRef<Path>) -> Result<WriterKey, ChainError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ChainError::KeyFile {
        path: path.display().to_string(),
        source,
    })?;
    let kf: KeyFile = serde_json::from_str(&text)
        .map_err(|e| ChainError::InvalidKey(format!("{}: {e}", path.display())))?;
    kf.into_key()
}

pub fn save_key(path: impl AsRef<Path>, key: &WriterKey, include_private: bool) -> Result<(), ChainError> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(&KeyFile::from_key(key, include_private))
        .expect("key file serializes");
    text.push('\n');
    fs::write(path, text).map_err(|source| ChainError::KeyFile {
        path: path.display().to_string(),
        source,
    })
}

/// Configured trust anchors: key_id to public key.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrustStore {
    keys: BTreeMap<String, Vec<u8>>,
}

impl TrustStore {
    pub fn new() -> Self {
        TrustStore::default()
    }

    pub fn add(&mut self, key: &WriterKey) {
        self.keys.insert(key.key_id.clone(), key.public_key.clone());
    }

    pub fn with(mut self, key: &WriterKey) -> Self {
        self.add(key);
        self
    }

    pub fn get(&self, key_id: &str) -> Option<&[u8]> {
        self.keys.get(key_id).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Loads every `*.json` key file in `dir`. Private halves are dropped.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, ChainError> {
        let dir = dir.as_ref();
        let io_err = |source| ChainError::KeyFile {
            path: dir.display().to_string(),
            source,
        };
        let mut paths: Vec<_> = fs::read_dir(dir)
            .map_err(io_err)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let mut store = TrustStore::new();
        for p in paths {
            store.add(&load_key(&p)?.public_only());
        }
        Ok(store)
    }
}

/// Receipt returned by an external anchoring service.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnchorReceipt {
    pub service: String,
    pub reference: String,
}

/// Hook for anchoring a ledger head in an external timestamping or
/// transparency service. Only the no-op implementation ships.
pub trait HeadAnchor {
    fn anchor(&self, log_id: &str, head: &ChainHead) -> Result<Option<AnchorReceipt>, ChainError>;
}

/// Anchor that records nothing.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoAnchor;

impl HeadAnchor for NoAnchor {
    fn anchor(&self, _log_id: &str, _head: &ChainHead) -> Result<Option<AnchorReceipt>, ChainError> {
        Ok(None)
    }
}
