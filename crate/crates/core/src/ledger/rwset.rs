use std::fmt;

use serde::{Deserialize, Serialize};

use super::Document;
use crate::codec::{Canonical, DecodeError, Decoder, Encoder};
use crate::crypto::{Digest, Hasher};

/// A world-state key, scoped by chaincode namespace.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StateKey {
    pub namespace: String,
    pub key: String,
}

impl StateKey {
    pub fn new(namespace: impl Into<String>, key: impl Into<String>) -> Self {
        StateKey {
            namespace: namespace.into(),
            key: key.into(),
        }
    }

    fn encode(&self, enc: &mut Encoder) {
        enc.put_str(&self.namespace).put_str(&self.key);
    }

    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(StateKey {
            namespace: dec.string("namespace")?,
            key: dec.string("key")?,
        })
    }
}

impl fmt::Display for StateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.namespace, self.key)
    }
}

/// Position of the transaction that last wrote a key.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Version {
    pub block_num: u64,
    pub tx_index: u32,
}

impl Version {
    pub fn new(block_num: u64, tx_index: u32) -> Self {
        Version { block_num, tx_index }
    }

    fn encode(&self, enc: &mut Encoder) {
        enc.put_u64(self.block_num).put_u32(self.tx_index);
    }

    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(Version {
            block_num: dec.u64()?,
            tx_index: dec.u32()?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KvRead {
    pub key: StateKey,
    /// `None` records that the key was absent when simulated.
    pub version: Option<Version>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KvWrite {
    pub key: StateKey,
    /// `None` is a delete marker.
    pub value: Option<Document>,
}

impl KvWrite {
    pub fn is_delete(&self) -> bool {
        self.value.is_none()
    }
}

/// Reads observed and writes produced while simulating one transaction.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReadWriteSet {
    pub reads: Vec<KvRead>,
    pub writes: Vec<KvWrite>,
}

impl ReadWriteSet {
    pub fn digest(&self) -> Digest {
        let mut h = Hasher::new(b"ehr:rwset:v1\0");
        h.update(&self.to_canonical_bytes());
        h.finish()
    }

    pub fn touches(&self, key: &StateKey) -> bool {
        self.writes.iter().any(|w| &w.key == key)
    }

    /// True when no key appears twice among the reads or among the writes.
    pub fn has_unique_keys(&self) -> bool {
        let mut reads: Vec<_> = self.reads.iter().map(|r| &r.key).collect();
        let mut writes: Vec<_> = self.writes.iter().map(|w| &w.key).collect();
        reads.sort();
        writes.sort();
        reads.windows(2).all(|w| w[0] != w[1]) && writes.windows(2).all(|w| w[0] != w[1])
    }
}

impl Canonical for ReadWriteSet {
    fn encode(&self, enc: &mut Encoder) {
        enc.put_len(self.reads.len());
        for r in &self.reads {
            r.key.encode(enc);
            enc.put_option(r.version.as_ref(), |e, v| v.encode(e));
        }
        enc.put_len(self.writes.len());
        for w in &self.writes {
            w.key.encode(enc);
            enc.put_option(w.value.as_ref(), |e, doc| {
                e.put_bytes(&doc.canonical_bytes());
            });
        }
    }

    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        let n = dec.count()?;
        let mut reads = Vec::with_capacity(n);
        for _ in 0..n {
            let key = StateKey::decode(dec)?;
            let version = dec.option("read version", Version::decode)?;
            reads.push(KvRead { key, version });
        }
        let n = dec.count()?;
        let mut writes = Vec::with_capacity(n);
        for _ in 0..n {
            let key = StateKey::decode(dec)?;
            let value = dec.option("write value", |d| {
                let raw = d.bytes()?;
                Document::from_canonical_bytes(raw).map_err(|e| DecodeError::Invalid {
                    what: "document",
                    reason: e.to_string(),
                })
            })?;
            writes.push(KvWrite { key, value });
        }
        Ok(ReadWriteSet { reads, writes })
    }
}
