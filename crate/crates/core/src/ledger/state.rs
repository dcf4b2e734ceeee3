use std::collections::BTreeMap;
use std::ops::Bound;

use serde::{Deserialize, Serialize};

use super::{Block, Document, ReadWriteSet, StateKey, Version};
use crate::codec::Encoder;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VersionedDocument {
    pub value: Document,
    pub version: Version,
}

/// Current key → document view, materialised from valid transactions.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(into = "Snapshot", from = "Snapshot")]
pub struct WorldState {
    entries: BTreeMap<StateKey, VersionedDocument>,
    height: Option<Version>,
}

impl WorldState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Folds the write sets of every valid transaction, in order.
    pub fn replay<'a>(blocks: impl IntoIterator<Item = &'a Block>) -> Self {
        let mut state = WorldState::new();
        for block in blocks {
            state.apply_block(block);
        }
        state
    }

    /// Applies a block whose validity flags are already final.
    pub fn apply_block(&mut self, block: &Block) {
        for (i, tx) in block.valid_transactions() {
            self.apply_rwset(&tx.rwset, Version::new(block.number, i));
        }
        if let Some(last) = block.transactions.len().checked_sub(1) {
            self.height = Some(Version::new(block.number, last as u32));
        }
    }

    pub(crate) fn apply_rwset(&mut self, rwset: &ReadWriteSet, version: Version) {
        for w in &rwset.writes {
            match &w.value {
                Some(doc) => {
                    self.entries.insert(
                        w.key.clone(),
                        VersionedDocument {
                            value: doc.clone(),
                            version,
                        },
                    );
                }
                None => {
                    self.entries.remove(&w.key);
                }
            }
        }
    }

    pub fn get(&self, key: &StateKey) -> Option<&VersionedDocument> {
        self.entries.get(key)
    }

    pub fn version_of(&self, key: &StateKey) -> Option<Version> {
        self.entries.get(key).map(|v| v.version)
    }

    pub fn height(&self) -> Option<Version> {
        self.height
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&StateKey, &VersionedDocument)> {
        self.entries.iter()
    }

    /// Entries of one namespace in key order.
    pub fn namespace<'a>(&'a self, namespace: &'a str) -> impl Iterator<Item = (&'a StateKey, &'a VersionedDocument)> {
        let start = StateKey::new(namespace, "");
        self.entries
            .range((Bound::Included(start), Bound::Unbounded))
            .take_while(move |(k, _)| k.namespace == namespace)
    }

    /// Deterministic binary serialization used to compare states.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut enc = Encoder::with_domain(b"ehr:world-state:v1\0");
        enc.put_option(self.height.as_ref(), |e, v| {
            e.put_u64(v.block_num).put_u32(v.tx_index);
        });
        enc.put_len(self.entries.len());
        for (k, v) in &self.entries {
            enc.put_str(&k.namespace)
                .put_str(&k.key)
                .put_u64(v.version.block_num)
                .put_u32(v.version.tx_index)
                .put_bytes(&v.value.canonical_bytes());
        }
        enc.into_bytes()
    }
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    height: Option<Version>,
    entries: Vec<SnapshotEntry>,
}

#[derive(Serialize, Deserialize)]
struct SnapshotEntry {
    namespace: String,
    key: String,
    version: Version,
    value: Document,
}

impl From<WorldState> for Snapshot {
    fn from(state: WorldState) -> Self {
        Snapshot {
            height: state.height,
            entries: state
                .entries
                .into_iter()
                .map(|(k, v)| SnapshotEntry {
                    namespace: k.namespace,
                    key: k.key,
                    version: v.version,
                    value: v.value,
                })
                .collect(),
        }
    }
}

impl From<Snapshot> for WorldState {
    fn from(s: Snapshot) -> Self {
        WorldState {
            height: s.height,
            entries: s
                .entries
                .into_iter()
                .map(|e| {
                    (
                        StateKey::new(e.namespace, e.key),
                        VersionedDocument {
                            value: e.value,
                            version: e.version,
                        },
                    )
                })
                .collect(),
        }
    }
}
