use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use thiserror::Error;

use super::store::{BlockStore, StoreError};
use super::{Block, Document, StateKey, Transaction, ValidationCode, Version, WorldState};
use crate::crypto::Digest;
use crate::time::Timestamp;

/// Decides whether a transaction's endorsements are acceptable. Returns
/// `Valid` or `BadEndorsement`; MVCC is checked by the ledger afterwards.
pub trait EndorsementCheck {
    fn check(&self, tx: &Transaction) -> ValidationCode;
}

impl<F: Fn(&Transaction) -> ValidationCode> EndorsementCheck for F {
    fn check(&self, tx: &Transaction) -> ValidationCode {
        self(tx)
    }
}

/// Accepts every transaction's endorsements.
pub struct AcceptEndorsements;

impl EndorsementCheck for AcceptEndorsements {
    fn check(&self, _: &Transaction) -> ValidationCode {
        ValidationCode::Valid
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaultKind {
    NumberMismatch { expected: u64 },
    PrevHashMismatch,
    DataHashMismatch,
    BlockHashMismatch,
    FlagCountMismatch,
}

impl fmt::Display for FaultKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FaultKind::NumberMismatch { expected } => write!(f, "block number mismatch (expected {expected})"),
            FaultKind::PrevHashMismatch => f.write_str("prev_hash mismatch"),
            FaultKind::DataHashMismatch => f.write_str("data_hash mismatch"),
            FaultKind::BlockHashMismatch => f.write_str("block hash mismatch"),
            FaultKind::FlagCountMismatch => f.write_str("validity flag count mismatch"),
        }
    }
}

/// First inconsistency found by [`validate_chain`].
#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
#[error("block {block}: {kind}")]
pub struct ChainFault {
    pub block: u64,
    pub kind: FaultKind,
}

/// Recomputes every block's number, previous-hash link, data hash and
/// block hash, in order.
pub fn validate_chain(blocks: &[Block]) -> Result<(), ChainFault> {
    let mut prev = Digest::ZERO;
    for (i, block) in blocks.iter().enumerate() {
        let fault = |kind| ChainFault { block: i as u64, kind };
        if block.number != i as u64 {
            return Err(fault(FaultKind::NumberMismatch { expected: i as u64 }));
        }
        if block.validity.len() != block.transactions.len() {
            return Err(fault(FaultKind::FlagCountMismatch));
        }
        if block.prev_hash != prev {
            return Err(fault(FaultKind::PrevHashMismatch));
        }
        if block.recompute_data_hash() != block.data_hash {
            return Err(fault(FaultKind::DataHashMismatch));
        }
        if block.recompute_hash() != block.hash {
            return Err(fault(FaultKind::BlockHashMismatch));
        }
        prev = block.hash;
    }
    Ok(())
}

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("refusing to cut an empty block")]
    EmptyBlock,
    #[error("invalid genesis block: {0}")]
    InvalidGenesis(String),
    #[error("stored chain is inconsistent: {0}")]
    Chain(#[from] ChainFault),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// One committed write to a key, oldest first in a history.
#[derive(Clone, Debug, PartialEq)]
pub struct HistoryEntry {
    pub tx_id: String,
    pub block_num: u64,
    pub tx_index: u32,
    pub timestamp: Timestamp,
    /// `None` is a delete marker.
    pub value: Option<Document>,
}

#[derive(Clone, Copy, Debug)]
pub struct TxLocation<'a> {
    pub block_num: u64,
    pub tx_index: u32,
    pub transaction: &'a Transaction,
    pub validity: ValidationCode,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SnapshotStatus {
    /// The stored snapshot equalled the replayed state.
    Verified,
    Missing,
    /// The stored snapshot disagreed with the replay and was replaced.
    Rebuilt,
}

/// The channel ledger: block list, world state and indexes.
pub struct Ledger {
    blocks: Vec<Block>,
    state: WorldState,
    history: HashMap<StateKey, Vec<(u64, u32)>>,
    tx_locations: HashMap<String, (u64, u32)>,
    store: Option<BlockStore>,
}

impl fmt::Debug for Ledger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Ledger")
            .field("height", &self.height())
            .field("keys", &self.state.len())
            .field("persistent", &self.store.is_some())
            .finish()
    }
}

impl Ledger {
    /// An in-memory ledger starting from `genesis`.
    pub fn new(genesis: Block) -> Result<Self, LedgerError> {
        check_genesis(&genesis)?;
        Ok(Self::from_blocks(vec![genesis], None))
    }

    /// A persistent ledger in `dir`, which must not already hold a log.
    pub fn create(dir: &Path, genesis: Block) -> Result<Self, LedgerError> {
        check_genesis(&genesis)?;
        let mut store = BlockStore::create(dir)?;
        store.append(&genesis)?;
        let ledger = Self::from_blocks(vec![genesis], Some(store));
        ledger.write_snapshot()?;
        Ok(ledger)
    }

    /// Reopens a persistent ledger, validating the chain and rebuilding the
    /// world state by replay.
    pub fn open(dir: &Path) -> Result<(Self, SnapshotStatus), LedgerError> {
        let (store, blocks) = BlockStore::open(dir)?;
        if blocks.is_empty() {
            return Err(LedgerError::InvalidGenesis("block log is empty".into()));
        }
        validate_chain(&blocks)?;
        let snapshot = store.read_snapshot();
        let ledger = Self::from_blocks(blocks, Some(store));
        let status = match snapshot {
            Ok(Some(s)) if s == ledger.state => SnapshotStatus::Verified,
            Ok(None) => {
                ledger.write_snapshot()?;
                SnapshotStatus::Missing
            }
            _ => {
                log::warn!("world-state snapshot disagrees with block log replay; rebuilding");
                ledger.write_snapshot()?;
                SnapshotStatus::Rebuilt
            }
        };
        Ok((ledger, status))
    }

    fn from_blocks(blocks: Vec<Block>, store: Option<BlockStore>) -> Self {
        let mut ledger = Ledger {
            blocks: Vec::with_capacity(blocks.len()),
            state: WorldState::new(),
            history: HashMap::new(),
            tx_locations: HashMap::new(),
            store,
        };
        for block in blocks {
            ledger.apply(block);
        }
        ledger
    }

    fn write_snapshot(&self) -> Result<(), StoreError> {
        match &self.store {
            Some(store) => store.write_snapshot(&self.state),
            None => Ok(()),
        }
    }

    fn apply(&mut self, block: Block) {
        self.state.apply_block(&block);
        for (i, tx, code) in block.entries() {
            self.tx_locations.entry(tx.tx_id.clone()).or_insert((block.number, i));
            if code.is_valid() {
                for w in &tx.rwset.writes {
                    self.history.entry(w.key.clone()).or_default().push((block.number, i));
                }
            }
        }
        self.blocks.push(block);
    }

    /// Validates `candidates` in order, seals them into the next block,
    /// persists it and applies the valid write sets.
    ///
    /// A transaction is valid when its id is new, `check` accepts its
    /// endorsements, and every version it read is still current given the
    /// writes of earlier valid transactions in the same block.
    pub fn append_block(
        &mut self,
        candidates: Vec<Transaction>,
        check: &dyn EndorsementCheck,
    ) -> Result<&Block, LedgerError> {
        if candidates.is_empty() {
            return Err(LedgerError::EmptyBlock);
        }
        let number = self.blocks.len() as u64;
        let prev_hash = self.blocks.last().expect("ledger has genesis").hash;

        // versions as of "just before" each transaction in this block
        let mut pending: HashMap<&StateKey, Option<Version>> = HashMap::new();
        let mut seen_ids: HashSet<&str> = HashSet::new();
        let mut validity = Vec::with_capacity(candidates.len());
        for (i, tx) in candidates.iter().enumerate() {
            let code = if self.tx_locations.contains_key(&tx.tx_id) || !seen_ids.insert(&tx.tx_id) {
                ValidationCode::DuplicateTxId
            } else {
                match check.check(tx) {
                    ValidationCode::Valid => {
                        let stale = tx.rwset.reads.iter().any(|r| {
                            let current = match pending.get(&r.key) {
                                Some(v) => *v,
                                None => self.state.version_of(&r.key),
                            };
                            current != r.version
                        });
                        if stale {
                            ValidationCode::MvccConflict
                        } else {
                            ValidationCode::Valid
                        }
                    }
                    other => other,
                }
            };
            if code.is_valid() {
                let version = Version::new(number, i as u32);
                for w in &tx.rwset.writes {
                    pending.insert(&w.key, w.value.as_ref().map(|_| version));
                }
            }
            validity.push(code);
        }
        drop(pending);
        drop(seen_ids);

        let block = Block::seal(number, prev_hash, candidates, validity);
        if let Some(store) = &mut self.store {
            store.append(&block)?;
        }
        self.apply(block);
        self.write_snapshot()?;
        Ok(self.blocks.last().expect("just pushed"))
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, number: u64) -> Option<&Block> {
        self.blocks.get(usize::try_from(number).ok()?)
    }

    /// Number of the latest block (block count − 1).
    pub fn height(&self) -> u64 {
        self.blocks.len() as u64 - 1
    }

    pub fn latest_hash(&self) -> Digest {
        self.blocks.last().expect("ledger has genesis").hash
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    pub fn is_persistent(&self) -> bool {
        self.store.is_some()
    }

    pub fn contains_tx(&self, tx_id: &str) -> bool {
        self.tx_locations.contains_key(tx_id)
    }

    pub fn transaction(&self, tx_id: &str) -> Option<TxLocation<'_>> {
        let &(block_num, tx_index) = self.tx_locations.get(tx_id)?;
        let block = &self.blocks[block_num as usize];
        Some(TxLocation {
            block_num,
            tx_index,
            transaction: &block.transactions[tx_index as usize],
            validity: block.validity[tx_index as usize],
        })
    }

    /// Committed writes to `key` by valid transactions, oldest first.
    pub fn history_for_key(&self, key: &StateKey) -> Vec<HistoryEntry> {
        let Some(positions) = self.history.get(key) else {
            return Vec::new();
        };
        positions
            .iter()
            .map(|&(block_num, tx_index)| {
                let tx = &self.blocks[block_num as usize].transactions[tx_index as usize];
                let write = tx
                    .rwset
                    .writes
                    .iter()
                    .find(|w| &w.key == key)
                    .expect("history index points at a writing transaction");
                HistoryEntry {
                    tx_id: tx.tx_id.clone(),
                    block_num,
                    tx_index,
                    timestamp: tx.timestamp,
                    value: write.value.clone(),
                }
            })
            .collect()
    }
}

fn check_genesis(genesis: &Block) -> Result<(), LedgerError> {
    if genesis.transactions.is_empty() {
        return Err(LedgerError::InvalidGenesis("genesis carries no configuration".into()));
    }
    validate_chain(std::slice::from_ref(genesis)).map_err(|f| LedgerError::InvalidGenesis(f.to_string()))
}
