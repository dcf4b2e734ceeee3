//! The channel ledger: hash-chained blocks, versioned world state, per-key
//! history and rich queries.

mod block;
mod chain;
mod document;
pub mod query;
mod rwset;
mod state;
pub mod store;
mod transaction;

pub use block::{compute_block_hash, compute_data_hash, Block, ValidationCode};
pub use chain::{
    validate_chain, AcceptEndorsements, ChainFault, EndorsementCheck, FaultKind, HistoryEntry, Ledger, LedgerError,
    SnapshotStatus, TxLocation,
};
pub use document::{Document, DocumentError, MAX_DOCUMENT_BYTES};
pub use query::{rich_query, Selector, SelectorError};
pub use rwset::{KvRead, KvWrite, ReadWriteSet, StateKey, Version};
pub use state::{VersionedDocument, WorldState};
pub use transaction::{compute_tx_id, endorsement_digest, Endorsement, ProposalPayload, Transaction};
