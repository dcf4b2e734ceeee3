//! Read-only chain introspection.
//!
//! Block and transaction views list keys, creators and validity but never
//! arguments or written values: those may carry personal or medical data.
//! Record history applies the same role redaction as the chaincode.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::chaincode::ehr::{PatientRecord, EHR_ID, PATIENT_DOC_TYPE};
use crate::crypto::Digest;
use crate::identity::{Identity, Role};
use crate::ledger::{Block, Ledger, StateKey, Transaction, ValidationCode};
use crate::time::Timestamp;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExplorerError {
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Forbidden(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ChainInfo {
    pub height: u64,
    pub latest_hash: Digest,
    pub total_tx: u64,
    pub valid_tx: u64,
    pub invalid_tx: u64,
    pub per_chaincode: BTreeMap<String, u64>,
}

pub fn chain_info(ledger: &Ledger) -> ChainInfo {
    let mut info = ChainInfo {
        height: ledger.height(),
        latest_hash: ledger.latest_hash(),
        total_tx: 0,
        valid_tx: 0,
        invalid_tx: 0,
        per_chaincode: BTreeMap::new(),
    };
    for block in ledger.blocks() {
        for (_, tx, code) in block.entries() {
            info.total_tx += 1;
            if code.is_valid() {
                info.valid_tx += 1;
            } else {
                info.invalid_tx += 1;
            }
            *info.per_chaincode.entry(tx.chaincode_id.clone()).or_default() += 1;
        }
    }
    info
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TxSummary {
    pub tx_id: String,
    pub block_num: u64,
    pub tx_index: u32,
    pub creator: String,
    pub creator_org: String,
    pub creator_role: Role,
    pub chaincode_id: String,
    pub function: String,
    pub timestamp: Timestamp,
    pub validity: ValidationCode,
    pub endorsers: Vec<String>,
    pub reads: Vec<String>,
    pub writes: Vec<String>,
}

impl TxSummary {
    fn new(block_num: u64, tx_index: u32, tx: &Transaction, validity: ValidationCode) -> Self {
        TxSummary {
            tx_id: tx.tx_id.clone(),
            block_num,
            tx_index,
            creator: tx.creator.subject_id.clone(),
            creator_org: tx.creator.org.to_string(),
            creator_role: tx.creator.role,
            chaincode_id: tx.chaincode_id.clone(),
            function: tx.function.clone(),
            timestamp: tx.timestamp,
            validity,
            endorsers: tx
                .endorsements
                .iter()
                .map(|e| format!("{}@{}", e.endorser.subject_id, e.endorser.org))
                .collect(),
            reads: tx.rwset.reads.iter().map(|r| r.key.to_string()).collect(),
            writes: tx.rwset.writes.iter().map(|w| w.key.to_string()).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BlockView {
    pub number: u64,
    pub hash: Digest,
    pub prev_hash: Digest,
    pub data_hash: Digest,
    pub transactions: Vec<TxSummary>,
}

impl BlockView {
    fn new(block: &Block) -> Self {
        BlockView {
            number: block.number,
            hash: block.hash,
            prev_hash: block.prev_hash,
            data_hash: block.data_hash,
            transactions: block
                .entries()
                .map(|(i, tx, code)| TxSummary::new(block.number, i, tx, code))
                .collect(),
        }
    }
}

fn require_admin(caller: &Identity) -> Result<(), ExplorerError> {
    if caller.role == Role::Admin {
        Ok(())
    } else {
        Err(ExplorerError::Forbidden("block and transaction views are restricted to admins".into()))
    }
}

pub fn block(ledger: &Ledger, number: u64, caller: &Identity) -> Result<BlockView, ExplorerError> {
    require_admin(caller)?;
    ledger
        .block(number)
        .map(BlockView::new)
        .ok_or_else(|| ExplorerError::NotFound(format!("block {number} does not exist")))
}

pub fn transaction(ledger: &Ledger, tx_id: &str, caller: &Identity) -> Result<TxSummary, ExplorerError> {
    require_admin(caller)?;
    ledger
        .transaction(tx_id)
        .map(|loc| TxSummary::new(loc.block_num, loc.tx_index, loc.transaction, loc.validity))
        .ok_or_else(|| ExplorerError::NotFound(format!("transaction {tx_id} does not exist")))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Create,
    Update,
    Delete,
}

/// One committed write to a patient record, redacted for the caller.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct HistoryEvent {
    pub tx_id: String,
    pub block_num: u64,
    pub tx_index: u32,
    pub timestamp: Timestamp,
    pub actor: String,
    pub function: String,
    pub kind: EventKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record: Option<Value>,
}

/// History of one patient record as the caller may see it:
///
/// - the patient: every event, record without credentials;
/// - an admin: create and delete events, names only;
/// - a doctor currently granted access: events that changed the medical
///   section, as the doctor view.
pub fn record_history(ledger: &Ledger, patient_id: &str, caller: &Identity) -> Result<Vec<HistoryEvent>, ExplorerError> {
    let key = StateKey::new(EHR_ID, patient_id);
    let entries = ledger.history_for_key(&key);
    let not_found = || ExplorerError::NotFound(format!("no history for patient {patient_id}"));
    let forbidden = || ExplorerError::Forbidden(format!("{} may not view the history of {patient_id}", caller.subject_id));

    let parsed: Vec<Option<PatientRecord>> = entries
        .iter()
        .map(|e| {
            e.value
                .as_ref()
                .and_then(|d| d.to_typed::<PatientRecord>().ok())
                .filter(|r| r.doc_type == PATIENT_DOC_TYPE)
        })
        .collect();
    if entries.is_empty() || entries.iter().zip(&parsed).any(|(e, p)| e.value.is_some() && p.is_none()) {
        return Err(not_found());
    }

    let current = ledger
        .state()
        .get(&key)
        .and_then(|v| v.value.to_typed::<PatientRecord>().ok());
    match caller.role {
        Role::Patient if caller.subject_id == patient_id => {}
        Role::Admin => {}
        Role::Doctor => match &current {
            None => return Err(not_found()),
            Some(r) if r.permission_granted.contains(&caller.subject_id) => {}
            Some(_) => return Err(forbidden()),
        },
        _ => return Err(forbidden()),
    }

    let mut events = Vec::new();
    let mut previous: Option<&PatientRecord> = None;
    for (entry, record) in entries.iter().zip(&parsed) {
        let kind = match (previous, record) {
            (_, None) => EventKind::Delete,
            (None, Some(_)) => EventKind::Create,
            (Some(_), Some(_)) => EventKind::Update,
        };
        let (tx, _) = locate(ledger, entry.block_num, entry.tx_index);
        let shown = match caller.role {
            Role::Patient => Some(record.as_ref().map(|r| to_value(&r.full_view()))),
            Role::Admin => match kind {
                EventKind::Update => None,
                _ => Some(record.as_ref().map(|r| to_value(&r.admin_view()))),
            },
            Role::Doctor => {
                let changed = match (previous, record) {
                    (Some(p), Some(r)) => p.medical != r.medical,
                    (None, Some(r)) => r.medical != Default::default(),
                    _ => false,
                };
                changed.then(|| record.as_ref().map(|r| to_value(&r.doctor_view())))
            }
            Role::Peer => None,
        };
        if let Some(shown) = shown {
            events.push(HistoryEvent {
                tx_id: entry.tx_id.clone(),
                block_num: entry.block_num,
                tx_index: entry.tx_index,
                timestamp: entry.timestamp,
                actor: tx.creator.subject_id.clone(),
                function: tx.function.clone(),
                kind,
                record: shown,
            });
        }
        previous = record.as_ref();
    }
    Ok(events)
}

fn locate(ledger: &Ledger, block_num: u64, tx_index: u32) -> (&Transaction, ValidationCode) {
    let block = ledger.block(block_num).expect("history points at an existing block");
    let i = tx_index as usize;
    (&block.transactions[i], block.validity[i])
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("view serializes")
}
