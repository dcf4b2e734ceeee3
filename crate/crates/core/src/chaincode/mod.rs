//! Chaincode execution.
//!
//! A [`Chaincode`] is a deterministic function of the caller identity, the
//! invocation arguments, the transaction timestamp and a read-only world
//! state snapshot. [`simulate`] runs one against a snapshot and captures its
//! reads and writes into a [`ReadWriteSet`]; nothing is mutated until the
//! ledger commits that set.

pub mod ehr;
mod lifecycle;
mod noop;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use serde_json::Value;
use thiserror::Error;

pub use lifecycle::{Lifecycle, LIFECYCLE_ID};
pub use noop::{NoopChaincode, NOOP_ID};

use crate::identity::Identity;
use crate::ledger::{query, Document, KvRead, KvWrite, ReadWriteSet, Selector, StateKey, Version, WorldState};
use crate::time::Timestamp;

/// Structured error codes shared by every contract.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ErrorCode {
    AccessDenied,
    NotFound,
    AlreadyExists,
    AuthFailed,
    Validation,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::AccessDenied => "access-denied",
            ErrorCode::NotFound => "not-found",
            ErrorCode::AlreadyExists => "already-exists",
            ErrorCode::AuthFailed => "auth-failed",
            ErrorCode::Validation => "validation",
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{code}: {message}")]
pub struct ChaincodeError {
    pub code: ErrorCode,
    pub message: String,
}

impl ChaincodeError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        ChaincodeError {
            code,
            message: message.into(),
        }
    }

    pub fn access_denied(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::AccessDenied, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::NotFound, message)
    }

    pub fn already_exists(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::AlreadyExists, message)
    }

    pub fn auth_failed(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::AuthFailed, message)
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::Validation, message)
    }
}

pub trait Chaincode: Send + Sync {
    fn id(&self) -> &str;
    fn invoke(&self, ctx: &mut TxContext<'_>) -> Result<Value, ChaincodeError>;
}

/// Inputs of one invocation.
#[derive(Clone, Copy, Debug)]
pub struct InvocationInput<'a> {
    pub caller: &'a Identity,
    pub tx_id: &'a str,
    pub timestamp: Timestamp,
    pub function: &'a str,
    pub args: &'a [String],
    /// Secret arguments (passwords). Available to the chaincode but never
    /// recorded in the transaction.
    pub transient: &'a BTreeMap<String, String>,
}

/// What a chaincode sees while executing.
///
/// Reads return committed state only: a key written earlier in the same
/// invocation still reads as its committed value.
pub struct TxContext<'a> {
    input: InvocationInput<'a>,
    namespace: &'a str,
    state: &'a WorldState,
    reads: BTreeMap<String, Option<Version>>,
    writes: BTreeMap<String, Option<Document>>,
}

impl<'a> TxContext<'a> {
    pub fn caller(&self) -> &Identity {
        self.input.caller
    }

    pub fn tx_id(&self) -> &str {
        self.input.tx_id
    }

    pub fn timestamp(&self) -> Timestamp {
        self.input.timestamp
    }

    pub fn function(&self) -> &str {
        self.input.function
    }

    pub fn args(&self) -> &[String] {
        self.input.args
    }

    pub fn transient(&self, name: &str) -> Option<&str> {
        self.input.transient.get(name).map(String::as_str)
    }

    pub fn namespace(&self) -> &str {
        self.namespace
    }

    /// Reads a key of this chaincode's namespace, recording the observed
    /// version (or absence) in the read set.
    pub fn get_state(&mut self, key: &str) -> Option<Document> {
        let entry = self.state.get(&StateKey::new(self.namespace, key));
        self.reads
            .entry(key.to_owned())
            .or_insert_with(|| entry.map(|e| e.version));
        entry.map(|e| e.value.clone())
    }

    /// Reads a key of another namespace without recording it. Used for
    /// deployment metadata only.
    pub fn peek_foreign(&self, namespace: &str, key: &str) -> Option<&Document> {
        self.state.get(&StateKey::new(namespace, key)).map(|e| &e.value)
    }

    pub fn put_state(&mut self, key: &str, value: Document) -> Result<(), ChaincodeError> {
        if key.is_empty() {
            return Err(ChaincodeError::validation("empty state key"));
        }
        value.check_size().map_err(|e| ChaincodeError::validation(e.to_string()))?;
        self.writes.insert(key.to_owned(), Some(value));
        Ok(())
    }

    pub fn del_state(&mut self, key: &str) {
        self.writes.insert(key.to_owned(), None);
    }

    /// Rich query over this namespace. Results are not added to the read
    /// set, so they are not re-validated at commit.
    pub fn query(&self, selector: &Selector) -> Vec<(String, Document)> {
        query::rich_query(self.state, self.namespace, selector)
            .into_iter()
            .map(|(k, d)| (k.key, d))
            .collect()
    }

    fn into_rwset(self) -> ReadWriteSet {
        let ns = self.namespace;
        ReadWriteSet {
            reads: self
                .reads
                .into_iter()
                .map(|(k, version)| KvRead {
                    key: StateKey::new(ns, k),
                    version,
                })
                .collect(),
            writes: self
                .writes
                .into_iter()
                .map(|(k, value)| KvWrite {
                    key: StateKey::new(ns, k),
                    value,
                })
                .collect(),
        }
    }
}

/// Outcome of running a chaincode against a snapshot. The read-write set is
/// kept even when the invocation fails so that callers can inspect what a
/// rejected invocation would have written.
#[derive(Clone, Debug, PartialEq)]
pub struct Simulation {
    pub rwset: ReadWriteSet,
    pub result: Result<Value, ChaincodeError>,
}

pub fn simulate(chaincode: &dyn Chaincode, input: InvocationInput<'_>, state: &WorldState) -> Simulation {
    let mut ctx = TxContext {
        input,
        namespace: chaincode.id(),
        state,
        reads: BTreeMap::new(),
        writes: BTreeMap::new(),
    };
    let result = chaincode.invoke(&mut ctx);
    let rwset = ctx.into_rwset();
    Simulation { rwset, result }
}

/// Installed chaincodes by id.
#[derive(Clone, Default)]
pub struct ChaincodeRegistry {
    installed: HashMap<String, Arc<dyn Chaincode>>,
}

impl ChaincodeRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// The lifecycle system chaincode, the EHR chaincode and the no-op test
    /// chaincode.
    pub fn with_builtins() -> Self {
        let mut reg = Self::new();
        reg.install(Arc::new(Lifecycle));
        reg.install(Arc::new(ehr::EhrChaincode));
        reg.install(Arc::new(NoopChaincode));
        reg
    }

    pub fn install(&mut self, chaincode: Arc<dyn Chaincode>) {
        self.installed.insert(chaincode.id().to_owned(), chaincode);
    }

    pub fn get(&self, id: &str) -> Option<&Arc<dyn Chaincode>> {
        self.installed.get(id)
    }
}

impl fmt::Debug for ChaincodeRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut ids: Vec<_> = self.installed.keys().collect();
        ids.sort();
        f.debug_struct("ChaincodeRegistry").field("installed", &ids).finish()
    }
}

pub(crate) fn arg<'c>(ctx: &'c TxContext<'_>, index: usize, name: &str) -> Result<&'c str, ChaincodeError> {
    ctx.args()
        .get(index)
        .map(String::as_str)
        .ok_or_else(|| ChaincodeError::validation(format!("missing argument {index} ({name})")))
}
