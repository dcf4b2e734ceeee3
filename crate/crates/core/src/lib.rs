//! Core of a permissioned electronic-health-record ledger.
//!
//! The crate is organised along the transaction lifecycle:
//!
//! - [`identity`]: certificate authority, membership validation and roles.
//! - [`ledger`]: hash-chained block store, versioned world state, history
//!   and rich queries.
//! - [`txflow`]: proposals, endorsement, endorsement policies, ordering and
//!   MVCC commit.
//! - [`chaincode`]: the deterministic EHR contracts (admin, patient, doctor).
//! - [`explorer`]: read-only chain introspection with role redaction.
//! - [`netconfig`]: declarative network configuration, bootstrap and
//!   enrollment.

pub mod chaincode;
pub mod codec;
pub mod crypto;
pub mod explorer;
pub mod identity;
pub mod ledger;
pub mod netconfig;
pub mod time;
pub mod txflow;

pub use chaincode::{Chaincode, ChaincodeError, ErrorCode};
pub use identity::{Certificate, Identity, OrgId, Role, SigningIdentity};
pub use ledger::{Block, Document, Ledger, StateKey, Transaction, ValidationCode, Version, WorldState};
pub use netconfig::{Network, NetworkConfig};
pub use time::{Clock, ManualClock, SystemClock, Timestamp};
pub use txflow::{Channel, CommitReceipt, EndorsementPolicy, Invocation, SubmitError};
