//! Execute-order-validate transaction flow.
//!
//! A client signs a [`Proposal`]; endorsing peers simulate it against their
//! world state and sign the resulting read-write set; the client assembles a
//! [`Transaction`](crate::ledger::Transaction) and hands it to the orderer,
//! which cuts blocks; the committer checks the endorsement policy and MVCC
//! read versions and appends the block.

mod channel;
mod endorser;
mod orderer;
mod policy;
mod proposal;

pub use channel::{assemble, genesis_block, Channel, ChannelConfig, CommitReceipt, SubmitError, Submitted, CONFIG_NAMESPACE};
pub use endorser::{endorse, simulate_proposal, EndorseError, EndorsementEnv, Peer, ProposalResponse};
pub use orderer::{Backpressure, BatchConfig, PendingReceipt};
pub use policy::{check_endorsement_policy, EndorsementPolicy, PolicyError, PolicyFailure};
pub use proposal::{Invocation, Proposal};
