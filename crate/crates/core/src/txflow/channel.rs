use std::sync::Arc;

use parking_lot::{Mutex, RwLock, RwLockReadGuard};
use rand::RngCore;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::endorser::{simulate_proposal, EndorseError, EndorsementEnv, Peer, ProposalResponse};
use super::orderer::{BatchConfig, Orderer, PendingReceipt};
use super::policy::{check_endorsement_policy, EndorsementPolicy};
use super::{Invocation, Proposal};
use crate::chaincode::{ChaincodeError, ChaincodeRegistry};
use crate::crypto::{Digest, Signature};
use crate::identity::{Membership, OrgId, SigningIdentity};
use crate::ledger::{Block, Document, KvWrite, Ledger, LedgerError, ReadWriteSet, StateKey, Transaction, ValidationCode};
use crate::time::{Clock, Timestamp};

/// Namespace holding channel configuration written at genesis.
pub const CONFIG_NAMESPACE: &str = "_config";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ChannelConfig {
    pub channel_id: String,
    pub members: Vec<OrgId>,
    pub endorsement_policy: EndorsementPolicy,
    #[serde(default)]
    pub batch: BatchConfig,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CommitReceipt {
    pub tx_id: String,
    pub block_num: u64,
    pub validity: ValidationCode,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SubmitError {
    #[error("endorsement failed: {0}")]
    Endorsement(EndorseError),
    #[error("endorsing peers produced different results")]
    EndorsementMismatch,
    #[error("no peer available for organisation {0}")]
    NoEndorsers(OrgId),
    #[error("transaction rejected by orderer: {0}")]
    InvalidTransaction(String),
    #[error("ordering queue is full")]
    QueueFull,
    #[error("channel is shut down")]
    Shutdown,
    #[error("commit failed: {0}")]
    Commit(String),
}

impl SubmitError {
    /// The chaincode error behind an endorsement rejection, if any.
    pub fn chaincode_error(&self) -> Option<&ChaincodeError> {
        match self {
            SubmitError::Endorsement(EndorseError::Chaincode(e)) => Some(e),
            _ => None,
        }
    }
}

impl From<EndorseError> for SubmitError {
    fn from(e: EndorseError) -> Self {
        SubmitError::Endorsement(e)
    }
}

/// Result of a committed invocation: the chaincode's return value and where
/// the transaction landed.
#[derive(Clone, Debug, PartialEq)]
pub struct Submitted {
    pub payload: Value,
    pub receipt: CommitReceipt,
}

struct Shared {
    config: ChannelConfig,
    membership: Arc<Membership>,
    chaincodes: Arc<ChaincodeRegistry>,
    peers: Vec<Peer>,
    ledger: RwLock<Ledger>,
}

impl Shared {
    /// Commit-time endorsement check: policy, client signature and creator
    /// membership.
    fn check(&self, tx: &Transaction) -> ValidationCode {
        let ok = tx.channel_id == self.config.channel_id
            && tx.verify_client_signature()
            && tx.expected_tx_id() == tx.tx_id
            && self.membership.validate(&tx.creator, tx.timestamp).is_ok()
            && check_endorsement_policy(tx, &self.config.endorsement_policy, &self.membership).is_ok();
        if ok {
            ValidationCode::Valid
        } else {
            ValidationCode::BadEndorsement
        }
    }

    fn commit(&self, txs: Vec<Transaction>) -> Result<Vec<CommitReceipt>, SubmitError> {
        let mut ledger = self.ledger.write();
        let block = ledger
            .append_block(txs, &|tx: &Transaction| self.check(tx))
            .map_err(|e| SubmitError::Commit(e.to_string()))?;
        log::debug!(
            "channel {}: committed block {} with {} transactions",
            self.config.channel_id,
            block.number,
            block.transactions.len()
        );
        Ok(block
            .entries()
            .map(|(_, tx, validity)| CommitReceipt {
                tx_id: tx.tx_id.clone(),
                block_num: block.number,
                validity,
            })
            .collect())
    }
}

/// A running channel: its peers, orderer and ledger.
pub struct Channel {
    shared: Arc<Shared>,
    orderer: Orderer,
    clock: Arc<dyn Clock>,
    nonces: Mutex<ChaCha20Rng>,
}

impl std::fmt::Debug for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Channel")
            .field("id", &self.shared.config.channel_id)
            .field("peers", &self.shared.peers.len())
            .finish()
    }
}

impl Channel {
    /// Starts the ordering service over `ledger`.
    pub fn start(
        config: ChannelConfig,
        membership: Arc<Membership>,
        chaincodes: Arc<ChaincodeRegistry>,
        peers: Vec<Peer>,
        ledger: Ledger,
        clock: Arc<dyn Clock>,
        nonces: ChaCha20Rng,
    ) -> Self {
        let batch = config.batch;
        let shared = Arc::new(Shared {
            config,
            membership,
            chaincodes,
            peers,
            ledger: RwLock::new(ledger),
        });
        let committer = {
            let shared = Arc::clone(&shared);
            Box::new(move |txs| shared.commit(txs))
        };
        Channel {
            orderer: Orderer::start(batch, committer),
            shared,
            clock,
            nonces: Mutex::new(nonces),
        }
    }

    pub fn id(&self) -> &str {
        &self.shared.config.channel_id
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.shared.config
    }

    /// Batch parameters currently in force.
    pub fn batch(&self) -> BatchConfig {
        self.orderer.config()
    }

    /// Changes block-cutting parameters for subsequent blocks.
    pub fn set_batch(&self, batch: BatchConfig) {
        self.orderer.reconfigure(batch);
    }

    pub fn membership(&self) -> &Arc<Membership> {
        &self.shared.membership
    }

    pub fn peers(&self) -> &[Peer] {
        &self.shared.peers
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    /// Read access to the ledger. Commits wait while the guard is held.
    pub fn ledger(&self) -> RwLockReadGuard<'_, Ledger> {
        self.shared.ledger.read()
    }

    /// Builds and signs a proposal stamped with the channel clock and a
    /// fresh nonce.
    pub fn propose(&self, signer: &SigningIdentity, invocation: Invocation) -> Proposal {
        let mut nonce = vec![0u8; 24];
        self.nonces.lock().fill_bytes(&mut nonce);
        let now = self.clock.now();
        Proposal::new(signer, self.id(), invocation, nonce, now)
    }

    /// Collects endorsements from one peer in each of the first `required`
    /// policy organisations. All responses must agree.
    pub fn endorse(&self, proposal: &Proposal) -> Result<Vec<ProposalResponse>, SubmitError> {
        let ledger = self.shared.ledger.read();
        let env = self.env(ledger.state());
        let policy = &self.shared.config.endorsement_policy;
        let mut responses: Vec<ProposalResponse> = Vec::with_capacity(policy.required());
        for org in policy.orgs().iter().take(policy.required()) {
            let peer = self
                .shared
                .peers
                .iter()
                .find(|p| &p.identity().certificate().org == org)
                .ok_or_else(|| SubmitError::NoEndorsers(org.clone()))?;
            let response = peer.endorse(proposal, env)?;
            if let Some(first) = responses.first() {
                if first.rwset != response.rwset || first.payload != response.payload {
                    return Err(SubmitError::EndorsementMismatch);
                }
            }
            responses.push(response);
        }
        Ok(responses)
    }

    /// Runs a proposal without endorsing or ordering it. Used for queries.
    pub fn evaluate(&self, proposal: &Proposal) -> Result<Value, SubmitError> {
        let ledger = self.shared.ledger.read();
        let sim = simulate_proposal(proposal, self.env(ledger.state()))?;
        sim.result.map_err(|e| SubmitError::Endorsement(EndorseError::Chaincode(e)))
    }

    /// Convenience wrapper: propose and evaluate.
    pub fn query(&self, signer: &SigningIdentity, invocation: Invocation) -> Result<Value, SubmitError> {
        self.evaluate(&self.propose(signer, invocation))
    }

    /// Queues pre-assembled transactions contiguously after admission
    /// checks. Any failed check rejects the whole batch.
    pub fn order(&self, txs: Vec<Transaction>) -> Result<Vec<PendingReceipt>, SubmitError> {
        for tx in &txs {
            self.admit(tx)?;
        }
        self.orderer.enqueue(txs)
    }

    /// Endorses, assembles and queues `proposal`, returning the endorsed
    /// payload and a handle on the commit.
    pub fn submit_async(
        &self,
        signer: &SigningIdentity,
        proposal: &Proposal,
    ) -> Result<(Value, PendingReceipt), SubmitError> {
        let responses = self.endorse(proposal)?;
        let payload = responses[0].payload.clone();
        let tx = assemble(signer, proposal, responses);
        let receipt = self.order(vec![tx])?.pop().expect("one receipt per transaction");
        Ok((payload, receipt))
    }

    /// Full submit path; blocks until the transaction is committed.
    pub fn submit(&self, signer: &SigningIdentity, invocation: Invocation) -> Result<Submitted, SubmitError> {
        let proposal = self.propose(signer, invocation);
        let (payload, pending) = self.submit_async(signer, &proposal)?;
        let receipt = pending.wait()?;
        Ok(Submitted { payload, receipt })
    }

    fn env<'a>(&'a self, state: &'a crate::ledger::WorldState) -> EndorsementEnv<'a> {
        EndorsementEnv {
            channel_id: &self.shared.config.channel_id,
            membership: &self.shared.membership,
            chaincodes: &self.shared.chaincodes,
            state,
        }
    }

    fn admit(&self, tx: &Transaction) -> Result<(), SubmitError> {
        let reject = |why: &str| Err(SubmitError::InvalidTransaction(format!("{}: {why}", tx.tx_id)));
        if tx.channel_id != self.shared.config.channel_id {
            return reject("wrong channel");
        }
        if tx.expected_tx_id() != tx.tx_id {
            return reject("transaction id does not match its contents");
        }
        if !tx.verify_client_signature() {
            return reject("bad client signature");
        }
        if let Err(e) = self.shared.membership.validate(&tx.creator, tx.timestamp) {
            return reject(&e.to_string());
        }
        Ok(())
    }
}

/// Builds the client-signed transaction from a proposal and its
/// endorsements. Every response must carry the same read-write set.
pub fn assemble(signer: &SigningIdentity, proposal: &Proposal, responses: Vec<ProposalResponse>) -> Transaction {
    let rwset = responses.first().map(|r| r.rwset.clone()).unwrap_or_default();
    let mut tx = Transaction {
        tx_id: proposal.tx_id(),
        channel_id: proposal.channel_id.clone(),
        creator: proposal.creator.clone(),
        chaincode_id: proposal.chaincode_id.clone(),
        function: proposal.function.clone(),
        args: proposal.args.clone(),
        nonce: proposal.nonce.clone(),
        timestamp: proposal.timestamp,
        rwset,
        endorsements: responses.into_iter().map(|r| r.endorsement).collect(),
        client_signature: Signature::EMPTY,
    };
    tx.client_signature = signer.sign(&tx.signing_bytes());
    tx
}

/// The channel's genesis block: one configuration transaction signed by the
/// network admin that writes the channel configuration. Chaincodes are
/// deployed afterwards through ordinary lifecycle transactions.
pub fn genesis_block(
    config: &ChannelConfig,
    admin: &SigningIdentity,
    timestamp: Timestamp,
    nonce: Vec<u8>,
) -> Result<Block, LedgerError> {
    let config_doc = Document::from_serializable(config).expect("channel config serializes to an object");
    let invocation = Invocation::new(CONFIG_NAMESPACE, "genesis").arg(&config.channel_id);
    let proposal = Proposal::new(admin, &config.channel_id, invocation, nonce, timestamp);
    let mut tx = assemble(admin, &proposal, Vec::new());
    tx.rwset = ReadWriteSet {
        reads: Vec::new(),
        writes: vec![KvWrite {
            key: StateKey::new(CONFIG_NAMESPACE, &config.channel_id),
            value: Some(config_doc),
        }],
    };
    tx.client_signature = admin.sign(&tx.signing_bytes());
    let block = Block::seal(0, Digest::ZERO, vec![tx], vec![ValidationCode::Valid]);
    Ledger::new(block.clone())?;
    Ok(block)
}
