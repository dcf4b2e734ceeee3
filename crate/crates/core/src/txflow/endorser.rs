use serde_json::Value;
use thiserror::Error;

use super::Proposal;
use crate::chaincode::{self, ChaincodeError, ChaincodeRegistry, InvocationInput, Simulation, LIFECYCLE_ID};
use crate::identity::{Membership, MembershipError, SigningIdentity};
use crate::ledger::{endorsement_digest, Endorsement, ReadWriteSet, StateKey, WorldState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EndorseError {
    #[error("proposal targets channel {got}, peer serves {expected}")]
    WrongChannel { expected: String, got: String },
    #[error("proposal signature does not verify")]
    BadProposalSignature,
    #[error("creator identity rejected: {0}")]
    Identity(MembershipError),
    #[error("chaincode {0} is not installed")]
    NotInstalled(String),
    #[error("chaincode {0} is not deployed on this channel")]
    NotDeployed(String),
    #[error(transparent)]
    Chaincode(ChaincodeError),
}

/// The world state, membership and chaincodes an endorser simulates
/// against.
#[derive(Clone, Copy)]
pub struct EndorsementEnv<'a> {
    pub channel_id: &'a str,
    pub membership: &'a Membership,
    pub chaincodes: &'a ChaincodeRegistry,
    pub state: &'a WorldState,
}

/// A peer's signed simulation result.
#[derive(Clone, Debug, PartialEq)]
pub struct ProposalResponse {
    pub tx_id: String,
    pub rwset: ReadWriteSet,
    pub payload: Value,
    pub endorsement: Endorsement,
}

/// An endorsing peer.
#[derive(Clone, Debug)]
pub struct Peer {
    pub name: String,
    signer: SigningIdentity,
}

impl Peer {
    pub fn new(name: impl Into<String>, signer: SigningIdentity) -> Self {
        Peer {
            name: name.into(),
            signer,
        }
    }

    pub fn identity(&self) -> &SigningIdentity {
        &self.signer
    }

    pub fn endorse(&self, proposal: &Proposal, env: EndorsementEnv<'_>) -> Result<ProposalResponse, EndorseError> {
        endorse(proposal, env, self)
    }
}

/// Checks the proposal and its creator, then runs the chaincode against the
/// snapshot. Nothing is written to state.
pub fn simulate_proposal(proposal: &Proposal, env: EndorsementEnv<'_>) -> Result<Simulation, EndorseError> {
    if proposal.channel_id != env.channel_id {
        return Err(EndorseError::WrongChannel {
            expected: env.channel_id.to_owned(),
            got: proposal.channel_id.clone(),
        });
    }
    if !proposal.verify_signature() {
        return Err(EndorseError::BadProposalSignature);
    }
    let caller = env
        .membership
        .validate(&proposal.creator, proposal.timestamp)
        .map_err(EndorseError::Identity)?;
    let chaincode = env
        .chaincodes
        .get(&proposal.chaincode_id)
        .ok_or_else(|| EndorseError::NotInstalled(proposal.chaincode_id.clone()))?;
    if proposal.chaincode_id != LIFECYCLE_ID
        && env.state.get(&StateKey::new(LIFECYCLE_ID, &proposal.chaincode_id)).is_none()
    {
        return Err(EndorseError::NotDeployed(proposal.chaincode_id.clone()));
    }
    let tx_id = proposal.tx_id();
    let input = InvocationInput {
        caller: &caller,
        tx_id: &tx_id,
        timestamp: proposal.timestamp,
        function: &proposal.function,
        args: &proposal.args,
        transient: &proposal.transient,
    };
    Ok(chaincode::simulate(chaincode.as_ref(), input, env.state))
}

/// Simulates `proposal` and signs the resulting read-write set. A chaincode
/// error is a rejection and produces no read-write set.
pub fn endorse(proposal: &Proposal, env: EndorsementEnv<'_>, peer: &Peer) -> Result<ProposalResponse, EndorseError> {
    let sim = simulate_proposal(proposal, env)?;
    let payload = sim.result.map_err(EndorseError::Chaincode)?;
    let tx_id = proposal.tx_id();
    let digest = endorsement_digest(&tx_id, &sim.rwset.digest());
    Ok(ProposalResponse {
        tx_id,
        rwset: sim.rwset,
        payload,
        endorsement: Endorsement {
            endorser: peer.signer.certificate().clone(),
            signature: peer.signer.sign(digest.as_bytes()),
        },
    })
}
