use std::collections::BTreeMap;

use crate::codec::{Canonical, Encoder};
use crate::crypto::Signature;
use crate::identity::{Certificate, SigningIdentity};
use crate::ledger::{compute_tx_id, ProposalPayload};
use crate::time::Timestamp;

/// A chaincode call as the client describes it.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Invocation {
    pub chaincode_id: String,
    pub function: String,
    pub args: Vec<String>,
    pub transient: BTreeMap<String, String>,
}

impl Invocation {
    pub fn new(chaincode_id: impl Into<String>, function: impl Into<String>) -> Self {
        Invocation {
            chaincode_id: chaincode_id.into(),
            function: function.into(),
            ..Default::default()
        }
    }

    pub fn arg(mut self, a: impl Into<String>) -> Self {
        self.args.push(a.into());
        self
    }

    pub fn args<I, S>(mut self, args: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.args.extend(args.into_iter().map(Into::into));
        self
    }

    pub fn transient(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.transient.insert(name.into(), value.into());
        self
    }
}

/// A signed request to simulate an invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Proposal {
    pub channel_id: String,
    pub chaincode_id: String,
    pub function: String,
    pub args: Vec<String>,
    pub transient: BTreeMap<String, String>,
    pub creator: Certificate,
    pub nonce: Vec<u8>,
    pub timestamp: Timestamp,
    pub signature: Signature,
}

impl Proposal {
    pub fn new(
        signer: &SigningIdentity,
        channel_id: &str,
        invocation: Invocation,
        nonce: Vec<u8>,
        timestamp: Timestamp,
    ) -> Self {
        let mut p = Proposal {
            channel_id: channel_id.to_owned(),
            chaincode_id: invocation.chaincode_id,
            function: invocation.function,
            args: invocation.args,
            transient: invocation.transient,
            creator: signer.certificate().clone(),
            nonce,
            timestamp,
            signature: Signature::EMPTY,
        };
        p.signature = signer.sign(&p.signing_bytes());
        p
    }

    pub fn payload(&self) -> ProposalPayload<'_> {
        ProposalPayload {
            channel_id: &self.channel_id,
            chaincode_id: &self.chaincode_id,
            function: &self.function,
            args: &self.args,
            timestamp: self.timestamp,
        }
    }

    /// Covers every field, including the transient map.
    pub fn signing_bytes(&self) -> Vec<u8> {
        let mut enc = Encoder::with_domain(b"ehr:proposal:v1\0");
        self.payload().encode(&mut enc);
        enc.put_len(self.transient.len());
        for (k, v) in &self.transient {
            enc.put_str(k).put_str(v);
        }
        self.creator.encode(&mut enc);
        enc.put_bytes(&self.nonce);
        enc.into_bytes()
    }

    pub fn verify_signature(&self) -> bool {
        self.creator.public_key.verify(&self.signing_bytes(), &self.signature)
    }

    pub fn tx_id(&self) -> String {
        compute_tx_id(&self.creator, &self.nonce, &self.payload())
    }
}
