use serde::{Deserialize, Serialize};

use super::ReadWriteSet;
use crate::codec::{Canonical, DecodeError, Decoder, Encoder};
use crate::crypto::{Digest, Hasher, Signature};
use crate::identity::Certificate;
use crate::time::Timestamp;

/// A peer's signature over a transaction's endorsement digest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Endorsement {
    pub endorser: Certificate,
    pub signature: Signature,
}

/// The invocation fields that, together with the creator and nonce,
/// determine a transaction id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProposalPayload<'a> {
    pub channel_id: &'a str,
    pub chaincode_id: &'a str,
    pub function: &'a str,
    pub args: &'a [String],
    pub timestamp: Timestamp,
}

impl ProposalPayload<'_> {
    pub fn encode(&self, enc: &mut Encoder) {
        enc.put_str(self.channel_id)
            .put_str(self.chaincode_id)
            .put_str(self.function)
            .put_strs(self.args)
            .put_u64(self.timestamp.0);
    }
}

/// `hex(H(creator certificate digest ‖ nonce ‖ proposal payload))`.
pub fn compute_tx_id(creator: &Certificate, nonce: &[u8], payload: &ProposalPayload<'_>) -> String {
    let mut enc = Encoder::new();
    enc.put_digest(&creator.digest()).put_bytes(nonce);
    payload.encode(&mut enc);
    let mut h = Hasher::new(b"ehr:txid:v1\0");
    h.update(enc.as_slice());
    h.finish().to_hex()
}

/// What an endorser signs: the transaction id bound to the digest of the
/// simulated read-write set.
pub fn endorsement_digest(tx_id: &str, rwset_digest: &Digest) -> Digest {
    let mut h = Hasher::new(b"ehr:endorsement:v1\0");
    h.update(&(tx_id.len() as u32).to_be_bytes())
        .update(tx_id.as_bytes())
        .update(rwset_digest.as_bytes());
    h.finish()
}

/// An endorsed, client-signed chaincode invocation as stored in a block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Transaction {
    pub tx_id: String,
    pub channel_id: String,
    pub creator: Certificate,
    pub chaincode_id: String,
    pub function: String,
    pub args: Vec<String>,
    pub nonce: Vec<u8>,
    pub timestamp: Timestamp,
    pub rwset: ReadWriteSet,
    pub endorsements: Vec<Endorsement>,
    pub client_signature: Signature,
}

impl Transaction {
    pub fn payload(&self) -> ProposalPayload<'_> {
        ProposalPayload {
            channel_id: &self.channel_id,
            chaincode_id: &self.chaincode_id,
            function: &self.function,
            args: &self.args,
            timestamp: self.timestamp,
        }
    }

    pub fn expected_tx_id(&self) -> String {
        compute_tx_id(&self.creator, &self.nonce, &self.payload())
    }

    pub fn endorsement_digest(&self) -> Digest {
        endorsement_digest(&self.tx_id, &self.rwset.digest())
    }

    fn encode_unsigned(&self, enc: &mut Encoder) {
        enc.put_str(&self.tx_id).put_str(&self.channel_id);
        self.creator.encode(enc);
        enc.put_str(&self.chaincode_id)
            .put_str(&self.function)
            .put_strs(&self.args)
            .put_bytes(&self.nonce)
            .put_u64(self.timestamp.0);
        self.rwset.encode(enc);
        enc.put_len(self.endorsements.len());
        for e in &self.endorsements {
            e.endorser.encode(enc);
            enc.put_signature(&e.signature);
        }
    }

    /// Bytes covered by the client signature: every field except the
    /// signature itself.
    pub fn signing_bytes(&self) -> Vec<u8> {
        let mut enc = Encoder::with_domain(b"ehr:transaction:v1\0");
        self.encode_unsigned(&mut enc);
        enc.into_bytes()
    }

    pub fn verify_client_signature(&self) -> bool {
        self.creator.public_key.verify(&self.signing_bytes(), &self.client_signature)
    }
}

impl Canonical for Transaction {
    fn encode(&self, enc: &mut Encoder) {
        self.encode_unsigned(enc);
        enc.put_signature(&self.client_signature);
    }

    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        let tx_id = dec.string("tx id")?;
        let channel_id = dec.string("channel id")?;
        let creator = Certificate::decode(dec)?;
        let chaincode_id = dec.string("chaincode id")?;
        let function = dec.string("function")?;
        let args = dec.strings("args")?;
        let nonce = dec.bytes()?.to_vec();
        let timestamp = Timestamp(dec.u64()?);
        let rwset = ReadWriteSet::decode(dec)?;
        let n = dec.count()?;
        let mut endorsements = Vec::with_capacity(n);
        for _ in 0..n {
            endorsements.push(Endorsement {
                endorser: Certificate::decode(dec)?,
                signature: dec.signature()?,
            });
        }
        Ok(Transaction {
            tx_id,
            channel_id,
            creator,
            chaincode_id,
            function,
            args,
            nonce,
            timestamp,
            rwset,
            endorsements,
            client_signature: dec.signature()?,
        })
    }
}
