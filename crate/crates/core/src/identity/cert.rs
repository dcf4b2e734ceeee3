use serde::{Deserialize, Serialize};

use super::{OrgId, Role};
use crate::codec::{Canonical, DecodeError, Decoder, Encoder};
use crate::crypto::{Digest, PublicKey, Signature};
use crate::time::Timestamp;

const CERT_DOMAIN: &[u8] = b"ehr:certificate:v1\0";

/// A CA-signed binding of subject, organisation and role to a public key.
///
/// The signature covers the canonical encoding of every other field, in
/// declaration order, behind a domain-separation prefix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Certificate {
    pub subject_id: String,
    pub org: OrgId,
    pub role: Role,
    pub public_key: PublicKey,
    pub issuer_id: String,
    pub serial: u64,
    pub issued_at: Timestamp,
    pub not_after: Timestamp,
    pub signature: Signature,
}

impl Certificate {
    fn encode_unsigned(&self, enc: &mut Encoder) {
        enc.put_str(&self.subject_id)
            .put_str(self.org.as_str())
            .put_u8(self.role.tag())
            .put_public_key(&self.public_key)
            .put_str(&self.issuer_id)
            .put_u64(self.serial)
            .put_u64(self.issued_at.0)
            .put_u64(self.not_after.0);
    }

    /// The bytes the issuer signs.
    pub fn to_be_signed(&self) -> Vec<u8> {
        let mut enc = Encoder::with_domain(CERT_DOMAIN);
        self.encode_unsigned(&mut enc);
        enc.into_bytes()
    }

    pub fn verify_signature(&self, issuer_key: &PublicKey) -> bool {
        issuer_key.verify(&self.to_be_signed(), &self.signature)
    }

    pub fn is_self_signed(&self) -> bool {
        self.subject_id == self.issuer_id && self.verify_signature(&self.public_key)
    }

    pub fn digest(&self) -> Digest {
        Digest::of(&self.to_canonical_bytes())
    }

    /// Human-readable rendering for the CLI.
    pub fn to_pretty_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }
}

impl Canonical for Certificate {
    fn encode(&self, enc: &mut Encoder) {
        self.encode_unsigned(enc);
        enc.put_signature(&self.signature);
    }

    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        let subject_id = dec.string("subject id")?;
        let org = OrgId::new(dec.string("org")?).map_err(|e| DecodeError::Invalid {
            what: "org",
            reason: e.to_string(),
        })?;
        let tag = dec.u8()?;
        let role = Role::from_tag(tag).ok_or(DecodeError::InvalidTag { what: "role", tag })?;
        Ok(Certificate {
            subject_id,
            org,
            role,
            public_key: dec.public_key()?,
            issuer_id: dec.string("issuer id")?,
            serial: dec.u64()?,
            issued_at: Timestamp(dec.u64()?),
            not_after: Timestamp(dec.u64()?),
            signature: dec.signature()?,
        })
    }
}
