//! Identities, certificates and membership.
//!
//! A [`CertificateAuthority`] binds a subject, organisation and [`Role`] to
//! an Ed25519 key. Each organisation's [`MspConfig`] decides which CAs it
//! trusts and which roles it admits; [`verify_certificate`] turns a
//! certificate into an [`Identity`] or a typed rejection.

mod ca;
mod cert;
mod msp;

use std::fmt;
use std::str::FromStr;

use ed25519_dalek::SigningKey;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ca::{CaError, CaRecord, CertificateAuthority, DEFAULT_CERT_LIFETIME_MS};
pub use cert::Certificate;
pub use msp::{verify_certificate, Membership, MembershipError, MspConfig, RejectReason, TrustStore};

use crate::crypto::{self, PublicKey, Signature};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("organisation name must not be empty")]
pub struct EmptyOrgId;

/// Organisation name, e.g. `Org1` for the hospital and `Org2` for patients.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct OrgId(String);

impl OrgId {
    pub fn new(name: impl Into<String>) -> Result<Self, EmptyOrgId> {
        let name = name.into();
        if name.trim().is_empty() {
            return Err(EmptyOrgId);
        }
        Ok(OrgId(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for OrgId {
    type Error = EmptyOrgId;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        OrgId::new(s)
    }
}

impl From<OrgId> for String {
    fn from(o: OrgId) -> String {
        o.0
    }
}

impl fmt::Display for OrgId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// The single role bound into a certificate.
///
/// `Peer` identifies endorsing nodes; it has no access to any contract
/// method.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Admin,
    Doctor,
    Patient,
    Peer,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::Admin, Role::Doctor, Role::Patient, Role::Peer];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Admin => "admin",
            Role::Doctor => "doctor",
            Role::Patient => "patient",
            Role::Peer => "peer",
        }
    }

    pub(crate) fn tag(self) -> u8 {
        match self {
            Role::Admin => 1,
            Role::Doctor => 2,
            Role::Patient => 3,
            Role::Peer => 4,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Role> {
        Some(match tag {
            1 => Role::Admin,
            2 => Role::Doctor,
            3 => Role::Patient,
            4 => Role::Peer,
            _ => return None,
        })
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown role {0:?}")]
pub struct UnknownRole(pub String);

impl FromStr for Role {
    type Err = UnknownRole;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "admin" => Ok(Role::Admin),
            "doctor" => Ok(Role::Doctor),
            "patient" => Ok(Role::Patient),
            "peer" => Ok(Role::Peer),
            _ => Err(UnknownRole(s.to_owned())),
        }
    }
}

/// A verified identity, produced only by [`verify_certificate`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Identity {
    pub subject_id: String,
    pub org: OrgId,
    pub role: Role,
    pub issuer_id: String,
    pub serial: u64,
}

/// A certificate together with its private key, as held in a wallet.
#[derive(Clone)]
pub struct SigningIdentity {
    cert: Certificate,
    key: SigningKey,
}

impl SigningIdentity {
    /// Pairs a certificate with its key. Returns `None` if the key does not
    /// match the certificate's public key.
    pub fn new(cert: Certificate, key: SigningKey) -> Option<Self> {
        (PublicKey::from_signing_key(&key) == cert.public_key).then_some(SigningIdentity { cert, key })
    }

    pub fn certificate(&self) -> &Certificate {
        &self.cert
    }

    pub fn subject_id(&self) -> &str {
        &self.cert.subject_id
    }

    pub fn role(&self) -> Role {
        self.cert.role
    }

    pub fn sign(&self, message: &[u8]) -> Signature {
        crypto::sign(&self.key, message)
    }

    pub fn secret_bytes(&self) -> [u8; 32] {
        self.key.to_bytes()
    }
}

impl fmt::Debug for SigningIdentity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SigningIdentity")
            .field("subject_id", &self.cert.subject_id)
            .field("role", &self.cert.role)
            .finish_non_exhaustive()
    }
}
