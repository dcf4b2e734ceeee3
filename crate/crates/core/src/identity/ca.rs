use std::collections::{BTreeMap, BTreeSet};

use ed25519_dalek::SigningKey;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Certificate, OrgId, Role};
use crate::crypto::{self, PublicKey, Signature};
use crate::time::Timestamp;

pub const DEFAULT_CERT_LIFETIME_MS: u64 = 365 * 24 * 60 * 60 * 1000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CaError {
    #[error("subject id must not be empty")]
    EmptySubject,
    #[error("public key is not a valid ed25519 point")]
    MalformedKey,
    #[error("{subject_id} already holds a live {role} certificate")]
    AlreadyIssued { subject_id: String, role: Role },
    #[error("serial {0} was not issued by this CA")]
    UnknownSerial(u64),
    #[error("corrupt CA record: {0}")]
    Corrupt(String),
}

/// Certificate authority state. Mutated by a single writer; the issued
/// certificates and revocation set are plain data.
pub struct CertificateAuthority {
    ca_id: String,
    org: OrgId,
    key: SigningKey,
    root: Certificate,
    issued: BTreeMap<u64, Certificate>,
    revoked: BTreeSet<u64>,
    next_serial: u64,
    lifetime_ms: u64,
}

impl CertificateAuthority {
    /// Creates a CA with a self-signed root certificate. The root is
    /// marked with the `Admin` role of its organisation and serial 0;
    /// issued certificates start at serial 1.
    pub fn new(ca_id: impl Into<String>, org: OrgId, key: SigningKey, now: Timestamp) -> Self {
        Self::with_lifetime(ca_id, org, key, now, DEFAULT_CERT_LIFETIME_MS)
    }

    pub fn with_lifetime(
        ca_id: impl Into<String>,
        org: OrgId,
        key: SigningKey,
        now: Timestamp,
        lifetime_ms: u64,
    ) -> Self {
        let ca_id = ca_id.into();
        let mut root = Certificate {
            subject_id: ca_id.clone(),
            org: org.clone(),
            role: Role::Admin,
            public_key: PublicKey::from_signing_key(&key),
            issuer_id: ca_id.clone(),
            serial: 0,
            issued_at: now,
            // roots outlive the leaves they sign
            not_after: now.saturating_add_millis(lifetime_ms.saturating_mul(10)),
            signature: Signature::EMPTY,
        };
        root.signature = crypto::sign(&key, &root.to_be_signed());
        CertificateAuthority {
            ca_id,
            org,
            key,
            root,
            issued: BTreeMap::new(),
            revoked: BTreeSet::new(),
            next_serial: 1,
            lifetime_ms: lifetime_ms.max(1),
        }
    }

    pub fn id(&self) -> &str {
        &self.ca_id
    }

    pub fn org(&self) -> &OrgId {
        &self.org
    }

    pub fn root_certificate(&self) -> &Certificate {
        &self.root
    }

    pub fn public_key(&self) -> PublicKey {
        self.root.public_key
    }

    pub fn issued(&self) -> &BTreeMap<u64, Certificate> {
        &self.issued
    }

    pub fn revoked(&self) -> &BTreeSet<u64> {
        &self.revoked
    }

    pub fn is_revoked(&self, serial: u64) -> bool {
        self.revoked.contains(&serial)
    }

    pub fn issue(
        &mut self,
        subject_id: &str,
        org: OrgId,
        role: Role,
        public_key: PublicKey,
        now: Timestamp,
    ) -> Result<Certificate, CaError> {
        if subject_id.trim().is_empty() {
            return Err(CaError::EmptySubject);
        }
        if !public_key.is_well_formed() {
            return Err(CaError::MalformedKey);
        }
        let live_duplicate = self.issued.values().any(|c| {
            c.subject_id == subject_id && c.role == role && now <= c.not_after && !self.revoked.contains(&c.serial)
        });
        if live_duplicate {
            return Err(CaError::AlreadyIssued {
                subject_id: subject_id.to_owned(),
                role,
            });
        }

        let mut cert = Certificate {
            subject_id: subject_id.to_owned(),
            org,
            role,
            public_key,
            issuer_id: self.ca_id.clone(),
            serial: self.next_serial,
            issued_at: now,
            not_after: now.saturating_add_millis(self.lifetime_ms),
            signature: Signature::EMPTY,
        };
        cert.signature = crypto::sign(&self.key, &cert.to_be_signed());
        self.next_serial += 1;
        self.issued.insert(cert.serial, cert.clone());
        Ok(cert)
    }

    pub fn revoke(&mut self, serial: u64) -> Result<(), CaError> {
        if !self.issued.contains_key(&serial) {
            return Err(CaError::UnknownSerial(serial));
        }
        self.revoked.insert(serial);
        Ok(())
    }

    pub fn to_record(&self) -> CaRecord {
        CaRecord {
            ca_id: self.ca_id.clone(),
            org: self.org.clone(),
            secret_key: hex::encode(self.key.to_bytes()),
            root: self.root.clone(),
            issued: self.issued.values().cloned().collect(),
            revoked: self.revoked.iter().copied().collect(),
            next_serial: self.next_serial,
            lifetime_ms: self.lifetime_ms,
        }
    }

    pub fn from_record(record: CaRecord) -> Result<Self, CaError> {
        let mut secret = [0u8; 32];
        hex::decode_to_slice(&record.secret_key, &mut secret).map_err(|e| CaError::Corrupt(e.to_string()))?;
        let key = SigningKey::from_bytes(&secret);
        if PublicKey::from_signing_key(&key) != record.root.public_key || !record.root.is_self_signed() {
            return Err(CaError::Corrupt("root certificate does not match key".into()));
        }
        let issued: BTreeMap<u64, Certificate> = record.issued.into_iter().map(|c| (c.serial, c)).collect();
        if record.revoked.iter().any(|s| !issued.contains_key(s)) {
            return Err(CaError::Corrupt("revoked serial never issued".into()));
        }
        Ok(CertificateAuthority {
            ca_id: record.ca_id,
            org: record.org,
            key,
            root: record.root,
            issued,
            revoked: record.revoked.into_iter().collect(),
            next_serial: record.next_serial,
            lifetime_ms: record.lifetime_ms,
        })
    }
}

/// On-disk form of a CA.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CaRecord {
    pub ca_id: String,
    pub org: OrgId,
    pub secret_key: String,
    pub root: Certificate,
    pub issued: Vec<Certificate>,
    pub revoked: Vec<u64>,
    pub next_serial: u64,
    pub lifetime_ms: u64,
}
