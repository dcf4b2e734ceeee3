use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use parking_lot::RwLock;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Certificate, Identity, OrgId, Role};
use crate::time::Timestamp;

/// Membership rules of one organisation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MspConfig {
    pub org: OrgId,
    pub trusted_ca_ids: Vec<String>,
    pub admitted_roles: Vec<Role>,
}

/// Why a certificate was not accepted. Each variant has a stable reason code.
#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum RejectReason {
    #[error("certificate signature does not verify")]
    BadSignature,
    #[error("issuer is not a trusted CA")]
    UntrustedIssuer,
    #[error("role is not admitted by the organisation")]
    RoleNotAdmitted,
    #[error("certificate has expired")]
    Expired,
    #[error("certificate has been revoked")]
    Revoked,
    #[error("certificate belongs to a different organisation")]
    OrgMismatch,
}

impl RejectReason {
    pub fn code(self) -> &'static str {
        match self {
            RejectReason::BadSignature => "bad-signature",
            RejectReason::UntrustedIssuer => "untrusted-issuer",
            RejectReason::RoleNotAdmitted => "role-not-admitted",
            RejectReason::Expired => "expired",
            RejectReason::Revoked => "revoked",
            RejectReason::OrgMismatch => "org-mismatch",
        }
    }
}

/// CA roots and their revocation sets, as seen by verifiers.
#[derive(Clone, Debug, Default)]
pub struct TrustStore {
    roots: BTreeMap<String, Certificate>,
    revoked: BTreeMap<String, BTreeSet<u64>>,
}

impl TrustStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a root. Returns false (and ignores it) unless it is self-signed.
    pub fn add_root(&mut self, root: Certificate) -> bool {
        if !root.is_self_signed() {
            return false;
        }
        self.roots.insert(root.subject_id.clone(), root);
        true
    }

    pub fn root(&self, ca_id: &str) -> Option<&Certificate> {
        self.roots.get(ca_id)
    }

    pub fn revoke(&mut self, ca_id: &str, serial: u64) {
        self.revoked.entry(ca_id.to_owned()).or_default().insert(serial);
    }

    pub fn is_revoked(&self, ca_id: &str, serial: u64) -> bool {
        self.revoked.get(ca_id).is_some_and(|s| s.contains(&serial))
    }
}

/// Accepts `cert` iff its issuer is trusted by `msp`, the signature
/// verifies, it belongs to `msp.org`, its role is admitted, `now` is not
/// past `not_after`, and its serial is not revoked. Checks run in that
/// order and the first failure is reported.
pub fn verify_certificate(
    msp: &MspConfig,
    trust: &TrustStore,
    cert: &Certificate,
    now: Timestamp,
) -> Result<Identity, RejectReason> {
    if !msp.trusted_ca_ids.iter().any(|id| id == &cert.issuer_id) {
        return Err(RejectReason::UntrustedIssuer);
    }
    let root = trust.root(&cert.issuer_id).ok_or(RejectReason::UntrustedIssuer)?;
    if !cert.verify_signature(&root.public_key) {
        return Err(RejectReason::BadSignature);
    }
    if cert.org != msp.org {
        return Err(RejectReason::OrgMismatch);
    }
    if !msp.admitted_roles.contains(&cert.role) {
        return Err(RejectReason::RoleNotAdmitted);
    }
    if now > cert.not_after {
        return Err(RejectReason::Expired);
    }
    if trust.is_revoked(&cert.issuer_id, cert.serial) {
        return Err(RejectReason::Revoked);
    }
    Ok(Identity {
        subject_id: cert.subject_id.clone(),
        org: cert.org.clone(),
        role: cert.role,
        issuer_id: cert.issuer_id.clone(),
        serial: cert.serial,
    })
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MembershipError {
    #[error("organisation {0} is not a member of this channel")]
    NotAMember(OrgId),
    #[error("certificate rejected: {0}")]
    Rejected(RejectReason),
}

impl MembershipError {
    pub fn code(&self) -> &'static str {
        match self {
            MembershipError::NotAMember(_) => "not-a-member",
            MembershipError::Rejected(r) => r.code(),
        }
    }
}

/// The member organisations of a channel and the shared trust store.
#[derive(Clone, Debug)]
pub struct Membership {
    msps: BTreeMap<OrgId, MspConfig>,
    trust: Arc<RwLock<TrustStore>>,
}

impl Membership {
    pub fn new(msps: impl IntoIterator<Item = MspConfig>, trust: Arc<RwLock<TrustStore>>) -> Self {
        Membership {
            msps: msps.into_iter().map(|m| (m.org.clone(), m)).collect(),
            trust,
        }
    }

    pub fn orgs(&self) -> impl Iterator<Item = &OrgId> {
        self.msps.keys()
    }

    pub fn is_member(&self, org: &OrgId) -> bool {
        self.msps.contains_key(org)
    }

    pub fn trust(&self) -> &Arc<RwLock<TrustStore>> {
        &self.trust
    }

    pub fn validate(&self, cert: &Certificate, now: Timestamp) -> Result<Identity, MembershipError> {
        let msp = self
            .msps
            .get(&cert.org)
            .ok_or_else(|| MembershipError::NotAMember(cert.org.clone()))?;
        verify_certificate(msp, &self.trust.read(), cert, now).map_err(MembershipError::Rejected)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::PublicKey;
    use crate::identity::CertificateAuthority;
    use ed25519_dalek::SigningKey;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    struct Fixture {
        ca: CertificateAuthority,
        msp: MspConfig,
        trust: TrustStore,
        rng: ChaCha20Rng,
    }

    fn fixture() -> Fixture {
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        let org = OrgId::new("Org2").unwrap();
        let ca = CertificateAuthority::new("ca.org2", org.clone(), SigningKey::generate(&mut rng), Timestamp(0));
        let mut trust = TrustStore::new();
        assert!(trust.add_root(ca.root_certificate().clone()));
        let msp = MspConfig {
            org,
            trusted_ca_ids: vec!["ca.org2".into()],
            admitted_roles: vec![Role::Patient, Role::Peer],
        };
        Fixture { ca, msp, trust, rng }
    }

    fn issue(f: &mut Fixture, subject: &str, role: Role) -> Certificate {
        let pk = PublicKey::from_signing_key(&SigningKey::generate(&mut f.rng));
        let org = f.msp.org.clone();
        f.ca.issue(subject, org, role, pk, Timestamp(10)).unwrap()
    }

    #[test]
    fn issued_certificate_verifies() {
        let mut f = fixture();
        let cert = issue(&mut f, "PID001", Role::Patient);
        let id = verify_certificate(&f.msp, &f.trust, &cert, Timestamp(11)).unwrap();
        assert_eq!(id.subject_id, "PID001");
        assert_eq!(id.role, Role::Patient);
        assert_eq!(id.org.as_str(), "Org2");
        // accepted right up to not_after
        assert!(verify_certificate(&f.msp, &f.trust, &cert, cert.not_after).is_ok());
    }

    #[test]
    fn tampered_role_fails_signature() {
        let mut f = fixture();
        let mut cert = issue(&mut f, "PID001", Role::Patient);
        cert.role = Role::Doctor;
        f.msp.admitted_roles.push(Role::Doctor);
        assert_eq!(
            verify_certificate(&f.msp, &f.trust, &cert, Timestamp(11)),
            Err(RejectReason::BadSignature)
        );
    }

    #[test]
    fn reason_codes() {
        let mut f = fixture();
        let cert = issue(&mut f, "PID001", Role::Patient);
        let after = Timestamp(cert.not_after.0 + 1);
        assert_eq!(verify_certificate(&f.msp, &f.trust, &cert, after), Err(RejectReason::Expired));

        let mut foreign = cert.clone();
        foreign.issuer_id = "ca.unknown".into();
        assert_eq!(
            verify_certificate(&f.msp, &f.trust, &foreign, Timestamp(11)),
            Err(RejectReason::UntrustedIssuer)
        );

        let doctor = issue(&mut f, "DOC001", Role::Doctor);
        assert_eq!(
            verify_certificate(&f.msp, &f.trust, &doctor, Timestamp(11)),
            Err(RejectReason::RoleNotAdmitted)
        );

        let other_org = MspConfig {
            org: OrgId::new("Org1").unwrap(),
            ..f.msp.clone()
        };
        assert_eq!(
            verify_certificate(&other_org, &f.trust, &cert, Timestamp(11)),
            Err(RejectReason::OrgMismatch)
        );
    }

    #[test]
    fn revocation_is_targeted() {
        let mut f = fixture();
        let a = issue(&mut f, "PID001", Role::Patient);
        let b = issue(&mut f, "PID002", Role::Patient);
        f.ca.revoke(a.serial).unwrap();
        f.trust.revoke("ca.org2", a.serial);
        assert_eq!(verify_certificate(&f.msp, &f.trust, &a, Timestamp(11)), Err(RejectReason::Revoked));
        assert!(verify_certificate(&f.msp, &f.trust, &b, Timestamp(11)).is_ok());
    }

    #[test]
    fn membership_rejects_foreign_org() {
        let mut f = fixture();
        let cert = issue(&mut f, "PID001", Role::Patient);
        let trust = Arc::new(RwLock::new(f.trust.clone()));
        let mut msp1 = f.msp.clone();
        msp1.org = OrgId::new("Org1").unwrap();
        let membership = Membership::new([msp1], trust);
        assert_eq!(
            membership.validate(&cert, Timestamp(11)),
            Err(MembershipError::NotAMember(OrgId::new("Org2").unwrap()))
        );
    }

    #[derive(Debug, Clone)]
    enum Mutation {
        Subject(String),
        Org,
        Role(u8),
        KeyBit(usize),
        Issuer,
        Serial(u64),
        IssuedAt(u64),
        NotAfter(u64),
        SigBit(usize),
    }

    fn mutation() -> impl Strategy<Value = Mutation> {
        prop_oneof![
            "[A-Z]{1,6}[0-9]{0,3}".prop_map(Mutation::Subject),
            Just(Mutation::Org),
            (0u8..4).prop_map(Mutation::Role),
            (0usize..256).prop_map(Mutation::KeyBit),
            Just(Mutation::Issuer),
            (1u64..u64::MAX).prop_map(Mutation::Serial),
            (1u64..1_000_000).prop_map(Mutation::IssuedAt),
            (1u64..1_000_000).prop_map(Mutation::NotAfter),
            (0usize..512).prop_map(Mutation::SigBit),
        ]
    }

    proptest! {
        #[test]
        fn any_field_mutation_is_rejected(m in mutation()) {
            let mut f = fixture();
            let original = issue(&mut f, "PID001", Role::Patient);
            let mut cert = original.clone();
            match m {
                Mutation::Subject(s) => cert.subject_id = if s == original.subject_id { s + "X" } else { s },
                Mutation::Org => cert.org = OrgId::new("Org1").unwrap(),
                Mutation::Role(t) => {
                    let r = Role::ALL[t as usize];
                    cert.role = if r == original.role { Role::Doctor } else { r };
                }
                Mutation::KeyBit(i) => cert.public_key.0[i / 8] ^= 1 << (i % 8),
                Mutation::Issuer => cert.issuer_id.push('x'),
                Mutation::Serial(d) => cert.serial = cert.serial.wrapping_add(d),
                Mutation::IssuedAt(d) => cert.issued_at.0 = cert.issued_at.0.wrapping_add(d),
                Mutation::NotAfter(d) => cert.not_after.0 = cert.not_after.0.wrapping_add(d),
                Mutation::SigBit(i) => cert.signature.0[i / 8] ^= 1 << (i % 8),
            }
            prop_assume!(cert != original);
            // admit every role so that only integrity checks can fail
            f.msp.admitted_roles = Role::ALL.to_vec();
            prop_assert!(verify_certificate(&f.msp, &f.trust, &cert, Timestamp(11)).is_err());
        }
    }
}
