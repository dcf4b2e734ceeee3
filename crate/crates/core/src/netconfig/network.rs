use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use ed25519_dalek::SigningKey;
use parking_lot::{Mutex, RwLock};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::config::{ConfigError, ConfigErrors, NetworkConfig};
use crate::chaincode::ehr::EHR_ID;
use crate::chaincode::{ChaincodeError, ChaincodeRegistry, LIFECYCLE_ID};
use crate::crypto::{Hasher, PublicKey};
use crate::identity::{
    CaError, CaRecord, Certificate, CertificateAuthority, Membership, OrgId, Role, SigningIdentity, TrustStore,
};
use crate::ledger::{Ledger, LedgerError, SnapshotStatus};
use crate::time::{Clock, Timestamp};
use crate::txflow::{genesis_block, Channel, Invocation, Peer, SubmitError, Submitted};

pub const CONFIG_FILE: &str = "network.toml";
pub const STATE_FILE: &str = "network.json";
pub const CHANNELS_DIR: &str = "channels";
pub const LOCK_FILE: &str = "LOCK";

const SALT_BYTES: usize = 16;

#[derive(Debug, Error)]
pub enum NetError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{} is already initialized", .0.display())]
    AlreadyInitialized(PathBuf),
    #[error("{} holds no network; run bootstrap first", .0.display())]
    NotInitialized(PathBuf),
    #[error("{} is in use by another process (remove {LOCK_FILE} if it is stale)", .0.display())]
    Locked(PathBuf),
    #[error("i/o error on {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("corrupt network state: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Ca(#[from] CaError),
    #[error("admin secret is incorrect")]
    Unauthorized,
    #[error("{0} is already enrolled")]
    AlreadyExists(String),
    #[error("{0} is not enrolled")]
    UnknownSubject(String),
    #[error("no organisation admits the {0} role")]
    NoHomeOrg(Role),
    #[error("no channel has the EHR chaincode deployed")]
    NoEhrChannel,
    #[error(transparent)]
    Submit(#[from] SubmitError),
    #[error("transaction {tx_id} was invalidated at commit: {validity}")]
    Invalidated { tx_id: String, validity: String },
}

impl NetError {
    /// True for errors caused by bad input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            NetError::Config(_)
                | NetError::AlreadyInitialized(_)
                | NetError::NotInitialized(_)
                | NetError::Unauthorized
                | NetError::AlreadyExists(_)
                | NetError::UnknownSubject(_)
                | NetError::NoHomeOrg(_)
        ) || matches!(self, NetError::Submit(e) if e.chaincode_error().is_some())
    }

    pub fn chaincode_error(&self) -> Option<&ChaincodeError> {
        match self {
            NetError::Submit(e) => e.chaincode_error(),
            _ => None,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> NetError + '_ {
    move |source| NetError::Io {
        path: path.to_owned(),
        source,
    }
}

/// Identity to enroll, with what its directory entry or record needs.
#[derive(Clone, Debug)]
pub enum Enrollment {
    Admin {
        id: String,
    },
    Doctor {
        id: String,
        display_name: String,
        department: String,
        password: String,
    },
    Patient {
        id: String,
        /// Personal details object (`firstName`, `lastName`, ...).
        personal: Value,
        password: String,
    },
}

impl Enrollment {
    pub fn id(&self) -> &str {
        match self {
            Enrollment::Admin { id } | Enrollment::Doctor { id, .. } | Enrollment::Patient { id, .. } => id,
        }
    }

    pub fn role(&self) -> Role {
        match self {
            Enrollment::Admin { .. } => Role::Admin,
            Enrollment::Doctor { .. } => Role::Doctor,
            Enrollment::Patient { .. } => Role::Patient,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Enrolled {
    pub certificate: Certificate,
    /// The directory or record transaction, for doctors and patients.
    pub submitted: Option<Submitted>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct WalletEntry {
    certificate: Certificate,
    secret_key: String,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct NetworkState {
    cas: Vec<CaRecord>,
    wallet: Vec<WalletEntry>,
}

/// Exclusive hold on a data directory for the life of a [`Network`].
#[derive(Debug)]
struct DirLock(PathBuf);

impl DirLock {
    fn acquire(dir: &Path) -> Result<Self, NetError> {
        let path = dir.join(LOCK_FILE);
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(DirLock(path)),
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => Err(NetError::Locked(dir.to_owned())),
            Err(e) => Err(io_err(&path)(e)),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

struct Authority {
    cas: BTreeMap<OrgId, CertificateAuthority>,
    rng: ChaCha20Rng,
}

/// A running single-process network: CAs, a custodial wallet of enrolled
/// identities and one [`Channel`] per configured channel.
pub struct Network {
    config: NetworkConfig,
    data_dir: Option<PathBuf>,
    clock: Arc<dyn Clock>,
    trust: Arc<RwLock<TrustStore>>,
    membership: Arc<Membership>,
    authority: Mutex<Authority>,
    wallet: RwLock<BTreeMap<String, SigningIdentity>>,
    channels: BTreeMap<String, Channel>,
    _lock: Option<DirLock>,
}

impl std::fmt::Debug for Network {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Network")
            .field("data_dir", &self.data_dir)
            .field("channels", &self.channels.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl Network {
    /// Creates CAs, the admin and peer identities, each channel's genesis
    /// block, and deploys the configured chaincodes.
    ///
    /// With a data directory the network is built in a staging directory
    /// next to it and moved into place only when every step succeeded, so
    /// a failed bootstrap leaves nothing behind. A directory that already
    /// holds a network is refused.
    pub fn bootstrap(config: NetworkConfig, data_dir: Option<&Path>, clock: Arc<dyn Clock>) -> Result<Self, NetError> {
        config.validate().map_err(ConfigError::from)?;
        let Some(dir) = data_dir else {
            return Self::build(config, None, clock);
        };
        if dir.exists() {
            let occupied = fs::read_dir(dir).map_err(io_err(dir))?.next().is_some();
            if occupied {
                return Err(NetError::AlreadyInitialized(dir.to_owned()));
            }
        }
        let staging = staging_path(dir);
        let _ = fs::remove_dir_all(&staging);
        let built = fs::create_dir_all(&staging)
            .map_err(io_err(&staging))
            .and_then(|_| Self::build(config, Some(&staging), Arc::clone(&clock)));
        match built {
            Ok(net) => drop(net),
            Err(e) => {
                let _ = fs::remove_dir_all(&staging);
                return Err(e);
            }
        }
        if dir.exists() {
            fs::remove_dir(dir).map_err(io_err(dir))?;
        }
        if let Err(e) = fs::rename(&staging, dir) {
            let _ = fs::remove_dir_all(&staging);
            return Err(io_err(dir)(e));
        }
        Self::open(dir, clock)
    }

    fn build(config: NetworkConfig, dir: Option<&Path>, clock: Arc<dyn Clock>) -> Result<Self, NetError> {
        let lock = dir.map(DirLock::acquire).transpose()?;
        let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
        let now = config.genesis_time_ms.map(Timestamp).unwrap_or_else(|| clock.now());
        let lifetime = config.ca.lifetime_ms();

        let mut trust = TrustStore::new();
        let mut cas = BTreeMap::new();
        for org in &config.orgs {
            let org_id = OrgId::new(org.name.clone()).expect("validated");
            let key = SigningKey::generate(&mut rng);
            let ca = CertificateAuthority::with_lifetime(org.ca_id(), org_id.clone(), key, now, lifetime);
            trust.add_root(ca.root_certificate().clone());
            cas.insert(org_id, ca);
        }

        let mut wallet = BTreeMap::new();
        let mut issue = |cas: &mut BTreeMap<OrgId, CertificateAuthority>,
                         rng: &mut ChaCha20Rng,
                         subject: &str,
                         org: &str,
                         role: Role|
         -> Result<(), NetError> {
            let org_id = OrgId::new(org.to_owned()).expect("validated");
            let key = SigningKey::generate(rng);
            let ca = cas.get_mut(&org_id).expect("validated org");
            let cert = ca.issue(subject, org_id, role, PublicKey::from_signing_key(&key), now)?;
            let signer = SigningIdentity::new(cert, key).expect("fresh key matches");
            if wallet.insert(subject.to_owned(), signer).is_some() {
                return Err(NetError::AlreadyExists(subject.to_owned()));
            }
            Ok(())
        };
        issue(&mut cas, &mut rng, &config.admin.id, &config.admin.org, Role::Admin)?;
        for org in &config.orgs {
            for peer in &org.peers {
                issue(&mut cas, &mut rng, peer, &org.name, Role::Peer)?;
            }
        }
        let admin = wallet[&config.admin.id].clone();

        let mut ledgers = BTreeMap::new();
        for spec in &config.channels {
            let mut nonce = vec![0u8; 24];
            rng.fill_bytes(&mut nonce);
            let genesis = genesis_block(&config.channel_config(spec), &admin, now, nonce)?;
            let ledger = match dir {
                Some(d) => Ledger::create(&d.join(CHANNELS_DIR).join(&spec.id), genesis)?,
                None => Ledger::new(genesis)?,
            };
            ledgers.insert(spec.id.clone(), ledger);
        }

        let network = Self::assemble(config, dir, clock, trust, cas, wallet, ledgers, rng, lock);
        if let Some(d) = dir {
            let path = d.join(CONFIG_FILE);
            fs::write(&path, network.config.to_toml()).map_err(io_err(&path))?;
        }
        network.persist()?;

        for spec in &network.config.channels {
            let channel = &network.channels[&spec.id];
            for (name, version) in &spec.chaincodes {
                let invocation = Invocation::new(LIFECYCLE_ID, "deploy").arg(name).arg(version);
                expect_valid(channel.submit(&admin, invocation)?)?;
                log::info!("channel {}: deployed {name} {version}", spec.id);
            }
        }
        Ok(network)
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        config: NetworkConfig,
        dir: Option<&Path>,
        clock: Arc<dyn Clock>,
        trust: TrustStore,
        cas: BTreeMap<OrgId, CertificateAuthority>,
        wallet: BTreeMap<String, SigningIdentity>,
        ledgers: BTreeMap<String, Ledger>,
        mut rng: ChaCha20Rng,
        lock: Option<DirLock>,
    ) -> Self {
        let trust = Arc::new(RwLock::new(trust));
        let membership = Arc::new(Membership::new(
            config.orgs.iter().map(|o| config.msp(o)),
            Arc::clone(&trust),
        ));
        let chaincodes = Arc::new(ChaincodeRegistry::with_builtins());
        let mut channels = BTreeMap::new();
        for (id, ledger) in ledgers {
            let spec = config.channels.iter().find(|c| c.id == id).expect("configured channel");
            let channel_config = config.channel_config(spec);
            let members = Membership::new(
                spec.members.iter().map(|m| config.msp(config.org(m).expect("validated"))),
                Arc::clone(&trust),
            );
            let peers = wallet
                .values()
                .filter(|s| s.role() == Role::Peer && channel_config.members.contains(&s.certificate().org))
                .map(|s| Peer::new(s.subject_id(), s.clone()))
                .collect();
            let nonces = ChaCha20Rng::from_seed(rng.gen());
            let channel = Channel::start(
                channel_config,
                Arc::new(members),
                Arc::clone(&chaincodes),
                peers,
                ledger,
                Arc::clone(&clock),
                nonces,
            );
            channels.insert(id, channel);
        }
        Network {
            config,
            data_dir: dir.map(Path::to_owned),
            clock,
            trust,
            membership,
            authority: Mutex::new(Authority { cas, rng }),
            wallet: RwLock::new(wallet),
            channels,
            _lock: lock,
        }
    }

    /// Reopens a bootstrapped data directory. Each channel's chain is
    /// validated and its world state rebuilt by replay.
    pub fn open(dir: &Path, clock: Arc<dyn Clock>) -> Result<Self, NetError> {
        let config_path = dir.join(CONFIG_FILE);
        let state_path = dir.join(STATE_FILE);
        if !config_path.exists() || !state_path.exists() {
            return Err(NetError::NotInitialized(dir.to_owned()));
        }
        let lock = DirLock::acquire(dir)?;
        let text = fs::read_to_string(&config_path).map_err(io_err(&config_path))?;
        let config = NetworkConfig::from_toml(&text)?;
        let raw = fs::read(&state_path).map_err(io_err(&state_path))?;
        let state: NetworkState = serde_json::from_slice(&raw).map_err(|e| NetError::Corrupt(e.to_string()))?;

        let mut trust = TrustStore::new();
        let mut cas = BTreeMap::new();
        for record in state.cas {
            let ca = CertificateAuthority::from_record(record)?;
            if !trust.add_root(ca.root_certificate().clone()) {
                return Err(NetError::Corrupt(format!("CA {} has an invalid root", ca.id())));
            }
            for &serial in ca.revoked() {
                trust.revoke(ca.id(), serial);
            }
            cas.insert(ca.org().clone(), ca);
        }
        let mut wallet = BTreeMap::new();
        for entry in state.wallet {
            let secret: [u8; 32] = hex::decode(&entry.secret_key)
                .ok()
                .and_then(|b| b.try_into().ok())
                .ok_or_else(|| NetError::Corrupt(format!("bad key for {}", entry.certificate.subject_id)))?;
            let subject = entry.certificate.subject_id.clone();
            let signer = SigningIdentity::new(entry.certificate, SigningKey::from_bytes(&secret))
                .ok_or_else(|| NetError::Corrupt(format!("key does not match certificate of {subject}")))?;
            wallet.insert(subject, signer);
        }

        // Later key material and nonces derive from the seed and the
        // persisted history, so replaying the same commands reproduces it.
        let mut h = Hasher::new(b"ehr:network-rng:v1\0");
        h.update(&config.seed.to_be_bytes()).update(&raw);
        let mut ledgers = BTreeMap::new();
        for spec in &config.channels {
            let (ledger, status) = Ledger::open(&dir.join(CHANNELS_DIR).join(&spec.id))?;
            if status != SnapshotStatus::Verified {
                log::warn!("channel {}: world-state snapshot {status:?}", spec.id);
            }
            h.update(ledger.latest_hash().as_bytes());
            ledgers.insert(spec.id.clone(), ledger);
        }
        let rng = ChaCha20Rng::from_seed(h.finish().0);
        Ok(Self::assemble(config, Some(dir), clock, trust, cas, wallet, ledgers, rng, Some(lock)))
    }

    fn persist(&self) -> Result<(), NetError> {
        let Some(dir) = &self.data_dir else {
            return Ok(());
        };
        let state = NetworkState {
            cas: self.authority.lock().cas.values().map(CertificateAuthority::to_record).collect(),
            wallet: self
                .wallet
                .read()
                .values()
                .map(|s| WalletEntry {
                    certificate: s.certificate().clone(),
                    secret_key: hex::encode(s.secret_bytes()),
                })
                .collect(),
        };
        let path = dir.join(STATE_FILE);
        let tmp = dir.join(format!("{STATE_FILE}.tmp"));
        let bytes = serde_json::to_vec_pretty(&state).expect("state serializes");
        fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
        fs::rename(&tmp, &path).map_err(io_err(&path))
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn data_dir(&self) -> Option<&Path> {
        self.data_dir.as_deref()
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    pub fn membership(&self) -> &Arc<Membership> {
        &self.membership
    }

    pub fn trust(&self) -> &Arc<RwLock<TrustStore>> {
        &self.trust
    }

    pub fn channels(&self) -> impl Iterator<Item = &Channel> {
        self.channels.values()
    }

    pub fn channel(&self, id: &str) -> Option<&Channel> {
        self.channels.get(id)
    }

    /// The first channel with the EHR chaincode deployed.
    pub fn ehr_channel(&self) -> Result<&Channel, NetError> {
        self.config
            .channels
            .iter()
            .find(|c| c.chaincodes.contains_key(EHR_ID))
            .map(|c| &self.channels[&c.id])
            .ok_or(NetError::NoEhrChannel)
    }

    pub fn admin_id(&self) -> &str {
        &self.config.admin.id
    }

    pub fn admin(&self) -> SigningIdentity {
        self.signer(&self.config.admin.id).expect("admin is always enrolled")
    }

    pub fn signer(&self, subject_id: &str) -> Option<SigningIdentity> {
        self.wallet.read().get(subject_id).cloned()
    }

    /// Certificates of every enrolled identity, peers included.
    pub fn certificates(&self) -> Vec<Certificate> {
        self.wallet.read().values().map(|s| s.certificate().clone()).collect()
    }

    pub fn check_admin_secret(&self, secret: &str) -> bool {
        let expected = self.config.admin.secret.as_bytes();
        let given = secret.as_bytes();
        expected.len() == given.len() && expected.iter().zip(given).fold(0u8, |acc, (a, b)| acc | (a ^ b)) == 0
    }

    /// Fresh random bytes from the network generator.
    pub fn random_bytes(&self, n: usize) -> Vec<u8> {
        let mut out = vec![0u8; n];
        self.authority.lock().rng.fill_bytes(&mut out);
        out
    }

    /// A new hex salt for a credential.
    pub fn new_salt(&self) -> String {
        hex::encode(self.random_bytes(SALT_BYTES))
    }

    /// Issues a certificate for a new identity. Doctors also get a
    /// directory entry and patients a record, both committed as the admin
    /// before the certificate is issued.
    pub fn enroll(&self, admin_secret: &str, enrollment: Enrollment) -> Result<Enrolled, NetError> {
        if !self.check_admin_secret(admin_secret) {
            return Err(NetError::Unauthorized);
        }
        self.enroll_as_admin(enrollment)
    }

    /// [`enroll`](Self::enroll) for callers already authenticated as the
    /// admin by other means.
    pub fn enroll_as_admin(&self, enrollment: Enrollment) -> Result<Enrolled, NetError> {
        let id = enrollment.id().to_owned();
        let role = enrollment.role();
        if self.wallet.read().contains_key(&id) {
            return Err(NetError::AlreadyExists(id));
        }
        let org = self.config.home_org(role).ok_or(NetError::NoHomeOrg(role))?;
        let org_id = OrgId::new(org.name.clone()).expect("validated");

        let submitted = match &enrollment {
            Enrollment::Admin { .. } => None,
            Enrollment::Doctor {
                display_name,
                department,
                password,
                ..
            } => {
                let inv = Invocation::new(EHR_ID, "AdminContract:registerDoctor")
                    .args([id.as_str(), display_name, department, &self.new_salt()])
                    .transient("password", password.as_str());
                Some(expect_valid(self.ehr_channel()?.submit(&self.admin(), inv)?)?)
            }
            Enrollment::Patient { personal, password, .. } => {
                let inv = Invocation::new(EHR_ID, "AdminContract:createPatient")
                    .args([id.clone(), personal.to_string(), self.new_salt()])
                    .transient("password", password.as_str());
                Some(expect_valid(self.ehr_channel()?.submit(&self.admin(), inv)?)?)
            }
        };

        let certificate = {
            let mut auth = self.authority.lock();
            let key = SigningKey::generate(&mut auth.rng);
            let now = self.clock.now();
            let ca = auth.cas.get_mut(&org_id).expect("validated org");
            let cert = ca.issue(&id, org_id.clone(), role, PublicKey::from_signing_key(&key), now)?;
            let signer = SigningIdentity::new(cert.clone(), key).expect("fresh key matches");
            self.wallet.write().insert(id.clone(), signer);
            cert
        };
        self.persist()?;
        log::info!("enrolled {id} as {role} in {org_id}");
        Ok(Enrolled { certificate, submitted })
    }

    /// Revokes the subject's certificate and removes it from the wallet.
    pub fn revoke(&self, subject_id: &str) -> Result<Certificate, NetError> {
        let cert = self
            .signer(subject_id)
            .ok_or_else(|| NetError::UnknownSubject(subject_id.to_owned()))?
            .certificate()
            .clone();
        if cert.role == Role::Peer || subject_id == self.config.admin.id {
            return Err(NetError::UnknownSubject(subject_id.to_owned()));
        }
        {
            let mut auth = self.authority.lock();
            let ca = auth
                .cas
                .get_mut(&cert.org)
                .ok_or_else(|| NetError::Corrupt(format!("no CA for {}", cert.org)))?;
            ca.revoke(cert.serial)?;
            self.trust.write().revoke(&cert.issuer_id, cert.serial);
            self.wallet.write().remove(subject_id);
        }
        self.persist()?;
        log::info!("revoked {subject_id} (serial {})", cert.serial);
        Ok(cert)
    }

    /// Submits on the EHR channel as `subject_id`.
    pub fn submit_as(&self, subject_id: &str, invocation: Invocation) -> Result<Submitted, NetError> {
        let signer = self
            .signer(subject_id)
            .ok_or_else(|| NetError::UnknownSubject(subject_id.to_owned()))?;
        Ok(self.ehr_channel()?.submit(&signer, invocation)?)
    }

    /// Evaluates on the EHR channel as `subject_id`.
    pub fn query_as(&self, subject_id: &str, invocation: Invocation) -> Result<Value, NetError> {
        let signer = self
            .signer(subject_id)
            .ok_or_else(|| NetError::UnknownSubject(subject_id.to_owned()))?;
        Ok(self.ehr_channel()?.query(&signer, invocation)?)
    }

    /// Enrolls the demo population: doctors DOC001 and DOC002, patients
    /// PID002, PID003 and PID004, and a grant from PID002 to DOC002.
    /// Passwords are given by [`demo_password`].
    pub fn seed_demo(&self, admin_secret: &str) -> Result<Vec<Submitted>, NetError> {
        if !self.check_admin_secret(admin_secret) {
            return Err(NetError::Unauthorized);
        }
        let mut out = Vec::new();
        for (id, name, dept) in DEMO_DOCTORS {
            let e = self.enroll_as_admin(Enrollment::Doctor {
                id: id.into(),
                display_name: name.into(),
                department: dept.into(),
                password: demo_password(id),
            })?;
            out.extend(e.submitted);
        }
        for (id, first, last, dob) in DEMO_PATIENTS {
            let e = self.enroll_as_admin(Enrollment::Patient {
                id: id.into(),
                personal: json!({"firstName": first, "lastName": last, "dateOfBirth": dob}),
                password: demo_password(id),
            })?;
            out.extend(e.submitted);
        }
        let grant = Invocation::new(EHR_ID, "PatientContract:grantAccess").args(["PID002", "DOC002"]);
        out.push(expect_valid(self.submit_as("PID002", grant)?)?);
        Ok(out)
    }
}

const DEMO_DOCTORS: [(&str, &str, &str); 2] = [
    ("DOC001", "Dr. Amara Okafor", "Cardiology"),
    ("DOC002", "Dr. Lars Nilsen", "General Practice"),
];

const DEMO_PATIENTS: [(&str, &str, &str, &str); 3] = [
    ("PID002", "Mei", "Tanaka", "1985-04-12"),
    ("PID003", "Jonas", "Weber", "1972-11-30"),
    ("PID004", "Aisha", "Rahman", "1999-01-07"),
];

/// Demo credentials: the lowercased id followed by `-pass`.
pub fn demo_password(subject_id: &str) -> String {
    format!("{}-pass", subject_id.to_lowercase())
}

/// Fails unless the committed transaction was marked valid.
pub fn expect_valid(s: Submitted) -> Result<Submitted, NetError> {
    if s.receipt.validity.is_valid() {
        Ok(s)
    } else {
        Err(NetError::Invalidated {
            tx_id: s.receipt.tx_id,
            validity: s.receipt.validity.to_string(),
        })
    }
}

fn staging_path(dir: &Path) -> PathBuf {
    let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "data".into());
    let parent = dir.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    parent.join(format!(".{name}.bootstrap-{}", std::process::id()))
}

impl From<ConfigErrors> for NetError {
    fn from(e: ConfigErrors) -> Self {
        NetError::Config(ConfigError::Invalid(e))
    }
}
