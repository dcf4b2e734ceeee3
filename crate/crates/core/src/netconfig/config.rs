use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::net::SocketAddr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chaincode::ehr::EHR_ID;
use crate::chaincode::NOOP_ID;
use crate::crypto::{HASH_ALGORITHM, SIGNATURE_ALGORITHM};
use crate::identity::{MspConfig, OrgId, Role};
use crate::txflow::{Backpressure, BatchConfig, ChannelConfig, EndorsementPolicy};

/// Chaincodes this build can deploy.
pub const DEPLOYABLE_CHAINCODES: [&str; 2] = [EHR_ID, NOOP_ID];

/// Declarative description of a network, read from TOML.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    /// Seeds key generation and nonces during bootstrap.
    pub seed: u64,
    /// Timestamp stamped on genesis material. Defaults to the clock.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub genesis_time_ms: Option<u64>,
    pub admin: AdminConfig,
    #[serde(default)]
    pub gateway: GatewayConfig,
    #[serde(default)]
    pub ca: CaConfig,
    #[serde(rename = "org")]
    pub orgs: Vec<OrgConfig>,
    #[serde(rename = "channel")]
    pub channels: Vec<ChannelSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdminConfig {
    pub id: String,
    pub org: String,
    pub secret: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GatewayConfig {
    pub bind: String,
    pub token_lifetime_secs: u64,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig {
            bind: "127.0.0.1:8080".into(),
            token_lifetime_secs: 30 * 60,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CaConfig {
    pub hash_algorithm: String,
    pub signature_algorithm: String,
    pub cert_lifetime_days: u64,
}

impl Default for CaConfig {
    fn default() -> Self {
        CaConfig {
            hash_algorithm: HASH_ALGORITHM.into(),
            signature_algorithm: SIGNATURE_ALGORITHM.into(),
            cert_lifetime_days: 365,
        }
    }
}

impl CaConfig {
    pub fn lifetime_ms(&self) -> u64 {
        self.cert_lifetime_days.saturating_mul(24 * 60 * 60 * 1000)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrgConfig {
    pub name: String,
    /// Defaults to `ca.<name lowercased>`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ca_id: Option<String>,
    pub peers: Vec<String>,
    pub admitted_roles: Vec<Role>,
}

impl OrgConfig {
    pub fn ca_id(&self) -> String {
        self.ca_id
            .clone()
            .unwrap_or_else(|| format!("ca.{}", self.name.to_lowercase()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub id: String,
    pub members: Vec<String>,
    pub endorsement_policy: String,
    #[serde(default)]
    pub batch: BatchSpec,
    /// Chaincode name to version.
    #[serde(default)]
    pub chaincodes: BTreeMap<String, String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BatchSpec {
    pub max_tx: usize,
    pub timeout_ms: u64,
    pub queue_capacity: usize,
    pub backpressure: Backpressure,
}

impl Default for BatchSpec {
    fn default() -> Self {
        let d = BatchConfig::default();
        BatchSpec {
            max_tx: d.max_tx,
            timeout_ms: d.timeout_ms,
            queue_capacity: d.queue_capacity,
            backpressure: d.backpressure,
        }
    }
}

impl From<BatchSpec> for BatchConfig {
    fn from(b: BatchSpec) -> Self {
        BatchConfig {
            max_tx: b.max_tx,
            timeout_ms: b.timeout_ms,
            queue_capacity: b.queue_capacity,
            backpressure: b.backpressure,
        }
    }
}

/// Every problem found in a configuration, one per line.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid network configuration:")?;
        for e in &self.0 {
            write!(f, "\n  - {e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot parse network configuration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Invalid(#[from] ConfigErrors),
}

impl NetworkConfig {
    /// Parses and validates.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: NetworkConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes to TOML")
    }

    pub fn org(&self, name: &str) -> Option<&OrgConfig> {
        self.orgs.iter().find(|o| o.name == name)
    }

    pub fn validate(&self) -> Result<(), ConfigErrors> {
        let mut errs = Vec::new();

        if self.ca.hash_algorithm != HASH_ALGORITHM {
            errs.push(format!("ca: unsupported hash algorithm `{}`", self.ca.hash_algorithm));
        }
        if self.ca.signature_algorithm != SIGNATURE_ALGORITHM {
            errs.push(format!("ca: unsupported signature algorithm `{}`", self.ca.signature_algorithm));
        }
        if self.ca.cert_lifetime_days == 0 {
            errs.push("ca: cert_lifetime_days must be positive".into());
        }
        if self.gateway.bind.parse::<SocketAddr>().is_err() {
            errs.push(format!("gateway: bind address `{}` is not host:port", self.gateway.bind));
        }
        if self.gateway.token_lifetime_secs == 0 {
            errs.push("gateway: token_lifetime_secs must be positive".into());
        }

        if self.orgs.is_empty() {
            errs.push("at least one [[org]] is required".into());
        }
        let mut org_names = BTreeSet::new();
        let mut ca_ids = BTreeSet::new();
        let mut peer_names = BTreeSet::new();
        for org in &self.orgs {
            if org.name.trim().is_empty() {
                errs.push("org: name must not be empty".into());
            } else if !org_names.insert(org.name.as_str()) {
                errs.push(format!("org `{}` is declared twice", org.name));
            }
            if !ca_ids.insert(org.ca_id()) {
                errs.push(format!("org `{}`: CA id `{}` is already used", org.name, org.ca_id()));
            }
            if org.peers.is_empty() {
                errs.push(format!("org `{}` has no peers", org.name));
            }
            for peer in &org.peers {
                if peer.trim().is_empty() {
                    errs.push(format!("org `{}`: peer name must not be empty", org.name));
                } else if !peer_names.insert(peer.as_str()) {
                    errs.push(format!("peer `{peer}` is declared twice"));
                }
            }
            if org.admitted_roles.is_empty() {
                errs.push(format!("org `{}` admits no roles", org.name));
            }
            if org.admitted_roles.contains(&Role::Peer) {
                errs.push(format!("org `{}`: the peer role is implicit and cannot be listed", org.name));
            }
        }

        if self.admin.id.trim().is_empty() {
            errs.push("admin: id must not be empty".into());
        }
        if self.admin.secret.is_empty() {
            errs.push("admin: secret must not be empty".into());
        }
        match self.org(&self.admin.org) {
            None => errs.push(format!("admin references unknown org `{}`", self.admin.org)),
            Some(org) if !org.admitted_roles.contains(&Role::Admin) => {
                errs.push(format!("admin org `{}` does not admit the admin role", org.name))
            }
            Some(_) => {}
        }

        if self.channels.is_empty() {
            errs.push("at least one [[channel]] is required".into());
        }
        let mut channel_ids = BTreeSet::new();
        for ch in &self.channels {
            let valid_id = !ch.id.is_empty()
                && ch
                    .id
                    .chars()
                    .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-' || c == '_');
            if !valid_id {
                errs.push(format!("channel `{}`: id must be lowercase letters, digits, `-` or `_`", ch.id));
            }
            if !channel_ids.insert(ch.id.as_str()) {
                errs.push(format!("channel `{}` is declared twice", ch.id));
            }
            if ch.members.is_empty() {
                errs.push(format!("channel `{}` has no members", ch.id));
            }
            for m in &ch.members {
                if self.org(m).is_none() {
                    errs.push(format!("channel `{}` references unknown org `{m}`", ch.id));
                }
            }
            match ch.endorsement_policy.parse::<EndorsementPolicy>() {
                Err(e) => errs.push(format!("channel `{}`: {e}", ch.id)),
                Ok(policy) => {
                    for org in policy.orgs() {
                        if !ch.members.iter().any(|m| m == org.as_str()) {
                            errs.push(format!(
                                "channel `{}`: endorsement policy names `{org}`, which is not a member",
                                ch.id
                            ));
                        }
                    }
                }
            }
            if ch.batch.max_tx == 0 {
                errs.push(format!("channel `{}`: batch.max_tx must be positive", ch.id));
            }
            if ch.batch.queue_capacity == 0 {
                errs.push(format!("channel `{}`: batch.queue_capacity must be positive", ch.id));
            }
            for name in ch.chaincodes.keys() {
                if !DEPLOYABLE_CHAINCODES.contains(&name.as_str()) {
                    errs.push(format!("channel `{}`: unknown chaincode `{name}`", ch.id));
                }
            }
        }

        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigErrors(errs))
        }
    }

    /// Membership rules of an org: its own CA, its listed roles and peers.
    pub fn msp(&self, org: &OrgConfig) -> MspConfig {
        let mut admitted_roles = org.admitted_roles.clone();
        admitted_roles.push(Role::Peer);
        MspConfig {
            org: OrgId::new(org.name.clone()).expect("validated"),
            trusted_ca_ids: vec![org.ca_id()],
            admitted_roles,
        }
    }

    /// Channel configuration for a validated spec.
    pub fn channel_config(&self, spec: &ChannelSpec) -> ChannelConfig {
        ChannelConfig {
            channel_id: spec.id.clone(),
            members: spec
                .members
                .iter()
                .map(|m| OrgId::new(m.clone()).expect("validated"))
                .collect(),
            endorsement_policy: spec.endorsement_policy.parse().expect("validated"),
            batch: spec.batch.into(),
        }
    }

    /// First org admitting `role`, in declaration order.
    pub fn home_org(&self, role: Role) -> Option<&OrgConfig> {
        if role == Role::Admin {
            return self.org(&self.admin.org);
        }
        self.orgs.iter().find(|o| o.admitted_roles.contains(&role))
    }

    /// A two-organisation hospital network: Org1 holds the admin, doctors
    /// and `peer0.org1`; Org2 holds patients and `peer1.org2`. One org's
    /// endorsement suffices.
    pub fn example() -> Self {
        NetworkConfig::from_toml(EXAMPLE_TOML).expect("example config is valid")
    }
}

pub const EXAMPLE_TOML: &str = r#"seed = 7

[admin]
id = "ADMIN001"
org = "Org1"
secret = "change-me"

[gateway]
bind = "127.0.0.1:8080"
token_lifetime_secs = 1800

[[org]]
name = "Org1"
peers = ["peer0.org1"]
admitted_roles = ["admin", "doctor"]

[[org]]
name = "Org2"
peers = ["peer1.org2"]
admitted_roles = ["patient"]

[[channel]]
id = "channel1"
members = ["Org1", "Org2"]
endorsement_policy = "any 1 of {Org1, Org2}"
chaincodes = { ehr = "1.0", noop = "1.0" }

[channel.batch]
max_tx = 10
timeout_ms = 500
queue_capacity = 1000
backpressure = "block"
"#;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_round_trips() {
        let c = NetworkConfig::example();
        let back = NetworkConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn missing_org_names_the_channel() {
        let text = EXAMPLE_TOML.replace(
            "[[org]]\nname = \"Org2\"\npeers = [\"peer1.org2\"]\nadmitted_roles = [\"patient\"]\n",
            "",
        );
        let err = match NetworkConfig::from_toml(&text) {
            Err(ConfigError::Invalid(e)) => e,
            other => panic!("expected validation error, got {other:?}"),
        };
        assert!(err
            .0
            .iter()
            .any(|e| e.contains("channel `channel1`") && e.contains("unknown org `Org2`")));
    }

    #[test]
    fn all_problems_are_reported() {
        let mut c = NetworkConfig::example();
        c.admin.secret.clear();
        c.channels[0].batch.max_tx = 0;
        c.channels[0].chaincodes.insert("mystery".into(), "1".into());
        let errs = c.validate().unwrap_err();
        assert_eq!(errs.0.len(), 3, "{errs}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = format!("{EXAMPLE_TOML}\nsurprise = 1\n");
        assert!(matches!(NetworkConfig::from_toml(&text), Err(ConfigError::Parse(_))));
    }
}
