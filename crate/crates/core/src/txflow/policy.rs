use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::identity::{Membership, OrgId, Role};
use crate::ledger::Transaction;

/// Quorum rule over organisations: at least `required` distinct orgs out
/// of `orgs` must endorse.
///
/// Text form: `any N of {Org1, Org2}` or `all of {Org1, Org2}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct EndorsementPolicy {
    required: usize,
    orgs: BTreeSet<OrgId>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolicyError {
    #[error("policy needs at least one organisation")]
    NoOrgs,
    #[error("policy requires {required} of {available} organisations")]
    Unsatisfiable { required: usize, available: usize },
    #[error("cannot parse policy {0:?}; expected `any N of {{A, B}}` or `all of {{A, B}}`")]
    Syntax(String),
}

impl EndorsementPolicy {
    pub fn any(required: usize, orgs: impl IntoIterator<Item = OrgId>) -> Result<Self, PolicyError> {
        let orgs: BTreeSet<_> = orgs.into_iter().collect();
        if orgs.is_empty() {
            return Err(PolicyError::NoOrgs);
        }
        if required == 0 || required > orgs.len() {
            return Err(PolicyError::Unsatisfiable {
                required,
                available: orgs.len(),
            });
        }
        Ok(EndorsementPolicy { required, orgs })
    }

    pub fn all(orgs: impl IntoIterator<Item = OrgId>) -> Result<Self, PolicyError> {
        let orgs: BTreeSet<_> = orgs.into_iter().collect();
        let n = orgs.len();
        Self::any(n, orgs)
    }

    pub fn required(&self) -> usize {
        self.required
    }

    pub fn orgs(&self) -> &BTreeSet<OrgId> {
        &self.orgs
    }

    pub fn is_satisfied_by(&self, endorsing_orgs: &BTreeSet<OrgId>) -> bool {
        endorsing_orgs.intersection(&self.orgs).count() >= self.required
    }
}

impl fmt::Display for EndorsementPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.orgs.iter().map(OrgId::as_str).collect();
        if self.required == self.orgs.len() && self.orgs.len() > 1 {
            write!(f, "all of {{{}}}", names.join(", "))
        } else {
            write!(f, "any {} of {{{}}}", self.required, names.join(", "))
        }
    }
}

impl FromStr for EndorsementPolicy {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let syntax = || PolicyError::Syntax(s.to_owned());
        let s = s.trim();
        let (head, set) = s.split_once('{').ok_or_else(syntax)?;
        let set = set.strip_suffix('}').ok_or_else(syntax)?;
        let orgs = set
            .split(',')
            .map(|o| OrgId::new(o.trim()).map_err(|_| syntax()))
            .collect::<Result<Vec<_>, _>>()?;
        let words: Vec<&str> = head.split_whitespace().collect();
        match words.as_slice() {
            ["all", "of"] => Self::all(orgs),
            ["any", n, "of"] => Self::any(n.parse().map_err(|_| syntax())?, orgs),
            _ => Err(syntax()),
        }
    }
}

impl TryFrom<String> for EndorsementPolicy {
    type Error = PolicyError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<EndorsementPolicy> for String {
    fn from(p: EndorsementPolicy) -> String {
        p.to_string()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("endorsements from {endorsing_orgs:?} do not satisfy `{policy}`")]
pub struct PolicyFailure {
    pub policy: String,
    pub endorsing_orgs: Vec<String>,
}

/// Counts the distinct organisations whose endorsements are signed by a
/// membership-valid peer over this transaction's endorsement digest. Two
/// endorsements from one org count once.
pub fn check_endorsement_policy(
    tx: &Transaction,
    policy: &EndorsementPolicy,
    membership: &Membership,
) -> Result<(), PolicyFailure> {
    let digest = tx.endorsement_digest();
    let orgs: BTreeSet<OrgId> = tx
        .endorsements
        .iter()
        .filter(|e| e.endorser.role == Role::Peer)
        .filter(|e| membership.validate(&e.endorser, tx.timestamp).is_ok())
        .filter(|e| e.endorser.public_key.verify(digest.as_bytes(), &e.signature))
        .map(|e| e.endorser.org.clone())
        .collect();
    if policy.is_satisfied_by(&orgs) {
        Ok(())
    } else {
        Err(PolicyFailure {
            policy: policy.to_string(),
            endorsing_orgs: orgs.into_iter().map(String::from).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn org(s: &str) -> OrgId {
        OrgId::new(s).unwrap()
    }

    #[test]
    fn text_form_round_trips() {
        for text in ["any 1 of {Org1, Org2}", "all of {Org1, Org2}", "any 2 of {A, B, C}"] {
            let p: EndorsementPolicy = text.parse().unwrap();
            assert_eq!(p.to_string(), text);
        }
        let p: EndorsementPolicy = "all of {Org1}".parse().unwrap();
        assert_eq!(p.required(), 1);
    }

    #[test]
    fn rejects_bad_policies() {
        assert!(matches!("any 3 of {A, B}".parse::<EndorsementPolicy>(), Err(PolicyError::Unsatisfiable { .. })));
        assert!(matches!("some of {A}".parse::<EndorsementPolicy>(), Err(PolicyError::Syntax(_))));
        assert!(matches!("any 1 of {A, }".parse::<EndorsementPolicy>(), Err(PolicyError::Syntax(_))));
        assert!(matches!("any 0 of {A}".parse::<EndorsementPolicy>(), Err(PolicyError::Unsatisfiable { .. })));
    }

    #[test]
    fn satisfaction_counts_distinct_member_orgs() {
        let any = EndorsementPolicy::any(1, [org("Org1"), org("Org2")]).unwrap();
        let all = EndorsementPolicy::all([org("Org1"), org("Org2")]).unwrap();
        let set = |xs: &[&str]| xs.iter().map(|s| org(s)).collect::<BTreeSet<_>>();
        assert!(any.is_satisfied_by(&set(&["Org1"])));
        assert!(!all.is_satisfied_by(&set(&["Org1"])));
        assert!(all.is_satisfied_by(&set(&["Org1", "Org2"])));
        assert!(!any.is_satisfied_by(&set(&["Org3"])));
    }
}
