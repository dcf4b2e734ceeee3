use std::fmt;

use serde::{Deserialize, Serialize};

use super::Transaction;
use crate::codec::{Canonical, DecodeError, Decoder, Encoder};
use crate::crypto::{Digest, Hasher};

/// Commit-time outcome recorded for each transaction in a block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValidationCode {
    Valid,
    MvccConflict,
    BadEndorsement,
    DuplicateTxId,
}

impl ValidationCode {
    pub fn is_valid(self) -> bool {
        self == ValidationCode::Valid
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ValidationCode::Valid => "valid",
            ValidationCode::MvccConflict => "mvcc-conflict",
            ValidationCode::BadEndorsement => "bad-endorsement",
            ValidationCode::DuplicateTxId => "duplicate-tx-id",
        }
    }

    fn tag(self) -> u8 {
        match self {
            ValidationCode::Valid => 0,
            ValidationCode::MvccConflict => 1,
            ValidationCode::BadEndorsement => 2,
            ValidationCode::DuplicateTxId => 3,
        }
    }

    fn from_tag(tag: u8) -> Result<Self, DecodeError> {
        Ok(match tag {
            0 => ValidationCode::Valid,
            1 => ValidationCode::MvccConflict,
            2 => ValidationCode::BadEndorsement,
            3 => ValidationCode::DuplicateTxId,
            _ => return Err(DecodeError::InvalidTag { what: "validation code", tag }),
        })
    }
}

impl fmt::Display for ValidationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A hash-chained batch of transactions.
///
/// `hash` covers the number, previous hash, data hash and the validity
/// flags; `data_hash` covers the full canonical encoding of every
/// transaction in order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Block {
    pub number: u64,
    pub prev_hash: Digest,
    pub data_hash: Digest,
    pub transactions: Vec<Transaction>,
    pub validity: Vec<ValidationCode>,
    pub hash: Digest,
}

impl Block {
    /// Builds a block and fills in both hashes.
    pub fn seal(number: u64, prev_hash: Digest, transactions: Vec<Transaction>, validity: Vec<ValidationCode>) -> Self {
        assert_eq!(transactions.len(), validity.len(), "one validity flag per transaction");
        let data_hash = compute_data_hash(&transactions);
        let hash = compute_block_hash(number, &prev_hash, &data_hash, &validity);
        Block {
            number,
            prev_hash,
            data_hash,
            transactions,
            validity,
            hash,
        }
    }

    pub fn recompute_data_hash(&self) -> Digest {
        compute_data_hash(&self.transactions)
    }

    pub fn recompute_hash(&self) -> Digest {
        compute_block_hash(self.number, &self.prev_hash, &self.data_hash, &self.validity)
    }

    pub fn entries(&self) -> impl Iterator<Item = (u32, &Transaction, ValidationCode)> {
        self.transactions
            .iter()
            .zip(self.validity.iter().copied())
            .enumerate()
            .map(|(i, (tx, code))| (i as u32, tx, code))
    }

    pub fn valid_transactions(&self) -> impl Iterator<Item = (u32, &Transaction)> {
        self.entries().filter(|(_, _, c)| c.is_valid()).map(|(i, tx, _)| (i, tx))
    }
}

pub fn compute_data_hash(transactions: &[Transaction]) -> Digest {
    let mut h = Hasher::new(b"ehr:block-data:v1\0");
    h.update(&(transactions.len() as u64).to_be_bytes());
    for tx in transactions {
        let bytes = tx.to_canonical_bytes();
        h.update(&(bytes.len() as u64).to_be_bytes()).update(&bytes);
    }
    h.finish()
}

pub fn compute_block_hash(number: u64, prev_hash: &Digest, data_hash: &Digest, validity: &[ValidationCode]) -> Digest {
    let mut h = Hasher::new(b"ehr:block:v1\0");
    h.update(&number.to_be_bytes())
        .update(prev_hash.as_bytes())
        .update(data_hash.as_bytes())
        .update(&(validity.len() as u64).to_be_bytes());
    for code in validity {
        h.update(&[code.tag()]);
    }
    h.finish()
}

impl Canonical for Block {
    fn encode(&self, enc: &mut Encoder) {
        enc.put_u64(self.number)
            .put_digest(&self.prev_hash)
            .put_digest(&self.data_hash)
            .put_len(self.transactions.len());
        for tx in &self.transactions {
            enc.put_bytes(&tx.to_canonical_bytes());
        }
        enc.put_len(self.validity.len());
        for code in &self.validity {
            enc.put_u8(code.tag());
        }
        enc.put_digest(&self.hash);
    }

    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        let number = dec.u64()?;
        let prev_hash = dec.digest()?;
        let data_hash = dec.digest()?;
        let n = dec.count()?;
        let mut transactions = Vec::with_capacity(n);
        for _ in 0..n {
            let raw = dec.bytes()?;
            transactions.push(Transaction::from_canonical_bytes(raw)?);
        }
        let m = dec.count()?;
        if m != n {
            return Err(DecodeError::Invalid {
                what: "validity flags",
                reason: format!("{m} flags for {n} transactions"),
            });
        }
        let validity = (0..m)
            .map(|_| dec.u8().and_then(ValidationCode::from_tag))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Block {
            number,
            prev_hash,
            data_hash,
            transactions,
            validity,
            hash: dec.digest()?,
        })
    }
}
