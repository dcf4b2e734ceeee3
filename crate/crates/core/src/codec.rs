//! Canonical binary encoding.
//!
//! Every signed or hashed structure is encoded as a fixed sequence of
//! fields: integers are big-endian, variable-length values carry a `u32`
//! length prefix. Decoding is strict: for any input that decodes
//! successfully, re-encoding yields the identical bytes. The block log and
//! tamper detection rely on that property.

use thiserror::Error;

use crate::crypto::{Digest, PublicKey, Signature, DIGEST_LEN, PUBLIC_KEY_LEN, SIGNATURE_LEN};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("unexpected end of input")]
    UnexpectedEof,
    #[error("{0} bytes of trailing data")]
    TrailingBytes(usize),
    #[error("invalid utf-8 in {0}")]
    InvalidUtf8(&'static str),
    #[error("invalid {what} tag {tag}")]
    InvalidTag { what: &'static str, tag: u8 },
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },
}

#[derive(Default, Debug, Clone)]
pub struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_domain(domain: &[u8]) -> Self {
        let mut enc = Self::new();
        enc.put_raw(domain);
        enc
    }

    pub fn put_u8(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }

    pub fn put_u32(&mut self, v: u32) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn put_u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn put_len(&mut self, len: usize) -> &mut Self {
        let len = u32::try_from(len).expect("field exceeds u32 length prefix");
        self.put_u32(len)
    }

    pub fn put_bytes(&mut self, v: &[u8]) -> &mut Self {
        self.put_len(v.len());
        self.buf.extend_from_slice(v);
        self
    }

    pub fn put_str(&mut self, v: &str) -> &mut Self {
        self.put_bytes(v.as_bytes())
    }

    pub fn put_raw(&mut self, v: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(v);
        self
    }

    pub fn put_digest(&mut self, d: &Digest) -> &mut Self {
        self.put_raw(&d.0)
    }

    pub fn put_public_key(&mut self, k: &PublicKey) -> &mut Self {
        self.put_raw(&k.0)
    }

    pub fn put_signature(&mut self, s: &Signature) -> &mut Self {
        self.put_raw(&s.0)
    }

    pub fn put_option<T>(&mut self, v: Option<&T>, f: impl FnOnce(&mut Self, &T)) -> &mut Self {
        match v {
            None => {
                self.put_u8(0);
            }
            Some(v) => {
                self.put_u8(1);
                f(self, v);
            }
        }
        self
    }

    pub fn put_strs(&mut self, v: &[String]) -> &mut Self {
        self.put_len(v.len());
        for s in v {
            self.put_str(s);
        }
        self
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.buf
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }
}

#[derive(Debug, Clone)]
pub struct Decoder<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Decoder { buf, pos: 0 }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        if self.remaining() < n {
            return Err(DecodeError::UnexpectedEof);
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn expect_raw(&mut self, expected: &[u8], what: &'static str) -> Result<(), DecodeError> {
        let got = self.take(expected.len())?;
        if got != expected {
            return Err(DecodeError::Invalid {
                what,
                reason: "domain prefix mismatch".into(),
            });
        }
        Ok(())
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], DecodeError> {
        let mut out = [0u8; N];
        out.copy_from_slice(self.take(N)?);
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32, DecodeError> {
        Ok(u32::from_be_bytes(self.array()?))
    }

    pub fn u64(&mut self) -> Result<u64, DecodeError> {
        Ok(u64::from_be_bytes(self.array()?))
    }

    pub fn read_len(&mut self) -> Result<usize, DecodeError> {
        let n = self.u32()? as usize;
        // a length can never exceed what is left; rejecting early keeps
        // corrupted prefixes from driving huge allocations
        if n > self.remaining() {
            return Err(DecodeError::UnexpectedEof);
        }
        Ok(n)
    }

    /// Element count for a list whose elements occupy at least one byte each.
    pub fn count(&mut self) -> Result<usize, DecodeError> {
        self.read_len()
    }

    pub fn bytes(&mut self) -> Result<&'a [u8], DecodeError> {
        let n = self.read_len()?;
        self.take(n)
    }

    pub fn string(&mut self, what: &'static str) -> Result<String, DecodeError> {
        let raw = self.bytes()?;
        std::str::from_utf8(raw)
            .map(str::to_owned)
            .map_err(|_| DecodeError::InvalidUtf8(what))
    }

    pub fn strings(&mut self, what: &'static str) -> Result<Vec<String>, DecodeError> {
        let n = self.count()?;
        (0..n).map(|_| self.string(what)).collect()
    }

    pub fn digest(&mut self) -> Result<Digest, DecodeError> {
        Ok(Digest(self.array::<DIGEST_LEN>()?))
    }

    pub fn public_key(&mut self) -> Result<PublicKey, DecodeError> {
        Ok(PublicKey(self.array::<PUBLIC_KEY_LEN>()?))
    }

    pub fn signature(&mut self) -> Result<Signature, DecodeError> {
        Ok(Signature(self.array::<SIGNATURE_LEN>()?))
    }

    pub fn option<T>(
        &mut self,
        what: &'static str,
        f: impl FnOnce(&mut Self) -> Result<T, DecodeError>,
    ) -> Result<Option<T>, DecodeError> {
        match self.u8()? {
            0 => Ok(None),
            1 => f(self).map(Some),
            tag => Err(DecodeError::InvalidTag { what, tag }),
        }
    }

    pub fn finish(self) -> Result<(), DecodeError> {
        match self.remaining() {
            0 => Ok(()),
            n => Err(DecodeError::TrailingBytes(n)),
        }
    }
}

/// Types with a canonical byte encoding.
pub trait Canonical: Sized {
    fn encode(&self, enc: &mut Encoder);
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError>;

    fn to_canonical_bytes(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        self.encode(&mut enc);
        enc.into_bytes()
    }

    fn from_canonical_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut dec = Decoder::new(bytes);
        let value = Self::decode(&mut dec)?;
        dec.finish()?;
        Ok(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primitives_round_trip() {
        let mut enc = Encoder::new();
        enc.put_u8(7).put_u64(42).put_str("héllo").put_strs(&["a".into(), "".into()]);
        enc.put_option(Some(&9u64), |e, v| {
            e.put_u64(*v);
        });
        let bytes = enc.into_bytes();

        let mut dec = Decoder::new(&bytes);
        assert_eq!(dec.u8().unwrap(), 7);
        assert_eq!(dec.u64().unwrap(), 42);
        assert_eq!(dec.string("s").unwrap(), "héllo");
        assert_eq!(dec.strings("s").unwrap(), vec!["a".to_string(), String::new()]);
        assert_eq!(dec.option("o", |d| d.u64()).unwrap(), Some(9));
        dec.finish().unwrap();
    }

    #[test]
    fn rejects_oversized_length_prefix() {
        let bytes = [0u8, 0, 0, 9, b'a'];
        let mut dec = Decoder::new(&bytes);
        assert_eq!(dec.bytes(), Err(DecodeError::UnexpectedEof));
    }

    #[test]
    fn rejects_bad_option_tag() {
        let bytes = [2u8];
        let mut dec = Decoder::new(&bytes);
        assert!(matches!(
            dec.option("opt", |d| d.u8()),
            Err(DecodeError::InvalidTag { tag: 2, .. })
        ));
    }

    #[test]
    fn trailing_bytes_are_an_error() {
        let dec = Decoder::new(&[1, 2]);
        assert_eq!(dec.finish(), Err(DecodeError::TrailingBytes(2)));
    }
}
