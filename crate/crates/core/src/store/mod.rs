// SPDX-License-Identifier: Apache-2.0

//! Sharded in-memory read store.
//!
//! Reads are kept once, keyed by sequence number, on shard `seq % shard_count`.
//! The `MGETSUFFIX` command slices stored reads server-side so a reducer pulls
//! only suffix bytes over the wire. Framing lives in [`protocol`], the TCP
//! server in [`server`], and the batching client in [`client`].

pub mod client;
pub mod protocol;
pub mod server;

use std::fmt;
use std::io;

use thiserror::Error;

pub use client::{ShardClient, StoreClient};
pub use protocol::{MPutAck, SuffixSlot};
pub use server::{EmbeddedStore, Shard, ShardServer, ShardStats};

/// Longest accepted read, including the trailing `$`.
pub const MAX_READ_LEN: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReadError {
    #[error("read is empty")]
    Empty,
    #[error("read has {0} symbols including '$'; at most 1000 are supported")]
    TooLong(usize),
    #[error("invalid symbol {symbol:?} at position {position}")]
    InvalidSymbol { symbol: char, position: usize },
    #[error("read must end with exactly one '$'")]
    Terminator,
}

/// A `$`-terminated DNA read with its global sequence number.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Read {
    seq: u64,
    text: Box<[u8]>,
}

impl Read {
    /// Validates `text`: symbols from `ACGT` followed by exactly one `$`.
    pub fn new(seq: u64, text: impl Into<Vec<u8>>) -> Result<Self, ReadError> {
        let text = text.into();
        validate_read(&text)?;
        Ok(Self {
            seq,
            text: text.into_boxed_slice(),
        })
    }

    /// Like [`Read::new`] but appends the terminator when it is missing.
    pub fn terminated(seq: u64, text: impl Into<Vec<u8>>) -> Result<Self, ReadError> {
        let mut text = text.into();
        if text.last() != Some(&b'$') {
            text.push(b'$');
        }
        Self::new(seq, text)
    }

    pub fn seq(&self) -> u64 {
        self.seq
    }

    pub fn text(&self) -> &[u8] {
        &self.text
    }

    /// Terminated length, which is also the number of suffixes.
    pub fn len(&self) -> usize {
        self.text.len()
    }

    pub fn is_empty(&self) -> bool {
        self.text.is_empty()
    }

    pub fn suffix(&self, offset: usize) -> Option<&[u8]> {
        self.text.get(offset..).filter(|s| !s.is_empty())
    }
}

impl fmt::Debug for Read {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Read({}, {:?})", self.seq, String::from_utf8_lossy(&self.text))
    }
}

pub fn validate_read(text: &[u8]) -> Result<(), ReadError> {
    let Some((&last, body)) = text.split_last() else {
        return Err(ReadError::Empty);
    };
    if text.len() > MAX_READ_LEN {
        return Err(ReadError::TooLong(text.len()));
    }
    if last != b'$' {
        return Err(ReadError::Terminator);
    }
    for (position, &symbol) in body.iter().enumerate() {
        match symbol {
            b'A' | b'C' | b'G' | b'T' => {}
            b'$' => return Err(ReadError::Terminator),
            _ => {
                return Err(ReadError::InvalidSymbol {
                    symbol: symbol as char,
                    position,
                })
            }
        }
    }
    Ok(())
}

pub fn shard_of(seq: u64, shard_count: usize) -> usize {
    debug_assert!(shard_count >= 1);
    (seq % shard_count as u64) as usize
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("transport error talking to {endpoint}: {source}")]
    Transport {
        endpoint: String,
        #[source]
        source: io::Error,
    },
    #[error("protocol error: {0}")]
    Protocol(#[from] protocol::ProtocolError),
    #[error("read {0} not found")]
    NotFound(u64),
    #[error("server rejected request: {0}")]
    Rejected(String),
    #[error("no store endpoints configured")]
    NoEndpoints,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shard_examples() {
        assert_eq!(shard_of(17, 16), 1);
        assert_eq!(shard_of(0, 16), 0);
        assert_eq!(shard_of(32, 16), 0);
    }

    #[test]
    fn read_validation() {
        assert!(Read::new(0, "ACGT$").is_ok());
        assert_eq!(Read::new(0, "").unwrap_err(), ReadError::Empty);
        assert_eq!(Read::new(0, "ACGT").unwrap_err(), ReadError::Terminator);
        assert_eq!(Read::new(0, "AC$T$").unwrap_err(), ReadError::Terminator);
        assert!(matches!(
            Read::new(0, "ACNT$"),
            Err(ReadError::InvalidSymbol { symbol: 'N', position: 2 })
        ));
        assert_eq!(Read::terminated(3, "ACGT").unwrap().text(), b"ACGT$");
        assert!(Read::new(0, "$").is_ok());
        let long = "A".repeat(1000) + "$";
        assert_eq!(Read::new(0, long).unwrap_err(), ReadError::TooLong(1001));
        assert!(Read::new(0, "A".repeat(999) + "$").is_ok());
    }

    #[test]
    fn suffix_slicing() {
        let r = Read::new(10, "ACGT$").unwrap();
        assert_eq!(r.suffix(2), Some(&b"GT$"[..]));
        assert_eq!(r.suffix(4), Some(&b"$"[..]));
        assert_eq!(r.suffix(5), None);
    }
}
