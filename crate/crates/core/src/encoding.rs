// SPDX-License-Identifier: Apache-2.0

//! Numeric identities for suffixes.
//!
//! A suffix is addressed by a [`SuffixIndex`], the read's sequence number and
//! the suffix offset packed into one integer (`seq * 1000 + offset`). Its sort
//! key during the shuffle is a [`PrefixCode`], the base-5 value of its first
//! `L` symbols with `$=0, A=1, C=2, G=3, T=4`. Positions past the end of the
//! suffix are padded with `0`, so the code order agrees with lexicographic
//! order where `$` is the least symbol.

use std::fmt;

use thiserror::Error;

/// Width of the offset field in a packed index.
pub const OFFSET_RADIX: u64 = 1000;

/// Longest prefix that still fits a `u64` code.
pub const MAX_PREFIX_LEN: usize = 27;

/// Default prefix length used for shuffle keys.
pub const DEFAULT_PREFIX_LEN: usize = 23;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodingError {
    #[error("offset {0} out of range (reads are limited to 1000 symbols including '$')")]
    OffsetOutOfRange(u64),
    #[error("sequence number {0} too large to pack")]
    SeqOutOfRange(u64),
    #[error("prefix length {0} out of range 1..=27")]
    PrefixLenOutOfRange(usize),
    #[error("invalid symbol {symbol:?} at position {position}")]
    InvalidSymbol { symbol: char, position: usize },
    #[error("'$' must appear only as the final symbol (found at position {0})")]
    MisplacedTerminator(usize),
    #[error("empty suffix")]
    Empty,
}

/// Packed `seq * 1000 + offset` identity of one suffix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SuffixIndex(pub u64);

impl SuffixIndex {
    pub fn seq(self) -> u64 {
        self.0 / OFFSET_RADIX
    }

    pub fn offset(self) -> usize {
        (self.0 % OFFSET_RADIX) as usize
    }
}

impl fmt::Display for SuffixIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

pub fn pack_index(seq: u64, offset: u64) -> Result<SuffixIndex, EncodingError> {
    if offset >= OFFSET_RADIX {
        return Err(EncodingError::OffsetOutOfRange(offset));
    }
    seq.checked_mul(OFFSET_RADIX)
        .and_then(|base| base.checked_add(OFFSET_RADIX - 1))
        .ok_or(EncodingError::SeqOutOfRange(seq))?;
    Ok(SuffixIndex(seq * OFFSET_RADIX + offset))
}

pub fn unpack_index(idx: SuffixIndex) -> (u64, u64) {
    (idx.0 / OFFSET_RADIX, idx.0 % OFFSET_RADIX)
}

/// Base-5 numeric prefix of a suffix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct PrefixCode(pub u64);

impl PrefixCode {
    /// True when the encoded prefix reaches the terminator, i.e. the whole
    /// suffix is contained in the code. Every suffix sharing such a code has
    /// the same text.
    pub fn is_complete(self, prefix_len: usize) -> bool {
        let mut v = self.0;
        for _ in 0..prefix_len {
            if v % 5 == 0 {
                return true;
            }
            v /= 5;
        }
        false
    }

    /// Digits most significant first.
    pub fn digits(self, prefix_len: usize) -> Vec<u8> {
        let mut out = vec![0u8; prefix_len];
        let mut v = self.0;
        for d in out.iter_mut().rev() {
            *d = (v % 5) as u8;
            v /= 5;
        }
        out
    }
}

impl fmt::Display for PrefixCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Digit value of a nucleotide symbol.
#[inline]
pub fn symbol_digit(symbol: u8) -> Option<u64> {
    match symbol {
        b'$' => Some(0),
        b'A' => Some(1),
        b'C' => Some(2),
        b'G' => Some(3),
        b'T' => Some(4),
        _ => None,
    }
}

/// Checks a suffix against the alphabet and the terminator rule.
pub fn validate_suffix(suffix: &[u8]) -> Result<(), EncodingError> {
    if suffix.is_empty() {
        return Err(EncodingError::Empty);
    }
    for (position, &symbol) in suffix.iter().enumerate() {
        match symbol_digit(symbol) {
            None => {
                return Err(EncodingError::InvalidSymbol {
                    symbol: symbol as char,
                    position,
                })
            }
            Some(0) if position + 1 != suffix.len() => {
                return Err(EncodingError::MisplacedTerminator(position))
            }
            _ => {}
        }
    }
    Ok(())
}

pub fn encode_prefix(suffix: &[u8], prefix_len: usize) -> Result<PrefixCode, EncodingError> {
    if prefix_len == 0 || prefix_len > MAX_PREFIX_LEN {
        return Err(EncodingError::PrefixLenOutOfRange(prefix_len));
    }
    validate_suffix(suffix)?;
    Ok(encode_prefix_unchecked(suffix, prefix_len))
}

/// Encoding without validation, for text that already passed ingestion.
/// Unknown symbols encode as `0`.
#[inline]
pub fn encode_prefix_unchecked(suffix: &[u8], prefix_len: usize) -> PrefixCode {
    debug_assert!((1..=MAX_PREFIX_LEN).contains(&prefix_len));
    let mut value = 0u64;
    for i in 0..prefix_len {
        let digit = suffix.get(i).and_then(|&s| symbol_digit(s)).unwrap_or(0);
        value = value * 5 + digit;
    }
    PrefixCode(value)
}

/// Largest prefix length whose maximum code `5^L - 1` fits in `key_bits`
/// unsigned bits (31 for a signed 32-bit key, 63 for a signed 64-bit key).
pub fn max_prefix_length(key_bits: u32) -> usize {
    let limit: u128 = (1u128 << key_bits.min(127)) - 1;
    let mut len = 0;
    let mut power: u128 = 5;
    while power - 1 <= limit {
        len += 1;
        match power.checked_mul(5) {
            Some(p) => power = p,
            None => break,
        }
    }
    len
}
