// SPDX-License-Identifier: Apache-2.0

//! Intermediate key-value records.

use std::io::{self, BufRead, Write};

use crate::encoding::{encode_prefix_unchecked, PrefixCode, SuffixIndex};

/// A record that moves through spill, shuffle and merge.
///
/// `accounted_len` is what the footprint counters charge for it.
pub trait ShuffleRecord: Ord + Send + Sized + 'static {
    fn accounted_len(&self) -> u64;
    fn prefix_code(&self, prefix_len: usize) -> PrefixCode;
    fn encode<W: Write>(&self, w: &mut W) -> io::Result<()>;
    fn decode<R: BufRead>(r: &mut R) -> io::Result<Option<Self>>;
}

/// Indexed mode: prefix code key, packed index value. 16 bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct CodeRecord {
    pub code: PrefixCode,
    pub index: SuffixIndex,
}

pub const CODE_RECORD_LEN: u64 = 16;

impl ShuffleRecord for CodeRecord {
    #[inline]
    fn accounted_len(&self) -> u64 {
        CODE_RECORD_LEN
    }

    fn prefix_code(&self, _prefix_len: usize) -> PrefixCode {
        self.code
    }

    fn encode<W: Write>(&self, w: &mut W) -> io::Result<()> {
        let mut buf = [0u8; 16];
        buf[..8].copy_from_slice(&self.code.0.to_be_bytes());
        buf[8..].copy_from_slice(&self.index.0.to_be_bytes());
        w.write_all(&buf)
    }

    fn decode<R: BufRead>(r: &mut R) -> io::Result<Option<Self>> {
        if r.fill_buf()?.is_empty() {
            return Ok(None);
        }
        let mut buf = [0u8; 16];
        r.read_exact(&mut buf)?;
        Ok(Some(CodeRecord {
            code: PrefixCode(u64::from_be_bytes(buf[..8].try_into().unwrap())),
            index: SuffixIndex(u64::from_be_bytes(buf[8..].try_into().unwrap())),
        }))
    }
}

/// Materialized mode: the whole suffix is the key.
///
/// Accounted by suffix length; the index travels with it uncharged.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct TextRecord {
    pub text: Box<[u8]>,
    pub index: SuffixIndex,
}

impl ShuffleRecord for TextRecord {
    #[inline]
    fn accounted_len(&self) -> u64 {
        self.text.len() as u64
    }

    fn prefix_code(&self, prefix_len: usize) -> PrefixCode {
        encode_prefix_unchecked(&self.text, prefix_len)
    }

    fn encode<W: Write>(&self, w: &mut W) -> io::Result<()> {
        w.write_all(&self.index.0.to_be_bytes())?;
        w.write_all(&(self.text.len() as u16).to_be_bytes())?;
        w.write_all(&self.text)
    }

    fn decode<R: BufRead>(r: &mut R) -> io::Result<Option<Self>> {
        if r.fill_buf()?.is_empty() {
            return Ok(None);
        }
        let mut head = [0u8; 10];
        r.read_exact(&mut head)?;
        let index = SuffixIndex(u64::from_be_bytes(head[..8].try_into().unwrap()));
        let len = u16::from_be_bytes(head[8..].try_into().unwrap()) as usize;
        let mut text = vec![0u8; len];
        r.read_exact(&mut text)?;
        Ok(Some(TextRecord {
            text: text.into_boxed_slice(),
            index,
        }))
    }
}
