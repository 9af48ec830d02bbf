// SPDX-License-Identifier: Apache-2.0

//! Brute-force suffix array and synthetic reads.
//!
//! [`naive_sa`] enumerates every suffix of every read and comparison-sorts
//! them. It is deliberately the slowest correct thing, and the reference the
//! pipeline is checked against.

use std::collections::HashSet;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::encoding::{SuffixIndex, OFFSET_RADIX};
use crate::store::Read;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("duplicate sequence number {0}")]
    DuplicateSeq(u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleEntry {
    pub suffix: Vec<u8>,
    pub index: SuffixIndex,
}

/// Sorts all suffixes of the given texts by byte order, ties by packed index.
///
/// With `$` as terminator byte order is the suffix-array order: `$` sorts
/// below every letter and occurs only at the end of a text.
pub fn sort_suffixes<'a, I>(texts: I) -> Vec<(&'a [u8], SuffixIndex)>
where
    I: IntoIterator<Item = (u64, &'a [u8])>,
{
    let mut all = Vec::new();
    for (seq, text) in texts {
        for off in 0..text.len() {
            all.push((&text[off..], SuffixIndex(seq * OFFSET_RADIX + off as u64)));
        }
    }
    all.sort_unstable();
    all
}

/// Suffix array of one text: start offsets in sorted suffix order.
pub fn text_suffix_array(text: &[u8]) -> Vec<usize> {
    sort_suffixes([(0, text)])
        .into_iter()
        .map(|(_, idx)| idx.offset())
        .collect()
}

fn check_unique(reads: &[Read]) -> Result<(), OracleError> {
    let mut seen = HashSet::with_capacity(reads.len());
    for r in reads {
        if !seen.insert(r.seq()) {
            return Err(OracleError::DuplicateSeq(r.seq()));
        }
    }
    Ok(())
}

pub fn naive_sa(reads: &[Read]) -> Result<Vec<OracleEntry>, OracleError> {
    check_unique(reads)?;
    Ok(sort_suffixes(reads.iter().map(|r| (r.seq(), r.text())))
        .into_iter()
        .map(|(s, index)| OracleEntry {
            suffix: s.to_vec(),
            index,
        })
        .collect())
}

/// Writes the oracle's answer in the pipeline's output line format.
pub fn write_naive_sa<W: Write>(reads: &[Read], indexes_only: bool, mut w: W) -> io::Result<()> {
    check_unique(reads).map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
    for (suffix, idx) in sort_suffixes(reads.iter().map(|r| (r.seq(), r.text()))) {
        crate::pipeline::write_output_line(&mut w, suffix, idx, indexes_only)?;
    }
    w.flush()
}

/// Uniform random `ACGT` reads of a fixed length, `seq = 0..count`.
pub fn gen_reads(count: usize, length: usize, seed: u64) -> Vec<Read> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count as u64)
        .map(|seq| {
            let mut text: Vec<u8> = (0..length).map(|_| b"ACGT"[rng.gen_range(0..4)]).collect();
            text.push(b'$');
            Read::new(seq, text).expect("generated read is valid")
        })
        .collect()
}

/// Second file of a paired-end set: each read reversed, numbered after the first file.
pub fn paired_reads(first: &[Read]) -> Vec<Read> {
    let count = first.len() as u64;
    first
        .iter()
        .map(|r| {
            let body = &r.text()[..r.len() - 1];
            let mut text: Vec<u8> = body.iter().rev().copied().collect();
            text.push(b'$');
            Read::new(r.seq() + count, text).expect("reversed read is valid")
        })
        .collect()
}

/// Writes reads as `seq<TAB>read` lines, without the terminator.
pub fn write_reads_tsv<W: Write>(reads: &[Read], mut w: W) -> io::Result<()> {
    for r in reads {
        write!(w, "{}\t", r.seq())?;
        w.write_all(&r.text()[..r.len() - 1])?;
        w.write_all(b"\n")?;
    }
    w.flush()
}
