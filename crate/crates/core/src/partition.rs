// SPDX-License-Identifier: Apache-2.0

//! Sample-based range partitioning of prefix codes.
//!
//! `per × n` suffix positions are drawn uniformly over every `(read, offset)`
//! pair, their codes sorted, and every `per`-th code becomes a boundary.
//! Range `i` covers `[boundaries[i-1], boundaries[i])`, so concatenating
//! reducer outputs in partition order keeps the global order.

use std::io::{self, BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::encoding::{encode_prefix_unchecked, PrefixCode};
use crate::store::Read;

pub const DEFAULT_SAMPLES_PER_PARTITION: usize = 10_000;

#[derive(Debug, Error)]
pub enum PartitionError {
    #[error("cannot sample from empty input")]
    EmptyInput,
    #[error("partition count and samples per partition must be at least 1")]
    ZeroCount,
    #[error("{samples} samples cannot be split evenly into {partitions} partitions")]
    Uneven { samples: usize, partitions: usize },
    #[error("partition table line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionTable {
    boundaries: Vec<PrefixCode>,
}

impl PartitionTable {
    pub fn single() -> Self {
        Self { boundaries: Vec::new() }
    }

    pub fn from_boundaries(mut boundaries: Vec<PrefixCode>) -> Self {
        boundaries.sort_unstable();
        Self { boundaries }
    }

    pub fn boundaries(&self) -> &[PrefixCode] {
        &self.boundaries
    }

    pub fn partitions(&self) -> usize {
        self.boundaries.len() + 1
    }

    /// Smallest `i` with `code < boundaries[i]`, or the last partition.
    pub fn partition_of(&self, code: PrefixCode) -> usize {
        self.boundaries.partition_point(|&b| b <= code)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        for b in &self.boundaries {
            writeln!(w, "{b}")?;
        }
        w.flush()
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self, PartitionError> {
        let mut boundaries = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let code = line.parse::<u64>().map_err(|e| PartitionError::Parse {
                line: i + 1,
                msg: e.to_string(),
            })?;
            if boundaries.last().is_some_and(|&PrefixCode(prev)| prev > code) {
                return Err(PartitionError::Parse {
                    line: i + 1,
                    msg: "boundaries must be non-decreasing".into(),
                });
            }
            boundaries.push(PrefixCode(code));
        }
        Ok(Self { boundaries })
    }
}

/// Draws `per × n` prefix codes at uniformly random suffix positions.
pub fn sample_suffix_codes(
    reads: &[Read],
    partitions: usize,
    per: usize,
    prefix_len: usize,
    seed: u64,
) -> Result<Vec<PrefixCode>, PartitionError> {
    if partitions == 0 || per == 0 {
        return Err(PartitionError::ZeroCount);
    }
    // Cumulative suffix counts; reads are never empty so this is strictly increasing.
    let mut ends = Vec::with_capacity(reads.len());
    let mut total = 0u64;
    for r in reads {
        total += r.len() as u64;
        ends.push(total);
    }
    if total == 0 {
        return Err(PartitionError::EmptyInput);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = partitions * per;
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let pos = rng.gen_range(0..total);
        let read_idx = ends.partition_point(|&e| e <= pos);
        let start = ends[read_idx] - reads[read_idx].len() as u64;
        let offset = (pos - start) as usize;
        samples.push(encode_prefix_unchecked(&reads[read_idx].text()[offset..], prefix_len));
    }
    Ok(samples)
}

/// Sorts the samples and keeps ranks `per, 2·per, …, (n-1)·per` (1-based).
pub fn build_partition_table(
    mut samples: Vec<PrefixCode>,
    partitions: usize,
) -> Result<PartitionTable, PartitionError> {
    if partitions == 0 {
        return Err(PartitionError::ZeroCount);
    }
    if samples.is_empty() || samples.len() % partitions != 0 {
        return Err(PartitionError::Uneven {
            samples: samples.len(),
            partitions,
        });
    }
    let per = samples.len() / partitions;
    samples.sort_unstable();
    let boundaries = (1..partitions).map(|k| samples[k * per - 1]).collect();
    Ok(PartitionTable { boundaries })
}
