// SPDX-License-Identifier: Apache-2.0

//! Map side: load the split's reads into the store, emit one record per
//! suffix, spill sorted buffers, and merge spills into one partitioned file.

use std::path::Path;

use crate::encoding::{encode_prefix_unchecked, SuffixIndex, OFFSET_RADIX};
use crate::footprint::FootprintCounters;
use crate::partition::PartitionTable;
use crate::store::{Read, StoreClient};

use super::config::PipelineConfig;
use super::record::{CodeRecord, ShuffleRecord, TextRecord};
use super::runs::{merge_runs, reduce_to_fan_in, RunFile, RunWriter};
use super::{PipelineError, Phase};

/// Reads per MPUT frame.
const PUT_CHUNK: usize = 8192;

#[derive(Debug)]
pub struct MapOutput {
    pub run: RunFile,
    pub spills: usize,
    pub records: u64,
}

/// Pushes a split's reads to their shards, grouped per shard.
pub fn load_store(
    split: &[Read],
    endpoints: &[String],
    counters: &FootprintCounters,
) -> Result<(), PipelineError> {
    let mut client = StoreClient::connect(endpoints)?;
    for chunk in split.chunks(PUT_CHUNK) {
        let ack = client.mput_reads(chunk)?;
        if !ack.rejected.is_empty() {
            let seqs: Vec<u64> = ack.rejected.iter().map(|&p| chunk[p as usize].seq()).collect();
            return Err(PipelineError::StoreRejected(seqs));
        }
        counters
            .store
            .add_put_store(chunk.iter().map(|r| r.len() as u64).sum());
    }
    Ok(())
}

pub trait Emit: ShuffleRecord {
    fn emit(read: &Read, offset: usize, prefix_len: usize) -> Self;
}

impl Emit for CodeRecord {
    #[inline]
    fn emit(read: &Read, offset: usize, prefix_len: usize) -> Self {
        CodeRecord {
            code: encode_prefix_unchecked(&read.text()[offset..], prefix_len),
            index: SuffixIndex(read.seq() * OFFSET_RADIX + offset as u64),
        }
    }
}

impl Emit for TextRecord {
    #[inline]
    fn emit(read: &Read, offset: usize, _prefix_len: usize) -> Self {
        TextRecord {
            text: read.text()[offset..].into(),
            index: SuffixIndex(read.seq() * OFFSET_RADIX + offset as u64),
        }
    }
}

struct SortBuffer<R> {
    items: Vec<(u32, R)>,
    bytes: u64,
}

pub fn run_mapper<R: Emit>(
    id: usize,
    split: &[Read],
    cfg: &PipelineConfig,
    table: &PartitionTable,
    work_dir: &Path,
    counters: &FootprintCounters,
) -> Result<MapOutput, PipelineError> {
    let io = |e| PipelineError::io(Phase::Map, e);
    let partitions = table.partitions();
    let threshold = cfg.spill_threshold();
    let mut buf = SortBuffer::<R> {
        items: Vec::new(),
        bytes: 0,
    };
    let mut spills: Vec<RunFile> = Vec::new();
    let mut records = 0u64;

    let spill = |buf: &mut SortBuffer<R>, spills: &mut Vec<RunFile>| -> std::io::Result<()> {
        buf.items.sort_unstable();
        let path = work_dir.join(format!("map{id}-spill{}", spills.len()));
        let mut w = RunWriter::create(path)?;
        let mut items = buf.items.drain(..).peekable();
        for part in 0..partitions as u32 {
            while let Some((_, rec)) = items.next_if(|(p, _)| *p == part) {
                w.push(&rec)?;
            }
            w.end_segment();
        }
        let run = w.finish()?;
        counters.map.add_written_local(run.accounted());
        spills.push(run);
        buf.bytes = 0;
        Ok(())
    };

    for read in split {
        for offset in 0..read.len() {
            let rec = R::emit(read, offset, cfg.prefix_len);
            let part = table.partition_of(rec.prefix_code(cfg.prefix_len)) as u32;
            let len = rec.accounted_len();
            buf.bytes += len;
            records += 1;
            buf.items.push((part, rec));
            if buf.bytes >= threshold {
                spill(&mut buf, &mut spills).map_err(io)?;
            }
        }
    }
    if !buf.items.is_empty() || spills.is_empty() {
        spill(&mut buf, &mut spills).map_err(io)?;
    }
    let spill_count = spills.len();

    let run = if spills.len() == 1 {
        spills.pop().unwrap()
    } else {
        let name = format!("map{id}");
        let left = reduce_to_fan_in::<R>(
            spills,
            cfg.merge_factor,
            partitions,
            work_dir,
            &name,
            &counters.map,
        )
        .map_err(io)?;
        merge_runs::<R>(&left, partitions, work_dir.join(format!("{name}-out")), &counters.map)
            .map_err(io)?
    };
    debug_assert_eq!(run.records(), records);
    Ok(MapOutput {
        run,
        spills: spill_count,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::PrefixCode;

    fn config(buffer: u64) -> PipelineConfig {
        PipelineConfig {
            map_buffer_bytes: buffer,
            spill_fraction: 0.8,
            prefix_len: 4,
            ..Default::default()
        }
    }

    #[test]
    fn emits_every_suffix() {
        let read = Read::new(3, "AG$").unwrap();
        let recs: Vec<CodeRecord> = (0..3).map(|o| CodeRecord::emit(&read, o, 4)).collect();
        assert_eq!(recs[0].code, PrefixCode(125 + 3 * 25));
        assert_eq!(recs[1].code, PrefixCode(3 * 125));
        assert_eq!(recs[2].code, PrefixCode(0));
        assert_eq!(
            recs.iter().map(|r| r.index.0).collect::<Vec<_>>(),
            vec![3000, 3001, 3002]
        );
    }

    #[test]
    fn two_spills_then_one_merge() {
        // 8 records of 16 bytes = 128 bytes against a 100-byte buffer at 80%.
        let dir = tempfile::tempdir().unwrap();
        let reads = [Read::new(0, "ACGTAC$").unwrap(), Read::new(1, "$").unwrap()];
        let counters = FootprintCounters::new();
        let table = PartitionTable::single();
        let out =
            run_mapper::<CodeRecord>(0, &reads, &config(100), &table, dir.path(), &counters).unwrap();
        assert_eq!(out.spills, 2);
        assert_eq!(out.records, 8);
        let fp = counters.snapshot();
        assert_eq!(fp.map.bytes_written_local, 2 * 128);
        assert_eq!(fp.map.bytes_read_local, 128);
    }

    #[test]
    fn single_spill_is_not_merged() {
        let dir = tempfile::tempdir().unwrap();
        let reads = [Read::new(0, "AC$").unwrap()];
        let counters = FootprintCounters::new();
        let table = PartitionTable::from_boundaries(vec![PrefixCode(100)]);
        let out = run_mapper::<CodeRecord>(0, &reads, &config(1 << 20), &table, dir.path(), &counters)
            .unwrap();
        assert_eq!(out.spills, 1);
        assert_eq!(out.run.segments.len(), 2);
        let fp = counters.snapshot();
        assert_eq!((fp.map.bytes_written_local, fp.map.bytes_read_local), (48, 0));
    }
}
