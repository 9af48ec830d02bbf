// SPDX-License-Identifier: Apache-2.0

//! Reduce side: fetch this partition's segments from every mapper, merge
//! them, then group equal prefix codes and resolve each batch of groups
//! with one suffix fetch per store shard.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};

use crate::encoding::{PrefixCode, SuffixIndex};
use crate::footprint::FootprintCounters;
use crate::store::{StoreClient, SuffixSlot};

use super::config::PipelineConfig;
use super::map::MapOutput;
use super::record::{CodeRecord, ShuffleRecord, TextRecord};
use super::runs::{merge_into, reduce_to_fan_in, RunFile, RunWriter};
use super::{write_output_line, Phase, PipelineError};

#[derive(Debug)]
pub struct ShuffleOutput {
    pub runs: Vec<RunFile>,
    pub fetched_runs: usize,
    pub records: u64,
}

/// Copies partition `part` of every map output into local runs and merges
/// them down to at most `merge_factor` runs.
pub fn shuffle_partition<R: ShuffleRecord>(
    part: usize,
    maps: &[MapOutput],
    cfg: &PipelineConfig,
    work_dir: &Path,
    counters: &FootprintCounters,
) -> Result<ShuffleOutput, PipelineError> {
    let io = |e| PipelineError::io(Phase::Shuffle, e);
    let mut runs = Vec::new();
    let mut records = 0;
    for (m, out) in maps.iter().enumerate() {
        let seg = out.run.segments[part];
        if seg.records == 0 {
            continue;
        }
        let mut w = RunWriter::create(work_dir.join(format!("red{part}-fetch{m}"))).map_err(io)?;
        w.copy_segment(&out.run, part).map_err(io)?;
        w.end_segment();
        runs.push(w.finish().map_err(io)?);
        counters.shuffle.add_shuffled(seg.accounted);
        counters.reduce.add_written_local(seg.accounted);
        records += seg.records;
    }
    let fetched_runs = runs.len();
    let runs = reduce_to_fan_in::<R>(
        runs,
        cfg.merge_factor,
        1,
        work_dir,
        &format!("red{part}"),
        &counters.reduce,
    )
    .map_err(io)?;
    Ok(ShuffleOutput {
        runs,
        fetched_runs,
        records,
    })
}

#[derive(Debug)]
pub struct ReduceOutput {
    pub path: PathBuf,
    pub lines: u64,
    pub batches: u64,
    pub largest_group: u64,
}

fn open_sources<R: ShuffleRecord>(
    runs: &[RunFile],
    counters: &FootprintCounters,
) -> io::Result<Vec<super::runs::SegmentIter<R>>> {
    counters
        .reduce
        .add_read_local(runs.iter().map(RunFile::accounted).sum());
    runs.iter().map(|r| r.open_segment::<R>(0)).collect()
}

/// Final merge straight into the output: the suffix text is already the key.
pub fn reduce_materialized(
    runs: &[RunFile],
    cfg: &PipelineConfig,
    out_path: PathBuf,
    counters: &FootprintCounters,
) -> Result<ReduceOutput, PipelineError> {
    let io = |e| PipelineError::io(Phase::Reduce, e);
    let mut out = BufWriter::with_capacity(1 << 16, File::create(&out_path).map_err(io)?);
    let sources = open_sources::<TextRecord>(runs, counters).map_err(io)?;
    let mut lines = 0;
    merge_into::<TextRecord, io::Error, _>(sources, |rec| {
        let n = write_output_line(&mut out, &rec.text, rec.index, cfg.indexes_only)?;
        counters.output.add_output(n as u64);
        lines += 1;
        Ok(())
    })
    .map_err(io)?;
    out.flush().map_err(io)?;
    for r in runs {
        r.remove().map_err(io)?;
    }
    Ok(ReduceOutput {
        path: out_path,
        lines,
        batches: 0,
        largest_group: 0,
    })
}

pub fn reduce_indexed(
    runs: &[RunFile],
    cfg: &PipelineConfig,
    endpoints: &[String],
    out_path: PathBuf,
    counters: &FootprintCounters,
) -> Result<ReduceOutput, PipelineError> {
    let io = |e| PipelineError::io(Phase::Reduce, e);
    let out = BufWriter::with_capacity(1 << 16, File::create(&out_path).map_err(io)?);
    let client = if runs.is_empty() {
        None
    } else {
        Some(StoreClient::connect(endpoints)?)
    };
    let mut reducer = GroupingReducer {
        cfg,
        client,
        out,
        counters,
        groups: Vec::new(),
        members: Vec::new(),
        current: None,
        lines: 0,
        batches: 0,
        largest_group: 0,
    };
    let sources = open_sources::<CodeRecord>(runs, counters).map_err(io)?;
    merge_into::<CodeRecord, ReduceError, _>(sources, |rec| reducer.push(rec).map_err(ReduceError))
        .map_err(|e| e.0)?;
    reducer.finish()?;
    for r in runs {
        r.remove().map_err(io)?;
    }
    Ok(ReduceOutput {
        path: out_path,
        lines: reducer.lines,
        batches: reducer.batches,
        largest_group: reducer.largest_group,
    })
}

/// Lets run-read failures surface as reduce-phase errors.
struct ReduceError(PipelineError);

impl From<io::Error> for ReduceError {
    fn from(e: io::Error) -> Self {
        ReduceError(PipelineError::io(Phase::Reduce, e))
    }
}

/// Accumulates sorting groups until the batch holds at least `threshold`
/// suffixes, then resolves the whole batch.
struct GroupingReducer<'a, W> {
    cfg: &'a PipelineConfig,
    client: Option<StoreClient>,
    out: W,
    counters: &'a FootprintCounters,
    groups: Vec<(PrefixCode, Range<usize>)>,
    members: Vec<SuffixIndex>,
    current: Option<(PrefixCode, usize)>,
    lines: u64,
    batches: u64,
    largest_group: u64,
}

impl<W: Write> GroupingReducer<'_, W> {
    fn push(&mut self, rec: CodeRecord) -> Result<(), PipelineError> {
        match self.current {
            Some((code, _)) if code == rec.code => {}
            Some(_) => {
                self.close_group()?;
                self.current = Some((rec.code, self.members.len()));
            }
            None => self.current = Some((rec.code, self.members.len())),
        }
        self.members.push(rec.index);
        Ok(())
    }

    fn close_group(&mut self) -> Result<(), PipelineError> {
        let Some((code, start)) = self.current.take() else {
            return Ok(());
        };
        let size = (self.members.len() - start) as u64;
        self.largest_group = self.largest_group.max(size);
        if self.cfg.group_limit > 0 && size > self.cfg.group_limit {
            return Err(PipelineError::GroupOverflow {
                code: code.0,
                members: size,
                prefix_len: self.cfg.prefix_len,
            });
        }
        self.groups.push((code, start..self.members.len()));
        if self.members.len() as u64 >= self.cfg.threshold {
            self.flush()?;
        }
        Ok(())
    }

    fn finish(&mut self) -> Result<(), PipelineError> {
        self.close_group()?;
        self.flush()?;
        self.out
            .flush()
            .map_err(|e| PipelineError::io(Phase::Reduce, e))
    }

    fn flush(&mut self) -> Result<(), PipelineError> {
        if self.groups.is_empty() {
            return Ok(());
        }
        self.batches += 1;
        let prefix_len = self.cfg.prefix_len;
        let indexes_only = self.cfg.indexes_only;

        // Complete groups are identical texts; without text output they need no fetch.
        let mut wanted = Vec::with_capacity(self.members.len());
        let mut slot_of = vec![usize::MAX; self.members.len()];
        for (code, range) in &self.groups {
            if indexes_only && code.is_complete(prefix_len) {
                continue;
            }
            for i in range.clone() {
                slot_of[i] = wanted.len();
                wanted.push(self.members[i]);
            }
        }
        let slots = if wanted.is_empty() {
            Vec::new()
        } else {
            self.client
                .as_mut()
                .expect("store client for non-empty partition")
                .mget_suffix(&wanted)?
        };
        let mut bad = Vec::new();
        let mut got = 0u64;
        let texts: Vec<&[u8]> = slots
            .iter()
            .zip(&wanted)
            .map(|(slot, idx)| match slot {
                SuffixSlot::Found(t) => {
                    got += t.len() as u64;
                    t.as_slice()
                }
                _ => {
                    bad.push(*idx);
                    &[][..]
                }
            })
            .collect();
        if !bad.is_empty() {
            return Err(PipelineError::StoreCorruption(bad));
        }
        self.counters.store.add_got_store(got);

        let io = |e| PipelineError::io(Phase::Reduce, e);
        let mut order: Vec<(&[u8], SuffixIndex)> = Vec::new();
        for (code, range) in &self.groups {
            if code.is_complete(prefix_len) {
                // Equal texts, and the stream already orders them by index.
                for i in range.clone() {
                    let text = texts.get(slot_of[i]).copied().unwrap_or(&[]);
                    debug_assert!(indexes_only || crate::encoding::encode_prefix_unchecked(text, prefix_len) == *code);
                    let n = write_output_line(&mut self.out, text, self.members[i], indexes_only)
                        .map_err(io)?;
                    self.counters.output.add_output(n as u64);
                }
            } else {
                order.clear();
                order.extend(range.clone().map(|i| (texts[slot_of[i]], self.members[i])));
                if order.len() > 1 {
                    order.sort_unstable();
                }
                for &(text, idx) in &order {
                    debug_assert_eq!(crate::encoding::encode_prefix_unchecked(text, prefix_len), *code);
                    let n = write_output_line(&mut self.out, text, idx, indexes_only).map_err(io)?;
                    self.counters.output.add_output(n as u64);
                }
            }
            self.lines += range.len() as u64;
        }
        self.groups.clear();
        self.members.clear();
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{encode_prefix, pack_index};
    use crate::store::{EmbeddedStore, Read};

    fn reducer<'a>(
        cfg: &'a PipelineConfig,
        client: Option<StoreClient>,
        counters: &'a FootprintCounters,
    ) -> GroupingReducer<'a, Vec<u8>> {
        GroupingReducer {
            cfg,
            client,
            out: Vec::new(),
            counters,
            groups: Vec::new(),
            members: Vec::new(),
            current: None,
            lines: 0,
            batches: 0,
            largest_group: 0,
        }
    }

    fn store_with(reads: &[Read]) -> (EmbeddedStore, StoreClient) {
        let store = EmbeddedStore::spawn(2).unwrap();
        let mut client = StoreClient::connect(&store.endpoints()).unwrap();
        client.mput_reads(reads).unwrap();
        (store, client)
    }

    fn rec(text: &[u8], seq: u64, off: u64, l: usize) -> CodeRecord {
        CodeRecord {
            code: encode_prefix(text, l).unwrap(),
            index: pack_index(seq, off).unwrap(),
        }
    }

    #[test]
    fn accumulates_until_threshold() {
        let reads: Vec<Read> = (0..6).map(|s| Read::new(s, "ACGT$").unwrap()).collect();
        let (_store, client) = store_with(&reads);
        let cfg = PipelineConfig { threshold: 5, prefix_len: 2, ..Default::default() };
        let counters = FootprintCounters::new();
        let mut r = reducer(&cfg, Some(client), &counters);
        // Two groups of three ("AC" and "CG").
        for s in 0..3 {
            r.push(rec(b"ACGT$", s, 0, 2)).unwrap();
        }
        for s in 0..3 {
            r.push(rec(b"CGT$", s, 1, 2)).unwrap();
        }
        assert_eq!(r.batches, 0);
        // Closing the second group brings the batch to 6 >= 5.
        r.push(rec(b"GT$", 0, 2, 2)).unwrap();
        assert_eq!(r.batches, 1);
        assert_eq!(r.lines, 6);
        r.finish().unwrap();
        assert_eq!(r.batches, 2);
    }

    #[test]
    fn short_suffix_group_keeps_index_order() {
        let reads: Vec<Read> = [(0, "CAGT$"), (1, "AGT$"), (2, "GAGT$")]
            .iter()
            .map(|&(s, t)| Read::new(s, t).unwrap())
            .collect();
        let (_store, client) = store_with(&reads);
        let cfg = PipelineConfig { threshold: 100, prefix_len: 10, ..Default::default() };
        let counters = FootprintCounters::new();
        let mut r = reducer(&cfg, Some(client), &counters);
        r.push(rec(b"AGT$", 0, 1, 10)).unwrap();
        r.push(rec(b"AGT$", 1, 0, 10)).unwrap();
        r.push(rec(b"AGT$", 2, 1, 10)).unwrap();
        r.finish().unwrap();
        assert_eq!(
            String::from_utf8(r.out.clone()).unwrap(),
            "AGT$\t1\nAGT$\t1000\nAGT$\t2001\n"
        );
        assert_eq!(counters.snapshot().store.bytes_got_store, 12);
    }

    #[test]
    fn long_groups_sort_by_text_then_index() {
        let reads: Vec<Read> = [(0, "ACGTT$"), (1, "ACGTA$"), (2, "ACGTA$")]
            .iter()
            .map(|&(s, t)| Read::new(s, t).unwrap())
            .collect();
        let (_store, client) = store_with(&reads);
        let cfg = PipelineConfig { threshold: 100, prefix_len: 3, ..Default::default() };
        let counters = FootprintCounters::new();
        let mut r = reducer(&cfg, Some(client), &counters);
        for s in 0..3 {
            r.push(rec(reads[s as usize].text(), s, 0, 3)).unwrap();
        }
        r.finish().unwrap();
        assert_eq!(
            String::from_utf8(r.out.clone()).unwrap(),
            "ACGTA$\t1000\nACGTA$\t2000\nACGTT$\t0\n"
        );
    }

    #[test]
    fn missing_suffix_aborts_with_indexes() {
        let (_store, client) = store_with(&[Read::new(0, "AC$").unwrap()]);
        let cfg = PipelineConfig { threshold: 100, prefix_len: 3, ..Default::default() };
        let counters = FootprintCounters::new();
        let mut r = reducer(&cfg, Some(client), &counters);
        r.push(rec(b"AC$", 0, 0, 3)).unwrap();
        r.push(CodeRecord { code: PrefixCode(9), index: SuffixIndex(5000) }).unwrap();
        r.push(CodeRecord { code: PrefixCode(10), index: SuffixIndex(7) }).unwrap();
        match r.finish().unwrap_err() {
            PipelineError::StoreCorruption(idx) => {
                assert_eq!(idx, vec![SuffixIndex(5000), SuffixIndex(7)])
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn oversized_group_fails_with_advice() {
        let cfg = PipelineConfig { group_limit: 2, prefix_len: 1, ..Default::default() };
        let counters = FootprintCounters::new();
        let mut r = reducer(&cfg, None, &counters);
        for s in 0..3 {
            r.push(rec(b"AC$", s, 0, 1)).unwrap();
        }
        let err = r.finish().unwrap_err();
        assert!(matches!(err, PipelineError::GroupOverflow { members: 3, .. }));
        assert!(err.to_string().contains("prefix"));
    }
}
