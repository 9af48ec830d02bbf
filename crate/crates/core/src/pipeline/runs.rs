// SPDX-License-Identifier: Apache-2.0

//! Sorted run files and k-way merging.
//!
//! A run is a file of records split into per-partition segments. Map spills
//! have one segment per reducer; reduce-side runs have exactly one.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Read, Seek, SeekFrom, Take, Write};
use std::marker::PhantomData;
use std::path::{Path, PathBuf};

use crate::footprint::PhaseCounters;
use crate::model::plan_merge;

use super::record::ShuffleRecord;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Segment {
    pub offset: u64,
    pub len: u64,
    pub records: u64,
    /// Footprint bytes of the records in this segment.
    pub accounted: u64,
}

#[derive(Debug, Clone)]
pub struct RunFile {
    pub path: PathBuf,
    pub segments: Vec<Segment>,
}

impl RunFile {
    pub fn accounted(&self) -> u64 {
        self.segments.iter().map(|s| s.accounted).sum()
    }

    pub fn records(&self) -> u64 {
        self.segments.iter().map(|s| s.records).sum()
    }

    pub fn open_segment<R: ShuffleRecord>(&self, part: usize) -> io::Result<SegmentIter<R>> {
        let seg = self.segments[part];
        let mut file = File::open(&self.path)?;
        file.seek(SeekFrom::Start(seg.offset))?;
        Ok(SegmentIter {
            reader: BufReader::with_capacity(1 << 16, file.take(seg.len)),
            _marker: PhantomData,
        })
    }

    pub fn remove(&self) -> io::Result<()> {
        match fs::remove_file(&self.path) {
            Err(e) if e.kind() != io::ErrorKind::NotFound => Err(e),
            _ => Ok(()),
        }
    }
}

pub struct SegmentIter<R> {
    reader: BufReader<Take<File>>,
    _marker: PhantomData<R>,
}

impl<R: ShuffleRecord> Iterator for SegmentIter<R> {
    type Item = io::Result<R>;

    fn next(&mut self) -> Option<Self::Item> {
        R::decode(&mut self.reader).transpose()
    }
}

pub struct RunWriter {
    path: PathBuf,
    out: BufWriter<File>,
    pos: u64,
    segments: Vec<Segment>,
    current: Segment,
}

impl RunWriter {
    pub fn create(path: PathBuf) -> io::Result<Self> {
        let out = BufWriter::with_capacity(1 << 16, File::create(&path)?);
        Ok(Self {
            path,
            out,
            pos: 0,
            segments: Vec::new(),
            current: Segment::default(),
        })
    }

    pub fn push<R: ShuffleRecord>(&mut self, rec: &R) -> io::Result<()> {
        let mut counting = CountingWriter {
            inner: &mut self.out,
            written: 0,
        };
        rec.encode(&mut counting)?;
        self.pos += counting.written;
        self.current.len += counting.written;
        self.current.records += 1;
        self.current.accounted += rec.accounted_len();
        Ok(())
    }

    /// Copies one raw segment of another run.
    pub fn copy_segment(&mut self, from: &RunFile, part: usize) -> io::Result<()> {
        let seg = from.segments[part];
        let mut file = File::open(&from.path)?;
        file.seek(SeekFrom::Start(seg.offset))?;
        let n = io::copy(&mut file.take(seg.len), &mut self.out)?;
        if n != seg.len {
            return Err(io::Error::new(io::ErrorKind::UnexpectedEof, "segment truncated"));
        }
        self.pos += n;
        self.current.len += n;
        self.current.records += seg.records;
        self.current.accounted += seg.accounted;
        Ok(())
    }

    pub fn end_segment(&mut self) {
        let next = Segment {
            offset: self.pos,
            ..Segment::default()
        };
        self.segments.push(std::mem::replace(&mut self.current, next));
    }

    pub fn finish(mut self) -> io::Result<RunFile> {
        self.out.flush()?;
        Ok(RunFile {
            path: self.path,
            segments: self.segments,
        })
    }
}

struct CountingWriter<'a, W> {
    inner: &'a mut W,
    written: u64,
}

impl<W: Write> Write for CountingWriter<'_, W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.written += n as u64;
        Ok(n)
    }
    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

/// Merges sorted sources, handing records to `sink` in order. Ties go to
/// the earlier source.
pub fn merge_into<R, E, F>(sources: Vec<SegmentIter<R>>, mut sink: F) -> Result<(), E>
where
    R: ShuffleRecord,
    E: From<io::Error>,
    F: FnMut(R) -> Result<(), E>,
{
    let mut sources = sources;
    let mut heap = BinaryHeap::with_capacity(sources.len());
    for (i, src) in sources.iter_mut().enumerate() {
        if let Some(rec) = src.next().transpose()? {
            heap.push(Reverse((rec, i)));
        }
    }
    while let Some(Reverse((rec, i))) = heap.pop() {
        if let Some(next) = sources[i].next().transpose()? {
            debug_assert!(next >= rec, "run {i} not sorted");
            heap.push(Reverse((next, i)));
        }
        sink(rec)?;
    }
    Ok(())
}

/// Merges whole runs, partition by partition, into a new run.
/// Charges the bytes read and written to `counters`.
pub fn merge_runs<R: ShuffleRecord>(
    runs: &[RunFile],
    partitions: usize,
    path: PathBuf,
    counters: &PhaseCounters,
) -> io::Result<RunFile> {
    let mut writer = RunWriter::create(path)?;
    for part in 0..partitions {
        let sources = runs
            .iter()
            .map(|r| r.open_segment::<R>(part))
            .collect::<io::Result<Vec<_>>>()?;
        merge_into::<R, io::Error, _>(sources, |rec| writer.push(&rec))?;
        writer.end_segment();
    }
    let out = writer.finish()?;
    let read: u64 = runs.iter().map(RunFile::accounted).sum();
    debug_assert_eq!(read, out.accounted());
    counters.add_read_local(read);
    counters.add_written_local(out.accounted());
    for r in runs {
        r.remove()?;
    }
    Ok(out)
}

/// Runs the intermediate rounds of [`plan_merge`]: the oldest runs are
/// merged in batches of at most `merge_factor`, each result queued behind
/// the remaining runs, until `merge_factor` runs remain.
pub fn reduce_to_fan_in<R: ShuffleRecord>(
    mut runs: Vec<RunFile>,
    merge_factor: usize,
    partitions: usize,
    work_dir: &Path,
    name: &str,
    counters: &PhaseCounters,
) -> io::Result<Vec<RunFile>> {
    if runs.len() <= merge_factor {
        return Ok(runs);
    }
    let plan = plan_merge(runs.len() as f64, merge_factor);
    let mut queue: VecDeque<RunFile> = runs.drain(..).collect();
    for (round, batch) in plan.intermediate_batches(merge_factor).into_iter().enumerate() {
        let inputs: Vec<RunFile> = queue.drain(..batch as usize).collect();
        let path = work_dir.join(format!("{name}-merge{round}"));
        queue.push_back(merge_runs::<R>(&inputs, partitions, path, counters)?);
    }
    debug_assert_eq!(queue.len(), merge_factor);
    Ok(queue.into())
}
