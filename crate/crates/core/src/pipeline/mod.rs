// SPDX-License-Identifier: Apache-2.0

//! The map, sort, shuffle, merge, reduce engine.
//!
//! In indexed mode mappers load reads into the store and shuffle 16-byte
//! `(PrefixCode, SuffixIndex)` pairs; reducers fetch suffix text back from
//! the store only for the groups they sort. Materialized mode shuffles the
//! suffix text itself and needs no store.
//!
//! ```no_run
//! use sufforge::pipeline::{build_sa, PipelineConfig};
//!
//! let cfg = PipelineConfig {
//!     inputs: vec!["reads.tsv".into()],
//!     output: "sa".into(),
//!     embedded_store: true,
//!     ..Default::default()
//! };
//! let report = build_sa(&cfg)?;
//! println!("{} suffixes in {:?}", report.suffix_count, report.output_files);
//! # Ok::<(), sufforge::pipeline::PipelineError>(())
//! ```

mod config;
mod ingest;
mod map;
pub mod record;
mod reduce;
pub mod runs;

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::SuffixIndex;
use crate::footprint::{normalize_to, Footprint, FootprintCounters, Reference, UnitTable};
use crate::partition::{build_partition_table, sample_suffix_codes, PartitionError, PartitionTable};
use crate::store::{EmbeddedStore, Read, ShardStats, StoreError};

pub use config::{Mode, PipelineConfig, DEFAULT_ACCUMULATION_THRESHOLD, DEFAULT_MAP_BUFFER_BYTES};
pub use ingest::{ingest_files, Ingested};

use map::{load_store, run_mapper, Emit, MapOutput};
use record::{CodeRecord, ShuffleRecord, TextRecord};
use reduce::{reduce_indexed, reduce_materialized, shuffle_partition, ReduceOutput, ShuffleOutput};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Ingest,
    Sample,
    Map,
    Shuffle,
    Reduce,
    Output,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Ingest => "ingest",
            Phase::Sample => "sample",
            Phase::Map => "map",
            Phase::Shuffle => "shuffle",
            Phase::Reduce => "reduce",
            Phase::Output => "output",
        })
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("ingest: {}:{line}: {msg}", file.display())]
    Ingest {
        file: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("store: {0}")]
    Transport(#[from] StoreError),
    #[error("store rejected reads {0:?}")]
    StoreRejected(Vec<u64>),
    #[error("store returned no suffix for indexes {}", fmt_indexes(.0))]
    StoreCorruption(Vec<SuffixIndex>),
    #[error(
        "reduce: sorting group {code} has {members} members at prefix length {prefix_len}; \
         increase the prefix length to split it"
    )]
    GroupOverflow {
        code: u64,
        members: u64,
        prefix_len: usize,
    },
    #[error("sample: {0}")]
    Sample(#[from] PartitionError),
    #[error("{phase}: {source}")]
    Io {
        phase: Phase,
        #[source]
        source: io::Error,
    },
}

impl PipelineError {
    pub fn io(phase: Phase, source: io::Error) -> Self {
        PipelineError::Io { phase, source }
    }
}

fn fmt_indexes(idx: &[SuffixIndex]) -> String {
    const SHOWN: usize = 20;
    let mut s: Vec<String> = idx.iter().take(SHOWN).map(|i| i.0.to_string()).collect();
    if idx.len() > SHOWN {
        s.push(format!("… ({} total)", idx.len()));
    }
    s.join(", ")
}

/// Writes `suffix<TAB>index\n`, or `index\n` alone. Returns bytes written.
pub fn write_output_line<W: Write>(
    w: &mut W,
    suffix: &[u8],
    index: SuffixIndex,
    indexes_only: bool,
) -> io::Result<usize> {
    let mut digits = [0u8; 20];
    let mut i = digits.len();
    let mut v = index.0;
    loop {
        i -= 1;
        digits[i] = b'0' + (v % 10) as u8;
        v /= 10;
        if v == 0 {
            break;
        }
    }
    let num = &digits[i..];
    if indexes_only {
        w.write_all(num)?;
        w.write_all(b"\n")?;
        Ok(num.len() + 1)
    } else {
        w.write_all(suffix)?;
        w.write_all(b"\t")?;
        w.write_all(num)?;
        w.write_all(b"\n")?;
        Ok(suffix.len() + num.len() + 2)
    }
}

pub fn part_file_name(part: usize) -> String {
    format!("part-{part:05}")
}

/// Part files of an output directory, in partition order.
pub fn list_part_files(dir: &Path) -> io::Result<Vec<PathBuf>> {
    let mut parts: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("part-"))
        })
        .collect();
    parts.sort();
    Ok(parts)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub ingest_s: f64,
    pub sample_s: f64,
    pub map_s: f64,
    pub shuffle_s: f64,
    pub reduce_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: PipelineConfig,
    pub footprint: Footprint,
    /// Counters in units of the input size.
    pub units_input: Option<UnitTable>,
    /// Counters scaled so the output is 1.01 units.
    pub units_output: Option<UnitTable>,
    pub timings: PhaseTimings,
    pub reads: u64,
    pub input_bytes: u64,
    pub input_bases: u64,
    pub suffix_count: u64,
    pub records_shuffled: u64,
    pub output_files: Vec<PathBuf>,
    pub partition_boundaries: Vec<u64>,
    pub map_spills: Vec<usize>,
    /// Runs fetched by each reducer, before any reduce-side merging.
    pub reduce_runs: Vec<usize>,
    pub reduce_batches: u64,
    pub largest_group: u64,
    pub shard_stats: Vec<ShardStats>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// Shuffled bytes per raw input base.
    pub fn self_expansion(&self) -> f64 {
        self.footprint.shuffled_bytes() as f64 / self.input_bases.max(1) as f64
    }
}

/// Runs the whole pipeline over the configured input files.
pub fn build_sa(cfg: &PipelineConfig) -> Result<RunReport, PipelineError> {
    cfg.validate()?;
    let t0 = Instant::now();
    let ingested = ingest_files(&cfg.inputs)?;
    let ingest_s = t0.elapsed().as_secs_f64();
    build_from_reads(cfg, ingested, ingest_s)
}

/// Runs the pipeline over reads already in memory; `inputs` is ignored.
pub fn build_sa_from_reads(cfg: &PipelineConfig, reads: Vec<Read>) -> Result<RunReport, PipelineError> {
    let mut cfg = cfg.clone();
    if cfg.inputs.is_empty() {
        cfg.inputs.push(PathBuf::from("<memory>"));
    }
    cfg.validate()?;
    let bases = reads.iter().map(|r| r.len() as u64 - 1).sum();
    let input_bytes = reads
        .iter()
        .map(|r| (r.seq().to_string().len() + r.len() + 1) as u64)
        .sum();
    build_from_reads(
        &cfg,
        Ingested {
            reads,
            input_bytes,
            bases,
        },
        0.0,
    )
}

fn build_from_reads(
    cfg: &PipelineConfig,
    ingested: Ingested,
    ingest_s: f64,
) -> Result<RunReport, PipelineError> {
    let start = Instant::now();
    let counters = FootprintCounters::new();
    counters.map.add_input(ingested.input_bytes);
    let reads = ingested.reads;

    let out_io = |e| PipelineError::io(Phase::Output, e);
    fs::create_dir_all(&cfg.output).map_err(out_io)?;
    for stale in list_part_files(&cfg.output).map_err(out_io)? {
        fs::remove_file(stale).map_err(out_io)?;
    }
    let work_dir = cfg.work_dir();
    fs::create_dir_all(&work_dir).map_err(|e| PipelineError::io(Phase::Map, e))?;

    let embedded = match (cfg.mode, cfg.embedded_store) {
        (Mode::Indexed, true) => {
            Some(EmbeddedStore::spawn(cfg.shards).map_err(|e| PipelineError::io(Phase::Ingest, e))?)
        }
        _ => None,
    };
    let endpoints = match &embedded {
        Some(store) => store.endpoints(),
        None => cfg.store.clone(),
    };
    if cfg.mode == Mode::Indexed {
        // Fail before any work if the store is unreachable.
        crate::store::StoreClient::connect(&endpoints)?;
    }

    let t = Instant::now();
    let table = if reads.is_empty() {
        PartitionTable::from_boundaries(Vec::new())
    } else {
        let samples = sample_suffix_codes(
            &reads,
            cfg.reducers,
            cfg.sample_per_partition,
            cfg.prefix_len,
            cfg.seed,
        )?;
        build_partition_table(samples, cfg.reducers)?
    };
    let table = if table.partitions() == cfg.reducers {
        table
    } else {
        // Empty input: keep one (empty) part file per reducer all the same.
        PartitionTable::from_boundaries(vec![crate::encoding::PrefixCode(0); cfg.reducers - 1])
    };
    let mut table_text = Vec::new();
    table.write_to(&mut table_text).map_err(out_io)?;
    fs::write(cfg.output.join("partitions.txt"), table_text).map_err(out_io)?;
    let sample_s = t.elapsed().as_secs_f64();

    let result = match cfg.mode {
        Mode::Indexed => run_phases::<CodeRecord>(cfg, &reads, &table, &endpoints, &work_dir, &counters),
        Mode::Materialized => {
            run_phases::<TextRecord>(cfg, &reads, &table, &endpoints, &work_dir, &counters)
        }
    };
    let _ = fs::remove_dir_all(&work_dir);
    let phases = result?;

    let footprint = counters.snapshot();
    let suffix_count: u64 = reads.iter().map(|r| r.len() as u64).sum();
    debug_assert_eq!(phases.lines, suffix_count);
    Ok(RunReport {
        config: cfg.clone(),
        footprint,
        units_input: normalize_to(&footprint, Reference::Input).ok(),
        units_output: normalize_to(&footprint, Reference::Output).ok(),
        timings: PhaseTimings {
            ingest_s,
            sample_s,
            map_s: phases.map_s,
            shuffle_s: phases.shuffle_s,
            reduce_s: phases.reduce_s,
            total_s: ingest_s + start.elapsed().as_secs_f64(),
        },
        reads: reads.len() as u64,
        input_bytes: ingested.input_bytes,
        input_bases: ingested.bases,
        suffix_count,
        records_shuffled: phases.records_shuffled,
        output_files: phases.outputs,
        partition_boundaries: table.boundaries().iter().map(|c| c.0).collect(),
        map_spills: phases.map_spills,
        reduce_runs: phases.reduce_runs,
        reduce_batches: phases.batches,
        largest_group: phases.largest_group,
        shard_stats: embedded.map(|s| s.stats()).unwrap_or_default(),
    })
}

struct PhaseResults {
    map_s: f64,
    shuffle_s: f64,
    reduce_s: f64,
    lines: u64,
    records_shuffled: u64,
    outputs: Vec<PathBuf>,
    map_spills: Vec<usize>,
    reduce_runs: Vec<usize>,
    batches: u64,
    largest_group: u64,
}

/// Runs `f(i)` for `i in 0..n` on scoped threads; the first error by index wins.
fn parallel<T: Send, F>(n: usize, f: F) -> Result<Vec<T>, PipelineError>
where
    F: Fn(usize) -> Result<T, PipelineError> + Sync,
{
    let results: Vec<Result<T, PipelineError>> = thread::scope(|s| {
        let handles: Vec<_> = (0..n).map(|i| {
            let f = &f;
            s.spawn(move || f(i))
        }).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|p| std::panic::resume_unwind(p)))
            .collect()
    });
    results.into_iter().collect()
}

fn run_phases<R: Emit + Reducible>(
    cfg: &PipelineConfig,
    reads: &[Read],
    table: &PartitionTable,
    endpoints: &[String],
    work_dir: &Path,
    counters: &FootprintCounters,
) -> Result<PhaseResults, PipelineError> {
    let split_len = reads.len().div_ceil(cfg.mappers).max(1);
    let splits: Vec<&[Read]> = (0..cfg.mappers)
        .map(|m| {
            let lo = (m * split_len).min(reads.len());
            let hi = ((m + 1) * split_len).min(reads.len());
            &reads[lo..hi]
        })
        .collect();

    let t = Instant::now();
    let maps: Vec<MapOutput> = parallel(cfg.mappers, |m| {
        if R::USES_STORE {
            load_store(splits[m], endpoints, counters)?;
        }
        run_mapper::<R>(m, splits[m], cfg, table, work_dir, counters)
    })?;
    let map_s = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let shuffled: Vec<ShuffleOutput> = parallel(cfg.reducers, |r| {
        shuffle_partition::<R>(r, &maps, cfg, work_dir, counters)
    })?;
    for m in &maps {
        m.run.remove().map_err(|e| PipelineError::io(Phase::Shuffle, e))?;
    }
    let shuffle_s = t.elapsed().as_secs_f64();
    debug_assert_eq!(
        maps.iter().map(|m| m.records).sum::<u64>(),
        shuffled.iter().map(|s| s.records).sum::<u64>()
    );

    let t = Instant::now();
    let reduced: Vec<ReduceOutput> = parallel(cfg.reducers, |r| {
        let path = cfg.output.join(part_file_name(r));
        R::reduce(&shuffled[r].runs, cfg, endpoints, path, counters)
    })?;
    let reduce_s = t.elapsed().as_secs_f64();

    Ok(PhaseResults {
        map_s,
        shuffle_s,
        reduce_s,
        lines: reduced.iter().map(|r| r.lines).sum(),
        records_shuffled: shuffled.iter().map(|s| s.records).sum(),
        outputs: reduced.iter().map(|r| r.path.clone()).collect(),
        map_spills: maps.iter().map(|m| m.spills).collect(),
        reduce_runs: shuffled.iter().map(|s| s.fetched_runs).collect(),
        batches: reduced.iter().map(|r| r.batches).sum(),
        largest_group: reduced.iter().map(|r| r.largest_group).max().unwrap_or(0),
    })
}

trait Reducible: ShuffleRecord {
    const USES_STORE: bool;
    fn reduce(
        runs: &[runs::RunFile],
        cfg: &PipelineConfig,
        endpoints: &[String],
        out: PathBuf,
        counters: &FootprintCounters,
    ) -> Result<ReduceOutput, PipelineError>;
}

impl Reducible for CodeRecord {
    const USES_STORE: bool = true;
    fn reduce(
        runs: &[runs::RunFile],
        cfg: &PipelineConfig,
        endpoints: &[String],
        out: PathBuf,
        counters: &FootprintCounters,
    ) -> Result<ReduceOutput, PipelineError> {
        reduce_indexed(runs, cfg, endpoints, out, counters)
    }
}

impl Reducible for TextRecord {
    const USES_STORE: bool = false;
    fn reduce(
        runs: &[runs::RunFile],
        cfg: &PipelineConfig,
        _endpoints: &[String],
        out: PathBuf,
        counters: &FootprintCounters,
    ) -> Result<ReduceOutput, PipelineError> {
        reduce_materialized(runs, cfg, out, counters)
    }
}
