// SPDX-License-Identifier: Apache-2.0

//! Suffix arrays of short reads, built by shuffling packed suffix indexes
//! instead of suffix text.
//!
//! Mappers emit one 16-byte `(PrefixCode, SuffixIndex)` pair per suffix and
//! range-partition them by a sampled partition table. Reducers group pairs
//! with equal prefix codes, fetch the suffix text for a batch of groups from
//! a sharded in-memory read store in one call per shard, sort, and write
//! `suffix<TAB>index` lines. Every byte moved is counted, and [`model`]
//! predicts what those counters should be.
//!
//! ```
//! use sufforge::oracle::{gen_reads, naive_sa};
//! use sufforge::pipeline::{build_sa_from_reads, PipelineConfig};
//!
//! let dir = tempfile::tempdir()?;
//! let reads = gen_reads(50, 20, 1);
//! let cfg = PipelineConfig {
//!     output: dir.path().join("sa"),
//!     embedded_store: true,
//!     prefix_len: 8,
//!     sample_per_partition: 100,
//!     ..Default::default()
//! };
//! let report = build_sa_from_reads(&cfg, reads.clone())?;
//! assert_eq!(report.suffix_count, naive_sa(&reads)?.len() as u64);
//! assert_eq!(report.footprint.shuffled_bytes(), 16 * report.suffix_count);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod cli;
pub mod encoding;
pub mod footprint;
pub mod model;
pub mod oracle;
pub mod partition;
pub mod pipeline;
pub mod store;

pub use encoding::{encode_prefix, max_prefix_length, pack_index, unpack_index, PrefixCode, SuffixIndex};
pub use footprint::{normalize, Footprint, FootprintCounters, UnitTable};
pub use model::{plan_merge, spill_count, MergePlan};
pub use pipeline::{build_sa, Mode, PipelineConfig, PipelineError, RunReport};
pub use store::{EmbeddedStore, Read, StoreClient};
