// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::encoding::{DEFAULT_PREFIX_LEN, MAX_PREFIX_LEN};
use crate::model::{DEFAULT_MERGE_FACTOR, DEFAULT_SPILL_FRACTION};
use crate::partition::DEFAULT_SAMPLES_PER_PARTITION;

use super::PipelineError;

/// Suffixes a reducer accumulates before fetching and sorting.
pub const DEFAULT_ACCUMULATION_THRESHOLD: u64 = 1_600_000;

pub const DEFAULT_MAP_BUFFER_BYTES: u64 = 100 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Shuffle 16-byte (prefix code, index) pairs; fetch suffixes from the store.
    Indexed,
    /// Shuffle the suffix text itself (the sort-everything baseline).
    Materialized,
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "indexed" => Ok(Mode::Indexed),
            "materialized" => Ok(Mode::Materialized),
            other => Err(format!("unknown mode {other:?} (expected indexed|materialized)")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Mode::Indexed => "indexed",
            Mode::Materialized => "materialized",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub inputs: Vec<PathBuf>,
    pub output: PathBuf,
    pub mappers: usize,
    pub reducers: usize,
    pub shards: usize,
    pub prefix_len: usize,
    pub threshold: u64,
    pub map_buffer_bytes: u64,
    pub spill_fraction: f64,
    pub merge_factor: usize,
    pub mode: Mode,
    pub seed: u64,
    pub sample_per_partition: usize,
    pub indexes_only: bool,
    /// Largest sorting group tolerated; 0 disables the check.
    pub group_limit: u64,
    /// Shard endpoints, shard `i` at position `i`.
    pub store: Vec<String>,
    pub embedded_store: bool,
    /// Scratch directory for spills; defaults to `<output>/_work`.
    pub work_dir: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            inputs: Vec::new(),
            output: PathBuf::from("sa-out"),
            mappers: 4,
            reducers: 4,
            shards: 2,
            prefix_len: DEFAULT_PREFIX_LEN,
            threshold: DEFAULT_ACCUMULATION_THRESHOLD,
            map_buffer_bytes: DEFAULT_MAP_BUFFER_BYTES,
            spill_fraction: DEFAULT_SPILL_FRACTION,
            merge_factor: DEFAULT_MERGE_FACTOR,
            mode: Mode::Indexed,
            seed: 0,
            sample_per_partition: DEFAULT_SAMPLES_PER_PARTITION,
            indexes_only: false,
            group_limit: 0,
            store: Vec::new(),
            embedded_store: false,
            work_dir: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |msg: String| Err(PipelineError::Config(msg));
        if self.inputs.is_empty() || self.inputs.len() > 2 {
            return bad(format!("expected 1 or 2 input files, got {}", self.inputs.len()));
        }
        for (name, v) in [
            ("mappers", self.mappers),
            ("reducers", self.reducers),
            ("shards", self.shards),
            ("sample_per_partition", self.sample_per_partition),
        ] {
            if v == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        if !(1..=MAX_PREFIX_LEN).contains(&self.prefix_len) {
            return bad(format!("prefix_len must be in 1..={MAX_PREFIX_LEN}"));
        }
        if self.threshold == 0 {
            return bad("threshold must be positive".into());
        }
        if self.map_buffer_bytes == 0 {
            return bad("map_buffer_bytes must be positive".into());
        }
        if !(self.spill_fraction > 0.0 && self.spill_fraction <= 1.0) {
            return bad("spill_fraction must be in (0, 1]".into());
        }
        if self.merge_factor < 2 {
            return bad("merge_factor must be at least 2".into());
        }
        // An empty endpoint list is left to the store client, which reports it
        // as a transport failure.
        if self.mode == Mode::Indexed && !self.embedded_store && !self.store.is_empty() {
            if self.store.len() != self.shards {
                return bad(format!(
                    "{} store endpoints given for {} shards",
                    self.store.len(),
                    self.shards
                ));
            }
        }
        Ok(())
    }

    /// Buffered bytes that trigger a map-side spill.
    pub fn spill_threshold(&self) -> u64 {
        ((self.map_buffer_bytes as f64 * self.spill_fraction) as u64).max(1)
    }

    pub fn work_dir(&self) -> PathBuf {
        self.work_dir
            .clone()
            .unwrap_or_else(|| self.output.join("_work"))
    }

    /// Applies `key = value` lines. `#` starts a comment; `input` may repeat.
    pub fn apply_text(&mut self, text: &str) -> Result<(), PipelineError> {
        let mut inputs_from_file = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                PipelineError::Config(format!("line {}: expected `key = value`", n + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key == "input" {
                inputs_from_file.push(PathBuf::from(value));
                continue;
            }
            self.set(key, value)
                .map_err(|e| PipelineError::Config(format!("line {}: {e}", n + 1)))?;
        }
        if !inputs_from_file.is_empty() {
            self.inputs = inputs_from_file;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T, String> {
            // Accept 1.6e6-style values for integer knobs.
            v.parse::<T>().or_else(|_| {
                v.parse::<f64>()
                    .ok()
                    .filter(|f| f.fract() == 0.0 && *f >= 0.0)
                    .and_then(|f| format!("{}", f as u64).parse::<T>().ok())
                    .ok_or_else(|| format!("{key}: cannot parse {v:?}"))
            })
        }
        fn flag(key: &str, v: &str) -> Result<bool, String> {
            match v {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                _ => Err(format!("{key}: expected a boolean, got {v:?}")),
            }
        }
        match key {
            "output" => self.output = PathBuf::from(value),
            "mappers" => self.mappers = num(key, value)?,
            "reducers" => self.reducers = num(key, value)?,
            "shards" => self.shards = num(key, value)?,
            "prefix_len" => self.prefix_len = num(key, value)?,
            "threshold" => self.threshold = num(key, value)?,
            "map_buffer_bytes" => self.map_buffer_bytes = num(key, value)?,
            "spill_fraction" => self.spill_fraction = num(key, value)?,
            "merge_factor" => self.merge_factor = num(key, value)?,
            "mode" => self.mode = value.parse()?,
            "seed" => self.seed = num(key, value)?,
            "sample_per_partition" => self.sample_per_partition = num(key, value)?,
            "indexes_only" => self.indexes_only = flag(key, value)?,
            "group_limit" => self.group_limit = num(key, value)?,
            "embedded_store" => self.embedded_store = flag(key, value)?,
            "store" => {
                self.store = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect()
            }
            "work_dir" => self.work_dir = Some(PathBuf::from(value)),
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = PipelineConfig::default();
        assert_eq!(c.prefix_len, 23);
        assert_eq!(c.threshold, 1_600_000);
        assert_eq!(c.spill_fraction, 0.8);
        assert_eq!(c.merge_factor, 10);
        assert_eq!(c.sample_per_partition, 10_000);
    }

    #[test]
    fn config_text() {
        let mut c = PipelineConfig::default();
        c.apply_text(
            "# desk run\ninput = a.tsv\ninput = b.tsv\nmappers = 8\nthreshold = 1.6e6\n\
             mode = materialized # baseline\nstore = h:1, h:2\nindexes_only = true\n",
        )
        .unwrap();
        assert_eq!(c.inputs, vec![PathBuf::from("a.tsv"), PathBuf::from("b.tsv")]);
        assert_eq!(c.mappers, 8);
        assert_eq!(c.threshold, 1_600_000);
        assert_eq!(c.mode, Mode::Materialized);
        assert_eq!(c.store, vec!["h:1", "h:2"]);
        assert!(c.indexes_only);
        assert!(c.apply_text("bogus = 1").is_err());
        assert!(c.apply_text("mappers").is_err());
        assert!(c.apply_text("mappers = x").is_err());
    }

    #[test]
    fn validation() {
        let mut c = PipelineConfig {
            inputs: vec!["in.tsv".into()],
            embedded_store: true,
            ..Default::default()
        };
        assert!(c.validate().is_ok());
        c.prefix_len = 28;
        assert!(c.validate().is_err());
        c.prefix_len = 23;
        c.embedded_store = false;
        assert!(c.validate().is_ok());
        c.store = vec!["a:1".into()];
        assert!(c.validate().is_err());
        c.store = vec!["a:1".into(), "b:2".into()];
        assert!(c.validate().is_ok());
        c.shards = 3;
        assert!(c.validate().is_err());
        c.mode = Mode::Materialized;
        assert!(c.validate().is_ok());
        c.spill_fraction = 1.5;
        assert!(c.validate().is_err());
    }
}
