// SPDX-License-Identifier: Apache-2.0

//! Data store footprint: effective bytes read and written per phase.
//!
//! Workers add to shared atomic counters; totals are plain sums, so the final
//! values do not depend on how workers interleave.

use std::fmt::{self, Write as _};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Default)]
pub struct PhaseCounters {
    bytes_input: AtomicU64,
    bytes_read_local: AtomicU64,
    bytes_written_local: AtomicU64,
    bytes_shuffled: AtomicU64,
    bytes_put_store: AtomicU64,
    bytes_got_store: AtomicU64,
    bytes_output: AtomicU64,
}

macro_rules! adders {
    ($($name:ident => $field:ident),* $(,)?) => {
        $(
            #[inline]
            pub fn $name(&self, n: u64) {
                self.$field.fetch_add(n, Ordering::Relaxed);
            }
        )*
    };
}

impl PhaseCounters {
    adders! {
        add_input => bytes_input,
        add_read_local => bytes_read_local,
        add_written_local => bytes_written_local,
        add_shuffled => bytes_shuffled,
        add_put_store => bytes_put_store,
        add_got_store => bytes_got_store,
        add_output => bytes_output,
    }

    pub fn snapshot(&self) -> PhaseBytes {
        let ld = |a: &AtomicU64| a.load(Ordering::Relaxed);
        PhaseBytes {
            bytes_input: ld(&self.bytes_input),
            bytes_read_local: ld(&self.bytes_read_local),
            bytes_written_local: ld(&self.bytes_written_local),
            bytes_shuffled: ld(&self.bytes_shuffled),
            bytes_put_store: ld(&self.bytes_put_store),
            bytes_got_store: ld(&self.bytes_got_store),
            bytes_output: ld(&self.bytes_output),
        }
    }
}

/// Live counters for one run.
#[derive(Debug, Default)]
pub struct FootprintCounters {
    pub map: PhaseCounters,
    pub shuffle: PhaseCounters,
    pub reduce: PhaseCounters,
    pub store: PhaseCounters,
    pub output: PhaseCounters,
}

impl FootprintCounters {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn snapshot(&self) -> Footprint {
        Footprint {
            map: self.map.snapshot(),
            shuffle: self.shuffle.snapshot(),
            reduce: self.reduce.snapshot(),
            store: self.store.snapshot(),
            output: self.output.snapshot(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PhaseBytes {
    pub bytes_input: u64,
    pub bytes_read_local: u64,
    pub bytes_written_local: u64,
    pub bytes_shuffled: u64,
    pub bytes_put_store: u64,
    pub bytes_got_store: u64,
    pub bytes_output: u64,
}

/// Frozen counter values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Footprint {
    pub map: PhaseBytes,
    pub shuffle: PhaseBytes,
    pub reduce: PhaseBytes,
    pub store: PhaseBytes,
    pub output: PhaseBytes,
}

impl Footprint {
    pub fn input_bytes(&self) -> u64 {
        self.map.bytes_input
    }

    pub fn output_bytes(&self) -> u64 {
        self.output.bytes_output
    }

    pub fn shuffled_bytes(&self) -> u64 {
        self.shuffle.bytes_shuffled
    }

    /// Scales every counter, used to check linearity of [`normalize`].
    pub fn scaled(&self, factor: u64) -> Self {
        let s = |p: PhaseBytes| PhaseBytes {
            bytes_input: p.bytes_input * factor,
            bytes_read_local: p.bytes_read_local * factor,
            bytes_written_local: p.bytes_written_local * factor,
            bytes_shuffled: p.bytes_shuffled * factor,
            bytes_put_store: p.bytes_put_store * factor,
            bytes_got_store: p.bytes_got_store * factor,
            bytes_output: p.bytes_output * factor,
        };
        Self {
            map: s(self.map),
            shuffle: s(self.shuffle),
            reduce: s(self.reduce),
            store: s(self.store),
            output: s(self.output),
        }
    }
}

/// What one normalization unit stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reference {
    /// The input counts as 1 unit.
    Input,
    /// The output counts as 1.01 units.
    Output,
}

impl std::str::FromStr for Reference {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "input" => Ok(Reference::Input),
            "output" => Ok(Reference::Output),
            other => Err(format!("unknown reference {other:?} (expected input|output)")),
        }
    }
}

pub const OUTPUT_REFERENCE_UNITS: f64 = 1.01;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NormalizeError {
    #[error("reference size is zero")]
    ZeroReference,
}

/// Counters expressed in units of the reference, laid out as Map/Reduce columns.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UnitTable {
    pub reference_bytes: f64,
    pub map_local_read: f64,
    pub map_local_write: f64,
    pub reduce_local_read: f64,
    pub reduce_local_write: f64,
    pub input_read: f64,
    pub output_write: f64,
    pub shuffle: f64,
    pub store_put: f64,
    pub store_get: f64,
}

/// Divides every counter by `reference_bytes`.
pub fn normalize(fp: &Footprint, reference_bytes: f64) -> Result<UnitTable, NormalizeError> {
    if !(reference_bytes > 0.0) {
        return Err(NormalizeError::ZeroReference);
    }
    let u = |b: u64| b as f64 / reference_bytes;
    Ok(UnitTable {
        reference_bytes,
        map_local_read: u(fp.map.bytes_read_local),
        map_local_write: u(fp.map.bytes_written_local),
        reduce_local_read: u(fp.reduce.bytes_read_local),
        reduce_local_write: u(fp.reduce.bytes_written_local),
        input_read: u(fp.map.bytes_input),
        output_write: u(fp.output.bytes_output),
        shuffle: u(fp.shuffle.bytes_shuffled),
        store_put: u(fp.store.bytes_put_store),
        store_get: u(fp.store.bytes_got_store),
    })
}

pub fn normalize_to(fp: &Footprint, reference: Reference) -> Result<UnitTable, NormalizeError> {
    let bytes = match reference {
        Reference::Input => fp.input_bytes() as f64,
        Reference::Output => fp.output_bytes() as f64 / OUTPUT_REFERENCE_UNITS,
    };
    normalize(fp, bytes)
}

impl fmt::Display for UnitTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        let blank = |v: Option<f64>| v.map(|x| format!("{x:.2}")).unwrap_or_default();
        let _ = writeln!(s, "{:<13}| {:>8} | {:>8}", "", "Map", "Reduce");
        let mut row = |name: &str, map: Option<f64>, reduce: Option<f64>| {
            let _ = writeln!(s, "{name:<13}| {:>8} | {:>8}", blank(map), blank(reduce));
        };
        row("Local Read", Some(self.map_local_read), Some(self.reduce_local_read));
        row("Local Write", Some(self.map_local_write), Some(self.reduce_local_write));
        row("Input Read", Some(self.input_read), None);
        row("Output Write", None, Some(self.output_write));
        row("Store Put", Some(self.store_put), None);
        row("Store Get", None, Some(self.store_get));
        let _ = writeln!(s, "{:<13}| {:>19}", "Shuffle", format!("{:.2}", self.shuffle));
        f.write_str(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counters_accumulate() {
        let c = FootprintCounters::new();
        c.map.add_written_local(10);
        c.map.add_written_local(6);
        c.shuffle.add_shuffled(32);
        let fp = c.snapshot();
        assert_eq!(fp.map.bytes_written_local, 16);
        assert_eq!(fp.shuffled_bytes(), 32);
    }

    #[test]
    fn normalize_examples() {
        // Map local write 1318.96 GB against a 637.18 GB input.
        let mut fp = Footprint::default();
        fp.map.bytes_input = 637_180;
        fp.map.bytes_written_local = 1_318_960;
        let t = normalize_to(&fp, Reference::Input).unwrap();
        assert!((t.map_local_write - 2.07).abs() < 0.005);
        assert_eq!(t.input_read, 1.0);

        let zero = normalize(&Footprint::default(), 5.0).unwrap();
        assert_eq!(zero.map_local_write, 0.0);
        assert_eq!(zero.shuffle, 0.0);

        let mut fp = Footprint::default();
        fp.output.bytes_output = 12345;
        fp.shuffle.bytes_shuffled = 2000;
        let t = normalize_to(&fp, Reference::Output).unwrap();
        assert!((t.output_write - 1.01).abs() < 1e-12);

        assert_eq!(
            normalize_to(&Footprint::default(), Reference::Input),
            Err(NormalizeError::ZeroReference)
        );
    }

    #[test]
    fn normalize_is_linear() {
        let mut fp = Footprint::default();
        fp.map.bytes_input = 100;
        fp.map.bytes_read_local = 37;
        fp.reduce.bytes_written_local = 91;
        fp.shuffle.bytes_shuffled = 55;
        let base = normalize(&fp, 100.0).unwrap();
        let tripled = normalize(&fp.scaled(3), 100.0).unwrap();
        assert!((tripled.map_local_read - 3.0 * base.map_local_read).abs() < 1e-12);
        assert!((tripled.reduce_local_write - 3.0 * base.reduce_local_write).abs() < 1e-12);
        assert!((tripled.shuffle - 3.0 * base.shuffle).abs() < 1e-12);
    }

    #[test]
    fn table_layout() {
        let t = UnitTable {
            map_local_write: 2.07,
            shuffle: 1.03,
            ..Default::default()
        };
        let text = t.to_string();
        assert!(text.lines().next().unwrap().contains("Map"));
        assert!(text.contains("Local Write  |     2.07 |     0.00"));
        assert!(text.contains("1.03"));
    }
}
