// SPDX-License-Identifier: Apache-2.0

//! Analytical footprint model: spill counts, multi-round merge plans,
//! memory efficiency and the piecewise-linear time model.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_MERGE_FACTOR: usize = 10;
pub const DEFAULT_SPILL_FRACTION: f64 = 0.8;

/// Number of buffer spills needed for `data_bytes`.
///
/// Returns the fractional count and the number of files it produces.
pub fn spill_count(data_bytes: f64, buffer_bytes: f64, spill_fraction: f64) -> (f64, u64) {
    let raw = data_bytes / (buffer_bytes * spill_fraction);
    // Guard against 1.0000000002 from the division turning into two files.
    let files = (raw - 1e-9).ceil().max(1.0) as u64;
    (raw, files)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergePlan {
    pub spill_count_raw: f64,
    pub spill_count_files: u64,
    pub intermediate_rounds: u64,
    pub files_consumed: u64,
    pub read_units: f64,
    pub write_units: f64,
}

impl MergePlan {
    /// Files left for the final merge.
    pub fn final_fan_in(&self) -> u64 {
        self.spill_count_files + self.intermediate_rounds - self.files_consumed
    }

    /// Sizes of the intermediate merges, oldest runs first.
    pub fn intermediate_batches(&self, merge_factor: usize) -> Vec<u64> {
        let f = merge_factor as u64;
        let mut left = self.files_consumed;
        (0..self.intermediate_rounds)
            .map(|_| {
                let take = left.min(f);
                left -= take;
                take
            })
            .collect()
    }
}

/// Plans merging `ceil(spill_raw)` runs with at most `merge_factor` per merge.
///
/// With `s` runs and factor `f`, `k = ceil((s - f) / (f - 1))` intermediate
/// merges consume `c = s + k - f` runs and leave exactly `f` for the final
/// merge. Their cost relative to the data is `c / spill_raw`.
pub fn plan_merge(spill_raw: f64, merge_factor: usize) -> MergePlan {
    assert!(merge_factor >= 2, "merge factor must be at least 2");
    let f = merge_factor as u64;
    let s = (spill_raw - 1e-9).ceil().max(1.0) as u64;
    if s <= f {
        return MergePlan {
            spill_count_raw: spill_raw,
            spill_count_files: s,
            intermediate_rounds: 0,
            files_consumed: 0,
            read_units: 1.0,
            write_units: 1.0,
        };
    }
    let k = (s - f).div_ceil(f - 1);
    let c = s + k - f;
    let units = 1.0 + c as f64 / spill_raw;
    MergePlan {
        spill_count_raw: spill_raw,
        spill_count_files: s,
        intermediate_rounds: k,
        files_consumed: c,
        read_units: units,
        write_units: units,
    }
}

/// Map-side local I/O units for one mapper: all spills written once, then
/// (if more than one spill) merged through [`plan_merge`] into one file.
pub fn map_side_units(spill_raw: f64, merge_factor: usize) -> (f64, f64) {
    let plan = plan_merge(spill_raw, merge_factor);
    if plan.spill_count_files <= 1 {
        (0.0, 1.0)
    } else {
        (plan.read_units, 1.0 + plan.write_units)
    }
}

/// Percent efficiency of adding memory: `100 × speedup / mem_ratio`.
pub fn efficiency(speedup: f64, mem_ratio: f64) -> f64 {
    100.0 * speedup / mem_ratio
}

pub fn mem_ratio(base_mem: f64, extra_mem: f64) -> f64 {
    (base_mem + extra_mem) / base_mem
}

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("need at least 2 points below the breakdown, got {0}")]
    TooFewPoints(usize),
    #[error("all usable points share the same input size")]
    Degenerate,
}

/// `t(x) = a·x + b` for `x < breakdown`, undefined beyond it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeModel {
    pub a: f64,
    pub b: f64,
    pub breakdown: Option<f64>,
}

impl TimeModel {
    pub fn predict(&self, x: f64) -> Option<f64> {
        match self.breakdown {
            Some(limit) if x >= limit => None,
            _ => Some(self.a * x + self.b),
        }
    }
}

/// Ordinary least squares over the points with `x < breakdown`.
pub fn fit_time_model(points: &[(f64, f64)], breakdown: Option<f64>) -> Result<TimeModel, FitError> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(x, _)| breakdown.is_none_or(|b| x < b))
        .collect();
    if usable.len() < 2 {
        return Err(FitError::TooFewPoints(usable.len()));
    }
    let n = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(FitError::Degenerate);
    }
    let a = sxy / sxx;
    Ok(TimeModel {
        a,
        b: my - a * mx,
        breakdown,
    })
}
