// SPDX-License-Identifier: Apache-2.0

//! Spill counts and multi-round merge plans.
//!
//! ```text
//! cargo run --example merge_planner
//! ```

use sufforge::model::{map_side_units, plan_merge, spill_count};

fn main() {
    let shuffle_units = 1.03;
    for data_gb in [20.56, 111.38] {
        let (raw, files) = spill_count(data_gb, 4.9, 0.667);
        let plan = plan_merge(raw, 10);
        println!(
            "{data_gb:>7} GB -> {raw:.2} spills ({files} files), {} merges over {} files, \
             final fan-in {}, batches {:?}, units {:.2}",
            plan.intermediate_rounds,
            plan.files_consumed,
            plan.final_fan_in(),
            plan.intermediate_batches(10),
            plan.write_units * shuffle_units
        );
    }
    println!("published spill count 34.06 -> {:.2}", plan_merge(34.06, 10).write_units * 1.03);
    for raw in [1.0, 2.0, 9.5, 12.0] {
        let (read, write) = map_side_units(raw, 10);
        println!("map side with {raw} spills: read {read:.3} write {write:.3}");
    }
}
