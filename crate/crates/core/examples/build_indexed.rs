// SPDX-License-Identifier: Apache-2.0

//! End to end: generate reads, build with embedded shards, check against
//! the oracle, print the footprint.
//!
//! ```text
//! cargo run --release --example build_indexed -- 2000 100
//! ```

use std::fs;

use sufforge::oracle::{gen_reads, write_naive_sa};
use sufforge::pipeline::{build_sa_from_reads, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>());
    let count = args.next().transpose()?.unwrap_or(2_000);
    let length = args.next().transpose()?.unwrap_or(100);
    let out = std::env::temp_dir().join(format!("sufforge-build-indexed-{}", std::process::id()));

    let reads = gen_reads(count, length, 1);
    let cfg = PipelineConfig {
        output: out.clone(),
        embedded_store: true,
        mappers: 4,
        reducers: 4,
        shards: 2,
        prefix_len: 13,
        map_buffer_bytes: 1 << 20,
        ..Default::default()
    };
    let report = build_sa_from_reads(&cfg, reads.clone())?;

    let mut built = Vec::new();
    for p in &report.output_files {
        built.extend(fs::read(p)?);
    }
    let mut expected = Vec::new();
    write_naive_sa(&reads, false, &mut expected)?;
    println!(
        "{} suffixes, {} batches, largest group {}, matches oracle: {}",
        report.suffix_count,
        report.reduce_batches,
        report.largest_group,
        built == expected
    );
    println!("spills per mapper {:?}", report.map_spills);
    if let Some(units) = &report.units_input {
        print!("{units}");
    }
    fs::remove_dir_all(out)?;
    Ok(())
}
