// SPDX-License-Identifier: Apache-2.0

//! Shuffle volume of the materialized baseline against the index shuffle.
//!
//! ```text
//! cargo run --release --example baseline_vs_indexed -- 200
//! ```

use std::fs;

use sufforge::oracle::gen_reads;
use sufforge::pipeline::{build_sa_from_reads, Mode, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let length: usize = std::env::args().nth(1).map(|a| a.parse()).transpose()?.unwrap_or(200);
    let reads = gen_reads(2_000, length, 5);
    let out = std::env::temp_dir().join(format!("sufforge-baseline-{}", std::process::id()));

    let mut shuffled = Vec::new();
    for mode in [Mode::Indexed, Mode::Materialized] {
        let cfg = PipelineConfig {
            output: out.join(mode.to_string()),
            mode,
            embedded_store: true,
            prefix_len: 13,
            ..Default::default()
        };
        let r = build_sa_from_reads(&cfg, reads.clone())?;
        println!(
            "{mode:>12}: shuffled {:>10} bytes, {:.2} per input base, {:.2}s",
            r.footprint.shuffled_bytes(),
            r.self_expansion(),
            r.timings.total_s
        );
        shuffled.push(r.footprint.shuffled_bytes() as f64);
    }
    let l = length as f64;
    println!("model (l+2)(l+1)/(2l) = {:.2}", (l + 2.0) * (l + 1.0) / (2.0 * l));
    println!("indexed / materialized = {:.3}", shuffled[0] / shuffled[1]);
    fs::remove_dir_all(out)?;
    Ok(())
}
