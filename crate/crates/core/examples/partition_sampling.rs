// SPDX-License-Identifier: Apache-2.0

//! Sample suffix prefix codes, cut them into ranges, and check the balance.
//!
//! ```text
//! cargo run --example partition_sampling
//! ```

use sufforge::encoding::encode_prefix_unchecked;
use sufforge::oracle::gen_reads;
use sufforge::partition::{build_partition_table, sample_suffix_codes};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (partitions, prefix_len) = (8, 13);
    let reads = gen_reads(5_000, 100, 3);
    let samples = sample_suffix_codes(&reads, partitions, 1_000, prefix_len, 42)?;
    let table = build_partition_table(samples, partitions)?;
    let mut text = Vec::new();
    table.write_to(&mut text)?;
    print!("boundaries:\n{}", String::from_utf8(text)?);

    let mut load = vec![0u64; partitions];
    for r in &reads {
        for off in 0..r.len() {
            load[table.partition_of(encode_prefix_unchecked(&r.text()[off..], prefix_len))] += 1;
        }
    }
    let mean = load.iter().sum::<u64>() as f64 / partitions as f64;
    for (i, n) in load.iter().enumerate() {
        println!("partition {i}: {n:>7} suffixes ({:.2} x mean)", *n as f64 / mean);
    }
    Ok(())
}
