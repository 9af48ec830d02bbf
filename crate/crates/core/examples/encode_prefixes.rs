// SPDX-License-Identifier: Apache-2.0

//! Packed suffix indexes and base-5 prefix codes.
//!
//! ```text
//! cargo run --example encode_prefixes
//! ```

use sufforge::encoding::{encode_prefix, max_prefix_length, pack_index, unpack_index};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let idx = pack_index(12, 999)?;
    println!("seq 12 offset 999 -> {} -> {:?}", idx.0, unpack_index(idx));
    println!("offset 1000 -> {}", pack_index(12, 1000).unwrap_err());

    for s in ["$", "A$", "AGT$", "ACGTACGTACGT$", "TTTTTTTTTTTTT"] {
        let code = encode_prefix(s.as_bytes(), 13)?;
        println!(
            "{s:>14} -> {:>10}  digits {:?}  complete {}",
            code.0,
            code.digits(13),
            code.is_complete(13)
        );
    }

    // Codes order like the strings they encode.
    let mut words = ["GT$", "AGT$", "A$", "$", "ACGT$", "TA$"];
    words.sort();
    let codes: Vec<u64> = words
        .iter()
        .map(|w| encode_prefix(w.as_bytes(), 6).map(|c| c.0))
        .collect::<Result<_, _>>()?;
    assert!(codes.windows(2).all(|p| p[0] <= p[1]));
    println!("{words:?} -> {codes:?}");

    println!("longest prefix in a 31-bit key: {}", max_prefix_length(31));
    println!("longest prefix in a 63-bit key: {}", max_prefix_length(63));
    Ok(())
}
