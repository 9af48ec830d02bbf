// SPDX-License-Identifier: Apache-2.0

//! The classic seven-suffix example, then the same order on a DNA read.
//!
//! ```text
//! cargo run --example golden_sinica
//! ```

use sufforge::oracle::{naive_sa, text_suffix_array};
use sufforge::Read;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = b"SINICA$";
    let sa = text_suffix_array(text);
    println!("SA[i]  sorted suffix");
    for &start in &sa {
        println!("{start:>5}  {}", std::str::from_utf8(&text[start..])?);
    }
    assert_eq!(sa, [6, 5, 4, 3, 1, 2, 0]);

    // Reads use $ < A < C < G < T, which is plain byte order.
    let read = Read::new(0, "ACGCA$")?;
    for e in naive_sa(&[read])? {
        println!("{:>5}  {}", e.index.offset(), String::from_utf8_lossy(&e.suffix));
    }
    Ok(())
}
