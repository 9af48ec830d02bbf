// SPDX-License-Identifier: Apache-2.0

//! Memory efficiency and the linear time model.
//!
//! ```text
//! cargo run --example efficiency_model
//! ```

use sufforge::model::{efficiency, fit_time_model, mem_ratio};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("speedup 1.45 at 2x memory: {:.2}%", efficiency(1.45, 2.0));
    println!("speedup 1.53 at 4x memory: {:.2}%", efficiency(1.53, 4.0));
    for extra in [9.0, 256.0, 768.0] {
        println!("(256 + {extra}) / 256 = {:.3}", mem_ratio(256.0, extra));
    }

    // Mean minutes per input size in TB.
    let points = [(0.637, 61.8), (1.24, 143.4), (1.86, 230.4), (2.49, 312.0)];
    let model = fit_time_model(&points, Some(3.0))?;
    println!("t = {:.2} x {:+.2} min, breakdown {:?}", model.a, model.b, model.breakdown);
    for x in [1.0, 2.0, 3.5] {
        match model.predict(x) {
            Some(t) => println!("  {x} TB -> {t:.1} min"),
            None => println!("  {x} TB -> past breakdown"),
        }
    }
    Ok(())
}
