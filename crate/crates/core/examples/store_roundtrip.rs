// SPDX-License-Identifier: Apache-2.0

//! Two in-process shards: put reads, fetch one back, fetch suffixes in bulk.
//!
//! ```text
//! cargo run --example store_roundtrip
//! ```

use sufforge::encoding::pack_index;
use sufforge::store::{EmbeddedStore, StoreClient, SuffixSlot};
use sufforge::Read;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let store = EmbeddedStore::spawn(2)?;
    println!("shards at {:?}", store.endpoints());
    let mut client = StoreClient::connect(&store.endpoints())?;

    let reads = vec![Read::new(10, "ACGT$")?, Read::new(11, "GGA$")?, Read::new(12, "T$")?];
    let ack = client.mput_reads(&reads)?;
    println!("stored {} rejected {:?}", ack.stored, ack.rejected);
    println!("read 11 = {}", String::from_utf8(client.get_read(11)?)?);

    let want = [pack_index(10, 0)?, pack_index(11, 2)?, pack_index(10, 3)?, pack_index(12, 5)?, pack_index(99, 0)?];
    for (idx, slot) in want.iter().zip(client.mget_suffix(&want)?) {
        match slot {
            SuffixSlot::Found(text) => println!("{:>6} -> {}", idx.0, String::from_utf8(text)?),
            other => println!("{:>6} -> {other:?}", idx.0),
        }
    }
    for (i, s) in store.stats().iter().enumerate() {
        println!("shard {i}: {} reads, {} text bytes", s.reads, s.text_bytes);
    }
    Ok(())
}
