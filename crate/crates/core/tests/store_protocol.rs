// SPDX-License-Identifier: Apache-2.0

use std::net::TcpStream;

use proptest::prelude::*;
use sufforge::encoding::SuffixIndex;
use sufforge::store::protocol::{read_frame, write_frame, Reply, Request, OP_GET, OP_MGETSUFFIX, OP_MPUT};
use sufforge::store::{EmbeddedStore, MPutAck, ShardClient, SuffixSlot};
use sufforge::Read;

fn request() -> impl Strategy<Value = Request> {
    prop_oneof![
        prop::collection::vec((any::<u64>(), prop::collection::vec(any::<u8>(), 0..40)), 0..6)
            .prop_map(Request::MPut),
        any::<u64>().prop_map(Request::Get),
        prop::collection::vec(any::<u64>().prop_map(SuffixIndex), 0..10).prop_map(Request::MGetSuffix),
    ]
}

fn slot() -> impl Strategy<Value = SuffixSlot> {
    prop_oneof![
        prop::collection::vec(any::<u8>(), 0..40).prop_map(SuffixSlot::Found),
        Just(SuffixSlot::NotFound),
        Just(SuffixSlot::RangeError),
    ]
}

proptest! {
    #[test]
    fn requests_round_trip(req in request()) {
        let frame = req.encode().unwrap();
        prop_assert_eq!(u32::from_be_bytes(frame[..4].try_into().unwrap()) as usize, frame.len());
        prop_assert_eq!(Request::decode(&frame).unwrap(), req);
    }

    #[test]
    fn suffix_replies_round_trip(slots in prop::collection::vec(slot(), 0..10)) {
        let reply = Reply::MGetSuffix(slots);
        let n = match &reply { Reply::MGetSuffix(s) => s.len(), _ => unreachable!() };
        let frame = reply.encode().unwrap();
        prop_assert_eq!(Reply::decode(&frame, OP_MGETSUFFIX, n).unwrap(), reply);
    }

    #[test]
    fn ack_and_get_replies_round_trip(
        stored in any::<u32>(),
        rejected in prop::collection::vec(any::<u32>(), 0..6),
        text in prop::option::of(prop::collection::vec(any::<u8>(), 0..40)),
    ) {
        let ack = Reply::MPut(MPutAck { stored, rejected });
        prop_assert_eq!(Reply::decode(&ack.encode().unwrap(), OP_MPUT, 0).unwrap(), ack);
        let get = Reply::Get(text);
        prop_assert_eq!(Reply::decode(&get.encode().unwrap(), OP_GET, 1).unwrap(), get);
    }

    #[test]
    fn garbage_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..64), op in 0u8..5, n in 0usize..4) {
        let _ = Request::decode(&bytes);
        let _ = Reply::decode(&bytes, op, n);
        // Same bytes behind a consistent length header.
        let mut framed = ((bytes.len() + 4) as u32).to_be_bytes().to_vec();
        framed.extend(&bytes);
        let _ = Request::decode(&framed);
        let _ = Reply::decode(&framed, op, n);
    }
}

#[test]
fn live_shard_answers_and_survives_bad_frames() {
    let store = EmbeddedStore::spawn(2).unwrap();
    let endpoints = store.endpoints();
    let mut c0 = ShardClient::connect(&endpoints[0]).unwrap();
    let reads = [Read::new(4, "ACGT$").unwrap(), Read::new(5, "GG$").unwrap()];
    let ack = c0.mput(&reads).unwrap();
    assert_eq!(ack, MPutAck { stored: 1, rejected: vec![1] });
    assert_eq!(c0.get(4).unwrap(), b"ACGT$");
    let slots = c0
        .mget_suffix(&[SuffixIndex(4002), SuffixIndex(4005), SuffixIndex(6000), SuffixIndex(4000)])
        .unwrap();
    assert_eq!(
        slots,
        [
            SuffixSlot::Found(b"GT$".to_vec()),
            SuffixSlot::RangeError,
            SuffixSlot::NotFound,
            SuffixSlot::Found(b"ACGT$".to_vec()),
        ]
    );

    // An unknown opcode gets a bad-request reply and the connection stays up.
    let mut raw = TcpStream::connect(&endpoints[0]).unwrap();
    write_frame(&mut raw, &[0, 0, 0, 5, 9]).unwrap();
    let reply = read_frame(&mut raw).unwrap().unwrap();
    assert!(matches!(Reply::decode(&reply, 9, 0), Ok(Reply::BadRequest(_))));
    let get = Request::Get(4).encode().unwrap();
    write_frame(&mut raw, &get).unwrap();
    let reply = read_frame(&mut raw).unwrap().unwrap();
    assert_eq!(Reply::decode(&reply, OP_GET, 1).unwrap(), Reply::Get(Some(b"ACGT$".to_vec())));
}
