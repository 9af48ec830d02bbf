// SPDX-License-Identifier: Apache-2.0

//! Binary framing for the read store.
//!
//! All integers are big-endian. Every frame starts with a `u32` holding the
//! length of the whole frame, the 4 length bytes included.
//!
//! ```text
//! request := u32 total_length | u8 opcode | payload
//!   0x01 MPUT        u32 count, count x (u64 seq, u16 len, len bytes)
//!   0x02 GET         u64 seq
//!   0x03 MGETSUFFIX  u32 count, count x u64 packed index
//! reply   := u32 total_length | u8 status | payload
//!   MPUT        u32 stored, u32 rejected, rejected x u32 item position
//!   GET         text bytes (status 1 when missing)
//!   MGETSUFFIX  count x (i16 len, len bytes); len -1 not found, -2 bad offset
//! ```

use std::io::{self, Read, Write};

use thiserror::Error;

use crate::encoding::SuffixIndex;

pub const OP_MPUT: u8 = 0x01;
pub const OP_GET: u8 = 0x02;
pub const OP_MGETSUFFIX: u8 = 0x03;

pub const STATUS_OK: u8 = 0;
pub const STATUS_NOT_FOUND: u8 = 1;
pub const STATUS_BAD_REQUEST: u8 = 2;

pub const SLOT_NOT_FOUND: i16 = -1;
pub const SLOT_RANGE_ERROR: i16 = -2;

/// Upper bound on a frame, guarding against garbage length prefixes.
pub const MAX_FRAME_LEN: usize = 1 << 30;

const HEADER_LEN: usize = 5;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("frame truncated")]
    Truncated,
    #[error("frame length {0} invalid")]
    BadLength(usize),
    #[error("unknown opcode {0:#04x}")]
    UnknownOpcode(u8),
    #[error("unknown status {0}")]
    UnknownStatus(u8),
    #[error("{0} trailing bytes after payload")]
    Trailing(usize),
    #[error("field too large: {0}")]
    Oversize(&'static str),
    #[error("bad slot length {0}")]
    BadSlot(i16),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Request {
    MPut(Vec<(u64, Vec<u8>)>),
    Get(u64),
    MGetSuffix(Vec<SuffixIndex>),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MPutAck {
    pub stored: u32,
    /// Positions within the batch of items the shard refused.
    pub rejected: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SuffixSlot {
    Found(Vec<u8>),
    NotFound,
    RangeError,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reply {
    MPut(MPutAck),
    Get(Option<Vec<u8>>),
    MGetSuffix(Vec<SuffixSlot>),
    BadRequest(String),
}

impl Request {
    pub fn opcode(&self) -> u8 {
        match self {
            Request::MPut(_) => OP_MPUT,
            Request::Get(_) => OP_GET,
            Request::MGetSuffix(_) => OP_MGETSUFFIX,
        }
    }

    pub fn encode(&self) -> Result<Vec<u8>, ProtocolError> {
        let mut buf = FrameBuf::new(self.opcode());
        match self {
            Request::MPut(items) => {
                buf.u32(count_u32(items.len())?);
                for (seq, text) in items {
                    let len = u16::try_from(text.len())
                        .map_err(|_| ProtocolError::Oversize("read text"))?;
                    buf.u64(*seq);
                    buf.u16(len);
                    buf.bytes(text);
                }
            }
            Request::Get(seq) => buf.u64(*seq),
            Request::MGetSuffix(indexes) => {
                buf.u32(count_u32(indexes.len())?);
                for idx in indexes {
                    buf.u64(idx.0);
                }
            }
        }
        buf.finish()
    }

    pub fn decode(frame: &[u8]) -> Result<Self, ProtocolError> {
        let (opcode, mut cur) = split_header(frame)?;
        let req = match opcode {
            OP_MPUT => {
                let count = cur.u32()? as usize;
                let mut items = Vec::with_capacity(count.min(cur.remaining() / 10));
                for _ in 0..count {
                    let seq = cur.u64()?;
                    let len = cur.u16()? as usize;
                    items.push((seq, cur.take(len)?.to_vec()));
                }
                Request::MPut(items)
            }
            OP_GET => Request::Get(cur.u64()?),
            OP_MGETSUFFIX => {
                let count = cur.u32()? as usize;
                let mut indexes = Vec::with_capacity(count.min(cur.remaining() / 8));
                for _ in 0..count {
                    indexes.push(SuffixIndex(cur.u64()?));
                }
                Request::MGetSuffix(indexes)
            }
            other => return Err(ProtocolError::UnknownOpcode(other)),
        };
        cur.finish()?;
        Ok(req)
    }
}

impl Reply {
    pub fn encode(&self) -> Result<Vec<u8>, ProtocolError> {
        let status = match self {
            Reply::Get(None) => STATUS_NOT_FOUND,
            Reply::BadRequest(_) => STATUS_BAD_REQUEST,
            _ => STATUS_OK,
        };
        let mut buf = FrameBuf::new(status);
        match self {
            Reply::MPut(ack) => {
                buf.u32(ack.stored);
                buf.u32(count_u32(ack.rejected.len())?);
                for &pos in &ack.rejected {
                    buf.u32(pos);
                }
            }
            Reply::Get(Some(text)) => buf.bytes(text),
            Reply::Get(None) => {}
            Reply::MGetSuffix(slots) => {
                for slot in slots {
                    match slot {
                        SuffixSlot::Found(text) => {
                            let len = i16::try_from(text.len())
                                .map_err(|_| ProtocolError::Oversize("suffix"))?;
                            buf.i16(len);
                            buf.bytes(text);
                        }
                        SuffixSlot::NotFound => buf.i16(SLOT_NOT_FOUND),
                        SuffixSlot::RangeError => buf.i16(SLOT_RANGE_ERROR),
                    }
                }
            }
            Reply::BadRequest(msg) => buf.bytes(msg.as_bytes()),
        }
        buf.finish()
    }

    /// Decodes a reply to a request with `opcode`. `expected` is the item
    /// count of the request, needed because MGETSUFFIX replies carry none.
    pub fn decode(frame: &[u8], opcode: u8, expected: usize) -> Result<Self, ProtocolError> {
        let (status, mut cur) = split_header(frame)?;
        if status == STATUS_BAD_REQUEST {
            return Ok(Reply::BadRequest(
                String::from_utf8_lossy(cur.rest()).into_owned(),
            ));
        }
        let reply = match (opcode, status) {
            (OP_MPUT, STATUS_OK) => {
                let stored = cur.u32()?;
                let n = cur.u32()? as usize;
                let mut rejected = Vec::with_capacity(n.min(cur.remaining() / 4));
                for _ in 0..n {
                    rejected.push(cur.u32()?);
                }
                Reply::MPut(MPutAck { stored, rejected })
            }
            (OP_GET, STATUS_OK) => Reply::Get(Some(cur.rest().to_vec())),
            (OP_GET, STATUS_NOT_FOUND) => Reply::Get(None),
            (OP_MGETSUFFIX, STATUS_OK) => {
                let mut slots = Vec::with_capacity(expected.min(cur.remaining() / 2));
                for _ in 0..expected {
                    let len = cur.i16()?;
                    slots.push(match len {
                        SLOT_NOT_FOUND => SuffixSlot::NotFound,
                        SLOT_RANGE_ERROR => SuffixSlot::RangeError,
                        n if n >= 0 => SuffixSlot::Found(cur.take(n as usize)?.to_vec()),
                        n => return Err(ProtocolError::BadSlot(n)),
                    });
                }
                Reply::MGetSuffix(slots)
            }
            (OP_MPUT | OP_GET | OP_MGETSUFFIX, s) => return Err(ProtocolError::UnknownStatus(s)),
            (op, _) => return Err(ProtocolError::UnknownOpcode(op)),
        };
        cur.finish()?;
        Ok(reply)
    }
}

/// Reads one whole frame. Returns `None` on a clean end of stream.
pub fn read_frame<R: Read>(r: &mut R) -> io::Result<Option<Vec<u8>>> {
    let mut len_buf = [0u8; 4];
    match r.read_exact(&mut len_buf) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e),
    }
    let len = u32::from_be_bytes(len_buf) as usize;
    if !(HEADER_LEN..=MAX_FRAME_LEN).contains(&len) {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            ProtocolError::BadLength(len),
        ));
    }
    let mut frame = vec![0u8; len];
    frame[..4].copy_from_slice(&len_buf);
    r.read_exact(&mut frame[4..])?;
    Ok(Some(frame))
}

pub fn write_frame<W: Write>(w: &mut W, frame: &[u8]) -> io::Result<()> {
    w.write_all(frame)?;
    w.flush()
}

fn count_u32(n: usize) -> Result<u32, ProtocolError> {
    u32::try_from(n).map_err(|_| ProtocolError::Oversize("item count"))
}

fn split_header(frame: &[u8]) -> Result<(u8, Cursor<'_>), ProtocolError> {
    if frame.len() < HEADER_LEN {
        return Err(ProtocolError::Truncated);
    }
    let len = u32::from_be_bytes(frame[..4].try_into().unwrap()) as usize;
    if len != frame.len() {
        return Err(ProtocolError::BadLength(len));
    }
    Ok((frame[4], Cursor { buf: &frame[HEADER_LEN..] }))
}

struct FrameBuf(Vec<u8>);

impl FrameBuf {
    fn new(tag: u8) -> Self {
        let mut v = Vec::with_capacity(64);
        v.extend_from_slice(&[0, 0, 0, 0, tag]);
        Self(v)
    }
    fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_be_bytes());
    }
    fn i16(&mut self, v: i16) {
        self.0.extend_from_slice(&v.to_be_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_be_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_be_bytes());
    }
    fn bytes(&mut self, b: &[u8]) {
        self.0.extend_from_slice(b);
    }
    fn finish(mut self) -> Result<Vec<u8>, ProtocolError> {
        let len = self.0.len();
        if len > MAX_FRAME_LEN {
            return Err(ProtocolError::Oversize("frame"));
        }
        self.0[..4].copy_from_slice(&(len as u32).to_be_bytes());
        Ok(self.0)
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ProtocolError> {
        if self.buf.len() < n {
            return Err(ProtocolError::Truncated);
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }
    fn u16(&mut self) -> Result<u16, ProtocolError> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn i16(&mut self) -> Result<i16, ProtocolError> {
        Ok(i16::from_be_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32, ProtocolError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, ProtocolError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn remaining(&self) -> usize {
        self.buf.len()
    }
    fn rest(&mut self) -> &'a [u8] {
        std::mem::take(&mut self.buf)
    }
    fn finish(self) -> Result<(), ProtocolError> {
        match self.buf.len() {
            0 => Ok(()),
            n => Err(ProtocolError::Trailing(n)),
        }
    }
}
