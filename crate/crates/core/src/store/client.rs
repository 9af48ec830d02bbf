// SPDX-License-Identifier: Apache-2.0

use std::io::{BufReader, BufWriter};
use std::net::TcpStream;

use crate::encoding::SuffixIndex;

use super::protocol::{self, MPutAck, Reply, Request, SuffixSlot};
use super::{shard_of, Read, StoreError};

/// Connection to a single shard.
pub struct ShardClient {
    endpoint: String,
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
}

impl ShardClient {
    pub fn connect(endpoint: &str) -> Result<Self, StoreError> {
        let transport = |source| StoreError::Transport {
            endpoint: endpoint.to_string(),
            source,
        };
        let stream = TcpStream::connect(endpoint).map_err(transport)?;
        stream.set_nodelay(true).map_err(transport)?;
        let reader = BufReader::with_capacity(1 << 16, stream.try_clone().map_err(transport)?);
        Ok(Self {
            endpoint: endpoint.to_string(),
            reader,
            writer: BufWriter::with_capacity(1 << 16, stream),
        })
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn call(&mut self, req: &Request, expected: usize) -> Result<Reply, StoreError> {
        let frame = req.encode()?;
        let transport = |source| StoreError::Transport {
            endpoint: self.endpoint.clone(),
            source,
        };
        protocol::write_frame(&mut self.writer, &frame).map_err(transport)?;
        let reply = protocol::read_frame(&mut self.reader)
            .map_err(transport)?
            .ok_or_else(|| {
                transport(std::io::Error::new(
                    std::io::ErrorKind::UnexpectedEof,
                    "connection closed",
                ))
            })?;
        match Reply::decode(&reply, req.opcode(), expected)? {
            Reply::BadRequest(msg) => Err(StoreError::Rejected(msg)),
            r => Ok(r),
        }
    }

    pub fn mput(&mut self, reads: &[Read]) -> Result<MPutAck, StoreError> {
        let items = reads.iter().map(|r| (r.seq(), r.text().to_vec())).collect();
        match self.call(&Request::MPut(items), reads.len())? {
            Reply::MPut(ack) => Ok(ack),
            other => Err(unexpected(other)),
        }
    }

    pub fn get(&mut self, seq: u64) -> Result<Vec<u8>, StoreError> {
        match self.call(&Request::Get(seq), 1)? {
            Reply::Get(Some(text)) => Ok(text),
            Reply::Get(None) => Err(StoreError::NotFound(seq)),
            other => Err(unexpected(other)),
        }
    }

    pub fn mget_suffix(&mut self, indexes: &[SuffixIndex]) -> Result<Vec<SuffixSlot>, StoreError> {
        match self.call(&Request::MGetSuffix(indexes.to_vec()), indexes.len())? {
            Reply::MGetSuffix(slots) => Ok(slots),
            other => Err(unexpected(other)),
        }
    }
}

fn unexpected(reply: Reply) -> StoreError {
    StoreError::Rejected(format!("unexpected reply {reply:?}"))
}

/// Connections to every shard; routes by `seq % shard_count`.
///
/// Not shared between threads: each worker connects its own.
pub struct StoreClient {
    shards: Vec<ShardClient>,
}

impl StoreClient {
    pub fn connect<S: AsRef<str>>(endpoints: &[S]) -> Result<Self, StoreError> {
        if endpoints.is_empty() {
            return Err(StoreError::NoEndpoints);
        }
        let shards = endpoints
            .iter()
            .map(|e| ShardClient::connect(e.as_ref()))
            .collect::<Result<_, _>>()?;
        Ok(Self { shards })
    }

    pub fn shard_count(&self) -> usize {
        self.shards.len()
    }

    /// Sends reads grouped by owning shard, one MPUT per shard. Positions in
    /// the returned ack refer to `batch`.
    pub fn mput_reads(&mut self, batch: &[Read]) -> Result<MPutAck, StoreError> {
        let n = self.shards.len();
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (pos, r) in batch.iter().enumerate() {
            groups[shard_of(r.seq(), n)].push(pos);
        }
        let mut total = MPutAck::default();
        for (shard, positions) in groups.into_iter().enumerate() {
            if positions.is_empty() {
                continue;
            }
            let reads: Vec<Read> = positions.iter().map(|&p| batch[p].clone()).collect();
            let ack = self.shards[shard].mput(&reads)?;
            total.stored += ack.stored;
            total.rejected.extend(ack.rejected.iter().map(|&i| positions[i as usize] as u32));
        }
        total.rejected.sort_unstable();
        Ok(total)
    }

    pub fn get_read(&mut self, seq: u64) -> Result<Vec<u8>, StoreError> {
        let n = self.shards.len();
        self.shards[shard_of(seq, n)].get(seq)
    }

    /// One MGETSUFFIX per shard touched; results come back in input order.
    pub fn mget_suffix(&mut self, indexes: &[SuffixIndex]) -> Result<Vec<SuffixSlot>, StoreError> {
        let n = self.shards.len();
        if n == 1 {
            return self.shards[0].mget_suffix(indexes);
        }
        let mut groups: Vec<(Vec<usize>, Vec<SuffixIndex>)> = vec![Default::default(); n];
        for (pos, &idx) in indexes.iter().enumerate() {
            let g = &mut groups[shard_of(idx.seq(), n)];
            g.0.push(pos);
            g.1.push(idx);
        }
        let mut out: Vec<Option<SuffixSlot>> = vec![None; indexes.len()];
        for (shard, (positions, idxs)) in groups.into_iter().enumerate() {
            if idxs.is_empty() {
                continue;
            }
            let slots = self.shards[shard].mget_suffix(&idxs)?;
            for (p, slot) in positions.into_iter().zip(slots) {
                out[p] = Some(slot);
            }
        }
        Ok(out.into_iter().map(|s| s.expect("every position answered")).collect())
    }
}
