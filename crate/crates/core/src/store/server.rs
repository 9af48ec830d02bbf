// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;
use std::io::{self, BufReader, BufWriter};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, RwLock};
use std::thread::{self, JoinHandle};

use crate::encoding::SuffixIndex;

use super::protocol::{self, MPutAck, Reply, Request, SuffixSlot};
use super::{shard_of, validate_read};

/// One shard's key space. Mutations take the write lock, so every command
/// on a shard is applied in a single order.
#[derive(Debug)]
pub struct Shard {
    index: usize,
    count: usize,
    reads: RwLock<HashMap<u64, Box<[u8]>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub struct ShardStats {
    pub reads: u64,
    pub text_bytes: u64,
    /// Text plus table slots, an estimate of resident memory.
    pub approx_bytes: u64,
}

impl Shard {
    pub fn new(index: usize, count: usize) -> Self {
        assert!(count >= 1 && index < count, "shard {index} of {count}");
        Self {
            index,
            count,
            reads: RwLock::new(HashMap::new()),
        }
    }

    pub fn index(&self) -> usize {
        self.index
    }

    fn owns(&self, seq: u64) -> bool {
        shard_of(seq, self.count) == self.index
    }

    pub fn mput(&self, items: Vec<(u64, Vec<u8>)>) -> MPutAck {
        let mut ack = MPutAck::default();
        let mut reads = self.reads.write().unwrap();
        for (pos, (seq, text)) in items.into_iter().enumerate() {
            if !self.owns(seq) || validate_read(&text).is_err() {
                ack.rejected.push(pos as u32);
                continue;
            }
            reads.insert(seq, text.into_boxed_slice());
            ack.stored += 1;
        }
        ack
    }

    pub fn get(&self, seq: u64) -> Option<Vec<u8>> {
        if !self.owns(seq) {
            return None;
        }
        self.reads.read().unwrap().get(&seq).map(|t| t.to_vec())
    }

    pub fn mget_suffix(&self, indexes: &[SuffixIndex]) -> Vec<SuffixSlot> {
        let reads = self.reads.read().unwrap();
        indexes
            .iter()
            .map(|idx| {
                let seq = idx.seq();
                let Some(text) = reads.get(&seq).filter(|_| self.owns(seq)) else {
                    return SuffixSlot::NotFound;
                };
                match text.get(idx.offset()..).filter(|s| !s.is_empty()) {
                    Some(suffix) => {
                        debug_assert_eq!(suffix, &text[text.len() - suffix.len()..]);
                        debug_assert_eq!(suffix.last(), Some(&b'$'));
                        SuffixSlot::Found(suffix.to_vec())
                    }
                    None => SuffixSlot::RangeError,
                }
            })
            .collect()
    }

    pub fn handle(&self, req: Request) -> Reply {
        match req {
            Request::MPut(items) => Reply::MPut(self.mput(items)),
            Request::Get(seq) => Reply::Get(self.get(seq)),
            Request::MGetSuffix(indexes) => Reply::MGetSuffix(self.mget_suffix(&indexes)),
        }
    }

    pub fn stats(&self) -> ShardStats {
        let reads = self.reads.read().unwrap();
        let text_bytes: u64 = reads.values().map(|t| t.len() as u64).sum();
        let slot = (std::mem::size_of::<u64>() + std::mem::size_of::<Box<[u8]>>() + 1) as u64;
        ShardStats {
            reads: reads.len() as u64,
            text_bytes,
            approx_bytes: text_bytes + reads.capacity() as u64 * slot,
        }
    }
}

/// Answers one connection until the peer hangs up.
pub fn serve_connection(shard: &Shard, stream: TcpStream) -> io::Result<()> {
    stream.set_nodelay(true)?;
    let mut reader = BufReader::with_capacity(1 << 16, stream.try_clone()?);
    let mut writer = BufWriter::with_capacity(1 << 16, stream);
    while let Some(frame) = protocol::read_frame(&mut reader)? {
        let reply = match Request::decode(&frame) {
            Ok(req) => shard.handle(req),
            Err(e) => Reply::BadRequest(e.to_string()),
        };
        let out = reply
            .encode()
            .unwrap_or_else(|e| Reply::BadRequest(e.to_string()).encode().unwrap());
        protocol::write_frame(&mut writer, &out)?;
    }
    Ok(())
}

/// A shard listening on TCP, one thread per connection.
pub struct ShardServer {
    shard: Arc<Shard>,
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    acceptor: Option<JoinHandle<()>>,
}

impl ShardServer {
    pub fn bind(shard: Shard, addr: impl ToSocketAddrs) -> io::Result<Self> {
        let listener = TcpListener::bind(addr)?;
        let addr = listener.local_addr()?;
        let shard = Arc::new(shard);
        let stop = Arc::new(AtomicBool::new(false));
        let acceptor = {
            let shard = Arc::clone(&shard);
            let stop = Arc::clone(&stop);
            thread::Builder::new()
                .name(format!("shard-{}", shard.index()))
                .spawn(move || accept_loop(&listener, shard, &stop))?
        };
        Ok(Self {
            shard,
            addr,
            stop,
            acceptor: Some(acceptor),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn shard(&self) -> &Shard {
        &self.shard
    }

    /// Blocks until the accept loop exits (it only does on shutdown).
    pub fn join(mut self) {
        if let Some(h) = self.acceptor.take() {
            let _ = h.join();
        }
    }

    pub fn shutdown(&mut self) {
        if self.stop.swap(true, Ordering::SeqCst) {
            return;
        }
        // Wake the blocking accept.
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.acceptor.take() {
            let _ = h.join();
        }
    }
}

impl Drop for ShardServer {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn accept_loop(listener: &TcpListener, shard: Arc<Shard>, stop: &AtomicBool) {
    for stream in listener.incoming() {
        if stop.load(Ordering::SeqCst) {
            break;
        }
        let Ok(stream) = stream else { continue };
        let shard = Arc::clone(&shard);
        let _ = thread::Builder::new()
            .name(format!("shard-{}-conn", shard.index()))
            .spawn(move || {
                let _ = serve_connection(&shard, stream);
            });
    }
}

/// In-process shards on loopback ports, for single-machine runs and tests.
pub struct EmbeddedStore {
    servers: Vec<ShardServer>,
}

impl EmbeddedStore {
    pub fn spawn(shard_count: usize) -> io::Result<Self> {
        let servers = (0..shard_count)
            .map(|i| ShardServer::bind(Shard::new(i, shard_count), "127.0.0.1:0"))
            .collect::<io::Result<Vec<_>>>()?;
        Ok(Self { servers })
    }

    pub fn endpoints(&self) -> Vec<String> {
        self.servers.iter().map(|s| s.local_addr().to_string()).collect()
    }

    pub fn shards(&self) -> impl Iterator<Item = &Shard> {
        self.servers.iter().map(|s| s.shard())
    }

    pub fn stats(&self) -> Vec<ShardStats> {
        self.shards().map(Shard::stats).collect()
    }
}
