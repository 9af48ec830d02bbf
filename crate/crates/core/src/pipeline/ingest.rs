// SPDX-License-Identifier: Apache-2.0

//! Input parsing: `seq<TAB>read` lines, one or two files.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use crate::encoding::OFFSET_RADIX;
use crate::store::{Read, ReadError, MAX_READ_LEN};

use super::PipelineError;

#[derive(Debug, Default)]
pub struct Ingested {
    pub reads: Vec<Read>,
    /// Bytes of the input files, newlines included.
    pub input_bytes: u64,
    /// Raw read symbols, without `$`.
    pub bases: u64,
}

pub fn ingest_files<P: AsRef<Path>>(paths: &[P]) -> Result<Ingested, PipelineError> {
    let mut out = Ingested::default();
    let mut seen = HashSet::new();
    for path in paths {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| PipelineError::Ingest {
            file: path.to_path_buf(),
            line: 0,
            msg: e.to_string(),
        })?;
        ingest_reader(BufReader::new(file), path, &mut seen, &mut out)?;
    }
    Ok(out)
}

pub fn ingest_reader<R: BufRead>(
    mut reader: R,
    path: &Path,
    seen: &mut HashSet<u64>,
    out: &mut Ingested,
) -> Result<(), PipelineError> {
    let err = |line: usize, msg: String| PipelineError::Ingest {
        file: PathBuf::from(path),
        line,
        msg,
    };
    let mut buf = Vec::new();
    let mut line_no = 0;
    loop {
        buf.clear();
        let n = reader
            .read_until(b'\n', &mut buf)
            .map_err(|e| err(line_no + 1, e.to_string()))?;
        if n == 0 {
            break;
        }
        line_no += 1;
        out.input_bytes += n as u64;
        let line = buf.strip_suffix(b"\n").unwrap_or(&buf);
        let tab = line
            .iter()
            .position(|&b| b == b'\t')
            .ok_or_else(|| err(line_no, "expected `seq<TAB>read`".into()))?;
        let seq: u64 = std::str::from_utf8(&line[..tab])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| err(line_no, "sequence number is not a non-negative integer".into()))?;
        if seq > u64::MAX / OFFSET_RADIX - 1 {
            return Err(err(line_no, format!("sequence number {seq} too large")));
        }
        let text = &line[tab + 1..];
        let read = Read::terminated(seq, text.to_vec()).map_err(|e| match e {
            ReadError::TooLong(_) => err(
                line_no,
                format!(
                    "read of {} symbols exceeds the {} supported",
                    text.len(),
                    MAX_READ_LEN - 1
                ),
            ),
            other => err(line_no, other.to_string()),
        })?;
        if !seen.insert(seq) {
            return Err(err(line_no, format!("duplicate sequence number {seq}")));
        }
        out.bases += read.len() as u64 - 1;
        out.reads.push(read);
    }
    Ok(())
}
