//! Binary stream-file format.
//!
//! Layout: magic `FLMS`, version byte 0x01, mode byte (0x00 plain / 0x01
//! key-value), direction byte (0x00 descending / 0x01 ascending), an 8-byte
//! little-endian record count, then count 8-byte little-endian records.

use flims_core::{Direction, Record};
use std::fs;
use std::io::Write;
use std::path::Path;

pub const MAGIC: [u8; 4] = *b"FLMS";
pub const VERSION: u8 = 0x01;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StreamHeader {
    pub kv_mode: bool,
    pub direction: Direction,
}

impl StreamHeader {
    pub fn new(direction: Direction, kv_mode: bool) -> Self {
        StreamHeader { kv_mode, direction }
    }
}

#[derive(Debug)]
pub enum StreamError {
    Io(std::io::Error),
    Format(String),
}

impl std::fmt::Display for StreamError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StreamError::Io(e) => write!(f, "{e}"),
            StreamError::Format(m) => write!(f, "{m}"),
        }
    }
}

impl From<std::io::Error> for StreamError {
    fn from(e: std::io::Error) -> Self {
        StreamError::Io(e)
    }
}

pub fn write_stream(
    path: &Path,
    header: StreamHeader,
    records: &[Record],
) -> Result<(), StreamError> {
    let mut buf = Vec::with_capacity(16 + 8 * records.len());
    buf.extend_from_slice(&MAGIC);
    buf.push(VERSION);
    buf.push(u8::from(header.kv_mode));
    buf.push(match header.direction {
        Direction::Descending => 0x00,
        Direction::Ascending => 0x01,
    });
    buf.extend_from_slice(&(records.len() as u64).to_le_bytes());
    for r in records {
        buf.extend_from_slice(&r.0.to_le_bytes());
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(())
}

pub fn read_stream(path: &Path) -> Result<(StreamHeader, Vec<Record>), StreamError> {
    let name = path.display();
    let data = fs::read(path)?;
    if data.len() < 15 {
        return Err(StreamError::Format(format!("{name}: truncated header")));
    }
    if data[0..4] != MAGIC {
        return Err(StreamError::Format(format!("{name}: bad magic bytes")));
    }
    if data[4] != VERSION {
        return Err(StreamError::Format(format!(
            "{name}: unsupported version {}",
            data[4]
        )));
    }
    let kv_mode = match data[5] {
        0x00 => false,
        0x01 => true,
        m => return Err(StreamError::Format(format!("{name}: bad mode byte {m:#x}"))),
    };
    let direction = match data[6] {
        0x00 => Direction::Descending,
        0x01 => Direction::Ascending,
        d => {
            return Err(StreamError::Format(format!(
                "{name}: bad direction byte {d:#x}"
            )))
        }
    };
    let count = u64::from_le_bytes(data[7..15].try_into().unwrap()) as usize;
    let body = &data[15..];
    if body.len() != 8 * count {
        return Err(StreamError::Format(format!(
            "{name}: body holds {} bytes, header declares {count} records",
            body.len()
        )));
    }
    let records = body
        .chunks_exact(8)
        .map(|c| Record(u64::from_le_bytes(c.try_into().unwrap())))
        .collect();
    Ok((StreamHeader { kv_mode, direction }, records))
}
