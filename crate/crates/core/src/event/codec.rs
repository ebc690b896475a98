//! Fixed little-endian binary layout.
//!
//! ```text
//! header (20 bytes): "EVS1" | width u32 | height u32 | event_count u64
//! record (16 bytes): x u16 | y u16 | p i8 | pad [0; 3] | t u64
//! ```

use alloc::vec::Vec;

use super::{Event, EventStream};

pub const MAGIC: [u8; 4] = *b"EVS1";
pub const HEADER_LEN: usize = 20;
pub const RECORD_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecodeError {
    #[error("bad magic at byte 0: expected \"EVS1\", found {found:?}")]
    BadMagic { found: [u8; 4] },
    #[error("truncated header: {len} bytes, need {HEADER_LEN}")]
    TruncatedHeader { len: usize },
    #[error("zero sensor dimension in header ({width}x{height})")]
    ZeroDimension { width: u32, height: u32 },
    #[error("truncated record at byte {offset}: header declares {declared} events, body holds {available}")]
    Truncated {
        offset: usize,
        declared: u64,
        available: u64,
    },
    #[error("{extra} trailing bytes after the last record at byte {offset}")]
    TrailingBytes { offset: usize, extra: usize },
    #[error("invalid polarity {p} in record at byte {offset}")]
    InvalidPolarity { offset: usize, p: i8 },
    #[error("event ({x}, {y}) outside the {width}x{height} sensor in record at byte {offset}")]
    OutOfBounds {
        offset: usize,
        x: u16,
        y: u16,
        width: u32,
        height: u32,
    },
    #[error("timestamp {t} precedes {previous} in record at byte {offset}")]
    NonMonotonic {
        offset: usize,
        t: u64,
        previous: u64,
    },
}

/// Serialized size of a stream holding `events` records.
pub const fn encoded_len(events: usize) -> usize {
    HEADER_LEN + RECORD_LEN * events
}

/// Serialize a stream. Output depends only on the stream contents.
pub fn encode(stream: &EventStream) -> Vec<u8> {
    let mut out = Vec::with_capacity(encoded_len(stream.events.len()));
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&stream.width.to_le_bytes());
    out.extend_from_slice(&stream.height.to_le_bytes());
    out.extend_from_slice(&(stream.events.len() as u64).to_le_bytes());
    for e in &stream.events {
        out.extend_from_slice(&e.x.to_le_bytes());
        out.extend_from_slice(&e.y.to_le_bytes());
        out.push(e.p as u8);
        out.extend_from_slice(&[0u8; 3]);
        out.extend_from_slice(&e.t.to_le_bytes());
    }
    out
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

fn u64_at(b: &[u8], at: usize) -> u64 {
    let mut a = [0u8; 8];
    a.copy_from_slice(&b[at..at + 8]);
    u64::from_le_bytes(a)
}

/// Parse a serialized stream, rejecting anything that violates the event
/// invariants. Errors name the byte offset of the offending record.
pub fn decode(bytes: &[u8]) -> Result<EventStream, DecodeError> {
    if bytes.len() < 4 || bytes[..4] != MAGIC {
        let mut found = [0u8; 4];
        for (dst, src) in found.iter_mut().zip(bytes) {
            *dst = *src;
        }
        return Err(DecodeError::BadMagic { found });
    }
    if bytes.len() < HEADER_LEN {
        return Err(DecodeError::TruncatedHeader { len: bytes.len() });
    }
    let width = u32_at(bytes, 4);
    let height = u32_at(bytes, 8);
    let declared = u64_at(bytes, 12);
    if width == 0 || height == 0 {
        return Err(DecodeError::ZeroDimension { width, height });
    }

    let body = &bytes[HEADER_LEN..];
    let available = (body.len() / RECORD_LEN) as u64;
    if available < declared {
        return Err(DecodeError::Truncated {
            offset: HEADER_LEN + available as usize * RECORD_LEN,
            declared,
            available,
        });
    }
    let used = declared as usize * RECORD_LEN;
    if body.len() > used {
        return Err(DecodeError::TrailingBytes {
            offset: HEADER_LEN + used,
            extra: body.len() - used,
        });
    }

    let mut events = Vec::with_capacity(declared as usize);
    let mut previous = 0u64;
    for (i, rec) in body.chunks_exact(RECORD_LEN).enumerate() {
        let offset = HEADER_LEN + i * RECORD_LEN;
        let x = u16::from_le_bytes([rec[0], rec[1]]);
        let y = u16::from_le_bytes([rec[2], rec[3]]);
        let p = rec[4] as i8;
        let t = u64_at(rec, 8);
        if p != 1 && p != -1 {
            return Err(DecodeError::InvalidPolarity { offset, p });
        }
        if u32::from(x) >= width || u32::from(y) >= height {
            return Err(DecodeError::OutOfBounds {
                offset,
                x,
                y,
                width,
                height,
            });
        }
        if i > 0 && t < previous {
            return Err(DecodeError::NonMonotonic {
                offset,
                t,
                previous,
            });
        }
        previous = t;
        events.push(Event { x, y, t, p });
    }
    Ok(EventStream {
        width,
        height,
        events,
    })
}
