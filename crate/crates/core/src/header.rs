//! The 12-byte per-packet semantic header.
//!
//! ```text
//!  byte 0      flags: bit0 head, bit1 tail, bit2 drop_flag,
//!              bits3-5 msg_priority, bits6-7 reserved
//!  byte 1      priority_threshold (low 3 bits, rest reserved)
//!  bytes 2-3   stream_id, big-endian
//!  bytes 4-7   msg_id, big-endian
//!  bytes 8-11  bitrate_threshold_kbps, big-endian
//! ```
//!
//! Reserved bits are written as zero and ignored when decoding.

use crate::types::MAX_PRIORITY;

pub const HEADER_LEN: usize = 12;

const FLAG_HEAD: u8 = 1 << 0;
const FLAG_TAIL: u8 = 1 << 1;
const FLAG_DROP: u8 = 1 << 2;
const PRIORITY_SHIFT: u8 = 3;
const PRIORITY_MASK: u8 = 0b111;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct OctopusHeader {
    pub head: bool,
    pub tail: bool,
    pub drop_flag: bool,
    pub msg_priority: u8,
    pub priority_threshold: u8,
    pub stream_id: u16,
    pub msg_id: u32,
    pub bitrate_threshold_kbps: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HeaderError {
    #[error("msg_priority {0} does not fit in 3 bits")]
    Priority(u8),
    #[error("priority_threshold {0} does not fit in 3 bits")]
    Threshold(u8),
    #[error("header must be exactly {HEADER_LEN} bytes, got {0}")]
    Length(usize),
}

impl OctopusHeader {
    pub fn encode(&self) -> Result<[u8; HEADER_LEN], HeaderError> {
        if self.msg_priority > MAX_PRIORITY {
            return Err(HeaderError::Priority(self.msg_priority));
        }
        if self.priority_threshold > MAX_PRIORITY {
            return Err(HeaderError::Threshold(self.priority_threshold));
        }
        let mut flags = self.msg_priority << PRIORITY_SHIFT;
        if self.head {
            flags |= FLAG_HEAD;
        }
        if self.tail {
            flags |= FLAG_TAIL;
        }
        if self.drop_flag {
            flags |= FLAG_DROP;
        }
        let mut out = [0u8; HEADER_LEN];
        out[0] = flags;
        out[1] = self.priority_threshold;
        out[2..4].copy_from_slice(&self.stream_id.to_be_bytes());
        out[4..8].copy_from_slice(&self.msg_id.to_be_bytes());
        out[8..12].copy_from_slice(&self.bitrate_threshold_kbps.to_be_bytes());
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, HeaderError> {
        let b: &[u8; HEADER_LEN] = bytes
            .try_into()
            .map_err(|_| HeaderError::Length(bytes.len()))?;
        let flags = b[0];
        Ok(OctopusHeader {
            head: flags & FLAG_HEAD != 0,
            tail: flags & FLAG_TAIL != 0,
            drop_flag: flags & FLAG_DROP != 0,
            msg_priority: (flags >> PRIORITY_SHIFT) & PRIORITY_MASK,
            priority_threshold: b[1] & PRIORITY_MASK,
            stream_id: u16::from_be_bytes([b[2], b[3]]),
            msg_id: u32::from_be_bytes([b[4], b[5], b[6], b[7]]),
            bitrate_threshold_kbps: u32::from_be_bytes([b[8], b[9], b[10], b[11]]),
        })
    }
}
