//! Domain types shared by queues, transport, and the simulator.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::header::OctopusHeader;

/// Simulation time in integer microseconds.
pub type Micros = u64;

pub const MICROS_PER_MS: Micros = 1_000;
pub const MICROS_PER_SEC: Micros = 1_000_000;

/// Bytes carried by one link delivery opportunity.
pub const MTU: u32 = 1500;
/// Semantic header length on the wire.
pub const HEADER_BYTES: u32 = 12;
/// Allowance for UDP/IP headers.
pub const UDP_IP_BYTES: u32 = 28;
/// Largest payload that fits a single packet.
pub const MAX_PAYLOAD: u32 = MTU - HEADER_BYTES - UDP_IP_BYTES;

/// Number of distinct priority levels (and dropper-table entries per stream).
pub const PRIORITY_LEVELS: usize = 8;
pub const MAX_PRIORITY: u8 = (PRIORITY_LEVELS - 1) as u8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StreamId(pub u16);

impl fmt::Display for StreamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Identifies a sender/receiver pair inside a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FlowId(pub usize);

/// Per-message dropping parameters. A zeroed value disables adaptation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MsgParams {
    /// Higher value means lower priority.
    pub msg_priority: u8,
    pub drop_flag: bool,
    pub priority_threshold: u8,
    /// 0 disables drop-by-bitrate.
    pub bitrate_threshold_kbps: u32,
}

impl MsgParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        if self.msg_priority > MAX_PRIORITY {
            return Err(ParamError::Priority(self.msg_priority));
        }
        if self.priority_threshold > MAX_PRIORITY {
            return Err(ParamError::Threshold(self.priority_threshold));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParamError {
    #[error("msg_priority {0} out of range 0..=7")]
    Priority(u8),
    #[error("priority_threshold {0} out of range 0..=7")]
    Threshold(u8),
    #[error("message size must be at least one byte")]
    EmptyMessage,
}

/// Application label attached to a message for metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FrameTag {
    pub frame: u32,
    /// Temporal/quality layer, or layer within a cell.
    pub layer: u8,
    pub cell: u8,
}

/// Atomic application unit; all of it is delivered or none of it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub stream: StreamId,
    pub msg_id: u32,
    pub size: u32,
    pub params: MsgParams,
    pub created_at: Micros,
    pub frame_tag: FrameTag,
}

/// One packetized fragment of a message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packet {
    pub header: OctopusHeader,
    pub payload_size: u32,
    /// Transport sequence number, assigned at emission.
    pub seq: u64,
    pub sent_at: Micros,
    /// Simulation routing: which endpoint pair owns this packet.
    pub flow: FlowId,
    /// Set by whichever queue currently holds the packet.
    pub enqueued_at: Micros,
}

impl Packet {
    pub fn new(header: OctopusHeader, payload_size: u32) -> Self {
        Packet {
            header,
            payload_size,
            seq: 0,
            sent_at: 0,
            flow: FlowId(0),
            enqueued_at: 0,
        }
    }

    /// Bytes this packet occupies in a queue and on the link.
    pub fn wire_size(&self) -> u32 {
        self.payload_size + HEADER_BYTES + UDP_IP_BYTES
    }

    pub fn stream(&self) -> StreamId {
        StreamId(self.header.stream_id)
    }

    pub fn msg_id(&self) -> u32 {
        self.header.msg_id
    }

    pub fn is_head(&self) -> bool {
        self.header.head
    }

    pub fn is_tail(&self) -> bool {
        self.header.tail
    }
}

/// Split `size` payload bytes into packet payload sizes of at most [`MAX_PAYLOAD`].
pub fn packet_sizes(size: u32) -> impl Iterator<Item = u32> {
    let full = size / MAX_PAYLOAD;
    let rest = size % MAX_PAYLOAD;
    std::iter::repeat_n(MAX_PAYLOAD, full as usize).chain((rest > 0).then_some(rest))
}

/// Build the packets of a message with head/tail markers and encoded params.
pub fn packetize(msg: &Message) -> Result<Vec<Packet>, ParamError> {
    msg.params.validate()?;
    if msg.size == 0 {
        return Err(ParamError::EmptyMessage);
    }
    let sizes: Vec<u32> = packet_sizes(msg.size).collect();
    let last = sizes.len() - 1;
    Ok(sizes
        .into_iter()
        .enumerate()
        .map(|(i, sz)| {
            let header = OctopusHeader {
                head: i == 0,
                tail: i == last,
                drop_flag: msg.params.drop_flag,
                msg_priority: msg.params.msg_priority,
                priority_threshold: msg.params.priority_threshold,
                stream_id: msg.stream.0,
                msg_id: msg.msg_id,
                bitrate_threshold_kbps: msg.params.bitrate_threshold_kbps,
            };
            let mut p = Packet::new(header, sz);
            p.sent_at = msg.created_at;
            p
        })
        .collect())
}
