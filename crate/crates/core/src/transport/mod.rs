//! Message-aware unreliable transport.
//!
//! Applications submit whole messages with dropping parameters; the sender
//! packetizes them into a send buffer that enforces the same dropping
//! primitives as the router, then paces packets out under BBR-lite. The
//! receiver delivers each message as soon as all of its packets arrived and
//! acknowledges every packet. Nothing is retransmitted.

pub mod bbr;
mod receiver;
mod sender;

pub use bbr::{Bbr, BbrConfig, BbrMode, RateSample, WindowedMax};
pub use receiver::{Delivered, Receiver};
pub use sender::{Sender, SenderConfig};

use crate::types::{Micros, ParamError, StreamId};

/// Maximum SACK blocks carried per ack.
pub const MAX_SACK_RANGES: usize = 3;

/// Acknowledgement sent for every received data packet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ack {
    /// Every seq up to and including this one has arrived (0 = none).
    pub cum_seq: u64,
    /// Inclusive ranges above `cum_seq`, most recent first.
    pub sack: Vec<(u64, u64)>,
    /// Send timestamp of the packet that triggered this ack.
    pub echo_sent_at: Micros,
}

/// Congestion-control view exposed to applications.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CcStats {
    pub estimated_bw_kbps: u64,
    pub min_rtt_us: Option<Micros>,
    pub cwnd_bytes: u64,
    pub pacing_rate_kbps: u64,
    pub inflight_bytes: u64,
    pub delivered_bytes: u64,
    pub lost_packets: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransportError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("stream {0} was never opened")]
    UnknownStream(StreamId),
    #[error("send buffer full; message {0} refused")]
    BufferFull(u32),
}
