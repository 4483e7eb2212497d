//! Message-dropping buffers.
//!
//! [`DropQueue`] is the shared primitive used both in front of the bottleneck
//! link and inside the sender's transport buffer. The router wraps it with a
//! dequeue-rate estimator and per-stream max-min shares ([`RouterQueue`]).
//! [`PDropQueue`] and [`DropTailQueue`] are the comparison baselines.

mod droptail;
mod estimator;
mod fair;
mod msgqueue;
mod pdrop;
mod router;

use std::collections::BTreeMap;

pub use droptail::DropTailQueue;
pub use estimator::{BwEstimator, BW_WINDOW_US, MIN_BUSY_US};
pub use fair::{available_share, fair_shares, ArrivalMeter, ARRIVAL_WINDOW_US};
pub use msgqueue::DropQueue;
pub use pdrop::PDropQueue;
pub use router::RouterQueue;

use crate::types::{Micros, Packet, StreamId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Enqueue {
    Accepted,
    /// Lower-priority messages were purged to make room (PDrop only).
    PurgedAndAccepted,
    Rejected,
}

impl Enqueue {
    pub fn accepted(self) -> bool {
        !matches!(self, Enqueue::Rejected)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DropReason {
    /// A newer dropper message covered this message's priority.
    ByMsg,
    /// The stream's bandwidth was below the message's bitrate threshold.
    ByBitrate,
    /// Arrived at a full buffer.
    Tail,
    /// Purged by a higher-priority arrival at a full buffer.
    Purge,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DropRecord {
    pub at: Micros,
    pub reason: DropReason,
    pub packet: Packet,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DropCounters {
    pub messages_dropped_by_msg: u64,
    pub messages_dropped_by_bitrate: u64,
    pub messages_purged: u64,
    pub packets_dropped_by_msg: u64,
    pub packets_dropped_by_bitrate: u64,
    pub packets_purged: u64,
    pub packets_tail_dropped: u64,
}

impl DropCounters {
    pub fn merge(&mut self, o: &DropCounters) {
        self.messages_dropped_by_msg += o.messages_dropped_by_msg;
        self.messages_dropped_by_bitrate += o.messages_dropped_by_bitrate;
        self.messages_purged += o.messages_purged;
        self.packets_dropped_by_msg += o.packets_dropped_by_msg;
        self.packets_dropped_by_bitrate += o.packets_dropped_by_bitrate;
        self.packets_purged += o.packets_purged;
        self.packets_tail_dropped += o.packets_tail_dropped;
    }
}

/// Interface the simulator uses for any bottleneck buffer.
pub trait PacketQueue {
    fn enqueue(&mut self, p: Packet, now: Micros) -> Enqueue;
    fn dequeue(&mut self, now: Micros) -> Option<Packet>;
    fn is_empty(&self) -> bool;
    /// Buffered packet count.
    fn len(&self) -> usize;
    fn bytes(&self) -> u64;
    /// Drops recorded since the last call.
    fn take_drops(&mut self) -> Vec<DropRecord>;
    fn counters(&self) -> &BTreeMap<StreamId, DropCounters>;
}

/// Drop attribution shared by the queues.
#[derive(Debug, Default)]
pub(crate) struct DropLog {
    pub counters: BTreeMap<StreamId, DropCounters>,
    pub records: Vec<DropRecord>,
}

impl DropLog {
    pub fn packet(&mut self, packet: Packet, reason: DropReason, at: Micros) {
        let c = self.counters.entry(packet.stream()).or_default();
        match reason {
            DropReason::ByMsg => {
                c.packets_dropped_by_msg += 1;
                if packet.is_head() {
                    c.messages_dropped_by_msg += 1;
                }
            }
            DropReason::ByBitrate => {
                c.packets_dropped_by_bitrate += 1;
                if packet.is_head() {
                    c.messages_dropped_by_bitrate += 1;
                }
            }
            DropReason::Purge => {
                c.packets_purged += 1;
                if packet.is_head() {
                    c.messages_purged += 1;
                }
            }
            DropReason::Tail => c.packets_tail_dropped += 1,
        }
        self.records.push(DropRecord { at, reason, packet });
    }

    pub fn take(&mut self) -> Vec<DropRecord> {
        std::mem::take(&mut self.records)
    }
}
