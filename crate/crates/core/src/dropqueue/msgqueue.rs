use std::collections::{BTreeMap, VecDeque};

use super::{DropCounters, DropLog, DropReason, DropRecord, Enqueue};
use crate::types::{Micros, Packet, StreamId, PRIORITY_LEVELS};

#[derive(Debug, Clone, Copy, Default)]
struct StreamDropState {
    /// Largest dropper msg_id seen per priority_threshold; 0 = none.
    droppers: [u32; PRIORITY_LEVELS],
    /// Message currently being discarded; 0 = none.
    msg_in_drop: u32,
    drop_reason: Option<DropReason>,
}

/// FIFO buffer that drops whole messages at head-of-line.
///
/// On enqueue, the tail packet of a dropper message records its msg_id under
/// its priority_threshold. On dequeue, the head packet of a message is tested
/// against the newest dropper covering its priority and against the
/// stream's current bandwidth; a marked message is discarded packet by packet
/// as its remaining packets reach the front. Only heads are tested, so a
/// message that has started transmitting is always finished.
#[derive(Debug, Default)]
pub struct DropQueue {
    buf: VecDeque<Packet>,
    bytes: u64,
    capacity: Option<u64>,
    /// When false the queue is a plain FIFO (no table updates, no drops).
    enforce: bool,
    streams: BTreeMap<StreamId, StreamDropState>,
    log: DropLog,
}

impl DropQueue {
    pub fn new(capacity: Option<u64>) -> Self {
        DropQueue {
            capacity,
            enforce: true,
            ..Default::default()
        }
    }

    /// Same buffer with both primitives disabled.
    pub fn fifo(capacity: Option<u64>) -> Self {
        DropQueue {
            capacity,
            enforce: false,
            ..Default::default()
        }
    }

    pub fn enforces_drops(&self) -> bool {
        self.enforce
    }

    /// Whether `bytes` more would fit under the capacity.
    pub fn has_room(&self, bytes: u64) -> bool {
        self.capacity.is_none_or(|cap| self.bytes + bytes <= cap)
    }

    pub fn capacity(&self) -> Option<u64> {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn bytes(&self) -> u64 {
        self.bytes
    }

    pub fn front(&self) -> Option<&Packet> {
        self.buf.front()
    }

    /// Dropper-table entry for `stream` at `threshold`.
    pub fn dropper(&self, stream: StreamId, threshold: u8) -> u32 {
        self.streams
            .get(&stream)
            .map_or(0, |s| s.droppers[threshold as usize])
    }

    pub fn counters(&self) -> &BTreeMap<StreamId, DropCounters> {
        &self.log.counters
    }

    pub fn take_drops(&mut self) -> Vec<DropRecord> {
        self.log.take()
    }

    pub fn enqueue(&mut self, mut p: Packet, now: Micros) -> Enqueue {
        let size = p.wire_size() as u64;
        if let Some(cap) = self.capacity {
            if self.bytes + size > cap {
                self.log.packet(p, DropReason::Tail, now);
                return Enqueue::Rejected;
            }
        }
        if self.enforce && p.header.drop_flag && p.is_tail() {
            let st = self.streams.entry(p.stream()).or_default();
            let slot = &mut st.droppers[p.header.priority_threshold as usize];
            *slot = (*slot).max(p.msg_id());
        }
        p.enqueued_at = now;
        self.bytes += size;
        self.buf.push_back(p);
        Enqueue::Accepted
    }

    /// Pop the next packet that survives the drop conditions.
    ///
    /// `bw_kbps` gives the bandwidth currently available to a stream; it is
    /// consulted once per head packet.
    pub fn dequeue_with(
        &mut self,
        now: Micros,
        mut bw_kbps: impl FnMut(StreamId) -> u64,
    ) -> Option<Packet> {
        while let Some(p) = self.buf.pop_front() {
            self.bytes -= p.wire_size() as u64;
            if !self.enforce {
                return Some(p);
            }
            let sid = p.stream();
            let msg_id = p.msg_id();
            let st = self.streams.entry(sid).or_default();
            if p.is_head() {
                let prio = p.header.msg_priority as usize;
                let latest_dropper = st.droppers[..=prio].iter().copied().max().unwrap_or(0);
                let reason = if msg_id < latest_dropper {
                    Some(DropReason::ByMsg)
                } else if p.header.bitrate_threshold_kbps as u64 > bw_kbps(sid) {
                    Some(DropReason::ByBitrate)
                } else {
                    None
                };
                if reason.is_some() {
                    st.msg_in_drop = msg_id;
                    st.drop_reason = reason;
                }
            }
            if st.msg_in_drop == msg_id && st.drop_reason.is_some() {
                let reason = st.drop_reason.unwrap();
                self.log.packet(p, reason, now);
                continue;
            }
            return Some(p);
        }
        None
    }
}
