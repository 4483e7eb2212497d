use crate::dropqueue::{DropTailQueue, Enqueue, PacketQueue};
use crate::trace::{BandwidthTrace, OpportunityCursor};
use crate::types::{Micros, Packet};

/// Trace-driven downlink: each opportunity carries at most one packet.
pub struct CellularLink {
    pub queue: Box<dyn PacketQueue + Send>,
    cursor: OpportunityCursor,
    /// An opportunity event is pending.
    scheduled: bool,
}

impl CellularLink {
    pub fn new(queue: Box<dyn PacketQueue + Send>, trace: &BandwidthTrace) -> Self {
        CellularLink {
            queue,
            cursor: trace.cursor(),
            scheduled: false,
        }
    }

    /// Buffer a packet. Returns the outcome and, if the link was idle, the
    /// time of the opportunity that will serve it.
    pub fn arrive(&mut self, p: Packet, now: Micros) -> (Enqueue, Option<Micros>) {
        let r = self.queue.enqueue(p, now);
        if !r.accepted() || self.scheduled {
            return (r, None);
        }
        self.scheduled = true;
        (r, Some(self.cursor.seek(now)))
    }

    /// Use the opportunity at `now`. Returns the packet sent, if any, and
    /// the next opportunity to schedule while packets remain.
    pub fn serve(&mut self, now: Micros) -> (Option<Packet>, Option<Micros>) {
        self.scheduled = false;
        let sent = self.queue.dequeue(now);
        self.cursor.advance();
        if self.queue.is_empty() {
            return (sent, None);
        }
        self.scheduled = true;
        (sent, Some(self.cursor.seek(now)))
    }
}

/// Constant-rate switch with a drop-tail FIFO and no message awareness.
pub struct LegacySwitch {
    pub queue: DropTailQueue,
    rate_kbps: u64,
    busy: bool,
}

impl LegacySwitch {
    pub fn new(rate_kbps: u64, buffer_bytes: u64) -> Self {
        LegacySwitch {
            queue: DropTailQueue::new(buffer_bytes),
            rate_kbps,
            busy: false,
        }
    }

    pub fn rate_kbps(&self) -> u64 {
        self.rate_kbps
    }

    /// Serialization time of `bytes` at line rate.
    pub fn tx_time(&self, bytes: u32) -> Micros {
        (bytes as u64 * 8000).div_ceil(self.rate_kbps)
    }

    pub fn is_busy(&self) -> bool {
        self.busy
    }

    /// Buffer a packet; if the line was idle, returns the packet that starts
    /// transmitting and when it finishes.
    pub fn arrive(&mut self, p: Packet, now: Micros) -> (Enqueue, Option<(Micros, Packet)>) {
        let r = self.queue.enqueue(p, now);
        if self.busy {
            return (r, None);
        }
        (r, self.start(now))
    }

    /// The packet on the wire has left; start the next one.
    pub fn finish(&mut self, now: Micros) -> Option<(Micros, Packet)> {
        self.busy = false;
        self.start(now)
    }

    fn start(&mut self, now: Micros) -> Option<(Micros, Packet)> {
        let p = self.queue.dequeue(now)?;
        self.busy = true;
        Some((now + self.tx_time(p.wire_size()), p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dropqueue::DropTailQueue;
    use crate::header::OctopusHeader;

    fn pkt(payload: u32) -> Packet {
        Packet::new(
            OctopusHeader {
                head: true,
                tail: true,
                ..Default::default()
            },
            payload,
        )
    }

    #[test]
    fn idle_link_waits_for_next_opportunity() {
        let trace = BandwidthTrace::parse("5\n5\n20").unwrap();
        let mut link = CellularLink::new(Box::new(DropTailQueue::new(10_000)), &trace);
        let (_, at) = link.arrive(pkt(100), 1_000);
        assert_eq!(at, Some(5_000));
        link.arrive(pkt(100), 2_000);
        link.arrive(pkt(100), 3_000);
        // burst: two opportunities in the same millisecond
        let (p, next) = link.serve(5_000);
        assert!(p.is_some());
        assert_eq!(next, Some(5_000));
        let (p, next) = link.serve(5_000);
        assert!(p.is_some());
        assert_eq!(next, Some(20_000));
        let (p, next) = link.serve(20_000);
        assert!(p.is_some());
        assert_eq!(next, None);
    }

    #[test]
    fn empty_opportunity_is_idle() {
        let trace = BandwidthTrace::constant(12_000, 1000).unwrap();
        let mut link = CellularLink::new(Box::new(DropTailQueue::new(10_000)), &trace);
        assert_eq!(link.serve(1_000), (None, None));
    }

    #[test]
    fn legacy_serializes_at_line_rate() {
        let mut sw = LegacySwitch::new(12_000, 10_000);
        assert_eq!(sw.tx_time(1500), 1_000);
        let (_, first) = sw.arrive(pkt(1460), 0);
        assert_eq!(first.map(|(t, _)| t), Some(1_000));
        let (_, none) = sw.arrive(pkt(1460), 10);
        assert!(none.is_none());
        assert_eq!(sw.finish(1_000).map(|(t, _)| t), Some(2_000));
        assert!(sw.finish(2_000).is_none());
        assert!(!sw.is_busy());
    }
}
