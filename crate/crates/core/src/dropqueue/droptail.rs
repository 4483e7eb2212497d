use std::collections::{BTreeMap, VecDeque};

use super::{DropCounters, DropLog, DropReason, DropRecord, Enqueue, PacketQueue};
use crate::types::{Micros, Packet, StreamId};

/// Byte-capped FIFO with no message semantics.
#[derive(Debug)]
pub struct DropTailQueue {
    buf: VecDeque<Packet>,
    bytes: u64,
    capacity: u64,
    log: DropLog,
}

impl DropTailQueue {
    pub fn new(capacity: u64) -> Self {
        DropTailQueue {
            buf: VecDeque::new(),
            bytes: 0,
            capacity,
            log: DropLog::default(),
        }
    }
}

impl PacketQueue for DropTailQueue {
    fn enqueue(&mut self, mut p: Packet, now: Micros) -> Enqueue {
        let sz = p.wire_size() as u64;
        if self.bytes + sz > self.capacity {
            self.log.packet(p, DropReason::Tail, now);
            return Enqueue::Rejected;
        }
        p.enqueued_at = now;
        self.bytes += sz;
        self.buf.push_back(p);
        Enqueue::Accepted
    }

    fn dequeue(&mut self, _now: Micros) -> Option<Packet> {
        let p = self.buf.pop_front()?;
        self.bytes -= p.wire_size() as u64;
        Some(p)
    }

    fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    fn len(&self) -> usize {
        self.buf.len()
    }

    fn bytes(&self) -> u64 {
        self.bytes
    }

    fn take_drops(&mut self) -> Vec<DropRecord> {
        self.log.take()
    }

    fn counters(&self) -> &BTreeMap<StreamId, DropCounters> {
        &self.log.counters
    }
}
