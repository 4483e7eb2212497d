use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{DropCounters, DropLog, DropReason, DropRecord, Enqueue, PacketQueue};
use crate::types::{Micros, Packet, StreamId};

/// Priority-purge baseline: when a packet finds the buffer full, queued
/// messages of strictly lower priority (larger value) are purged, lowest
/// priority and then oldest first, until the packet fits.
#[derive(Debug)]
pub struct PDropQueue {
    buf: VecDeque<Packet>,
    bytes: u64,
    capacity: u64,
    /// Messages whose tail is buffered and whose head has not left.
    complete: BTreeSet<(StreamId, u32)>,
    /// Per stream, the message whose packets are partially transmitted.
    sending: BTreeMap<StreamId, u32>,
    log: DropLog,
}

impl PDropQueue {
    pub fn new(capacity: u64) -> Self {
        PDropQueue {
            buf: VecDeque::new(),
            bytes: 0,
            capacity,
            complete: BTreeSet::new(),
            sending: BTreeMap::new(),
            log: DropLog::default(),
        }
    }

    fn fits(&self, p: &Packet) -> bool {
        self.bytes + p.wire_size() as u64 <= self.capacity
    }

    /// Purge lower-priority messages until `p` fits. Returns whether any were purged.
    fn purge_for(&mut self, p: &Packet, now: Micros) -> bool {
        let incoming = p.header.msg_priority;
        // (priority, first position) of each purgeable message
        let mut candidates: BTreeMap<(StreamId, u32), (u8, usize)> = BTreeMap::new();
        for (pos, q) in self.buf.iter().enumerate() {
            let key = (q.stream(), q.msg_id());
            if q.header.msg_priority > incoming
                && self.complete.contains(&key)
                && self.sending.get(&key.0) != Some(&key.1)
            {
                candidates.entry(key).or_insert((q.header.msg_priority, pos));
            }
        }
        let mut order: Vec<_> = candidates.into_iter().collect();
        order.sort_by_key(|&(_, (prio, pos))| (Reverse(prio), pos));

        let mut purged = false;
        for (key, _) in order {
            if self.fits(p) {
                break;
            }
            let mut kept = VecDeque::with_capacity(self.buf.len());
            for q in self.buf.drain(..) {
                if (q.stream(), q.msg_id()) == key {
                    self.bytes -= q.wire_size() as u64;
                    self.log.packet(q, DropReason::Purge, now);
                } else {
                    kept.push_back(q);
                }
            }
            self.buf = kept;
            self.complete.remove(&key);
            purged = true;
        }
        purged
    }
}

impl PacketQueue for PDropQueue {
    fn enqueue(&mut self, mut p: Packet, now: Micros) -> Enqueue {
        let mut purged = false;
        if !self.fits(&p) {
            purged = self.purge_for(&p, now);
            if !self.fits(&p) {
                self.log.packet(p, DropReason::Tail, now);
                return Enqueue::Rejected;
            }
        }
        if p.is_tail() {
            self.complete.insert((p.stream(), p.msg_id()));
        }
        p.enqueued_at = now;
        self.bytes += p.wire_size() as u64;
        self.buf.push_back(p);
        if purged {
            Enqueue::PurgedAndAccepted
        } else {
            Enqueue::Accepted
        }
    }

    fn dequeue(&mut self, _now: Micros) -> Option<Packet> {
        let p = self.buf.pop_front()?;
        self.bytes -= p.wire_size() as u64;
        let key = (p.stream(), p.msg_id());
        if p.is_tail() {
            self.complete.remove(&key);
            self.sending.remove(&key.0);
        } else {
            self.sending.insert(key.0, key.1);
        }
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
