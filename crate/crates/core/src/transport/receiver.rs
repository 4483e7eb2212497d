use std::collections::{BTreeMap, BTreeSet};

use super::{Ack, MAX_SACK_RANGES};
use crate::types::{Micros, Packet, StreamId};

/// A message handed to the application.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Delivered {
    pub stream: StreamId,
    pub msg_id: u32,
    pub at: Micros,
    pub bytes: u64,
}

#[derive(Debug, Default)]
struct Partial {
    head_seq: Option<u64>,
    tail_seq: Option<u64>,
    packets: u64,
    bytes: u64,
}

/// Receiving half: reassembles messages and acks every packet.
///
/// A message's packets occupy consecutive sequence numbers, since the
/// sender emits a message without interleaving and never splits one, so the
/// head and tail seqs bound exactly how many packets must arrive.
#[derive(Debug, Default)]
pub struct Receiver {
    /// Disjoint inclusive seq ranges received so far.
    ranges: BTreeMap<u64, u64>,
    partial: BTreeMap<(StreamId, u32), Partial>,
    delivered: BTreeSet<(StreamId, u32)>,
    log: Vec<Delivered>,
}

impl Receiver {
    pub fn new() -> Self {
        Self::default()
    }

    fn contains(&self, seq: u64) -> bool {
        self.ranges
            .range(..=seq)
            .next_back()
            .is_some_and(|(_, &hi)| hi >= seq)
    }

    fn insert(&mut self, seq: u64) -> u64 {
        let mut lo = seq;
        let mut hi = seq;
        if let Some((&l, &h)) = self.ranges.range(..seq).next_back() {
            if h + 1 == seq {
                lo = l;
                self.ranges.remove(&l);
            }
        }
        if let Some(h) = self.ranges.remove(&(seq + 1)) {
            hi = h;
        }
        self.ranges.insert(lo, hi);
        lo
    }

    fn ack_for(&self, seq: u64, echo: Micros) -> Ack {
        let cum_seq = match self.ranges.first_key_value() {
            Some((&1, &hi)) => hi,
            _ => 0,
        };
        let mut sack = Vec::with_capacity(MAX_SACK_RANGES);
        // the block holding the newest packet goes first
        if let Some((&lo, &hi)) = self.ranges.range(..=seq).next_back() {
            if lo > cum_seq {
                sack.push((lo, hi));
            }
        }
        for (&lo, &hi) in self.ranges.iter().rev() {
            if sack.len() == MAX_SACK_RANGES {
                break;
            }
            if lo > cum_seq && !sack.contains(&(lo, hi)) {
                sack.push((lo, hi));
            }
        }
        Ack {
            cum_seq,
            sack,
            echo_sent_at: echo,
        }
    }

    /// Record a packet. Returns the completed message, if any, and the ack;
    /// duplicates return `(None, None)`.
    pub fn on_receive(&mut self, p: &Packet, now: Micros) -> (Option<Delivered>, Option<Ack>) {
        if p.seq == 0 || self.contains(p.seq) {
            return (None, None);
        }
        self.insert(p.seq);
        let ack = self.ack_for(p.seq, p.sent_at);

        let key = (p.stream(), p.msg_id());
        if self.delivered.contains(&key) {
            return (None, Some(ack));
        }
        let part = self.partial.entry(key).or_default();
        part.packets += 1;
        part.bytes += p.payload_size as u64;
        if p.is_head() {
            part.head_seq = Some(p.seq);
        }
        if p.is_tail() {
            part.tail_seq = Some(p.seq);
        }
        let complete = match (part.head_seq, part.tail_seq) {
            (Some(h), Some(t)) => t >= h && part.packets == t - h + 1,
            _ => false,
        };
        if !complete {
            return (None, Some(ack));
        }
        let bytes = part.bytes;
        self.partial.remove(&key);
        self.delivered.insert(key);
        let d = Delivered {
            stream: key.0,
            msg_id: key.1,
            at: now,
            bytes,
        };
        self.log.push(d);
        (Some(d), Some(ack))
    }

    /// Every message delivered so far, in delivery order.
    pub fn delivered(&self) -> &[Delivered] {
        &self.log
    }

    pub fn is_delivered(&self, stream: StreamId, msg_id: u32) -> bool {
        self.delivered.contains(&(stream, msg_id))
    }
}
