use std::collections::BTreeMap;

use super::{
    available_share, ArrivalMeter, BwEstimator, DropCounters, DropQueue, DropRecord, Enqueue,
    PacketQueue,
};
use crate::types::{Micros, Packet, StreamId};

/// Per-user router buffer enforcing both dropping primitives.
///
/// Bandwidth for drop-by-bitrate comes from the queue's own dequeue rate.
/// With more than one stream active, each stream is held to the rate it
/// could claim under max-min sharing of that dequeue rate.
#[derive(Debug)]
pub struct RouterQueue {
    queue: DropQueue,
    estimator: BwEstimator,
    arrivals: ArrivalMeter,
}

impl RouterQueue {
    pub fn new(capacity: u64, warmup_kbps: u64) -> Self {
        RouterQueue {
            queue: DropQueue::new(Some(capacity)),
            estimator: BwEstimator::new(warmup_kbps),
            arrivals: ArrivalMeter::default(),
        }
    }

    pub fn inner(&self) -> &DropQueue {
        &self.queue
    }

    /// Bandwidth per active stream as seen by the drop-by-bitrate check.
    pub fn stream_bandwidths(&mut self, now: Micros) -> BTreeMap<StreamId, u64> {
        let total = self.estimator.estimate_kbps(now);
        let rates = self.arrivals.rates_kbps(now);
        if rates.len() <= 1 {
            return rates.into_iter().map(|(s, _)| (s, total)).collect();
        }
        let demands: Vec<f64> = rates.iter().map(|&(_, r)| r).collect();
        rates
            .iter()
            .enumerate()
            .map(|(i, &(sid, _))| (sid, available_share(&demands, total as f64, i) as u64))
            .collect()
    }

    pub fn estimate_kbps(&mut self, now: Micros) -> u64 {
        self.estimator.estimate_kbps(now)
    }
}

impl PacketQueue for RouterQueue {
    fn enqueue(&mut self, p: Packet, now: Micros) -> Enqueue {
        self.arrivals.record(p.stream(), now, p.wire_size() as u64);
        let was_empty = self.queue.is_empty();
        let r = self.queue.enqueue(p, now);
        if was_empty && r.accepted() {
            self.estimator.on_busy_start(now);
        }
        r
    }

    fn dequeue(&mut self, now: Micros) -> Option<Packet> {
        if self.queue.is_empty() {
            return None;
        }
        let bws = self.stream_bandwidths(now);
        let total = self.estimator.estimate_kbps(now);
        let out = self
            .queue
            .dequeue_with(now, |sid| bws.get(&sid).copied().unwrap_or(total));
        if let Some(p) = &out {
            self.estimator.on_departure(now, p.wire_size() as u64);
        }
        if self.queue.is_empty() {
            self.estimator.on_busy_end(now);
        }
        out
    }

    fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    fn len(&self) -> usize {
        self.queue.len()
    }

    fn bytes(&self) -> u64 {
        self.queue.bytes()
    }

    fn take_drops(&mut self) -> Vec<DropRecord> {
        self.queue.take_drops()
    }

    fn counters(&self) -> &BTreeMap<StreamId, DropCounters> {
        self.queue.counters()
    }
}
