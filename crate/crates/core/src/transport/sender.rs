use std::collections::{BTreeMap, BTreeSet};

use super::bbr::{Bbr, BbrConfig, RateSample};
use super::{Ack, CcStats, TransportError};
use crate::dropqueue::{DropCounters, DropQueue, DropRecord};
use crate::types::{
    packetize, FlowId, FrameTag, Message, Micros, MsgParams, Packet, StreamId, MICROS_PER_MS,
    MICROS_PER_SEC, MTU,
};

/// Reordering tolerance before an unacked packet is declared lost.
const REORDER_PACKETS: u64 = 3;

#[derive(Debug, Clone)]
pub struct SenderConfig {
    /// Apply the dropping primitives inside the send buffer.
    pub buffer_drops: bool,
    /// Optional byte cap; messages that do not fit are refused whole.
    pub buffer_cap: Option<u64>,
    pub bbr: BbrConfig,
}

impl Default for SenderConfig {
    fn default() -> Self {
        SenderConfig {
            buffer_drops: true,
            buffer_cap: None,
            bbr: BbrConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct SentPacket {
    size: u64,
    sent_at: Micros,
    delivered: u64,
    delivered_time: Micros,
    first_sent_time: Micros,
    is_app_limited: bool,
}

/// Sending half of the message transport.
#[derive(Debug)]
pub struct Sender {
    flow: FlowId,
    next_msg_id: BTreeMap<StreamId, u32>,
    buffer: DropQueue,
    refused: BTreeMap<StreamId, u64>,
    cc: Bbr,
    next_seq: u64,
    next_send_at: Micros,
    inflight: BTreeMap<u64, SentPacket>,
    inflight_bytes: u64,
    delivered: u64,
    delivered_time: Micros,
    first_sent_time: Micros,
    app_limited_until: u64,
    largest_acked: u64,
    srtt: Option<Micros>,
    lost_packets: u64,
}

impl Sender {
    pub fn new(flow: FlowId, cfg: SenderConfig) -> Self {
        let buffer = if cfg.buffer_drops {
            DropQueue::new(cfg.buffer_cap)
        } else {
            DropQueue::fifo(cfg.buffer_cap)
        };
        Sender {
            flow,
            next_msg_id: BTreeMap::new(),
            buffer,
            refused: BTreeMap::new(),
            cc: Bbr::new(cfg.bbr),
            next_seq: 1,
            next_send_at: 0,
            inflight: BTreeMap::new(),
            inflight_bytes: 0,
            delivered: 0,
            delivered_time: 0,
            first_sent_time: 0,
            app_limited_until: 0,
            largest_acked: 0,
            srtt: None,
            lost_packets: 0,
        }
    }

    pub fn open_stream(&mut self, stream: StreamId) -> StreamId {
        self.next_msg_id.entry(stream).or_insert(1);
        stream
    }

    /// Packetize a message into the send buffer, returning its assigned id.
    pub fn submit_message(
        &mut self,
        stream: StreamId,
        size: u32,
        params: MsgParams,
        frame_tag: FrameTag,
        now: Micros,
    ) -> Result<Message, TransportError> {
        params.validate()?;
        let next = self
            .next_msg_id
            .get_mut(&stream)
            .ok_or(TransportError::UnknownStream(stream))?;
        let msg = Message {
            stream,
            msg_id: *next,
            size,
            params,
            created_at: now,
            frame_tag,
        };
        let mut packets = packetize(&msg)?;
        *next += 1;
        let total: u64 = packets.iter().map(|p| p.wire_size() as u64).sum();
        if !self.buffer.has_room(total) {
            *self.refused.entry(stream).or_default() += 1;
            return Err(TransportError::BufferFull(msg.msg_id));
        }
        for p in packets.iter_mut() {
            p.flow = self.flow;
        }
        for p in packets {
            self.buffer.enqueue(p, now);
        }
        Ok(msg)
    }

    /// Emit every packet the pacer and window allow at `now`.
    pub fn poll_send(&mut self, now: Micros) -> Vec<Packet> {
        let mut out = Vec::new();
        while now >= self.next_send_at && self.inflight_bytes + MTU as u64 <= self.cc.cwnd() {
            let bw = self.cc.estimated_bw_kbps();
            let Some(mut p) = self.buffer.dequeue_with(now, |_| bw) else {
                break;
            };
            let size = p.wire_size() as u64;
            if self.inflight.is_empty() {
                self.first_sent_time = now;
                self.delivered_time = now;
            }
            p.seq = self.next_seq;
            p.sent_at = now;
            self.next_seq += 1;
            self.inflight.insert(
                p.seq,
                SentPacket {
                    size,
                    sent_at: now,
                    delivered: self.delivered,
                    delivered_time: self.delivered_time,
                    first_sent_time: self.first_sent_time,
                    is_app_limited: self.app_limited_until > 0,
                },
            );
            self.inflight_bytes += size;
            let gap = (size as f64 * MICROS_PER_SEC as f64 / self.cc.pacing_rate()).ceil() as Micros;
            self.next_send_at = self.next_send_at.max(now) + gap;
            out.push(p);
        }
        if self.buffer.is_empty() && self.inflight_bytes + (MTU as u64) <= self.cc.cwnd() {
            // nothing to send while the window has room
            self.app_limited_until = (self.delivered + self.inflight_bytes).max(1);
        }
        out
    }

    /// Earliest time `poll_send` could make progress, if any.
    pub fn next_send_time(&self) -> Option<Micros> {
        if self.buffer.is_empty() || self.inflight_bytes + MTU as u64 > self.cc.cwnd() {
            None
        } else {
            Some(self.next_send_at)
        }
    }

    fn loss_timeout(&self) -> Micros {
        2 * self.srtt.unwrap_or(self.cc.config().initial_rtt) + 200 * MICROS_PER_MS
    }

    /// Deadline at which the oldest in-flight packet times out.
    pub fn next_timeout(&self) -> Option<Micros> {
        self.inflight
            .values()
            .map(|p| p.sent_at)
            .min()
            .map(|t| t + self.loss_timeout())
    }

    /// Declare timed-out packets lost. Returns how many.
    pub fn on_timer(&mut self, now: Micros) -> usize {
        let timeout = self.loss_timeout();
        let lost: Vec<u64> = self
            .inflight
            .iter()
            .filter(|(_, p)| p.sent_at + timeout <= now)
            .map(|(&s, _)| s)
            .collect();
        for s in &lost {
            self.mark_lost(*s);
        }
        lost.len()
    }

    fn mark_lost(&mut self, seq: u64) {
        if let Some(p) = self.inflight.remove(&seq) {
            self.inflight_bytes -= p.size;
            self.lost_packets += 1;
        }
    }

    pub fn on_ack(&mut self, ack: &Ack, now: Micros) {
        let mut acked: BTreeSet<u64> = self.inflight.range(..=ack.cum_seq).map(|(&s, _)| s).collect();
        for &(lo, hi) in &ack.sack {
            acked.extend(self.inflight.range(lo..=hi).map(|(&s, _)| s));
        }
        if acked.is_empty() {
            // stale or duplicate
            return;
        }
        let mut newest: Option<SentPacket> = None;
        for s in &acked {
            let p = self.inflight.remove(s).expect("acked seq is in flight");
            self.inflight_bytes -= p.size;
            self.delivered += p.size;
            self.delivered_time = now;
            if newest.is_none_or(|n| p.delivered >= n.delivered) {
                newest = Some(p);
            }
            self.largest_acked = self.largest_acked.max(*s);
        }
        if self.app_limited_until > 0 && self.delivered > self.app_limited_until {
            self.app_limited_until = 0;
        }
        let lost: Vec<u64> = self
            .inflight
            .range(..self.largest_acked.saturating_sub(REORDER_PACKETS))
            .map(|(&s, _)| s)
            .collect();
        for s in lost {
            self.mark_lost(s);
        }

        let newest = newest.expect("at least one packet acked");
        let rtt = now.saturating_sub(ack.echo_sent_at).max(1);
        self.srtt = Some(match self.srtt {
            None => rtt,
            Some(s) => (7 * s + rtt) / 8,
        });
        let send_elapsed = newest.sent_at.saturating_sub(newest.first_sent_time);
        let ack_elapsed = self.delivered_time.saturating_sub(newest.delivered_time);
        self.first_sent_time = newest.sent_at;
        let interval = send_elapsed.max(ack_elapsed);
        let sample = (interval > 0 && self.cc.min_rtt().is_none_or(|m| interval >= m / 4)).then(|| {
            RateSample {
                delivery_rate: (self.delivered - newest.delivered) as f64 * MICROS_PER_SEC as f64
                    / interval as f64,
                rtt,
                prior_delivered: newest.delivered,
                is_app_limited: newest.is_app_limited,
            }
        });
        // RTT still counts even when the rate sample is unusable
        let sample = sample.or_else(|| {
            self.cc.min_rtt().is_none().then_some(RateSample {
                delivery_rate: 0.0,
                rtt,
                prior_delivered: newest.delivered,
                is_app_limited: true,
            })
        });
        self.cc.on_ack(now, sample, self.delivered, self.inflight_bytes);
    }

    pub fn stats(&self) -> CcStats {
        CcStats {
            estimated_bw_kbps: self.cc.estimated_bw_kbps(),
            min_rtt_us: self.cc.min_rtt(),
            cwnd_bytes: self.cc.cwnd(),
            pacing_rate_kbps: (self.cc.pacing_rate() * 8.0 / 1000.0) as u64,
            inflight_bytes: self.inflight_bytes,
            delivered_bytes: self.delivered,
            lost_packets: self.lost_packets,
        }
    }

    pub fn cc(&self) -> &Bbr {
        &self.cc
    }

    pub fn inflight_bytes(&self) -> u64 {
        self.inflight_bytes
    }

    pub fn buffered_bytes(&self) -> u64 {
        self.buffer.bytes()
    }

    pub fn buffer_counters(&self) -> &BTreeMap<StreamId, DropCounters> {
        self.buffer.counters()
    }

    /// Messages refused because the capped buffer was full.
    pub fn refused_messages(&self, stream: StreamId) -> u64 {
        self.refused.get(&stream).copied().unwrap_or(0)
    }

    pub fn take_drops(&mut self) -> Vec<DropRecord> {
        self.buffer.take_drops()
    }
}
