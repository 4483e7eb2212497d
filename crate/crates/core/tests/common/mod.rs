//! Reference models shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use octopus::apps::{decodable_units, temporal_layer, DecodeModel, Unit};
use octopus::dropqueue::DropQueue;
use octopus::header::OctopusHeader;
use octopus::types::{packetize, FrameTag, Message, MsgParams, Packet, StreamId};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const STREAMS: usize = 4;

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone)]
pub enum Op {
    Enq(Packet),
    /// Dequeue once; entry `s` is stream `s + 1`'s bandwidth in kbps.
    Deq([u64; STREAMS]),
}

/// Packet identity within one sequence.
pub type Pid = u64;

fn pid(p: &Packet) -> Pid {
    p.seq
}

/// A random interleaving of packet arrivals and dequeues over up to four
/// streams. Each packet's `seq` is its position in arrival order.
pub fn random_sequence(r: &mut ChaCha8Rng, max_events: usize) -> Vec<Op> {
    let n = r.random_range(1..=max_events);
    let streams = r.random_range(1..=STREAMS);
    let mut next_id = [1u32; STREAMS];
    let mut pending: Vec<Vec<Packet>> = vec![Vec::new(); STREAMS];
    let mut seq = 0;
    let mut ops = Vec::with_capacity(n);
    while ops.len() < n {
        if r.random_bool(0.55) {
            let s = r.random_range(0..streams);
            if pending[s].is_empty() {
                let params = MsgParams {
                    msg_priority: r.random_range(0..8),
                    drop_flag: r.random_bool(0.2),
                    priority_threshold: r.random_range(0..8),
                    bitrate_threshold_kbps: if r.random_bool(0.7) { 0 } else { r.random_range(1..3000) },
                };
                let m = Message {
                    stream: StreamId(s as u16 + 1),
                    msg_id: next_id[s],
                    size: r.random_range(1..4000),
                    params,
                    created_at: 0,
                    frame_tag: FrameTag::default(),
                };
                next_id[s] += 1;
                let mut pkts = packetize(&m).unwrap();
                pkts.reverse();
                pending[s] = pkts;
            }
            let mut p = pending[s].pop().unwrap();
            p.seq = seq;
            seq += 1;
            ops.push(Op::Enq(p));
        } else {
            let mut bw = [0; STREAMS];
            for b in &mut bw {
                *b = r.random_range(0..4000);
            }
            ops.push(Op::Deq(bw));
        }
    }
    ops
}

/// Fates of every arrived packet.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Partition {
    /// In emission order.
    pub emitted: Vec<Pid>,
    pub dropped: BTreeSet<Pid>,
    /// Emission index of each dequeue that returned a packet, by op index.
    pub emitted_at_op: BTreeMap<Pid, usize>,
}

/// Run the sequence through a [`DropQueue`].
pub fn run_queue(ops: &[Op]) -> Partition {
    let mut q = DropQueue::new(None);
    let mut out = Partition::default();
    for (i, op) in ops.iter().enumerate() {
        match op {
            Op::Enq(p) => {
                assert!(q.enqueue(p.clone(), i as u64).accepted());
            }
            Op::Deq(bw) => {
                if let Some(p) = q.dequeue_with(i as u64, |s| bw[s.0 as usize - 1]) {
                    out.emitted_at_op.insert(pid(&p), i);
                    out.emitted.push(pid(&p));
                }
                for d in q.take_drops() {
                    out.dropped.insert(pid(&d.packet));
                }
            }
        }
    }
    out
}

/// Whether some dropper in `history` covers message `m` of priority `prio`:
/// a dropper tail of the same stream, newer, with threshold at most `prio`.
fn covered(history: &[Op], h: &OctopusHeader) -> bool {
    history.iter().any(|op| match op {
        Op::Enq(d) => {
            d.header.stream_id == h.stream_id
                && d.header.drop_flag
                && d.header.tail
                && d.header.priority_threshold <= h.msg_priority
                && h.msg_id < d.header.msg_id
        }
        Op::Deq(_) => false,
    })
}

/// Brute-force reference: each head's fate is re-derived from the whole
/// history before the dequeue that reaches it.
pub fn reference(ops: &[Op]) -> Partition {
    let mut buffered: Vec<Packet> = Vec::new();
    let mut fate: BTreeMap<(u16, u32), bool> = BTreeMap::new();
    let mut out = Partition::default();
    for (i, op) in ops.iter().enumerate() {
        match op {
            Op::Enq(p) => buffered.push(p.clone()),
            Op::Deq(bw) => {
                while !buffered.is_empty() {
                    let p = buffered.remove(0);
                    let key = (p.header.stream_id, p.header.msg_id);
                    if p.header.head {
                        let slow = p.header.bitrate_threshold_kbps as u64 > bw[p.header.stream_id as usize - 1];
                        fate.insert(key, covered(&ops[..i], &p.header) || slow);
                    }
                    if fate[&key] {
                        out.dropped.insert(pid(&p));
                    } else {
                        out.emitted_at_op.insert(pid(&p), i);
                        out.emitted.push(pid(&p));
                        break;
                    }
                }
            }
        }
    }
    out
}

/// Check safety, atomicity, FIFO order and work conservation of a queue run.
/// Returns a description of the first violation.
pub fn check_invariants(ops: &[Op], part: &Partition) -> Result<(), String> {
    let packets: BTreeMap<Pid, (usize, &Packet)> = ops
        .iter()
        .enumerate()
        .filter_map(|(i, op)| match op {
            Op::Enq(p) => Some((pid(p), (i, p))),
            Op::Deq(_) => None,
        })
        .collect();
    let emitted: BTreeSet<Pid> = part.emitted.iter().copied().collect();

    // FIFO: emission order is arrival order restricted to emitted packets
    if part.emitted.windows(2).any(|w| w[0] >= w[1]) {
        return Err("emission order differs from arrival order".into());
    }

    // atomicity: a message is emitted whole or not at all, among packets
    // that have left the queue
    let mut per_msg: BTreeMap<(u16, u32), (usize, usize)> = BTreeMap::new();
    for (&id, (_, p)) in &packets {
        let e = per_msg.entry((p.header.stream_id, p.header.msg_id)).or_default();
        if emitted.contains(&id) {
            e.0 += 1;
        }
        if part.dropped.contains(&id) {
            e.1 += 1;
        }
    }
    if let Some((k, _)) = per_msg.iter().find(|(_, &(e, d))| e > 0 && d > 0) {
        return Err(format!("message {k:?} partly emitted and partly dropped"));
    }

    // safety: a dropper enqueued at op i prevents any later emission of an
    // older covered message whose head had not left by i
    let head_out: BTreeMap<(u16, u32), usize> = packets
        .values()
        .filter(|(_, p)| p.header.head)
        .filter_map(|(_, p)| {
            part.emitted_at_op
                .get(&pid(p))
                .map(|&at| ((p.header.stream_id, p.header.msg_id), at))
        })
        .collect();
    for (i, d) in packets.values().filter(|(_, d)| d.header.drop_flag && d.header.tail) {
        for (_, m) in packets.values().filter(|(_, m)| m.header.head) {
            let h = &m.header;
            if h.stream_id != d.header.stream_id
                || h.msg_id >= d.header.msg_id
                || h.msg_priority < d.header.priority_threshold
            {
                continue;
            }
            if let Some(&at) = head_out.get(&(h.stream_id, h.msg_id)) {
                if at > *i {
                    return Err(format!(
                        "message {} emitted at op {at} after dropper {} at op {i}",
                        h.msg_id, d.header.msg_id
                    ));
                }
            }
        }
    }

    // work conservation: after a dequeue that emitted nothing, everything
    // that had arrived is gone
    let mut seen = 0u64;
    for (i, op) in ops.iter().enumerate() {
        match op {
            Op::Enq(_) => seen += 1,
            Op::Deq(_) => {
                let left = (0..seen).any(|p| {
                    !part.dropped.contains(&p) && part.emitted_at_op.get(&p).is_none_or(|&at| at > i)
                });
                let emitted_here = part.emitted_at_op.values().any(|&at| at == i);
                if left && !emitted_here {
                    return Err(format!("dequeue at op {i} idled with packets buffered"));
                }
            }
        }
    }
    Ok(())
}

/// Outcome of one temporal-policy realization.
pub struct Realization {
    pub frames: u32,
    pub delivered: usize,
    pub dropped: usize,
    /// Delivered frames that cannot be decoded.
    pub undecodable: usize,
}

/// Push a temporal stream through a dropping send buffer and a dropping
/// router buffer, draining both at random rates.
pub fn temporal_realization(seed: u64, policy: fn(u8) -> MsgParams) -> Realization {
    let mut r = rng(seed);
    let gop = 4 * r.random_range(1..=8);
    let frames = r.random_range(8..200);
    let stream = StreamId(1);
    let mut sender = DropQueue::new(None);
    let mut router = DropQueue::new(None);
    let mut delivered: BTreeMap<u32, usize> = BTreeMap::new();
    let mut sizes: BTreeMap<u32, usize> = BTreeMap::new();
    let mut units = Vec::new();
    let mut now = 0;
    let mut f = 0u32;
    let drain = |q: &mut DropQueue, n: usize, now: u64| -> Vec<Packet> {
        (0..n).filter_map(|_| q.dequeue_with(now, |_| u64::MAX)).collect()
    };
    while f < frames || !sender.is_empty() || !router.is_empty() {
        now += 1;
        if f < frames && r.random_bool(0.5) {
            let layer = temporal_layer(f);
            let size = r.random_range(200..6000);
            let m = Message {
                stream,
                msg_id: f + 1,
                size,
                params: policy(layer),
                created_at: now,
                frame_tag: FrameTag { frame: f, layer, cell: 0 },
            };
            let pkts = packetize(&m).unwrap();
            sizes.insert(m.msg_id, pkts.len());
            for p in pkts {
                sender.enqueue(p, now);
            }
            units.push(Unit { tag: m.frame_tag, created_at: now, size, delivered_at: None });
            f += 1;
        }
        // bursty service makes queues build and droppers bite
        let s = if r.random_bool(0.3) { r.random_range(0..4) } else { 0 };
        for p in drain(&mut sender, s, now) {
            router.enqueue(p, now);
        }
        let n = if r.random_bool(0.25) { r.random_range(0..3) } else { 0 };
        for p in drain(&mut router, n, now) {
            *delivered.entry(p.msg_id()).or_default() += 1;
        }
        if f >= frames {
            // flush at the end so the realization terminates
            for p in drain(&mut sender, 64, now) {
                router.enqueue(p, now);
            }
            for p in drain(&mut router, 64, now) {
                *delivered.entry(p.msg_id()).or_default() += 1;
            }
        }
    }
    for (i, u) in units.iter_mut().enumerate() {
        let id = i as u32 + 1;
        if delivered.get(&id) == sizes.get(&id) {
            u.delivered_at = Some(now);
        }
    }
    let ok = decodable_units(&DecodeModel::Temporal { gop }, &units);
    let got = units.iter().filter(|u| u.delivered_at.is_some()).count();
    let undecodable = units
        .iter()
        .zip(&ok)
        .filter(|(u, &d)| u.delivered_at.is_some() && !d)
        .count();
    Realization {
        frames,
        delivered: got,
        dropped: frames as usize - got,
        undecodable,
    }
}

/// Max-min allocation by bisection on the water level.
pub fn water_fill(demands: &[f64], total: f64) -> Vec<f64> {
    let sum: f64 = demands.iter().sum();
    if sum <= total {
        return demands.to_vec();
    }
    let (mut lo, mut hi) = (0.0, demands.iter().cloned().fold(0.0, f64::max));
    for _ in 0..200 {
        let mid = (lo + hi) / 2.0;
        let used: f64 = demands.iter().map(|d| d.min(mid)).sum();
        if used > total {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    demands.iter().map(|d| d.min(lo)).collect()
}
