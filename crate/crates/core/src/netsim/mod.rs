//! Deterministic discrete-event simulation of senders, bottlenecks and
//! receivers.
//!
//! Topology: senders feed the first bottleneck directly; the last bottleneck
//! is one-way RTT/2 from the receivers; acks return over a delay-only path of
//! RTT/2. Sources stop at the configured duration and the network then runs
//! for `drain_ms` more so in-flight frames resolve.

mod event;
mod link;
mod log;

pub use event::EventQueue;
pub use link::{CellularLink, LegacySwitch};
pub use log::{write_events, Element, EventKind, EventRow, EVENTS_HEADER};

use std::collections::BTreeMap;

use crate::apps::{
    flow_rng, frame_records, DecodeModel, MediaSource, MessageSpec, OracleSchedule, SpatialSource,
    TemporalSource, Unit, VolumetricSource,
};
use crate::config::{BulkConfig, ConfigError, FlowConfig, RouterKind, ScenarioConfig, Scheme, Topology};
use crate::dropqueue::{DropCounters, DropRecord, DropTailQueue, PDropQueue, PacketQueue, RouterQueue};
use crate::header::OctopusHeader;
use crate::metrics::{aoi_series, latencies, quality_score, FrameRecord, Residence, Stats};
use crate::trace::BandwidthTrace;
use crate::transport::{Ack, CcStats, Receiver, Sender, SenderConfig};
use crate::types::{FlowId, FrameTag, Micros, MsgParams, Packet, StreamId, MAX_PAYLOAD, MICROS_PER_MS};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Packet accounting at the end of a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Conservation {
    /// Packets handed to the network by senders.
    pub injected: u64,
    pub received: u64,
    /// Discarded by a dropping primitive or purge inside the network.
    pub dropped: u64,
    pub tail_dropped: u64,
    /// Still queued or propagating when the run stopped.
    pub in_flight: u64,
}

impl Conservation {
    pub fn holds(&self) -> bool {
        self.injected == self.received + self.dropped + self.tail_dropped + self.in_flight
    }
}

/// Results for one flow.
#[derive(Debug, Clone)]
pub struct FlowMetrics {
    pub kind: &'static str,
    pub stream: StreamId,
    pub frames: Vec<FrameRecord>,
    pub latency: Option<Stats>,
    pub aoi: Option<Stats>,
    pub quality_mean: Option<f64>,
    /// Share of bottleneck capacity this flow used during the run, percent.
    pub util_pct: f64,
    /// Drops in the send buffer.
    pub sender_drops: DropCounters,
    /// Drops at the router and legacy switch.
    pub network_drops: DropCounters,
    pub messages_submitted: u64,
    pub messages_delivered: u64,
    pub messages_refused: u64,
    pub cc: Option<CcStats>,
}

impl FlowMetrics {
    pub fn drops(&self) -> DropCounters {
        let mut d = self.sender_drops;
        d.merge(&self.network_drops);
        d
    }
}

/// A packet leaving the bottleneck toward the receivers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Departure {
    pub at: Micros,
    pub flow: usize,
    pub bytes: u32,
}

#[derive(Debug, Clone)]
pub struct RunMetrics {
    pub scenario: String,
    pub scheme: Scheme,
    pub duration_us: Micros,
    pub flows: Vec<FlowMetrics>,
    /// Residence times at the last bottleneck (sent and dropped packets).
    pub residence: Vec<Residence>,
    /// Residence times at the legacy switch when it precedes the cellular link.
    pub legacy_residence: Vec<Residence>,
    /// Bottleneck queue bytes after every change.
    pub occupancy: Vec<(Micros, u64)>,
    pub departures: Vec<Departure>,
    pub conservation: Conservation,
    pub events: Vec<EventRow>,
    trace: Option<BandwidthTrace>,
    legacy_rate_kbps: u64,
}

impl RunMetrics {
    /// Capacity of the last bottleneck in `[from, to)`, in packets of 1500 B.
    pub fn capacity_packets(&self, from: Micros, to: Micros) -> f64 {
        match &self.trace {
            Some(t) => t.count_in(from, to) as f64,
            None => self.legacy_rate_kbps as f64 * to.saturating_sub(from) as f64 / 12_000.0 / 1000.0,
        }
    }

    /// Bottleneck departures of `flow` (all flows when `None`) in `[from, to)`.
    pub fn served(&self, flow: Option<usize>, from: Micros, to: Micros) -> (u64, u64) {
        self.departures
            .iter()
            .filter(|d| d.at >= from && d.at < to && flow.is_none_or(|f| d.flow == f))
            .fold((0, 0), |(n, b), d| (n + 1, b + d.bytes as u64))
    }

    /// Percent of bottleneck capacity used in `[from, to)`.
    pub fn utilization(&self, flow: Option<usize>, from: Micros, to: Micros) -> f64 {
        let cap = self.capacity_packets(from, to);
        if cap == 0.0 {
            return 0.0;
        }
        let (n, bytes) = self.served(flow, from, to);
        let used = if self.trace.is_some() { n as f64 } else { bytes as f64 / 1500.0 };
        100.0 * used / cap
    }

    /// Largest bottleneck backlog in `[from, to)`.
    pub fn max_queue_bytes(&self, from: Micros, to: Micros) -> u64 {
        self.occupancy
            .iter()
            .filter(|(t, _)| *t >= from && *t < to)
            .map(|&(_, b)| b)
            .max()
            .unwrap_or(0)
    }
}

enum Source {
    Media(Box<dyn MediaSource + Send>),
    Bulk(BulkConfig),
}

enum Endpoint {
    Transport { sender: Box<Sender>, source: Source },
    Oracle { schedule: OracleSchedule, next_seq: u64 },
}

struct UnitRec {
    tag: FrameTag,
    created_at: Micros,
    size: u32,
    msg_id: Option<u32>,
}

struct Flow {
    kind: &'static str,
    stream: StreamId,
    endpoint: Endpoint,
    receiver: Receiver,
    units: Vec<UnitRec>,
    model: Option<DecodeModel>,
    quality_table: Vec<f64>,
    delivered: BTreeMap<u32, Micros>,
    submitted: u64,
    wake_at: Option<Micros>,
    timer_at: Option<Micros>,
}

enum Ev {
    AppTick(usize),
    Wake(usize),
    Timer(usize),
    Oracle(usize),
    LegacyDone(Packet),
    Opportunity,
    Receive(Packet),
    Ack(usize, Ack),
}

struct Sim<'a> {
    cfg: &'a ScenarioConfig,
    scheme: Scheme,
    ev: EventQueue<Ev>,
    flows: Vec<Flow>,
    legacy: Option<LegacySwitch>,
    cell: Option<CellularLink>,
    one_way: Micros,
    gen_end: Micros,
    log: Option<Vec<EventRow>>,
    residence: Vec<Residence>,
    legacy_residence: Vec<Residence>,
    occupancy: Vec<(Micros, u64)>,
    departures: Vec<Departure>,
    cons: Conservation,
}

/// Run a scenario, loading its trace.
pub fn run(cfg: &ScenarioConfig) -> Result<RunMetrics, SimError> {
    cfg.validate()?;
    let trace = match cfg.topology {
        Topology::LegacyOnly => None,
        _ => Some(cfg.load_trace()?),
    };
    Ok(run_with_trace(cfg, trace))
}

/// Run a scenario on an explicit trace (ignored for legacy-only runs).
pub fn run_with_trace(cfg: &ScenarioConfig, trace: Option<BandwidthTrace>) -> RunMetrics {
    let mut sim = Sim::new(cfg, trace.clone());
    sim.start();
    let end = sim.gen_end + if sim.gen_end > 0 { cfg.drain_ms * MICROS_PER_MS } else { 0 };
    while let Some(t) = sim.ev.peek_time() {
        if t >= end {
            break;
        }
        let (now, e) = sim.ev.pop().expect("peeked");
        sim.handle(now, e);
    }
    sim.finish(trace)
}

fn drop_counters(m: &BTreeMap<StreamId, DropCounters>, s: StreamId) -> DropCounters {
    m.get(&s).copied().unwrap_or_default()
}

impl<'a> Sim<'a> {
    fn new(cfg: &'a ScenarioConfig, trace: Option<BandwidthTrace>) -> Self {
        let scheme = cfg.scheme;
        let cell = match (cfg.topology, &trace) {
            (Topology::LegacyOnly, _) | (_, None) => None,
            (_, Some(t)) => {
                let cap = cfg.link.buffer_bytes;
                let queue: Box<dyn PacketQueue + Send> = match cfg.router_kind() {
                    RouterKind::Octopus => {
                        let warm = cfg.link.warmup_kbps.unwrap_or(t.mean_kbps().round() as u64);
                        Box::new(RouterQueue::new(cap, warm.max(1)))
                    }
                    RouterKind::Pdrop => Box::new(PDropQueue::new(cap)),
                    RouterKind::Droptail => Box::new(DropTailQueue::new(cap)),
                };
                Some(CellularLink::new(queue, t))
            }
        };
        let legacy = (cfg.topology != Topology::CellularOnly)
            .then(|| LegacySwitch::new(cfg.legacy.rate_kbps, cfg.legacy.buffer_bytes));

        let flows = cfg
            .flows
            .iter()
            .enumerate()
            .map(|(i, f)| Self::make_flow(cfg, i, f, trace.as_ref()))
            .collect();

        Sim {
            cfg,
            scheme,
            ev: EventQueue::new(),
            flows,
            legacy,
            cell,
            one_way: cfg.link.rtt_ms * MICROS_PER_MS / 2,
            gen_end: cfg.duration_ms * MICROS_PER_MS,
            log: cfg.event_log.then(Vec::new),
            residence: Vec::new(),
            legacy_residence: Vec::new(),
            occupancy: Vec::new(),
            departures: Vec::new(),
            cons: Conservation::default(),
        }
    }

    fn make_flow(cfg: &ScenarioConfig, i: usize, f: &FlowConfig, trace: Option<&BandwidthTrace>) -> Flow {
        let stream = StreamId(i as u16 + 1);
        let rng = flow_rng(cfg.seed, i);
        let oracle = match (cfg.scheme.oracle_stale_ms(), f) {
            (Some(stale), _) => Some((5, stale)),
            (None, FlowConfig::Oracle(o)) => Some((o.window_ms, o.stale_ms)),
            _ => None,
        };
        let mut quality_table = cfg.quality.table.clone();
        let endpoint = if let Some((window, stale)) = oracle {
            let trace = trace.cloned().expect("oracle flows run on a cellular link");
            Endpoint::Oracle {
                schedule: OracleSchedule::new(trace, window, stale),
                next_seq: 1,
            }
        } else {
            let source = match f {
                FlowConfig::Temporal(c) => Source::Media(Box::new(TemporalSource::new(c.clone(), rng))),
                FlowConfig::Spatial(c) => Source::Media(Box::new(SpatialSource::new(c.clone(), rng))),
                FlowConfig::Volumetric(c) => {
                    quality_table = c.quality_table.clone();
                    Source::Media(Box::new(VolumetricSource::new(c.clone(), rng)))
                }
                FlowConfig::Bulk(c) => Source::Bulk(c.clone()),
                FlowConfig::Oracle(_) => unreachable!("handled above"),
            };
            let mut sender = Sender::new(
                FlowId(i),
                SenderConfig {
                    buffer_drops: cfg.scheme.buffer_drops(),
                    buffer_cap: cfg.sender_buffer_bytes,
                    ..Default::default()
                },
            );
            sender.open_stream(stream);
            Endpoint::Transport {
                sender: Box::new(sender),
                source,
            }
        };
        let (kind, model) = match &endpoint {
            Endpoint::Oracle { .. } => ("oracle", None),
            Endpoint::Transport { source: Source::Bulk(_), .. } => ("bulk", None),
            Endpoint::Transport { source: Source::Media(m), .. } => (f.kind(), Some(m.model())),
        };
        Flow {
            kind,
            stream,
            endpoint,
            receiver: Receiver::new(),
            units: Vec::new(),
            model,
            quality_table,
            delivered: BTreeMap::new(),
            submitted: 0,
            wake_at: None,
            timer_at: None,
        }
    }

    fn start(&mut self) {
        for i in 0..self.flows.len() {
            let due = match &self.flows[i].endpoint {
                Endpoint::Oracle { schedule, .. } => Some((schedule.next_due(), Ev::Oracle(i))),
                Endpoint::Transport { source: Source::Media(m), .. } => Some((m.next_due(), Ev::AppTick(i))),
                Endpoint::Transport { source: Source::Bulk(_), .. } => Some((0, Ev::Wake(i))),
            };
            if let Some((t, e)) = due {
                if t < self.gen_end {
                    self.ev.schedule(t, e);
                }
            }
        }
    }

    fn record(&mut self, at: Micros, element: Element, event: EventKind, p: &Packet) {
        if let Some(log) = &mut self.log {
            log.push(EventRow::packet(at, element, event, p));
        }
    }

    fn record_drops(&mut self, element: Element, drops: Vec<DropRecord>, residence: bool) {
        for d in drops {
            self.record(d.at, element, EventKind::of_drop(d.reason), &d.packet);
            if element == Element::Cell || element == Element::Legacy {
                if d.reason == crate::dropqueue::DropReason::Tail {
                    self.cons.tail_dropped += 1;
                } else {
                    self.cons.dropped += 1;
                    if residence {
                        let r = Residence {
                            at: d.at,
                            delay: d.at - d.packet.enqueued_at,
                        };
                        self.residence.push(r);
                    }
                }
            }
        }
    }

    fn bottleneck_bytes(&self) -> u64 {
        match (&self.cell, &self.legacy) {
            (Some(c), _) => c.queue.bytes(),
            (None, Some(l)) => l.queue.bytes(),
            (None, None) => 0,
        }
    }

    fn note_occupancy(&mut self, now: Micros) {
        let b = self.bottleneck_bytes();
        self.occupancy.push((now, b));
    }

    fn handle(&mut self, now: Micros, e: Ev) {
        match e {
            Ev::AppTick(i) => self.app_tick(i, now),
            Ev::Wake(i) => {
                if self.flows[i].wake_at.is_some_and(|t| t <= now) {
                    self.flows[i].wake_at = None;
                }
                self.pump(i, now);
            }
            Ev::Timer(i) => {
                if self.flows[i].timer_at.is_some_and(|t| t <= now) {
                    self.flows[i].timer_at = None;
                }
                if let Endpoint::Transport { sender, .. } = &mut self.flows[i].endpoint {
                    sender.on_timer(now);
                }
                self.pump(i, now);
            }
            Ev::Oracle(i) => self.oracle_window(i, now),
            Ev::LegacyDone(p) => self.legacy_done(p, now),
            Ev::Opportunity => self.opportunity(now),
            Ev::Receive(p) => self.receive(p, now),
            Ev::Ack(i, ack) => {
                if let Endpoint::Transport { sender, .. } = &mut self.flows[i].endpoint {
                    sender.on_ack(&ack, now);
                }
                self.pump(i, now);
            }
        }
    }

    fn app_tick(&mut self, i: usize, now: Micros) {
        let flow = &mut self.flows[i];
        let Endpoint::Transport { sender, source: Source::Media(src) } = &mut flow.endpoint else {
            return;
        };
        let specs = src.generate(now, &sender.stats());
        for MessageSpec { size, params, tag } in specs {
            let msg_id = match sender.submit_message(flow.stream, size, params, tag, now) {
                Ok(m) => Some(m.msg_id),
                Err(_) => None,
            };
            flow.submitted += 1;
            flow.units.push(UnitRec {
                tag,
                created_at: now,
                size,
                msg_id,
            });
        }
        let next = src.next_due();
        if next < self.gen_end {
            self.ev.schedule(next, Ev::AppTick(i));
        }
        self.pump(i, now);
    }

    /// Let flow `i`'s transport send what it can and arm its timers.
    fn pump(&mut self, i: usize, now: Micros) {
        let gen_end = self.gen_end;
        let flow = &mut self.flows[i];
        let Endpoint::Transport { sender, source } = &mut flow.endpoint else {
            return;
        };
        if let Source::Bulk(b) = source {
            let want = b.backlog as u64 * (b.message_bytes as u64 + 40);
            while now < gen_end && sender.buffered_bytes() < want {
                let r = sender.submit_message(flow.stream, b.message_bytes, MsgParams::default(), FrameTag::default(), now);
                if r.is_err() {
                    break;
                }
                flow.submitted += 1;
            }
        }
        let packets = sender.poll_send(now);
        let drops = sender.take_drops();
        let next_send = sender.next_send_time();
        let next_timeout = sender.next_timeout();

        if let Some(t) = next_send.filter(|&t| t > now) {
            if flow.wake_at.is_none_or(|w| w <= now || w > t) {
                flow.wake_at = Some(t);
                self.ev.schedule(t, Ev::Wake(i));
            }
        }
        if let Some(t) = next_timeout {
            if flow.timer_at.is_none_or(|w| w <= now || w > t) {
                flow.timer_at = Some(t);
                self.ev.schedule(t, Ev::Timer(i));
            }
        }
        self.record_drops(Element::Sender(i), drops, false);
        for p in packets {
            self.inject(p, now);
        }
    }

    fn oracle_window(&mut self, i: usize, now: Micros) {
        let stream = self.flows[i].stream;
        let Endpoint::Oracle { schedule, next_seq } = &mut self.flows[i].endpoint else {
            return;
        };
        let n = schedule.take();
        let mut out = Vec::with_capacity(n as usize);
        for _ in 0..n {
            let seq = *next_seq;
            *next_seq += 1;
            let header = OctopusHeader {
                head: true,
                tail: true,
                stream_id: stream.0,
                msg_id: seq as u32,
                ..Default::default()
            };
            let mut p = Packet::new(header, MAX_PAYLOAD);
            p.seq = seq;
            p.sent_at = now;
            p.flow = FlowId(i);
            out.push(p);
        }
        let next = schedule.next_due();
        self.flows[i].submitted += n;
        if next < self.gen_end {
            self.ev.schedule(next, Ev::Oracle(i));
        }
        for p in out {
            self.inject(p, now);
        }
    }

    fn inject(&mut self, p: Packet, now: Micros) {
        self.cons.injected += 1;
        if self.legacy.is_some() {
            self.legacy_arrive(p, now);
        } else {
            self.cell_arrive(p, now);
        }
    }

    fn legacy_arrive(&mut self, p: Packet, now: Micros) {
        let sw = self.legacy.as_mut().expect("legacy hop present");
        let copy = p.clone();
        let (r, started) = sw.arrive(p, now);
        let drops = sw.queue.take_drops();
        if r.accepted() {
            self.record(now, Element::Legacy, EventKind::Enq, &copy);
        }
        self.record_drops(Element::Legacy, drops, self.cell.is_none());
        if let Some((done, p)) = started {
            self.legacy_started(p, now, done);
        }
        if self.cell.is_none() {
            self.note_occupancy(now);
        }
    }

    fn legacy_started(&mut self, p: Packet, now: Micros, done: Micros) {
        let r = Residence {
            at: now,
            delay: now - p.enqueued_at,
        };
        if self.cell.is_some() {
            self.legacy_residence.push(r);
        } else {
            self.residence.push(r);
        }
        self.record(now, Element::Legacy, EventKind::Deq, &p);
        self.ev.schedule(done, Ev::LegacyDone(p));
    }

    fn legacy_done(&mut self, p: Packet, now: Micros) {
        if self.cell.is_some() {
            self.cell_arrive(p, now);
        } else {
            self.departures.push(Departure {
                at: now,
                flow: p.flow.0,
                bytes: p.wire_size(),
            });
            self.ev.schedule(now + self.one_way, Ev::Receive(p));
        }
        let next = self.legacy.as_mut().expect("legacy hop present").finish(now);
        if let Some((done, p)) = next {
            self.legacy_started(p, now, done);
        }
        if self.cell.is_none() {
            self.note_occupancy(now);
        }
    }

    fn cell_arrive(&mut self, p: Packet, now: Micros) {
        let link = self.cell.as_mut().expect("cellular hop present");
        let copy = p.clone();
        let (r, at) = link.arrive(p, now);
        let drops = link.queue.take_drops();
        if r.accepted() {
            self.record(now, Element::Cell, EventKind::Enq, &copy);
        }
        self.record_drops(Element::Cell, drops, true);
        if let Some(t) = at {
            self.ev.schedule(t, Ev::Opportunity);
        }
        self.note_occupancy(now);
    }

    fn opportunity(&mut self, now: Micros) {
        let link = self.cell.as_mut().expect("cellular hop present");
        let (sent, next) = link.serve(now);
        let drops = link.queue.take_drops();
        self.record_drops(Element::Cell, drops, true);
        if let Some(p) = sent {
            self.residence.push(Residence {
                at: now,
                delay: now - p.enqueued_at,
            });
            self.record(now, Element::Cell, EventKind::Deq, &p);
            self.departures.push(Departure {
                at: now,
                flow: p.flow.0,
                bytes: p.wire_size(),
            });
            self.ev.schedule(now + self.one_way, Ev::Receive(p));
        }
        if let Some(t) = next {
            self.ev.schedule(t, Ev::Opportunity);
        }
        self.note_occupancy(now);
    }

    fn receive(&mut self, p: Packet, now: Micros) {
        self.cons.received += 1;
        let i = p.flow.0;
        let one_way = self.one_way;
        let flow = &mut self.flows[i];
        let (delivered, ack) = flow.receiver.on_receive(&p, now);
        if let Some(d) = delivered {
            flow.delivered.insert(d.msg_id, now);
            self.record(now, Element::Receiver(i), EventKind::Deliver, &p);
        }
        let flow = &self.flows[i];
        if let (Some(ack), Endpoint::Transport { .. }) = (ack, &flow.endpoint) {
            self.ev.schedule(now + one_way, Ev::Ack(i, ack));
        }
    }

    fn finish(mut self, trace: Option<BandwidthTrace>) -> RunMetrics {
        let mut in_flight = self
            .ev
            .pending()
            .filter(|e| matches!(e, Ev::LegacyDone(_) | Ev::Receive(_)))
            .count() as u64;
        in_flight += self.cell.as_ref().map_or(0, |c| c.queue.len() as u64);
        in_flight += self.legacy.as_ref().map_or(0, |l| l.queue.len() as u64);
        self.cons.in_flight = in_flight;

        let gen_end = self.gen_end;
        let mut metrics = RunMetrics {
            scenario: self.cfg.name.clone(),
            scheme: self.scheme,
            duration_us: gen_end,
            flows: Vec::new(),
            residence: std::mem::take(&mut self.residence),
            legacy_residence: std::mem::take(&mut self.legacy_residence),
            occupancy: std::mem::take(&mut self.occupancy),
            departures: std::mem::take(&mut self.departures),
            conservation: self.cons,
            events: self.log.take().unwrap_or_default(),
            trace: if self.cell.is_some() { trace } else { None },
            legacy_rate_kbps: self.cfg.legacy.rate_kbps,
        };

        let empty = BTreeMap::new();
        let cell_counters = self.cell.as_ref().map_or(&empty, |c| c.queue.counters());
        let legacy_counters = self.legacy.as_ref().map_or(&empty, |l| l.queue.counters());
        let decay = self.cfg.quality.decay_per_sec;
        let flows: Vec<FlowMetrics> = self
            .flows
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let units: Vec<Unit> = f
                    .units
                    .iter()
                    .map(|u| Unit {
                        tag: u.tag,
                        created_at: u.created_at,
                        size: u.size,
                        delivered_at: u.msg_id.and_then(|m| f.delivered.get(&m).copied()),
                    })
                    .collect();
                let frames = f.model.as_ref().map(|m| frame_records(m, &units)).unwrap_or_default();
                let mut network = drop_counters(cell_counters, f.stream);
                network.merge(&drop_counters(legacy_counters, f.stream));
                let (sender_drops, refused, cc) = match &f.endpoint {
                    Endpoint::Transport { sender, .. } => (
                        drop_counters(sender.buffer_counters(), f.stream),
                        sender.refused_messages(f.stream),
                        Some(sender.stats()),
                    ),
                    Endpoint::Oracle { .. } => (DropCounters::default(), 0, None),
                };
                FlowMetrics {
                    kind: f.kind,
                    stream: f.stream,
                    latency: Stats::of(latencies(&frames)),
                    aoi: Stats::of(aoi_series(&frames)),
                    quality_mean: quality_score(&frames, &f.quality_table, decay),
                    frames,
                    util_pct: metrics.utilization(Some(i), 0, gen_end),
                    sender_drops,
                    network_drops: network,
                    messages_submitted: f.submitted,
                    messages_delivered: f.delivered.len() as u64,
                    messages_refused: refused,
                    cc,
                }
            })
            .collect();
        metrics.flows = flows;
        metrics
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{OracleConfig, SpatialConfig};

    fn scenario(flows: Vec<FlowConfig>, duration_ms: u64) -> ScenarioConfig {
        ScenarioConfig {
            flows,
            duration_ms,
            ..Default::default()
        }
    }

    #[test]
    fn oracle_fills_constant_link() {
        let mut cfg = scenario(vec![FlowConfig::Oracle(OracleConfig::default())], 10_000);
        cfg.scheme = Scheme::Droptail;
        let m = run(&cfg).unwrap();
        let u = m.flows[0].util_pct;
        // one 5 ms window's worth of edge effect at most
        assert!((u - 100.0).abs() <= 0.1, "{u}");
        assert!(m.conservation.holds());
    }

    #[test]
    fn zero_duration_is_empty() {
        let m = run(&scenario(vec![FlowConfig::Spatial(SpatialConfig::default())], 0)).unwrap();
        assert!(m.flows[0].frames.is_empty());
        assert_eq!(m.conservation, Conservation::default());
        assert!(m.flows[0].latency.is_none());
    }

    #[test]
    fn spatial_flow_runs_and_conserves() {
        let mut cfg = scenario(vec![FlowConfig::Spatial(SpatialConfig::default())], 5_000);
        cfg.event_log = true;
        let m = run(&cfg).unwrap();
        assert!(m.conservation.holds(), "{:?}", m.conservation);
        let f = &m.flows[0];
        assert_eq!(f.frames.len(), 150);
        assert!(f.frames.iter().filter(|r| r.decodable()).count() > 100);
        assert!(!m.events.is_empty());
    }
}
