//! Hand-derived examples that need more than one module to check.

use octopus::apps::{spatial_params, temporal_params, volumetric_params, volumetric_priority};
use octopus::config::{BulkConfig, FlowConfig, OracleConfig, ScenarioConfig, Scheme, SpatialConfig, Topology, TraceSpec};
use octopus::dropqueue::{DropQueue, DropTailQueue, RouterQueue};
use octopus::netsim::{run, run_with_trace, CellularLink};
use octopus::trace::BandwidthTrace;
use octopus::types::{packetize, FrameTag, Message, MsgParams, Packet, StreamId, MICROS_PER_MS};

fn msg(id: u32, size: u32, params: MsgParams) -> Vec<Packet> {
    packetize(&Message {
        stream: StreamId(1),
        msg_id: id,
        size,
        params,
        created_at: 0,
        frame_tag: FrameTag::default(),
    })
    .unwrap()
}

fn push_all(q: &mut DropQueue, msgs: Vec<Vec<Packet>>) {
    for p in msgs.into_iter().flatten() {
        assert!(q.enqueue(p, 0).accepted());
    }
}

fn drain_ids(q: &mut DropQueue) -> Vec<u32> {
    let mut ids: Vec<u32> = std::iter::from_fn(|| q.dequeue_with(0, |_| u64::MAX)).map(|p| p.msg_id()).collect();
    ids.dedup();
    ids
}

#[test]
fn new_t0_drops_queued_t1_and_t2() {
    let mut q = DropQueue::new(None);
    push_all(&mut q, vec![msg(2, 900, temporal_params(1)), msg(3, 900, temporal_params(2)), msg(4, 900, temporal_params(0))]);
    assert_eq!(drain_ids(&mut q), vec![4]);
}

#[test]
fn gop_start_q0_drops_previous_gop() {
    let t = [0, 2000, 5000];
    let mut q = DropQueue::new(None);
    let mut msgs = Vec::new();
    let mut id = 0;
    for f in 0..12 {
        for l in 0..3 {
            id += 1;
            msgs.push(msg(id, 1000, spatial_params(l, f % 10 == 0, t)));
        }
    }
    push_all(&mut q, msgs);
    // frames 0..9 are 30 messages; frame 10 starts the next GoP at id 31
    assert_eq!(drain_ids(&mut q), (31..=36).collect::<Vec<_>>());
}

#[test]
fn volumetric_threshold_cycle_reaches_down_the_priorities() {
    // queue one message of each priority the map produces, then a dropper
    let prios: Vec<u8> = (0..4).collect();
    for (frame, survivors) in [(0, vec![0, 1, 2]), (3, vec![])] {
        let mut q = DropQueue::new(None);
        let queued: Vec<Vec<Packet>> = prios
            .iter()
            .enumerate()
            .map(|(i, &p)| msg(i as u32 + 1, 500, MsgParams { msg_priority: p, ..Default::default() }))
            .collect();
        push_all(&mut q, queued);
        let d = volumetric_params(frame, 0, 0, true);
        assert_eq!(d.priority_threshold, if frame == 0 { 3 } else { 0 });
        push_all(&mut q, vec![msg(10, 500, d)]);
        let mut want: Vec<u32> = survivors.iter().map(|&p| p as u32 + 1).collect();
        want.push(10);
        assert_eq!(drain_ids(&mut q), want, "frame {frame}");
    }
    // occluded top layers are the only priority-3 messages
    assert_eq!(volumetric_priority(false, 4), 3);
    assert!((0..5).all(|l| volumetric_priority(true, l) < 3));
}

#[test]
fn marked_message_gives_its_opportunity_to_the_next() {
    let trace = BandwidthTrace::constant(12_000, 1000).unwrap();
    let mut link = CellularLink::new(Box::new(RouterQueue::new(375_000, 12_000)), &trace);
    let slow = MsgParams { bitrate_threshold_kbps: 50_000, ..Default::default() };
    for p in msg(1, 3000, slow).into_iter().chain(msg(2, 100, MsgParams::default())) {
        link.arrive(p, 0);
    }
    let (sent, next) = link.serve(1000);
    assert_eq!(sent.map(|p| p.msg_id()), Some(2));
    assert_eq!(next, None);
    assert_eq!(link.queue.take_drops().len(), 3);

    // only a marked message: the opportunity goes idle
    for p in msg(3, 100, slow) {
        link.arrive(p, 1500);
    }
    assert_eq!(link.serve(2000), (None, None));
}

#[test]
fn burst_opportunities_serve_in_fifo_order() {
    let trace = BandwidthTrace::parse("3\n3\n3\n10").unwrap();
    let mut link = CellularLink::new(Box::new(DropTailQueue::new(375_000)), &trace);
    for id in 1..=3 {
        for p in msg(id, 100, MsgParams::default()) {
            link.arrive(p, 0);
        }
    }
    let mut out = Vec::new();
    let mut at = Some(3000);
    while let Some(t) = at {
        let (p, next) = link.serve(t);
        out.push((t, p.unwrap().msg_id()));
        at = next;
    }
    assert_eq!(out, vec![(3000, 1), (3000, 2), (3000, 3)]);
}

fn bulk_scenario(duration_ms: u64) -> ScenarioConfig {
    ScenarioConfig {
        name: "bulk".into(),
        scheme: Scheme::Droptail,
        flows: vec![FlowConfig::Bulk(BulkConfig::default())],
        duration_ms,
        drain_ms: 0,
        ..Default::default()
    }
}

#[test]
fn bandwidth_filter_converges_within_twenty_rtts() {
    // 20 RTTs of 60 ms
    let m = run(&bulk_scenario(1200)).unwrap();
    let bw = m.flows[0].cc.unwrap().estimated_bw_kbps as f64;
    assert!((bw - 12_000.0).abs() <= 600.0, "{bw}");
}

#[test]
fn bulk_alone_fills_the_link() {
    let m = run(&bulk_scenario(10_000)).unwrap();
    assert!(m.flows[0].util_pct >= 90.0, "{}", m.flows[0].util_pct);
}

#[test]
fn media_flow_holds_a_share_against_bulk_on_a_legacy_switch() {
    let cfg = ScenarioConfig {
        scheme: Scheme::Octobbr,
        topology: Topology::LegacyOnly,
        flows: vec![FlowConfig::Bulk(BulkConfig::default()), FlowConfig::Spatial(SpatialConfig::default())],
        duration_ms: 30_000,
        ..Default::default()
    };
    let m = run(&cfg).unwrap();
    let end = m.duration_us;
    let (_, a) = m.served(Some(0), 0, end);
    let (_, b) = m.served(Some(1), 0, end);
    let share = 100.0 * a as f64 / (a + b) as f64;
    // The media source targets its own estimate, so its samples are
    // app-limited and the max filter only creeps upward. It keeps a steady
    // minority share rather than an even split.
    assert!((65.0..=90.0).contains(&share), "bulk share {share:.1}%");
    let media_kbps = b as f64 * 8.0 / (end as f64 / 1000.0);
    assert!(media_kbps >= 1_000.0, "media {media_kbps:.0} kbps");
}

#[test]
fn stale_oracle_overshoots_a_step_down_by_the_rate_gap() {
    // 12 Mbit/s for 1 s, then 2 Mbit/s: one packet every 6 ms
    let mut ops: Vec<u64> = (1..=1000).collect();
    ops.extend((1..=166).map(|i| 1000 + 6 * i));
    let trace = BandwidthTrace::new(ops).unwrap();
    let cfg = ScenarioConfig {
        scheme: Scheme::StaleOracle,
        link: octopus::config::LinkConfig { trace: TraceSpec("unused".into()), ..Default::default() },
        flows: vec![FlowConfig::Oracle(OracleConfig::default())],
        duration_ms: 1010,
        ..Default::default()
    };
    let m = run_with_trace(&cfg, Some(trace));
    let at = |t: u64| m.occupancy.iter().take_while(|(x, _)| *x <= t).last().map_or(0, |o| o.1);
    assert_eq!(at(999 * MICROS_PER_MS), 0);
    // window [1000, 1005) sends five packets sized on the old rate while
    // the link serves none of them before 1006
    assert_eq!(at(1005 * MICROS_PER_MS), 5 * 1500);
}
