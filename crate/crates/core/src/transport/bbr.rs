//! BBR-lite congestion control.
//!
//! A compact BBRv1: windowed-max bottleneck bandwidth over 10 rounds,
//! windowed-min RTT over 10 s, and the STARTUP / DRAIN / PROBE_BW /
//! PROBE_RTT state machine. Loss does not modulate the window.

use std::collections::VecDeque;

use crate::types::{Micros, MICROS_PER_MS, MICROS_PER_SEC, MTU};

const HIGH_GAIN: f64 = 2.89;
const DRAIN_GAIN: f64 = 1.0 / HIGH_GAIN;
const CWND_GAIN: f64 = 2.0;
const PACING_GAIN_CYCLE: [f64; 8] = [1.25, 0.75, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
const BW_FILTER_ROUNDS: u64 = 10;
const MIN_RTT_WINDOW: Micros = 10 * MICROS_PER_SEC;
const PROBE_RTT_DURATION: Micros = 200 * MICROS_PER_MS;
const FULL_BW_GROWTH: f64 = 1.25;
const FULL_BW_ROUNDS: u32 = 3;
const MIN_CWND_PACKETS: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BbrMode {
    Startup,
    Drain,
    ProbeBw,
    ProbeRtt,
}

#[derive(Debug, Clone, Copy)]
pub struct BbrConfig {
    /// RTT assumed before the first sample, for the initial pacing rate.
    pub initial_rtt: Micros,
    pub initial_cwnd_packets: u64,
}

impl Default for BbrConfig {
    fn default() -> Self {
        BbrConfig {
            initial_rtt: 100 * MICROS_PER_MS,
            initial_cwnd_packets: 10,
        }
    }
}

/// One delivery-rate sample produced by an ack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSample {
    /// Bytes per second.
    pub delivery_rate: f64,
    pub rtt: Micros,
    /// `delivered` counter when the acked packet was sent.
    pub prior_delivered: u64,
    pub is_app_limited: bool,
}

/// Sliding maximum keyed by round number.
#[derive(Debug, Clone, Default)]
pub struct WindowedMax {
    window: u64,
    samples: VecDeque<(u64, f64)>,
}

impl WindowedMax {
    pub fn new(window: u64) -> Self {
        WindowedMax {
            window,
            samples: VecDeque::new(),
        }
    }

    pub fn update(&mut self, round: u64, value: f64) {
        while self.samples.back().is_some_and(|&(_, v)| v <= value) {
            self.samples.pop_back();
        }
        self.samples.push_back((round, value));
        self.expire(round);
    }

    pub fn expire(&mut self, round: u64) {
        while self
            .samples
            .front()
            .is_some_and(|&(r, _)| r + self.window <= round)
        {
            self.samples.pop_front();
        }
    }

    pub fn get(&self) -> Option<f64> {
        self.samples.front().map(|&(_, v)| v)
    }
}

#[derive(Debug, Clone)]
pub struct Bbr {
    cfg: BbrConfig,
    mode: BbrMode,
    pacing_gain: f64,
    max_bw: WindowedMax,
    min_rtt: Option<Micros>,
    min_rtt_stamp: Micros,
    round_count: u64,
    next_round_delivered: u64,
    round_start: bool,
    full_bw: f64,
    full_bw_count: u32,
    filled_pipe: bool,
    cycle_index: usize,
    cycle_stamp: Micros,
    probe_rtt_done_stamp: Option<Micros>,
    probe_rtt_round_done: bool,
    pacing_rate: f64,
    cwnd: u64,
}

impl Bbr {
    pub fn new(cfg: BbrConfig) -> Self {
        let init_bw = (cfg.initial_cwnd_packets * MTU as u64) as f64 * MICROS_PER_SEC as f64
            / cfg.initial_rtt as f64;
        Bbr {
            cfg,
            mode: BbrMode::Startup,
            pacing_gain: HIGH_GAIN,
            max_bw: WindowedMax::new(BW_FILTER_ROUNDS),
            min_rtt: None,
            min_rtt_stamp: 0,
            round_count: 0,
            next_round_delivered: 0,
            round_start: false,
            full_bw: 0.0,
            full_bw_count: 0,
            filled_pipe: false,
            cycle_index: 0,
            cycle_stamp: 0,
            probe_rtt_done_stamp: None,
            probe_rtt_round_done: false,
            pacing_rate: HIGH_GAIN * init_bw,
            cwnd: cfg.initial_cwnd_packets * MTU as u64,
        }
    }

    pub fn mode(&self) -> BbrMode {
        self.mode
    }

    /// Bytes per second.
    pub fn pacing_rate(&self) -> f64 {
        self.pacing_rate
    }

    pub fn pacing_gain(&self) -> f64 {
        self.pacing_gain
    }

    pub fn cwnd(&self) -> u64 {
        self.cwnd
    }

    pub fn min_rtt(&self) -> Option<Micros> {
        self.min_rtt
    }

    /// Bottleneck bandwidth estimate in bytes per second.
    pub fn max_bw(&self) -> Option<f64> {
        self.max_bw.get()
    }

    pub fn round_count(&self) -> u64 {
        self.round_count
    }

    pub fn filled_pipe(&self) -> bool {
        self.filled_pipe
    }

    /// Bandwidth the controller believes is available, in kbps.
    pub fn estimated_bw_kbps(&self) -> u64 {
        let bw = self.max_bw.get().unwrap_or(self.pacing_rate / HIGH_GAIN);
        (bw * 8.0 / 1000.0) as u64
    }

    fn bdp(&self, gain: f64) -> Option<u64> {
        let bw = self.max_bw.get()?;
        let rtt = self.min_rtt?;
        Some((gain * bw * rtt as f64 / MICROS_PER_SEC as f64) as u64)
    }

    /// Process one ack's rate sample.
    ///
    /// `delivered` is the sender's cumulative delivered-bytes counter after
    /// the ack; `inflight` is bytes in flight after removing acked and lost
    /// packets.
    pub fn on_ack(&mut self, now: Micros, rs: Option<RateSample>, delivered: u64, inflight: u64) {
        self.round_start = false;
        if let Some(rs) = rs {
            if rs.prior_delivered >= self.next_round_delivered {
                self.next_round_delivered = delivered;
                self.round_count += 1;
                self.round_start = true;
            }
            self.max_bw.expire(self.round_count);
            let useful = !rs.is_app_limited || self.max_bw.get().is_none_or(|m| rs.delivery_rate >= m);
            if rs.delivery_rate > 0.0 && useful {
                self.max_bw.update(self.round_count, rs.delivery_rate);
            }
            self.update_min_rtt(now, rs.rtt);
        }
        self.check_cycle_phase(now, inflight);
        if let Some(rs) = rs {
            self.check_full_pipe(rs.is_app_limited);
        }
        self.check_drain(now, inflight);
        self.check_probe_rtt(now, inflight);
        self.set_pacing_rate();
        self.set_cwnd();
    }

    fn update_min_rtt(&mut self, now: Micros, rtt: Micros) {
        let expired = now > self.min_rtt_stamp + MIN_RTT_WINDOW;
        if self.min_rtt.is_none_or(|m| rtt <= m) || expired {
            self.min_rtt = Some(rtt);
            self.min_rtt_stamp = now;
        }
        if expired && self.mode != BbrMode::ProbeRtt && self.min_rtt.is_some() {
            self.mode = BbrMode::ProbeRtt;
            self.pacing_gain = 1.0;
            self.probe_rtt_done_stamp = None;
        }
    }

    fn check_full_pipe(&mut self, app_limited: bool) {
        if self.filled_pipe || !self.round_start || app_limited {
            return;
        }
        let bw = self.max_bw.get().unwrap_or(0.0);
        if bw >= self.full_bw * FULL_BW_GROWTH {
            self.full_bw = bw;
            self.full_bw_count = 0;
            return;
        }
        self.full_bw_count += 1;
        if self.full_bw_count >= FULL_BW_ROUNDS {
            self.filled_pipe = true;
        }
    }

    fn check_drain(&mut self, now: Micros, inflight: u64) {
        if self.mode == BbrMode::Startup && self.filled_pipe {
            self.mode = BbrMode::Drain;
            self.pacing_gain = DRAIN_GAIN;
        }
        if self.mode == BbrMode::Drain && self.bdp(1.0).is_some_and(|bdp| inflight <= bdp) {
            self.enter_probe_bw(now);
        }
    }

    fn enter_probe_bw(&mut self, now: Micros) {
        self.mode = BbrMode::ProbeBw;
        // start anywhere but the draining phase
        self.cycle_index = (self.round_count as usize % 7 + 2) % PACING_GAIN_CYCLE.len();
        self.cycle_stamp = now;
        self.pacing_gain = PACING_GAIN_CYCLE[self.cycle_index];
    }

    fn check_cycle_phase(&mut self, now: Micros, inflight: u64) {
        if self.mode != BbrMode::ProbeBw {
            return;
        }
        let Some(min_rtt) = self.min_rtt else { return };
        let elapsed = now.saturating_sub(self.cycle_stamp) > min_rtt;
        let advance = match self.pacing_gain {
            g if g > 1.0 => elapsed && self.bdp(g).is_none_or(|t| inflight >= t),
            g if g < 1.0 => elapsed || self.bdp(1.0).is_some_and(|t| inflight <= t),
            _ => elapsed,
        };
        if advance {
            self.cycle_index = (self.cycle_index + 1) % PACING_GAIN_CYCLE.len();
            self.cycle_stamp = now;
            self.pacing_gain = PACING_GAIN_CYCLE[self.cycle_index];
        }
    }

    fn check_probe_rtt(&mut self, now: Micros, inflight: u64) {
        if self.mode != BbrMode::ProbeRtt {
            return;
        }
        match self.probe_rtt_done_stamp {
            None if inflight <= MIN_CWND_PACKETS * MTU as u64 => {
                self.probe_rtt_done_stamp = Some(now + PROBE_RTT_DURATION);
                self.probe_rtt_round_done = false;
                self.next_round_delivered = 0;
            }
            Some(done) => {
                if self.round_start {
                    self.probe_rtt_round_done = true;
                }
                if self.probe_rtt_round_done && now >= done {
                    self.min_rtt_stamp = now;
                    if self.filled_pipe {
                        self.enter_probe_bw(now);
                    } else {
                        self.mode = BbrMode::Startup;
                        self.pacing_gain = HIGH_GAIN;
                    }
                }
            }
            None => {}
        }
    }

    fn set_pacing_rate(&mut self) {
        if let Some(bw) = self.max_bw.get() {
            let rate = self.pacing_gain * bw;
            if self.filled_pipe || rate > self.pacing_rate {
                self.pacing_rate = rate;
            }
        }
    }

    fn set_cwnd(&mut self) {
        let floor = MIN_CWND_PACKETS * MTU as u64;
        if let Some(target) = self.bdp(CWND_GAIN) {
            self.cwnd = target.max(floor);
        }
        if self.mode == BbrMode::ProbeRtt {
            self.cwnd = self.cwnd.min(floor);
        }
    }

    /// Initial settings, for callers that inspect state before any ack.
    pub fn config(&self) -> BbrConfig {
        self.cfg
    }
}
