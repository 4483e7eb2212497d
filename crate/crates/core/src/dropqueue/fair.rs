use std::collections::{BTreeMap, VecDeque};

use crate::types::{Micros, StreamId};

/// Sliding window over which per-stream arrival rates are measured.
pub const ARRIVAL_WINDOW_US: Micros = 100_000;

/// Max-min fair (water-filling) allocation of `total` among `demands`.
pub fn fair_shares(demands: &[f64], total: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..demands.len()).collect();
    order.sort_by(|&a, &b| demands[a].total_cmp(&demands[b]));
    let mut shares = vec![0.0; demands.len()];
    let mut remaining = total.max(0.0);
    let mut left = demands.len();
    for &i in &order {
        let level = remaining / left as f64;
        let d = demands[i].max(0.0);
        if d <= level {
            shares[i] = d;
            remaining -= d;
            left -= 1;
        } else {
            // everyone still unsatisfied is capped at the same level
            for &j in order.iter().rev().take(left) {
                shares[j] = level;
            }
            break;
        }
    }
    shares
}

/// Bandwidth stream `i` could obtain if it asked for more: its max-min share
/// when its own demand is treated as unbounded.
pub fn available_share(demands: &[f64], total: f64, i: usize) -> f64 {
    let mut d = demands.to_vec();
    d[i] = f64::INFINITY;
    fair_shares(&d, total)[i]
}

/// Per-stream arrival-rate meter over a sliding window.
#[derive(Debug, Clone)]
pub struct ArrivalMeter {
    window: Micros,
    arrivals: BTreeMap<StreamId, (VecDeque<(Micros, u64)>, u64)>,
}

impl Default for ArrivalMeter {
    fn default() -> Self {
        Self::new(ARRIVAL_WINDOW_US)
    }
}

impl ArrivalMeter {
    pub fn new(window: Micros) -> Self {
        ArrivalMeter {
            window,
            arrivals: BTreeMap::new(),
        }
    }

    pub fn record(&mut self, stream: StreamId, now: Micros, bytes: u64) {
        let (log, sum) = self.arrivals.entry(stream).or_default();
        log.push_back((now, bytes));
        *sum += bytes;
    }

    /// Streams with arrivals inside the window, with their rate in kbps.
    pub fn rates_kbps(&mut self, now: Micros) -> Vec<(StreamId, f64)> {
        let from = now.checked_sub(self.window);
        let window_ms = self.window as f64 / 1000.0;
        let mut out = Vec::new();
        for (&sid, (log, sum)) in self.arrivals.iter_mut() {
            while log.front().is_some_and(|&(t, _)| from.is_some_and(|f| t <= f)) {
                let (_, b) = log.pop_front().unwrap();
                *sum -= b;
            }
            if *sum > 0 {
                out.push((sid, *sum as f64 * 8.0 / window_ms));
            }
        }
        out
    }
}
