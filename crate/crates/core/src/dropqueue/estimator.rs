use std::collections::VecDeque;

use crate::types::Micros;

/// Trailing window for the dequeue-rate estimate.
pub const BW_WINDOW_US: Micros = 50_000;
/// Below this much busy time in the window the warm-up default is reported.
pub const MIN_BUSY_US: Micros = 5_000;

/// Dequeue-rate estimator over a sliding window that ignores time the queue
/// spent empty.
#[derive(Debug, Clone)]
pub struct BwEstimator {
    window: Micros,
    default_kbps: u64,
    departures: VecDeque<(Micros, u64)>,
    /// Closed busy intervals `[start, end)`.
    busy: VecDeque<(Micros, Micros)>,
    busy_since: Option<Micros>,
}

impl BwEstimator {
    pub fn new(default_kbps: u64) -> Self {
        Self::with_window(BW_WINDOW_US, default_kbps)
    }

    pub fn with_window(window: Micros, default_kbps: u64) -> Self {
        BwEstimator {
            window,
            default_kbps,
            departures: VecDeque::new(),
            busy: VecDeque::new(),
            busy_since: None,
        }
    }

    pub fn default_kbps(&self) -> u64 {
        self.default_kbps
    }

    /// The queue went from empty to non-empty.
    pub fn on_busy_start(&mut self, now: Micros) {
        if self.busy_since.is_none() {
            self.busy_since = Some(now);
        }
    }

    /// The queue drained.
    pub fn on_busy_end(&mut self, now: Micros) {
        if let Some(start) = self.busy_since.take() {
            if now > start {
                self.busy.push_back((start, now));
            }
        }
    }

    pub fn on_departure(&mut self, now: Micros, bytes: u64) {
        self.departures.push_back((now, bytes));
    }

    fn prune(&mut self, now: Micros) {
        let Some(from) = now.checked_sub(self.window) else {
            return;
        };
        while self.departures.front().is_some_and(|&(t, _)| t <= from) {
            self.departures.pop_front();
        }
        while self.busy.front().is_some_and(|&(_, end)| end <= from) {
            self.busy.pop_front();
        }
    }

    /// Busy microseconds inside `(now - window, now]`.
    pub fn busy_time(&self, now: Micros) -> Micros {
        let from = now.saturating_sub(self.window);
        let overlap = |s: Micros, e: Micros| e.min(now).saturating_sub(s.max(from));
        let closed: Micros = self.busy.iter().map(|&(s, e)| overlap(s, e)).sum();
        closed + self.busy_since.map_or(0, |s| overlap(s, now))
    }

    pub fn estimate_kbps(&mut self, now: Micros) -> u64 {
        self.prune(now);
        let busy = self.busy_time(now);
        if busy < MIN_BUSY_US {
            return self.default_kbps;
        }
        let from = now.checked_sub(self.window);
        let bytes: u64 = self
            .departures
            .iter()
            .filter(|&&(t, _)| from.is_none_or(|f| t > f))
            .map(|&(_, b)| b)
            .sum();
        // bits per millisecond == kbps
        bytes * 8 * 1000 / busy
    }
}
