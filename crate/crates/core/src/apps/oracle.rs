use crate::trace::BandwidthTrace;
use crate::types::{Micros, MICROS_PER_MS};

/// Sender that knows the link's future capacity.
///
/// At the start of each window it sends, as one burst, exactly the number of
/// packets the link can serve in a window. With `stale_ms > 0` it uses the
/// window that began `stale_ms` earlier instead.
#[derive(Debug, Clone)]
pub struct OracleSchedule {
    trace: BandwidthTrace,
    window: Micros,
    stale: Micros,
    next: u64,
}

impl OracleSchedule {
    pub fn new(trace: BandwidthTrace, window_ms: u64, stale_ms: u64) -> Self {
        OracleSchedule {
            trace,
            window: window_ms * MICROS_PER_MS,
            stale: stale_ms * MICROS_PER_MS,
            next: 0,
        }
    }

    pub fn next_due(&self) -> Micros {
        self.next * self.window
    }

    /// Packets to send in window `k`.
    pub fn count_for(&self, k: u64) -> u64 {
        let start = k * self.window;
        let from = start.saturating_sub(self.stale);
        let to = (start + self.window).saturating_sub(self.stale);
        self.trace.count_in(from, to)
    }

    /// Packet count for the window now due; advances to the next window.
    pub fn take(&mut self) -> u64 {
        let n = self.count_for(self.next);
        self.next += 1;
        n
    }
}
