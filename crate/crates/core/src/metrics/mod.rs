//! Per-frame accounting and run-level statistics.

mod output;

pub use output::{
    write_atomically, write_frames, write_queue, write_summary, SummaryRow, FRAMES_HEADER,
    QUEUE_HEADER, SUMMARY_HEADER,
};

use crate::types::{Micros, MICROS_PER_MS, MICROS_PER_SEC};

/// Fate of one application frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameRecord {
    pub frame: u32,
    /// Submission time of the frame's first message.
    pub send_us: Micros,
    /// Arrival of the last message needed for the decoded level.
    pub deliver_us: Option<Micros>,
    /// Highest quality level decodable; `None` when the frame is lost.
    pub level: Option<u8>,
    pub bytes: u64,
}

impl FrameRecord {
    pub fn decodable(&self) -> bool {
        self.level.is_some()
    }
}

/// Nearest-rank percentile of an ascending slice.
pub fn percentile(sorted: &[Micros], p: f64) -> Option<Micros> {
    if sorted.is_empty() {
        return None;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stats {
    pub count: usize,
    pub p50: Micros,
    pub p99: Micros,
    pub max: Micros,
}

impl Stats {
    pub fn of(mut samples: Vec<Micros>) -> Option<Stats> {
        samples.sort_unstable();
        Some(Stats {
            count: samples.len(),
            p50: percentile(&samples, 50.0)?,
            p99: percentile(&samples, 99.0)?,
            max: *samples.last()?,
        })
    }
}

/// Age of information sampled just before each frame delivery.
///
/// Before a delivery at `t`, the age is measured from the newest send time
/// among frames delivered strictly earlier; a delivery with nothing before
/// it is measured from its own send time.
pub fn aoi_series(records: &[FrameRecord]) -> Vec<Micros> {
    let mut delivered: Vec<(Micros, Micros)> = records
        .iter()
        .filter_map(|r| r.deliver_us.map(|d| (d, r.send_us)))
        .collect();
    delivered.sort_unstable();
    let mut out = Vec::with_capacity(delivered.len());
    let mut freshest: Option<Micros> = None;
    let mut i = 0;
    while i < delivered.len() {
        let t = delivered[i].0;
        let mut j = i;
        while j < delivered.len() && delivered[j].0 == t {
            let (_, sent) = delivered[j];
            out.push(t - freshest.unwrap_or(sent));
            j += 1;
        }
        let group_max = delivered[i..j].iter().map(|&(_, s)| s).max();
        freshest = freshest.max(group_max);
        i = j;
    }
    out
}

/// Delivery minus send time of every decodable frame.
pub fn latencies(records: &[FrameRecord]) -> Vec<Micros> {
    records
        .iter()
        .filter_map(|r| r.deliver_us.map(|d| d - r.send_us))
        .collect()
}

/// Mean per-frame quality over every generated frame.
///
/// Undecodable frames inherit the score of the last decodable frame before
/// them, decayed exponentially in the send-time gap; with no such frame they
/// score zero.
pub fn quality_score(records: &[FrameRecord], table: &[f64], decay_per_sec: f64) -> Option<f64> {
    if records.is_empty() {
        return None;
    }
    let mut order: Vec<&FrameRecord> = records.iter().collect();
    order.sort_by_key(|r| r.frame);
    let mut last: Option<(f64, Micros)> = None;
    let mut sum = 0.0;
    for r in order {
        let score = match r.level {
            Some(q) => {
                let s = table[(q as usize).min(table.len() - 1)];
                last = Some((s, r.send_us));
                s
            }
            None => last.map_or(0.0, |(s, at)| {
                let gap = r.send_us.saturating_sub(at) as f64 / MICROS_PER_SEC as f64;
                s * (-decay_per_sec * gap).exp()
            }),
        };
        sum += score;
    }
    Some(sum / records.len() as f64)
}

/// Queue residence of one packet leaving the buffer (sent or dropped).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Residence {
    pub at: Micros,
    pub delay: Micros,
}

pub const QUEUE_BUCKET_US: Micros = 100 * MICROS_PER_MS;

/// Largest residence among packets leaving in each 100 ms bucket, as
/// (bucket start, delay). Buckets without departures are omitted.
pub fn queue_series(samples: &[Residence]) -> Vec<(Micros, Micros)> {
    let mut out: Vec<(Micros, Micros)> = Vec::new();
    let mut sorted = samples.to_vec();
    sorted.sort_by_key(|r| r.at);
    for r in sorted {
        let bucket = r.at / QUEUE_BUCKET_US * QUEUE_BUCKET_US;
        match out.last_mut() {
            Some((b, d)) if *b == bucket => *d = (*d).max(r.delay),
            _ => out.push((bucket, r.delay)),
        }
    }
    out
}

pub fn us_to_ms(us: Micros) -> f64 {
    us as f64 / MICROS_PER_MS as f64
}
