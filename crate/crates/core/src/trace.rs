//! Mahimahi-style bandwidth traces: one line per millisecond timestamp, each
//! granting one MTU-sized delivery opportunity. Traces loop with their period.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal};

use crate::types::{Micros, MICROS_PER_MS, MTU};

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("line {line}: expected a non-negative integer, got {text:?}")]
    NotNumeric { line: usize, text: String },
    #[error("line {line}: timestamp {value} is smaller than the previous {prev}")]
    Decreasing { line: usize, value: u64, prev: u64 },
    #[error("trace has no delivery opportunities")]
    Empty,
    #[error("trace period must be positive (last timestamp is 0)")]
    ZeroPeriod,
    #[error("rate must be positive")]
    ZeroRate,
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BandwidthTrace {
    /// Millisecond timestamps, non-decreasing.
    opportunities: Arc<[u64]>,
    period_ms: u64,
}

impl BandwidthTrace {
    pub fn new(opportunities: Vec<u64>) -> Result<Self, TraceError> {
        if let Some(w) = opportunities.windows(2).position(|w| w[1] < w[0]) {
            return Err(TraceError::Decreasing {
                line: w + 2,
                value: opportunities[w + 1],
                prev: opportunities[w],
            });
        }
        let period_ms = *opportunities.last().ok_or(TraceError::Empty)?;
        if period_ms == 0 {
            return Err(TraceError::ZeroPeriod);
        }
        Ok(BandwidthTrace {
            opportunities: opportunities.into(),
            period_ms,
        })
    }

    pub fn parse(text: &str) -> Result<Self, TraceError> {
        let mut out = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let value: u64 = line.parse().map_err(|_| TraceError::NotNumeric {
                line: i + 1,
                text: line.to_string(),
            })?;
            if let Some(&prev) = out.last() {
                if value < prev {
                    return Err(TraceError::Decreasing {
                        line: i + 1,
                        value,
                        prev,
                    });
                }
            }
            out.push(value);
        }
        Self::new(out)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TraceError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| TraceError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        for t in self.opportunities.iter() {
            writeln!(w, "{t}")?;
        }
        Ok(())
    }

    /// Evenly spaced opportunities for a fixed rate over `period_ms`.
    pub fn constant(rate_kbps: u64, period_ms: u64) -> Result<Self, TraceError> {
        if rate_kbps == 0 || period_ms == 0 {
            return Err(TraceError::ZeroRate);
        }
        // kbps == bits per ms
        let count = (rate_kbps * period_ms + bits_per_opportunity() / 2) / bits_per_opportunity();
        if count == 0 {
            return Err(TraceError::ZeroRate);
        }
        let opportunities = (1..=count).map(|i| i * period_ms / count).collect();
        Self::new(opportunities)
    }

    /// Cellular-like trace: piecewise-constant rates with lognormal spread
    /// around `mean_kbps` and occasional outages.
    pub fn synthetic_cellular(seed: u64, mean_kbps: f64, duration_ms: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hold = Exp::new(1.0 / 350.0).unwrap();
        let spread = LogNormal::new(0.0, 0.55).unwrap();
        let mut out = Vec::new();
        let mut t = 0.0f64;
        let end = duration_ms as f64;
        while t < end {
            let seg = (hold.sample(&mut rng) as f64).clamp(40.0, 2000.0);
            let seg_end = (t + seg).min(end);
            let rate = if rng.random_bool(0.12) {
                // outage or deep fade
                mean_kbps * rng.random_range(0.0..0.08)
            } else {
                (mean_kbps * spread.sample(&mut rng) * 0.86).clamp(mean_kbps * 0.15, mean_kbps * 3.0)
            };
            if rate < 1.0 {
                t = seg_end;
                continue;
            }
            let gap = bits_per_opportunity() as f64 / rate;
            let mut next = t + rng.random_range(0.0..gap);
            while next < seg_end {
                out.push(next.floor() as u64 + 1);
                next += gap;
            }
            t = seg_end;
        }
        if out.last().copied() != Some(duration_ms) {
            out.push(duration_ms);
        }
        Self::new(out).expect("generator emits sorted positive timestamps")
    }

    pub fn opportunities(&self) -> &[u64] {
        &self.opportunities
    }

    pub fn period_ms(&self) -> u64 {
        self.period_ms
    }

    pub fn len(&self) -> usize {
        self.opportunities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.opportunities.is_empty()
    }

    pub fn mean_kbps(&self) -> f64 {
        self.opportunities.len() as f64 * bits_per_opportunity() as f64 / self.period_ms as f64
    }

    /// Opportunities with timestamp in `[from, to)`, accounting for looping.
    pub fn count_in(&self, from: Micros, to: Micros) -> u64 {
        if to <= from {
            return 0;
        }
        self.count_before(to) - self.count_before(from)
    }

    /// Opportunities strictly before `t`.
    fn count_before(&self, t: Micros) -> u64 {
        let period_us = self.period_ms * MICROS_PER_MS;
        let below = |x: Micros| {
            self.opportunities
                .partition_point(|&ms| ms * MICROS_PER_MS < x) as u64
        };
        let laps = t / period_us;
        let rem = t % period_us;
        if laps == 0 {
            return below(rem);
        }
        // the previous lap may still own an opportunity at ms == period
        (laps - 1) * self.opportunities.len() as u64 + below(rem + period_us) + below(rem)
    }

    pub fn cursor(&self) -> OpportunityCursor {
        OpportunityCursor {
            trace: self.clone(),
            index: 0,
            lap: 0,
        }
    }
}

pub fn bits_per_opportunity() -> u64 {
    MTU as u64 * 8
}

/// Walks opportunity times in order, looping the trace forever.
#[derive(Debug, Clone)]
pub struct OpportunityCursor {
    trace: BandwidthTrace,
    index: usize,
    lap: u64,
}

impl OpportunityCursor {
    pub fn peek(&self) -> Micros {
        (self.lap * self.trace.period_ms + self.trace.opportunities[self.index]) * MICROS_PER_MS
    }

    pub fn advance(&mut self) {
        self.index += 1;
        if self.index == self.trace.opportunities.len() {
            self.index = 0;
            self.lap += 1;
        }
    }

    /// Skip opportunities earlier than `t`, returning the first at or after it.
    pub fn seek(&mut self, t: Micros) -> Micros {
        let period_us = self.trace.period_ms * MICROS_PER_MS;
        let target_lap = t / period_us;
        if target_lap > self.lap + 1 {
            self.lap = target_lap - 1;
            self.index = 0;
        }
        while self.peek() < t {
            self.advance();
        }
        self.peek()
    }
}
