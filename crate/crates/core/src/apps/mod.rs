//! Traffic sources and the receiver-side decodability model.
//!
//! Each media source is a synthetic codec: it decides message sizes and
//! dropping parameters frame by frame, and names the reference structure
//! used to judge which delivered frames can actually be decoded.

mod decode;
mod oracle;
mod spatial;
mod temporal;
mod volumetric;

pub use decode::{decodable_units, frame_records, DecodeModel, Unit};
pub use oracle::OracleSchedule;
pub use spatial::{layer_increments, spatial_params, SpatialSource};
pub use temporal::{temporal_layer, temporal_params, TemporalSource};
pub use volumetric::{volumetric_params, volumetric_priority, VolumetricSource};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

use crate::transport::CcStats;
use crate::types::{FrameTag, Micros, MsgParams, MICROS_PER_SEC};

/// A message the application wants sent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MessageSpec {
    pub size: u32,
    pub params: MsgParams,
    pub tag: FrameTag,
}

pub trait MediaSource {
    /// When the next frame is generated.
    fn next_due(&self) -> Micros;
    /// Produce the frame due at `now`. `cc` is the transport's current view.
    fn generate(&mut self, now: Micros, cc: &CcStats) -> Vec<MessageSpec>;
    fn model(&self) -> DecodeModel;
}

pub fn frame_time(frame: u32, fps: u32) -> Micros {
    frame as u64 * MICROS_PER_SEC / fps as u64
}

/// Mean-one multiplicative size noise.
#[derive(Debug, Clone)]
pub(crate) struct Jitter(Option<LogNormal<f64>>);

impl Jitter {
    pub fn new(sigma: f64) -> Self {
        Jitter((sigma > 0.0).then(|| LogNormal::new(-sigma * sigma / 2.0, sigma).expect("sigma > 0")))
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        self.0.as_ref().map_or(1.0, |d| d.sample(rng))
    }
}

/// Independent generator stream for flow `flow` under `seed`.
pub fn flow_rng(seed: u64, flow: usize) -> ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(flow as u64 + 1);
    rng
}

pub(crate) fn bytes_of(x: f64) -> u32 {
    x.round().clamp(1.0, u32::MAX as f64) as u32
}
