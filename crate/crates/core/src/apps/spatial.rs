use rand_chacha::ChaCha8Rng;

use super::{bytes_of, frame_time, DecodeModel, Jitter, MediaSource, MessageSpec};
use crate::config::SpatialConfig;
use crate::transport::CcStats;
use crate::types::{FrameTag, Micros, MsgParams};

/// Per-frame layer sizes whose running sums hit `ratios` of `b_kbps`.
pub fn layer_increments(b_kbps: u64, fps: u32, ratios: [f64; 3]) -> [u32; 3] {
    let frame_bytes = b_kbps as f64 * 125.0 / fps as f64;
    let cum = ratios.map(|r| (frame_bytes * r).round() as u32);
    [cum[0], cum[1] - cum[0], cum[2] - cum[1]]
}

/// Parameters of quality layer `layer`. `thresholds` are the cumulative
/// targets in kbps; the first message of a GoP is the dropper.
pub fn spatial_params(layer: u8, gop_start: bool, thresholds: [u32; 3]) -> MsgParams {
    let dropper = gop_start && layer == 0;
    MsgParams {
        msg_priority: layer,
        drop_flag: dropper,
        priority_threshold: 0,
        bitrate_threshold_kbps: if layer == 0 { 0 } else { thresholds[layer as usize] },
    }
}

/// Quality-scalable video re-targeted to the bandwidth estimate every GoP.
#[derive(Debug)]
pub struct SpatialSource {
    cfg: SpatialConfig,
    rng: ChaCha8Rng,
    jitter: Jitter,
    frame: u32,
    increments: [u32; 3],
    thresholds: [u32; 3],
    key_weight: f64,
    other_weight: f64,
}

impl SpatialSource {
    pub fn new(cfg: SpatialConfig, rng: ChaCha8Rng) -> Self {
        // keyframe is keyframe_mult times the others; the GoP mean stays one
        let g = cfg.gop as f64;
        let norm = g / (cfg.keyframe_mult + g - 1.0);
        SpatialSource {
            jitter: Jitter::new(cfg.jitter_sigma),
            key_weight: cfg.keyframe_mult * norm,
            other_weight: norm,
            cfg,
            rng,
            frame: 0,
            increments: [0; 3],
            thresholds: [0; 3],
        }
    }

    /// Targets chosen at the most recent GoP start.
    pub fn thresholds(&self) -> [u32; 3] {
        self.thresholds
    }

    fn retarget(&mut self, b_kbps: u64) {
        let b = b_kbps.max(1);
        self.increments = layer_increments(b, self.cfg.fps, self.cfg.ratios);
        self.thresholds = self.cfg.ratios.map(|r| (b as f64 * r).round() as u32);
        self.thresholds[0] = 0;
    }
}

impl MediaSource for SpatialSource {
    fn next_due(&self) -> Micros {
        frame_time(self.frame, self.cfg.fps)
    }

    fn generate(&mut self, _now: Micros, cc: &CcStats) -> Vec<MessageSpec> {
        let f = self.frame;
        self.frame += 1;
        let gop_start = f % self.cfg.gop == 0;
        if gop_start {
            self.retarget(cc.estimated_bw_kbps);
        }
        let weight = if gop_start { self.key_weight } else { self.other_weight };
        (0..3u8)
            .map(|layer| {
                let mean = self.increments[layer as usize] as f64 * weight;
                let size = bytes_of(mean * self.jitter.sample(&mut self.rng)).max(self.cfg.min_layer_bytes);
                MessageSpec {
                    size,
                    params: spatial_params(layer, gop_start, self.thresholds),
                    tag: FrameTag { frame: f, layer, cell: 0 },
                }
            })
            .collect()
    }

    fn model(&self) -> DecodeModel {
        DecodeModel::Spatial { gop: self.cfg.gop }
    }
}
