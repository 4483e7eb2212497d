use rand_chacha::ChaCha8Rng;

use super::{bytes_of, frame_time, DecodeModel, Jitter, MediaSource, MessageSpec};
use crate::config::TemporalConfig;
use crate::transport::CcStats;
use crate::types::{FrameTag, Micros, MsgParams};

/// Temporal layer of a frame under the repeating T0, T2, T1, T2 pattern.
pub fn temporal_layer(frame: u32) -> u8 {
    match frame % 4 {
        0 => 0,
        2 => 1,
        _ => 2,
    }
}

/// Dropping parameters for a frame of temporal layer `layer`.
///
/// A frame of layer i is referenced only by frames of higher layers, so:
/// T0 frames form a chain and must never drop each other (threshold 1).
/// A T1 may drop older T1 and T2 frames; a T2 that referenced a dropped T1
/// is older than the dropper and is covered by the same threshold (1).
/// T2 frames are referenced by nothing and may only drop older T2s (2).
pub fn temporal_params(layer: u8) -> MsgParams {
    let (msg_priority, priority_threshold) = match layer {
        0 => (0, 1),
        1 => (1, 1),
        _ => (2, 2),
    };
    MsgParams {
        msg_priority,
        drop_flag: true,
        priority_threshold,
        bitrate_threshold_kbps: 0,
    }
}

/// Frame-rate scalable video: one message per frame.
#[derive(Debug)]
pub struct TemporalSource {
    cfg: TemporalConfig,
    rng: ChaCha8Rng,
    jitter: Jitter,
    frame: u32,
    /// Mean frame size in bytes, before per-frame weighting.
    mean_bytes: f64,
    /// Normalizes layer and keyframe weights to a GoP mean of one.
    weight_scale: f64,
}

impl TemporalSource {
    pub fn new(cfg: TemporalConfig, rng: ChaCha8Rng) -> Self {
        let mean_bytes = cfg.bitrate_kbps as f64 * 125.0 / cfg.fps as f64 * cfg.overhead;
        let total: f64 = (0..cfg.gop).map(|f| Self::raw_weight(&cfg, f)).sum();
        TemporalSource {
            jitter: Jitter::new(cfg.jitter_sigma),
            weight_scale: cfg.gop as f64 / total,
            cfg,
            rng,
            frame: 0,
            mean_bytes,
        }
    }

    fn raw_weight(cfg: &TemporalConfig, frame: u32) -> f64 {
        let w = cfg.layer_weights[temporal_layer(frame) as usize];
        if frame % cfg.gop == 0 {
            w * cfg.keyframe_mult
        } else {
            w
        }
    }

    /// Expected size of `frame` without noise.
    pub fn mean_size(&self, frame: u32) -> f64 {
        self.mean_bytes * Self::raw_weight(&self.cfg, frame) * self.weight_scale
    }
}

impl MediaSource for TemporalSource {
    fn next_due(&self) -> Micros {
        frame_time(self.frame, self.cfg.fps)
    }

    fn generate(&mut self, _now: Micros, _cc: &CcStats) -> Vec<MessageSpec> {
        let f = self.frame;
        self.frame += 1;
        let layer = temporal_layer(f);
        let size = bytes_of(self.mean_size(f) * self.jitter.sample(&mut self.rng));
        vec![MessageSpec {
            size,
            params: temporal_params(layer),
            tag: FrameTag {
                frame: f,
                layer,
                cell: 0,
            },
        }]
    }

    fn model(&self) -> DecodeModel {
        DecodeModel::Temporal { gop: self.cfg.gop }
    }
}
