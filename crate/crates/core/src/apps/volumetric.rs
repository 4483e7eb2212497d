use rand_chacha::ChaCha8Rng;

use super::{bytes_of, frame_time, DecodeModel, Jitter, MediaSource, MessageSpec};
use crate::config::VolumetricConfig;
use crate::transport::CcStats;
use crate::types::{FrameTag, Micros, MsgParams};

/// Dropper thresholds, cycled frame by frame.
const THRESHOLD_CYCLE: [u8; 4] = [3, 2, 1, 0];

/// Priority of a (cell, layer) message. Occluded cells sit one level below
/// front cells, and denser layers below sparser ones, so drops hit occluded
/// detail first and front base layers last.
pub fn volumetric_priority(front: bool, layer: u8) -> u8 {
    let band = match layer {
        0 => 0,
        1 | 2 => 1,
        _ => 2,
    };
    if front {
        band
    } else {
        band + 1
    }
}

pub fn volumetric_params(frame: u32, cell: u8, layer: u8, front: bool) -> MsgParams {
    let dropper = cell == 0 && layer == 0;
    MsgParams {
        msg_priority: volumetric_priority(front, layer),
        drop_flag: dropper,
        priority_threshold: if dropper { THRESHOLD_CYCLE[frame as usize % 4] } else { 0 },
        bitrate_threshold_kbps: 0,
    }
}

/// Layered point-cloud video with a fixed viewport.
#[derive(Debug)]
pub struct VolumetricSource {
    cfg: VolumetricConfig,
    rng: ChaCha8Rng,
    jitter: Jitter,
    frame: u32,
    layer_bytes: f64,
}

impl VolumetricSource {
    pub fn new(cfg: VolumetricConfig, rng: ChaCha8Rng) -> Self {
        let frame_bytes = cfg.bitrate_kbps as f64 * 125.0 / cfg.fps as f64 * cfg.overhead;
        VolumetricSource {
            jitter: Jitter::new(cfg.jitter_sigma),
            layer_bytes: frame_bytes / (cfg.cells as f64 * cfg.layers as f64),
            cfg,
            rng,
            frame: 0,
        }
    }
}

impl MediaSource for VolumetricSource {
    fn next_due(&self) -> Micros {
        frame_time(self.frame, self.cfg.fps)
    }

    fn generate(&mut self, _now: Micros, _cc: &CcStats) -> Vec<MessageSpec> {
        let f = self.frame;
        self.frame += 1;
        let mut out = Vec::with_capacity(self.cfg.cells as usize * self.cfg.layers as usize);
        for cell in 0..self.cfg.cells {
            let front = self.cfg.front_cells.contains(&cell);
            for layer in 0..self.cfg.layers {
                out.push(MessageSpec {
                    size: bytes_of(self.layer_bytes * self.jitter.sample(&mut self.rng)),
                    params: volumetric_params(f, cell, layer, front),
                    tag: FrameTag { frame: f, layer, cell },
                });
            }
        }
        out
    }

    fn model(&self) -> DecodeModel {
        DecodeModel::Volumetric {
            layers: self.cfg.layers,
            front: self.cfg.front_cells.clone(),
        }
    }
}
