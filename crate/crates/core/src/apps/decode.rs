use std::collections::BTreeMap;

use super::temporal_layer;
use crate::metrics::FrameRecord;
use crate::types::{FrameTag, Micros};

/// Reference structure of a source's frames.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecodeModel {
    /// T0 references the previous T0 (none at a GoP start), T1 the nearest
    /// earlier T0, T2 the nearest earlier T0 or T1.
    Temporal { gop: u32 },
    /// Layer q of frame f needs layer q-1 of f and, unless f starts a GoP,
    /// layer q of f-1.
    Spatial { gop: u32 },
    /// Every (cell, layer) decodes alone; quality counts the dense layers
    /// available in all front cells.
    Volumetric { layers: u8, front: Vec<u8> },
}

/// One submitted message and its fate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Unit {
    pub tag: FrameTag,
    pub created_at: Micros,
    pub size: u32,
    pub delivered_at: Option<Micros>,
}

/// Whether each unit, in order, is decodable: received, with every unit it
/// references decodable.
pub fn decodable_units(model: &DecodeModel, units: &[Unit]) -> Vec<bool> {
    let got: BTreeMap<(u32, u8, u8), bool> = units
        .iter()
        .map(|u| ((u.tag.frame, u.tag.cell, u.tag.layer), u.delivered_at.is_some()))
        .collect();
    // frame-then-layer order visits every reference before its dependents
    let mut ok: BTreeMap<(u32, u8, u8), bool> = BTreeMap::new();
    let mut order: Vec<(u32, u8, u8)> = got.keys().copied().collect();
    order.sort_by_key(|&(f, c, l)| (f, l, c));
    for key @ (f, c, l) in order {
        let is = |k: (u32, u8, u8)| ok.get(&k).copied().unwrap_or(false);
        let refs_ok = match model {
            DecodeModel::Temporal { gop } => match (temporal_layer(f), f % gop) {
                (0, 0) => true,
                (0, _) => is((f - 4, 0, 0)),
                (1, _) => is((f - 2, 0, 0)),
                _ => {
                    let r = f - 1;
                    is((r, 0, temporal_layer(r)))
                }
            },
            DecodeModel::Spatial { gop } => {
                (l == 0 || is((f, c, l - 1))) && (f % gop == 0 || is((f - 1, c, l)))
            }
            DecodeModel::Volumetric { .. } => true,
        };
        ok.insert(key, got[&key] && refs_ok);
    }
    units
        .iter()
        .map(|u| ok[&(u.tag.frame, u.tag.cell, u.tag.layer)])
        .collect()
}

/// Per-frame outcome under `model`, in frame order.
///
/// The level is the highest quality layer decodable together with all layers
/// below it; delivery time is when the last unit of that level arrived.
pub fn frame_records(model: &DecodeModel, units: &[Unit]) -> Vec<FrameRecord> {
    let ok = decodable_units(model, units);
    let mut frames: BTreeMap<u32, (Micros, u64, BTreeMap<(u8, u8), Micros>)> = BTreeMap::new();
    for (u, &dec) in units.iter().zip(&ok) {
        let f = frames.entry(u.tag.frame).or_insert((u.created_at, 0, BTreeMap::new()));
        f.0 = f.0.min(u.created_at);
        f.1 += u.size as u64;
        if dec {
            f.2.insert((u.tag.cell, u.tag.layer), u.delivered_at.expect("decodable units arrived"));
        }
    }
    let front: Vec<u8> = match model {
        DecodeModel::Volumetric { front, .. } => front.clone(),
        _ => vec![0],
    };
    frames
        .into_iter()
        .map(|(frame, (send_us, bytes, dec))| {
            let mut best: Option<(u8, Micros)> = None;
            if let DecodeModel::Temporal { .. } = model {
                // one unit per frame, tagged with its temporal layer
                best = dec.values().next().map(|&t| (0, t));
            } else {
                for l in 0u8.. {
                    let times: Option<Vec<Micros>> =
                        front.iter().map(|c| dec.get(&(*c, l)).copied()).collect();
                    let Some(times) = times else { break };
                    let t = times.into_iter().chain(best.map(|b| b.1)).max().unwrap_or(0);
                    best = Some((l, t));
                }
            }
            FrameRecord {
                frame,
                send_us,
                deliver_us: best.map(|b| b.1),
                level: best.map(|b| b.0),
                bytes,
            }
        })
        .collect()
}
