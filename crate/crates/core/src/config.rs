//! Scenario description, loaded from JSON.
//!
//! Every field has a default so a scenario file only needs to name what it
//! changes. Unknown keys are rejected to catch typos.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::trace::{BandwidthTrace, TraceError};
use crate::types::MTU;

pub const DEFAULT_BUFFER_BYTES: u64 = 375_000;
pub const DEFAULT_RTT_MS: u64 = 60;
/// Time the network keeps running after sources stop.
pub const DEFAULT_DRAIN_MS: u64 = 2_000;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}, column {column}: {msg}")]
    Json { line: usize, column: usize, msg: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("unknown scheme {0:?}")]
    UnknownScheme(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

/// Router and endpoint combination under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Dropping at the router and in the send buffer.
    Octopus,
    /// Send-buffer dropping only; the router is drop-tail.
    Octobbr,
    /// Priority-purge router with a dropping send buffer.
    Pdrop,
    /// Drop-tail router and a plain FIFO send buffer.
    Droptail,
    /// Sends exactly what the link serves in each window.
    Oracle,
    /// Oracle working from the previous window's capacity.
    StaleOracle,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::Octopus,
        Scheme::Octobbr,
        Scheme::Pdrop,
        Scheme::Droptail,
        Scheme::Oracle,
        Scheme::StaleOracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Octopus => "octopus",
            Scheme::Octobbr => "octobbr",
            Scheme::Pdrop => "pdrop",
            Scheme::Droptail => "droptail",
            Scheme::Oracle => "oracle",
            Scheme::StaleOracle => "stale-oracle",
        }
    }

    pub fn router(self) -> RouterKind {
        match self {
            Scheme::Octopus => RouterKind::Octopus,
            Scheme::Pdrop => RouterKind::Pdrop,
            _ => RouterKind::Droptail,
        }
    }

    /// Whether the transport send buffer applies the primitives.
    pub fn buffer_drops(self) -> bool {
        !matches!(self, Scheme::Droptail)
    }

    /// Staleness of the oracle schedule, for the oracle schemes.
    pub fn oracle_stale_ms(self) -> Option<u64> {
        match self {
            Scheme::Oracle => Some(0),
            Scheme::StaleOracle => Some(5),
            _ => None,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ConfigError::UnknownScheme(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RouterKind {
    Octopus,
    Pdrop,
    Droptail,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    #[default]
    CellularOnly,
    LegacyOnly,
    LegacyThenCellular,
}

/// Where link opportunities come from.
///
/// Accepted spellings: `constant<N>mbps`, `constant<N>kbps`,
/// `synthetic:<mean kbps>:<seed>[:<duration ms>]`, or a trace file path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TraceSpec(pub String);

impl Default for TraceSpec {
    fn default() -> Self {
        TraceSpec("constant12mbps".into())
    }
}

impl TraceSpec {
    fn constant_kbps(&self) -> Option<u64> {
        let rest = self.0.strip_prefix("constant")?;
        if let Some(n) = rest.strip_suffix("mbps") {
            return n.parse::<u64>().ok().map(|m| m * 1000);
        }
        rest.strip_suffix("kbps")?.parse().ok()
    }

    /// Build the trace, resolving relative paths against `base`.
    pub fn load(&self, base: Option<&Path>) -> Result<BandwidthTrace, ConfigError> {
        if let Some(kbps) = self.constant_kbps() {
            return Ok(BandwidthTrace::constant(kbps, 1000)?);
        }
        if let Some(rest) = self.0.strip_prefix("synthetic:") {
            let parts: Vec<&str> = rest.split(':').collect();
            let num = |i: usize| parts.get(i).and_then(|s| s.parse::<u64>().ok());
            return match (parts.len(), num(0), num(1)) {
                (2 | 3, Some(mean), Some(seed)) => {
                    let dur = if parts.len() == 3 {
                        num(2).ok_or_else(|| ConfigError::Invalid(format!("bad trace {:?}", self.0)))?
                    } else {
                        60_000
                    };
                    Ok(BandwidthTrace::synthetic_cellular(seed, mean as f64, dur))
                }
                _ => invalid(format!("bad trace {:?}", self.0)),
            };
        }
        let path = Path::new(&self.0);
        let path = match base {
            Some(b) if path.is_relative() => b.join(path),
            _ => path.to_path_buf(),
        };
        Ok(BandwidthTrace::load(path)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkConfig {
    pub trace: TraceSpec,
    /// Per-user router buffer.
    pub buffer_bytes: u64,
    pub rtt_ms: u64,
    /// Drop-by-bitrate bandwidth before the first measurement; defaults to
    /// the trace's long-run mean.
    pub warmup_kbps: Option<u64>,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            trace: TraceSpec::default(),
            buffer_bytes: DEFAULT_BUFFER_BYTES,
            rtt_ms: DEFAULT_RTT_MS,
            warmup_kbps: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LegacyConfig {
    pub rate_kbps: u64,
    pub buffer_bytes: u64,
}

impl Default for LegacyConfig {
    fn default() -> Self {
        LegacyConfig {
            rate_kbps: 12_000,
            buffer_bytes: DEFAULT_BUFFER_BYTES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemporalConfig {
    pub fps: u32,
    pub gop: u32,
    /// Single-layer encoding rate; `overhead` is applied on top.
    pub bitrate_kbps: u64,
    pub keyframe_mult: f64,
    pub overhead: f64,
    pub jitter_sigma: f64,
    /// Relative mean size of T0, T1 and T2 frames.
    pub layer_weights: [f64; 3],
}

impl Default for TemporalConfig {
    fn default() -> Self {
        TemporalConfig {
            fps: 30,
            gop: 32,
            bitrate_kbps: 4000,
            keyframe_mult: 4.0,
            overhead: 1.17,
            jitter_sigma: 0.2,
            layer_weights: [1.3, 1.0, 0.8],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpatialConfig {
    pub fps: u32,
    pub gop: u32,
    /// Cumulative fraction of the bandwidth estimate targeted by Q0..Q2.
    pub ratios: [f64; 3],
    pub keyframe_mult: f64,
    pub jitter_sigma: f64,
    /// Floor on every layer's size.
    pub min_layer_bytes: u32,
}

impl Default for SpatialConfig {
    fn default() -> Self {
        SpatialConfig {
            fps: 30,
            gop: 10,
            ratios: [0.2, 0.5, 1.0],
            keyframe_mult: 4.0,
            jitter_sigma: 0.2,
            min_layer_bytes: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VolumetricConfig {
    pub fps: u32,
    pub bitrate_kbps: u64,
    pub cells: u8,
    pub layers: u8,
    pub front_cells: Vec<u8>,
    pub overhead: f64,
    pub jitter_sigma: f64,
    /// Quality by number of dense layers shown in the front cells.
    pub quality_table: Vec<f64>,
}

impl Default for VolumetricConfig {
    fn default() -> Self {
        VolumetricConfig {
            fps: 30,
            bitrate_kbps: 6000,
            cells: 4,
            layers: 5,
            front_cells: vec![0, 1],
            overhead: 1.11,
            jitter_sigma: 0.2,
            quality_table: vec![0.80, 0.86, 0.91, 0.95, 0.98],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BulkConfig {
    pub message_bytes: u32,
    /// Send-buffer depth kept topped up, in messages.
    pub backlog: u32,
}

impl Default for BulkConfig {
    fn default() -> Self {
        BulkConfig {
            message_bytes: crate::types::MAX_PAYLOAD,
            backlog: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub window_ms: u64,
    pub stale_ms: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            window_ms: 5,
            stale_ms: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FlowConfig {
    Temporal(TemporalConfig),
    Spatial(SpatialConfig),
    Volumetric(VolumetricConfig),
    Bulk(BulkConfig),
    Oracle(OracleConfig),
}

impl FlowConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            FlowConfig::Temporal(_) => "temporal",
            FlowConfig::Spatial(_) => "spatial",
            FlowConfig::Volumetric(_) => "volumetric",
            FlowConfig::Bulk(_) => "bulk",
            FlowConfig::Oracle(_) => "oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QualityConfig {
    /// Score of a frame decoded at each quality level.
    pub table: Vec<f64>,
    /// Decay rate per second for frames that could not be decoded.
    pub decay_per_sec: f64,
}

impl Default for QualityConfig {
    fn default() -> Self {
        QualityConfig {
            table: vec![0.90, 0.95, 0.98],
            decay_per_sec: 3.0,
        }
    }
}

fn check_table(name: &str, t: &[f64]) -> Result<(), ConfigError> {
    if t.is_empty() || t.iter().any(|&s| !(s > 0.0 && s <= 1.0)) {
        return invalid(format!("{name}: scores must lie in (0, 1]"));
    }
    if t.windows(2).any(|w| w[1] < w[0]) {
        return invalid(format!("{name}: scores must not decrease with level"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub scheme: Scheme,
    /// Overrides the router implied by `scheme`.
    pub router: Option<RouterKind>,
    pub topology: Topology,
    pub link: LinkConfig,
    pub legacy: LegacyConfig,
    pub flows: Vec<FlowConfig>,
    pub duration_ms: u64,
    /// Network keeps running this long after sources stop so in-flight
    /// frames resolve.
    pub drain_ms: u64,
    pub seed: u64,
    /// Byte cap on each sender's transport buffer; unbounded when absent.
    pub sender_buffer_bytes: Option<u64>,
    pub quality: QualityConfig,
    pub out_dir: Option<PathBuf>,
    pub event_log: bool,
    /// Directory relative trace paths resolve against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            name: "scenario".into(),
            scheme: Scheme::Octopus,
            router: None,
            topology: Topology::default(),
            link: LinkConfig::default(),
            legacy: LegacyConfig::default(),
            flows: vec![FlowConfig::Spatial(SpatialConfig::default())],
            duration_ms: 30_000,
            drain_ms: DEFAULT_DRAIN_MS,
            seed: 1,
            sender_buffer_bytes: None,
            quality: QualityConfig::default(),
            out_dir: None,
            event_log: false,
            base_dir: None,
        }
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| ConfigError::Json {
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_json(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn router_kind(&self) -> RouterKind {
        self.router.unwrap_or(self.scheme.router())
    }

    pub fn load_trace(&self) -> Result<BandwidthTrace, ConfigError> {
        self.link.trace.load(self.base_dir.as_deref())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mtu = MTU as u64;
        if self.link.buffer_bytes < mtu {
            return invalid("link.buffer_bytes must be at least one MTU (1500)");
        }
        if self.link.rtt_ms == 0 {
            return invalid("link.rtt_ms must be positive");
        }
        if self.topology != Topology::CellularOnly {
            if self.legacy.rate_kbps == 0 {
                return invalid("legacy.rate_kbps must be positive");
            }
            if self.legacy.buffer_bytes < mtu {
                return invalid("legacy.buffer_bytes must be at least one MTU (1500)");
            }
        }
        if self.sender_buffer_bytes.is_some_and(|b| b < mtu) {
            return invalid("sender_buffer_bytes must be at least one MTU (1500)");
        }
        if self.flows.is_empty() {
            return invalid("at least one flow is required");
        }
        if self.flows.len() > u16::MAX as usize - 1 {
            return invalid("too many flows");
        }
        if self.scheme.oracle_stale_ms().is_some() {
            if self.topology != Topology::CellularOnly {
                return invalid("oracle schemes need the cellular-only topology");
            }
            if self.flows.len() != 1 {
                return invalid("oracle schemes drive exactly one flow");
            }
        }
        check_table("quality.table", &self.quality.table)?;
        if !(self.quality.decay_per_sec > 0.0) {
            return invalid("quality.decay_per_sec must be positive");
        }
        for (i, f) in self.flows.iter().enumerate() {
            self.validate_flow(f).map_err(|e| match e {
                ConfigError::Invalid(m) => ConfigError::Invalid(format!("flows[{i}]: {m}")),
                e => e,
            })?;
        }
        Ok(())
    }

    fn validate_flow(&self, f: &FlowConfig) -> Result<(), ConfigError> {
        let sigma_ok = |s: f64| s >= 0.0 && s.is_finite();
        match f {
            FlowConfig::Temporal(t) => {
                if t.fps == 0 || t.gop == 0 || t.gop % 4 != 0 {
                    return invalid("fps must be positive and gop a positive multiple of 4");
                }
                if t.bitrate_kbps == 0 || !(t.keyframe_mult >= 1.0) || !(t.overhead >= 1.0) {
                    return invalid("bitrate_kbps > 0, keyframe_mult >= 1, overhead >= 1 required");
                }
                if !sigma_ok(t.jitter_sigma) || t.layer_weights.iter().any(|&w| !(w > 0.0)) {
                    return invalid("jitter_sigma >= 0 and positive layer_weights required");
                }
                if self.quality.table.len() < 3 {
                    return invalid("quality.table needs three levels");
                }
            }
            FlowConfig::Spatial(s) => {
                if s.fps == 0 || s.gop == 0 {
                    return invalid("fps and gop must be positive");
                }
                let r = s.ratios;
                if !(r[0] > 0.0 && r[0] < r[1] && r[1] < r[2] && r[2] <= 1.0) {
                    return invalid("ratios must increase within (0, 1]");
                }
                if !(s.keyframe_mult >= 1.0) || !sigma_ok(s.jitter_sigma) || s.min_layer_bytes == 0 {
                    return invalid("keyframe_mult >= 1, jitter_sigma >= 0, min_layer_bytes > 0 required");
                }
                if self.quality.table.len() < 3 {
                    return invalid("quality.table needs three levels");
                }
            }
            FlowConfig::Volumetric(v) => {
                if v.fps == 0 || v.bitrate_kbps == 0 {
                    return invalid("fps and bitrate_kbps must be positive");
                }
                if v.cells == 0 || v.layers == 0 || v.layers > 5 {
                    return invalid("cells must be positive and layers within 1..=5");
                }
                if v.front_cells.is_empty() || v.front_cells.iter().any(|&c| c >= v.cells) {
                    return invalid("front_cells must name existing cells");
                }
                if !v.front_cells.contains(&0) {
                    return invalid("cell 0 carries the dropper and must be a front cell");
                }
                if !(v.overhead >= 1.0) || !sigma_ok(v.jitter_sigma) {
                    return invalid("overhead >= 1 and jitter_sigma >= 0 required");
                }
                check_table("quality_table", &v.quality_table)?;
                if v.quality_table.len() != v.layers as usize {
                    return invalid("quality_table needs one score per layer");
                }
            }
            FlowConfig::Bulk(b) => {
                if b.message_bytes == 0 || b.backlog == 0 {
                    return invalid("message_bytes and backlog must be positive");
                }
            }
            FlowConfig::Oracle(o) => {
                if o.window_ms == 0 {
                    return invalid("window_ms must be positive");
                }
                if self.topology != Topology::CellularOnly {
                    return invalid("oracle flows need the cellular-only topology");
                }
            }
        }
        Ok(())
    }
}
