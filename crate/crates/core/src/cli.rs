//! Command-line experiment runner.

use std::ffi::OsString;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{ConfigError, ScenarioConfig, Scheme, TraceSpec};
use crate::metrics::{
    queue_series, write_atomically, write_frames, write_queue, write_summary, SummaryRow,
};
use crate::netsim::{self, write_events, RunMetrics};
use crate::trace::BandwidthTrace;

/// PDrop buffer sizes compared against Octopus at the scenario's buffer.
pub const PDROP_SWEEP_BYTES: [u64; 3] = [94_000, 375_000, 1_500_000];
pub const RTT_SWEEP_MS: [u64; 3] = [20, 60, 120];

#[derive(Debug, Parser)]
#[command(name = "octopus", version, about = "In-network message dropping simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Run one scenario.
    Run(Common),
    /// Run several schemes on the same scenario and seed.
    Compare(Common),
    /// Vary the router buffer or the RTT.
    Sweep {
        #[arg(value_enum)]
        what: SweepKind,
        #[command(flatten)]
        common: Common,
    },
    /// Check a scenario file and print it with defaults filled in.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Write a synthetic cellular trace in mahimahi format.
    GenTrace {
        #[arg(long, default_value_t = 12_000)]
        mean_kbps: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 60_000)]
        duration_ms: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SweepKind {
    /// PDrop at 94 KB, 375 KB and 1.5 MB next to Octopus.
    Buffer,
    /// RTTs of 20, 60 and 120 ms.
    Rtt,
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// Scenario JSON; defaults apply when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Trace file or spec (constant12mbps, synthetic:MEAN:SEED).
    #[arg(long)]
    trace: Option<String>,
    /// Scheme, or a comma-separated list for compare and sweep.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    event_log: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{context}: {source}")]
    Io { context: String, source: io::Error },
    #[error("simulation failed: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 1,
            CliError::Io { .. } | CliError::Runtime(_) => 2,
        }
    }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

/// One simulation in a matrix, with the directory its files go to.
#[derive(Debug, Clone)]
pub struct Cell {
    pub label: String,
    pub cfg: ScenarioConfig,
    pub dir: PathBuf,
}

/// Entry point; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.cmd) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Run(c) => {
            let cfg = base_config(&c)?;
            let out = c.out.clone();
            run_matrix(vec![Cell { label: cfg.scheme.name().into(), cfg, dir: out.clone() }], &out)
        }
        Cmd::Compare(c) => {
            let base = base_config(&c)?;
            let schemes = match &c.scheme {
                Some(s) => parse_schemes(s)?,
                None => default_schemes(&base),
            };
            let cells = compare_cells(&base, &schemes, &c.out)?;
            run_matrix(cells, &c.out)
        }
        Cmd::Sweep { what, common } => {
            let base = base_config(&common)?;
            let cells = match what {
                SweepKind::Buffer => buffer_cells(&base, &common.out),
                SweepKind::Rtt => {
                    let schemes = match &common.scheme {
                        Some(s) => parse_schemes(s)?,
                        None => vec![base.scheme],
                    };
                    rtt_cells(&base, &schemes, &common.out)?
                }
            };
            run_matrix(cells, &common.out)
        }
        Cmd::Validate { scenario } => {
            let cfg = ScenarioConfig::load(&scenario)?;
            cfg.load_trace()?;
            println!("{}", cfg.to_json());
            Ok(())
        }
        Cmd::GenTrace { mean_kbps, seed, duration_ms, out } => {
            if mean_kbps == 0 || duration_ms == 0 {
                return Err(CliError::Usage("mean and duration must be positive".into()));
            }
            let t = BandwidthTrace::synthetic_cellular(seed, mean_kbps as f64, duration_ms);
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(io_err(dir.display().to_string()))?;
            }
            write_atomically(&out, |buf| t.write_to(buf)).map_err(io_err(out.display().to_string()))
        }
    }
}

fn base_config(c: &Common) -> Result<ScenarioConfig, CliError> {
    let mut cfg = match &c.scenario {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(t) = &c.trace {
        cfg.link.trace = TraceSpec(t.clone());
        // a trace named on the command line is relative to the caller
        cfg.base_dir = None;
    }
    if let Some(s) = &c.scheme {
        // lists are handled by the caller; the first entry is the base
        cfg.scheme = parse_schemes(s)?[0];
    }
    cfg.event_log |= c.event_log;
    cfg.validate()?;
    cfg.load_trace()?;
    Ok(cfg)
}

fn parse_schemes(s: &str) -> Result<Vec<Scheme>, CliError> {
    let v = s
        .split(',')
        .map(|x| Scheme::from_str(x.trim()))
        .collect::<Result<Vec<_>, _>>()?;
    if v.is_empty() {
        return Err(CliError::Usage("empty scheme list".into()));
    }
    Ok(v)
}

/// Every scheme the scenario can run under.
pub fn default_schemes(base: &ScenarioConfig) -> Vec<Scheme> {
    Scheme::ALL
        .into_iter()
        .filter(|&s| {
            let mut c = base.clone();
            c.scheme = s;
            c.validate().is_ok()
        })
        .collect()
}

pub fn compare_cells(base: &ScenarioConfig, schemes: &[Scheme], out: &Path) -> Result<Vec<Cell>, CliError> {
    schemes
        .iter()
        .map(|&s| {
            let mut cfg = base.clone();
            cfg.scheme = s;
            cfg.validate()?;
            Ok(Cell { label: s.name().into(), cfg, dir: out.join(s.name()) })
        })
        .collect()
}

/// Octopus at the scenario's buffer, then PDrop at each sweep size.
pub fn buffer_cells(base: &ScenarioConfig, out: &Path) -> Vec<Cell> {
    let mut octo = base.clone();
    octo.scheme = Scheme::Octopus;
    let mut cells = vec![Cell {
        label: format!("octopus-{}", octo.link.buffer_bytes),
        dir: out.join(format!("octopus-{}", octo.link.buffer_bytes)),
        cfg: octo,
    }];
    for b in PDROP_SWEEP_BYTES {
        let mut cfg = base.clone();
        cfg.scheme = Scheme::Pdrop;
        cfg.link.buffer_bytes = b;
        let label = format!("pdrop-{b}");
        cells.push(Cell { dir: out.join(&label), label, cfg });
    }
    cells
}

pub fn rtt_cells(base: &ScenarioConfig, schemes: &[Scheme], out: &Path) -> Result<Vec<Cell>, CliError> {
    let mut cells = Vec::new();
    for &s in schemes {
        for rtt in RTT_SWEEP_MS {
            let mut cfg = base.clone();
            cfg.scheme = s;
            cfg.link.rtt_ms = rtt;
            cfg.validate()?;
            let label = format!("{}-rtt{rtt}", s.name());
            cells.push(Cell { dir: out.join(&label), label, cfg });
        }
    }
    Ok(cells)
}

/// Summary rows for one run: one per flow.
pub fn summary_rows(scenario: &str, m: &RunMetrics) -> Vec<SummaryRow> {
    let multi = m.flows.len() > 1;
    m.flows
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let d = f.drops();
            let ms = |s: Option<crate::metrics::Stats>, p99: bool| {
                s.map(|s| crate::metrics::us_to_ms(if p99 { s.p99 } else { s.p50 }))
            };
            SummaryRow {
                scenario: if multi { format!("{scenario}/flow{i}") } else { scenario.to_string() },
                scheme: m.scheme.name().into(),
                quality_mean: f.quality_mean,
                lat_p50_ms: ms(f.latency, false),
                lat_p99_ms: ms(f.latency, true),
                aoi_p50_ms: ms(f.aoi, false),
                aoi_p99_ms: ms(f.aoi, true),
                util_pct: f.util_pct,
                drops_by_msg: d.messages_dropped_by_msg + d.messages_purged,
                drops_by_bitrate: d.messages_dropped_by_bitrate,
                drops_tail: d.packets_tail_dropped,
            }
            .rounded()
        })
        .collect()
}

/// Write a run's per-cell files into `dir`.
pub fn write_cell(dir: &Path, scenario: &str, m: &RunMetrics) -> io::Result<Vec<SummaryRow>> {
    fs::create_dir_all(dir)?;
    let rows = summary_rows(scenario, m);
    write_atomically(&dir.join("summary.csv"), |b| write_summary(b, &rows))?;
    if m.flows.len() == 1 {
        write_atomically(&dir.join("frames.csv"), |b| write_frames(b, &m.flows[0].frames))?;
    } else {
        for (i, f) in m.flows.iter().enumerate() {
            write_atomically(&dir.join(format!("frames.flow{i}.csv")), |b| write_frames(b, &f.frames))?;
        }
    }
    let q = queue_series(&m.residence);
    write_atomically(&dir.join("queue.csv"), |b| write_queue(b, &q))?;
    if !m.events.is_empty() {
        write_atomically(&dir.join("events.csv"), |b| write_events(b, &m.events))?;
    }
    Ok(rows)
}

fn run_cell(cell: &Cell) -> Result<Vec<SummaryRow>, CliError> {
    let name = cell.cfg.name.clone();
    let m = netsim::run(&cell.cfg).map_err(|netsim::SimError::Config(e)| CliError::Config(e))?;
    if !m.conservation.holds() {
        return Err(CliError::Runtime(format!("{}: packet accounting mismatch {:?}", cell.label, m.conservation)));
    }
    write_cell(&cell.dir, &name, &m).map_err(io_err(cell.dir.display().to_string()))
}

/// Run cells in parallel and write a combined summary under `out`.
pub fn run_matrix(cells: Vec<Cell>, out: &Path) -> Result<(), CliError> {
    let results: Vec<Result<Vec<SummaryRow>, CliError>> = std::thread::scope(|s| {
        let handles: Vec<_> = cells.iter().map(|c| s.spawn(move || run_cell(c))).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(CliError::Runtime("worker panicked".into()))))
            .collect()
    });
    let mut rows = Vec::new();
    for (cell, r) in cells.iter().zip(results) {
        let mut r = r?;
        if cells.len() > 1 {
            for row in &mut r {
                row.scenario = format!("{}@{}", row.scenario, cell.label);
            }
        }
        rows.extend(r);
    }
    if cells.len() > 1 || cells.first().is_some_and(|c| c.dir != out) {
        fs::create_dir_all(out).map_err(io_err(out.display().to_string()))?;
        let path = out.join("summary.csv");
        write_atomically(&path, |b| write_summary(b, &rows)).map_err(io_err(path.display().to_string()))?;
    }
    for r in &rows {
        eprintln!(
            "{:<40} {:<13} p99 {:>9} ms  q {:>8}  util {:>6.1}%",
            r.scenario,
            r.scheme,
            r.lat_p99_ms.map_or("-".into(), |v| format!("{v:.1}")),
            r.quality_mean.map_or("-".into(), |v| format!("{v:.4}")),
            r.util_pct
        );
    }
    Ok(())
}
