//! CSV schemas. Column names and order are part of the interface.

use std::io;
use std::path::Path;

use serde::Serialize;

use super::{us_to_ms, FrameRecord};
use crate::types::Micros;

pub const FRAMES_HEADER: [&str; 5] = ["frame", "send_us", "deliver_us", "level", "decodable"];
pub const SUMMARY_HEADER: [&str; 11] = [
    "scenario",
    "scheme",
    "quality_mean",
    "lat_p50_ms",
    "lat_p99_ms",
    "aoi_p50_ms",
    "aoi_p99_ms",
    "util_pct",
    "drops_by_msg",
    "drops_by_bitrate",
    "drops_tail",
];
pub const QUEUE_HEADER: [&str; 2] = ["t_ms", "qdelay_ms"];

/// One line of summary.csv. Empty metrics serialize as empty fields.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub scheme: String,
    pub quality_mean: Option<f64>,
    pub lat_p50_ms: Option<f64>,
    pub lat_p99_ms: Option<f64>,
    pub aoi_p50_ms: Option<f64>,
    pub aoi_p99_ms: Option<f64>,
    pub util_pct: f64,
    pub drops_by_msg: u64,
    pub drops_by_bitrate: u64,
    pub drops_tail: u64,
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

impl SummaryRow {
    /// Round floating columns so output is stable and readable.
    pub fn rounded(mut self) -> Self {
        for v in [
            &mut self.lat_p50_ms,
            &mut self.lat_p99_ms,
            &mut self.aoi_p50_ms,
            &mut self.aoi_p99_ms,
        ] {
            *v = v.map(round3);
        }
        self.quality_mean = self.quality_mean.map(|q| (q * 1e6).round() / 1e6);
        self.util_pct = round3(self.util_pct);
        self
    }
}

fn csv_err(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

pub fn write_summary<W: io::Write>(w: W, rows: &[SummaryRow]) -> io::Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(SUMMARY_HEADER).map_err(csv_err)?;
    for r in rows {
        out.serialize(r).map_err(csv_err)?;
    }
    out.flush()
}

pub fn write_frames<W: io::Write>(w: W, frames: &[FrameRecord]) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(FRAMES_HEADER).map_err(csv_err)?;
    for f in frames {
        out.write_record([
            f.frame.to_string(),
            f.send_us.to_string(),
            f.deliver_us.map(|d| d.to_string()).unwrap_or_default(),
            f.level.map(|l| l.to_string()).unwrap_or_default(),
            u8::from(f.decodable()).to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush()
}

/// Queue-delay series as produced by [`super::queue_series`].
pub fn write_queue<W: io::Write>(w: W, series: &[(Micros, Micros)]) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(QUEUE_HEADER).map_err(csv_err)?;
    for &(t, d) in series {
        out.write_record([(t / 1000).to_string(), format!("{:.3}", us_to_ms(d))])
            .map_err(csv_err)?;
    }
    out.flush()
}

/// Write through a temporary sibling file and rename into place, so readers
/// never see a half-written result.
pub fn write_atomically(
    path: &Path,
    fill: impl FnOnce(&mut Vec<u8>) -> io::Result<()>,
) -> io::Result<()> {
    let mut buf = Vec::new();
    fill(&mut buf)?;
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    std::fs::write(&tmp, &buf)?;
    std::fs::rename(&tmp, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_has_fixed_columns_and_blank_missing_metrics() {
        let row = SummaryRow {
            scenario: "s".into(),
            scheme: "oracle".into(),
            quality_mean: None,
            lat_p50_ms: None,
            lat_p99_ms: None,
            aoi_p50_ms: None,
            aoi_p99_ms: None,
            util_pct: 99.98765,
            drops_by_msg: 0,
            drops_by_bitrate: 0,
            drops_tail: 2,
        }
        .rounded();
        let mut buf = Vec::new();
        write_summary(&mut buf, &[row]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "scenario,scheme,quality_mean,lat_p50_ms,lat_p99_ms,aoi_p50_ms,aoi_p99_ms,util_pct,\
             drops_by_msg,drops_by_bitrate,drops_tail\ns,oracle,,,,,,99.988,0,0,2\n"
        );
    }

    #[test]
    fn frames_rows() {
        let f = [
            FrameRecord { frame: 0, send_us: 0, deliver_us: Some(40_000), level: Some(2), bytes: 9 },
            FrameRecord { frame: 1, send_us: 33_333, deliver_us: None, level: None, bytes: 9 },
        ];
        let mut buf = Vec::new();
        write_frames(&mut buf, &f).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "frame,send_us,deliver_us,level,decodable\n0,0,40000,2,1\n1,33333,,,0\n"
        );
    }

    #[test]
    fn queue_rows_in_ms() {
        let mut buf = Vec::new();
        write_queue(&mut buf, &[(100_000, 2_500)]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t_ms,qdelay_ms\n100,2.500\n");
    }
}
