//! Line-delimited JSON artifacts: scan streams, ground truth, tracker output
//! and metric records.
//!
//! Every file starts with a header line naming its format. Floats are written
//! in shortest round-trip form, so reading a file back reproduces every value
//! bit for bit. Contexts are not serialized; a reader rebuilds them from the
//! pose stored with each scan.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::context::SensorPose;
use crate::error::{Error, Result};
use crate::eval::ScanOutput;
use crate::types::{
    Detection, GroundTruthTrack, Label, MeasurementCovariance, Position, SensorId, SensorKind, SensorScan,
    StateCovariance, StateEstimate, StateVector, Timestamp, TruthPoint,
};

pub const STREAM_FORMAT: &str = "ctxtrack.stream/1";
pub const TRUTH_FORMAT: &str = "ctxtrack.truth/1";
pub const TRACKS_FORMAT: &str = "ctxtrack.tracks/1";

/// First line of every artifact file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub format: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
}

impl Header {
    pub fn new(format: &str) -> Self {
        Self {
            format: format.to_string(),
            ..Self::default()
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseRecord {
    x: f64,
    y: f64,
    heading: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectionRecord {
    z: [f64; 2],
    /// Row-major 2×2.
    cov: [f64; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    area: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScanRecord {
    sensor: String,
    kind: SensorKind,
    t: f64,
    pose: PoseRecord,
    detections: Vec<DetectionRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TruthRecord {
    label: u64,
    /// `[t, x, y, vx, vy]` per sample.
    points: Vec<[f64; 5]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EstimateRecord {
    label: u64,
    mean: [f64; 4],
    /// Row-major 4×4.
    cov: [f64; 16],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputRecord {
    t: f64,
    kind: SensorKind,
    estimates: Vec<EstimateRecord>,
}

impl From<&SensorScan> for ScanRecord {
    fn from(s: &SensorScan) -> Self {
        Self {
            sensor: s.sensor_id.0.clone(),
            kind: s.kind,
            t: s.timestamp.secs(),
            pose: PoseRecord {
                x: s.pose.position.x,
                y: s.pose.position.y,
                heading: s.pose.heading(),
            },
            detections: s
                .detections
                .iter()
                .map(|d| DetectionRecord {
                    z: [d.position.x, d.position.y],
                    cov: [d.covariance[(0, 0)], d.covariance[(0, 1)], d.covariance[(1, 0)], d.covariance[(1, 1)]],
                    area: d.extent_area,
                })
                .collect(),
        }
    }
}

impl TryFrom<ScanRecord> for SensorScan {
    type Error = Error;

    fn try_from(r: ScanRecord) -> Result<Self> {
        let sensor_id = SensorId::new(r.sensor);
        let detections = r
            .detections
            .into_iter()
            .map(|d| {
                Detection::new(
                    Position::new(d.z[0], d.z[1]),
                    MeasurementCovariance::from_row_slice(&d.cov),
                    d.area,
                    sensor_id.clone(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        if !r.t.is_finite() {
            return Err(Error::InvalidConfig(format!("scan time {} is not finite", r.t)));
        }
        Ok(SensorScan {
            sensor_id,
            kind: r.kind,
            timestamp: Timestamp::from_secs(r.t),
            pose: SensorPose::new(Position::new(r.pose.x, r.pose.y), r.pose.heading),
            detections,
            context: None,
        })
    }
}

fn truth_record(t: &GroundTruthTrack) -> TruthRecord {
    TruthRecord {
        label: t.label.0,
        points: t
            .points()
            .iter()
            .map(|p| [p.time.secs(), p.position.x, p.position.y, p.velocity.x, p.velocity.y])
            .collect(),
    }
}

fn truth_track(r: TruthRecord) -> Result<GroundTruthTrack> {
    let points = r
        .points
        .iter()
        .map(|p| TruthPoint {
            time: Timestamp::from_secs(p[0]),
            position: Position::new(p[1], p[2]),
            velocity: Position::new(p[3], p[4]),
        })
        .collect();
    GroundTruthTrack::new(Label(r.label), points)
}

fn output_record(o: &ScanOutput) -> OutputRecord {
    OutputRecord {
        t: o.time.secs(),
        kind: o.kind,
        estimates: o
            .estimates
            .iter()
            .map(|(l, s)| {
                let mut cov = [0.0; 16];
                for (k, v) in cov.iter_mut().enumerate() {
                    *v = s.covariance[(k / 4, k % 4)];
                }
                EstimateRecord {
                    label: l.0,
                    mean: [s.mean[0], s.mean[1], s.mean[2], s.mean[3]],
                    cov,
                }
            })
            .collect(),
    }
}

fn scan_output(r: OutputRecord) -> Result<ScanOutput> {
    let estimates = r
        .estimates
        .into_iter()
        .map(|e| {
            let state = StateEstimate::new(
                StateVector::from_row_slice(&e.mean),
                StateCovariance::from_row_slice(&e.cov),
            )?;
            Ok((Label(e.label), state))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanOutput {
        time: Timestamp::from_secs(r.t),
        kind: r.kind,
        estimates,
    })
}

fn file_error(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::File {
        path: path.to_path_buf(),
        source,
    }
}

fn write_lines<T: Serialize>(path: &Path, header: &Header, records: impl IntoIterator<Item = T>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(file_error(dir))?;
    }
    let file = File::create(path).map_err(file_error(path))?;
    let mut w = BufWriter::new(file);
    let json = |e: serde_json::Error| Error::InvalidConfig(format!("{}: {e}", path.display()));
    serde_json::to_writer(&mut w, header).map_err(json)?;
    w.write_all(b"\n").map_err(file_error(path))?;
    for r in records {
        serde_json::to_writer(&mut w, &r).map_err(json)?;
        w.write_all(b"\n").map_err(file_error(path))?;
    }
    w.flush().map_err(file_error(path))
}

/// A JSON error for a single line, without serde's line number (always 1).
fn line_message(e: &serde_json::Error) -> String {
    let text = e.to_string();
    let what = text.split(" at line ").next().unwrap_or(&text);
    format!("{what} (column {})", e.column())
}

/// Reads a header line followed by records. A completely empty file reads as
/// no header and no records.
fn read_lines<T: DeserializeOwned>(path: &Path, format: &str) -> Result<(Option<Header>, Vec<(usize, T)>)> {
    let file = File::open(path).map_err(file_error(path))?;
    let parse_error = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut header = None;
    let mut records = Vec::new();
    for (k, text) in BufReader::new(file).lines().enumerate() {
        let n = k + 1;
        let text = text.map_err(file_error(path))?;
        if text.trim().is_empty() {
            continue;
        }
        if header.is_none() {
            let h: Header = serde_json::from_str(&text).map_err(|e| parse_error(n, format!("bad header: {}", line_message(&e))))?;
            if h.format != format {
                return Err(parse_error(n, format!("expected format `{format}`, found `{}`", h.format)));
            }
            header = Some(h);
            continue;
        }
        let record = serde_json::from_str(&text).map_err(|e| parse_error(n, line_message(&e)))?;
        records.push((n, record));
    }
    Ok((header, records))
}

fn with_line<T>(path: &Path, line: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        e @ Error::Parse { .. } => e,
        other => Error::Parse {
            path: path.to_path_buf(),
            line,
            message: other.to_string(),
        },
    })
}

pub fn write_stream(path: &Path, header: &Header, scans: &[SensorScan]) -> Result<()> {
    write_lines(path, header, scans.iter().map(ScanRecord::from))
}

/// Scans come back without contexts.
pub fn read_stream(path: &Path) -> Result<(Header, Vec<SensorScan>)> {
    let (header, records) = read_lines::<ScanRecord>(path, STREAM_FORMAT)?;
    let mut scans: Vec<SensorScan> = Vec::with_capacity(records.len());
    for (line, r) in records {
        let scan = with_line(path, line, SensorScan::try_from(r))?;
        if let Some(prev) = scans.last() {
            if scan.timestamp < prev.timestamp {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("scan at t={} precedes t={}", scan.timestamp, prev.timestamp),
                });
            }
        }
        scans.push(scan);
    }
    Ok((header.unwrap_or_else(|| Header::new(STREAM_FORMAT)), scans))
}

pub fn write_truth(path: &Path, header: &Header, truth: &[GroundTruthTrack]) -> Result<()> {
    write_lines(path, header, truth.iter().map(truth_record))
}

pub fn read_truth(path: &Path) -> Result<(Header, Vec<GroundTruthTrack>)> {
    let (header, records) = read_lines::<TruthRecord>(path, TRUTH_FORMAT)?;
    let truth = records
        .into_iter()
        .map(|(line, r)| with_line(path, line, truth_track(r)))
        .collect::<Result<Vec<_>>>()?;
    Ok((header.unwrap_or_else(|| Header::new(TRUTH_FORMAT)), truth))
}

pub fn write_tracks(path: &Path, header: &Header, outputs: &[ScanOutput]) -> Result<()> {
    write_lines(path, header, outputs.iter().map(output_record))
}

pub fn read_tracks(path: &Path) -> Result<(Header, Vec<ScanOutput>)> {
    let (header, records) = read_lines::<OutputRecord>(path, TRACKS_FORMAT)?;
    let outputs = records
        .into_iter()
        .map(|(line, r)| with_line(path, line, scan_output(r)))
        .collect::<Result<Vec<_>>>()?;
    Ok((header.unwrap_or_else(|| Header::new(TRACKS_FORMAT)), outputs))
}

/// Writes any serializable value as one JSON document, via a temporary file
/// so readers never see a partial write.
pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let tmp: PathBuf = path.with_extension("tmp");
    let text = serde_json::to_string(value).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    std::fs::write(&tmp, text).map_err(file_error(&tmp))?;
    std::fs::rename(&tmp, path).map_err(file_error(path))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(file_error(path))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}
