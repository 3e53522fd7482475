//! Tracking metrics, sampled at radar scan times only.

mod gospa;
mod hota;

pub use gospa::{gospa, gospa_rms, Gospa, GospaConfig};
pub use hota::{hota, hota_counts, similarity, Frame, HotaConfig, HotaCounts, HotaResult, ThresholdScore};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{GroundTruthTrack, Label, Position, SensorKind, SensorScan, StateEstimate, Timestamp};

/// What a tracker reported after processing one scan.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanOutput {
    pub time: Timestamp,
    pub kind: SensorKind,
    pub estimates: Vec<(Label, StateEstimate)>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub gospa: GospaConfig,
    pub hota: HotaConfig,
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        self.gospa.validate()?;
        self.hota.validate()
    }
}

/// Timestamps of the radar scans in a stream, in stream order.
pub fn radar_times(stream: &[SensorScan]) -> Vec<Timestamp> {
    stream.iter().filter(|s| s.kind == SensorKind::Radar).map(|s| s.timestamp).collect()
}

/// Estimate sets at the given times, taken from the output of the radar scan
/// at exactly that time. Outputs after lidar scans are ignored.
pub fn sample_tracks_at(outputs: &[ScanOutput], times: &[Timestamp]) -> Result<Vec<Vec<(Label, Position)>>> {
    let radar: Vec<&ScanOutput> = outputs.iter().filter(|o| o.kind == SensorKind::Radar).collect();
    times
        .iter()
        .map(|t| {
            // The last output wins if two radars report at the same time.
            let out = radar
                .iter()
                .rev()
                .find(|o| o.time == *t)
                .ok_or_else(|| Error::TimestampMismatch(format!("no radar-scan output at t={}", t.secs())))?;
            Ok(out.estimates.iter().map(|(l, s)| (*l, s.position())).collect())
        })
        .collect()
}

/// Truth positions of the objects alive at `time`, linearly interpolated.
pub fn truth_at(truth: &[GroundTruthTrack], time: Timestamp) -> Vec<(Label, Position)> {
    truth.iter().filter_map(|t| t.at(time).map(|p| (t.label, p.position))).collect()
}

/// Raw metric material for one sequence, kept unreduced so sequences can be pooled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceMetrics {
    pub hota: HotaCounts,
    pub gospa: Vec<Gospa>,
}

pub fn evaluate_sequence(
    truth: &[GroundTruthTrack],
    outputs: &[ScanOutput],
    times: &[Timestamp],
    config: &EvalConfig,
) -> Result<SequenceMetrics> {
    let estimates = sample_tracks_at(outputs, times)?;
    let frames: Vec<Frame> = times
        .iter()
        .zip(estimates)
        .map(|(t, estimates)| Frame {
            truth: truth_at(truth, *t),
            estimates,
        })
        .collect();
    let series = frames
        .iter()
        .map(|f| {
            let x: Vec<Position> = f.truth.iter().map(|(_, p)| *p).collect();
            let y: Vec<Position> = f.estimates.iter().map(|(_, p)| *p).collect();
            gospa(&x, &y, &config.gospa)
        })
        .collect();
    Ok(SequenceMetrics {
        hota: hota_counts(&frames, &config.hota),
        gospa: series,
    })
}

/// Reduced metrics for one or more pooled sequences.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// HOTA in percent.
    pub hota: f64,
    pub deta: f64,
    pub assa: f64,
    pub gospa_rms: f64,
    /// Mean per-step contributions to the squared GOSPA; they sum to
    /// `gospa_rms²` when alpha is 2.
    pub localization: f64,
    pub missed: f64,
    pub false_: f64,
    pub steps: usize,
}

/// Pools HOTA counts and concatenates GOSPA series across sequences.
pub fn summarize<'a>(sequences: impl IntoIterator<Item = &'a SequenceMetrics>) -> Result<Summary> {
    let mut counts: Option<HotaCounts> = None;
    let mut series: Vec<Gospa> = Vec::new();
    for s in sequences {
        match &mut counts {
            Some(c) => c.combine(&s.hota),
            None => counts = Some(s.hota.clone()),
        }
        series.extend_from_slice(&s.gospa);
    }
    let counts = counts.ok_or(Error::EmptySeries)?;
    let totals: Vec<f64> = series.iter().map(|g| g.total).collect();
    let n = series.len().max(1) as f64;
    let h = counts.result();
    Ok(Summary {
        hota: 100.0 * h.hota,
        deta: h.deta,
        assa: h.assa,
        gospa_rms: gospa_rms(&totals)?,
        localization: series.iter().map(|g| g.localization).sum::<f64>() / n,
        missed: series.iter().map(|g| g.missed).sum::<f64>() / n,
        false_: series.iter().map(|g| g.false_).sum::<f64>() / n,
        steps: series.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{StateCovariance, StateVector};

    fn est(label: u64, x: f64) -> (Label, StateEstimate) {
        (
            Label(label),
            StateEstimate::new(StateVector::new(x, 0.0, 0.0, 0.0), StateCovariance::identity()).unwrap(),
        )
    }

    fn out(t: f64, kind: SensorKind, x: f64) -> ScanOutput {
        ScanOutput {
            time: Timestamp::from_secs(t),
            kind,
            estimates: vec![est(1, x)],
        }
    }

    #[test]
    fn sampling_keeps_radar_outputs_only() {
        let outputs = vec![
            out(0.0, SensorKind::Radar, 1.0),
            out(0.0, SensorKind::Lidar, 2.0),
            out(0.1, SensorKind::Lidar, 3.0),
            out(1.25, SensorKind::Radar, 4.0),
            out(1.3, SensorKind::Lidar, 5.0),
        ];
        let times = [Timestamp::from_secs(0.0), Timestamp::from_secs(1.25)];
        let got = sample_tracks_at(&outputs, &times).unwrap();
        assert_eq!(got[0], vec![(Label(1), Position::new(1.0, 0.0))]);
        assert_eq!(got[1], vec![(Label(1), Position::new(4.0, 0.0))]);
        assert!(matches!(
            sample_tracks_at(&outputs, &[Timestamp::from_secs(0.1)]),
            Err(Error::TimestampMismatch(_))
        ));
    }

    #[test]
    fn oracle_tracks_score_perfectly() {
        let truth = vec![GroundTruthTrack::stationary(
            Label(9),
            Position::new(5.0, 0.0),
            Timestamp::ZERO,
            Timestamp::from_secs(10.0),
        )];
        let times: Vec<Timestamp> = (0..8).map(|k| Timestamp::from_secs(k as f64 * 1.25)).collect();
        let outputs: Vec<ScanOutput> = times.iter().map(|t| out(t.secs(), SensorKind::Radar, 5.0)).collect();
        let m = evaluate_sequence(&truth, &outputs, &times, &EvalConfig::default()).unwrap();
        let s = summarize([&m]).unwrap();
        assert_eq!(s.hota, 100.0);
        assert_eq!(s.gospa_rms, 0.0);
    }

    #[test]
    fn decomposition_matches_rms() {
        let truth = vec![GroundTruthTrack::stationary(
            Label(9),
            Position::zeros(),
            Timestamp::ZERO,
            Timestamp::from_secs(10.0),
        )];
        let times: Vec<Timestamp> = (0..4).map(|k| Timestamp::from_secs(k as f64)).collect();
        let outputs: Vec<ScanOutput> = times
            .iter()
            .enumerate()
            .map(|(k, t)| ScanOutput {
                time: *t,
                kind: SensorKind::Radar,
                estimates: if k % 2 == 0 { vec![est(1, 3.0)] } else { vec![] },
            })
            .collect();
        let m = evaluate_sequence(&truth, &outputs, &times, &EvalConfig::default()).unwrap();
        let s = summarize([&m]).unwrap();
        assert!((s.gospa_rms.powi(2) - (s.localization + s.missed + s.false_)).abs() < 1e-9);
        assert!((s.gospa_rms.powi(2) - (9.0 + 450.0) / 2.0).abs() < 1e-9);
    }
}
