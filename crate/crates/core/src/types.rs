//! Shared domain types: timestamps, state estimates, detections, scans and tracks.
//!
//! All geometry lives in one scenario-local 2-D Cartesian frame; states are
//! `[x, vx, y, vy]` and time is seconds since scenario start.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::context::{DetectorContext, SensorPose};
use crate::error::{Error, Result};
use crate::linalg;

pub type StateVector = Vector4<f64>;
pub type StateCovariance = Matrix4<f64>;
pub type Position = Vector2<f64>;
pub type MeasurementCovariance = Matrix2<f64>;

/// Seconds since scenario start.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(f64);

impl Timestamp {
    pub const ZERO: Timestamp = Timestamp(0.0);

    pub fn from_secs(seconds: f64) -> Self {
        Timestamp(seconds)
    }

    pub fn secs(self) -> f64 {
        self.0
    }

    /// Signed elapsed time `self - earlier` in seconds.
    pub fn since(self, earlier: Timestamp) -> f64 {
        self.0 - earlier.0
    }
}

impl Eq for Timestamp {}

impl PartialOrd for Timestamp {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Timestamp {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}s", self.0)
    }
}

/// Opaque track identity carried by mixture components and tracks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(pub u64);

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Hands out fresh labels in increasing order.
#[derive(Clone, Debug, Default)]
pub struct LabelAllocator {
    next: u64,
}

impl LabelAllocator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn starting_at(next: u64) -> Self {
        Self { next }
    }

    pub fn fresh(&mut self) -> Label {
        let label = Label(self.next);
        self.next += 1;
        label
    }
}

/// Gaussian state estimate over `[x, vx, y, vy]`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateEstimate {
    pub mean: StateVector,
    pub covariance: StateCovariance,
}

impl StateEstimate {
    /// Validates that the covariance is symmetric positive definite.
    pub fn new(mean: StateVector, covariance: StateCovariance) -> Result<Self> {
        linalg::ensure_spd(&covariance)?;
        Ok(Self { mean, covariance })
    }

    pub fn position(&self) -> Position {
        Position::new(self.mean[0], self.mean[2])
    }

    pub fn velocity(&self) -> Vector2<f64> {
        Vector2::new(self.mean[1], self.mean[3])
    }
}

/// Weighted, labelled Gaussian: one atom of a GM-PHD intensity.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianComponent {
    pub weight: f64,
    pub state: StateEstimate,
    pub label: Label,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SensorId(pub String);

impl SensorId {
    pub fn new(id: impl Into<String>) -> Self {
        SensorId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SensorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensorKind {
    Radar,
    Lidar,
}

impl fmt::Display for SensorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SensorKind::Radar => f.write_str("radar"),
            SensorKind::Lidar => f.write_str("lidar"),
        }
    }
}

/// A 2-D position measurement. Lidar detections carry the segmented area.
#[derive(Clone, Debug, PartialEq)]
pub struct Detection {
    pub position: Position,
    pub covariance: MeasurementCovariance,
    pub extent_area: Option<f64>,
    pub sensor_id: SensorId,
}

impl Detection {
    pub fn new(
        position: Position,
        covariance: MeasurementCovariance,
        extent_area: Option<f64>,
        sensor_id: SensorId,
    ) -> Result<Self> {
        linalg::ensure_spd(&covariance)?;
        if let Some(area) = extent_area {
            if !(area >= 0.0 && area.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "extent area must be non-negative, got {area}"
                )));
            }
        }
        Ok(Self {
            position,
            covariance,
            extent_area,
            sensor_id,
        })
    }
}

/// All detections one sensor produced at one timestamp, bound to the
/// detector context the tracker must use for them.
#[derive(Clone)]
pub struct SensorScan {
    pub sensor_id: SensorId,
    pub kind: SensorKind,
    pub timestamp: Timestamp,
    /// Sensor pose at scan time. Kept so contexts can be rebuilt for a
    /// different observability model.
    pub pose: SensorPose,
    pub detections: Vec<Detection>,
    pub context: Option<Arc<dyn DetectorContext>>,
}

impl SensorScan {
    pub fn with_context(mut self, context: Arc<dyn DetectorContext>) -> Self {
        self.context = Some(context);
        self
    }
}

impl fmt::Debug for SensorScan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SensorScan")
            .field("sensor_id", &self.sensor_id)
            .field("kind", &self.kind)
            .field("timestamp", &self.timestamp)
            .field("pose", &self.pose)
            .field("detections", &self.detections)
            .field("context", &self.context)
            .finish()
    }
}

impl PartialEq for SensorScan {
    /// Compares everything except the context handle.
    fn eq(&self, other: &Self) -> bool {
        self.sensor_id == other.sensor_id
            && self.kind == other.kind
            && self.timestamp == other.timestamp
            && self.pose == other.pose
            && self.detections == other.detections
    }
}

/// Labelled sequence of timestamped state estimates produced by a tracker.
#[derive(Clone, Debug, PartialEq)]
pub struct Track {
    pub label: Label,
    points: Vec<(Timestamp, StateEstimate)>,
}

impl Track {
    pub fn new(label: Label, time: Timestamp, state: StateEstimate) -> Self {
        Self {
            label,
            points: vec![(time, state)],
        }
    }

    /// Appends a point; timestamps must be strictly increasing.
    pub fn push(&mut self, time: Timestamp, state: StateEstimate) -> Result<()> {
        let last = self.points.last().map(|(t, _)| *t).unwrap_or(Timestamp(f64::MIN));
        if time <= last {
            return Err(Error::TimestampMismatch(format!(
                "track {} point at {time} is not after {last}",
                self.label
            )));
        }
        self.points.push((time, state));
        Ok(())
    }

    pub fn points(&self) -> &[(Timestamp, StateEstimate)] {
        &self.points
    }

    pub fn state_at(&self, time: Timestamp) -> Option<&StateEstimate> {
        self.points
            .binary_search_by(|(t, _)| t.cmp(&time))
            .ok()
            .map(|i| &self.points[i].1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruthPoint {
    pub time: Timestamp,
    pub position: Position,
    pub velocity: Vector2<f64>,
}

/// Ground-truth trajectory, linearly interpolated between its samples.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruthTrack {
    pub label: Label,
    points: Vec<TruthPoint>,
}

impl GroundTruthTrack {
    /// Samples must be non-empty and strictly increasing in time.
    pub fn new(label: Label, points: Vec<TruthPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "ground truth {label} has no points"
            )));
        }
        if points.windows(2).any(|w| w[1].time <= w[0].time) {
            return Err(Error::InvalidConfig(format!(
                "ground truth {label} timestamps are not strictly increasing"
            )));
        }
        Ok(Self { label, points })
    }

    /// A stationary object present over `[birth, death]`.
    pub fn stationary(label: Label, position: Position, birth: Timestamp, death: Timestamp) -> Self {
        let mut points = vec![TruthPoint {
            time: birth,
            position,
            velocity: Vector2::zeros(),
        }];
        if death > birth {
            points.push(TruthPoint {
                time: death,
                position,
                velocity: Vector2::zeros(),
            });
        }
        Self { label, points }
    }

    pub fn points(&self) -> &[TruthPoint] {
        &self.points
    }

    pub fn birth(&self) -> Timestamp {
        self.points[0].time
    }

    pub fn death(&self) -> Timestamp {
        self.points[self.points.len() - 1].time
    }

    pub fn is_alive(&self, time: Timestamp) -> bool {
        time >= self.birth() && time <= self.death()
    }

    /// Interpolated position and velocity, `None` outside `[birth, death]`.
    pub fn at(&self, time: Timestamp) -> Option<TruthPoint> {
        if !self.is_alive(time) {
            return None;
        }
        let idx = self.points.partition_point(|p| p.time <= time);
        if idx == 0 {
            return Some(self.points[0]);
        }
        let a = &self.points[idx - 1];
        if a.time == time || idx == self.points.len() {
            return Some(TruthPoint { time, ..*a });
        }
        let b = &self.points[idx];
        let s = time.since(a.time) / b.time.since(a.time);
        Some(TruthPoint {
            time,
            position: a.position + (b.position - a.position) * s,
            velocity: a.velocity + (b.velocity - a.velocity) * s,
        })
    }
}
