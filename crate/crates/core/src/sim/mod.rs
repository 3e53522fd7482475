//! Asynchronous multi-rate radar/lidar simulator.
//!
//! A [`Scenario`] holds ground truth, an ego trajectory and a sensor suite.
//! [`simulate_stream`] samples detections from each sensor's true
//! observability model, adds Poisson clutter, and merges all scans into one
//! time-ordered stream. Each scan carries the coverage-aware tracker context
//! for the ego pose at scan time.

mod scenarios;

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};

use crate::context::{
    lidar_pd, radar_pd, relative_range_bearing, wrap_angle, DetectorContext, LidarContext,
    LidarContextConfig, RadarContext, RadarContextConfig, RangeBearingClutter, SensorPose,
};
use crate::error::{Error, Result};
use crate::types::{
    Detection, GroundTruthTrack, Label, MeasurementCovariance, Position, SensorId, SensorKind,
    SensorScan, Timestamp,
};

pub use scenarios::{scenario_by_name, scenario_one, scenario_two, SCENARIO_NAMES};

/// The true observability a sensor samples detections from.
#[derive(Clone, Debug, PartialEq)]
pub enum Observability {
    Radar(RadarContextConfig),
    Lidar(LidarContextConfig),
}

impl Observability {
    pub fn kind(&self) -> SensorKind {
        match self {
            Observability::Radar(_) => SensorKind::Radar,
            Observability::Lidar(_) => SensorKind::Lidar,
        }
    }

    pub fn detection_probability(&self, pose: &SensorPose, point: &Position) -> f64 {
        let (r, bearing) = relative_range_bearing(pose, point);
        match self {
            Observability::Radar(c) => radar_pd(r, bearing, c),
            Observability::Lidar(c) => lidar_pd(r, c),
        }
    }

    /// Coverage-aware tracker context at `pose`. Radar clutter is converted
    /// from range-bearing units to m⁻².
    pub fn context_at(&self, pose: SensorPose) -> Arc<dyn DetectorContext> {
        match self {
            Observability::Radar(c) => Arc::new(RangeBearingClutter::new(
                pose.position,
                Arc::new(RadarContext::new(c.at(pose))),
            )),
            Observability::Lidar(c) => Arc::new(LidarContext::new(c.at(pose))),
        }
    }
}

/// Clutter sources that hold a fixed offset from the ego for a while and fire
/// intermittently, such as wake and bow-wave returns.
#[derive(Clone, Debug, PartialEq)]
pub struct HotspotSpec {
    /// New hotspots per second.
    pub birth_rate: f64,
    pub r_min: f64,
    pub r_max: f64,
    /// Mean lifetime (s), exponentially distributed.
    pub mean_lifetime: f64,
    /// Probability of a return on each scan.
    pub emit_prob: f64,
    /// Position scatter of each return about the hotspot (m).
    pub jitter_std: f64,
    pub area: (f64, f64),
}

impl Default for HotspotSpec {
    fn default() -> Self {
        Self {
            birth_rate: 0.05,
            r_min: 5.0,
            r_max: 50.0,
            mean_lifetime: 20.0,
            emit_prob: 0.5,
            jitter_std: 0.5,
            area: (1.0, 10.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClutterSpec {
    /// Poisson mean of uniformly placed false returns per scan.
    pub expected_per_scan: f64,
    /// Lidar: share of clutter with segmentation area below the small/large split.
    pub small_area_fraction: f64,
    /// Radar: density multiplier beyond the clutter knee range.
    pub far_enrichment: f64,
    pub hotspots: Option<HotspotSpec>,
}

impl ClutterSpec {
    pub fn none() -> Self {
        Self {
            expected_per_scan: 0.0,
            small_area_fraction: 0.8,
            far_enrichment: 1.0,
            hotspots: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SensorSpec {
    pub id: SensorId,
    /// Scan rate (Hz).
    pub rate: f64,
    /// Time of the first scan (s).
    pub phase: f64,
    pub observability: Observability,
    /// Per-axis standard deviation of the sampled position noise (m).
    pub noise_std: f64,
    /// Per-axis standard deviation reported in each detection's covariance (m).
    pub reported_std: f64,
    pub clutter: ClutterSpec,
    /// Segmentation area range of true lidar returns (m²).
    pub target_area: (f64, f64),
}

impl SensorSpec {
    pub fn radar() -> Self {
        Self {
            id: SensorId::new("radar"),
            rate: 0.8,
            phase: 0.0,
            observability: Observability::Radar(RadarContextConfig::default()),
            noise_std: 10.0,
            reported_std: 10.0,
            clutter: ClutterSpec {
                expected_per_scan: 5.0,
                small_area_fraction: 0.0,
                far_enrichment: 3.0,
                hotspots: None,
            },
            target_area: (20.0, 100.0),
        }
    }

    pub fn lidar() -> Self {
        Self {
            id: SensorId::new("lidar"),
            rate: 10.0,
            phase: 0.0,
            observability: Observability::Lidar(LidarContextConfig::default()),
            noise_std: 0.5,
            reported_std: 0.5,
            clutter: ClutterSpec {
                expected_per_scan: 3.0,
                small_area_fraction: 0.8,
                far_enrichment: 1.0,
                hotspots: Some(HotspotSpec::default()),
            },
            target_area: (20.0, 100.0),
        }
    }

    pub fn kind(&self) -> SensorKind {
        self.observability.kind()
    }

    pub fn covariance(&self) -> MeasurementCovariance {
        MeasurementCovariance::identity() * (self.reported_std * self.reported_std)
    }

    /// Scan times `phase + k/rate` strictly before `duration`.
    pub fn scan_times(&self, duration: f64) -> Vec<Timestamp> {
        let mut out = Vec::new();
        let mut k = 0u64;
        loop {
            let t = self.phase + k as f64 / self.rate;
            if t >= duration {
                break;
            }
            out.push(Timestamp::from_secs(t));
            k += 1;
        }
        out
    }

    fn validate(&self) -> Result<()> {
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(Error::InvalidConfig(format!("sensor {} rate must be positive", self.id)));
        }
        if !(self.noise_std >= 0.0 && self.reported_std > 0.0 && self.clutter.expected_per_scan >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "sensor {} needs non-negative noise and clutter and a positive reported noise",
                self.id
            )));
        }
        match &self.observability {
            Observability::Radar(c) => c.validate(),
            Observability::Lidar(c) => c.validate(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub duration: f64,
    pub ego: GroundTruthTrack,
    /// Ego heading while the ego is (nearly) stationary.
    pub ego_heading: f64,
    pub targets: Vec<GroundTruthTrack>,
    pub statics: Vec<Position>,
    /// Whether static objects are scored as ground truth.
    pub statics_as_truth: bool,
    pub sensors: Vec<SensorSpec>,
    pub seed: u64,
}

/// Below this ego speed (m/s) the heading falls back to `ego_heading`.
const HEADING_MIN_SPEED: f64 = 0.2;

/// First label given to static objects.
pub const STATIC_LABEL_BASE: u64 = 1000;

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.duration.is_nan() || self.duration <= 0.0 {
            return Err(Error::InvalidConfig("scenario duration must be positive".into()));
        }
        for s in &self.sensors {
            s.validate()?;
        }
        Ok(())
    }

    pub fn ego_pose(&self, time: Timestamp) -> SensorPose {
        let t = time
            .secs()
            .clamp(self.ego.birth().secs(), self.ego.death().secs());
        let p = self.ego.at(Timestamp::from_secs(t)).expect("clamped to ego lifetime");
        let heading = if p.velocity.norm() > HEADING_MIN_SPEED {
            p.velocity.y.atan2(p.velocity.x)
        } else {
            self.ego_heading
        };
        SensorPose::new(p.position, heading)
    }

    pub fn static_truth(&self) -> Vec<GroundTruthTrack> {
        self.statics
            .iter()
            .enumerate()
            .map(|(i, p)| {
                GroundTruthTrack::stationary(
                    Label(STATIC_LABEL_BASE + i as u64),
                    *p,
                    Timestamp::ZERO,
                    Timestamp::from_secs(self.duration),
                )
            })
            .collect()
    }

    /// Ground truth scored by the evaluation.
    pub fn truth(&self) -> Vec<GroundTruthTrack> {
        let mut out = self.targets.clone();
        if self.statics_as_truth {
            out.extend(self.static_truth());
        }
        out
    }
}

struct Hotspot {
    offset: Position,
    death: f64,
}

fn uniform_disc(rng: &mut ChaCha8Rng, pose: &SensorPose, r_min: f64, r_max: f64) -> Position {
    let r = (r_min * r_min + rng.random::<f64>() * (r_max * r_max - r_min * r_min)).sqrt();
    let theta = rng.random_range(-PI..PI);
    pose.position + Position::new(theta.cos(), theta.sin()) * r
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive finite mean").sample(rng) as u64
}

/// Samples a radar clutter position, uniform in bearing over the covered
/// sector and piecewise uniform in range (denser beyond the knee).
fn radar_clutter_position(rng: &mut ChaCha8Rng, pose: &SensorPose, c: &RadarContextConfig, enrich: f64) -> Position {
    let near = c.r_clutter_knee - c.r_min;
    let far = (c.r_max - c.r_clutter_knee) * enrich;
    let u = rng.random::<f64>() * (near + far);
    let r = if u < near {
        c.r_min + u
    } else {
        c.r_clutter_knee + (u - near) / enrich
    };
    let covered = 2.0 * PI - 2.0 * c.blind_half_width;
    let bearing = wrap_angle(c.blind_center + c.blind_half_width + rng.random::<f64>() * covered);
    let world = pose.heading() + bearing;
    pose.position + Position::new(world.cos(), world.sin()) * r
}

/// Deterministic per-sensor generator.
fn simulate_sensor(scenario: &Scenario, index: usize, truth: &[GroundTruthTrack]) -> Result<Vec<SensorScan>> {
    let spec = &scenario.sensors[index];
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    rng.set_stream(index as u64 + 1);
    let cov = spec.covariance();
    let noise = Normal::new(0.0, spec.noise_std).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let kind = spec.kind();
    let period = 1.0 / spec.rate;
    let mut hotspots: Vec<Hotspot> = Vec::new();
    let mut scans = Vec::new();

    for time in spec.scan_times(scenario.duration) {
        let pose = scenario.ego_pose(time);
        let mut detections = Vec::new();
        let area = |rng: &mut ChaCha8Rng, range: (f64, f64)| match kind {
            SensorKind::Lidar => Some(rng.random_range(range.0..range.1)),
            SensorKind::Radar => None,
        };

        for track in truth {
            let Some(p) = track.at(time) else { continue };
            let pd = spec.observability.detection_probability(&pose, &p.position);
            if rng.random::<f64>() < pd {
                let z = p.position + Position::new(noise.sample(&mut rng), noise.sample(&mut rng));
                let a = area(&mut rng, spec.target_area);
                detections.push(Detection::new(z, cov, a, spec.id.clone())?);
            }
        }

        for _ in 0..poisson(&mut rng, spec.clutter.expected_per_scan) {
            let (z, a) = match &spec.observability {
                Observability::Lidar(c) => {
                    let z = uniform_disc(&mut rng, &pose, 0.0, c.r_max);
                    let small = rng.random::<f64>() < spec.clutter.small_area_fraction;
                    let a = if small {
                        rng.random_range(1.0..c.area_threshold)
                    } else {
                        rng.random_range(c.area_threshold..=30.0)
                    };
                    (z, Some(a))
                }
                Observability::Radar(c) => {
                    (radar_clutter_position(&mut rng, &pose, c, spec.clutter.far_enrichment), None)
                }
            };
            detections.push(Detection::new(z, cov, a, spec.id.clone())?);
        }

        if let Some(h) = &spec.clutter.hotspots {
            let now = time.secs();
            hotspots.retain(|s| s.death > now);
            let life = Exp::new(1.0 / h.mean_lifetime).map_err(|e| Error::InvalidConfig(e.to_string()))?;
            for _ in 0..poisson(&mut rng, h.birth_rate * period) {
                let offset = uniform_disc(&mut rng, &pose, h.r_min, h.r_max) - pose.position;
                let death = now + life.sample(&mut rng);
                hotspots.push(Hotspot { offset, death });
            }
            let jitter = Normal::new(0.0, h.jitter_std).map_err(|e| Error::InvalidConfig(e.to_string()))?;
            for s in &hotspots {
                if rng.random::<f64>() < h.emit_prob {
                    let z = pose.position + s.offset + Position::new(jitter.sample(&mut rng), jitter.sample(&mut rng));
                    let a = area(&mut rng, h.area);
                    detections.push(Detection::new(z, cov, a, spec.id.clone())?);
                }
            }
        }

        scans.push(SensorScan {
            sensor_id: spec.id.clone(),
            kind,
            timestamp: time,
            pose,
            detections,
            context: Some(spec.observability.context_at(pose)),
        });
    }
    Ok(scans)
}

/// Time-ordered scan stream over all sensors. Simultaneous scans are ordered
/// radar first, then by sensor order.
pub fn simulate_stream(scenario: &Scenario) -> Result<Vec<SensorScan>> {
    scenario.validate()?;
    let mut truth = scenario.targets.clone();
    truth.extend(scenario.static_truth());
    let mut tagged = Vec::new();
    for index in 0..scenario.sensors.len() {
        for scan in simulate_sensor(scenario, index, &truth)? {
            tagged.push((index, scan));
        }
    }
    tagged.sort_by(|(ia, a), (ib, b)| {
        a.timestamp
            .cmp(&b.timestamp)
            .then(a.kind.cmp(&b.kind))
            .then(ia.cmp(ib))
    });
    Ok(tagged.into_iter().map(|(_, s)| s).collect())
}
