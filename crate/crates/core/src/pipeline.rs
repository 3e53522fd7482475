//! Tracker variants and the simulate → track → evaluate chain.
//!
//! All GM-PHD variants run the same `GmphdTracker`; a variant only decides
//! which context each scan carries and whether lidar scans are processed.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::context::{
    DetectorContext, LidarContext, LidarContextConfig, RadarContext, RadarContextConfig, RangeBearingClutter,
    SensorPose, SplitContext, UniformContext, UniformContextConfig,
};
use crate::error::{Error, Result};
use crate::eval::{evaluate_sequence, radar_times, EvalConfig, ScanOutput, SequenceMetrics};
use crate::gmphd::{GmphdConfig, GmphdTracker};
use crate::jpda::{JpdaConfig, JpdaTracker};
use crate::models::CvModelConfig;
use crate::sim::{scenario_by_name, simulate_stream};
use crate::types::{GroundTruthTrack, SensorKind, SensorScan};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Jpda,
    GmphdUniform,
    GmphdRadarOnly,
    GmphdPdAware,
    GmphdContextAware,
}

impl Variant {
    /// Table row order.
    pub const ALL: [Variant; 5] = [
        Variant::Jpda,
        Variant::GmphdUniform,
        Variant::GmphdRadarOnly,
        Variant::GmphdPdAware,
        Variant::GmphdContextAware,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Jpda => "jpda",
            Variant::GmphdUniform => "gmphd-uniform",
            Variant::GmphdRadarOnly => "gmphd-radar-only",
            Variant::GmphdPdAware => "gmphd-pd-aware",
            Variant::GmphdContextAware => "gmphd-context-aware",
        }
    }

    pub fn processes(self, kind: SensorKind) -> bool {
        !(self == Variant::GmphdRadarOnly && kind == SensorKind::Lidar)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::UnknownVariant(s.to_string()))
    }
}

/// Every tracker-side parameter.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    pub motion: CvModelConfig,
    pub gmphd: GmphdConfig,
    pub jpda: JpdaConfig,
    /// Constants used by the uniform and radar-only variants, and the clutter
    /// constant of the pd-aware variant.
    pub uniform: UniformContextConfig,
    pub radar: RadarContextConfig,
    pub lidar: LidarContextConfig,
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        self.motion.validate()?;
        self.gmphd.validate()?;
        self.jpda.validate()?;
        self.uniform.validate()?;
        self.radar.validate()?;
        self.lidar.validate()
    }
}

/// The context a GM-PHD variant attaches to a scan from `kind` at `pose`.
/// Returns `None` for JPDA, which carries its own constants.
///
/// Radar clutter constants are per metre per radian and are converted to a
/// Cartesian intensity around the sensor.
pub fn context_for(
    variant: Variant,
    kind: SensorKind,
    pose: SensorPose,
    config: &TrackerConfig,
) -> Option<Arc<dyn DetectorContext>> {
    let uniform: Arc<dyn DetectorContext> = Arc::new(UniformContext::new(config.uniform));
    let coverage: Arc<dyn DetectorContext> = match kind {
        SensorKind::Radar => Arc::new(RadarContext::new(config.radar.at(pose))),
        SensorKind::Lidar => Arc::new(LidarContext::new(config.lidar.at(pose))),
    };
    let inner = match variant {
        Variant::Jpda => return None,
        Variant::GmphdUniform | Variant::GmphdRadarOnly => uniform,
        Variant::GmphdPdAware => Arc::new(SplitContext {
            detection: coverage,
            clutter: uniform,
        }),
        Variant::GmphdContextAware => coverage,
    };
    Some(match kind {
        SensorKind::Radar => Arc::new(RangeBearingClutter::new(pose.position, inner)),
        SensorKind::Lidar => inner,
    })
}

/// Copies of the scans a variant processes, with that variant's contexts attached.
pub fn wire(stream: &[SensorScan], variant: Variant, config: &TrackerConfig) -> Vec<SensorScan> {
    stream
        .iter()
        .filter(|s| variant.processes(s.kind))
        .map(|s| SensorScan {
            context: context_for(variant, s.kind, s.pose, config),
            ..s.clone()
        })
        .collect()
}

/// Runs one tracker variant over a stream, reporting after every processed scan.
pub fn run_tracker(stream: &[SensorScan], variant: Variant, config: &TrackerConfig) -> Result<Vec<ScanOutput>> {
    let scans = wire(stream, variant, config);
    let output = |s: &SensorScan, estimates| ScanOutput {
        time: s.timestamp,
        kind: s.kind,
        estimates,
    };
    match variant {
        Variant::Jpda => {
            let mut tracker = JpdaTracker::new(config.jpda, config.motion)?;
            scans.iter().map(|s| Ok(output(s, tracker.step(s)?))).collect()
        }
        _ => {
            let mut tracker = GmphdTracker::new(config.gmphd, config.motion)?;
            scans.iter().map(|s| Ok(output(s, tracker.step(s)?))).collect()
        }
    }
}

/// A simulated scenario: its scan stream and ground truth.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub scenario: String,
    pub seed: u64,
    pub stream: Vec<SensorScan>,
    pub truth: Vec<GroundTruthTrack>,
}

pub fn simulate(scenario: &str, seed: u64) -> Result<Simulation> {
    let s = scenario_by_name(scenario, seed)?;
    Ok(Simulation {
        scenario: scenario.to_string(),
        seed,
        stream: simulate_stream(&s)?,
        truth: s.truth(),
    })
}

/// Tracks and evaluates one variant on a simulation.
pub fn run_case(
    sim: &Simulation,
    variant: Variant,
    tracker: &TrackerConfig,
    eval: &EvalConfig,
) -> Result<SequenceMetrics> {
    let outputs = run_tracker(&sim.stream, variant, tracker)?;
    evaluate_sequence(&sim.truth, &outputs, &radar_times(&sim.stream), eval)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmphd::{prune_merge, update};
    use crate::gmphd::GaussianMixture;
    use crate::types::{
        Detection, GaussianComponent, Label, LabelAllocator, Position, SensorId, StateCovariance, StateEstimate,
        StateVector, Timestamp,
    };
    use nalgebra::Matrix2;

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
            assert_eq!(serde_json::to_string(&v).unwrap(), format!("\"{}\"", v.name()));
        }
        assert!(matches!("kalman".parse::<Variant>(), Err(Error::UnknownVariant(_))));
    }

    /// Two in-coverage points per sensor, in different clutter regimes.
    fn points(kind: SensorKind) -> [Position; 2] {
        match kind {
            SensorKind::Radar => [Position::new(300.0, 2.0), Position::new(1200.0, 1.0)],
            SensorKind::Lidar => [Position::new(30.0, 2.0), Position::new(60.0, 1.0)],
        }
    }

    fn scan(kind: SensorKind) -> SensorScan {
        let area = (kind == SensorKind::Lidar).then_some(4.0);
        let [a, b] = points(kind);
        SensorScan {
            sensor_id: SensorId::new("s"),
            kind,
            timestamp: Timestamp::ZERO,
            pose: SensorPose::default(),
            detections: vec![
                Detection::new(a, Matrix2::identity(), area, SensorId::new("s")).unwrap(),
                Detection::new(b, Matrix2::identity(), area, SensorId::new("s")).unwrap(),
            ],
            context: None,
        }
    }

    #[test]
    fn radar_only_drops_lidar_scans() {
        let stream = vec![scan(SensorKind::Radar), scan(SensorKind::Lidar), scan(SensorKind::Radar)];
        let cfg = TrackerConfig::default();
        assert_eq!(wire(&stream, Variant::GmphdRadarOnly, &cfg).len(), 2);
        for v in Variant::ALL {
            if v != Variant::GmphdRadarOnly {
                assert_eq!(wire(&stream, v, &cfg).len(), 3);
            }
        }
    }

    /// Swapping contexts is the only difference between variants: running the
    /// shared update on a one-scan stream with each wiring matches running it
    /// with a hand-built context of the same kind.
    #[test]
    fn variants_differ_only_by_context() {
        let cfg = TrackerConfig::default();
        let prior = |kind| {
            let comps = points(kind)
                .iter()
                .enumerate()
                .map(|(i, p)| GaussianComponent {
                    weight: 0.9,
                    state: StateEstimate::new(StateVector::new(p.x, 0.0, p.y, 0.0), StateCovariance::identity() * 4.0)
                        .unwrap(),
                    label: Label(i as u64 + 1),
                })
                .collect();
            GaussianMixture::new(comps, Timestamp::ZERO).unwrap()
        };
        let mut mixtures = Vec::new();
        for kind in [SensorKind::Radar, SensorKind::Lidar] {
            for v in [Variant::GmphdUniform, Variant::GmphdPdAware, Variant::GmphdContextAware] {
                let wired = wire(&[scan(kind)], v, &cfg).remove(0);
                let hand: Arc<dyn DetectorContext> = match (v, kind) {
                    (Variant::GmphdUniform, SensorKind::Lidar) => Arc::new(UniformContext::new(cfg.uniform)),
                    (Variant::GmphdContextAware, SensorKind::Lidar) => Arc::new(LidarContext::new(cfg.lidar)),
                    (Variant::GmphdPdAware, SensorKind::Lidar) => Arc::new(SplitContext {
                        detection: Arc::new(LidarContext::new(cfg.lidar)),
                        clutter: Arc::new(UniformContext::new(cfg.uniform)),
                    }),
                    (Variant::GmphdUniform, SensorKind::Radar) => Arc::new(RangeBearingClutter::new(
                        Position::zeros(),
                        Arc::new(UniformContext::new(cfg.uniform)),
                    )),
                    (Variant::GmphdContextAware, SensorKind::Radar) => Arc::new(RangeBearingClutter::new(
                        Position::zeros(),
                        Arc::new(RadarContext::new(cfg.radar)),
                    )),
                    _ => Arc::new(RangeBearingClutter::new(
                        Position::zeros(),
                        Arc::new(SplitContext {
                            detection: Arc::new(RadarContext::new(cfg.radar)),
                            clutter: Arc::new(UniformContext::new(cfg.uniform)),
                        }),
                    )),
                };
                let by_hand = SensorScan {
                    context: Some(hand),
                    ..scan(kind)
                };
                let a = update(&prior(kind), &wired, &cfg.gmphd, &mut LabelAllocator::starting_at(10)).unwrap();
                let b = update(&prior(kind), &by_hand, &cfg.gmphd, &mut LabelAllocator::starting_at(10)).unwrap();
                assert_eq!(a, b);
                mixtures.push(prune_merge(&a, &cfg.gmphd).unwrap());
            }
        }
        // Uniform and context-aware wirings disagree on the same input.
        assert_ne!(mixtures[0], mixtures[2]);
        assert_ne!(mixtures[3], mixtures[5]);
    }

    #[test]
    fn jpda_scans_carry_no_context() {
        let cfg = TrackerConfig::default();
        assert!(wire(&[scan(SensorKind::Radar)], Variant::Jpda, &cfg)[0].context.is_none());
    }
}
