//! Detector contexts: per-scan evaluators of detection probability and
//! clutter intensity.
//!
//! A tracker never holds `P_D` or `λ` as configuration. Every scan carries a
//! [`DetectorContext`] and the tracker asks it, during hypothesis formation,
//! for the detection probability of each predicted state and the clutter
//! intensity at each detection. Swapping the context is the only thing that
//! distinguishes a uniform tracker from a coverage-aware one.
//!
//! Intensities returned to trackers are per m² in the Cartesian measurement
//! space. The radar models are specified per metre of range per radian of
//! bearing, its native measurement space; [`RangeBearingClutter`] converts
//! them.

use std::f64::consts::PI;
use std::fmt::Debug;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Detection, Position, StateEstimate};

/// Sensor position and heading. Heading is measured counterclockwise from
/// the +x axis and kept in `(-π, π]`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SensorPose {
    pub position: Position,
    heading: f64,
}

impl SensorPose {
    pub fn new(position: Position, heading: f64) -> Self {
        Self {
            position,
            heading: wrap_angle(heading),
        }
    }

    pub fn heading(&self) -> f64 {
        self.heading
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(angle: f64) -> f64 {
    if angle > -PI && angle <= PI {
        return angle;
    }
    let a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a - 2.0 * PI
    } else {
        a
    }
}

/// Range and heading-relative bearing (0 dead ahead, `(-π, π]`) of `point`.
/// A point coincident with the sensor yields `(0, 0)`.
pub fn relative_range_bearing(pose: &SensorPose, point: &Position) -> (f64, f64) {
    let d = point - pose.position;
    let range = d.norm();
    if range == 0.0 {
        return (0.0, 0.0);
    }
    (range, wrap_angle(d.y.atan2(d.x) - pose.heading))
}

/// Observability of one sensor at one scan.
///
/// Both queries must be pure for a fixed context.
pub trait DetectorContext: Send + Sync + Debug {
    /// Probability in `[0, 1]` that the sensor detects a target in `state`.
    fn detection_probability(&self, state: &StateEstimate) -> f64;

    /// Clutter intensity (m⁻²) at the detection.
    fn clutter_intensity(&self, detection: &Detection) -> Result<f64>;
}

/// Evaluates a context's detection probability, rejecting values outside `[0, 1]`.
pub fn detection_probability(context: &dyn DetectorContext, state: &StateEstimate) -> Result<f64> {
    let pd = context.detection_probability(state);
    if (0.0..=1.0).contains(&pd) {
        Ok(pd)
    } else {
        Err(Error::InvalidProbability(pd))
    }
}

/// Evaluates a context's clutter intensity, rejecting negative or non-finite values.
pub fn clutter_intensity(context: &dyn DetectorContext, detection: &Detection) -> Result<f64> {
    let lambda = context.clutter_intensity(detection)?;
    if lambda >= 0.0 && lambda.is_finite() {
        Ok(lambda)
    } else {
        Err(Error::InvalidClutterIntensity(lambda))
    }
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{name} must lie in [0, 1], got {p}")))
    }
}

fn check_non_negative(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{name} must be non-negative, got {v}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LidarContextConfig {
    #[serde(skip)]
    pub pose: SensorPose,
    pub r_reliable: f64,
    pub r_max: f64,
    pub pd_reliable: f64,
    pub pd_degraded: f64,
    /// Segmentation areas below this (m²) are treated as clutter-prone.
    pub area_threshold: f64,
    pub lambda_small: f64,
    pub lambda_large: f64,
}

impl Default for LidarContextConfig {
    fn default() -> Self {
        Self {
            pose: SensorPose::default(),
            r_reliable: 50.0,
            r_max: 80.0,
            pd_reliable: 0.95,
            pd_degraded: 0.2,
            area_threshold: 10.0,
            lambda_small: 1e-1,
            lambda_large: 1e-3,
        }
    }
}

impl LidarContextConfig {
    pub fn at(self, pose: SensorPose) -> Self {
        Self { pose, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.r_reliable && self.r_reliable < self.r_max) {
            return Err(Error::InvalidConfig(format!(
                "lidar ranges must satisfy 0 < r_reliable < r_max, got {} and {}",
                self.r_reliable, self.r_max
            )));
        }
        check_probability("lidar pd_reliable", self.pd_reliable)?;
        check_probability("lidar pd_degraded", self.pd_degraded)?;
        check_non_negative("lidar area_threshold", self.area_threshold)?;
        check_non_negative("lidar lambda_small", self.lambda_small)?;
        check_non_negative("lidar lambda_large", self.lambda_large)
    }
}

/// Range-banded lidar detection probability.
pub fn lidar_pd(r: f64, config: &LidarContextConfig) -> f64 {
    if r > 0.0 && r < config.r_reliable {
        config.pd_reliable
    } else if r >= config.r_reliable && r < config.r_max {
        config.pd_degraded
    } else {
        0.0
    }
}

/// Area-dependent lidar clutter intensity (m⁻²).
pub fn lidar_clutter(detection: &Detection, config: &LidarContextConfig) -> Result<f64> {
    let area = detection.extent_area.ok_or(Error::MissingExtentArea)?;
    Ok(if area < config.area_threshold {
        config.lambda_small
    } else {
        config.lambda_large
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadarContextConfig {
    #[serde(skip)]
    pub pose: SensorPose,
    pub r_min: f64,
    pub r_max: f64,
    pub pd_in: f64,
    /// Centre of the blind wedge as a heading-relative bearing (rad).
    pub blind_center: f64,
    /// Half-width of the blind wedge (rad).
    pub blind_half_width: f64,
    pub r_clutter_knee: f64,
    /// Intensity per metre of range per radian of bearing inside the knee.
    pub lambda_near: f64,
    /// Intensity per metre of range per radian of bearing beyond the knee.
    pub lambda_far: f64,
}

impl Default for RadarContextConfig {
    fn default() -> Self {
        Self {
            pose: SensorPose::default(),
            r_min: 50.0,
            r_max: 1612.0,
            pd_in: 0.4,
            blind_center: PI,
            blind_half_width: 32.5f64.to_radians(),
            r_clutter_knee: 1000.0,
            lambda_near: 1e-3,
            lambda_far: 1e-2,
        }
    }
}

impl RadarContextConfig {
    pub fn at(self, pose: SensorPose) -> Self {
        Self { pose, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_min < self.r_clutter_knee && self.r_clutter_knee < self.r_max) {
            return Err(Error::InvalidConfig(format!(
                "radar ranges must satisfy r_min < r_clutter_knee < r_max, got {}, {}, {}",
                self.r_min, self.r_clutter_knee, self.r_max
            )));
        }
        if !(self.blind_half_width > 0.0 && self.blind_half_width < PI) {
            return Err(Error::InvalidConfig(format!(
                "radar blind_half_width must lie in (0, π), got {}",
                self.blind_half_width
            )));
        }
        check_probability("radar pd_in", self.pd_in)?;
        check_non_negative("radar lambda_near", self.lambda_near)?;
        check_non_negative("radar lambda_far", self.lambda_far)
    }

    /// Whether a heading-relative bearing falls strictly inside the blind wedge.
    pub fn is_blind(&self, bearing: f64) -> bool {
        wrap_angle(bearing - self.blind_center).abs() < self.blind_half_width
    }
}

/// Radar detection probability: constant inside the range annulus, zero in
/// the blind wedge (its edge counts as covered) and outside the annulus.
pub fn radar_pd(r: f64, bearing: f64, config: &RadarContextConfig) -> f64 {
    if r > config.r_min && r < config.r_max && !config.is_blind(bearing) {
        config.pd_in
    } else {
        0.0
    }
}

/// Range-dependent radar clutter intensity per metre per radian.
pub fn radar_clutter(detection: &Detection, config: &RadarContextConfig) -> f64 {
    let (r, _) = relative_range_bearing(&config.pose, &detection.position);
    if r < config.r_clutter_knee {
        config.lambda_near
    } else {
        config.lambda_far
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UniformContextConfig {
    pub pd: f64,
    pub lambda: f64,
}

impl Default for UniformContextConfig {
    fn default() -> Self {
        Self { pd: 0.4, lambda: 1e-3 }
    }
}

impl UniformContextConfig {
    pub fn validate(&self) -> Result<()> {
        check_probability("uniform pd", self.pd)?;
        check_non_negative("uniform lambda", self.lambda)
    }
}

/// Globally constant observability.
#[derive(Clone, Debug, PartialEq)]
pub struct UniformContext {
    pub config: UniformContextConfig,
}

impl UniformContext {
    pub fn new(config: UniformContextConfig) -> Self {
        Self { config }
    }
}

impl DetectorContext for UniformContext {
    fn detection_probability(&self, _state: &StateEstimate) -> f64 {
        self.config.pd
    }

    fn clutter_intensity(&self, _detection: &Detection) -> Result<f64> {
        Ok(self.config.lambda)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LidarContext {
    pub config: LidarContextConfig,
}

impl LidarContext {
    pub fn new(config: LidarContextConfig) -> Self {
        Self { config }
    }
}

impl DetectorContext for LidarContext {
    fn detection_probability(&self, state: &StateEstimate) -> f64 {
        let (r, _) = relative_range_bearing(&self.config.pose, &state.position());
        lidar_pd(r, &self.config)
    }

    fn clutter_intensity(&self, detection: &Detection) -> Result<f64> {
        lidar_clutter(detection, &self.config)
    }
}

/// Radar observability. Its clutter intensity is in range-bearing units;
/// wrap it in [`RangeBearingClutter`] before handing it to a tracker.
#[derive(Clone, Debug, PartialEq)]
pub struct RadarContext {
    pub config: RadarContextConfig,
}

impl RadarContext {
    pub fn new(config: RadarContextConfig) -> Self {
        Self { config }
    }
}

impl DetectorContext for RadarContext {
    fn detection_probability(&self, state: &StateEstimate) -> f64 {
        let (r, bearing) = relative_range_bearing(&self.config.pose, &state.position());
        radar_pd(r, bearing, &self.config)
    }

    fn clutter_intensity(&self, detection: &Detection) -> Result<f64> {
        Ok(radar_clutter(detection, &self.config))
    }
}

/// Takes detection probability from one context and clutter intensity from another.
#[derive(Clone, Debug)]
pub struct SplitContext {
    pub detection: Arc<dyn DetectorContext>,
    pub clutter: Arc<dyn DetectorContext>,
}

impl DetectorContext for SplitContext {
    fn detection_probability(&self, state: &StateEstimate) -> f64 {
        self.detection.detection_probability(state)
    }

    fn clutter_intensity(&self, detection: &Detection) -> Result<f64> {
        self.clutter.clutter_intensity(detection)
    }
}

/// Re-expresses an inner context's clutter intensity, given per metre of
/// range per radian of bearing around `origin`, as a Cartesian intensity per
/// m² (divide by range; the polar area element is `r dr dθ`). Range is
/// floored at `min_range` metres.
#[derive(Clone, Debug)]
pub struct RangeBearingClutter {
    pub origin: Position,
    pub min_range: f64,
    pub inner: Arc<dyn DetectorContext>,
}

impl RangeBearingClutter {
    pub fn new(origin: Position, inner: Arc<dyn DetectorContext>) -> Self {
        Self {
            origin,
            min_range: 1.0,
            inner,
        }
    }
}

impl DetectorContext for RangeBearingClutter {
    fn detection_probability(&self, state: &StateEstimate) -> f64 {
        self.inner.detection_probability(state)
    }

    fn clutter_intensity(&self, detection: &Detection) -> Result<f64> {
        let r = (detection.position - self.origin).norm().max(self.min_range);
        Ok(self.inner.clutter_intensity(detection)? / r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{SensorId, StateCovariance, StateVector};
    use nalgebra::Matrix2;
    use proptest::prelude::*;

    fn state_at(x: f64, y: f64) -> StateEstimate {
        StateEstimate::new(StateVector::new(x, 0.0, y, 0.0), StateCovariance::identity()).unwrap()
    }

    fn detection_at(x: f64, y: f64, area: Option<f64>) -> Detection {
        Detection::new(Position::new(x, y), Matrix2::identity(), area, SensorId::new("s")).unwrap()
    }

    #[test]
    fn range_bearing_examples() {
        let origin = SensorPose::new(Position::zeros(), 0.0);
        assert_eq!(relative_range_bearing(&origin, &Position::new(100.0, 0.0)), (100.0, 0.0));
        assert_eq!(relative_range_bearing(&origin, &Position::new(-100.0, 0.0)), (100.0, PI));
        let north = SensorPose::new(Position::zeros(), PI / 2.0);
        let (r, b) = relative_range_bearing(&north, &Position::new(100.0, 0.0));
        assert_eq!(r, 100.0);
        assert!((b + PI / 2.0).abs() < 1e-15);
        assert_eq!(relative_range_bearing(&origin, &Position::zeros()), (0.0, 0.0));
    }

    #[test]
    fn heading_is_normalized() {
        assert_eq!(SensorPose::new(Position::zeros(), -PI).heading(), PI);
        assert!((SensorPose::new(Position::zeros(), 3.0 * PI / 2.0).heading() + PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn lidar_pd_bands() {
        let c = LidarContextConfig::default();
        assert_eq!(lidar_pd(30.0, &c), 0.95);
        assert_eq!(lidar_pd(49.999, &c), 0.95);
        assert_eq!(lidar_pd(50.0, &c), 0.2);
        assert_eq!(lidar_pd(79.999, &c), 0.2);
        assert_eq!(lidar_pd(80.0, &c), 0.0);
        assert_eq!(lidar_pd(0.0, &c), 0.0);
    }

    #[test]
    fn lidar_clutter_by_area() {
        let c = LidarContextConfig::default();
        assert_eq!(lidar_clutter(&detection_at(1.0, 0.0, Some(5.0)), &c).unwrap(), 1e-1);
        assert_eq!(lidar_clutter(&detection_at(1.0, 0.0, Some(10.0)), &c).unwrap(), 1e-3);
        assert_eq!(lidar_clutter(&detection_at(1.0, 0.0, Some(50.0)), &c).unwrap(), 1e-3);
        assert!(matches!(
            lidar_clutter(&detection_at(1.0, 0.0, None), &c),
            Err(Error::MissingExtentArea)
        ));
    }

    #[test]
    fn radar_pd_annulus_and_blind_sector() {
        let c = RadarContextConfig::default();
        assert_eq!(radar_pd(500.0, 0.0, &c), 0.4);
        assert_eq!(radar_pd(30.0, 0.0, &c), 0.0);
        assert_eq!(radar_pd(50.0, 0.0, &c), 0.0);
        assert_eq!(radar_pd(1612.0, 0.0, &c), 0.0);
        assert_eq!(radar_pd(500.0, PI, &c), 0.0);
        assert_eq!(radar_pd(500.0, -PI + 0.1, &c), 0.0);
        assert_eq!(radar_pd(500.0, PI - 33.0f64.to_radians(), &c), 0.4);
    }

    #[test]
    fn blind_sector_edge_counts_as_covered() {
        let bearing = PI - 32.5f64.to_radians();
        let offset = wrap_angle(bearing - PI).abs();
        let c = RadarContextConfig {
            blind_half_width: offset,
            ..RadarContextConfig::default()
        };
        assert_eq!(radar_pd(500.0, bearing, &c), 0.4);
        assert_eq!(radar_pd(500.0, bearing + 1e-9, &c), 0.0);
    }

    #[test]
    fn radar_clutter_by_range() {
        let c = RadarContextConfig::default();
        assert_eq!(radar_clutter(&detection_at(500.0, 0.0, None), &c), 1e-3);
        assert_eq!(radar_clutter(&detection_at(1000.0, 0.0, None), &c), 1e-2);
        assert_eq!(radar_clutter(&detection_at(0.0, -1500.0, None), &c), 1e-2);
    }

    #[test]
    fn context_queries_at_state_mean() {
        let uniform = UniformContext::new(UniformContextConfig::default());
        assert_eq!(detection_probability(&uniform, &state_at(1e4, -3.0)).unwrap(), 0.4);
        let lidar = LidarContext::new(LidarContextConfig::default());
        assert_eq!(detection_probability(&lidar, &state_at(0.0, 30.0)).unwrap(), 0.95);
        let radar = RadarContext::new(RadarContextConfig::default());
        assert_eq!(detection_probability(&radar, &state_at(-500.0, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn contexts_follow_the_sensor_pose() {
        let pose = SensorPose::new(Position::new(100.0, 100.0), PI / 2.0);
        let radar = RadarContext::new(RadarContextConfig::default().at(pose));
        // 500 m south of a north-facing sensor is dead astern.
        assert_eq!(radar.detection_probability(&state_at(100.0, -400.0)), 0.0);
        assert_eq!(radar.detection_probability(&state_at(100.0, 600.0)), 0.4);
    }

    #[test]
    fn range_bearing_clutter_divides_by_range() {
        let inner: Arc<dyn DetectorContext> = Arc::new(RadarContext::new(RadarContextConfig::default()));
        let ctx = RangeBearingClutter::new(Position::zeros(), inner);
        assert_eq!(ctx.clutter_intensity(&detection_at(500.0, 0.0, None)).unwrap(), 1e-3 / 500.0);
        assert_eq!(ctx.clutter_intensity(&detection_at(0.0, 2000.0, None)).unwrap(), 1e-2 / 2000.0);
        assert_eq!(ctx.clutter_intensity(&detection_at(0.0, 0.0, None)).unwrap(), 1e-3);
    }

    #[test]
    fn split_context_combines_models() {
        let ctx = SplitContext {
            detection: Arc::new(LidarContext::new(LidarContextConfig::default())),
            clutter: Arc::new(UniformContext::new(UniformContextConfig::default())),
        };
        assert_eq!(ctx.detection_probability(&state_at(10.0, 0.0)), 0.95);
        assert_eq!(ctx.clutter_intensity(&detection_at(1.0, 1.0, Some(1.0))).unwrap(), 1e-3);
    }

    #[derive(Debug)]
    struct Broken;
    impl DetectorContext for Broken {
        fn detection_probability(&self, _: &StateEstimate) -> f64 {
            1.5
        }
        fn clutter_intensity(&self, _: &Detection) -> Result<f64> {
            Ok(-1.0)
        }
    }

    #[test]
    fn out_of_range_context_values_are_errors() {
        assert!(matches!(detection_probability(&Broken, &state_at(0.0, 0.0)), Err(Error::InvalidProbability(_))));
        assert!(matches!(
            clutter_intensity(&Broken, &detection_at(0.0, 0.0, None)),
            Err(Error::InvalidClutterIntensity(_))
        ));
    }

    #[test]
    fn default_configs_validate() {
        LidarContextConfig::default().validate().unwrap();
        RadarContextConfig::default().validate().unwrap();
        UniformContextConfig::default().validate().unwrap();
        let bad = LidarContextConfig { r_reliable: 90.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn radar_pd_is_symmetric_about_astern(r in 0.0f64..2000.0, bearing in -PI..PI) {
            let c = RadarContextConfig::default();
            prop_assert_eq!(radar_pd(r, bearing, &c), radar_pd(r, -bearing, &c));
        }

        #[test]
        fn all_contexts_return_valid_values(
            x in -3000.0f64..3000.0, y in -3000.0f64..3000.0,
            heading in -PI..PI, area in 0.0f64..200.0,
        ) {
            let pose = SensorPose::new(Position::new(5.0, -7.0), heading);
            let contexts: Vec<Arc<dyn DetectorContext>> = vec![
                Arc::new(UniformContext::new(UniformContextConfig::default())),
                Arc::new(LidarContext::new(LidarContextConfig::default().at(pose))),
                Arc::new(RangeBearingClutter::new(
                    pose.position,
                    Arc::new(RadarContext::new(RadarContextConfig::default().at(pose))),
                )),
            ];
            for ctx in contexts {
                let pd = detection_probability(ctx.as_ref(), &state_at(x, y)).unwrap();
                prop_assert!((0.0..=1.0).contains(&pd));
                let lambda = clutter_intensity(ctx.as_ref(), &detection_at(x, y, Some(area))).unwrap();
                prop_assert!(lambda >= 0.0);
            }
        }
    }

    #[test]
    fn uniform_context_is_constant() {
        use rand::{Rng, SeedableRng};
        let ctx = UniformContext::new(UniformContextConfig { pd: 0.37, lambda: 2e-4 });
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let (x, y) = (rng.random_range(-1e4..1e4), rng.random_range(-1e4..1e4));
            assert_eq!(ctx.detection_probability(&state_at(x, y)), 0.37);
            let area = if rng.random_bool(0.5) { Some(rng.random_range(0.0..100.0)) } else { None };
            assert_eq!(ctx.clutter_intensity(&detection_at(x, y, area)).unwrap(), 2e-4);
        }
    }
}
