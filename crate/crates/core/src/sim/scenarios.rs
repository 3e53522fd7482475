//! Built-in scenarios: a mixed-range traffic scene around a near-stationary
//! ego, and a close-range formation with blind-sector occlusion.

use std::f64::consts::PI;

use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Scenario, SensorSpec};
use crate::error::{Error, Result};
use crate::types::{GroundTruthTrack, Label, Position, Timestamp, TruthPoint};

pub const SCENARIO_NAMES: [&str; 2] = ["one", "two"];

/// Truth sampling interval (s); positions are interpolated linearly between samples.
const SAMPLE_DT: f64 = 0.5;

pub fn scenario_by_name(name: &str, seed: u64) -> Result<Scenario> {
    match name {
        "one" => Ok(scenario_one(seed)),
        "two" => Ok(scenario_two(seed)),
        other => Err(Error::UnknownScenario(other.to_string())),
    }
}

fn polar(range: f64, bearing_deg: f64) -> Position {
    let b = bearing_deg.to_radians();
    Position::new(range * b.cos(), range * b.sin())
}

/// Samples `f` on `[t0, t1]`; velocity by central difference.
fn sampled(label: u64, t0: f64, t1: f64, f: impl Fn(f64) -> Position) -> GroundTruthTrack {
    let h = 1e-3;
    let mut points = Vec::new();
    let n = ((t1 - t0) / SAMPLE_DT).ceil() as usize;
    for k in 0..=n {
        let t = (t0 + k as f64 * SAMPLE_DT).min(t1);
        if points.last().is_some_and(|p: &TruthPoint| p.time.secs() >= t) {
            continue;
        }
        points.push(TruthPoint {
            time: Timestamp::from_secs(t),
            position: f(t),
            velocity: (f(t + h) - f(t - h)) / (2.0 * h),
        });
    }
    GroundTruthTrack::new(Label(label), points).expect("sampled times increase")
}

fn jitter(rng: &mut ChaCha8Rng, half_width: f64) -> f64 {
    rng.random_range(-half_width..=half_width)
}

/// Mixed-range traffic, 480 s. The ego barely moves. Two vessels close from
/// about 1.5 km to 300 m, a third approaches, circles the ego at about 30 m
/// and leaves. Four static markers sit at 150, 350, 600 and 1100 m, all
/// beyond lidar range.
pub fn scenario_one(seed: u64) -> Scenario {
    let duration = 480.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let drift = Vector2::new(0.01, 0.005);
    let ego_at = move |t: f64| Position::zeros() + drift * t;
    let ego = sampled(0, 0.0, duration, ego_at);

    let straight = |a: Position, b: Position| move |t: f64| a + (b - a) * (t / duration);
    let t1 = straight(
        polar(1500.0 * (1.0 + jitter(&mut rng, 0.03)), 40.0 + jitter(&mut rng, 3.0)),
        polar(300.0 * (1.0 + jitter(&mut rng, 0.03)), 60.0 + jitter(&mut rng, 3.0)),
    );
    let t2 = straight(
        polar(1450.0 * (1.0 + jitter(&mut rng, 0.03)), -20.0 + jitter(&mut rng, 3.0)),
        polar(320.0 * (1.0 + jitter(&mut rng, 0.03)), -70.0 + jitter(&mut rng, 3.0)),
    );

    // Approach, loop, depart; expressed relative to the ego. The loop makes
    // about three turns and the target leaves well clear of the radar's
    // stern blind sector.
    let entry = (120.0 + jitter(&mut rng, 5.0)).to_radians();
    let exit_target = (30.0 + jitter(&mut rng, 10.0)).to_radians();
    let radius = 30.0 + jitter(&mut rng, 2.0);
    let (t_loop, t_leave) = (120.0, 300.0);
    let omega = (exit_target - entry + 6.0 * PI) / (t_leave - t_loop);
    let speed = omega * radius;
    let exit = entry + omega * (t_leave - t_loop);
    let start_range = radius + speed * t_loop;
    let unit = |a: f64| Position::new(a.cos(), a.sin());
    let t3 = move |t: f64| {
        let rel = if t < t_loop {
            unit(entry) * (start_range - speed * t)
        } else if t < t_leave {
            unit(entry + omega * (t - t_loop)) * radius
        } else {
            unit(exit) * (radius + speed * (t - t_leave))
        };
        ego_at(t) + rel
    };

    Scenario {
        name: "one".into(),
        duration,
        ego,
        ego_heading: 0.0,
        targets: vec![
            sampled(1, 0.0, duration, t1),
            sampled(2, 0.0, duration, t2),
            sampled(3, 0.0, duration, t3),
        ],
        statics: vec![
            polar(150.0, -70.0),
            polar(350.0, 45.0),
            polar(600.0, 10.0),
            polar(1100.0, -100.0),
        ],
        statics_as_truth: true,
        sensors: vec![SensorSpec::radar(), SensorSpec::lidar()],
        seed,
    }
}

/// Close-range formation, 360 s. The ego steams along +x at 3 m/s with a
/// companion holding about 30 m off its port side. One vessel weaves back and
/// forth through the stern blind sector at about 250 m; two more manoeuvre
/// at medium range.
pub fn scenario_two(seed: u64) -> Scenario {
    let duration = 360.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let ego_speed = 3.0;
    let ego_at = move |t: f64| Position::new(ego_speed * t, 0.0);
    let ego = sampled(0, 0.0, duration, ego_at);

    let phase = jitter(&mut rng, PI);
    let companion = move |t: f64| ego_at(t) + Position::new(0.0, 30.0 + 3.0 * (2.0 * PI * t / 60.0 + phase).sin());

    let amp = (50.0 + jitter(&mut rng, 4.0)).to_radians();
    let period = 180.0 * (1.0 + jitter(&mut rng, 0.05));
    let r0 = 250.0 + jitter(&mut rng, 20.0);
    let weaver = move |t: f64| {
        let bearing = PI + amp * (2.0 * PI * t / period).sin();
        let range = r0 + 30.0 * (2.0 * PI * t / 97.0).sin();
        ego_at(t) + Position::new(bearing.cos(), bearing.sin()) * range
    };

    let lateral = 76.0 * (1.0 + jitter(&mut rng, 0.1));
    let y0 = -350.0 + jitter(&mut rng, 20.0);
    let snake = move |t: f64| Position::new(500.0 + 3.5 * t, y0 + lateral * (1.0 - (2.0 * PI * t / 120.0).cos()));

    let start = Position::new(1100.0 + jitter(&mut rng, 30.0), 600.0 + jitter(&mut rng, 30.0));
    let heading = (-123.7 + jitter(&mut rng, 3.0)).to_radians();
    let crosser = move |t: f64| start + Position::new(heading.cos(), heading.sin()) * (3.6 * t);

    Scenario {
        name: "two".into(),
        duration,
        ego,
        ego_heading: 0.0,
        targets: vec![
            sampled(1, 0.0, duration, companion),
            sampled(2, 0.0, duration, weaver),
            sampled(3, 0.0, duration, snake),
            sampled(4, 0.0, duration, crosser),
        ],
        statics: vec![Position::new(400.0, 70.0), Position::new(800.0, -55.0)],
        statics_as_truth: true,
        sensors: vec![SensorSpec::radar(), SensorSpec::lidar()],
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::{relative_range_bearing, RadarContextConfig};

    fn closest_approach(s: &Scenario, target: usize) -> f64 {
        (0..=(s.duration as usize))
            .map(|t| {
                let time = Timestamp::from_secs(t as f64);
                let pose = s.ego_pose(time);
                relative_range_bearing(&pose, &s.targets[target].at(time).unwrap().position).0
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn scenario_one_shape() {
        for seed in 0..5 {
            let s = scenario_one(seed);
            assert_eq!(s.targets.len(), 3);
            assert!(!s.statics.is_empty());
            assert_eq!(s.duration, 480.0);
            let closest = closest_approach(&s, 2);
            assert!((closest - 30.0).abs() < 3.0, "{closest}");
            for t in &s.targets[..2] {
                let start = t.at(Timestamp::ZERO).unwrap().position.norm();
                let end = t.at(Timestamp::from_secs(480.0)).unwrap().position.norm();
                assert!(start > 1350.0 && start < 1600.0 && end > 250.0 && end < 350.0);
            }
        }
        assert_eq!(scenario_one(7), scenario_one(7));
        assert_ne!(scenario_one(7), scenario_one(8));
    }

    #[test]
    fn scenario_two_shape() {
        let radar = RadarContextConfig::default();
        for seed in 0..5 {
            let s = scenario_two(seed);
            for t in 0..=360 {
                let time = Timestamp::from_secs(t as f64);
                let d = (s.targets[0].at(time).unwrap().position - s.ego.at(time).unwrap().position).norm();
                assert!((d - 30.0).abs() <= 5.0);
            }
            // Count entries of the weaver into the blind sector.
            let mut entries = 0;
            let mut dwell = 0;
            let mut inside = false;
            for k in 0..=3600 {
                let time = Timestamp::from_secs(k as f64 * 0.1);
                let pose = s.ego_pose(time);
                let (_, b) = relative_range_bearing(&pose, &s.targets[1].at(time).unwrap().position);
                let blind = radar.is_blind(b);
                if blind && !inside {
                    entries += 1;
                }
                if blind {
                    dwell += 1;
                }
                inside = blind;
            }
            assert!(entries >= 2, "{entries}");
            assert!(dwell > 0);
        }
        assert_eq!(scenario_two(3), scenario_two(3));
    }

    #[test]
    fn unknown_scenario_is_an_error() {
        assert!(matches!(scenario_by_name("three", 1), Err(Error::UnknownScenario(_))));
        assert_eq!(scenario_by_name("two", 4).unwrap(), scenario_two(4));
    }
}
