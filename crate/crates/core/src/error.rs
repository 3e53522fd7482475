use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("covariance matrix is not symmetric positive definite")]
    NotPositiveDefinite,

    #[error("negative time step of {0} s (scans must be processed in timestamp order)")]
    NegativeTimeStep(f64),

    #[error("scan from sensor `{sensor}` at t={time} s carries no detector context")]
    MissingContext { sensor: String, time: f64 },

    #[error("lidar detection carries no extent area")]
    MissingExtentArea,

    #[error("detection probability {0} is outside [0, 1]")]
    InvalidProbability(f64),

    #[error("clutter intensity {0} is negative or not finite")]
    InvalidClutterIntensity(f64),

    #[error(
        "association cluster of {tracks} tracks and {detections} detections exceeds the \
         hypothesis cap of {cap}; tighten the gate"
    )]
    HypothesisCap {
        tracks: usize,
        detections: usize,
        cap: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown scenario `{0}` (expected `one` or `two`)")]
    UnknownScenario(String),

    #[error("unknown tracker variant `{0}`")]
    UnknownVariant(String),

    #[error("{}: line {line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("cannot aggregate an empty series")]
    EmptySeries,

    #[error("timestamp mismatch: {0}")]
    TimestampMismatch(String),

    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
