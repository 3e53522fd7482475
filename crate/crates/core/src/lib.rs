//! Multi-sensor multi-target tracking where detection probability and clutter
//! intensity are evaluated per scan through a [`context::DetectorContext`].
//!
//! The crate bundles two trackers (a labelled GM-PHD filter and a JPDA tracker
//! with M-of-N track management), an asynchronous radar/lidar scenario
//! simulator, and GOSPA/HOTA evaluation. The `ctxtrack` binary drives the
//! whole pipeline from the command line.

pub mod assignment;
pub mod cli;
pub mod config;
pub mod context;
pub mod error;
pub mod eval;
pub mod gmphd;
pub mod io;
pub mod jpda;
pub mod linalg;
pub mod models;
pub mod pipeline;
pub mod sim;
pub mod types;

pub use error::{Error, Result};
