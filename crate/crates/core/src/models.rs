//! Constant-velocity motion model and linear position measurement model.

use nalgebra::{Matrix2, Matrix2x4, Matrix4, Matrix4x2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::types::{Detection, MeasurementCovariance, Position, StateEstimate};

/// Continuous white-noise acceleration model, applied independently per axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvModelConfig {
    /// Acceleration noise intensity (m/s^1.5).
    pub sigma_acc: f64,
}

impl Default for CvModelConfig {
    fn default() -> Self {
        Self { sigma_acc: 0.8 }
    }
}

impl CvModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sigma_acc > 0.0 && self.sigma_acc.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "sigma_acc must be positive, got {}",
                self.sigma_acc
            )))
        }
    }
}

pub fn transition_matrix(dt: f64) -> Matrix4<f64> {
    let mut f = Matrix4::identity();
    f[(0, 1)] = dt;
    f[(2, 3)] = dt;
    f
}

/// `σ²·[[dt³/3, dt²/2], [dt²/2, dt]]` on each axis block.
pub fn process_noise(dt: f64, config: &CvModelConfig) -> Matrix4<f64> {
    let q = config.sigma_acc * config.sigma_acc;
    let (pp, pv, vv) = (q * dt * dt * dt / 3.0, q * dt * dt / 2.0, q * dt);
    let mut m = Matrix4::zeros();
    for axis in [0, 2] {
        m[(axis, axis)] = pp;
        m[(axis, axis + 1)] = pv;
        m[(axis + 1, axis)] = pv;
        m[(axis + 1, axis + 1)] = vv;
    }
    m
}

pub fn cv_predict(state: &StateEstimate, dt: f64, config: &CvModelConfig) -> Result<StateEstimate> {
    if dt < 0.0 || !dt.is_finite() {
        return Err(Error::NegativeTimeStep(dt));
    }
    if dt == 0.0 {
        return Ok(state.clone());
    }
    let f = transition_matrix(dt);
    let covariance = linalg::symmetrize(&(f * state.covariance * f.transpose() + process_noise(dt, config)));
    Ok(StateEstimate {
        mean: f * state.mean,
        covariance,
    })
}

/// Selects `[x, y]` from `[x, vx, y, vy]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasurementModel {
    pub projection: Matrix2x4<f64>,
}

impl Default for MeasurementModel {
    fn default() -> Self {
        Self {
            projection: Matrix2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementPrediction {
    pub predicted: Position,
    pub innovation_covariance: Matrix2<f64>,
    /// `P·Hᵀ`
    pub cross_covariance: Matrix4x2<f64>,
}

pub fn measurement_predict(
    state: &StateEstimate,
    meas_cov: &MeasurementCovariance,
) -> Result<MeasurementPrediction> {
    let h = MeasurementModel::default().projection;
    let cross_covariance = state.covariance * h.transpose();
    let innovation_covariance = linalg::symmetrize(&(h * cross_covariance + meas_cov));
    linalg::ensure_spd(&innovation_covariance)?;
    Ok(MeasurementPrediction {
        predicted: h * state.mean,
        innovation_covariance,
        cross_covariance,
    })
}

pub fn kalman_update(state: &StateEstimate, detection: &Detection) -> Result<StateEstimate> {
    let prediction = measurement_predict(state, &detection.covariance)?;
    let chol = linalg::cholesky(&prediction.innovation_covariance)?;
    Ok(kalman_update_with(state, &prediction, &chol, &detection.position, &detection.covariance))
}

/// Joseph-form update reusing a measurement prediction and the Cholesky
/// factor of its innovation covariance.
pub fn kalman_update_with(
    state: &StateEstimate,
    prediction: &MeasurementPrediction,
    innovation_chol: &nalgebra::Cholesky<f64, nalgebra::Const<2>>,
    z: &Vector2<f64>,
    meas_cov: &MeasurementCovariance,
) -> StateEstimate {
    let h = MeasurementModel::default().projection;
    // K = P Hᵀ S⁻¹ = (S⁻¹ H P)ᵀ
    let gain = innovation_chol.solve(&prediction.cross_covariance.transpose()).transpose();
    let mean = state.mean + gain * (z - prediction.predicted);
    let i_kh = Matrix4::identity() - gain * h;
    let covariance =
        linalg::symmetrize(&(i_kh * state.covariance * i_kh.transpose() + gain * meas_cov * gain.transpose()));
    StateEstimate { mean, covariance }
}
