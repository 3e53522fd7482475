//! Gaussian helpers over fixed-size nalgebra types.

use std::f64::consts::PI;

use nalgebra::{Cholesky, Const, SMatrix, SVector};

use crate::error::{Error, Result};

/// Symmetry tolerance, relative to the largest absolute entry.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

pub fn symmetrize<const D: usize>(m: &SMatrix<f64, D, D>) -> SMatrix<f64, D, D> {
    (m + m.transpose()) * 0.5
}

/// Largest `|m_ij - m_ji|` divided by the largest `|m_ij|` (0 for the zero matrix).
pub fn relative_asymmetry<const D: usize>(m: &SMatrix<f64, D, D>) -> f64 {
    let scale = m.amax();
    if scale == 0.0 {
        return 0.0;
    }
    (m - m.transpose()).amax() / scale
}

/// Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky<const D: usize>(
    m: &SMatrix<f64, D, D>,
) -> Result<Cholesky<f64, Const<D>>> {
    if !m.iter().all(|v| v.is_finite()) || relative_asymmetry(m) > SYMMETRY_TOLERANCE {
        return Err(Error::NotPositiveDefinite);
    }
    Cholesky::new(*m).ok_or(Error::NotPositiveDefinite)
}

pub fn ensure_spd<const D: usize>(m: &SMatrix<f64, D, D>) -> Result<()> {
    cholesky(m).map(|_| ())
}

/// `rᵀ C⁻¹ r`, solved through the Cholesky factor.
pub fn mahalanobis_squared<const D: usize>(
    residual: &SVector<f64, D>,
    covariance: &SMatrix<f64, D, D>,
) -> Result<f64> {
    let chol = cholesky(covariance)?;
    Ok(squared_with(&chol, residual))
}

pub fn mahalanobis_distance<const D: usize>(
    residual: &SVector<f64, D>,
    covariance: &SMatrix<f64, D, D>,
) -> Result<f64> {
    mahalanobis_squared(residual, covariance).map(f64::sqrt)
}

/// Multivariate normal density of `residual` about zero.
pub fn gaussian_density<const D: usize>(
    residual: &SVector<f64, D>,
    covariance: &SMatrix<f64, D, D>,
) -> Result<f64> {
    let chol = cholesky(covariance)?;
    Ok(density_with(&chol, residual))
}

/// Squared Mahalanobis distance from an existing factorisation.
pub fn squared_with<const D: usize>(
    chol: &Cholesky<f64, Const<D>>,
    residual: &SVector<f64, D>,
) -> f64 {
    let whitened = chol
        .l_dirty()
        .solve_lower_triangular(residual)
        .expect("cholesky factor has a positive diagonal");
    whitened.norm_squared()
}

/// Normalisation constant `1 / sqrt((2π)^D |C|)` from a factorisation.
pub fn normalization_with<const D: usize>(chol: &Cholesky<f64, Const<D>>) -> f64 {
    let sqrt_det: f64 = chol.l_dirty().diagonal().iter().product();
    1.0 / ((2.0 * PI).powf(D as f64 / 2.0) * sqrt_det)
}

pub fn density_with<const D: usize>(
    chol: &Cholesky<f64, Const<D>>,
    residual: &SVector<f64, D>,
) -> f64 {
    normalization_with(chol) * (-0.5 * squared_with(chol, residual)).exp()
}
