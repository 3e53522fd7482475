use serde::{Deserialize, Serialize};

use crate::assignment;
use crate::error::{Error, Result};
use crate::types::Position;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GospaConfig {
    /// Cutoff distance (m).
    pub c: f64,
    pub p: f64,
    pub alpha: f64,
}

impl Default for GospaConfig {
    fn default() -> Self {
        Self {
            c: 30.0,
            p: 2.0,
            alpha: 2.0,
        }
    }
}

impl GospaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.p >= 1.0 && self.alpha > 0.0 && self.alpha <= 2.0) {
            return Err(Error::InvalidConfig(format!(
                "GOSPA needs c > 0, p >= 1, 0 < alpha <= 2; got c={}, p={}, alpha={}",
                self.c, self.p, self.alpha
            )));
        }
        Ok(())
    }
}

/// GOSPA value and its decomposition. The three terms are contributions to
/// `total^p`; with `alpha = 2` they sum to it exactly.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Gospa {
    pub total: f64,
    pub localization: f64,
    pub missed: f64,
    pub false_: f64,
    pub missed_count: usize,
    pub false_count: usize,
}

/// GOSPA between ground-truth and estimated point sets.
///
/// Pairs whose distance reaches the cutoff are reported as one missed and
/// one false object when `alpha = 2`, which costs the same as the capped pair.
pub fn gospa(truth: &[Position], estimates: &[Position], config: &GospaConfig) -> Gospa {
    let GospaConfig { c, p, alpha } = *config;
    let cp = c.powf(p);
    let mut out = Gospa::default();
    let assigned = if truth.is_empty() || estimates.is_empty() {
        vec![None; truth.len()]
    } else {
        let cost: Vec<Vec<f64>> = truth
            .iter()
            .map(|x| estimates.iter().map(|y| (x - y).norm().min(c).powf(p)).collect())
            .collect();
        assignment::solve(&cost)
    };
    let mut used = vec![false; estimates.len()];
    for (i, j) in assigned.iter().enumerate() {
        match j {
            Some(j) => {
                used[*j] = true;
                let d = (truth[i] - estimates[*j]).norm();
                if d < c || alpha < 2.0 {
                    out.localization += d.min(c).powf(p);
                } else {
                    out.missed_count += 1;
                    out.false_count += 1;
                }
            }
            None => out.missed_count += 1,
        }
    }
    out.false_count += used.iter().filter(|u| !**u).count();
    out.missed = cp / alpha * out.missed_count as f64;
    out.false_ = cp / alpha * out.false_count as f64;
    out.total = (out.localization + out.missed + out.false_).powf(1.0 / p);
    out
}

/// Root mean square of a per-timestep GOSPA series.
pub fn gospa_rms(series: &[f64]) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    Ok((series.iter().map(|v| v * v).sum::<f64>() / series.len() as f64).sqrt())
}
