//! Gaussian-mixture PHD filter with labelled components.
//!
//! The update never holds a detection probability or clutter intensity of
//! its own: both are queried from the scan's [`DetectorContext`], per prior
//! component and per detection respectively.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::context::{self, DetectorContext};
use crate::error::{Error, Result};
use crate::linalg;
use crate::models::{self, CvModelConfig};
use crate::types::{
    GaussianComponent, Label, LabelAllocator, SensorScan, StateCovariance, StateEstimate,
    StateVector, Timestamp,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GmphdConfig {
    /// Pairs with innovation Mahalanobis distance at or above this are gated out.
    pub gate_mahalanobis: f64,
    pub birth_weight: f64,
    pub survival_prob: f64,
    pub prune_threshold: f64,
    pub merge_mahalanobis: f64,
    pub extraction_threshold: f64,
    /// Diagonal of the birth covariance, `[x, vx, y, vy]`.
    pub birth_covariance: [f64; 4],
}

impl Default for GmphdConfig {
    fn default() -> Self {
        Self {
            gate_mahalanobis: 3.0,
            birth_weight: 1e-4,
            survival_prob: 1.0,
            prune_threshold: 1e-6,
            merge_mahalanobis: 4.0,
            extraction_threshold: 0.85,
            birth_covariance: [100.0, 225.0, 100.0, 225.0],
        }
    }
}

impl GmphdConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gate_mahalanobis", self.gate_mahalanobis),
            ("birth_weight", self.birth_weight),
            ("prune_threshold", self.prune_threshold),
            ("merge_mahalanobis", self.merge_mahalanobis),
            ("extraction_threshold", self.extraction_threshold),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.survival_prob) {
            return Err(Error::InvalidConfig(format!(
                "survival_prob must lie in [0, 1], got {}",
                self.survival_prob
            )));
        }
        if self.extraction_threshold <= self.prune_threshold {
            return Err(Error::InvalidConfig(
                "extraction_threshold must exceed prune_threshold".into(),
            ));
        }
        linalg::ensure_spd(&self.birth_cov())
            .map_err(|_| Error::InvalidConfig("birth_covariance must be positive".into()))
    }

    pub fn birth_cov(&self) -> StateCovariance {
        StateCovariance::from_diagonal(&StateVector::from(self.birth_covariance))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianMixture {
    pub components: Vec<GaussianComponent>,
    pub timestamp: Timestamp,
}

impl GaussianMixture {
    pub fn empty(timestamp: Timestamp) -> Self {
        Self {
            components: Vec::new(),
            timestamp,
        }
    }

    /// Rejects negative or non-finite weights.
    pub fn new(components: Vec<GaussianComponent>, timestamp: Timestamp) -> Result<Self> {
        for c in &components {
            if !(c.weight >= 0.0 && c.weight.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "component {} has invalid weight {}",
                    c.label, c.weight
                )));
            }
        }
        Ok(Self {
            components,
            timestamp,
        })
    }

    pub fn total_weight(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }

    /// Summed weight of all components carrying `label`.
    pub fn label_weight(&self, label: Label) -> f64 {
        self.components
            .iter()
            .filter(|c| c.label == label)
            .map(|c| c.weight)
            .sum()
    }
}

pub fn predict(
    mixture: &GaussianMixture,
    dt: f64,
    motion: &CvModelConfig,
    config: &GmphdConfig,
) -> Result<GaussianMixture> {
    if dt < 0.0 || !dt.is_finite() {
        return Err(Error::NegativeTimeStep(dt));
    }
    let components = mixture
        .components
        .iter()
        .map(|c| {
            Ok(GaussianComponent {
                weight: c.weight * config.survival_prob,
                state: models::cv_predict(&c.state, dt, motion)?,
                label: c.label,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GaussianMixture {
        components,
        timestamp: Timestamp::from_secs(mixture.timestamp.secs() + dt),
    })
}

/// Per-detection bookkeeping of one update.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct UpdateDiagnostics {
    /// Clutter intensity the context reported at each detection.
    pub clutter: Vec<f64>,
    /// `λ(z) + Σ P_D·w·q` for each detection.
    pub normalizer: Vec<f64>,
    /// Output index range holding each detection's updated copies.
    pub detection_copies: Vec<Range<usize>>,
    /// Output index range holding the birth components.
    pub births: Range<usize>,
}

/// GM-PHD measurement update followed by measurement-driven birth.
///
/// Output order: one missed-detection copy per prior component, then each
/// detection's updated copies in detection order, then one birth per detection.
pub fn update(
    mixture: &GaussianMixture,
    scan: &SensorScan,
    config: &GmphdConfig,
    labels: &mut LabelAllocator,
) -> Result<GaussianMixture> {
    update_with_diagnostics(mixture, scan, config, labels).map(|(m, _)| m)
}

pub fn update_with_diagnostics(
    mixture: &GaussianMixture,
    scan: &SensorScan,
    config: &GmphdConfig,
    labels: &mut LabelAllocator,
) -> Result<(GaussianMixture, UpdateDiagnostics)> {
    let ctx: &dyn DetectorContext = scan.context.as_deref().ok_or_else(|| Error::MissingContext {
        sensor: scan.sensor_id.to_string(),
        time: scan.timestamp.secs(),
    })?;
    let prior = &mixture.components;
    let pd = prior
        .iter()
        .map(|c| context::detection_probability(ctx, &c.state))
        .collect::<Result<Vec<_>>>()?;

    let mut out = Vec::with_capacity(prior.len() * (1 + scan.detections.len()) + scan.detections.len());
    for (c, &p) in prior.iter().zip(&pd) {
        out.push(GaussianComponent {
            weight: (1.0 - p) * c.weight,
            state: c.state.clone(),
            label: c.label,
        });
    }

    let gate_sq = config.gate_mahalanobis * config.gate_mahalanobis;
    let mut diag = UpdateDiagnostics::default();
    for det in &scan.detections {
        let lambda = context::clutter_intensity(ctx, det)?;
        let start = out.len();
        let mut sum = 0.0;
        for (c, &p) in prior.iter().zip(&pd) {
            if p == 0.0 || c.weight == 0.0 {
                continue;
            }
            let pred = models::measurement_predict(&c.state, &det.covariance)?;
            let chol = linalg::cholesky(&pred.innovation_covariance)?;
            let residual = det.position - pred.predicted;
            let d2 = linalg::squared_with(&chol, &residual);
            if d2 >= gate_sq {
                continue;
            }
            let q = linalg::normalization_with(&chol) * (-0.5 * d2).exp();
            let weight = p * c.weight * q;
            sum += weight;
            out.push(GaussianComponent {
                weight,
                state: models::kalman_update_with(&c.state, &pred, &chol, &det.position, &det.covariance),
                label: c.label,
            });
        }
        let normalizer = lambda + sum;
        if normalizer > 0.0 {
            for c in &mut out[start..] {
                c.weight /= normalizer;
            }
        }
        diag.clutter.push(lambda);
        diag.normalizer.push(normalizer);
        diag.detection_copies.push(start..out.len());
    }

    let birth_start = out.len();
    let birth_cov = config.birth_cov();
    for det in &scan.detections {
        out.push(GaussianComponent {
            weight: config.birth_weight,
            state: StateEstimate {
                mean: StateVector::new(det.position.x, 0.0, det.position.y, 0.0),
                covariance: birth_cov,
            },
            label: labels.fresh(),
        });
    }
    diag.births = birth_start..out.len();

    Ok((
        GaussianMixture {
            components: out,
            timestamp: mixture.timestamp,
        },
        diag,
    ))
}

/// Prunes light components, then greedily merges by descending weight.
pub fn prune_merge(mixture: &GaussianMixture, config: &GmphdConfig) -> Result<GaussianMixture> {
    let mut order: Vec<usize> = (0..mixture.components.len())
        .filter(|&i| mixture.components[i].weight >= config.prune_threshold)
        .collect();
    // Stable sort keeps ties in input order.
    order.sort_by(|&a, &b| {
        mixture.components[b]
            .weight
            .total_cmp(&mixture.components[a].weight)
    });

    let gate_sq = config.merge_mahalanobis * config.merge_mahalanobis;
    let mut used = vec![false; order.len()];
    let mut merged = Vec::new();
    for k in 0..order.len() {
        if used[k] {
            continue;
        }
        let lead = &mixture.components[order[k]];
        let chol = linalg::cholesky(&lead.state.covariance)?;
        let mut group = Vec::new();
        for (m, &idx) in order.iter().enumerate().skip(k) {
            if used[m] {
                continue;
            }
            let c = &mixture.components[idx];
            if m == k || linalg::squared_with(&chol, &(c.state.mean - lead.state.mean)) < gate_sq {
                used[m] = true;
                group.push(c);
            }
        }
        merged.push(moment_match(&group));
    }
    Ok(GaussianMixture {
        components: merged,
        timestamp: mixture.timestamp,
    })
}

/// Moment-matched single Gaussian; label of the first (dominant) member.
fn moment_match(group: &[&GaussianComponent]) -> GaussianComponent {
    if group.len() == 1 {
        return group[0].clone();
    }
    let weight: f64 = group.iter().map(|c| c.weight).sum();
    let mean = group
        .iter()
        .fold(StateVector::zeros(), |acc, c| acc + c.state.mean * c.weight)
        / weight;
    let covariance = group.iter().fold(StateCovariance::zeros(), |acc, c| {
        let d = c.state.mean - mean;
        acc + (c.state.covariance + d * d.transpose()) * c.weight
    }) / weight;
    GaussianComponent {
        weight,
        state: StateEstimate {
            mean,
            covariance: linalg::symmetrize(&covariance),
        },
        label: group[0].label,
    }
}

/// Components heavier than the extraction threshold, at most one per label
/// (the heaviest), ordered by label.
pub fn extract(mixture: &GaussianMixture, config: &GmphdConfig) -> Vec<(Label, StateEstimate)> {
    let mut best: std::collections::BTreeMap<Label, &GaussianComponent> = Default::default();
    for c in &mixture.components {
        if c.weight > config.extraction_threshold {
            best.entry(c.label)
                .and_modify(|b| {
                    if c.weight > b.weight {
                        *b = c;
                    }
                })
                .or_insert(c);
        }
    }
    best.into_iter().map(|(l, c)| (l, c.state.clone())).collect()
}

/// Sequential GM-PHD tracker over a time-ordered scan stream.
#[derive(Clone, Debug)]
pub struct GmphdTracker {
    pub config: GmphdConfig,
    pub motion: CvModelConfig,
    mixture: Option<GaussianMixture>,
    labels: LabelAllocator,
}

impl GmphdTracker {
    pub fn new(config: GmphdConfig, motion: CvModelConfig) -> Result<Self> {
        config.validate()?;
        motion.validate()?;
        Ok(Self {
            config,
            motion,
            mixture: None,
            labels: LabelAllocator::new(),
        })
    }

    pub fn mixture(&self) -> Option<&GaussianMixture> {
        self.mixture.as_ref()
    }

    /// Predicts to the scan time, updates, prunes/merges and extracts.
    pub fn step(&mut self, scan: &SensorScan) -> Result<Vec<(Label, StateEstimate)>> {
        let prior = match self.mixture.take() {
            Some(m) => {
                let dt = scan.timestamp.since(m.timestamp);
                let predicted = predict(&m, dt, &self.motion, &self.config);
                match predicted {
                    Ok(p) => p,
                    Err(e) => {
                        self.mixture = Some(m);
                        return Err(e);
                    }
                }
            }
            None => GaussianMixture::empty(scan.timestamp),
        };
        let updated = update(&prior, scan, &self.config, &mut self.labels)?;
        let reduced = prune_merge(&updated, &self.config)?;
        let out = extract(&reduced, &self.config);
        self.mixture = Some(reduced);
        Ok(out)
    }
}
