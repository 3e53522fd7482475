use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::assignment;
use crate::error::{Error, Result};
use crate::types::{Label, Position};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HotaConfig {
    /// Distances at or below this get similarity 1 (m).
    pub full_similarity: f64,
    /// Distances at or above this get similarity 0 (m).
    pub zero_similarity: f64,
    pub thresholds: Vec<f64>,
}

impl Default for HotaConfig {
    fn default() -> Self {
        Self {
            full_similarity: 5.0,
            zero_similarity: 30.0,
            thresholds: (1..=19).map(|k| k as f64 * 0.05).collect(),
        }
    }
}

impl HotaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.full_similarity > 0.0 && self.full_similarity < self.zero_similarity) {
            return Err(Error::InvalidConfig(
                "HOTA needs 0 < full_similarity < zero_similarity".into(),
            ));
        }
        if self.thresholds.is_empty() || self.thresholds.iter().any(|a| !(*a > 0.0 && *a <= 1.0)) {
            return Err(Error::InvalidConfig("HOTA thresholds must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

/// Localization similarity: 1 up to the full-similarity distance, falling
/// linearly to 0 at the zero-similarity distance.
pub fn similarity(d: f64, config: &HotaConfig) -> f64 {
    if d <= config.full_similarity {
        1.0
    } else if d >= config.zero_similarity {
        0.0
    } else {
        (config.zero_similarity - d) / (config.zero_similarity - config.full_similarity)
    }
}

/// Labelled truth and estimate positions at one evaluation time.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Frame {
    pub truth: Vec<(Label, Position)>,
    pub estimates: Vec<(Label, Position)>,
}

/// Per-threshold counts. Sequences combine by summing, so association
/// accuracy is pooled weighted by true positives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HotaCounts {
    pub thresholds: Vec<f64>,
    pub tp: Vec<f64>,
    pub fn_: Vec<f64>,
    pub fp: Vec<f64>,
    /// Sum over true positives of their pair's association score.
    pub assoc: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HotaResult {
    pub hota: f64,
    pub deta: f64,
    pub assa: f64,
    pub per_threshold: Vec<ThresholdScore>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdScore {
    pub alpha: f64,
    pub hota: f64,
    pub deta: f64,
    pub assa: f64,
}

impl HotaCounts {
    pub fn zero(thresholds: &[f64]) -> Self {
        let n = thresholds.len();
        Self {
            thresholds: thresholds.to_vec(),
            tp: vec![0.0; n],
            fn_: vec![0.0; n],
            fp: vec![0.0; n],
            assoc: vec![0.0; n],
        }
    }

    pub fn combine(&mut self, other: &HotaCounts) {
        assert_eq!(self.thresholds, other.thresholds, "threshold grids differ");
        for a in 0..self.thresholds.len() {
            self.tp[a] += other.tp[a];
            self.fn_[a] += other.fn_[a];
            self.fp[a] += other.fp[a];
            self.assoc[a] += other.assoc[a];
        }
    }

    pub fn result(&self) -> HotaResult {
        let per_threshold: Vec<ThresholdScore> = (0..self.thresholds.len())
            .map(|a| {
                let deta = self.tp[a] / (self.tp[a] + self.fn_[a] + self.fp[a]).max(1.0);
                let assa = self.assoc[a] / self.tp[a].max(1.0);
                ThresholdScore {
                    alpha: self.thresholds[a],
                    hota: (deta * assa).sqrt(),
                    deta,
                    assa,
                }
            })
            .collect();
        let n = per_threshold.len().max(1) as f64;
        HotaResult {
            hota: per_threshold.iter().map(|s| s.hota).sum::<f64>() / n,
            deta: per_threshold.iter().map(|s| s.deta).sum::<f64>() / n,
            assa: per_threshold.iter().map(|s| s.assa).sum::<f64>() / n,
            per_threshold,
        }
    }
}

fn index(labels: impl Iterator<Item = Label>) -> BTreeMap<Label, usize> {
    let mut map = BTreeMap::new();
    for l in labels {
        let next = map.len();
        map.entry(l).or_insert(next);
    }
    map
}

/// HOTA counts for one sequence.
///
/// At each threshold, every frame is matched by an optimal assignment that
/// maximizes similarity weighted by the global alignment score of each
/// truth/estimate identity pair, over pairs whose similarity reaches the
/// threshold.
pub fn hota_counts(frames: &[Frame], config: &HotaConfig) -> HotaCounts {
    let eps = f64::EPSILON;
    let gt_ids = index(frames.iter().flat_map(|f| f.truth.iter().map(|(l, _)| *l)));
    let pr_ids = index(frames.iter().flat_map(|f| f.estimates.iter().map(|(l, _)| *l)));
    let (ng, np) = (gt_ids.len(), pr_ids.len());

    let sims: Vec<Vec<Vec<f64>>> = frames
        .iter()
        .map(|f| {
            f.truth
                .iter()
                .map(|(_, x)| f.estimates.iter().map(|(_, y)| similarity((x - y).norm(), config)).collect())
                .collect()
        })
        .collect();

    let mut potential = vec![vec![0.0; np]; ng];
    let mut gt_count = vec![0.0; ng];
    let mut pr_count = vec![0.0; np];
    for (f, sim) in frames.iter().zip(&sims) {
        let row_sum: Vec<f64> = sim.iter().map(|r| r.iter().sum()).collect();
        let col_sum: Vec<f64> = (0..f.estimates.len()).map(|j| sim.iter().map(|r| r[j]).sum()).collect();
        for (i, (gl, _)) in f.truth.iter().enumerate() {
            let g = gt_ids[gl];
            gt_count[g] += 1.0;
            for (j, (pl, _)) in f.estimates.iter().enumerate() {
                let denom = row_sum[i] + col_sum[j] - sim[i][j];
                if denom > eps {
                    potential[g][pr_ids[pl]] += sim[i][j] / denom;
                }
            }
        }
        for (pl, _) in &f.estimates {
            pr_count[pr_ids[pl]] += 1.0;
        }
    }
    let alignment: Vec<Vec<f64>> = (0..ng)
        .map(|g| {
            (0..np)
                .map(|p| {
                    let d = gt_count[g] + pr_count[p] - potential[g][p];
                    if d > 0.0 {
                        potential[g][p] / d
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();

    let mut counts = HotaCounts::zero(&config.thresholds);
    for (a, &alpha) in config.thresholds.iter().enumerate() {
        let mut matches = vec![vec![0.0; np]; ng];
        for (f, sim) in frames.iter().zip(&sims) {
            let (n, m) = (f.truth.len(), f.estimates.len());
            let mut matched = 0usize;
            if n > 0 && m > 0 {
                let score: Vec<Vec<f64>> = (0..n)
                    .map(|i| {
                        (0..m)
                            .map(|j| {
                                if sim[i][j] >= alpha - eps {
                                    alignment[gt_ids[&f.truth[i].0]][pr_ids[&f.estimates[j].0]] * sim[i][j]
                                } else {
                                    0.0
                                }
                            })
                            .collect()
                    })
                    .collect();
                for (i, j) in assignment::solve_max(&score).into_iter().enumerate() {
                    let Some(j) = j else { continue };
                    if score[i][j] > 0.0 {
                        matched += 1;
                        matches[gt_ids[&f.truth[i].0]][pr_ids[&f.estimates[j].0]] += 1.0;
                    }
                }
            }
            counts.tp[a] += matched as f64;
            counts.fn_[a] += (n - matched) as f64;
            counts.fp[a] += (m - matched) as f64;
        }
        for g in 0..ng {
            for p in 0..np {
                let k = matches[g][p];
                if k > 0.0 {
                    counts.assoc[a] += k * k / (gt_count[g] + pr_count[p] - k);
                }
            }
        }
    }
    counts
}

pub fn hota(frames: &[Frame], config: &HotaConfig) -> HotaResult {
    hota_counts(frames, config).result()
}
