//! JPDA tracker with chi-square gating, exact association marginals and
//! M-of-N style track management, using globally constant `P_D` and `λ`.
//!
//! Marginals are exact. Instead of listing joint events one by one, each
//! cluster of mutually gated tracks and detections is summed by dynamic
//! programming over subsets of its detections, which yields the same numbers
//! at `O(n·m·2^m)` cost for `n` tracks and `m` detections.

use serde::{Deserialize, Serialize};

use crate::context::{relative_range_bearing, SensorPose};
use crate::error::{Error, Result};
use crate::linalg;
use crate::models::{self, CvModelConfig, MeasurementPrediction};
use crate::types::{
    Detection, Label, LabelAllocator, SensorKind, SensorScan, StateCovariance, StateEstimate,
    StateVector, Timestamp,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JpdaConfig {
    pub gate_probability: f64,
    pub pd: f64,
    /// Clutter intensity per unit of each sensor's native measurement space:
    /// m⁻² for lidar, per metre of range per radian of bearing for radar.
    pub lambda: f64,
    pub init_min_detections: u32,
    pub deletion_miss_count: u32,
    /// Upper bound on subset-sum work `n·2^m` for any single cluster.
    pub max_hypotheses: usize,
    /// Diagonal of the covariance given to new tentative tracks.
    pub init_covariance: [f64; 4],
}

impl Default for JpdaConfig {
    fn default() -> Self {
        Self {
            gate_probability: 0.95,
            pd: 0.4,
            lambda: 1e-3,
            init_min_detections: 3,
            deletion_miss_count: 30,
            max_hypotheses: 1_000_000,
            init_covariance: [100.0, 225.0, 100.0, 225.0],
        }
    }
}

impl JpdaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gate_probability > 0.0 && self.gate_probability < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "gate_probability must lie in (0, 1), got {}",
                self.gate_probability
            )));
        }
        if !(0.0..=1.0).contains(&self.pd) {
            return Err(Error::InvalidProbability(self.pd));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidClutterIntensity(self.lambda));
        }
        if self.init_min_detections == 0 || self.deletion_miss_count == 0 {
            return Err(Error::InvalidConfig("track management counts must be positive".into()));
        }
        if self.max_hypotheses == 0 {
            return Err(Error::InvalidConfig("max_hypotheses must be at least 1".into()));
        }
        linalg::ensure_spd(&self.init_cov())
            .map_err(|_| Error::InvalidConfig("init_covariance must be positive".into()))
    }

    /// Squared-Mahalanobis gate: the chi-square quantile with 2 degrees of freedom.
    pub fn gate_threshold(&self) -> f64 {
        -2.0 * (1.0 - self.gate_probability).ln()
    }

    pub fn init_cov(&self) -> StateCovariance {
        StateCovariance::from_diagonal(&StateVector::from(self.init_covariance))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackStatus {
    Tentative,
    Confirmed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JpdaTrack {
    pub label: Label,
    pub state: StateEstimate,
    pub status: TrackStatus,
    pub hit_count: u32,
    pub consecutive_misses: u32,
}

/// Track × detection validation matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct GateMatrix {
    pub detections: usize,
    pub entries: Vec<Vec<bool>>,
}

impl GateMatrix {
    pub fn tracks(&self) -> usize {
        self.entries.len()
    }
}

/// Gating data for one track/detection pair.
#[derive(Clone, Debug)]
pub struct PairLikelihood {
    pub mahalanobis_squared: f64,
    /// Innovation density `q`.
    pub density: f64,
    prediction: MeasurementPrediction,
    chol: nalgebra::Cholesky<f64, nalgebra::Const<2>>,
}

fn pair(state: &StateEstimate, det: &Detection) -> Result<PairLikelihood> {
    let prediction = models::measurement_predict(state, &det.covariance)?;
    let chol = linalg::cholesky(&prediction.innovation_covariance)?;
    let d2 = linalg::squared_with(&chol, &(det.position - prediction.predicted));
    Ok(PairLikelihood {
        mahalanobis_squared: d2,
        density: linalg::normalization_with(&chol) * (-0.5 * d2).exp(),
        prediction,
        chol,
    })
}

fn likelihoods(tracks: &[JpdaTrack], detections: &[Detection]) -> Result<Vec<Vec<PairLikelihood>>> {
    tracks
        .iter()
        .map(|t| detections.iter().map(|d| pair(&t.state, d)).collect())
        .collect()
}

pub fn gate(tracks: &[JpdaTrack], scan: &SensorScan, config: &JpdaConfig) -> Result<GateMatrix> {
    let thr = config.gate_threshold();
    let entries = likelihoods(tracks, &scan.detections)?
        .into_iter()
        .map(|row| row.iter().map(|p| p.mahalanobis_squared < thr).collect())
        .collect();
    Ok(GateMatrix {
        detections: scan.detections.len(),
        entries,
    })
}

/// Per-track association marginals.
#[derive(Clone, Debug, PartialEq)]
pub struct Marginals {
    /// `beta[t][j]` for detection `j`.
    pub beta: Vec<Vec<f64>>,
    pub miss: Vec<f64>,
}

/// Exact JPDA marginals.
///
/// `density[t][j]` is the innovation density of detection `j` under track
/// `t`, used only where `gate` is true. `pd[t]` is the detection probability
/// of each track and `lambda[j]` the clutter intensity at each detection.
/// Joint events assign each detection to at most one track and vice versa;
/// an event weighs `∏ pd·q` over assigned pairs, `∏ λ` over unassigned
/// detections and `∏ (1 − pd)` over unassigned tracks.
pub fn marginals(
    gate: &GateMatrix,
    density: &[Vec<f64>],
    pd: &[f64],
    lambda: &[f64],
    max_hypotheses: usize,
) -> Result<Marginals> {
    let n = gate.tracks();
    let m = gate.detections;
    let mut out = Marginals {
        beta: vec![vec![0.0; m]; n],
        miss: vec![1.0; n],
    };
    for (track_ids, det_ids) in clusters(gate) {
        let work = track_ids.len() as f64 * 2f64.powi(det_ids.len() as i32);
        if det_ids.len() > 30 || work > max_hypotheses as f64 {
            return Err(Error::HypothesisCap {
                tracks: track_ids.len(),
                detections: det_ids.len(),
                cap: max_hypotheses,
            });
        }
        // Dividing every event weight by ∏ λ_j leaves unassigned detections at 1.
        let a: Vec<Vec<f64>> = track_ids
            .iter()
            .map(|&t| {
                det_ids
                    .iter()
                    .map(|&j| {
                        if gate.entries[t][j] {
                            pd[t] * density[t][j] / lambda[j]
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        let b: Vec<f64> = track_ids.iter().map(|&t| 1.0 - pd[t]).collect();
        let (beta, miss) = cluster_marginals(&a, &b);
        for (k, &t) in track_ids.iter().enumerate() {
            out.miss[t] = miss[k];
            for (l, &j) in det_ids.iter().enumerate() {
                out.beta[t][j] = beta[k][l];
            }
        }
    }
    Ok(out)
}

/// Connected components of the gate graph that contain at least one gated
/// pair, as (tracks, detections) in ascending index order.
fn clusters(gate: &GateMatrix) -> Vec<(Vec<usize>, Vec<usize>)> {
    let n = gate.tracks();
    let m = gate.detections;
    let mut parent: Vec<usize> = (0..n + m).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for t in 0..n {
        for j in 0..m {
            if gate.entries[t][j] {
                let (a, b) = (find(&mut parent, t), find(&mut parent, n + j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, (Vec<usize>, Vec<usize>)> = Default::default();
    for t in 0..n {
        if gate.entries[t].iter().any(|&g| g) {
            let r = find(&mut parent, t);
            groups.entry(r).or_default().0.push(t);
        }
    }
    for j in 0..m {
        let r = find(&mut parent, n + j);
        if let Some(g) = groups.get_mut(&r) {
            g.1.push(j);
        }
    }
    groups.into_values().collect()
}

/// Subset dynamic programme over one cluster. `a[t][j]` is the normalized
/// assignment weight (0 outside the gate) and `b[t]` the miss weight.
fn cluster_marginals(a: &[Vec<f64>], b: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = a.len();
    let m = a.first().map_or(0, |r| r.len());
    let size = 1usize << m;
    let full = size - 1;

    // forward[t](S): total weight of tracks 0..t using exactly detections S.
    let step = |prev: &[f64], row: &[f64], miss: f64| -> Vec<f64> {
        let mut next = vec![0.0; size];
        for s in 0..size {
            if prev[s] == 0.0 {
                continue;
            }
            next[s] += prev[s] * miss;
            for (j, &w) in row.iter().enumerate() {
                if w != 0.0 && s & (1 << j) == 0 {
                    next[s | (1 << j)] += prev[s] * w;
                }
            }
        }
        next
    };
    let mut unit = vec![0.0; size];
    unit[0] = 1.0;
    let mut forward = vec![unit.clone()];
    for t in 0..n {
        let next = step(&forward[t], &a[t], b[t]);
        forward.push(next);
    }
    let mut backward = vec![unit; n + 1];
    for t in (0..n).rev() {
        backward[t] = step(&backward[t + 1], &a[t], b[t]);
    }

    let mut beta = vec![vec![0.0; m]; n];
    let mut miss = vec![0.0; n];
    for t in 0..n {
        // Subset sums of the tracks after t.
        let mut after = backward[t + 1].clone();
        for j in 0..m {
            for s in 0..size {
                if s & (1 << j) != 0 {
                    after[s] += after[s ^ (1 << j)];
                }
            }
        }
        let before = &forward[t];
        let mut w_miss = 0.0;
        let mut w_det = vec![0.0; m];
        for s in 0..size {
            let f = before[s];
            if f == 0.0 {
                continue;
            }
            let free = full & !s;
            w_miss += f * after[free];
            for j in 0..m {
                if a[t][j] != 0.0 && free & (1 << j) != 0 {
                    w_det[j] += f * after[free ^ (1 << j)];
                }
            }
        }
        let mut total = b[t] * w_miss;
        for j in 0..m {
            w_det[j] *= a[t][j];
            total += w_det[j];
        }
        miss[t] = b[t] * w_miss / total;
        for j in 0..m {
            beta[t][j] = w_det[j] / total;
        }
    }
    (beta, miss)
}

/// PDA moment-matched update of one track.
fn pda_update(
    state: &StateEstimate,
    row: &[PairLikelihood],
    detections: &[Detection],
    beta: &[f64],
    miss: f64,
) -> StateEstimate {
    if miss >= 1.0 {
        return state.clone();
    }
    let mut parts: Vec<(f64, StateEstimate)> = vec![(miss, state.clone())];
    for (j, &w) in beta.iter().enumerate() {
        if w > 0.0 {
            let p = &row[j];
            let post = models::kalman_update_with(state, &p.prediction, &p.chol, &detections[j].position, &detections[j].covariance);
            parts.push((w, post));
        }
    }
    if parts.len() == 2 && miss == 0.0 {
        return parts.pop().map(|(_, s)| s).expect("two parts");
    }
    let total: f64 = parts.iter().map(|(w, _)| w).sum();
    let mean = parts.iter().fold(StateVector::zeros(), |acc, (w, s)| acc + s.mean * *w) / total;
    let covariance = parts.iter().fold(StateCovariance::zeros(), |acc, (w, s)| {
        let d = s.mean - mean;
        acc + (s.covariance + d * d.transpose()) * *w
    }) / total;
    StateEstimate {
        mean,
        covariance: linalg::symmetrize(&covariance),
    }
}

/// Applies per-track PDA updates given marginals.
pub fn update_tracks(
    tracks: &[JpdaTrack],
    scan: &SensorScan,
    marginals: &Marginals,
) -> Result<Vec<JpdaTrack>> {
    let lik = likelihoods(tracks, &scan.detections)?;
    Ok(tracks
        .iter()
        .enumerate()
        .map(|(t, track)| {
            let mut next = track.clone();
            next.state = pda_update(&track.state, &lik[t], &scan.detections, &marginals.beta[t], marginals.miss[t]);
            next
        })
        .collect())
}

/// Index of the winning detection, or `None` when the miss marginal is at
/// least as large as every detection marginal.
pub fn argmax_detection(beta: &[f64], miss: f64) -> Option<usize> {
    let mut best = (None, miss);
    for (j, &v) in beta.iter().enumerate() {
        if v > best.1 {
            best = (Some(j), v);
        }
    }
    best.0
}

/// Counter bookkeeping, deletion, and tentative-track initiation.
///
/// `winners[t]` is each track's argmax detection this scan. A detection
/// seeds a new tentative track only if no existing track gates it.
pub fn manage(
    tracks: Vec<JpdaTrack>,
    winners: &[Option<usize>],
    gate: &GateMatrix,
    detections: &[Detection],
    config: &JpdaConfig,
    labels: &mut LabelAllocator,
) -> Vec<JpdaTrack> {
    let claimed: Vec<bool> = (0..detections.len()).map(|j| gate.entries.iter().any(|row| row[j])).collect();
    let mut kept = Vec::with_capacity(tracks.len());
    for (t, mut track) in tracks.into_iter().enumerate() {
        match winners[t] {
            Some(_) => {
                track.hit_count += 1;
                track.consecutive_misses = 0;
            }
            None => track.consecutive_misses += 1,
        }
        if track.status == TrackStatus::Tentative && track.hit_count >= config.init_min_detections {
            track.status = TrackStatus::Confirmed;
        }
        if track.consecutive_misses < config.deletion_miss_count {
            kept.push(track);
        }
    }
    let init_cov = config.init_cov();
    for (j, det) in detections.iter().enumerate() {
        if !claimed[j] {
            kept.push(JpdaTrack {
                label: labels.fresh(),
                state: StateEstimate {
                    mean: StateVector::new(det.position.x, 0.0, det.position.y, 0.0),
                    covariance: init_cov,
                },
                status: if config.init_min_detections <= 1 {
                    TrackStatus::Confirmed
                } else {
                    TrackStatus::Tentative
                },
                hit_count: 1,
                consecutive_misses: 0,
            });
        }
    }
    kept
}

/// Sequential JPDA tracker.
#[derive(Clone, Debug)]
pub struct JpdaTracker {
    pub config: JpdaConfig,
    pub motion: CvModelConfig,
    tracks: Vec<JpdaTrack>,
    time: Option<Timestamp>,
    labels: LabelAllocator,
}

impl JpdaTracker {
    pub fn new(config: JpdaConfig, motion: CvModelConfig) -> Result<Self> {
        config.validate()?;
        motion.validate()?;
        Ok(Self {
            config,
            motion,
            tracks: Vec::new(),
            time: None,
            labels: LabelAllocator::new(),
        })
    }

    pub fn tracks(&self) -> &[JpdaTrack] {
        &self.tracks
    }

    /// Clutter intensity in the Cartesian measurement space. Radar clutter is
    /// uniform in range and bearing, so its Cartesian density falls as `1/r`.
    fn clutter(&self, kind: SensorKind, pose: &SensorPose, det: &Detection) -> f64 {
        match kind {
            SensorKind::Lidar => self.config.lambda,
            SensorKind::Radar => {
                let (r, _) = relative_range_bearing(pose, &det.position);
                self.config.lambda / r.max(1.0)
            }
        }
    }

    /// Processes one scan and returns the confirmed tracks, ordered by label.
    pub fn step(&mut self, scan: &SensorScan) -> Result<Vec<(Label, StateEstimate)>> {
        if let Some(t0) = self.time {
            let dt = scan.timestamp.since(t0);
            if dt < 0.0 || !dt.is_finite() {
                return Err(Error::NegativeTimeStep(dt));
            }
            let predicted = self
                .tracks
                .iter()
                .map(|t| models::cv_predict(&t.state, dt, &self.motion))
                .collect::<Result<Vec<_>>>()?;
            for (t, s) in self.tracks.iter_mut().zip(predicted) {
                t.state = s;
            }
        }
        self.time = Some(scan.timestamp);

        let dets = &scan.detections;
        let lik = likelihoods(&self.tracks, dets)?;
        let thr = self.config.gate_threshold();
        let gate = GateMatrix {
            detections: dets.len(),
            entries: lik
                .iter()
                .map(|row| row.iter().map(|p| p.mahalanobis_squared < thr).collect())
                .collect(),
        };
        let density: Vec<Vec<f64>> = lik.iter().map(|row| row.iter().map(|p| p.density).collect()).collect();
        let pd = vec![self.config.pd; self.tracks.len()];
        let lambda: Vec<f64> = dets.iter().map(|d| self.clutter(scan.kind, &scan.pose, d)).collect();
        let marg = marginals(&gate, &density, &pd, &lambda, self.config.max_hypotheses)?;

        let mut winners = Vec::with_capacity(self.tracks.len());
        for (t, track) in self.tracks.iter_mut().enumerate() {
            track.state = pda_update(&track.state, &lik[t], dets, &marg.beta[t], marg.miss[t]);
            winners.push(argmax_detection(&marg.beta[t], marg.miss[t]));
        }
        let tracks = std::mem::take(&mut self.tracks);
        self.tracks = manage(tracks, &winners, &gate, dets, &self.config, &mut self.labels);

        let mut out: Vec<_> = self
            .tracks
            .iter()
            .filter(|t| t.status == TrackStatus::Confirmed)
            .map(|t| (t.label, t.state.clone()))
            .collect();
        out.sort_by_key(|(l, _)| *l);
        Ok(out)
    }
}
