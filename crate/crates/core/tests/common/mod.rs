//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use ctxtrack::jpda::GateMatrix;
use ctxtrack::types::Position;

/// Naive joint-event enumeration: every detection goes to clutter or to one
/// gated track, with no track taking two detections.
pub fn brute_force(gate: &GateMatrix, q: &[Vec<f64>], pd: &[f64], lambda: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = gate.tracks();
    let m = gate.detections;
    let mut owner: Vec<Option<usize>> = vec![None; m];

    fn visit(
        j: usize,
        owner: &mut Vec<Option<usize>>,
        gate: &GateMatrix,
        q: &[Vec<f64>],
        pd: &[f64],
        lambda: &[f64],
        acc: &mut (f64, Vec<Vec<f64>>, Vec<f64>),
    ) {
        let (n, m) = (gate.tracks(), gate.detections);
        if j == m {
            let mut w = 1.0;
            let mut used = vec![false; n];
            for (d, o) in owner.iter().enumerate() {
                match o {
                    Some(t) => {
                        used[*t] = true;
                        w *= pd[*t] * q[*t][d];
                    }
                    None => w *= lambda[d],
                }
            }
            for t in 0..n {
                if !used[t] {
                    w *= 1.0 - pd[t];
                }
            }
            acc.0 += w;
            for t in 0..n {
                if !used[t] {
                    acc.2[t] += w;
                }
            }
            for (d, o) in owner.iter().enumerate() {
                if let Some(t) = o {
                    acc.1[*t][d] += w;
                }
            }
            return;
        }
        owner[j] = None;
        visit(j + 1, owner, gate, q, pd, lambda, acc);
        for t in 0..n {
            if gate.entries[t][j] && !owner[..j].contains(&Some(t)) {
                owner[j] = Some(t);
                visit(j + 1, owner, gate, q, pd, lambda, acc);
                owner[j] = None;
            }
        }
    }

    let mut acc = (0.0, vec![vec![0.0; m]; n], vec![0.0; n]);
    visit(0, &mut owner, gate, q, pd, lambda, &mut acc);
    // Normalize per track: each track's events partition the whole event set.
    let beta = acc.1.iter().map(|row| row.iter().map(|w| w / acc.0).collect()).collect();
    let miss = acc.2.iter().map(|w| w / acc.0).collect();
    (beta, miss)
}

/// GOSPA (alpha = 2) by enumerating every partial one-to-one assignment.
pub fn gospa_exhaustive(x: &[Position], y: &[Position], c: f64, p: f64) -> f64 {
    fn go(i: usize, x: &[Position], y: &[Position], used: &mut Vec<bool>, pairs: usize, cost: f64, c: f64, p: f64, best: &mut f64) {
        if i == x.len() {
            let unmatched = (x.len() + y.len() - 2 * pairs) as f64;
            let total = cost + c.powf(p) / 2.0 * unmatched;
            if total < *best {
                *best = total;
            }
            return;
        }
        go(i + 1, x, y, used, pairs, cost, c, p, best);
        for j in 0..y.len() {
            if !used[j] {
                used[j] = true;
                let d = (x[i] - y[j]).norm().min(c);
                go(i + 1, x, y, used, pairs + 1, cost + d.powf(p), c, p, best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(0, x, y, &mut vec![false; y.len()], 0, 0.0, c, p, &mut best);
    best.powf(1.0 / p)
}
