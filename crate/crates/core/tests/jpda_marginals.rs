mod common;

use common::brute_force;
use ctxtrack::jpda::{marginals, GateMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn marginals_match_naive_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..500 {
        let n = rng.random_range(0..=4);
        let m = rng.random_range(0..=4);
        let gate = GateMatrix {
            detections: m,
            entries: (0..n).map(|_| (0..m).map(|_| rng.random_bool(0.6)).collect()).collect(),
        };
        let q: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| rng.random_range(1e-4..0.3)).collect()).collect();
        let pd: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..0.99)).collect();
        let lambda: Vec<f64> = (0..m).map(|_| 10f64.powf(rng.random_range(-4.0..-1.0))).collect();

        let got = marginals(&gate, &q, &pd, &lambda, 1_000_000).unwrap();
        let (beta, miss) = brute_force(&gate, &q, &pd, &lambda);
        for t in 0..n {
            let sum: f64 = got.beta[t].iter().sum::<f64>() + got.miss[t];
            assert!((sum - 1.0).abs() < 1e-9);
            assert!((got.miss[t] - miss[t]).abs() <= 1e-9 * miss[t].max(1e-300) + 1e-15);
            for j in 0..m {
                assert!((got.beta[t][j] - beta[t][j]).abs() <= 1e-9 * beta[t][j].max(1e-300) + 1e-15);
            }
        }
    }
}
