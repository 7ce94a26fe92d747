//! Shared helpers for integration tests: seeded random instances and the
//! worked three-frame scheduling example.
//!
//! Each test target uses a different subset of these.
#![allow(dead_code)]

use std::collections::BTreeMap;

use edgeboost::profiles::{AccuracyProfile, LatencyProfile};
use edgeboost::scheduler::{GapFrame, GapInstance};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const GRID_SIZES: [u32; 6] = [1, 2, 4, 8, 16, 32];

/// Random latency profile with sublinear batching.
///
/// Marginal batch cost factor is kept in [0.2, 0.4] and the discriminator
/// under 5% of the cheapest model body, so grid lookups stay subadditive
/// against `n * I_kappa` even off the profiled sizes.
pub fn random_latency(rng: &mut ChaCha8Rng, beta: usize) -> LatencyProfile {
    let mut epsilon = vec![0.0f64];
    let mut acc = 0.0;
    for _ in 1..=beta {
        acc += rng.gen_range(1.0..10.0);
        epsilon.push(acc);
    }
    let mut nu = vec![rng.gen_range(10.0..40.0)];
    for k in 1..=beta {
        let drop = rng.gen_range(0.0..(nu[k - 1] * 0.1));
        nu.push(nu[k - 1] - drop);
    }
    let min_body = (0..=beta)
        .map(|k| epsilon[k] + nu[k])
        .fold(f64::INFINITY, f64::min);
    let mu = rng.gen_range(0.0..(0.05 * min_body));
    let alpha = rng.gen_range(0.2..0.4);
    let mut grid = BTreeMap::new();
    for k in 0..=beta {
        let body = epsilon[k] + nu[k];
        for n in GRID_SIZES {
            grid.insert((k, n), n as f64 * mu + body * (1.0 + alpha * (n as f64 - 1.0)));
        }
    }
    LatencyProfile::new(mu, epsilon, nu, grid, beta).expect("generated profile is valid")
}

/// Random monotone-enforced accuracy profile at 0.1 granularity.
pub fn random_accuracy(rng: &mut ChaCha8Rng, beta: usize) -> AccuracyProfile {
    let gains: Vec<Vec<f64>> = (0..10)
        .map(|b| {
            let scale = (b as f64 + 1.0) / 10.0;
            (0..=beta)
                .map(|k| {
                    if k == 0 {
                        0.0
                    } else {
                        scale * rng.gen_range(-1.0..10.0)
                    }
                })
                .collect()
        })
        .collect();
    AccuracyProfile::new(0.1, gains, beta)
        .expect("generated profile is valid")
        .enforce_monotone()
}

/// Random instance with m frames and a budget spanning from starved to slack.
pub fn random_instance(rng: &mut ChaCha8Rng, max_m: usize, max_beta: usize) -> GapInstance {
    let beta = rng.gen_range(1..=max_beta);
    let m = rng.gen_range(0..=max_m);
    let latency = random_latency(rng, beta);
    let accuracy = random_accuracy(rng, beta);
    let frames: Vec<GapFrame> = (0..m)
        .map(|i| GapFrame { id: i as u64, predicted_difficulty: rng.gen_range(0.0..=1.0) })
        .collect();
    // budget relative to the all-deepest batched cost
    let full: BTreeMap<u64, usize> = frames.iter().map(|f| (f.id, beta)).collect();
    let full_cost = edgeboost::scheduler::plan_cost(&full, &latency).unwrap().max(1.0);
    let budget = full_cost * rng.gen_range(0.05..1.5);
    GapInstance::new(frames, latency, accuracy, budget).expect("generated instance is valid")
}

/// The worked three-frame instance: beta = 2, per-frame latencies
/// I = [10, 15, 20] ms, exactly linear batch grid, T = 50 ms. The optimum
/// over all 27 assignments is (2, 0, 2) with gain 12 at cost 50.
pub fn worked_instance() -> GapInstance {
    let beta = 2;
    let epsilon = vec![0.0, 7.0, 13.0];
    let nu = vec![10.0, 8.0, 7.0];
    let mut grid = BTreeMap::new();
    for k in 0..=beta {
        let single = epsilon[k] + nu[k];
        for n in [1u32, 2, 3, 4, 8, 16, 32] {
            grid.insert((k, n), n as f64 * single);
        }
    }
    let latency = LatencyProfile::new(0.0, epsilon, nu, grid, beta).unwrap();
    let mut gains = vec![vec![0.0; 3]; 10];
    gains[9] = vec![0.0, 4.0, 6.0];
    gains[5] = vec![0.0, 1.0, 1.5];
    let accuracy = AccuracyProfile::new(0.1, gains, beta).unwrap();
    GapInstance::new(
        vec![
            GapFrame { id: 0, predicted_difficulty: 0.9 },
            GapFrame { id: 1, predicted_difficulty: 0.5 },
            GapFrame { id: 2, predicted_difficulty: 0.9 },
        ],
        latency,
        accuracy,
        50.0,
    )
    .unwrap()
}
