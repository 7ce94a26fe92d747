//! Solve one enhancement-assignment instance with the prune-and-search
//! heuristic and check it against the exhaustive oracle.

use std::collections::BTreeMap;

use edgeboost::cli::demo_profiles;
use edgeboost::scheduler::{schedule_exact, schedule_heuristic, GapFrame, GapInstance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let beta = 3;
    let (latency, accuracy) = demo_profiles(1000.0 / 84.0, beta).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let frames: Vec<GapFrame> = (0..8)
        .map(|i| GapFrame { id: i, predicted_difficulty: rng.gen_range(0.0..=1.0) })
        .collect();

    // budget halfway between "nothing fits" and "everything at the deepest exit"
    let deepest: BTreeMap<u64, usize> = frames.iter().map(|f| (f.id, beta)).collect();
    let budget = edgeboost::scheduler::plan_cost(&deepest, &latency).unwrap() * 0.75;
    let instance = GapInstance::new(frames, latency, accuracy, budget).unwrap();

    let heuristic = schedule_heuristic(&instance).unwrap();
    let oracle = schedule_exact(&instance, 10_000_000).unwrap();

    println!("budget: {budget:.2} ms\n");
    println!("{:<6} {:>11} {:>10} {:>10}", "frame", "difficulty", "heuristic", "oracle");
    for frame in instance.frames() {
        println!(
            "{:<6} {:>11.3} {:>10} {:>10}",
            frame.id,
            frame.predicted_difficulty,
            heuristic.assignment[&frame.id],
            oracle.assignment[&frame.id]
        );
    }
    for (name, plan) in [("heuristic", &heuristic), ("oracle", &oracle)] {
        println!(
            "\n{name}: gain {:.3}, cost {:.2} ms, feasible {}, downgrade steps {}",
            plan.total_gain, plan.total_latency_ms, plan.feasible, plan.downgrade_steps
        );
    }
    let gap = (oracle.total_gain - heuristic.total_gain) / oracle.total_gain.max(1e-12);
    println!("\nrelative optimality gap: {:.2}%", 100.0 * gap.max(0.0));
}
