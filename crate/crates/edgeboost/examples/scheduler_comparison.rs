//! Run every scheduler on the same trace and tabulate gain, utilization,
//! and deadline behaviour side by side.

use edgeboost::cli::demo_profiles;
use edgeboost::simulator::{run_simulation, DiscriminatorModel, GpuModel, SchedulerChoice};
use edgeboost::vap::{generate_trace, FilterConfig, TraceConfig};

fn main() {
    let trace = generate_trace(&TraceConfig {
        duration_s: 60.0,
        fps: 25.0,
        cameras: 4,
        seed: 3,
        ..TraceConfig::default()
    })
    .unwrap();
    let (latency, accuracy) = demo_profiles(1000.0 / 84.0, 5).unwrap();
    let disc = DiscriminatorModel {
        noise_sigma: 0.05,
        confusion: None,
        latency_ms: latency.mu_d_ms(),
    };
    let gpu = GpuModel { window_ms: 1000.0 };
    let filter = FilterConfig::CheapModel { min_objects: 1 };

    // the oracle arm is omitted: per-window loads here are far beyond its
    // enumeration cap
    let arms = [
        ("none", SchedulerChoice::None),
        ("greedy_arrival", SchedulerChoice::GreedyArrival),
        ("heuristic", SchedulerChoice::Heuristic),
    ];
    println!("{:<16} {:>12} {:>10} {:>8}", "scheduler", "gain/frame", "mean util", "misses");
    for (label, choice) in arms {
        let report = run_simulation(
            &trace, &filter, &disc, &latency, &accuracy, choice, &gpu, 3,
        )
        .unwrap();
        let a = &report.aggregates;
        println!(
            "{label:<16} {:>12.4} {:>10.4} {:>8}",
            a.mean_gain_per_frame, a.mean_utilization, a.deadline_misses
        );
    }
}
