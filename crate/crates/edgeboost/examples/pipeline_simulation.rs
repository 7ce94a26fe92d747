//! Run the windowed pipeline simulation end to end: trace generation,
//! filtering, difficulty prediction, per-window planning, and reward
//! measured against ground truth.

use edgeboost::cli::demo_profiles;
use edgeboost::simulator::{run_simulation, DiscriminatorModel, GpuModel, SchedulerChoice};
use edgeboost::vap::{generate_trace, FilterConfig, TraceConfig};

fn main() {
    let trace = generate_trace(&TraceConfig {
        duration_s: 120.0,
        fps: 25.0,
        cameras: 2,
        seed: 21,
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
    let filter = FilterConfig::Cascade { diff_threshold: 0.02, conf_threshold: 0.9 };

    let report = run_simulation(
        &trace,
        &filter,
        &disc,
        &latency,
        &accuracy,
        SchedulerChoice::Heuristic,
        &gpu,
        99,
    )
    .unwrap();

    let a = &report.aggregates;
    println!(
        "{} windows, {} enhancement candidates after filtering",
        report.records.len(),
        a.total_survivors
    );
    println!("mean gain per candidate frame: {:.4}", a.mean_gain_per_frame);
    println!("mean GPU utilization: {:.3}", a.mean_utilization);
    println!("deadline misses: {}", a.deadline_misses);

    println!("\nfirst windows:");
    println!("{:>6} {:>9} {:>10} {:>9} {:>8}", "window", "arrivals", "survivors", "gain", "util");
    for r in report.records.iter().take(8) {
        println!(
            "{:>6} {:>9} {:>10} {:>9.3} {:>8.3}",
            r.window_index, r.arrivals, r.survivors, r.gain, r.utilization
        );
    }
}
