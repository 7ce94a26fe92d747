//! Generate a synthetic multi-camera trace and compare the three
//! frame-filtering strategies on it.

use edgeboost::vap::{generate_trace, FilterConfig, RateProcess, TraceConfig};

fn main() {
    let config = TraceConfig {
        duration_s: 60.0,
        fps: 25.0,
        cameras: 3,
        rate: RateProcess::Sinusoidal { period_s: 20.0, amplitude: 0.5 },
        seed: 7,
        ..TraceConfig::default()
    };
    let trace = generate_trace(&config).unwrap();
    println!(
        "generated {} frames from {} cameras over {} s",
        trace.len(),
        config.cameras,
        config.duration_s
    );

    let filters = [
        ("temporal diff (tau=0.03)", FilterConfig::Temporal { diff_threshold: 0.03 }),
        ("cheap model (>=1 object)", FilterConfig::CheapModel { min_objects: 1 }),
        ("cascade (0.03, conf<0.8)", FilterConfig::Cascade { diff_threshold: 0.03, conf_threshold: 0.8 }),
    ];
    println!("\n{:<28} {:>8} {:>9}", "filter", "kept", "kept %");
    for (label, filter) in &filters {
        let kept = filter.apply(&trace);
        println!(
            "{label:<28} {:>8} {:>8.1}%",
            kept.len(),
            100.0 * kept.len() as f64 / trace.len() as f64
        );
    }

    // tightening the temporal threshold only ever drops more frames
    println!("\ntemporal survival vs threshold:");
    for tau in [0.0, 0.01, 0.03, 0.1, 0.3] {
        let kept = FilterConfig::Temporal { diff_threshold: tau }.apply(&trace).len();
        println!("  tau={tau:<5} {kept:>6} kept");
    }
}
