//! Build the bundled demo latency/accuracy profile pair, inspect batching
//! behaviour, and round-trip the pair through its JSON document form.

use edgeboost::cli::demo_profiles;
use edgeboost::core::ExitLevel;
use edgeboost::profiles::{deserialize_profiles, serialize_profiles};

fn main() {
    let beta = 5;
    let detector_ms = 1000.0 / 84.0; // mid-weight detector on a T4-class GPU
    let (latency, accuracy) = demo_profiles(detector_ms, beta).unwrap();

    println!("single-frame latency per exit level (ms):");
    for k in 0..=beta {
        let level = ExitLevel::new(k, beta).unwrap();
        println!("  kappa={k}: {:>7.3}", latency.latency_single(level).unwrap());
    }

    let deepest = ExitLevel::new(beta, beta).unwrap();
    println!("\nbatched latency at the deepest exit (ms, vs n * single):");
    let single = latency.latency_single(deepest).unwrap();
    for n in [1u32, 3, 8, 20, 50] {
        let batched = latency.latency_batch(deepest, n).unwrap();
        println!(
            "  n={n:<3} {:>9.2}  ({:>5.1}% of {:.2})",
            batched,
            100.0 * batched / (n as f64 * single),
            n as f64 * single
        );
    }

    println!("\naccuracy gain by difficulty bucket (deepest exit):");
    for (b, row) in accuracy.gains().iter().enumerate() {
        println!("  bucket {b} ([{:.1}, {:.1})): {:>6.3}", b as f64 / 10.0, (b + 1) as f64 / 10.0, row[beta]);
    }

    let doc = serialize_profiles(&latency, &accuracy).unwrap();
    let (l2, a2) = deserialize_profiles(&doc).unwrap();
    assert_eq!(latency, l2);
    assert_eq!(accuracy, a2);
    println!("\nround trip through the {}-byte JSON document is exact", doc.len());
}
