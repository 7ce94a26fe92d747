//! Score a few frames by detector confidence and classify them as hard or
//! easy enhancement candidates.

use edgeboost::core::{bucket_index, classify_hard, confidence_score, RoiDetection};

fn main() {
    let scenes: &[(&str, &[f64])] = &[
        ("daylight, large objects", &[0.95, 0.91, 0.88]),
        ("dusk, mixed sizes", &[0.72, 0.55, 0.61]),
        ("night, small objects", &[0.31, 0.18, 0.42, 0.25]),
        ("single confident object", &[0.97]),
    ];
    let threshold = 0.6;

    println!("{:<28} {:>8} {:>10} {:>7} {:>6}", "scene", "theta", "difficulty", "bucket", "hard");
    for (name, confs) in scenes {
        let rois: Vec<RoiDetection> = confs
            .iter()
            .map(|&c| RoiDetection::new(c, 0).unwrap())
            .collect();
        let score = confidence_score(&rois).unwrap();
        println!(
            "{name:<28} {:>8.3} {:>10.3} {:>7} {:>6}",
            score.confidence_score,
            score.difficulty,
            bucket_index(score.difficulty, 0.1).unwrap(),
            classify_hard(&score, threshold)
        );
    }

    // frames with no detections are treated as easy and never enhanced
    let empty = confidence_score(&[]).unwrap();
    println!(
        "\nempty frame: theta {:.1}, has_objects {}, hard {}",
        empty.confidence_score,
        empty.has_objects,
        classify_hard(&empty, threshold)
    );
}
