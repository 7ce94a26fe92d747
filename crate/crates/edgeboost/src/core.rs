//! Domain types shared by every module: frames, exit levels, and the
//! difficulty score that drives both training-time sample selection and
//! online scheduling.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A single detected region of interest with its ground-truth confidence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoiDetection {
    /// Detector confidence in `[0, 1]`.
    pub confidence: f64,
    pub class_id: u32,
}

impl RoiDetection {
    pub fn new(confidence: f64, class_id: u32) -> Result<Self> {
        if !(0.0..=1.0).contains(&confidence) || confidence.is_nan() {
            return Err(Error::InvalidInput(format!(
                "RoI confidence {confidence} outside [0, 1]"
            )));
        }
        Ok(Self { confidence, class_id })
    }
}

/// One unit of work flowing through the pipeline.
///
/// `rois` carry ground truth for simulation; `content_signature`,
/// `cheap_object_count` and `cheap_confidence` are the observables the
/// pipeline filters act on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub id: u64,
    pub arrival_time_ms: f64,
    pub rois: Vec<RoiDetection>,
    /// Scalar in `[0, 1]` consumed by diff-based filters.
    pub content_signature: f64,
    /// Object count reported by a lightweight detector.
    pub cheap_object_count: u32,
    /// Confidence reported by a cheap cascade model, in `[0, 1]`.
    pub cheap_confidence: f64,
}

/// An enhancement exit level `kappa` out of `beta` backbone layers.
///
/// `kappa = 0` means no enhancement: the frame goes straight to the full
/// detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExitLevel {
    kappa: usize,
    beta: usize,
}

impl ExitLevel {
    pub fn new(kappa: usize, beta: usize) -> Result<Self> {
        if beta == 0 {
            return Err(Error::InvalidInput("beta must be positive".into()));
        }
        if kappa > beta {
            return Err(Error::InvalidInput(format!(
                "exit level {kappa} exceeds backbone depth {beta}"
            )));
        }
        Ok(Self { kappa, beta })
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn beta(&self) -> usize {
        self.beta
    }
}

/// Difficulty of a frame derived from its RoI confidences.
///
/// `confidence_score` is the mean RoI confidence; `difficulty` is its
/// complement, so larger means harder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifficultyScore {
    pub confidence_score: f64,
    pub difficulty: f64,
    pub has_objects: bool,
}

/// Mean RoI confidence of a frame, and the derived difficulty.
///
/// A frame with no RoIs has nothing to enhance and scores as maximally easy
/// (`confidence_score = 1.0`, `has_objects = false`).
pub fn confidence_score(rois: &[RoiDetection]) -> Result<DifficultyScore> {
    for roi in rois {
        if !(0.0..=1.0).contains(&roi.confidence) || roi.confidence.is_nan() {
            return Err(Error::InvalidInput(format!(
                "RoI confidence {} outside [0, 1]",
                roi.confidence
            )));
        }
    }
    if rois.is_empty() {
        return Ok(DifficultyScore {
            confidence_score: 1.0,
            difficulty: 0.0,
            has_objects: false,
        });
    }
    let mean = rois.iter().map(|r| r.confidence).sum::<f64>() / rois.len() as f64;
    Ok(DifficultyScore {
        confidence_score: mean,
        difficulty: 1.0 - mean,
        has_objects: true,
    })
}

/// A frame is hard iff its confidence score falls strictly below the
/// threshold.
pub fn classify_hard(score: &DifficultyScore, threshold: f64) -> bool {
    score.confidence_score < threshold
}

/// Number of difficulty buckets for a given granularity, or an error if the
/// granularity does not divide `[0, 1]` evenly.
pub fn bucket_count(granularity: f64) -> Result<usize> {
    if !(granularity > 0.0 && granularity <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "bucket granularity {granularity} outside (0, 1]"
        )));
    }
    let n = (1.0 / granularity).round();
    if (n * granularity - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "bucket granularity {granularity} does not divide 1 evenly"
        )));
    }
    Ok(n as usize)
}

/// Map a difficulty in `[0, 1]` to its bucket index.
///
/// `difficulty = 1.0` clamps into the last bucket so the buckets cover the
/// closed interval.
pub fn bucket_index(difficulty: f64, granularity: f64) -> Result<usize> {
    if !(0.0..=1.0).contains(&difficulty) || difficulty.is_nan() {
        return Err(Error::InvalidInput(format!(
            "difficulty {difficulty} outside [0, 1]"
        )));
    }
    let n = bucket_count(granularity)?;
    let idx = (difficulty / granularity).floor() as usize;
    Ok(idx.min(n - 1))
}

/// How an exit level splits work between the enhancer's decoder and the
/// detector's backbone: running `kappa` decoder layers lets the detector skip
/// the same `kappa` backbone layers.
pub fn exit_layer_split(level: ExitLevel) -> (usize, usize) {
    (level.kappa, level.kappa)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rois(confs: &[f64]) -> Vec<RoiDetection> {
        confs
            .iter()
            .map(|&c| RoiDetection { confidence: c, class_id: 0 })
            .collect()
    }

    #[test]
    fn confidence_score_is_mean() {
        let s = confidence_score(&rois(&[0.8, 0.6, 0.4])).unwrap();
        assert!((s.confidence_score - 0.6).abs() < 1e-12);
        assert!((s.difficulty - 0.4).abs() < 1e-12);
        assert!(s.has_objects);
    }

    #[test]
    fn single_perfect_roi() {
        let s = confidence_score(&rois(&[1.0])).unwrap();
        assert_eq!(s.confidence_score, 1.0);
        assert_eq!(s.difficulty, 0.0);
        assert!(s.has_objects);
    }

    #[test]
    fn empty_frame_is_easy() {
        let s = confidence_score(&[]).unwrap();
        assert_eq!(s.confidence_score, 1.0);
        assert!(!s.has_objects);
    }

    #[test]
    fn out_of_range_confidence_rejected() {
        assert!(confidence_score(&rois(&[1.2])).is_err());
        assert!(confidence_score(&rois(&[-0.1])).is_err());
        assert!(RoiDetection::new(f64::NAN, 0).is_err());
    }

    #[test]
    fn hardness_threshold_is_strict() {
        let mk = |c: f64| DifficultyScore {
            confidence_score: c,
            difficulty: 1.0 - c,
            has_objects: true,
        };
        assert!(classify_hard(&mk(0.59), 0.6));
        assert!(!classify_hard(&mk(0.60), 0.6));
        assert!(!classify_hard(&mk(0.95), 0.6));
    }

    #[test]
    fn bucket_index_floor_and_clamp() {
        assert_eq!(bucket_index(0.93, 0.1).unwrap(), 9);
        assert_eq!(bucket_index(1.0, 0.1).unwrap(), 9);
        assert_eq!(bucket_index(0.0, 0.1).unwrap(), 0);
    }

    #[test]
    fn non_dividing_granularity_rejected() {
        assert!(bucket_index(0.5, 0.3).is_err());
        assert!(bucket_count(0.0).is_err());
    }

    #[test]
    fn exit_split_mirrors_kappa() {
        assert_eq!(exit_layer_split(ExitLevel::new(0, 5).unwrap()), (0, 0));
        assert_eq!(exit_layer_split(ExitLevel::new(3, 5).unwrap()), (3, 3));
        assert_eq!(exit_layer_split(ExitLevel::new(5, 5).unwrap()), (5, 5));
        assert!(ExitLevel::new(6, 5).is_err());
    }

    #[test]
    fn buckets_partition_unit_interval() {
        // adjacent buckets have no gaps or overlaps
        let g = 0.1;
        let mut prev = 0;
        for i in 0..=1000 {
            let d = i as f64 / 1000.0;
            let b = bucket_index(d, g).unwrap();
            assert!(b >= prev, "bucket index must be non-decreasing");
            assert!(b - prev <= 1, "buckets must be adjacent");
            prev = b;
        }
        assert_eq!(prev, 9);
    }
}
