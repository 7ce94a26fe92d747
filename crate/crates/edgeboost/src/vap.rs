//! Synthetic frame traces and the cascaded pipeline filters that prune them.
//!
//! The trace generator stands in for real camera streams: it produces frames
//! with ground-truth RoI confidences, a drifting content signature for
//! diff-based filters, and cheap-model observables correlated with the ground
//! truth. The three filters mirror the classic pipeline pruning strategies:
//! inter-frame difference, a lightweight object counter, and a
//! difference-plus-cheap-DNN cascade.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::core::{confidence_score, Frame, RoiDetection};
use crate::{Error, Result};

/// Arrival-intensity model for a camera stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateProcess {
    /// Every frame slot emits a frame.
    Constant,
    /// Slot emission probability follows `1 + amplitude * sin(2*pi*t/period)`,
    /// clamped into `[0, 1]`.
    Sinusoidal { period_s: f64, amplitude: f64 },
    /// Slots emit at a low base rate, with full-rate bursts of `burst_len`
    /// slots triggered with probability `burst_prob` per slot.
    Bursty { burst_prob: f64, burst_len: u32 },
}

/// One component of the difficulty mixture: with probability proportional to
/// `weight`, the frame's mean confidence is drawn uniformly from
/// `[theta_min, theta_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixComponent {
    pub weight: f64,
    pub theta_min: f64,
    pub theta_max: f64,
}

/// Mixture of difficulty distributions, plus the chance of an object-free
/// frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifficultyMix {
    pub components: Vec<MixComponent>,
    /// Probability that a frame carries no RoIs at all.
    pub empty_prob: f64,
}

impl Default for DifficultyMix {
    fn default() -> Self {
        // mostly easy traffic with a heavy hard tail
        Self {
            components: vec![
                MixComponent { weight: 0.7, theta_min: 0.8, theta_max: 1.0 },
                MixComponent { weight: 0.3, theta_min: 0.2, theta_max: 0.6 },
            ],
            empty_prob: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    pub duration_s: f64,
    /// Frames per second per camera.
    pub fps: f64,
    pub cameras: u32,
    pub rate: RateProcess,
    pub difficulty_mix: DifficultyMix,
    /// Standard deviation of the per-frame content-signature random walk.
    pub content_drift: f64,
    /// Correlation between the cheap model's observables and ground truth.
    pub cheap_correlation: f64,
    pub seed: u64,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            duration_s: 10.0,
            fps: 25.0,
            cameras: 1,
            rate: RateProcess::Constant,
            difficulty_mix: DifficultyMix::default(),
            content_drift: 0.05,
            cheap_correlation: 0.8,
            seed: 0,
        }
    }
}

impl TraceConfig {
    fn validate(&self) -> Result<()> {
        if !(self.fps > 0.0) {
            return Err(Error::InvalidConfig("fps must be positive".into()));
        }
        if self.cameras < 1 {
            return Err(Error::InvalidConfig("at least one camera required".into()));
        }
        if !(self.duration_s > 0.0) {
            return Err(Error::InvalidConfig("duration must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.difficulty_mix.empty_prob) {
            return Err(Error::InvalidConfig("empty_prob outside [0, 1]".into()));
        }
        if self.difficulty_mix.components.is_empty() {
            return Err(Error::InvalidConfig("difficulty mix needs at least one component".into()));
        }
        for c in &self.difficulty_mix.components {
            if c.weight <= 0.0 {
                return Err(Error::InvalidConfig("mix weights must be positive".into()));
            }
            if !(0.0 <= c.theta_min && c.theta_min <= c.theta_max && c.theta_max <= 1.0) {
                return Err(Error::InvalidConfig("mix theta bounds must satisfy 0 <= min <= max <= 1".into()));
            }
        }
        if self.content_drift < 0.0 {
            return Err(Error::InvalidConfig("content_drift must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.cheap_correlation) {
            return Err(Error::InvalidConfig("cheap_correlation outside [0, 1]".into()));
        }
        match self.rate {
            RateProcess::Constant => {}
            RateProcess::Sinusoidal { period_s, amplitude } => {
                if !(period_s > 0.0) || !(0.0..=1.0).contains(&amplitude) {
                    return Err(Error::InvalidConfig("sinusoidal rate needs period > 0 and amplitude in [0, 1]".into()));
                }
            }
            RateProcess::Bursty { burst_prob, burst_len } => {
                if !(0.0..=1.0).contains(&burst_prob) || burst_len == 0 {
                    return Err(Error::InvalidConfig("bursty rate needs burst_prob in [0, 1] and burst_len >= 1".into()));
                }
            }
        }
        Ok(())
    }
}

/// Base emission probability outside a burst, for the bursty rate process.
const BURSTY_BASE_RATE: f64 = 0.3;

/// Generate a seeded, reproducible synthetic trace.
///
/// Each camera draws from its own ChaCha stream (stream id = camera index +
/// 1), so per-camera content is stable under changes to the camera count.
/// Frames are merged across cameras in arrival order and re-numbered.
pub fn generate_trace(config: &TraceConfig) -> Result<Vec<Frame>> {
    config.validate()?;
    let slots = (config.duration_s * config.fps).floor() as u64;
    let weight_sum: f64 = config.difficulty_mix.components.iter().map(|c| c.weight).sum();
    let conf_jitter = Normal::new(0.0, 0.05).expect("valid sigma");
    let drift = if config.content_drift > 0.0 {
        Some(Normal::new(0.0, config.content_drift).expect("valid sigma"))
    } else {
        None
    };

    // (arrival, camera, frame without id)
    let mut merged: Vec<(f64, u32, Frame)> = Vec::new();
    for camera in 0..config.cameras {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(camera as u64 + 1);
        let mut signature: f64 = rng.gen();
        let mut burst_left = 0u32;
        for slot in 0..slots {
            let t_s = slot as f64 / config.fps;
            let emit = match config.rate {
                RateProcess::Constant => true,
                RateProcess::Sinusoidal { period_s, amplitude } => {
                    let p = (1.0 + amplitude * (2.0 * std::f64::consts::PI * t_s / period_s).sin())
                        .clamp(0.0, 1.0);
                    rng.gen::<f64>() < p
                }
                RateProcess::Bursty { burst_prob, burst_len } => {
                    if burst_left == 0 && rng.gen::<f64>() < burst_prob {
                        burst_left = burst_len;
                    }
                    if burst_left > 0 {
                        burst_left -= 1;
                        true
                    } else {
                        rng.gen::<f64>() < BURSTY_BASE_RATE
                    }
                }
            };
            if let Some(d) = drift {
                signature = (signature + d.sample(&mut rng)).clamp(0.0, 1.0);
            }
            if !emit {
                continue;
            }

            let rois = if rng.gen::<f64>() < config.difficulty_mix.empty_prob {
                Vec::new()
            } else {
                let mut pick = rng.gen::<f64>() * weight_sum;
                let mut component = &config.difficulty_mix.components[0];
                for c in &config.difficulty_mix.components {
                    pick -= c.weight;
                    component = c;
                    if pick <= 0.0 {
                        break;
                    }
                }
                let theta = rng.gen_range(component.theta_min..=component.theta_max);
                let count = rng.gen_range(1..=6);
                (0..count)
                    .map(|_| RoiDetection {
                        confidence: (theta + conf_jitter.sample(&mut rng)).clamp(0.0, 1.0),
                        class_id: rng.gen_range(0..10),
                    })
                    .collect()
            };

            let score = confidence_score(&rois)?;
            let rho = config.cheap_correlation;
            let cheap_object_count = (rho * rois.len() as f64
                + (1.0 - rho) * rng.gen_range(0.0..6.0))
                .round()
                .max(0.0) as u32;
            let cheap_confidence =
                (rho * score.confidence_score + (1.0 - rho) * rng.gen::<f64>()).clamp(0.0, 1.0);

            merged.push((
                t_s * 1000.0,
                camera,
                Frame {
                    id: 0,
                    arrival_time_ms: t_s * 1000.0,
                    rois,
                    content_signature: signature,
                    cheap_object_count,
                    cheap_confidence,
                },
            ));
        }
    }

    merged.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(merged
        .into_iter()
        .enumerate()
        .map(|(i, (_, _, mut frame))| {
            frame.id = i as u64;
            frame
        })
        .collect())
}

/// Filter variants selectable at the pipeline level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum FilterConfig {
    /// Keep a frame iff its signature moved more than `diff_threshold` from
    /// the last surviving frame.
    Temporal { diff_threshold: f64 },
    /// Keep a frame iff the cheap detector reports at least `min_objects`.
    CheapModel { min_objects: u32 },
    /// Temporal difference followed by a cheap-confidence check.
    Cascade { diff_threshold: f64, conf_threshold: f64 },
}

impl FilterConfig {
    pub fn apply(&self, frames: &[Frame]) -> Vec<Frame> {
        match *self {
            FilterConfig::Temporal { diff_threshold } => temporal_diff_filter(frames, diff_threshold),
            FilterConfig::CheapModel { min_objects } => cheap_model_filter(frames, min_objects),
            FilterConfig::Cascade { diff_threshold, conf_threshold } => {
                cascade_filter(frames, diff_threshold, conf_threshold)
            }
        }
    }
}

/// Motion-trigger pruning: a frame survives iff its content signature moved
/// strictly more than the threshold since the last *surviving* frame. The
/// first frame always survives.
pub fn temporal_diff_filter(frames: &[Frame], diff_threshold: f64) -> Vec<Frame> {
    let mut out: Vec<Frame> = Vec::new();
    let mut last_signature: Option<f64> = None;
    for frame in frames {
        let survives = match last_signature {
            None => true,
            Some(sig) => (frame.content_signature - sig).abs() > diff_threshold,
        };
        if survives {
            last_signature = Some(frame.content_signature);
            out.push(frame.clone());
        }
    }
    out
}

/// Cheap-detector pruning: a frame survives iff the lightweight model saw at
/// least `min_objects` objects.
pub fn cheap_model_filter(frames: &[Frame], min_objects: u32) -> Vec<Frame> {
    frames
        .iter()
        .filter(|f| f.cheap_object_count >= min_objects)
        .cloned()
        .collect()
}

/// Cascade pruning: the temporal-difference rule, then a cheap DNN keeps only
/// frames it is unsure about (`cheap_confidence < conf_threshold`).
pub fn cascade_filter(frames: &[Frame], diff_threshold: f64, conf_threshold: f64) -> Vec<Frame> {
    let mut out: Vec<Frame> = Vec::new();
    let mut last_signature: Option<f64> = None;
    for frame in frames {
        let passes_diff = match last_signature {
            None => true,
            Some(sig) => (frame.content_signature - sig).abs() > diff_threshold,
        };
        if passes_diff {
            // the diff stage anchors on frames it passes, whether or not the
            // confidence stage keeps them
            last_signature = Some(frame.content_signature);
            if frame.cheap_confidence < conf_threshold {
                out.push(frame.clone());
            }
        }
    }
    out
}

/// Write a trace as one JSON record per line.
pub fn write_trace<W: Write>(mut w: W, frames: &[Frame]) -> Result<()> {
    for frame in frames {
        let record = TraceRecord {
            id: frame.id,
            arrival_time_ms: frame.arrival_time_ms,
            roi_confidences: frame.rois.iter().map(|r| r.confidence).collect(),
            content_signature: frame.content_signature,
            cheap_object_count: frame.cheap_object_count,
            cheap_confidence: frame.cheap_confidence,
        };
        serde_json::to_writer(&mut w, &record)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Read a trace written by [`write_trace`], re-validating frame invariants.
pub fn read_trace<R: BufRead>(r: R) -> Result<Vec<Frame>> {
    let mut frames = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut last_arrival = f64::NEG_INFINITY;
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TraceRecord = serde_json::from_str(&line)?;
        if !seen.insert(record.id) {
            return Err(Error::InvalidInput(format!("duplicate frame id {}", record.id)));
        }
        if record.arrival_time_ms < last_arrival {
            return Err(Error::InvalidInput(format!(
                "arrival times must be non-decreasing (frame {})",
                record.id
            )));
        }
        last_arrival = record.arrival_time_ms;
        let rois = record
            .roi_confidences
            .iter()
            .map(|&c| RoiDetection::new(c, 0))
            .collect::<Result<Vec<_>>>()?;
        frames.push(Frame {
            id: record.id,
            arrival_time_ms: record.arrival_time_ms,
            rois,
            content_signature: record.content_signature,
            cheap_object_count: record.cheap_object_count,
            cheap_confidence: record.cheap_confidence,
        });
    }
    Ok(frames)
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceRecord {
    id: u64,
    arrival_time_ms: f64,
    roi_confidences: Vec<f64>,
    content_signature: f64,
    cheap_object_count: u32,
    cheap_confidence: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::classify_hard;

    fn frame(id: u64, signature: f64, count: u32, cheap_conf: f64) -> Frame {
        Frame {
            id,
            arrival_time_ms: id as f64 * 40.0,
            rois: vec![],
            content_signature: signature,
            cheap_object_count: count,
            cheap_confidence: cheap_conf,
        }
    }

    #[test]
    fn constant_rate_spacing() {
        let config = TraceConfig {
            duration_s: 1.0,
            fps: 25.0,
            cameras: 1,
            ..TraceConfig::default()
        };
        let trace = generate_trace(&config).unwrap();
        assert_eq!(trace.len(), 25);
        for (i, f) in trace.iter().enumerate() {
            assert_eq!(f.id, i as u64);
            assert!((f.arrival_time_ms - i as f64 * 40.0).abs() < 1e-9);
        }
    }

    #[test]
    fn same_seed_same_trace() {
        let config = TraceConfig { seed: 42, cameras: 3, ..TraceConfig::default() };
        assert_eq!(generate_trace(&config).unwrap(), generate_trace(&config).unwrap());
    }

    #[test]
    fn point_mass_easy_mix() {
        let config = TraceConfig {
            difficulty_mix: DifficultyMix {
                components: vec![MixComponent { weight: 1.0, theta_min: 1.0, theta_max: 1.0 }],
                empty_prob: 0.0,
            },
            ..TraceConfig::default()
        };
        for f in generate_trace(&config).unwrap() {
            let score = confidence_score(&f.rois).unwrap();
            assert!(!classify_hard(&score, 0.6));
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let bad = TraceConfig { fps: 0.0, ..TraceConfig::default() };
        assert!(generate_trace(&bad).is_err());
        let bad = TraceConfig { cameras: 0, ..TraceConfig::default() };
        assert!(generate_trace(&bad).is_err());
    }

    #[test]
    fn temporal_filter_tracks_last_survivor() {
        let frames = vec![frame(0, 0.0, 0, 0.0), frame(1, 0.0, 0, 0.0), frame(2, 0.5, 0, 0.0)];
        let out = temporal_diff_filter(&frames, 0.1);
        assert_eq!(out.iter().map(|f| f.id).collect::<Vec<_>>(), vec![0, 2]);
        // zero threshold keeps any change, drops exact repeats
        let out = temporal_diff_filter(&frames, 0.0);
        assert_eq!(out.iter().map(|f| f.id).collect::<Vec<_>>(), vec![0, 2]);
        // single frame survives
        assert_eq!(temporal_diff_filter(&frames[..1], 0.9).len(), 1);
    }

    #[test]
    fn cheap_model_filter_counts() {
        let frames = vec![frame(0, 0.0, 0, 0.0), frame(1, 0.0, 2, 0.0), frame(2, 0.0, 1, 0.0)];
        let out = cheap_model_filter(&frames, 1);
        assert_eq!(out.iter().map(|f| f.id).collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(cheap_model_filter(&frames, 0).len(), 3);
        let zeros = vec![frame(0, 0.0, 0, 0.0)];
        assert!(cheap_model_filter(&zeros, 1).is_empty());
    }

    #[test]
    fn cascade_filter_conjunction() {
        let frames = vec![
            frame(0, 0.0, 0, 0.3),  // passes diff (first), low confidence -> kept
            frame(1, 0.5, 0, 0.9),  // passes diff, confident -> dropped
            frame(2, 0.55, 0, 0.1), // fails diff vs frame 1 -> dropped
            frame(3, 0.9, 0, 0.2),  // passes diff, unsure -> kept
        ];
        let out = cascade_filter(&frames, 0.1, 0.5);
        assert_eq!(out.iter().map(|f| f.id).collect::<Vec<_>>(), vec![0, 3]);
    }

    #[test]
    fn filters_produce_subsequences() {
        let config = TraceConfig { seed: 9, ..TraceConfig::default() };
        let trace = generate_trace(&config).unwrap();
        for filter in [
            FilterConfig::Temporal { diff_threshold: 0.05 },
            FilterConfig::CheapModel { min_objects: 2 },
            FilterConfig::Cascade { diff_threshold: 0.05, conf_threshold: 0.7 },
        ] {
            let out = filter.apply(&trace);
            let mut iter = trace.iter();
            for kept in &out {
                assert!(iter.any(|f| f.id == kept.id), "output must be a subsequence");
            }
        }
    }

    #[test]
    fn survival_monotone_in_thresholds() {
        let config = TraceConfig { seed: 5, ..TraceConfig::default() };
        let trace = generate_trace(&config).unwrap();
        let mut last = usize::MAX;
        for tau in [0.0, 0.02, 0.05, 0.1, 0.3] {
            let n = temporal_diff_filter(&trace, tau).len();
            assert!(n <= last);
            last = n;
            // cascade never keeps more than plain diff at the same tau
            assert!(cascade_filter(&trace, tau, 0.7).len() <= n);
        }
        let mut last = usize::MAX;
        for min in 0..5 {
            let n = cheap_model_filter(&trace, min).len();
            assert!(n <= last);
            last = n;
        }
    }

    #[test]
    fn trace_round_trip() {
        let config = TraceConfig { seed: 11, duration_s: 2.0, ..TraceConfig::default() };
        let trace = generate_trace(&config).unwrap();
        let mut buf = Vec::new();
        write_trace(&mut buf, &trace).unwrap();
        let back = read_trace(&buf[..]).unwrap();
        assert_eq!(trace.len(), back.len());
        for (a, b) in trace.iter().zip(&back) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.arrival_time_ms, b.arrival_time_ms);
            assert_eq!(a.content_signature, b.content_signature);
            assert_eq!(
                a.rois.iter().map(|r| r.confidence).collect::<Vec<_>>(),
                b.rois.iter().map(|r| r.confidence).collect::<Vec<_>>()
            );
        }
    }
}
