//! Offline enhancement profiles: the latency grid `I(kappa, n)` and the
//! bucketized accuracy-gain table `P(kappa, theta)` the scheduler consumes.
//!
//! Latency decomposes as `I_kappa = mu_D + epsilon_kappa + nu_kappa`:
//! discriminator, generator decoder up to exit `kappa`, and detector with
//! `kappa` backbone layers skipped. `I_0 = mu_D + nu_0` (generator absent).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::core::{bucket_count, bucket_index, ExitLevel};
use crate::{Error, Result};

/// Grid/component consistency tolerance at batch size 1, in milliseconds.
const GRID_CONSISTENCY_TOL_MS: f64 = 1e-6;

/// Batch sizes profiled by default.
pub const DEFAULT_BATCH_SIZES: [u32; 6] = [1, 2, 4, 8, 16, 32];

/// Measured inference latency indexed by exit level and batch size.
#[derive(Debug, Clone, PartialEq)]
pub struct LatencyProfile {
    mu_d_ms: f64,
    epsilon_ms: Vec<f64>,
    nu_ms: Vec<f64>,
    batch_grid: BTreeMap<(usize, u32), f64>,
    beta: usize,
}

impl LatencyProfile {
    /// Build a profile from its components and batch grid, validating every
    /// structural invariant.
    pub fn new(
        mu_d_ms: f64,
        epsilon_ms: Vec<f64>,
        nu_ms: Vec<f64>,
        batch_grid: BTreeMap<(usize, u32), f64>,
        beta: usize,
    ) -> Result<Self> {
        let p = Self { mu_d_ms, epsilon_ms, nu_ms, batch_grid, beta };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        let levels = self.beta + 1;
        if self.beta == 0 {
            return Err(Error::InvalidProfile("beta must be positive".into()));
        }
        if self.epsilon_ms.len() != levels || self.nu_ms.len() != levels {
            return Err(Error::InvalidProfile(format!(
                "epsilon/nu must have {levels} entries (kappa = 0..beta)"
            )));
        }
        if self.mu_d_ms < 0.0 || !self.mu_d_ms.is_finite() {
            return Err(Error::InvalidProfile("mu_d_ms must be finite and >= 0".into()));
        }
        if self.epsilon_ms[0] != 0.0 {
            return Err(Error::InvalidProfile("epsilon_0 must be 0 (generator absent at kappa=0)".into()));
        }
        for k in 1..levels {
            if self.epsilon_ms[k] < self.epsilon_ms[k - 1] {
                return Err(Error::InvalidProfile(format!(
                    "epsilon must be non-decreasing in kappa (violated at kappa={k})"
                )));
            }
            if self.nu_ms[k] > self.nu_ms[k - 1] {
                return Err(Error::InvalidProfile(format!(
                    "nu must be non-increasing in kappa (violated at kappa={k})"
                )));
            }
        }
        if self.nu_ms.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(Error::InvalidProfile("nu entries must be finite and >= 0".into()));
        }
        for (&(kappa, n), &ms) in &self.batch_grid {
            if kappa > self.beta {
                return Err(Error::InvalidProfile(format!("grid kappa {kappa} exceeds beta {}", self.beta)));
            }
            if n == 0 {
                return Err(Error::InvalidProfile("grid batch size must be >= 1".into()));
            }
            if ms < 0.0 || !ms.is_finite() {
                return Err(Error::InvalidProfile(format!("grid cell ({kappa},{n}) must be finite and >= 0")));
            }
        }
        for kappa in 0..levels {
            let single = match self.batch_grid.get(&(kappa, 1)) {
                Some(v) => *v,
                None => {
                    return Err(Error::InvalidProfile(format!(
                        "missing grid cell (kappa={kappa}, n=1)"
                    )))
                }
            };
            let components = self.mu_d_ms + self.epsilon_ms[kappa] + self.nu_ms[kappa];
            if (single - components).abs() > GRID_CONSISTENCY_TOL_MS {
                return Err(Error::InvalidProfile(format!(
                    "grid cell (kappa={kappa}, n=1) = {single} ms disagrees with components {components} ms"
                )));
            }
            // within each level: total cost non-decreasing in n, per-frame
            // cost non-increasing in n
            let cells: Vec<(u32, f64)> = self
                .batch_grid
                .range((kappa, 1)..=(kappa, u32::MAX))
                .map(|(&(_, n), &ms)| (n, ms))
                .collect();
            for w in cells.windows(2) {
                let (n0, ms0) = w[0];
                let (n1, ms1) = w[1];
                if ms1 < ms0 - 1e-9 {
                    return Err(Error::InvalidProfile(format!(
                        "grid latency must be non-decreasing in n (kappa={kappa}, n={n0}->{n1})"
                    )));
                }
                if ms1 / n1 as f64 > ms0 / n0 as f64 + 1e-9 {
                    return Err(Error::InvalidProfile(format!(
                        "per-frame grid latency must be non-increasing in n (kappa={kappa}, n={n0}->{n1})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn beta(&self) -> usize {
        self.beta
    }

    pub fn mu_d_ms(&self) -> f64 {
        self.mu_d_ms
    }

    pub fn epsilon_ms(&self) -> &[f64] {
        &self.epsilon_ms
    }

    pub fn nu_ms(&self) -> &[f64] {
        &self.nu_ms
    }

    pub fn batch_grid(&self) -> &BTreeMap<(usize, u32), f64> {
        &self.batch_grid
    }

    /// Single-frame latency `I_kappa = mu_D + epsilon_kappa + nu_kappa`.
    pub fn latency_single(&self, kappa: ExitLevel) -> Result<f64> {
        let k = self.check_level(kappa)?;
        Ok(self.mu_d_ms + self.epsilon_ms[k] + self.nu_ms[k])
    }

    /// Batched latency `I(kappa, n)`.
    ///
    /// Exact grid hits return the profiled value. Sizes between grid points
    /// round up to the next profiled size; sizes above the grid scale the
    /// largest entry linearly. Both policies over-estimate, never under.
    pub fn latency_batch(&self, kappa: ExitLevel, n: u32) -> Result<f64> {
        let k = self.check_level(kappa)?;
        if n == 0 {
            return Ok(0.0);
        }
        if let Some((_, &ms)) = self.batch_grid.range((k, n)..=(k, u32::MAX)).next() {
            return Ok(ms);
        }
        // above the grid: scale the largest profiled entry
        let (&(_, n_max), &ms_max) = self
            .batch_grid
            .range((k, 1)..=(k, u32::MAX))
            .next_back()
            .expect("validated grid has an n=1 cell per level");
        Ok(ms_max * n as f64 / n_max as f64)
    }

    fn check_level(&self, kappa: ExitLevel) -> Result<usize> {
        if kappa.beta() != self.beta {
            return Err(Error::InvalidInput(format!(
                "exit level beta {} does not match profile beta {}",
                kappa.beta(),
                self.beta
            )));
        }
        Ok(kappa.kappa())
    }

    /// Copy of this profile with the discriminator cost removed: `mu_D` set
    /// to zero and `n * mu_D` subtracted from every grid cell.
    ///
    /// The simulator charges discriminator time separately, once per frame,
    /// and hands the scheduler a profile that only prices the enhancer and
    /// detector.
    pub fn without_discriminator(&self) -> Result<Self> {
        let grid = self
            .batch_grid
            .iter()
            .map(|(&(k, n), &ms)| ((k, n), (ms - n as f64 * self.mu_d_ms).max(0.0)))
            .collect();
        Self::new(0.0, self.epsilon_ms.clone(), self.nu_ms.clone(), grid, self.beta)
    }
}

/// Average per-(kappa, n) run times and component measurements into a
/// validated [`LatencyProfile`].
///
/// The `(kappa, 1)` grid cell is checked against the component sum and then
/// snapped to it, so the two redundant representations agree exactly.
pub fn build_latency_profile(
    mu_d_runs: &[f64],
    epsilon_runs: &[Vec<f64>],
    nu_runs: &[Vec<f64>],
    grid_runs: &BTreeMap<(usize, u32), Vec<f64>>,
    beta: usize,
) -> Result<LatencyProfile> {
    fn mean(runs: &[f64], what: &str) -> Result<f64> {
        if runs.is_empty() {
            return Err(Error::InvalidProfile(format!("no runs for {what}")));
        }
        Ok(runs.iter().sum::<f64>() / runs.len() as f64)
    }

    let levels = beta + 1;
    if epsilon_runs.len() != levels || nu_runs.len() != levels {
        return Err(Error::InvalidProfile(format!(
            "component measurements must cover kappa = 0..{beta}"
        )));
    }
    let mu = mean(mu_d_runs, "mu_D")?;
    let epsilon: Vec<f64> = epsilon_runs
        .iter()
        .enumerate()
        .map(|(k, runs)| mean(runs, &format!("epsilon_{k}")))
        .collect::<Result<_>>()?;
    let nu: Vec<f64> = nu_runs
        .iter()
        .enumerate()
        .map(|(k, runs)| mean(runs, &format!("nu_{k}")))
        .collect::<Result<_>>()?;

    let mut grid = BTreeMap::new();
    for (&(k, n), runs) in grid_runs {
        grid.insert((k, n), mean(runs, &format!("grid cell ({k},{n})"))?);
    }
    for k in 0..levels {
        let components = mu + epsilon[k] + nu[k];
        match grid.get_mut(&(k, 1)) {
            Some(cell) => {
                if (*cell - components).abs() > GRID_CONSISTENCY_TOL_MS {
                    return Err(Error::InvalidProfile(format!(
                        "grid cell (kappa={k}, n=1) = {cell} ms disagrees with components {components} ms"
                    )));
                }
                *cell = components;
            }
            None => {
                return Err(Error::InvalidProfile(format!(
                    "missing grid measurements for (kappa={k}, n=1)"
                )))
            }
        }
    }
    LatencyProfile::new(mu, epsilon, nu, grid, beta)
}

/// Expected accuracy gain per (difficulty bucket, exit level).
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyProfile {
    granularity: f64,
    /// `gains[bucket][kappa]`, absolute accuracy points.
    gains: Vec<Vec<f64>>,
    beta: usize,
}

impl AccuracyProfile {
    pub fn new(granularity: f64, gains: Vec<Vec<f64>>, beta: usize) -> Result<Self> {
        let buckets = bucket_count(granularity)?;
        if beta == 0 {
            return Err(Error::InvalidProfile("beta must be positive".into()));
        }
        if gains.len() != buckets {
            return Err(Error::InvalidProfile(format!(
                "gain table must have {buckets} bucket rows, got {}",
                gains.len()
            )));
        }
        for (b, row) in gains.iter().enumerate() {
            if row.len() != beta + 1 {
                return Err(Error::InvalidProfile(format!(
                    "bucket {b} must have {} exit columns, got {}",
                    beta + 1,
                    row.len()
                )));
            }
            if row[0] != 0.0 {
                return Err(Error::InvalidProfile(format!(
                    "gains[{b}][0] must be 0 (no enhancement, no gain)"
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidProfile(format!("bucket {b} contains a non-finite gain")));
            }
        }
        Ok(Self { granularity, gains, beta })
    }

    pub fn granularity(&self) -> f64 {
        self.granularity
    }

    pub fn beta(&self) -> usize {
        self.beta
    }

    pub fn gains(&self) -> &[Vec<f64>] {
        &self.gains
    }

    /// Expected gain of running exit `kappa` on a frame of this difficulty.
    pub fn accuracy_gain(&self, difficulty: f64, kappa: ExitLevel) -> Result<f64> {
        if kappa.beta() != self.beta {
            return Err(Error::InvalidInput(format!(
                "exit level beta {} does not match profile beta {}",
                kappa.beta(),
                self.beta
            )));
        }
        let b = bucket_index(difficulty, self.granularity)?;
        Ok(self.gains[b][kappa.kappa()])
    }

    /// Whether every bucket row is non-decreasing in kappa.
    pub fn is_monotone(&self) -> bool {
        self.gains
            .iter()
            .all(|row| row.windows(2).all(|w| w[1] >= w[0]))
    }

    /// Running-maximum over kappa per bucket, so deeper exits never look
    /// worse than shallower ones. Idempotent; the kappa=0 zero floor also
    /// clamps raw negative gains.
    pub fn enforce_monotone(&self) -> AccuracyProfile {
        let gains = self
            .gains
            .iter()
            .map(|row| {
                let mut running = 0.0f64;
                row.iter()
                    .map(|&v| {
                        running = running.max(v);
                        running
                    })
                    .collect()
            })
            .collect();
        AccuracyProfile { granularity: self.granularity, gains, beta: self.beta }
    }
}

/// One offline profiling measurement: the gain observed when enhancing a
/// frame of known difficulty at a given exit level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub difficulty: f64,
    pub kappa: usize,
    pub gain: f64,
}

/// Bucketize profiling samples into an [`AccuracyProfile`].
///
/// Each cell is the mean gain of its samples. Empty cells borrow from the
/// nearest non-empty bucket at the same kappa (ties resolved toward the
/// harder bucket); a fully empty kappa column stays zero.
pub fn build_accuracy_profile(
    samples: &[ProfileSample],
    granularity: f64,
    beta: usize,
) -> Result<AccuracyProfile> {
    let buckets = bucket_count(granularity)?;
    if beta == 0 {
        return Err(Error::InvalidProfile("beta must be positive".into()));
    }
    let mut sums = vec![vec![0.0f64; beta + 1]; buckets];
    let mut counts = vec![vec![0usize; beta + 1]; buckets];
    for s in samples {
        if s.kappa > beta {
            return Err(Error::InvalidInput(format!(
                "sample kappa {} exceeds beta {beta}",
                s.kappa
            )));
        }
        let b = bucket_index(s.difficulty, granularity)?;
        sums[b][s.kappa] += s.gain;
        counts[b][s.kappa] += 1;
    }
    let mut gains = vec![vec![0.0f64; beta + 1]; buckets];
    for kappa in 1..=beta {
        let filled: Vec<usize> = (0..buckets).filter(|&b| counts[b][kappa] > 0).collect();
        for b in 0..buckets {
            if counts[b][kappa] > 0 {
                gains[b][kappa] = sums[b][kappa] / counts[b][kappa] as f64;
            } else if !filled.is_empty() {
                // nearest non-empty bucket, ties toward harder (larger index)
                let nearest = filled
                    .iter()
                    .copied()
                    .min_by_key(|&src| {
                        let dist = src.abs_diff(b);
                        (dist, if src > b { 0 } else { 1 })
                    })
                    .unwrap();
                gains[b][kappa] = sums[nearest][kappa] / counts[nearest][kappa] as f64;
            }
        }
    }
    AccuracyProfile::new(granularity, gains, beta)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GridCellDoc {
    kappa: usize,
    n: u32,
    ms: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LatencyDoc {
    mu_d_ms: f64,
    epsilon_ms: Vec<f64>,
    nu_ms: Vec<f64>,
    batch_grid: Vec<GridCellDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct AccuracyDoc {
    granularity: f64,
    gains: Vec<Vec<f64>>,
}

/// On-disk form of a profile pair; see [`serialize_profiles`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileDocument {
    beta: usize,
    latency: LatencyDoc,
    accuracy: AccuracyDoc,
}

impl ProfileDocument {
    /// Capture a validated profile pair for serialization.
    pub fn encode(latency: &LatencyProfile, accuracy: &AccuracyProfile) -> Result<Self> {
        if latency.beta() != accuracy.beta() {
            return Err(Error::InvalidProfile(format!(
                "latency beta {} does not match accuracy beta {}",
                latency.beta(),
                accuracy.beta()
            )));
        }
        Ok(ProfileDocument {
            beta: latency.beta(),
            latency: LatencyDoc {
                mu_d_ms: latency.mu_d_ms,
                epsilon_ms: latency.epsilon_ms.clone(),
                nu_ms: latency.nu_ms.clone(),
                batch_grid: latency
                    .batch_grid
                    .iter()
                    .map(|(&(kappa, n), &ms)| GridCellDoc { kappa, n, ms })
                    .collect(),
            },
            accuracy: AccuracyDoc {
                granularity: accuracy.granularity,
                gains: accuracy.gains.clone(),
            },
        })
    }

    /// Rebuild the profile pair, re-validating every invariant.
    pub fn decode(&self) -> Result<(LatencyProfile, AccuracyProfile)> {
        let mut grid = BTreeMap::new();
        for cell in &self.latency.batch_grid {
            if grid.insert((cell.kappa, cell.n), cell.ms).is_some() {
                return Err(Error::InvalidProfile(format!(
                    "duplicate grid cell (kappa={}, n={})",
                    cell.kappa, cell.n
                )));
            }
        }
        let latency = LatencyProfile::new(
            self.latency.mu_d_ms,
            self.latency.epsilon_ms.clone(),
            self.latency.nu_ms.clone(),
            grid,
            self.beta,
        )?;
        let accuracy =
            AccuracyProfile::new(self.accuracy.granularity, self.accuracy.gains.clone(), self.beta)?;
        Ok((latency, accuracy))
    }
}

/// Render both profiles as a JSON document.
pub fn serialize_profiles(latency: &LatencyProfile, accuracy: &AccuracyProfile) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ProfileDocument::encode(latency, accuracy)?)?)
}

/// Parse a profile document and re-validate every invariant.
pub fn deserialize_profiles(document: &str) -> Result<(LatencyProfile, AccuracyProfile)> {
    serde_json::from_str::<ProfileDocument>(document)?.decode()
}
