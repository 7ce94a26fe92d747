//! Frame-to-exit-level assignment under a latency budget.
//!
//! Frames assigned the same exit level execute as one batch, so the cost of a
//! plan is the sum of batched latencies over the distinct levels in use. The
//! problem is a non-linear generalized assignment problem; this module ships
//! a prune-and-search heuristic (start everything at the deepest exit, walk
//! back the frame with the smallest marginal gain until the budget holds) and
//! an exhaustive oracle for desk-scale instances.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, BTreeMap};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::core::{bucket_index, ExitLevel};
use crate::profiles::{AccuracyProfile, LatencyProfile, ProfileDocument};
use crate::{Error, Result};

/// Default cap on the oracle's enumeration size.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

/// One frame awaiting an assignment: its id and predicted difficulty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapFrame {
    pub id: u64,
    pub predicted_difficulty: f64,
}

/// A single scheduling problem: frames, profiles, and the latency budget T.
#[derive(Debug, Clone)]
pub struct GapInstance {
    frames: Vec<GapFrame>,
    latency: LatencyProfile,
    accuracy: AccuracyProfile,
    budget_ms: f64,
}

impl GapInstance {
    pub fn new(
        frames: Vec<GapFrame>,
        latency: LatencyProfile,
        accuracy: AccuracyProfile,
        budget_ms: f64,
    ) -> Result<Self> {
        if !(budget_ms > 0.0) {
            return Err(Error::InvalidInput(format!("budget {budget_ms} ms must be positive")));
        }
        if latency.beta() != accuracy.beta() {
            return Err(Error::InvalidInput(format!(
                "latency beta {} does not match accuracy beta {}",
                latency.beta(),
                accuracy.beta()
            )));
        }
        if !accuracy.is_monotone() {
            return Err(Error::InvalidInput(
                "accuracy profile must be monotone-enforced before scheduling".into(),
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for f in &frames {
            if !(0.0..=1.0).contains(&f.predicted_difficulty) {
                return Err(Error::InvalidInput(format!(
                    "frame {} difficulty {} outside [0, 1]",
                    f.id, f.predicted_difficulty
                )));
            }
            if !seen.insert(f.id) {
                return Err(Error::InvalidInput(format!("duplicate frame id {}", f.id)));
            }
        }
        let mut frames = frames;
        frames.sort_by_key(|f| f.id);
        Ok(Self { frames, latency, accuracy, budget_ms })
    }

    pub fn frames(&self) -> &[GapFrame] {
        &self.frames
    }

    pub fn latency(&self) -> &LatencyProfile {
        &self.latency
    }

    pub fn accuracy(&self) -> &AccuracyProfile {
        &self.accuracy
    }

    pub fn budget_ms(&self) -> f64 {
        self.budget_ms
    }

    pub fn beta(&self) -> usize {
        self.latency.beta()
    }
}

/// The scheduler's output: exit level per frame plus plan-level totals.
#[derive(Debug, Clone, PartialEq)]
pub struct EnhancementPlan {
    pub assignment: BTreeMap<u64, usize>,
    pub total_gain: f64,
    pub total_latency_ms: f64,
    pub feasible: bool,
    pub downgrade_steps: u64,
}

/// Batched cost of an assignment: frames grouped by level, one batch per
/// level in use, summed in ascending level order.
pub fn plan_cost(assignment: &BTreeMap<u64, usize>, latency: &LatencyProfile) -> Result<f64> {
    let beta = latency.beta();
    let mut counts = vec![0u32; beta + 1];
    for (&id, &kappa) in assignment {
        if kappa > beta {
            return Err(Error::InvalidInput(format!(
                "frame {id} assigned level {kappa} beyond beta {beta}"
            )));
        }
        counts[kappa] += 1;
    }
    level_costs(&counts, latency).map(|terms| terms.iter().sum())
}

fn level_costs(counts: &[u32], latency: &LatencyProfile) -> Result<Vec<f64>> {
    counts
        .iter()
        .enumerate()
        .map(|(kappa, &n)| {
            if n == 0 {
                Ok(0.0)
            } else {
                latency.latency_batch(ExitLevel::new(kappa, latency.beta())?, n)
            }
        })
        .collect()
}

/// Total expected gain of an assignment over the instance's frames.
pub fn plan_gain(instance: &GapInstance, assignment: &BTreeMap<u64, usize>) -> Result<f64> {
    if assignment.len() != instance.frames.len() {
        return Err(Error::InvalidInput(format!(
            "assignment covers {} frames, instance has {}",
            assignment.len(),
            instance.frames.len()
        )));
    }
    let mut total = 0.0;
    for f in &instance.frames {
        let &kappa = assignment
            .get(&f.id)
            .ok_or_else(|| Error::InvalidInput(format!("frame {} missing from assignment", f.id)))?;
        total += instance
            .accuracy
            .accuracy_gain(f.predicted_difficulty, ExitLevel::new(kappa, instance.beta())?)?;
    }
    Ok(total)
}

/// Gain lost by moving this frame from `kappa` down to `kappa - 1`.
pub fn marginal_gain(instance: &GapInstance, frame: &GapFrame, kappa: usize) -> Result<f64> {
    if kappa == 0 {
        return Err(Error::InvalidInput("kappa = 0 has no downgrade".into()));
    }
    let beta = instance.beta();
    let here = instance
        .accuracy
        .accuracy_gain(frame.predicted_difficulty, ExitLevel::new(kappa, beta)?)?;
    let below = instance
        .accuracy
        .accuracy_gain(frame.predicted_difficulty, ExitLevel::new(kappa - 1, beta)?)?;
    Ok(here - below)
}

/// Heap key ordering downgrades: smallest marginal gain first, then the
/// downgrade freeing more single-frame latency, then the smaller frame id.
#[derive(Debug)]
struct DowngradeKey {
    marginal: f64,
    latency_freed: f64,
    id: u64,
    kappa: usize,
    index: usize,
}

impl PartialEq for DowngradeKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}

impl Eq for DowngradeKey {}

impl Ord for DowngradeKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.marginal
            .total_cmp(&other.marginal)
            .then(other.latency_freed.total_cmp(&self.latency_freed))
            .then(self.id.cmp(&other.id))
            .then(self.kappa.cmp(&other.kappa))
    }
}

impl PartialOrd for DowngradeKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// The prune-and-search heuristic.
///
/// Every frame starts at the deepest exit; while the batched cost exceeds the
/// budget, the frame with the minimal marginal gain at its current level is
/// downgraded one step. If even the all-zero plan misses the budget, the plan
/// is returned flagged infeasible rather than dropping frames.
pub fn schedule_heuristic(instance: &GapInstance) -> Result<EnhancementPlan> {
    let beta = instance.beta();
    let m = instance.frames.len();
    if m == 0 {
        return Ok(EnhancementPlan {
            assignment: BTreeMap::new(),
            total_gain: 0.0,
            total_latency_ms: 0.0,
            feasible: true,
            downgrade_steps: 0,
        });
    }

    // single-frame latency freed by a kappa -> kappa-1 downgrade, per level
    let single: Vec<f64> = (0..=beta)
        .map(|k| instance.latency.latency_single(ExitLevel::new(k, beta).unwrap()))
        .collect::<Result<_>>()?;
    let freed: Vec<f64> = (0..=beta)
        .map(|k| if k == 0 { 0.0 } else { single[k] - single[k - 1] })
        .collect();

    // per-frame gain rows, resolved once
    let gain_rows: Vec<&[f64]> = instance
        .frames
        .iter()
        .map(|f| {
            let b = bucket_index(f.predicted_difficulty, instance.accuracy.granularity())?;
            Ok(instance.accuracy.gains()[b].as_slice())
        })
        .collect::<Result<_>>()?;

    let mut kappa_of: Vec<usize> = vec![beta; m];
    let mut counts = vec![0u32; beta + 1];
    counts[beta] = m as u32;
    let mut terms = level_costs(&counts, &instance.latency)?;
    let mut cost: f64 = terms.iter().sum();

    let mut heap: BinaryHeap<Reverse<DowngradeKey>> = instance
        .frames
        .iter()
        .enumerate()
        .map(|(i, f)| {
            Reverse(DowngradeKey {
                marginal: gain_rows[i][beta] - gain_rows[i][beta - 1],
                latency_freed: freed[beta],
                id: f.id,
                kappa: beta,
                index: i,
            })
        })
        .collect();

    let mut steps = 0u64;
    while cost > instance.budget_ms {
        let key = loop {
            match heap.pop() {
                // stale entries are skipped: a frame's key changes only when
                // it is downgraded, and the fresh key was pushed then
                Some(Reverse(k)) if kappa_of[k.index] == k.kappa => break Some(k),
                Some(_) => continue,
                None => break None,
            }
        };
        let Some(key) = key else { break };
        let i = key.index;
        let from = key.kappa;
        debug_assert!(from >= 1);
        kappa_of[i] = from - 1;
        counts[from] -= 1;
        counts[from - 1] += 1;
        for level in [from, from - 1] {
            terms[level] = if counts[level] == 0 {
                0.0
            } else {
                instance
                    .latency
                    .latency_batch(ExitLevel::new(level, beta)?, counts[level])?
            };
        }
        cost = terms.iter().sum();
        steps += 1;
        if from - 1 >= 1 {
            heap.push(Reverse(DowngradeKey {
                marginal: gain_rows[i][from - 1] - gain_rows[i][from - 2],
                latency_freed: freed[from - 1],
                id: key.id,
                kappa: from - 1,
                index: i,
            }));
        }
    }

    let assignment: BTreeMap<u64, usize> = instance
        .frames
        .iter()
        .enumerate()
        .map(|(i, f)| (f.id, kappa_of[i]))
        .collect();
    let total_latency_ms = plan_cost(&assignment, &instance.latency)?;
    let total_gain = plan_gain(instance, &assignment)?;
    Ok(EnhancementPlan {
        assignment,
        total_gain,
        total_latency_ms,
        feasible: total_latency_ms <= instance.budget_ms,
        downgrade_steps: steps,
    })
}

/// Exhaustive oracle: enumerate every assignment and keep the feasible one
/// with maximal gain (ties: minimal cost, then lexicographically smallest by
/// frame id).
pub fn schedule_exact(instance: &GapInstance, limit: u64) -> Result<EnhancementPlan> {
    let beta = instance.beta();
    let m = instance.frames.len();
    let space = ((beta + 1) as f64).powi(m as i32);
    if space > limit as f64 {
        return Err(Error::EnumerationCap { required: space, cap: limit });
    }
    if m == 0 {
        return Ok(EnhancementPlan {
            assignment: BTreeMap::new(),
            total_gain: 0.0,
            total_latency_ms: 0.0,
            feasible: true,
            downgrade_steps: 0,
        });
    }

    let gain_rows: Vec<&[f64]> = instance
        .frames
        .iter()
        .map(|f| {
            let b = bucket_index(f.predicted_difficulty, instance.accuracy.granularity())?;
            Ok(instance.accuracy.gains()[b].as_slice())
        })
        .collect::<Result<_>>()?;

    let mut levels = vec![0usize; m];
    let mut best: Option<(f64, f64, Vec<usize>)> = None;
    let mut done = false;
    while !done {
        let mut counts = vec![0u32; beta + 1];
        for &k in &levels {
            counts[k] += 1;
        }
        let cost: f64 = level_costs(&counts, &instance.latency)?.iter().sum();
        if cost <= instance.budget_ms {
            let gain: f64 = levels.iter().zip(&gain_rows).map(|(&k, row)| row[k]).sum();
            let better = match &best {
                None => true,
                Some((bg, bc, _)) => gain > *bg || (gain == *bg && cost < *bc),
            };
            if better {
                best = Some((gain, cost, levels.clone()));
            }
        }
        // lexicographic odometer over frames sorted by id, so the first of
        // any tied optima is the lexicographically smallest
        done = true;
        for pos in (0..m).rev() {
            if levels[pos] < beta {
                levels[pos] += 1;
                for l in &mut levels[pos + 1..] {
                    *l = 0;
                }
                done = false;
                break;
            }
        }
    }

    let (assignment, feasible) = match best {
        Some((_, _, levels)) => (
            instance
                .frames
                .iter()
                .zip(&levels)
                .map(|(f, &k)| (f.id, k))
                .collect::<BTreeMap<_, _>>(),
            true,
        ),
        None => (
            instance.frames.iter().map(|f| (f.id, 0usize)).collect(),
            false,
        ),
    };
    let total_latency_ms = plan_cost(&assignment, &instance.latency)?;
    let total_gain = plan_gain(instance, &assignment)?;
    Ok(EnhancementPlan {
        assignment,
        total_gain,
        total_latency_ms,
        feasible: feasible && total_latency_ms <= instance.budget_ms,
        downgrade_steps: 0,
    })
}

/// Side-by-side result of the heuristic and the oracle on one instance.
#[derive(Debug, Clone)]
pub struct SchedulerComparison {
    pub heuristic: EnhancementPlan,
    pub oracle: EnhancementPlan,
    pub relative_gap: f64,
    pub heuristic_runtime: Duration,
    pub oracle_runtime: Duration,
}

pub fn compare_schedulers(instance: &GapInstance, limit: u64) -> Result<SchedulerComparison> {
    let t0 = Instant::now();
    let heuristic = schedule_heuristic(instance)?;
    let heuristic_runtime = t0.elapsed();
    let t1 = Instant::now();
    let oracle = schedule_exact(instance, limit)?;
    let oracle_runtime = t1.elapsed();
    let relative_gap = (oracle.total_gain - heuristic.total_gain) / oracle.total_gain.max(1e-12);
    Ok(SchedulerComparison {
        heuristic,
        oracle,
        relative_gap,
        heuristic_runtime,
        oracle_runtime,
    })
}

/// On-disk form of a scheduling instance with embedded profiles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceDocument {
    pub budget_ms: f64,
    pub frames: Vec<GapFrame>,
    pub profiles: ProfileDocument,
}

impl InstanceDocument {
    pub fn encode(instance: &GapInstance) -> Result<Self> {
        Ok(Self {
            budget_ms: instance.budget_ms,
            frames: instance.frames.clone(),
            profiles: ProfileDocument::encode(&instance.latency, &instance.accuracy)?,
        })
    }

    pub fn decode(&self) -> Result<GapInstance> {
        let (latency, accuracy) = self.profiles.decode()?;
        GapInstance::new(self.frames.clone(), latency, accuracy, self.budget_ms)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanAssignmentDoc {
    pub id: u64,
    pub kappa: usize,
}

/// On-disk form of an [`EnhancementPlan`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanDocument {
    pub assignment: Vec<PlanAssignmentDoc>,
    pub total_gain: f64,
    pub total_latency_ms: f64,
    pub feasible: bool,
    pub downgrade_steps: u64,
}

impl PlanDocument {
    pub fn from_plan(plan: &EnhancementPlan) -> Self {
        Self {
            assignment: plan
                .assignment
                .iter()
                .map(|(&id, &kappa)| PlanAssignmentDoc { id, kappa })
                .collect(),
            total_gain: plan.total_gain,
            total_latency_ms: plan.total_latency_ms,
            feasible: plan.feasible,
            downgrade_steps: plan.downgrade_steps,
        }
    }
}
