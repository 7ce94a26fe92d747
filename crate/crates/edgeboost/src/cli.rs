//! Command-line front end: trace generation, profile synthesis and
//! validation, single-instance scheduling, simulation, and scheduler
//! comparison.
//!
//! Exit codes: 0 success (an infeasible plan is still a result), 2
//! configuration error, 3 enumeration-cap exceeded.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::profiles::{
    serialize_profiles, AccuracyProfile, LatencyProfile, DEFAULT_BATCH_SIZES,
};
use crate::scheduler::{
    schedule_exact, schedule_heuristic, InstanceDocument, PlanDocument, DEFAULT_ENUMERATION_CAP,
};
use crate::simulator::{
    run_simulation, write_report_csv, DiscriminatorModel, GpuModel, SchedulerChoice,
    SimulationReport,
};
use crate::vap::{generate_trace, read_trace, write_trace, FilterConfig, RateProcess, TraceConfig};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CAP: i32 = 3;

/// Default seed when neither the flag nor the environment variable is set.
const DEFAULT_SEED: u64 = 1;
const SEED_ENV_VAR: &str = "EDGEBOOST_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "edgeboost",
    about = "Opportunistic enhancement scheduling for edge video analytics"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic frame trace.
    TraceGen(TraceGenArgs),
    /// Synthesize a bundled latency/accuracy profile pair.
    ProfileSynth(ProfileSynthArgs),
    /// Validate a profile document.
    ProfileValidate(ProfileValidateArgs),
    /// Solve one scheduling instance.
    Schedule(ScheduleArgs),
    /// Run a windowed pipeline simulation.
    Simulate(SimulateArgs),
    /// Run every scheduler on the same trace and tabulate the results.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
struct TraceGenArgs {
    #[arg(long, default_value_t = 25.0)]
    fps: f64,
    /// Trace length in seconds.
    #[arg(long, default_value_t = 10.0)]
    duration: f64,
    #[arg(long, default_value_t = 1)]
    cameras: u32,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = RateKind::Constant)]
    rate: RateKind,
    /// Sinusoidal period / not used by other rates.
    #[arg(long, default_value_t = 60.0)]
    rate_period: f64,
    /// Sinusoidal amplitude or burst probability, depending on the rate.
    #[arg(long, default_value_t = 0.5)]
    rate_intensity: f64,
    #[arg(long, default_value_t = 25)]
    burst_len: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RateKind {
    Constant,
    Sinusoidal,
    Bursty,
}

#[derive(Debug, Args)]
struct ProfileSynthArgs {
    #[arg(long, value_enum, default_value_t = DetectorPreset::Yolov3)]
    preset: DetectorPreset,
    #[arg(long, default_value_t = 5)]
    beta: usize,
    #[arg(long)]
    out: PathBuf,
}

/// GPU latency presets, sized from the throughput capacity of each detector
/// on a T4-class device (120 / 84 / 12 inferences per second).
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DetectorPreset {
    EfficientdetD0,
    Yolov3,
    FasterRcnn,
}

impl DetectorPreset {
    fn detector_ms(self) -> f64 {
        match self {
            DetectorPreset::EfficientdetD0 => 1000.0 / 120.0,
            DetectorPreset::Yolov3 => 1000.0 / 84.0,
            DetectorPreset::FasterRcnn => 1000.0 / 12.0,
        }
    }
}

#[derive(Debug, Args)]
struct ProfileValidateArgs {
    #[arg(long)]
    input: PathBuf,
}

#[derive(Debug, Args)]
struct ScheduleArgs {
    /// Instance document with embedded profiles.
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Use the exhaustive oracle instead of the heuristic.
    #[arg(long)]
    oracle: bool,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    cap: u64,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    profiles: PathBuf,
    #[arg(long, value_enum, default_value_t = FilterKind::Temporal)]
    filter: FilterKind,
    #[arg(long, default_value_t = 0.05)]
    diff_threshold: f64,
    #[arg(long, default_value_t = 1)]
    min_objects: u32,
    #[arg(long, default_value_t = 0.8)]
    conf_threshold: f64,
    #[arg(long, default_value = "heuristic")]
    scheduler: String,
    #[arg(long, default_value_t = 1000.0)]
    window_ms: f64,
    /// Discriminator noise sigma on predicted difficulty.
    #[arg(long, default_value_t = 0.05)]
    sigma: f64,
    #[arg(long)]
    seed: Option<u64>,
    /// Per-window CSV output path.
    #[arg(long)]
    report: PathBuf,
    /// Aggregate summary (JSON) output path.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FilterKind {
    Temporal,
    CheapModel,
    Cascade,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    profiles: PathBuf,
    #[arg(long, value_enum, default_value_t = FilterKind::Temporal)]
    filter: FilterKind,
    #[arg(long, default_value_t = 0.05)]
    diff_threshold: f64,
    #[arg(long, default_value_t = 1)]
    min_objects: u32,
    #[arg(long, default_value_t = 0.8)]
    conf_threshold: f64,
    #[arg(long, default_value_t = 1000.0)]
    window_ms: f64,
    #[arg(long, default_value_t = 0.05)]
    sigma: f64,
    #[arg(long)]
    seed: Option<u64>,
    /// Skip the oracle arm (it is limited to small per-window loads).
    #[arg(long)]
    no_oracle: bool,
    /// Machine-readable side-by-side output path (JSON).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parse arguments and run; returns the process exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::EnumerationCap { .. } => EXIT_CAP,
                _ => EXIT_CONFIG,
            }
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::TraceGen(args) => cmd_trace_gen(args),
        Command::ProfileSynth(args) => cmd_profile_synth(args),
        Command::ProfileValidate(args) => cmd_profile_validate(args),
        Command::Schedule(args) => cmd_schedule(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Compare(args) => cmd_compare(args),
    }
}

fn resolve_seed(flag: Option<u64>) -> u64 {
    flag.or_else(|| {
        std::env::var(SEED_ENV_VAR)
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .unwrap_or(DEFAULT_SEED)
}

/// Whole-file atomic write: temp file in the same directory, then rename.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => d.join(format!(
            ".{}.tmp",
            path.file_name().and_then(|n| n.to_str()).unwrap_or("out")
        )),
        None => PathBuf::from(format!(
            ".{}.tmp",
            path.file_name().and_then(|n| n.to_str()).unwrap_or("out")
        )),
    };
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn cmd_trace_gen(args: TraceGenArgs) -> Result<()> {
    let rate = match args.rate {
        RateKind::Constant => RateProcess::Constant,
        RateKind::Sinusoidal => RateProcess::Sinusoidal {
            period_s: args.rate_period,
            amplitude: args.rate_intensity,
        },
        RateKind::Bursty => RateProcess::Bursty {
            burst_prob: args.rate_intensity,
            burst_len: args.burst_len,
        },
    };
    let config = TraceConfig {
        duration_s: args.duration,
        fps: args.fps,
        cameras: args.cameras,
        rate,
        seed: resolve_seed(args.seed),
        ..TraceConfig::default()
    };
    let trace = generate_trace(&config)?;
    let mut buf = Vec::new();
    write_trace(&mut buf, &trace)?;
    write_atomic(&args.out, &buf)?;

    println!("wrote {} frames to {}", trace.len(), args.out.display());
    let previews = [
        ("temporal(0.05)", FilterConfig::Temporal { diff_threshold: 0.05 }),
        ("cheap-model(1)", FilterConfig::CheapModel { min_objects: 1 }),
        ("cascade(0.05, 0.8)", FilterConfig::Cascade { diff_threshold: 0.05, conf_threshold: 0.8 }),
    ];
    for (label, filter) in previews {
        let kept = filter.apply(&trace).len();
        println!(
            "  {label}: {kept}/{} survive ({:.1}%)",
            trace.len(),
            100.0 * kept as f64 / trace.len().max(1) as f64
        );
    }
    Ok(())
}

/// Synthetic profile pair used by the bundled demos.
///
/// Gains grow with both exit depth and difficulty; the top bucket's spread
/// between the first and the deepest exit is 6.15 accuracy points. Latency
/// combines a linearly deepening generator with a detector that gets
/// slightly cheaper as more backbone layers are skipped, batched with a 0.5
/// marginal-cost factor.
pub fn demo_profiles(detector_ms: f64, beta: usize) -> Result<(LatencyProfile, AccuracyProfile)> {
    if beta == 0 {
        return Err(Error::InvalidConfig("beta must be positive".into()));
    }
    let mu = 0.5;
    let full_generator_ms = 23.31;
    let epsilon: Vec<f64> = (0..=beta)
        .map(|k| full_generator_ms * k as f64 / beta as f64)
        .collect();
    // skipping backbone layers recovers up to 20% of detector time, always
    // less than the generator costs, so deeper exits are never free
    let nu: Vec<f64> = (0..=beta)
        .map(|k| detector_ms * (1.0 - 0.2 * k as f64 / beta as f64))
        .collect();
    let mut grid = BTreeMap::new();
    for k in 0..=beta {
        let body = epsilon[k] + nu[k];
        for n in DEFAULT_BATCH_SIZES {
            grid.insert((k, n), n as f64 * mu + body * (1.0 + 0.5 * (n as f64 - 1.0)));
        }
    }
    let latency = LatencyProfile::new(mu, epsilon, nu, grid, beta)?;

    // per-exit weight, pinned so the top bucket spreads 6.15 points between
    // the first and deepest exits
    let spread = 6.15 / 0.95;
    let weight = |k: usize| -> f64 {
        if k == 0 {
            0.0
        } else {
            2.0 + spread * (k - 1) as f64 / (beta.max(2) - 1) as f64
        }
    };
    let gains: Vec<Vec<f64>> = (0..10)
        .map(|b| {
            let mid = (b as f64 + 0.5) / 10.0;
            (0..=beta).map(|k| mid * weight(k)).collect()
        })
        .collect();
    let accuracy = AccuracyProfile::new(0.1, gains, beta)?;
    Ok((latency, accuracy))
}

fn cmd_profile_synth(args: ProfileSynthArgs) -> Result<()> {
    let (latency, accuracy) = demo_profiles(args.preset.detector_ms(), args.beta)?;
    let doc = serialize_profiles(&latency, &accuracy)?;
    write_atomic(&args.out, doc.as_bytes())?;
    println!(
        "wrote profiles (beta={}, detector {:.2} ms) to {}",
        args.beta,
        args.preset.detector_ms(),
        args.out.display()
    );
    Ok(())
}

fn cmd_profile_validate(args: ProfileValidateArgs) -> Result<()> {
    let text = fs::read_to_string(&args.input)?;
    let (latency, accuracy) = crate::profiles::deserialize_profiles(&text)?;
    println!(
        "{}: valid (beta={}, {} grid cells, {} buckets, monotone={})",
        args.input.display(),
        latency.beta(),
        latency.batch_grid().len(),
        accuracy.gains().len(),
        accuracy.is_monotone()
    );
    Ok(())
}

fn cmd_schedule(args: ScheduleArgs) -> Result<()> {
    let text = fs::read_to_string(&args.instance)?;
    let doc: InstanceDocument = serde_json::from_str(&text)?;
    let instance = doc.decode()?;
    let start = Instant::now();
    let plan = if args.oracle {
        schedule_exact(&instance, args.cap)?
    } else {
        schedule_heuristic(&instance)?
    };
    let elapsed = start.elapsed();
    let out = serde_json::to_string_pretty(&PlanDocument::from_plan(&plan))?;
    write_atomic(&args.out, out.as_bytes())?;
    println!(
        "gain {:.4} | cost {:.3} ms | feasible {} | downgrade steps {} | {:.3} ms wall",
        plan.total_gain,
        plan.total_latency_ms,
        plan.feasible,
        plan.downgrade_steps,
        elapsed.as_secs_f64() * 1000.0
    );
    Ok(())
}

fn filter_from(kind: FilterKind, diff: f64, min_objects: u32, conf: f64) -> FilterConfig {
    match kind {
        FilterKind::Temporal => FilterConfig::Temporal { diff_threshold: diff },
        FilterKind::CheapModel => FilterConfig::CheapModel { min_objects },
        FilterKind::Cascade => FilterConfig::Cascade { diff_threshold: diff, conf_threshold: conf },
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let trace = read_trace(BufReader::new(fs::File::open(&args.trace)?))?;
    let text = fs::read_to_string(&args.profiles)?;
    let (latency, accuracy) = crate::profiles::deserialize_profiles(&text)?;
    let filter = filter_from(args.filter, args.diff_threshold, args.min_objects, args.conf_threshold);
    let choice: SchedulerChoice = args.scheduler.parse()?;
    let disc = DiscriminatorModel {
        noise_sigma: args.sigma,
        confusion: None,
        latency_ms: latency.mu_d_ms(),
    };
    let gpu = GpuModel { window_ms: args.window_ms };
    let report = run_simulation(
        &trace,
        &filter,
        &disc,
        &latency,
        &accuracy,
        choice,
        &gpu,
        resolve_seed(args.seed),
    )?;

    let mut csv = Vec::new();
    write_report_csv(&mut csv, &report)?;
    write_atomic(&args.report, &csv)?;
    if let Some(summary) = &args.summary {
        let out = serde_json::to_string_pretty(&report.aggregates)?;
        write_atomic(summary, out.as_bytes())?;
    }
    print_summary(&args.scheduler, &report);
    Ok(())
}

fn print_summary(label: &str, report: &SimulationReport) {
    let a = &report.aggregates;
    println!(
        "{label}: {} windows | {} survivors | mean gain/frame {:.4} | mean util {:.4} | misses {}",
        report.records.len(),
        a.total_survivors,
        a.mean_gain_per_frame,
        a.mean_utilization,
        a.deadline_misses
    );
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    let trace = read_trace(BufReader::new(fs::File::open(&args.trace)?))?;
    let text = fs::read_to_string(&args.profiles)?;
    let (latency, accuracy) = crate::profiles::deserialize_profiles(&text)?;
    let filter = filter_from(args.filter, args.diff_threshold, args.min_objects, args.conf_threshold);
    let disc = DiscriminatorModel {
        noise_sigma: args.sigma,
        confusion: None,
        latency_ms: latency.mu_d_ms(),
    };
    let gpu = GpuModel { window_ms: args.window_ms };
    let seed = resolve_seed(args.seed);

    let mut arms: Vec<(&str, SchedulerChoice)> = vec![
        ("none", SchedulerChoice::None),
        ("greedy_arrival", SchedulerChoice::GreedyArrival),
        ("heuristic", SchedulerChoice::Heuristic),
    ];
    if !args.no_oracle {
        arms.push(("oracle", SchedulerChoice::Oracle));
    }

    let mut rows = Vec::new();
    println!("{:<16} {:>12} {:>10} {:>8} {:>12}", "scheduler", "gain/frame", "mean util", "misses", "wall ms");
    for (label, choice) in arms {
        let start = Instant::now();
        let report = run_simulation(
            &trace, &filter, &disc, &latency, &accuracy, choice, &gpu, seed,
        )?;
        let wall_ms = start.elapsed().as_secs_f64() * 1000.0;
        let a = &report.aggregates;
        println!(
            "{label:<16} {:>12.4} {:>10.4} {:>8} {:>12.2}",
            a.mean_gain_per_frame, a.mean_utilization, a.deadline_misses, wall_ms
        );
        rows.push(serde_json::json!({
            "scheduler": label,
            "mean_gain_per_frame": a.mean_gain_per_frame,
            "mean_utilization": a.mean_utilization,
            "deadline_misses": a.deadline_misses,
        }));
    }
    if let Some(out) = &args.out {
        // wall times stay on stdout so the file is byte-stable across runs
        let doc = serde_json::to_string_pretty(&serde_json::Value::Array(rows))?;
        write_atomic(out, doc.as_bytes())?;
    }
    Ok(())
}
