use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use constellation_core::eval::io::{read_ledger, read_records, write_ledger, write_pr_curve, write_records};
use constellation_core::eval::{
    evaluate, export_similarity_matrix, generate_synthetic_world, ground_truth_from_poses, load_detection_log,
    DetectionLog, EvalParams, GroundTruth, SynthParams, DEFAULT_GT_CUTOFF, DEFAULT_GT_POSITIVE_THRESHOLD,
};
use constellation_core::matching::DEFAULT_MATCH_THRESHOLD;
use constellation_core::simulator::{
    bandwidth_report, quantize_streams, run_centralized, run_decentralized, split_stream, FleetConfig, SplitStrategy,
    DEFAULT_NEIGHBOR_EXCLUSION, DEFAULT_N_FQ, DEFAULT_N_RET, DEFAULT_SCORE_THRESHOLD,
};
use constellation_core::types::DEFAULT_NUM_LABELS;

#[derive(Parser)]
#[command(name = "constellation", version, about = "Object-constellation place recognition for robot fleets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic detection log with scene ids.
    Synth(SynthArgs),
    /// Play a detection log through the centralized or decentralized pipeline.
    Simulate(SimulateArgs),
    /// Precision-recall of similarity records against ground truth.
    Evaluate(EvaluateArgs),
    /// Summarize a bandwidth ledger.
    Bandwidth(BandwidthArgs),
    /// Write the similarity matrix as CSV and/or PGM.
    ExportMatrix(ExportArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    scenes: usize,
    /// Visits per scene, the first included.
    #[arg(long, default_value_t = 3)]
    revisits: usize,
    /// Per-axis position noise, meters.
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    #[arg(long, default_value_t = 4)]
    min_objects: usize,
    #[arg(long, default_value_t = 8)]
    max_objects: usize,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u16).range(1..=256))]
    robots: u16,
    #[arg(long, default_value_t = DEFAULT_NUM_LABELS as u16, value_parser = clap::value_parser!(u16).range(1..=256))]
    labels: u16,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Centralized,
    Decentralized,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Contiguous,
    RoundRobin,
}

#[derive(Args)]
struct FleetArgs {
    /// Fleet size; defaults to the log header.
    #[arg(long, value_parser = clap::value_parser!(u16).range(1..=256))]
    robots: Option<u16>,
    /// Label universe size; defaults to the log header.
    #[arg(long, value_parser = clap::value_parser!(u16).range(1..=256))]
    labels: Option<u16>,
    #[arg(long, default_value_t = DEFAULT_N_RET)]
    n_ret: usize,
    #[arg(long, default_value_t = DEFAULT_N_FQ)]
    n_fq: usize,
    /// Association distance threshold, meters.
    #[arg(long, default_value_t = DEFAULT_MATCH_THRESHOLD)]
    match_threshold: f64,
    #[arg(long, default_value_t = DEFAULT_SCORE_THRESHOLD)]
    score_threshold: f64,
    #[arg(long, default_value_t = DEFAULT_NEIGHBOR_EXCLUSION)]
    neighbor_exclusion: u32,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    log: PathBuf,
    #[arg(long, value_enum, default_value = "decentralized")]
    mode: ModeArg,
    #[command(flatten)]
    fleet: FleetArgs,
    /// Ignore the log's robot ids and redistribute frames over the fleet.
    /// Frame indexes must then be unique across the whole log.
    #[arg(long, value_enum)]
    split: Option<SplitArg>,
    /// Snap positions to the wire grid before a centralized run.
    #[arg(long)]
    quantize: bool,
    #[arg(long)]
    records: PathBuf,
    #[arg(long)]
    ledger: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TruthArg {
    /// Scene ids when every record has one, poses otherwise.
    Auto,
    Scenes,
    Poses,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    log: PathBuf,
    #[arg(long)]
    records: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    truth: TruthArg,
    /// Ground-truth score from which a pair is a loop closure.
    #[arg(long, default_value_t = DEFAULT_GT_POSITIVE_THRESHOLD)]
    gt_threshold: f64,
    /// Scene distance, meters, at which the pose-based score reaches 0.
    #[arg(long, default_value_t = DEFAULT_GT_CUTOFF)]
    cutoff: f64,
    #[arg(long, default_value_t = DEFAULT_NEIGHBOR_EXCLUSION)]
    neighbor_exclusion: u32,
    /// Write the curve as threshold,precision,recall.
    #[arg(long)]
    pr: Option<PathBuf>,
}

#[derive(Args)]
struct BandwidthArgs {
    #[arg(long)]
    ledger: PathBuf,
    /// Multiply every message by this many radio hops.
    #[arg(long, default_value_t = 1)]
    hops: usize,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    log: PathBuf,
    #[arg(long)]
    records: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SCORE_THRESHOLD)]
    threshold: f64,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    pgm: Option<PathBuf>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn load_log(path: &Path) -> Result<DetectionLog> {
    load_detection_log(path).with_context(|| format!("loading {}", path.display()))
}

fn synth(a: SynthArgs) -> Result<()> {
    if a.min_objects > a.max_objects {
        bail!("--min-objects {} exceeds --max-objects {}", a.min_objects, a.max_objects);
    }
    if !(a.noise >= 0.0 && a.noise.is_finite()) {
        bail!("--noise must be a finite non-negative number");
    }
    let p = SynthParams {
        seed: a.seed,
        num_scenes: a.scenes,
        revisit_factor: a.revisits,
        noise_sigma: a.noise,
        objects_per_scene: a.min_objects..=a.max_objects,
        num_robots: a.robots as usize,
        num_labels: a.labels as usize,
        ..SynthParams::default()
    };
    if p.num_scenes * p.revisit_factor > u16::MAX as usize + 1 {
        bail!("{} frames do not fit 16-bit frame indexes", p.num_scenes * p.revisit_factor);
    }
    let world = generate_synthetic_world(&p);
    world.log.write_to(create(&a.out)?)?;
    info!("wrote {} frames to {}", world.log.records.len(), a.out.display());
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let log = load_log(&a.log)?;
    let f = &a.fleet;
    let config = FleetConfig {
        num_robots: f.robots.map_or(log.header.num_robots, usize::from),
        n_ret: f.n_ret,
        n_fq: f.n_fq,
        match_threshold: f.match_threshold,
        score_threshold: f.score_threshold,
        neighbor_exclusion: f.neighbor_exclusion,
        num_labels: f.labels.map_or(log.header.num_labels, usize::from),
    };
    let mut streams = log.streams();
    if let Some(s) = a.split {
        let mut sequence: Vec<_> = streams.into_iter().flatten().collect();
        sequence.sort_by_key(|c| c.id.arrival_key());
        let strategy = match s {
            SplitArg::Contiguous => SplitStrategy::Contiguous,
            SplitArg::RoundRobin => SplitStrategy::RoundRobin,
        };
        streams = split_stream(&sequence, config.num_robots, strategy);
    }
    let out = match a.mode {
        ModeArg::Centralized => {
            if a.quantize {
                streams = quantize_streams(&streams)?;
            }
            run_centralized(&config, &streams)?
        }
        ModeArg::Decentralized => run_decentralized(&config, &streams)?,
    };
    write_records(create(&a.records)?, &out.records)?;
    if let Some(path) = &a.ledger {
        write_ledger(create(path)?, &out.ledger)?;
    }
    println!(
        "{} records, {} pairs examined, {} bytes",
        out.records.len(),
        out.pairs_examined,
        out.ledger.total_bytes()
    );
    Ok(())
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<()> {
    let log = load_log(&a.log)?;
    let records = read_records(open(&a.records)?).with_context(|| format!("reading {}", a.records.display()))?;
    let all_scenes = !log.records.is_empty() && log.records.iter().all(|r| r.scene.is_some());
    let gt = match a.truth {
        TruthArg::Scenes if !all_scenes => bail!("log records lack scene ids"),
        TruthArg::Scenes => GroundTruth::SceneIds(log.scenes()),
        TruthArg::Auto if all_scenes => GroundTruth::SceneIds(log.scenes()),
        TruthArg::Auto | TruthArg::Poses => ground_truth_from_poses(&log, a.cutoff),
    };
    let params = EvalParams { gt_positive_threshold: a.gt_threshold, neighbor_exclusion: a.neighbor_exclusion };
    let curve = evaluate(&records, &gt, &params);
    if let Some(path) = &a.pr {
        write_pr_curve(create(path)?, &curve)?;
    }
    if curve.no_detections {
        println!("no detections; auc 0");
    } else {
        println!("auc {:.4} over {} positives, {} thresholds", curve.auc, curve.positives, curve.points.len());
    }
    Ok(())
}

fn bandwidth(a: BandwidthArgs) -> Result<()> {
    let ledger = read_ledger(open(&a.ledger)?).with_context(|| format!("reading {}", a.ledger.display()))?;
    println!("{}", bandwidth_report(&ledger, a.hops));
    Ok(())
}

fn export(a: ExportArgs) -> Result<()> {
    if a.csv.is_none() && a.pgm.is_none() {
        bail!("nothing to write; pass --csv and/or --pgm");
    }
    let log = load_log(&a.log)?;
    let records = read_records(open(&a.records)?).with_context(|| format!("reading {}", a.records.display()))?;
    let m = export_similarity_matrix(&records, &log.frames(), a.threshold);
    if let Some(path) = &a.csv {
        m.write_csv(create(path)?)?;
    }
    if let Some(path) = &a.pgm {
        let mut w = create(path)?;
        m.write_pgm(&mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => synth(a),
        Command::Simulate(a) => simulate(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Bandwidth(a) => bandwidth(a),
        Command::ExportMatrix(a) => export(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
