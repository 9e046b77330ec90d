use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spindet::harness::{cmd_bench, cmd_demux, cmd_eval, cmd_simulate};
use spindet::io::{DetectorKind, RunConfig};
use spindet::Result;

#[derive(Parser)]
#[command(
    name = "spindet",
    version,
    about = "Event-camera drone bearing pipeline on a rotating platform"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a sequence: events.evb, triggers.csv, ground_truth.csv.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Run detection and bearing estimation against ground truth.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        ground_truth: PathBuf,
        /// Merged trigger log used to re-anchor the platform angle.
        #[arg(long)]
        triggers: Option<PathBuf>,
        /// oracle | reference
        #[arg(long)]
        detector: Option<DetectorKind>,
        /// Evaluate at most this many windows.
        #[arg(long)]
        windows: Option<usize>,
    },
    /// Per-stage latency breakdown of the reference pipeline.
    Bench {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        events: PathBuf,
        /// Timed windows (at least 100).
        #[arg(long, default_value_t = 100)]
        windows: usize,
    },
    /// Split a merged trigger log into PPS and rotation pulses.
    Demux {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        triggers: PathBuf,
    },
}

fn load(common: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(out) = &common.out {
        cfg.output.dir = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { common } => {
            let cfg = load(&common)?;
            let s = cmd_simulate(&cfg)?;
            println!("events: {}", s.events);
            println!("rotation triggers: {}", s.rotation_triggers);
            println!("pps triggers: {}", s.pps_triggers);
            println!("ground truth samples: {}", s.ground_truth_samples);
            println!("wrote {}", cfg.output.dir.display());
        }
        Command::Eval {
            common,
            events,
            ground_truth,
            triggers,
            detector,
            windows,
        } => {
            let mut cfg = load(&common)?;
            if let Some(kind) = detector {
                cfg.detector.kind = kind;
            }
            if let Some(n) = windows {
                cfg.eval.max_windows = n;
            }
            let out = cmd_eval(&cfg, &events, &ground_truth, triggers.as_deref())?;
            let r = &out.report;
            println!(
                "windows: {} evaluated, {} skipped",
                r.windows.evaluated, r.windows.skipped_no_ground_truth
            );
            match r.recall {
                Some(v) => println!("recall: {:.3} ({}/{})", v, r.windows.detected, r.windows.eligible),
                None => println!("recall: n/a (no eligible windows)"),
            }
            println!("false positives: {}", r.false_positives);
            if let Some(e) = &r.bearing_error {
                println!(
                    "angular error [deg]: mean {:.3} median {:.3} max {:.3} (n={})",
                    e.mean, e.median, e.max, e.count
                );
            }
            println!(
                "AP {:.3}  AP75 {:.3}  AR100 {:.3}",
                r.detection_metrics.ap, r.detection_metrics.ap75, r.detection_metrics.ar100
            );
            println!("wrote {}", cfg.output.dir.display());
        }
        Command::Bench {
            common,
            events,
            windows,
        } => {
            let cfg = load(&common)?;
            let b = cmd_bench(&cfg, &events, windows)?;
            println!("{:<20} {:>9} {:>9} {:>9}", "stage", "mean ms", "p50 ms", "p95 ms");
            for s in &b.stages {
                println!("{:<20} {:>9.3} {:>9.3} {:>9.3}", s.stage, s.mean, s.p50, s.p95);
            }
            println!("{:<20} {:>9.3}", "subtotal", b.subtotal);
            println!("windows/s: {:.1}", b.windows_per_second);
        }
        Command::Demux { common, triggers } => {
            let cfg = load(&common)?;
            let d = cmd_demux(&cfg, &triggers)?;
            println!("pps: {}  rotation: {}  unknown: {}", d.pps, d.rotation, d.unknown);
            if let Some(a) = d.labeled_accuracy {
                println!("agreement with input labels: {:.2}%", a * 100.0);
            }
            println!("wrote {}", d.output_path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
