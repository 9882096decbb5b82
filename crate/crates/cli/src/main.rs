//! `akira`: augmentation, camera maps, flow and trajectory metrics, and
//! synthetic bundles from the command line.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod files;

use akira_kit::{Error, ErrorClass};

#[derive(Parser, Debug)]
#[command(name = "akira", version, about = "Camera-model augmentation and optics metrics")]
struct Cli {
    /// Seed for every random draw; generated and printed when absent.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: logical cores).
    #[arg(long, global = true, env = "AKIRA_KIT_THREADS")]
    threads: Option<usize>,

    /// Print machine-readable JSON instead of tables.
    #[arg(long, global = true)]
    json: bool,

    /// Log filter, e.g. `info` or `akira_kit=debug`.
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Augment a clip directory (frames/*.png, optional disparity/*.pfm and params.jsonl).
    Augment(AugmentArgs),
    /// Build camera maps from a camera-parameter JSON-lines file.
    Cameramap(CameramapArgs),
    /// FlowSim between reference and generated .flo sequences.
    Flowsim(FlowsimArgs),
    /// ZoomSim of generated flows against the zoom implied by params.jsonl.
    Zoomsim(OpticsSimArgs),
    /// DistortSim of generated flows against the distortion in params.jsonl.
    Distortsim(OpticsSimArgs),
    /// In-focus fraction of blur-radius maps.
    Focusarea(FocusAreaArgs),
    /// Relative (and optionally absolute) pose error between TUM trajectories.
    Rpe(RpeArgs),
    /// Generate a synthetic bundle from a scene spec.
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
pub struct AugmentArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Augmentation config JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dropout probability, overriding the config.
    #[arg(long)]
    pub p: Option<f64>,
    /// Focal length in pixels when the input has no params.jsonl.
    #[arg(long)]
    pub focal: Option<f64>,
}

#[derive(Args, Debug)]
pub struct CameramapArgs {
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub sigmoid_scale: f64,
}

#[derive(Args, Debug)]
pub struct FlowsimArgs {
    /// Reference .flo file or directory.
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Generated .flo file or directory.
    #[arg(long)]
    pub gen: PathBuf,
    #[arg(long, short = 't', default_value_t = 0.5)]
    pub threshold: f64,
    /// Also write the JSON report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct OpticsSimArgs {
    /// Generated .flo file or directory; flow i maps frame i to i + 1.
    #[arg(long)]
    pub gen: PathBuf,
    /// Per-frame camera parameters (one more line than flows).
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long, short = 't', default_value_t = 0.5)]
    pub threshold: f64,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FocusAreaArgs {
    /// Blur-radius .pfm file or directory.
    #[arg(long)]
    pub blur: PathBuf,
    /// Radius in pixels below which a pixel is in focus.
    #[arg(long, short = 't', default_value_t = akira_kit::flow::FOCUS_THRESHOLD)]
    pub threshold: f64,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RpeArgs {
    #[arg(long)]
    pub est: PathBuf,
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Rescale the estimate to the reference path length first.
    #[arg(long)]
    pub scale_correct: bool,
    /// Full SE(3) relative error instead of translation-delta differences.
    #[arg(long)]
    pub se3: bool,
    /// Also report APE.
    #[arg(long)]
    pub ape: bool,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Scene spec JSON.
    #[arg(long, required_unless_present = "builtin", conflicts_with = "builtin")]
    pub spec: Option<PathBuf>,
    /// Bundled spec: zoom_only, distortion_only, bokeh_two_plane or dolly_zoom.
    #[arg(long)]
    pub builtin: Option<String>,
    #[arg(long)]
    pub output: PathBuf,
}

pub struct Global {
    pub seed: Option<u64>,
    pub json: bool,
}

impl Global {
    /// The run seed: the flag's value, or a fresh one announced on stderr.
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or_else(|| {
            let s = rand::random::<u64>();
            eprintln!("seed: {s} (generated; pass --seed {s} to reproduce)");
            s
        })
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Config => 2,
        ErrorClass::Io => 3,
        ErrorClass::Numeric => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .format_timestamp(None)
        .init();

    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            eprintln!("status: failed (exit 2)");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }

    let global = Global {
        seed: cli.seed,
        json: cli.json,
    };
    let result = match &cli.command {
        Command::Augment(a) => commands::augment(a, &global),
        Command::Cameramap(a) => commands::cameramap(a, &global),
        Command::Flowsim(a) => commands::flowsim(a, &global),
        Command::Zoomsim(a) => commands::optics_sim(a, &global, commands::OpticsMetric::Zoom),
        Command::Distortsim(a) => {
            commands::optics_sim(a, &global, commands::OpticsMetric::Distortion)
        }
        Command::Focusarea(a) => commands::focus_area(a, &global),
        Command::Rpe(a) => commands::rpe(a, &global),
        Command::Synth(a) => commands::synth(a, &global),
    };
    match result {
        Ok(()) => {
            eprintln!("status: ok");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("error: {e}");
            eprintln!("status: failed (exit {code})");
            ExitCode::from(code)
        }
    }
}
