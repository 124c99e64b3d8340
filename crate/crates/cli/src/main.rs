mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "avs", version, about = "Audio-visual segmentation benchmark and training tools")]
struct Cli {
    /// Worker threads for per-item work; outputs do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Repeat for more log detail.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Ss,
    Ms,
    Msmi,
}

#[derive(Clone, Copy, ValueEnum)]
enum PanArg {
    Linear,
    ConstantPower,
}

#[derive(Clone, Copy, ValueEnum)]
enum MatchArg {
    Membership,
    Equality,
}

#[derive(clap::Args)]
struct OutArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Allow writing into a non-empty output directory.
    #[arg(long)]
    force: bool,
}

#[derive(clap::Args)]
struct SceneArgs {
    /// COCO-style annotation file.
    #[arg(long)]
    scenes: PathBuf,
    /// Class table (`id<TAB>label<TAB>tag;tag`); the built-in table when omitted.
    #[arg(long)]
    classes: Option<PathBuf>,
    /// Directory that clip paths are relative to.
    #[arg(long)]
    clips_root: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Assign audio to annotated images and render the benchmark.
    Build {
        #[command(flatten)]
        scene: SceneArgs,
        /// Clip index (`tag<TAB>path<TAB>seconds`).
        #[arg(long)]
        audio_index: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        p_drop: Option<f64>,
        #[arg(long)]
        max_sources: Option<usize>,
        #[arg(long)]
        test_fraction: Option<f64>,
        /// Keep only the first N images in priority order.
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long, value_enum, default_value = "linear")]
        pan_law: PanArg,
        /// Write the manifest only.
        #[arg(long)]
        no_render: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Log-mel features of a WAV file.
    Mel {
        #[arg(long)]
        wav: PathBuf,
        /// Analysis window in seconds: 1 or 3.
        #[arg(long, default_value_t = 1, value_parser = parse_window)]
        window: u32,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Render stereo mixtures and label rasters of an existing manifest.
    Stereo {
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long, value_enum, default_value = "linear")]
        pan_law: PanArg,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Partition an anchor pool and dump the mined sets.
    Mine {
        /// JSON-lines anchor records.
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        dump: PathBuf,
        #[arg(long, value_enum, default_value = "membership")]
        label_match: MatchArg,
        /// Keep unknown records as easy negatives.
        #[arg(long)]
        include_unknown: bool,
    },
    /// Score predicted label rasters against ground truth.
    Eval {
        /// PGM file or directory of PGM files.
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Class count including background.
        #[arg(long)]
        classes: usize,
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value_t = avs_core::metrics::BETA_SQUARED)]
        beta2: f64,
        /// Class table used for names in the per-class table.
        #[arg(long)]
        names: Option<PathBuf>,
    },
    /// Train the linear toy model on synthetic scenes.
    TrainToy {
        /// TOML run configuration.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Class and subset tallies of a manifest.
    Stats {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        classes: Option<PathBuf>,
        /// JSON destination; standard output when omitted.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn parse_window(s: &str) -> Result<u32, String> {
    match s {
        "1" => Ok(1),
        "3" => Ok(3),
        _ => Err(format!("window must be 1 or 3 seconds, got {s}")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Info,
        1 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::FAILURE
        }
    }
}
