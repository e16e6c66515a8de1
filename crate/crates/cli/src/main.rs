//! Command-line front end: scoring, feature extraction, training,
//! cross-validated evaluation, synthetic data generation, and curve dumps.
//!
//! Machine-readable output (JSONL/CSV) goes to files or stdout; human
//! summaries and progress go to stderr. Exit codes: 0 success, 2 usage or
//! input error, 3 numeric failure.

mod commands;
mod util;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use util::CliError;

#[derive(Parser)]
#[command(
    name = "hdrfunque",
    version,
    about = "Wavelet-domain HDR video quality assessment"
)]
struct Cli {
    /// TOML config file supplying defaults for the shared flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// RNG seed for anything randomized (splits, synthesis).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker thread cap; never changes emitted bytes.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Viewing geometry as D_H:HEIGHT_PX (e.g. 1.5:2160).
    #[arg(long, global = true)]
    geometry: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Built-in model name: Y-FUNQUE+, 3C-FUNQUE+, PU21-PSNR, PU21-SSIM.
    #[arg(long, default_value = "Y-FUNQUE+")]
    model: String,

    /// Augment the feature set with the HDRMAX1 side channel (+5 features).
    #[arg(long)]
    hdrmax1: bool,

    /// Augment the feature set with the HDRMAX2 side channel (+10 features).
    #[arg(long)]
    hdrmax2: bool,
}

#[derive(Args, Clone)]
struct RawVideoArgs {
    /// Frame width for headerless .yuv inputs.
    #[arg(long)]
    raw_width: Option<usize>,

    /// Frame height for headerless .yuv inputs.
    #[arg(long)]
    raw_height: Option<usize>,

    /// Bit depth for headerless .yuv inputs.
    #[arg(long, default_value_t = 10)]
    raw_bit_depth: u8,

    /// Chroma subsampling for headerless .yuv inputs: 420 or 444.
    #[arg(long, default_value = "420")]
    raw_subsampling: String,

    /// Treat samples as limited (broadcast) range instead of full range.
    #[arg(long)]
    limited_range: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Score one (reference, test) video pair: per-frame JSONL plus a
    /// per-video summary line.
    Score {
        /// Reference video (.y4m or raw .yuv).
        #[arg(long)]
        reference: PathBuf,
        /// Test (distorted) video.
        #[arg(long)]
        test: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        /// Trained model file; when given, the summary carries predicted MOS.
        #[arg(long)]
        model_file: Option<PathBuf>,
        /// Per-frame JSONL destination ("-" = stdout).
        #[arg(long, default_value = "-")]
        output: String,
        /// Identifier used in the JSONL rows (defaults to the test stem).
        #[arg(long)]
        video_id: Option<String>,
        #[command(flatten)]
        raw: RawVideoArgs,
    },

    /// Extract per-video mean features for every manifest entry (resumable).
    Extract {
        /// Dataset manifest CSV.
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        /// Output features CSV; existing complete rows are reused.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        raw: RawVideoArgs,
    },

    /// Fit a fusion regressor on a features CSV against manifest MOS.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        /// Features CSV produced by `extract`.
        #[arg(long)]
        features: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        /// Ambient condition whose MOS column is the target.
        #[arg(long, value_parser = ["dark", "bright"])]
        condition: String,
        /// Ridge regularizer.
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// Model JSON destination.
        #[arg(long)]
        out: PathBuf,
    },

    /// Content-separated random cross-validation with regularizer tuning.
    Evaluate {
        #[arg(long)]
        manifest: PathBuf,
        /// Precomputed features CSV; omitted = extract from manifest paths.
        #[arg(long)]
        features: Option<PathBuf>,
        #[command(flatten)]
        model: ModelArgs,
        /// Number of random splits.
        #[arg(long, default_value_t = 1000)]
        splits: usize,
        /// Fraction of content groups held out per split.
        #[arg(long, default_value_t = 0.2)]
        test_fraction: f64,
        /// Regularizer grid point; repeat to override the default grid.
        #[arg(long = "lambda")]
        lambdas: Vec<f64>,
        /// Report directory (report.json + summary.csv).
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        raw: RawVideoArgs,
    },

    /// Emit the HDRMAX non-linearity curves (and the CSF weight table).
    PlotNonlinearities {
        #[arg(long)]
        out_dir: PathBuf,
        /// Sample count over x in [-1, 1].
        #[arg(long, default_value_t = 1001)]
        samples: usize,
    },

    /// Generate the synthetic dataset: raw YUV videos plus manifest.csv.
    Synth {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 10)]
        contents: usize,
        #[arg(long, default_value_t = 5)]
        levels: usize,
        #[arg(long, default_value_t = 8)]
        frames: usize,
        #[arg(long, default_value_t = 96)]
        width: usize,
        #[arg(long, default_value_t = 96)]
        height: usize,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error[{}]: {err}", err.kind());
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let globals = util::Globals::resolve(
        cli.config.as_deref(),
        cli.seed,
        cli.threads,
        cli.geometry.as_deref(),
    )?;
    if let Some(n) = globals.threads {
        // Ignore the error from double initialization (e.g. in tests).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }

    match cli.command {
        Command::Score {
            reference,
            test,
            model,
            model_file,
            output,
            video_id,
            raw,
        } => commands::score::run(
            &globals,
            &reference,
            &test,
            &model,
            model_file.as_deref(),
            &output,
            video_id,
            &raw,
        ),
        Command::Extract {
            manifest,
            model,
            out,
            raw,
        } => commands::extract::run(&globals, &manifest, &model, &out, &raw),
        Command::Train {
            manifest,
            features,
            model,
            condition,
            lambda,
            out,
        } => commands::train::run(
            &globals, &manifest, &features, &model, &condition, lambda, &out,
        ),
        Command::Evaluate {
            manifest,
            features,
            model,
            splits,
            test_fraction,
            lambdas,
            out_dir,
            raw,
        } => commands::evaluate::run(
            &globals,
            &manifest,
            features.as_deref(),
            &model,
            splits,
            test_fraction,
            &lambdas,
            &out_dir,
            &raw,
        ),
        Command::PlotNonlinearities { out_dir, samples } => {
            commands::plot::run(&globals, &out_dir, samples)
        }
        Command::Synth {
            out_dir,
            contents,
            levels,
            frames,
            width,
            height,
        } => commands::synth::run(&globals, &out_dir, contents, levels, frames, width, height),
    }
}
