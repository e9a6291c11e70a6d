//! `kaze` command line tool: detect features, match feature files, benchmark
//! pipeline stages, and draw keypoint overlays.
//!
//! Exit codes: 0 ok, 2 decode error, 3 bad dimensions, 4 format mismatch,
//! 5 bad flags.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kaze::scale_space::{Diffusivity, ExtremaWindow, MIN_IMAGE_SIDE};
use kaze::{GrayImage, ScaleSpaceOptions};
use kaze_cli::features_file::{self, FeatureFile};
use kaze_cli::{draw, input, pipeline};

const EXIT_DECODE: u8 = 2;
const EXIT_DIMENSIONS: u8 = 3;
const EXIT_FORMAT: u8 = 4;
const EXIT_FLAGS: u8 = 5;

#[derive(Parser)]
#[command(name = "kaze", version, about = "KAZE feature extraction and matching")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum DiffusivityArg {
    G1,
    G2,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExtremaArg {
    Exact,
    Approx,
}

#[derive(Args)]
struct PipelineArgs {
    /// Number of octaves in the evolution schedule
    #[arg(long, default_value_t = 4)]
    octaves: usize,
    /// Sublevels per octave
    #[arg(long, default_value_t = 4)]
    sublevels: usize,
    /// Base smoothing scale in pixels
    #[arg(long, default_value_t = 1.6)]
    sigma0: f64,
    /// Perona-Malik conductivity function
    #[arg(long, value_enum, default_value_t = DiffusivityArg::G2)]
    diffusivity: DiffusivityArg,
    /// Detector response threshold
    #[arg(long, default_value_t = 1e-3)]
    threshold: f32,
    /// Edge rejection eigenvalue ratio r
    #[arg(long, default_value_t = 10.0)]
    edge_ratio: f64,
    /// Scale-adaptive (exact) or fixed 3x3 (approx) extrema window
    #[arg(long, value_enum, default_value_t = ExtremaArg::Exact)]
    extrema: ExtremaArg,
    /// Worker threads for the parallel runtime (0 = auto)
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

impl PipelineArgs {
    fn options(&self) -> ScaleSpaceOptions {
        ScaleSpaceOptions {
            num_octaves: self.octaves,
            num_sublevels: self.sublevels,
            base_sigma: self.sigma0,
            diffusivity: match self.diffusivity {
                DiffusivityArg::G1 => Diffusivity::G1,
                DiffusivityArg::G2 => Diffusivity::G2,
            },
            detector_threshold: self.threshold,
            edge_ratio: self.edge_ratio,
            extrema_window: match self.extrema {
                ExtremaArg::Exact => ExtremaWindow::ExactSigma,
                ExtremaArg::Approx => ExtremaWindow::Approx3x3,
            },
            ..ScaleSpaceOptions::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Detect keypoints and write a feature file
    Detect {
        /// Input image (PGM or PNG)
        input: PathBuf,
        /// Feature file to write
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        params: PipelineArgs,
    },
    /// Match two feature files and print the correspondences
    Match {
        features_a: PathBuf,
        features_b: PathBuf,
        /// Nearest/second-nearest distance ratio threshold
        #[arg(long, default_value_t = 0.8)]
        ratio: f32,
    },
    /// Run the pipeline repeatedly and report median stage timings
    Bench {
        input: PathBuf,
        /// Number of pipeline runs to take the median over
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        #[command(flatten)]
        params: PipelineArgs,
    },
    /// Render a keypoint overlay PNG
    Draw {
        input: PathBuf,
        features: PathBuf,
        output: PathBuf,
    },
}

struct CmdError {
    code: u8,
    message: String,
}

fn err(code: u8, message: impl Into<String>) -> CmdError {
    CmdError {
        code,
        message: message.into(),
    }
}

fn load_checked(path: &std::path::Path) -> Result<GrayImage, CmdError> {
    let img = input::load_image(path).map_err(|e| err(EXIT_DECODE, e.to_string()))?;
    if img.width().min(img.height()) < MIN_IMAGE_SIDE {
        return Err(err(
            EXIT_DIMENSIONS,
            format!(
                "image {}x{} is smaller than the minimum side {MIN_IMAGE_SIDE}",
                img.width(),
                img.height()
            ),
        ));
    }
    Ok(img)
}

fn run_checked(
    img: &GrayImage,
    params: &PipelineArgs,
) -> Result<pipeline::PipelineOutput, CmdError> {
    pipeline::run_pipeline(img, &params.options(), params.threads)
        .map_err(|e| err(EXIT_FLAGS, e.to_string()))
}

fn cmd_detect(input: &Path, output: &Path, params: &PipelineArgs) -> Result<(), CmdError> {
    let img = load_checked(input)?;
    let out = run_checked(&img, params)?;
    let file = FeatureFile {
        keypoints: out.keypoints,
        descriptors: out.descriptors,
    };
    features_file::write(output, &file).map_err(|e| {
        err(
            EXIT_DECODE,
            format!("cannot write {}: {e}", output.display()),
        )
    })?;
    println!("keypoints={}", file.keypoints.len());
    Ok(())
}

fn cmd_match(features_a: &Path, features_b: &Path, ratio: f32) -> Result<(), CmdError> {
    let a = features_file::read(features_a).map_err(|e| err(EXIT_FORMAT, e.to_string()))?;
    let b = features_file::read(features_b).map_err(|e| err(EXIT_FORMAT, e.to_string()))?;
    let matches = kaze::match_descriptors(&a.descriptors, &b.descriptors, ratio)
        .map_err(|e| err(EXIT_FLAGS, e.to_string()))?;
    for m in &matches {
        println!("{} {} {:.8e}", m.index_a, m.index_b, m.distance);
    }
    println!("matches={}", matches.len());
    Ok(())
}

fn median(samples: &mut [f64]) -> f64 {
    samples.sort_by(|a, b| a.total_cmp(b));
    let n = samples.len();
    if n % 2 == 1 {
        samples[n / 2]
    } else {
        0.5 * (samples[n / 2 - 1] + samples[n / 2])
    }
}

fn cmd_bench(input: &Path, repeats: usize, params: &PipelineArgs) -> Result<(), CmdError> {
    if repeats == 0 {
        return Err(err(EXIT_FLAGS, "--repeats must be at least 1"));
    }
    let img = load_checked(input)?;
    let mut scale_space = Vec::with_capacity(repeats);
    let mut detection = Vec::with_capacity(repeats);
    let mut description = Vec::with_capacity(repeats);
    let mut total = Vec::with_capacity(repeats);
    let mut last = None;
    for _ in 0..repeats {
        let out = run_checked(&img, params)?;
        scale_space.push(out.timings.scale_space_ms);
        detection.push(out.timings.detection_ms);
        description.push(out.timings.description_ms);
        total.push(out.timings.total_ms);
        last = Some(out.timings);
    }
    let t = last.unwrap();
    println!("image_width={}", t.image_width);
    println!("image_height={}", t.image_height);
    println!("thread_count={}", t.thread_count);
    println!("repeats={repeats}");
    println!("keypoint_count={}", t.keypoint_count);
    println!("scale_space_ms={:.3}", median(&mut scale_space));
    println!("detection_ms={:.3}", median(&mut detection));
    println!("description_ms={:.3}", median(&mut description));
    println!("total_ms={:.3}", median(&mut total));
    Ok(())
}

fn cmd_draw(input: &Path, features: &Path, output: &Path) -> Result<(), CmdError> {
    let img = input::load_image(input).map_err(|e| err(EXIT_DECODE, e.to_string()))?;
    let file = features_file::read(features).map_err(|e| err(EXIT_FORMAT, e.to_string()))?;
    let overlay = draw::render_overlay(&img, &file.keypoints);
    overlay
        .save_with_format(output, image::ImageFormat::Png)
        .map_err(|e| {
            err(
                EXIT_DECODE,
                format!("cannot write {}: {e}", output.display()),
            )
        })?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version print to stdout and exit 0; real flag errors
            // use the documented code.
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(EXIT_FLAGS),
            };
        }
    };
    let result = match &cli.command {
        Command::Detect {
            input,
            output,
            params,
        } => cmd_detect(input, output, params),
        Command::Match {
            features_a,
            features_b,
            ratio,
        } => cmd_match(features_a, features_b, *ratio),
        Command::Bench {
            input,
            repeats,
            params,
        } => cmd_bench(input, *repeats, params),
        Command::Draw {
            input,
            features,
            output,
        } => cmd_draw(input, features, output),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
