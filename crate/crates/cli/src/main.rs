//! `r2s`: command-line front end for real-to-sim gap measurement.

mod commands;
mod io;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use r2s_core::geom::EgoPerturbation;

#[derive(Parser)]
#[command(name = "r2s", version, about = "Measure the real-to-sim perception gap of driving models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detection mAP, TP errors and NDS of predictions against ground truth.
    EvalDet(EvalArgs),
    /// Chamfer-based mAP of predicted map elements against ground truth.
    EvalMap(EvalArgs),
    /// Detection agreement (or map agreement with --map) between two prediction sets.
    Agreement(AgreementArgs),
    /// Detection agreement as a function of the evaluation range.
    RangeCurve(RangeCurveArgs),
    /// Apply the rendering-artifact augmentation pipeline to a folder of images.
    Augment(AugmentArgs),
    /// Per-epoch plan choosing real or rendered images for training.
    MixPlan(MixPlanArgs),
    /// Shift or rotate the ego vehicle of a scene manifest.
    Transform(TransformArgs),
    /// PSNR, SSIM, LPIPS and FID for one scene, aggregated into a CSV row.
    ImgMetrics(ImgMetricsArgs),
    /// Fréchet distance between two FVEC feature files.
    Frechet(FrechetArgs),
    /// Correlate per-scene image metrics with detection agreement.
    Correlate(CorrelateArgs),
    /// Real / Sim / Gap tables from predictions or from precomputed numbers.
    Report(ReportArgs),
}

#[derive(Args)]
struct EvalArgs {
    /// Ground-truth scene manifests.
    #[arg(long, required = true, num_args = 1..)]
    gt: Vec<PathBuf>,
    /// Prediction scene manifests.
    #[arg(long, required = true, num_args = 1..)]
    pred: Vec<PathBuf>,
    /// JSON evaluation config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report JSON destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AgreementArgs {
    /// Scene manifests of the first prediction set.
    #[arg(long, required = true, num_args = 1..)]
    a: Vec<PathBuf>,
    /// Scene manifests of the second prediction set.
    #[arg(long, required = true, num_args = 1..)]
    b: Vec<PathBuf>,
    /// JSON agreement config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Compare map elements instead of boxes.
    #[arg(long)]
    map: bool,
    /// Result JSON destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RangeCurveArgs {
    /// Scene manifests of the first prediction set.
    #[arg(long, required = true, num_args = 1..)]
    a: Vec<PathBuf>,
    /// Scene manifests of the second prediction set.
    #[arg(long, required = true, num_args = 1..)]
    b: Vec<PathBuf>,
    /// JSON agreement config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated range fractions in (0, 1].
    #[arg(long, value_delimiter = ',')]
    fractions: Option<Vec<f64>>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AugmentArgs {
    /// Image file or folder of PNG/JPEG images.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output folder; images are written as PNG.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    epoch: u64,
}

#[derive(Args)]
struct MixPlanArgs {
    /// JSON list of `{sample_id, path}` training samples.
    #[arg(long = "in")]
    input: PathBuf,
    /// JSON object mapping sample_id to rendered image path.
    #[arg(long)]
    rendered: PathBuf,
    /// Probability of using the rendered image.
    #[arg(long)]
    p: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    epochs: u64,
    /// JSONL destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TransformArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// `lateral:<meters>` or `rot:<degrees>`.
    #[arg(long, allow_hyphen_values = true)]
    pert: EgoPerturbation,
    #[arg(long)]
    out: PathBuf,
    /// Ego footprint as `width,length` in meters.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    footprint: Option<Vec<f64>>,
}

#[derive(Args)]
struct ImgMetricsArgs {
    /// Folder of real images.
    #[arg(long)]
    real: PathBuf,
    /// Folder of rendered images with the same file names.
    #[arg(long)]
    sim: PathBuf,
    /// Scene id written to the CSV row.
    #[arg(long)]
    scene: String,
    /// LPIPS CSV with header `image_id,lpips`.
    #[arg(long)]
    lpips: Option<PathBuf>,
    /// FVEC features of the real images.
    #[arg(long)]
    feats_real: Option<PathBuf>,
    /// FVEC features of the rendered images.
    #[arg(long)]
    feats_sim: Option<PathBuf>,
    /// Detection agreement of the scene.
    #[arg(long)]
    da: Option<f64>,
    /// Scene CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional per-pair JSON destination.
    #[arg(long)]
    pairs_out: Option<PathBuf>,
}

#[derive(Args)]
struct FrechetArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long, default_value_t = r2s_core::img_metrics::DEFAULT_FRECHET_EPS)]
    eps: f64,
}

#[derive(Args)]
struct CorrelateArgs {
    /// Scene CSVs as `group=path`; the group defaults to the file stem.
    #[arg(long = "in", required = true, num_args = 1..)]
    input: Vec<String>,
    /// Metrics to correlate with DA.
    #[arg(long, value_delimiter = ',', default_value = "psnr,ssim,lpips,fid")]
    metrics: Vec<String>,
    /// Also compute one correlation over all groups together.
    #[arg(long)]
    pool: bool,
    /// Results JSON destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Folder for one scatter SVG per metric.
    #[arg(long)]
    svg_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// JSON run description with ground truth and per-method predictions.
    #[arg(long, conflicts_with = "table", required_unless_present = "table")]
    config: Option<PathBuf>,
    /// JSON with precomputed columns and per-method Real/Sim values.
    #[arg(long)]
    table: Option<PathBuf>,
    /// Name of the baseline method; the first method when omitted.
    #[arg(long)]
    baseline: Option<String>,
    /// Output folder for report.md, report.csv and report.json.
    #[arg(long)]
    out: PathBuf,
}

fn init_threads() {
    if let Some(n) = std::env::var("R2S_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("R2S_THREADS ignored: {e}");
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    init_threads();

    let result = match cli.command {
        Command::EvalDet(a) => commands::eval_det(a),
        Command::EvalMap(a) => commands::eval_map(a),
        Command::Agreement(a) => commands::agreement(a),
        Command::RangeCurve(a) => commands::range_curve(a),
        Command::Augment(a) => commands::augment(a),
        Command::MixPlan(a) => commands::mix_plan(a),
        Command::Transform(a) => commands::transform(a),
        Command::ImgMetrics(a) => commands::img_metrics(a),
        Command::Frechet(a) => commands::frechet(a),
        Command::Correlate(a) => commands::correlate(a),
        Command::Report(a) => report::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: {}: {msg}", e.kind());
            ExitCode::from(1)
        }
    }
}
