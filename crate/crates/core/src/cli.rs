//! Command-line surface: batch plumbing around the library.
//!
//! Subcommands: `unproject` (depth → PLY), `recover` (depth → estimated
//! shift/focal + corrected PLY), `perturb` (seeded distortion), `metrics`
//! (pred vs gt report rows), `losses` (per-loss values), `synth` (seeded
//! scene bundles), `bench` (perturb-and-recover summary).
//!
//! Exit codes: 0 success, 1 any per-item failure, 2 usage error. Log
//! verbosity comes from the `DEPTHSHAPE_LOG` environment variable.

use crate::camera::CameraIntrinsics;
use crate::depth::DepthMap;
use crate::error::{Error, Result};
use crate::geometry::{estimate_normals, unproject};
use crate::io::{
    atomic_write, emit_report, read_depth, write_depth, write_ply, DepthFormat, ReportFormat,
    ReportRow, DEFAULT_DIVISOR,
};
use crate::losses::{ilnr_loss, ilnr_normalize, msg_loss, overall_loss, pwn_loss, LossWeights,
    MSG_SCALES};
use crate::metrics::{absrel, dbe, delta1, lsiv, pe, whdr, MetricReport};
use crate::recovery::{recover, recovery_benchmark, Perturbation, RecoveryConfig};
use crate::sampling::{sample_combined, SamplerConfig};
use crate::synth::{synth_scene, SceneKind, SceneSpec};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "depthshape",
    about = "Depth-map geometry toolkit: unprojection, shift/focal recovery, losses and metrics"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Unproject a depth map to a PLY point cloud.
    Unproject(UnprojectArgs),
    /// Recover depth shift and focal scale; write the record and corrected cloud.
    Recover(RecoverArgs),
    /// Apply a seeded random shift/focal perturbation to a depth map.
    Perturb(PerturbArgs),
    /// Evaluate prediction(s) against ground truth(s); emit report rows.
    Metrics(MetricsArgs),
    /// Compute the training losses between a prediction and ground truth.
    Losses(LossesArgs),
    /// Generate seeded synthetic scene bundles.
    Synth(SynthArgs),
    /// Run the perturb-and-recover benchmark over seeded scenes.
    Bench(BenchArgs),
}

#[derive(Args)]
struct FormatArgs {
    /// Depth raster encoding.
    #[arg(long, value_parser = ["u16", "f32", "txt"], default_value = "f32")]
    format: String,
    /// Stored-value divisor for the u16 format (scene units = value / divisor).
    #[arg(long, default_value_t = DEFAULT_DIVISOR)]
    divisor: f64,
}

impl FormatArgs {
    fn format(&self) -> DepthFormat {
        self.format.parse().expect("validated by clap")
    }
}

#[derive(Args)]
struct CameraArgs {
    /// Horizontal field of view in degrees (ignored when --fx is given).
    #[arg(long, default_value_t = 60.0)]
    fov: f64,
    /// Explicit focal length in pixels.
    #[arg(long)]
    fx: Option<f64>,
    /// Principal point u (defaults to the image center).
    #[arg(long)]
    u0: Option<f64>,
    /// Principal point v (defaults to the image center).
    #[arg(long)]
    v0: Option<f64>,
}

impl CameraArgs {
    fn build(&self, width: usize, height: usize) -> Result<CameraIntrinsics> {
        let base = match self.fx {
            Some(fx) => CameraIntrinsics::new(width as f64 / 2.0, height as f64 / 2.0, fx)?,
            None => CameraIntrinsics::from_fov(width, height, self.fov)?,
        };
        CameraIntrinsics::new(
            self.u0.unwrap_or(base.u0),
            self.v0.unwrap_or(base.v0),
            base.f,
        )
    }
}

#[derive(Args)]
struct UnprojectArgs {
    /// Input depth raster.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    format: FormatArgs,
    #[command(flatten)]
    camera: CameraArgs,
    /// Output PLY path.
    #[arg(long)]
    out: PathBuf,
    /// Write binary little-endian PLY instead of text.
    #[arg(long)]
    binary_ply: bool,
}

#[derive(Args)]
struct RecoverArgs {
    /// Input depth raster (normalized units).
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    format: FormatArgs,
    #[command(flatten)]
    camera: CameraArgs,
    /// Output directory for recovery.json and corrected.ply.
    #[arg(long)]
    out: PathBuf,
    /// Write binary little-endian PLY instead of text.
    #[arg(long)]
    binary_ply: bool,
}

#[derive(Args)]
struct PerturbArgs {
    /// Input depth raster.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    format: FormatArgs,
    /// Random seed for the perturbation draw.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path for the perturbed depth raster (same format as input).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    /// Predicted depth raster(s), paired with --gt by position.
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    /// Ground-truth depth raster(s).
    #[arg(long, required = true, num_args = 1..)]
    gt: Vec<PathBuf>,
    #[command(flatten)]
    format: FormatArgs,
    #[command(flatten)]
    camera: CameraArgs,
    /// Comma-separated metric selection.
    #[arg(long, value_delimiter = ',', default_value = "absrel,delta1,whdr,lsiv,dbe,pe")]
    metrics: Vec<String>,
    /// Point pairs for WHDR.
    #[arg(long, default_value_t = 10_000)]
    pairs: usize,
    /// Random seed for pair sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optional path for a structured (JSON) report next to the CSV on stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LossesArgs {
    /// Predicted depth raster.
    #[arg(long)]
    input: PathBuf,
    /// Ground-truth depth raster.
    #[arg(long)]
    gt: PathBuf,
    #[command(flatten)]
    format: FormatArgs,
    #[command(flatten)]
    camera: CameraArgs,
    /// Pair budget for the edge sampler feeding the pair-wise normal loss.
    #[arg(long, default_value_t = 10_000)]
    pairs: usize,
    /// Random seed for pair sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SynthArgs {
    /// Scene kind: room, room2, room3, boxes, staircase, single-plane.
    #[arg(long)]
    spec: String,
    /// Base random seed; scene i uses seed + i.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of scenes to generate.
    #[arg(long, default_value_t = 1)]
    scenes: usize,
    /// Image width and height.
    #[arg(long, default_value_t = 128)]
    size: usize,
    /// Horizontal field of view in degrees.
    #[arg(long, default_value_t = 60.0)]
    fov: f64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Write binary little-endian PLY instead of text.
    #[arg(long)]
    binary_ply: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Number of benchmark scenes.
    #[arg(long, default_value_t = 20)]
    scenes: usize,
    /// Base random seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optional path for the JSON summary (also printed to stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Entry point behind `main`; returns the process exit code.
pub fn cli_main<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(
        env_logger::Env::default().filter_or("DEPTHSHAPE_LOG", "warn"),
    )
    .try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap help/version requests are successes, not usage errors
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.cmd {
        Cmd::Unproject(args) => run_unproject(&args),
        Cmd::Recover(args) => run_recover(&args),
        Cmd::Perturb(args) => run_perturb(&args),
        Cmd::Metrics(args) => return run_metrics(&args),
        Cmd::Losses(args) => run_losses(&args),
        Cmd::Synth(args) => run_synth(&args),
        Cmd::Bench(args) => run_bench(&args),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn read_input(path: &Path, format: &FormatArgs) -> Result<DepthMap> {
    read_depth(path, format.format(), format.divisor)
}

fn run_unproject(args: &UnprojectArgs) -> Result<()> {
    let depth = read_input(&args.input, &args.format)?;
    let cam = args.camera.build(depth.width(), depth.height())?;
    let cloud = unproject(&depth, &cam)?;
    write_ply(&cloud, &args.out, args.binary_ply)
}

fn run_recover(args: &RecoverArgs) -> Result<()> {
    let depth = read_input(&args.input, &args.format)?;
    let cam = args.camera.build(depth.width(), depth.height())?;
    let result = recover(&depth, &cam, &RecoveryConfig::default())?;
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;

    let corrected = result.corrected_depth(&depth);
    let cam_corr = result.corrected_intrinsics(&cam)?;
    let cloud = unproject(&corrected, &cam_corr)?;
    write_ply(&cloud, &args.out.join("corrected.ply"), args.binary_ply)?;

    let record = serde_json::json!({
        "delta_d_hat": result.delta_d_hat,
        "alpha_f_hat": result.alpha_f_hat,
        "objective_value": result.objective_value,
        "focal_identifiable": result.focal_identifiable,
        "corrected_focal": cam_corr.f,
        "evaluations": result.trace.len(),
    });
    let text = format!("{}\n", serde_json::to_string_pretty(&record).unwrap());
    atomic_write(&args.out.join("recovery.json"), text.as_bytes())?;
    print!("{text}");
    Ok(())
}

fn run_perturb(args: &PerturbArgs) -> Result<()> {
    let depth = read_input(&args.input, &args.format)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let p = Perturbation::sample(&depth, &mut rng)?;
    let shifted = depth.apply_shift(p.delta_d);
    write_depth(&shifted, &args.out, args.format.format(), args.format.divisor)?;
    println!("{}", serde_json::to_string(&p).unwrap());
    Ok(())
}

fn compute_metrics(
    pred: &DepthMap,
    gt: &DepthMap,
    cam: &CameraIntrinsics,
    selection: &[String],
    pairs: usize,
    seed: u64,
) -> Result<MetricReport> {
    let mut report = MetricReport::default();
    for name in selection {
        match name.as_str() {
            "absrel" => report.absrel = Some(absrel(pred, gt, true)?),
            "delta1" => report.delta1 = Some(delta1(pred, gt, true)?),
            "whdr" => {
                let mask = pred.common_mask(gt)?;
                let set = crate::sampling::sample_global_pairs(
                    &mask,
                    pred.width(),
                    pred.height(),
                    pairs,
                    seed,
                )?;
                report.whdr = Some(whdr(pred, gt, &set, crate::metrics::WHDR_TAU)?);
            }
            "lsiv" => report.lsiv = Some(lsiv(pred, gt, None)?),
            "dbe" => {
                let e = dbe(pred, gt)?;
                report.dbe_acc = e.dbe_acc;
                report.dbe_comp = e.dbe_comp;
            }
            "pe" => {
                // evaluate over planar regions detected in the ground truth
                let gt_normals = estimate_normals(gt, cam, 5)?;
                let seg = crate::sampling::segment_planes(&gt_normals, 5.0, 200);
                if seg.plane_count == 0 {
                    continue; // no planar regions: metric absent, not zero
                }
                let masks: Vec<Vec<bool>> =
                    (1..=seg.plane_count as u32).map(|l| seg.mask_of(l)).collect();
                let e = pe(pred, gt, cam, &masks)?;
                report.pe_plan = Some(e.pe_plan);
                report.pe_orie = Some(e.pe_orie);
            }
            other => {
                return Err(Error::Domain(format!("unknown metric {other:?}")));
            }
        }
    }
    Ok(report)
}

fn run_metrics(args: &MetricsArgs) -> i32 {
    if args.input.len() != args.gt.len() {
        eprintln!(
            "error: {} --input paths but {} --gt paths",
            args.input.len(),
            args.gt.len()
        );
        return 2;
    }
    let mut rows = Vec::new();
    let mut failed = false;
    for (pred_path, gt_path) in args.input.iter().zip(&args.gt) {
        let id = pred_path.display().to_string();
        let row = (|| -> Result<ReportRow> {
            let pred = read_input(pred_path, &args.format)?;
            let gt = read_input(gt_path, &args.format)?;
            let cam = args.camera.build(pred.width(), pred.height())?;
            let mut row = ReportRow::ok(&id);
            row.metrics =
                compute_metrics(&pred, &gt, &cam, &args.metrics, args.pairs, args.seed)?;
            Ok(row)
        })();
        match row {
            Ok(row) => rows.push(row),
            Err(e) => {
                failed = true;
                rows.push(ReportRow::failed(&id, format!("error: {e}")));
            }
        }
    }
    let csv = match emit_report(&rows, ReportFormat::Csv) {
        Ok(csv) => csv,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    print!("{csv}");
    if let Some(out) = &args.out {
        let json = emit_report(&rows, ReportFormat::Json).expect("rows are non-empty");
        if let Err(e) = atomic_write(out, json.as_bytes()) {
            eprintln!("error: {e}");
            return 1;
        }
    }
    if failed {
        1
    } else {
        0
    }
}

fn run_losses(args: &LossesArgs) -> Result<()> {
    let pred = read_input(&args.input, &args.format)?;
    let gt = read_input(&args.gt, &args.format)?;
    let cam = args.camera.build(pred.width(), pred.height())?;
    let config = SamplerConfig {
        edge_budget: args.pairs,
        ..SamplerConfig::default()
    };
    let gt_normals = estimate_normals(&gt, &cam, 5)?;
    let pairs = sample_combined(&gt, &gt_normals, &config, args.seed)?;
    let weights = LossWeights::default();

    let ilnr = ilnr_loss(&pred, &gt)?;
    let msg = msg_loss(&pred, &ilnr_normalize(&gt)?, MSG_SCALES)?;
    let aligned = crate::losses::align_scale_shift(&pred, &gt)?.apply(&pred);
    let pred_normals = estimate_normals(&aligned, &cam, 5)?;
    let pwn = pwn_loss(&pred_normals, &gt_normals, &pairs)?;
    let overall = overall_loss(&pred, &gt, &cam, &pairs, &weights, 5)?;

    let record = serde_json::json!({
        "ilnr": ilnr,
        "msg": msg,
        "pwn": pwn,
        "overall": overall,
        "pairs_used": pairs.len(),
    });
    println!("{}", serde_json::to_string_pretty(&record).unwrap());
    Ok(())
}

fn run_synth(args: &SynthArgs) -> Result<()> {
    let kind: SceneKind = args.spec.parse()?;
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    for i in 0..args.scenes {
        let seed = args.seed.wrapping_add(i as u64);
        let spec = SceneSpec::new(kind, args.size, args.size, args.fov);
        let scene = synth_scene(&spec, seed)?;
        let stem = format!("scene_{i:04}");
        write_depth(
            &scene.depth,
            &args.out.join(format!("{stem}.depf")),
            DepthFormat::F32,
            1.0,
        )?;
        let cloud = unproject(&scene.depth, &scene.cam)?;
        write_ply(&cloud, &args.out.join(format!("{stem}.ply")), args.binary_ply)?;
        let meta = serde_json::json!({
            "spec": spec,
            "seed": seed,
            "camera": scene.cam,
            "plane_count": scene.planes.plane_count,
            "valid_pixels": scene.depth.valid_count(),
        });
        let text = format!("{}\n", serde_json::to_string_pretty(&meta).unwrap());
        atomic_write(&args.out.join(format!("{stem}.json")), text.as_bytes())?;
    }
    Ok(())
}

fn run_bench(args: &BenchArgs) -> Result<()> {
    let summary = recovery_benchmark(args.scenes, args.seed)?;
    let record = serde_json::json!({
        "scenes": summary.scenes.len(),
        "failures": summary.failures,
        "mean_absrel_before": summary.mean_absrel_before,
        "mean_absrel_after": summary.mean_absrel_after,
        "mean_abs_delta_error": summary.mean_abs_delta_error,
        "mean_abs_alpha_error": summary.mean_abs_alpha_error,
    });
    let text = format!("{}\n", serde_json::to_string_pretty(&record).unwrap());
    print!("{text}");
    if let Some(out) = &args.out {
        let full = format!("{}\n", serde_json::to_string_pretty(&summary).unwrap());
        atomic_write(out, full.as_bytes())?;
    }
    Ok(())
}
