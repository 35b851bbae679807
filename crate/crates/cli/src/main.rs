use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use hierdet::formats::{detections, pgm, voxeltext, weights};
use hierdet::overlay::draw_overlay;
use hierdet::pipeline::{
    self, attach_registry, build_config, evaluate, infer_dataset, load_dataset, train, EvalParams,
    InferParams, TrainParams,
};
use hierdet::report;
use hierdet_core::dataset::grid_proposals;
use hierdet_core::geometry::voxelize;
use hierdet_core::learning::{LossSpec, TrainOptions};
use hierdet_core::synth::{generate_synthetic, SynthSpec};

/// Joint object detection, continuous 3D pose estimation, and sub-category
/// recognition with a coarse-to-fine hierarchical model.
#[derive(Parser)]
#[command(name = "hierdet", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic rendered dataset.
    Synth(SynthArgs),
    /// Train a model on a dataset manifest.
    Train(TrainArgs),
    /// Run inference over a dataset's proposals.
    Infer(InferArgs),
    /// Evaluate a detections file against ground truth.
    Eval(EvalArgs),
    /// Draw detection overlays onto copies of the input images.
    Overlay(OverlayArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 50)]
    scenes: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    subcats: usize,
    /// Finer-sub-categories per sub-category.
    #[arg(long, default_value_t = 2)]
    finer: usize,
    #[arg(long, default_value_t = 128)]
    image_size: u32,
    /// Discrete azimuth bins recorded in the annotations.
    #[arg(long, default_value_t = 8)]
    bins: usize,
    #[arg(long, default_value_t = 0.08)]
    noise: f64,
    #[arg(long, default_value_t = 2)]
    jittered_proposals: usize,
    #[arg(long, default_value_t = 3)]
    negative_proposals: usize,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Output weight file.
    #[arg(long)]
    out: PathBuf,
    /// Hierarchy depth to train.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(1..=3))]
    layers: u8,
    #[arg(long, default_value_t = 8)]
    bins: usize,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 0.1)]
    delta1: f64,
    /// Mid-layer loss base (divided by the sub-category frequency).
    #[arg(long, default_value_t = 0.3)]
    delta2: f64,
    #[arg(long, default_value_t = 0.1)]
    delta3: f64,
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    #[arg(long, default_value_t = 2)]
    neg_per_image: usize,
    #[arg(long, default_value_t = 0.01)]
    detector_lambda: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Precomputed appearance features (file-backed provider).
    #[arg(long)]
    features: Option<PathBuf>,
    /// Precomputed detector scores.
    #[arg(long)]
    detector_scores: Option<PathBuf>,
    /// Also write the merged sub-category CAD models (OBJ + voxel text).
    #[arg(long)]
    dump_merged: Option<PathBuf>,
}

#[derive(Args)]
struct InferArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    weights: PathBuf,
    /// Output detections file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Greedy NMS IoU threshold.
    #[arg(long, default_value_t = 0.5)]
    nms: f64,
    /// Discrete-model ablation: anchored particle only, zeroed cnt weights.
    #[arg(long)]
    discrete: bool,
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long)]
    detector_scores: Option<PathBuf>,
    /// Replace manifest proposals with a sliding-window grid: WxH, repeatable.
    #[arg(long, value_parser = parse_scale)]
    grid_scale: Vec<(u32, u32)>,
    /// Stride of the proposal grid (pixels).
    #[arg(long, default_value_t = 16)]
    grid_stride: u32,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    detections: PathBuf,
    /// Report directory.
    #[arg(long)]
    out_dir: PathBuf,
    /// Bins used for the viewpoint-correctness criteria.
    #[arg(long, default_value_t = 8)]
    vp_bins: usize,
    /// Azimuth bins of the label space (must match the annotations).
    #[arg(long, default_value_t = 8)]
    bins: usize,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(1..=3))]
    layers: u8,
}

#[derive(Args)]
struct OverlayArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    detections: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 8)]
    bins: usize,
}

fn parse_scale(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s.split_once('x').ok_or_else(|| format!("expected WxH, got {s}"))?;
    Ok((
        w.parse().map_err(|e| format!("bad width: {e}"))?,
        h.parse().map_err(|e| format!("bad height: {e}"))?,
    ))
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let spec = SynthSpec {
        subcats: args.subcats,
        finer_per_subcat: args.finer,
        scenes: args.scenes,
        image_width: args.image_size,
        image_height: args.image_size,
        azimuth_bins: args.bins,
        background_noise: args.noise,
        jittered_proposals: args.jittered_proposals,
        negative_proposals: args.negative_proposals,
        seed: args.seed,
        ..SynthSpec::default()
    };
    let dataset = generate_synthetic(&spec)?;
    fs::create_dir_all(&args.out)?;
    let manifest_path = pipeline::write_dataset(&dataset, &args.out)?;
    pipeline::write_run_config(
        &args.out.join("run_config.txt"),
        "synth",
        &format!(
            "scenes {}\nseed {}\nsubcats {}\nfiner {}\nimage_size {}\nbins {}\nnoise {}\n",
            args.scenes, args.seed, args.subcats, args.finer, args.image_size, args.bins, args.noise
        ),
    )?;
    println!("wrote {} scenes to {}", args.scenes, manifest_path.display());
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let dataset = load_dataset(&args.manifest)?;
    let params = TrainParams {
        layers: args.layers,
        azimuth_bins: args.bins,
        c_svm: args.c,
        losses: LossSpec { delta1: args.delta1, delta2_base: args.delta2, delta3: args.delta3 },
        options: TrainOptions { epsilon: args.epsilon, max_iterations: args.max_iter },
        negatives_per_image: args.neg_per_image,
        detector_lambda: args.detector_lambda,
        seed: args.seed,
        workers: args.workers,
    };
    let artifacts = train(&dataset, &params, args.features.as_deref(), args.detector_scores.as_deref())?;
    if let Some(dir) = &args.dump_merged {
        fs::create_dir_all(dir)?;
        for model in &artifacts.model.config.registry.merged {
            hierdet::formats::obj::write_obj(&dir.join(format!("{}.obj", model.id)), model)?;
            voxeltext::save_voxels(
                &dir.join(format!("{}.voxels.txt", model.id)),
                &voxelize(model, pipeline::MERGE_RESOLUTION)?,
            )?;
        }
    }
    weights::save_model(&args.out, &artifacts.model)?;
    let mut trace = String::from("iteration,dual_objective\n");
    for (i, d) in artifacts.dual_trace.iter().enumerate() {
        trace.push_str(&format!("{},{}\n", i + 1, d));
    }
    fs::write(args.out.with_extension("trace.csv"), trace)?;
    pipeline::write_run_config(
        &args.out.with_extension("config.txt"),
        "train",
        &format!(
            "manifest {}\nlayers {}\nbins {}\nc {}\ndelta1 {}\ndelta2 {}\ndelta3 {}\nepsilon {}\nmax_iter {}\nneg_per_image {}\ndetector_lambda {}\nseed {}\npositives {}\nnegatives {}\niterations {}\nconverged {}\n",
            args.manifest.display(),
            args.layers,
            args.bins,
            args.c,
            args.delta1,
            args.delta2,
            args.delta3,
            args.epsilon,
            args.max_iter,
            args.neg_per_image,
            args.detector_lambda,
            args.seed,
            artifacts.positives,
            artifacts.negatives,
            artifacts.iterations,
            artifacts.model.converged
        ),
    )?;
    if !artifacts.model.converged {
        eprintln!(
            "warning: cutting plane did not converge within {} iterations",
            artifacts.iterations
        );
    }
    println!(
        "trained {} layers on {} positives / {} negatives in {} iterations -> {}",
        args.layers,
        artifacts.positives,
        artifacts.negatives,
        artifacts.iterations,
        args.out.display()
    );
    Ok(())
}

fn cmd_infer(args: InferArgs) -> Result<()> {
    let mut dataset = load_dataset(&args.manifest)?;
    let mut model = weights::load_model(&args.weights)?;
    attach_registry(&mut model, &dataset)?;
    if !args.grid_scale.is_empty() {
        // Replace manifest proposals with the sliding-window grid.
        let strides = vec![args.grid_stride];
        let mut proposals = Vec::new();
        for img in &dataset.manifest.images {
            for region in grid_proposals(img.width, img.height, &args.grid_scale, &strides) {
                proposals.push(hierdet_core::dataset::ProposalRecord {
                    image_id: img.id.clone(),
                    region,
                });
            }
        }
        dataset.manifest.proposals = proposals;
    }
    let params = InferParams {
        seed: args.seed,
        nms_iou: args.nms,
        discrete: args.discrete,
        workers: args.workers,
    };
    let records = infer_dataset(
        &dataset,
        &model,
        &params,
        args.features.as_deref(),
        args.detector_scores.as_deref(),
    )?;
    detections::save_detections(&args.out, &records, &model.config)?;
    pipeline::write_run_config(
        &args.out.with_extension("config.txt"),
        "infer",
        &format!(
            "manifest {}\nweights {}\nseed {}\nnms {}\ndiscrete {}\ndetections {}\n",
            args.manifest.display(),
            args.weights.display(),
            args.seed,
            args.nms,
            args.discrete,
            records.len()
        ),
    )?;
    println!("wrote {} detections to {}", records.len(), args.out.display());
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let dataset = load_dataset(&args.manifest)?;
    let config = build_config(&dataset, args.layers, args.bins, 1.0, 1)?;
    let dets = detections::load_detections(&args.detections, &config)?;
    let outcome = evaluate(&dataset, &config, &dets, &EvalParams { vp_bins: args.vp_bins })?;
    fs::create_dir_all(&args.out_dir)?;
    let text = report::render_report(&outcome, &config, args.vp_bins);
    fs::write(args.out_dir.join("report.txt"), &text)?;
    report::write_curves(&args.out_dir, &outcome)?;
    pipeline::write_run_config(
        &args.out_dir.join("run_config.txt"),
        "eval",
        &format!(
            "manifest {}\ndetections {}\nvp_bins {}\nbins {}\nlayers {}\n",
            args.manifest.display(),
            args.detections.display(),
            args.vp_bins,
            args.bins,
            args.layers
        ),
    )?;
    print!("{text}");
    Ok(())
}

fn cmd_overlay(args: OverlayArgs) -> Result<()> {
    let dataset = load_dataset(&args.manifest)?;
    let config = build_config(&dataset, 3, args.bins, 1.0, 1)?;
    let dets = detections::load_detections(&args.detections, &config)?;
    fs::create_dir_all(&args.out_dir)?;
    let mut written = 0usize;
    for (i, det) in dets.iter().enumerate() {
        let image = dataset.image(&det.image_id)?;
        let canvas = draw_overlay(image, det, &config)?;
        pgm::write_gray(
            &args.out_dir.join(format!("{}_{i:03}.pgm", det.image_id)),
            &canvas,
        )?;
        written += 1;
    }
    pipeline::write_run_config(
        &args.out_dir.join("run_config.txt"),
        "overlay",
        &format!(
            "manifest {}\ndetections {}\noverlays {}\n",
            args.manifest.display(),
            args.detections.display(),
            written
        ),
    )?;
    println!("wrote {written} overlays to {}", args.out_dir.display());
    Ok(())
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Train(args) => {
            ensure_parent(&args.out)?;
            cmd_train(args)
        }
        Command::Infer(args) => {
            ensure_parent(&args.out)?;
            if args.nms < 0.0 || args.nms > 1.0 {
                bail!("--nms must lie in [0, 1]");
            }
            cmd_infer(args)
        }
        Command::Eval(args) => cmd_eval(args),
        Command::Overlay(args) => cmd_overlay(args),
    }
}
