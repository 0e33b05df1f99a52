use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ldi4d_core::animation::{AnimationConfig, BlendCurve, EulerianFlow, FlowSampling};
use ldi4d_core::assets::png::{read_color_png, read_mask_png, write_png};
use ldi4d_core::assets::{read_pfm, write_pfm};
use ldi4d_core::camera::{render_intrinsics, AutocruiseConfig};
use ldi4d_core::layering::ClusterConfig;
use ldi4d_core::metrics::{
    psnr, sequence_consistency, ssim, FrameMetrics, MetricsReport, SequenceFrame,
};
use ldi4d_core::pointcloud::lift_scene;
use ldi4d_core::renderer::{
    depth_file_name, frame_file_name, holes_file_name, render_frame, render_sequence,
};
use ldi4d_core::synthetic::{generate_scene, Preset, SynthConfig};
use ldi4d_core::{
    load_bundle, save_bundle, Margins, RenderConfig, SceneAssets, SplatConfig, Trajectory,
};

/// Layered depth image scene engine: turns a scene bundle into a looping,
/// camera-moving animation.
#[derive(Parser, Debug)]
#[command(name = "ldi4d", version)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic scene bundle plus a ground-truth directory.
    Synth(SynthArgs),
    /// Split a bundle into depth layers and write them out.
    Layer(LayerArgs),
    /// Render an animated fly-through of a bundle.
    Animate(AnimateArgs),
    /// Render a fly-through with the scene held still.
    Render(RenderArgs),
    /// Score rendered frames.
    Eval(EvalArgs),
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// planes, terraced-terrain or corridor.
    #[arg(long)]
    preset: Preset,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Text prompt recorded in the manifest.
    #[arg(long)]
    prompt: Option<String>,
    #[arg(long, default_value_t = 64)]
    width: usize,
    #[arg(long, default_value_t = 64)]
    height: usize,
    /// Outpainting margin on every side.
    #[arg(long, default_value_t = 16)]
    margin: usize,
    /// Ground-truth views rendered along the auto trajectory.
    #[arg(long, default_value_t = 4)]
    views: usize,
}

#[derive(Args, Debug)]
struct LayerArgs {
    #[arg(long)]
    bundle: PathBuf,
    /// Layer count, or `auto`.
    #[arg(long, default_value = "3")]
    layers: LayerCount,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SceneArgs {
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long, default_value_t = 60)]
    frames: usize,
    /// `auto` or a trajectory file.
    #[arg(long, default_value = "auto")]
    trajectory: String,
    /// Layer count, or `auto`; defaults to the bundle's inpainted layer count
    /// (3 without inpainting).
    #[arg(long)]
    layers: Option<LayerCount>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    splat: SplatArgs,
}

#[derive(Args, Debug)]
struct AnimateArgs {
    #[command(flatten)]
    scene: SceneArgs,
    /// Global multiplier on the flow field.
    #[arg(long, default_value_t = 1.0)]
    flow_scale: f32,
    #[arg(long, value_enum, default_value_t = Blend::Linear)]
    blend: Blend,
    #[arg(long, value_enum, default_value_t = Sampling::Nearest)]
    sampling: Sampling,
}

#[derive(Args, Debug)]
struct RenderArgs {
    #[command(flatten)]
    scene: SceneArgs,
}

#[derive(Args, Debug)]
struct SplatArgs {
    /// Footprint radius in pixels.
    #[arg(long, default_value_t = 0.75)]
    radius: f64,
    /// Keep the radius fixed instead of growing it as points come closer.
    #[arg(long)]
    fixed_radius: bool,
    #[arg(long, default_value_t = 16.0)]
    max_radius: f64,
    #[arg(long, default_value_t = 1.0)]
    kernel_sharpness: f32,
    #[arg(long, default_value_t = 0.05)]
    alpha_threshold: f32,
    #[arg(long, default_value_t = 8)]
    max_points_per_pixel: usize,
    #[arg(long, default_value_t = 16)]
    tile_size: usize,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Directory of `frame_%04d.png` to score.
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth frames, needed for psnr and ssim.
    #[arg(long)]
    gt: Option<PathBuf>,
    /// Directory of `depth_%04d.pfm` (and optional `holes_%04d.png`) for the
    /// predicted frames; defaults to `--pred`.
    #[arg(long)]
    depth: Option<PathBuf>,
    /// Camera trajectory of the predicted frames; defaults to
    /// `<pred>/trajectory.txt`.
    #[arg(long)]
    poses: Option<PathBuf>,
    /// Re-render the consistency sequence from this bundle with the flow
    /// forced to zero instead of scoring the predicted frames.
    #[arg(long)]
    bundle: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "psnr,ssim,consistency")]
    metrics: Vec<Metric>,
    /// CSV report path; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Metric {
    Psnr,
    Ssim,
    Consistency,
    Lpips,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Blend {
    Linear,
    SmoothStep,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Sampling {
    Nearest,
    Bilinear,
}

#[derive(Clone, Copy, Debug)]
enum LayerCount {
    Auto,
    Fixed(usize),
}

impl std::str::FromStr for LayerCount {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(LayerCount::Auto);
        }
        match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(LayerCount::Fixed(n)),
            _ => Err(format!(
                "expected a positive layer count or `auto`, got {s:?}"
            )),
        }
    }
}

impl LayerCount {
    fn config(self) -> ClusterConfig {
        match self {
            LayerCount::Auto => ClusterConfig::auto(),
            LayerCount::Fixed(n) => ClusterConfig::with_layers(n),
        }
    }
}

impl SplatArgs {
    fn config(&self) -> SplatConfig {
        SplatConfig {
            radius: self.radius,
            depth_adaptive: !self.fixed_radius,
            max_radius: self.max_radius,
            kernel_sharpness: self.kernel_sharpness,
            alpha_threshold: self.alpha_threshold,
            max_points_per_pixel: self.max_points_per_pixel,
            tile_size: self.tile_size,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("thread pool")?;
    }
    match cli.command {
        Command::Synth(args) => synth(&args),
        Command::Layer(args) => layer(&args),
        Command::Animate(args) => {
            let animation = AnimationConfig {
                sampling: match args.sampling {
                    Sampling::Nearest => FlowSampling::Nearest,
                    Sampling::Bilinear => FlowSampling::Bilinear,
                },
                blend: match args.blend {
                    Blend::Linear => BlendCurve::Linear,
                    Blend::SmoothStep => BlendCurve::SmoothStep,
                },
                mask: None,
            };
            fly_through(&args.scene, Some(args.flow_scale), animation).context("animate")
        }
        Command::Render(args) => {
            fly_through(&args.scene, None, AnimationConfig::default()).context("render")
        }
        Command::Eval(args) => eval(&args).context("eval"),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("{}", dir.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("{}", path.display()))
}

fn synth(args: &SynthArgs) -> Result<()> {
    let mut config = SynthConfig {
        width: args.width,
        height: args.height,
        margins: Margins::uniform(args.margin),
        ..Default::default()
    };
    let scene = generate_scene(args.preset, args.seed, &config).context("synth")?;
    let k = render_intrinsics(&scene.assets).context("synth")?;
    let mut poses = None;
    if args.views >= 2 {
        let trajectory = Trajectory::autocruise(
            &scene.full_cloud(),
            args.views,
            k,
            &AutocruiseConfig::default(),
        )
        .context("synth: trajectory")?;
        config.view_poses = trajectory.frames.iter().map(|f| f.pose).collect();
        poses = Some(trajectory);
    }
    let scene = if poses.is_some() {
        generate_scene(args.preset, args.seed, &config).context("synth: ground-truth views")?
    } else {
        scene
    };

    let mut assets = scene.assets.clone();
    assets.prompt = args.prompt.clone();
    save_bundle(&assets, &args.out).context("synth: save bundle")?;

    let gt = args.out.join("gt");
    create_dir(&gt)?;
    write_text(
        &gt.join("intervals.txt"),
        &scene.gt_layer_stack.intervals.to_text(),
    )?;
    write_png(&scene.fluid_mask, gt.join("fluid_mask.png"))?;
    for layer in &scene.gt_layer_stack.layers {
        let i = layer.index;
        write_png(&layer.mask, gt.join(format!("layer_{i}_mask.png")))?;
        write_png(&layer.validity, gt.join(format!("layer_{i}_validity.png")))?;
        write_png(&layer.color, gt.join(format!("layer_{i}_color.png")))?;
        write_pfm(&layer.depth, gt.join(format!("layer_{i}_depth.pfm")))?;
    }
    if let Some(trajectory) = poses {
        trajectory.write(gt.join("poses.txt"))?;
        for (t, (view, mask)) in scene
            .gt_views
            .iter()
            .zip(&scene.disocclusion_masks)
            .enumerate()
        {
            write_png(&view.image, gt.join(frame_file_name(t)))?;
            write_pfm(&view.depth, gt.join(depth_file_name(t)))?;
            write_png(mask, gt.join(format!("disocclusion_{t:04}.png")))?;
        }
    }
    println!(
        "wrote {} bundle (seed {}) with {} layers and {} ground-truth views to {}",
        format!("{:?}", args.preset).to_lowercase(),
        args.seed,
        scene.gt_layer_stack.len(),
        scene.gt_views.len(),
        args.out.display()
    );
    Ok(())
}

fn layer(args: &LayerArgs) -> Result<()> {
    let assets = load_bundle(&args.bundle).context("layer: load bundle")?;
    let (stack, cloud) = lift_scene(&assets, &args.layers.config()).context("layer")?;
    create_dir(&args.out)?;
    write_text(&args.out.join("intervals.txt"), &stack.intervals.to_text())?;
    for l in &stack.layers {
        let i = l.index;
        write_png(&l.mask, args.out.join(format!("layer_{i}_mask.png")))?;
        write_png(
            &l.validity,
            args.out.join(format!("layer_{i}_validity.png")),
        )?;
        write_png(&l.color, args.out.join(format!("layer_{i}_color.png")))?;
        write_pfm(&l.depth, args.out.join(format!("layer_{i}_depth.pfm")))?;
    }
    println!(
        "{} layers, {} points -> {}",
        stack.len(),
        cloud.len(),
        args.out.display()
    );
    Ok(())
}

fn default_layers(assets: &SceneAssets) -> ClusterConfig {
    match assets.inpainted_layers.len() {
        0 => ClusterConfig::default(),
        n => ClusterConfig::with_layers(n),
    }
}

/// Load, layer, lift, plan the camera path and render every frame.
/// `flow_scale` of `None` holds the scene still.
fn fly_through(
    args: &SceneArgs,
    flow_scale: Option<f32>,
    animation: AnimationConfig,
) -> Result<()> {
    if args.frames < 2 {
        bail!("--frames must be at least 2, got {}", args.frames);
    }
    let splat = args.splat.config();
    splat.validate().context("splat options")?;
    let assets = load_bundle(&args.bundle).context("load bundle")?;
    let clustering = args
        .layers
        .map_or_else(|| default_layers(&assets), LayerCount::config);
    let (stack, cloud) = lift_scene(&assets, &clustering).context("lift")?;
    log::info!("{} layers, {} points", stack.len(), cloud.len());

    let k = render_intrinsics(&assets).context("intrinsics")?;
    let trajectory = if args.trajectory == "auto" {
        Trajectory::autocruise(&cloud, args.frames, k, &AutocruiseConfig::default())
            .context("trajectory")?
    } else {
        let t = Trajectory::read(&args.trajectory, Some(k)).context("trajectory")?;
        if t.len() != args.frames {
            log::warn!(
                "trajectory file has {} frames; --frames {} ignored",
                t.len(),
                args.frames
            );
        }
        t
    };
    let (fw, fh) = assets.frame_dims();
    let flow = match flow_scale {
        Some(s) => EulerianFlow::new(assets.flow.clone(), trajectory.loop_length())
            .and_then(|f| f.scaled(s))
            .context("flow")?,
        None => EulerianFlow::zeros(fw, fh, trajectory.loop_length()),
    };
    let config = RenderConfig { splat, animation };
    create_dir(&args.out)?;
    trajectory
        .write(args.out.join("trajectory.txt"))
        .context("trajectory")?;
    let report =
        render_sequence(&cloud, &flow, &trajectory, &config, &args.out, true).context("render")?;
    println!(
        "{} frames -> {} (mean hole fraction {:.6})",
        report.frame_paths.len(),
        args.out.display(),
        report.mean_hole_fraction()
    );
    Ok(())
}

fn count_frames(dir: &Path) -> usize {
    (0..)
        .take_while(|&t| dir.join(frame_file_name(t)).is_file())
        .count()
}

fn eval(args: &EvalArgs) -> Result<()> {
    let n = count_frames(&args.pred);
    if n == 0 {
        bail!("{}: no {} found", args.pred.display(), frame_file_name(0));
    }
    let pred: Vec<_> = (0..n)
        .map(|t| read_color_png(args.pred.join(frame_file_name(t))))
        .collect::<Result<_, _>>()
        .context("predicted frames")?;
    let mut report = MetricsReport {
        frames: (0..n)
            .map(|frame| FrameMetrics {
                frame,
                ..Default::default()
            })
            .collect(),
    };
    let wants = |m: Metric| args.metrics.contains(&m);

    if wants(Metric::Psnr) || wants(Metric::Ssim) {
        let gt_dir = args.gt.as_ref().context("psnr and ssim need --gt")?;
        for (t, p) in pred.iter().enumerate() {
            let g = read_color_png(gt_dir.join(frame_file_name(t))).context("ground truth")?;
            let row = &mut report.frames[t];
            if wants(Metric::Psnr) {
                row.psnr = Some(psnr(p, &g).with_context(|| format!("psnr, frame {t}"))?);
            }
            if wants(Metric::Ssim) {
                row.ssim = Some(ssim(p, &g).with_context(|| format!("ssim, frame {t}"))?);
            }
        }
    }

    if wants(Metric::Consistency) {
        let poses = args
            .poses
            .clone()
            .unwrap_or_else(|| args.pred.join("trajectory.txt"));
        let frames = match &args.bundle {
            Some(bundle) => static_frames(bundle, &poses)?,
            None => {
                let trajectory = Trajectory::read(&poses, None).context("poses")?;
                let depth_dir = args.depth.as_ref().unwrap_or(&args.pred);
                let frames = pred
                    .iter()
                    .enumerate()
                    .map(|(t, image)| -> Result<SequenceFrame> {
                        let holes = depth_dir.join(holes_file_name(t));
                        Ok(SequenceFrame {
                            image: image.clone(),
                            depth: read_pfm(depth_dir.join(depth_file_name(t)))?,
                            holes: holes.is_file().then(|| read_mask_png(&holes)).transpose()?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()
                    .context("depth")?;
                (frames, trajectory)
            }
        };
        let (frames, trajectory) = frames;
        if frames.len() != n {
            bail!("{} poses for {n} frames", frames.len());
        }
        let pairs = sequence_consistency(&frames, &trajectory).context("consistency")?;
        for (t, c) in pairs.into_iter().enumerate() {
            report.frames[t].consistency = Some(c);
        }
    }

    let csv = report.to_csv();
    match &args.out {
        Some(path) => write_text(path, &csv)?,
        None => print!("{csv}"),
    }
    let show = |v: Option<f64>| v.map_or_else(|| "n/a".into(), |x| format!("{x:.4}"));
    let mut summary = Vec::new();
    if wants(Metric::Psnr) {
        summary.push(format!("psnr {}", show(report.psnr())));
    }
    if wants(Metric::Ssim) {
        summary.push(format!("ssim {}", show(report.ssim())));
    }
    if wants(Metric::Consistency) {
        summary.push(format!("consistency {}", show(report.consistency())));
    }
    if wants(Metric::Lpips) {
        summary.push("lpips unavailable (needs pretrained weights)".into());
    }
    eprintln!("{}", summary.join(", "));
    Ok(())
}

/// Renders the bundle along `poses` with the flow forced to zero.
fn static_frames(bundle: &Path, poses: &Path) -> Result<(Vec<SequenceFrame>, Trajectory)> {
    let assets = load_bundle(bundle).context("load bundle")?;
    let (_, cloud) = lift_scene(&assets, &default_layers(&assets)).context("lift")?;
    let k = render_intrinsics(&assets).context("intrinsics")?;
    let trajectory = Trajectory::read(poses, Some(k)).context("poses")?;
    let (fw, fh) = assets.frame_dims();
    let flow = EulerianFlow::zeros(fw, fh, trajectory.loop_length());
    let config = RenderConfig::default();
    let frames = (0..trajectory.len())
        .map(|t| -> Result<SequenceFrame> {
            let fb = render_frame(&cloud, &flow, &trajectory, t, &config)?;
            Ok(SequenceFrame {
                image: fb.normalized_color()?,
                depth: fb.depth.clone(),
                holes: Some(fb.hole_mask.clone()),
            })
        })
        .collect::<Result<Vec<_>>>()
        .context("render")?;
    Ok((frames, trajectory))
}
