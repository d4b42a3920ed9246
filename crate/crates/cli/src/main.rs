//! `monostereo` command-line driver.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use monostereo::io;
use monostereo::metrics::{compare, evaluate_with, EvalOptions, InvalidPolicy, DEFAULT_THRESHOLDS};
use monostereo::pipeline::{self, PipelineConfig};
use monostereo::stereo::{match_guided, sample_guidance, Aggregation};

#[derive(Parser, Debug)]
#[command(name = "monostereo", version, about = "Monocular structured light guided stereo")]
struct Cli {
    /// Pipeline configuration (JSON); flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for dataset commands, output file otherwise.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render scene datasets: stereo pairs, reference image, simulator ground truth.
    Simulate(DatasetArgs),
    /// Space-time ground truth for rendered scenes.
    Gt(DatasetArgs),
    /// MSL depth of a live speckle image against the reference image.
    Msl(MslArgs),
    /// Correlation-volume stereo with optional MSL hints.
    Stereo(StereoArgs),
    /// Score a disparity map against ground truth.
    Eval(EvalArgs),
    /// Full pipeline over every scene, ending in report.json.
    Run(RunArgs),
}

#[derive(Args, Debug)]
struct DatasetArgs {
    /// Scene description (JSON); repeat for several. Built-in demo set if omitted.
    #[arg(long = "scene")]
    scenes: Vec<PathBuf>,
    #[arg(long)]
    calib: Option<PathBuf>,
    /// Space-time frames per scene.
    #[arg(long)]
    frames: Option<usize>,
}

#[derive(Args, Debug)]
struct MslArgs {
    #[arg(long)]
    live: PathBuf,
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long)]
    calib: Option<PathBuf>,
    /// Also write the hint map reprojected into the left camera.
    #[arg(long)]
    guide_out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AggKind {
    None,
    Box,
    Sgm,
}

#[derive(Args, Debug, Default)]
struct MatcherFlags {
    #[arg(long)]
    no_lrc: bool,
    #[arg(long, value_enum)]
    agg: Option<AggKind>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    guide_fraction: Option<f64>,
    #[arg(long)]
    d_max: Option<usize>,
}

#[derive(Args, Debug)]
struct StereoArgs {
    #[arg(long)]
    left: PathBuf,
    #[arg(long)]
    right: PathBuf,
    /// Dense hint disparities; sampled with --guide-fraction.
    #[arg(long)]
    guide: Option<PathBuf>,
    /// Checked against the image size when given.
    #[arg(long)]
    calib: Option<PathBuf>,
    #[command(flatten)]
    matcher: MatcherFlags,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    /// Only pixels set in this 8/16-bit mask image are scored.
    #[arg(long)]
    mask: Option<PathBuf>,
    /// Leave invalid predictions out instead of penalising them.
    #[arg(long)]
    skip_invalid: bool,
    #[arg(long, default_value_t = 192.0)]
    epe_penalty: f64,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    dataset: DatasetArgs,
    #[command(flatten)]
    matcher: MatcherFlags,
    /// Match without MSL hints.
    #[arg(long)]
    no_guidance: bool,
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg: PipelineConfig = match &cli.config {
        Some(p) => io::read_json(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out_dir = o.clone();
    }
    Ok(cfg)
}

fn apply_dataset(cfg: &mut PipelineConfig, a: &DatasetArgs) {
    if !a.scenes.is_empty() {
        cfg.scenes = a.scenes.clone();
    }
    if a.calib.is_some() {
        cfg.calib = a.calib.clone();
    }
    if let Some(n) = a.frames {
        cfg.spacetime.frames = n;
    }
}

fn apply_matcher(cfg: &mut PipelineConfig, f: &MatcherFlags) {
    let m = &mut cfg.matcher;
    if f.no_lrc {
        m.lrc = None;
    }
    match f.agg {
        Some(AggKind::None) => m.aggregation = Aggregation::None,
        Some(AggKind::Box) => m.aggregation = Aggregation::default(),
        Some(AggKind::Sgm) => m.aggregation = Aggregation::sgm(),
        None => {}
    }
    if let Some(v) = f.lambda {
        m.guidance.lambda = v;
    }
    if let Some(v) = f.sigma {
        m.guidance.sigma = v;
    }
    if let Some(v) = f.guide_fraction {
        m.guidance.sample_fraction = v;
    }
    if let Some(v) = f.d_max {
        m.d_max = v;
    }
}

fn out_file(cli: &Cli) -> Result<&Path> {
    match &cli.out {
        Some(p) => Ok(p),
        None => bail!("--out <file> is required"),
    }
}

fn print_summary(s: &pipeline::PipelineSummary) {
    print!("{}", s.report.to_text());
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let mut cfg = load_config(&cli)?;
    match &cli.command {
        Command::Simulate(a) => {
            apply_dataset(&mut cfg, a);
            pipeline::for_each_scene(&cfg, |scene, rig, k, dir| {
                pipeline::simulate_stage(scene, rig, &cfg, k, dir).map(|_| ())
            })?;
            io::write_json(&cfg.out_dir.join("config.json"), &cfg)?;
        }
        Command::Gt(a) => {
            apply_dataset(&mut cfg, a);
            pipeline::for_each_scene(&cfg, |scene, rig, k, dir| {
                pipeline::gt_stage(scene, rig, &cfg, k, dir).map(|_| ())
            })?;
        }
        Command::Msl(a) => {
            if a.calib.is_some() {
                cfg.calib = a.calib.clone();
            }
            cfg.msl.validate()?;
            let rig = cfg.rig()?;
            let live = io::read_png(&a.live)?;
            let reference = io::read_png(&a.reference)?;
            let (z, guide) = pipeline::msl_guide(&live, &reference, &rig, &cfg.msl).context("msl stage")?;
            io::write_depth_pfm(out_file(&cli)?, &z)?;
            if let Some(p) = &a.guide_out {
                io::write_pfm(p, &guide)?;
            }
        }
        Command::Stereo(a) => {
            apply_matcher(&mut cfg, &a.matcher);
            let left = io::read_png(&a.left)?;
            let right = io::read_png(&a.right)?;
            if let Some(p) = &a.calib {
                let rig = io::load_calibration(p)?;
                let want = (rig.rgb_cam.width, rig.rgb_cam.height);
                if left.dims() != want {
                    bail!("left image is {:?} but the calibration expects {want:?}", left.dims());
                }
            }
            let guide = match &a.guide {
                Some(p) => {
                    let g = &cfg.matcher.guidance;
                    let seed = pipeline::derive_seed(cfg.seed, 0, 1);
                    Some(sample_guidance(&io::read_pfm(p)?, g.sample_fraction, seed, g.hint_noise)?)
                }
                None => None,
            };
            let d = match_guided(&left, &right, guide.as_ref(), &cfg.matcher).context("stereo stage")?;
            io::write_pfm(out_file(&cli)?, &d)?;
        }
        Command::Eval(a) => {
            let pred = io::read_pfm(&a.pred)?;
            let gt = io::read_pfm(&a.gt)?;
            let mask = match &a.mask {
                Some(p) => Some(io::read_png(p)?.as_slice().iter().map(|&v| v > 0.5).collect::<Vec<_>>()),
                None => None,
            };
            let invalid = if a.skip_invalid {
                InvalidPolicy::Skip
            } else {
                InvalidPolicy::Penalty {
                    epe_penalty: a.epe_penalty,
                }
            };
            let opts = EvalOptions {
                thresholds: &DEFAULT_THRESHOLDS,
                invalid,
                mask: mask.as_deref(),
            };
            let name = a.pred.file_stem().map_or("pred".into(), |s| s.to_string_lossy().into_owned());
            let report = compare(&[(name, evaluate_with(&pred, &gt, &opts)?)])?;
            let out = out_file(&cli)?;
            let text = match out.extension().and_then(|e| e.to_str()) {
                Some("json") => format!("{}\n", serde_json::to_string_pretty(&report.to_json())?),
                Some("csv") => report.to_csv(),
                _ => report.to_text(),
            };
            fs::write(out, &text).with_context(|| format!("writing {}", out.display()))?;
            print!("{}", report.to_text());
        }
        Command::Run(a) => {
            apply_dataset(&mut cfg, &a.dataset);
            apply_matcher(&mut cfg, &a.matcher);
            if a.no_guidance {
                cfg.guidance = false;
            }
            print_summary(&pipeline::run_pipeline(&cfg)?);
        }
    }
    Ok(())
}
