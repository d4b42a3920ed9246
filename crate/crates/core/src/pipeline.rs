//! End-to-end driver: simulate, space-time ground truth, MSL guidance,
//! guided and passive stereo, evaluation.
//!
//! Every scene gets its own directory:
//!
//! ```text
//! scene_<k>/left.png right_on.png right_off.png   16-bit grayscale
//!          /gt.pfm                                 space-time ground truth
//!          /gt_sim.pfm nonoccluded.png             simulator ground truth
//!          /msl_depth.pfm guide.pfm                MSL depth (IR), hints (left)
//!          /disp_guided.pfm disp_passive.pfm
//!          /calib.json scene.json meta.json
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{depth_to_binocular_disparity, reproject_depth, RigModel};
use crate::io::{self, BitDepth};
use crate::metrics::{compare, evaluate_with, EvalOptions, EvalResult, InvalidPolicy, Report, DEFAULT_THRESHOLDS};
use crate::msl::{msl_depth, MslMatchParams};
use crate::raster::{DepthMap, DisparityMap, ImageGray};
use crate::sim::{Renderer, Scene, SpeckleOptics, SpecklePattern};
use crate::spacetime::{spacetime_ground_truth, SpacetimeParams};
use crate::stereo::{match_guided, sample_guidance, MatcherConfig};

pub const METHOD_MSL: &str = "msl-only";
pub const METHOD_PASSIVE: &str = "passive";
pub const METHOD_GUIDED: &str = "guided";
pub const METHOD_GT_CHECK: &str = "spacetime-gt-self-check";

/// One simulated capture: the asymmetric pair with and without speckles,
/// the reference image and exact ground truth in the left frame.
#[derive(Debug, Clone)]
pub struct SimulatedScene {
    pub left: ImageGray,
    pub right_on: ImageGray,
    pub right_off: ImageGray,
    pub reference: ImageGray,
    pub gt_disparity: DisparityMap,
    /// Left pixels visible in the right camera.
    pub nonoccluded: Vec<bool>,
}

pub fn simulate(renderer: &Renderer, scene: &Scene, pattern: &SpecklePattern) -> Result<SimulatedScene> {
    let on = renderer.render(scene, pattern, true, scene.ambient)?;
    let right_off = renderer.compose(
        &renderer.ambient_view(scene, crate::sim::View::Ir, scene.ambient).0,
        None,
        pattern.seed ^ 0x4,
    );
    Ok(SimulatedScene {
        left: on.rgb_image,
        right_on: on.ir_image,
        right_off,
        reference: renderer.reference_image(pattern),
        gt_disparity: on.gt_disparity,
        nonoccluded: on.nonoccluded,
    })
}

/// MSL depth in the IR frame and the dense hint map it yields in the left
/// frame (reprojected, then converted to binocular disparity).
pub fn msl_guide(
    right_on: &ImageGray,
    reference: &ImageGray,
    rig: &RigModel,
    params: &MslMatchParams,
) -> Result<(DepthMap, DisparityMap)> {
    let z_ir = msl_depth(right_on, reference, rig, params)?;
    let z_rgb = reproject_depth(&z_ir, rig);
    Ok((z_ir, depth_to_binocular_disparity(&z_rgb, rig)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Calibration file; the prototype rig scaled by `rig_scale` when absent.
    pub calib: Option<PathBuf>,
    pub rig_scale: f64,
    /// Scene files; the built-in demo set when empty.
    pub scenes: Vec<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub dots: usize,
    pub optics: SpeckleOptics,
    pub msl: MslMatchParams,
    pub matcher: MatcherConfig,
    pub spacetime: SpacetimeParams,
    /// Feed MSL hints to the matcher.
    pub guidance: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            calib: None,
            rig_scale: 0.5,
            scenes: Vec::new(),
            out_dir: PathBuf::from("out"),
            seed: 1,
            dots: SpecklePattern::PROJECTOR_DOTS,
            optics: SpeckleOptics::default(),
            msl: MslMatchParams {
                search_min: -32,
                search_max: 64,
                ..Default::default()
            },
            matcher: MatcherConfig {
                d_max: 64,
                ..Default::default()
            },
            spacetime: SpacetimeParams {
                d_max: 64,
                ..Default::default()
            },
            guidance: true,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rig_scale > 0.0) {
            return Err(Error::InvalidParam(format!("rig_scale must be positive, got {}", self.rig_scale)));
        }
        if self.dots == 0 {
            return Err(Error::InvalidParam("dot count must be positive".into()));
        }
        self.msl.validate()?;
        self.matcher.validate()?;
        self.spacetime.validate()?;
        for p in self.calib.iter().chain(&self.scenes) {
            if !p.exists() {
                return Err(Error::File {
                    path: p.clone(),
                    source: std::io::Error::new(std::io::ErrorKind::NotFound, "referenced file does not exist"),
                });
            }
        }
        Ok(())
    }

    pub fn rig(&self) -> Result<RigModel> {
        match &self.calib {
            Some(p) => io::load_calibration(p),
            None => Ok(RigModel::default().scaled(self.rig_scale)),
        }
    }

    pub fn load_scenes(&self) -> Result<Vec<Scene>> {
        if self.scenes.is_empty() {
            return Ok(crate::suite::demo_scenes());
        }
        self.scenes.iter().map(|p| io::load_scene(p)).collect()
    }

    pub fn pattern(&self, rig: &RigModel) -> SpecklePattern {
        SpecklePattern::for_camera(self.dots, self.seed, &rig.ir_cam)
    }

    fn invalid_policy(&self) -> InvalidPolicy {
        InvalidPolicy::Penalty {
            epe_penalty: self.matcher.d_max as f64,
        }
    }
}

/// Seed for scene `k` and a purpose tag, independent across both.
pub fn derive_seed(seed: u64, k: usize, tag: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((k as u64).to_le_bytes());
    h.update(tag.to_le_bytes());
    u64::from_le_bytes(h.finalize()[..8].try_into().expect("8 bytes"))
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn scene_dir(out: &Path, k: usize) -> PathBuf {
    out.join(format!("scene_{k}"))
}

fn mask_image(mask: &[bool], w: usize, h: usize) -> ImageGray {
    ImageGray::from_fn(w, h, |x, y| if mask[y * w + x] { 1.0 } else { 0.0 })
}

#[derive(Debug, Serialize)]
struct Meta<'a> {
    scene: &'a str,
    seed: u64,
    frames: usize,
    scene_sha256: String,
}

fn stage<T>(name: &'static str, k: usize, f: impl FnOnce() -> Result<T>) -> Result<T> {
    f().map_err(|e| e.in_stage(name, &format!("scene_{k}")))
}

fn read_mask(path: &Path) -> Result<Vec<bool>> {
    Ok(io::read_png(path)?.as_slice().iter().map(|&v| v > 0.5).collect())
}

/// Renders the evaluation pair with and without speckles, the reference
/// image and simulator ground truth into `dir`.
pub fn simulate_stage(scene: &Scene, rig: &RigModel, cfg: &PipelineConfig, k: usize, dir: &Path) -> Result<SimulatedScene> {
    stage("simulate", k, || {
        fs::create_dir_all(dir).map_err(io::file_err(dir))?;
        let renderer = Renderer::new(*rig, cfg.optics);
        let sim = simulate(&renderer, scene, &cfg.pattern(rig))?;
        let (w, h) = sim.left.dims();
        io::write_png(&dir.join("left.png"), &sim.left, BitDepth::Sixteen)?;
        io::write_png(&dir.join("right_on.png"), &sim.right_on, BitDepth::Sixteen)?;
        io::write_png(&dir.join("right_off.png"), &sim.right_off, BitDepth::Sixteen)?;
        io::write_png(&dir.join("reference.png"), &sim.reference, BitDepth::Sixteen)?;
        io::write_pfm(&dir.join("gt_sim.pfm"), &sim.gt_disparity)?;
        io::write_png(&dir.join("nonoccluded.png"), &mask_image(&sim.nonoccluded, w, h), BitDepth::Eight)?;
        io::save_calibration(&dir.join("calib.json"), rig)?;
        let scene_json = serde_json::to_string_pretty(scene)?;
        let path = dir.join("scene.json");
        fs::write(&path, format!("{scene_json}\n")).map_err(io::file_err(&path))?;
        io::write_json(
            &dir.join("meta.json"),
            &Meta {
                scene: &scene.name,
                seed: cfg.seed,
                frames: cfg.spacetime.frames,
                scene_sha256: sha256_hex(scene_json.as_bytes()),
            },
        )?;
        Ok(sim)
    })
}

/// Space-time ground truth, written to `gt.pfm`.
pub fn gt_stage(scene: &Scene, rig: &RigModel, cfg: &PipelineConfig, k: usize, dir: &Path) -> Result<DisparityMap> {
    stage("gt", k, || {
        fs::create_dir_all(dir).map_err(io::file_err(dir))?;
        let renderer = Renderer::new(*rig, cfg.optics);
        let gt = spacetime_ground_truth(&renderer, scene, &cfg.pattern(rig), &cfg.spacetime)?;
        io::write_pfm(&dir.join("gt.pfm"), &gt)?;
        Ok(gt)
    })
}

/// MSL depth from `right_on.png` against `reference.png`, written to
/// `msl_depth.pfm`, and the reprojected hint map to `guide.pfm`.
pub fn msl_stage(rig: &RigModel, cfg: &PipelineConfig, k: usize, dir: &Path) -> Result<DisparityMap> {
    stage("msl", k, || {
        let live = io::read_png(&dir.join("right_on.png"))?;
        let reference = io::read_png(&dir.join("reference.png"))?;
        let (z_ir, guide) = msl_guide(&live, &reference, rig, &cfg.msl)?;
        io::write_depth_pfm(&dir.join("msl_depth.pfm"), &z_ir)?;
        io::write_pfm(&dir.join("guide.pfm"), &guide)?;
        Ok(guide)
    })
}

/// Guided matching of `left.png` against `right_on.png` with hints sampled
/// from `guide.pfm`, and passive matching against `right_off.png`.
pub fn stereo_stage(cfg: &PipelineConfig, k: usize, dir: &Path) -> Result<(DisparityMap, DisparityMap)> {
    let path = dir.join("guide.pfm");
    if cfg.guidance && !path.exists() {
        return Err(Error::GuideMissing {
            stage: "stereo",
            scene: format!("scene_{k}"),
            path,
        });
    }
    stage("stereo", k, || {
        let guide = if cfg.guidance {
            let g = &cfg.matcher.guidance;
            Some(sample_guidance(
                &io::read_pfm(&path)?,
                g.sample_fraction,
                derive_seed(cfg.seed, k, 1),
                g.hint_noise,
            )?)
        } else {
            None
        };
        let left = io::read_png(&dir.join("left.png"))?;
        let guided = match_guided(&left, &io::read_png(&dir.join("right_on.png"))?, guide.as_ref(), &cfg.matcher)?;
        let passive = match_guided(&left, &io::read_png(&dir.join("right_off.png"))?, None, &cfg.matcher)?;
        io::write_pfm(&dir.join("disp_guided.pfm"), &guided)?;
        io::write_pfm(&dir.join("disp_passive.pfm"), &passive)?;
        Ok((guided, passive))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneReport {
    pub scene: String,
    pub methods: Vec<(String, EvalResult)>,
}

/// Scores every method's output in `dir` against the simulator ground
/// truth on non-occluded pixels.
pub fn eval_stage(cfg: &PipelineConfig, name: &str, k: usize, dir: &Path) -> Result<SceneReport> {
    stage("eval", k, || {
        let gt = io::read_pfm(&dir.join("gt_sim.pfm"))?;
        let mask = read_mask(&dir.join("nonoccluded.png"))?;
        let opts = EvalOptions {
            thresholds: &DEFAULT_THRESHOLDS,
            invalid: cfg.invalid_policy(),
            mask: Some(&mask),
        };
        let mut methods = Vec::new();
        for (method, file) in [
            (METHOD_MSL, "guide.pfm"),
            (METHOD_PASSIVE, "disp_passive.pfm"),
            (METHOD_GUIDED, "disp_guided.pfm"),
            (METHOD_GT_CHECK, "gt.pfm"),
        ] {
            let pred = io::read_pfm(&dir.join(file))?;
            methods.push((method.to_string(), evaluate_with(&pred, &gt, &opts)?));
        }
        Ok(SceneReport {
            scene: name.to_string(),
            methods,
        })
    })
}

/// Simulation, space-time ground truth and MSL hints for one scene.
pub fn make_gt_dataset(scene: &Scene, rig: &RigModel, cfg: &PipelineConfig, k: usize, dir: &Path) -> Result<()> {
    simulate_stage(scene, rig, cfg, k, dir)?;
    gt_stage(scene, rig, cfg, k, dir)?;
    msl_stage(rig, cfg, k, dir)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub seed: u64,
    pub scenes: Vec<SceneReport>,
    /// Per-method mean over scenes.
    pub report: Report,
}

/// Mean of each metric across scenes, per method.
pub fn mean_results(scenes: &[SceneReport]) -> Vec<(String, EvalResult)> {
    let Some(first) = scenes.first() else {
        return Vec::new();
    };
    let n = scenes.len() as f64;
    first
        .methods
        .iter()
        .enumerate()
        .map(|(m, (name, proto))| {
            let mut r = proto.clone();
            r.epe = scenes.iter().map(|s| s.methods[m].1.epe).sum::<f64>() / n;
            for (j, b) in r.bad.iter_mut().enumerate() {
                b.percent = scenes.iter().map(|s| s.methods[m].1.bad[j].percent).sum::<f64>() / n;
            }
            r.n_evaluated = scenes.iter().map(|s| s.methods[m].1.n_evaluated).sum();
            r.n_invalid_pred = scenes.iter().map(|s| s.methods[m].1.n_invalid_pred).sum();
            (name.clone(), r)
        })
        .collect()
}

/// Runs `f` on every configured scene in parallel, in scene order.
pub fn for_each_scene<T: Send>(
    cfg: &PipelineConfig,
    f: impl Fn(&Scene, &RigModel, usize, &Path) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    cfg.validate()?;
    let rig = cfg.rig()?;
    let scenes = cfg.load_scenes()?;
    scenes
        .par_iter()
        .enumerate()
        .map(|(k, scene)| f(scene, &rig, k, &scene_dir(&cfg.out_dir, k)))
        .collect()
}

/// Averages per-scene results and writes `report.{json,txt,csv}` and the
/// effective `config.json` into `cfg.out_dir`.
pub fn write_report(cfg: &PipelineConfig, scenes: Vec<SceneReport>) -> Result<PipelineSummary> {
    let out = &cfg.out_dir;
    fs::create_dir_all(out).map_err(io::file_err(out))?;
    io::write_json(&out.join("config.json"), cfg)?;
    let summary = PipelineSummary {
        seed: cfg.seed,
        report: compare(&mean_results(&scenes))?,
        scenes,
    };
    io::write_json(&out.join("report.json"), &summary)?;
    for (name, text) in [
        ("report.txt", summary.report.to_text()),
        ("report.csv", summary.report.to_csv()),
    ] {
        let path = out.join(name);
        fs::write(&path, text).map_err(io::file_err(&path))?;
    }
    Ok(summary)
}

/// Every stage for every scene, then the report.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineSummary> {
    let scenes = for_each_scene(cfg, |scene, rig, k, dir| {
        make_gt_dataset(scene, rig, cfg, k, dir)?;
        stereo_stage(cfg, k, dir)?;
        eval_stage(cfg, &scene.name, k, dir)
    })?;
    write_report(cfg, scenes)
}
