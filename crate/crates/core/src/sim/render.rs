use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pattern::SpecklePattern;
use super::scene::{Albedo, Primitive, Ray, Scene};
use crate::error::{ensure_same_size, Result};
use crate::geometry::{depth_to_binocular_disparity, CameraIntrinsics, RigModel, RigidTransform};
use crate::raster::{DepthMap, DisparityMap, ImageGray};

/// Photometric model of projected dots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpeckleOptics {
    /// Brightness of a unit-intensity dot at 1 m.
    pub gain: f64,
    /// Distance attenuation exponent (inverse square by default).
    pub attenuation_exponent: f64,
    /// Depths below this are treated as this distance when attenuating.
    pub near_clip: f64,
    /// Gaussian spread of the 3x3 dot splat, pixels.
    pub splat_sigma: f64,
    /// Standard deviation of additive sensor noise; 0 disables it.
    pub sensor_noise: f64,
}

impl Default for SpeckleOptics {
    fn default() -> Self {
        Self {
            gain: 0.8,
            attenuation_exponent: 2.0,
            near_clip: 0.3,
            splat_sigma: 0.6,
            sensor_noise: 0.0,
        }
    }
}

impl SpeckleOptics {
    /// Unclamped brightness of a dot of relative intensity `rel` at depth `z`.
    #[inline]
    pub fn dot_brightness(&self, rel: f64, z: f64) -> f64 {
        rel * self.gain / z.max(self.near_clip).powf(self.attenuation_exponent)
    }
}

/// Simulated capture of one static scene by the rig.
#[derive(Debug, Clone)]
pub struct RenderedFrame {
    /// Right image of the binocular pair: ambient plus (optionally) speckles.
    pub ir_image: ImageGray,
    /// Left image of the binocular pair, grayscale; IR-cut filtered so it never
    /// shows speckles.
    pub rgb_image: ImageGray,
    pub gt_depth_ir: DepthMap,
    pub gt_depth_rgb: DepthMap,
    /// Binocular disparity in the left (RGB) frame, `B f / Z`.
    pub gt_disparity: DisparityMap,
    /// Left pixels whose surface point is seen by the right camera.
    pub nonoccluded: Vec<bool>,
}

/// Which rig sensor a ray cast or projection refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum View {
    Rgb,
    Ir,
}

/// A dot as it lands on a sensor: continuous pixel position and brightness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DotImage {
    pub u: f64,
    pub v: f64,
    pub depth: f64,
    pub brightness: f64,
}

#[derive(Debug, Clone)]
pub struct Renderer {
    pub rig: RigModel,
    pub optics: SpeckleOptics,
}

impl Renderer {
    pub fn new(rig: RigModel, optics: SpeckleOptics) -> Self {
        Self { rig, optics }
    }

    fn camera(&self, view: View) -> (&CameraIntrinsics, RigidTransform) {
        match view {
            View::Rgb => (&self.rig.rgb_cam, RigidTransform::IDENTITY),
            View::Ir => (&self.rig.ir_cam, self.rig.ir_to_rgb),
        }
    }

    /// Ambient radiance and camera-frame depth for every pixel of `view`.
    pub fn ambient_view(&self, scene: &Scene, view: View, ambient: f64) -> (ImageGray, DepthMap) {
        let (cam, world_from_cam) = self.camera(view);
        let origin = world_from_cam.translation;
        let rot = RigidTransform {
            translation: [0.0; 3],
            ..world_from_cam
        };
        let (w, h) = (cam.width, cam.height);
        let rows: Vec<(Vec<f32>, Vec<f64>)> = (0..h)
            .into_par_iter()
            .map(|y| {
                let mut radiance = vec![0.0f32; w];
                let mut depth = vec![f64::INFINITY; w];
                for x in 0..w {
                    let dir = rot.apply(cam.ray(x as f64, y as f64));
                    if let Some(hit) = scene.cast(&Ray { origin, dir }) {
                        radiance[x] = (ambient * hit.albedo).clamp(0.0, 1.0) as f32;
                        depth[x] = hit.t;
                    }
                }
                (radiance, depth)
            })
            .collect();
        let mut img = Vec::with_capacity(w * h);
        let mut z = Vec::with_capacity(w * h);
        for (r, d) in rows {
            img.extend(r);
            z.extend(d);
        }
        let valid = z.iter().map(|v| v.is_finite()).collect();
        (
            ImageGray::from_vec(w, h, img).expect("sized"),
            DepthMap::from_depths(w, h, z, valid).expect("sized"),
        )
    }

    /// Where each dot of `pattern` lands on `view`, after occlusion tests
    /// against the projector and the camera.
    pub fn dot_projections(&self, scene: &Scene, pattern: &SpecklePattern, view: View) -> Vec<DotImage> {
        let rig = &self.rig;
        let proj_origin = rig.ir_to_rgb.apply(rig.projector_in_ir());
        let proj_rot = RigidTransform {
            translation: [0.0; 3],
            ..rig.ir_to_rgb
        };
        let (cam, world_from_cam) = self.camera(view);
        let cam_from_world = world_from_cam.inverse();
        let cam_center = world_from_cam.translation;
        pattern
            .dots
            .par_iter()
            .filter_map(|dot| {
                let ray = Ray {
                    origin: proj_origin,
                    dir: proj_rot.apply(dot.direction),
                };
                let hit = scene.cast(&ray)?;
                if !scene.visible_from(cam_center, hit.point) {
                    return None;
                }
                let p = cam_from_world.apply(hit.point);
                let (u, v) = cam.project(p)?;
                Some(DotImage {
                    u,
                    v,
                    depth: p[2],
                    brightness: self.optics.dot_brightness(dot.intensity, p[2]),
                })
            })
            .collect()
    }

    /// Additive speckle radiance on `view` (unclamped).
    pub fn speckle_layer(&self, scene: &Scene, pattern: &SpecklePattern, view: View) -> Vec<f32> {
        let (cam, _) = self.camera(view);
        let (w, h) = (cam.width as isize, cam.height as isize);
        let mut layer = vec![0.0f32; cam.width * cam.height];
        let inv2s2 = 1.0 / (2.0 * self.optics.splat_sigma * self.optics.splat_sigma);
        for d in self.dot_projections(scene, pattern, view) {
            let (cu, cv) = (d.u.round() as isize, d.v.round() as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (x, y) = (cu + dx, cv + dy);
                    if x < 0 || y < 0 || x >= w || y >= h {
                        continue;
                    }
                    let r2 = (x as f64 - d.u).powi(2) + (y as f64 - d.v).powi(2);
                    layer[(y * w + x) as usize] += (d.brightness * (-r2 * inv2s2).exp()) as f32;
                }
            }
        }
        layer
    }

    /// `clamp(ambient + layer + noise, 0, 1)`.
    pub fn compose(&self, ambient: &ImageGray, layer: Option<&[f32]>, noise_seed: u64) -> ImageGray {
        let mut out = ambient.clone();
        if let Some(layer) = layer {
            for (o, l) in out.as_mut_slice().iter_mut().zip(layer) {
                *o += l;
            }
        }
        if self.optics.sensor_noise > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
            let n = Normal::new(0.0, self.optics.sensor_noise).expect("positive sigma");
            for o in out.as_mut_slice() {
                *o += n.sample(&mut rng) as f32;
            }
        }
        for o in out.as_mut_slice() {
            *o = o.clamp(0.0, 1.0);
        }
        out
    }

    /// Left pixels whose surface point is visible from the right camera and
    /// projects inside it.
    pub fn nonoccluded_mask(&self, scene: &Scene, depth_rgb: &DepthMap) -> Vec<bool> {
        let rgb = &self.rig.rgb_cam;
        let ir = &self.rig.ir_cam;
        let ir_from_world = self.rig.ir_to_rgb.inverse();
        let ir_center = self.rig.ir_to_rgb.translation;
        let w = rgb.width;
        (0..depth_rgb.width() * depth_rgb.height())
            .into_par_iter()
            .map(|i| {
                let (x, y) = (i % w, i / w);
                let Some(z) = depth_rgb.get(x, y) else {
                    return false;
                };
                let p = rgb.backproject(x as f64, y as f64, z);
                let Some((u, v)) = ir.project(ir_from_world.apply(p)) else {
                    return false;
                };
                let inside = u >= 0.0
                    && v >= 0.0
                    && u <= ir.width as f64 - 1.0
                    && v <= ir.height as f64 - 1.0;
                inside && scene.visible_from(ir_center, p)
            })
            .collect()
    }

    pub fn render(
        &self,
        scene: &Scene,
        pattern: &SpecklePattern,
        projector_on: bool,
        ambient: f64,
    ) -> Result<RenderedFrame> {
        scene.validate()?;
        let (rgb_amb, gt_depth_rgb) = self.ambient_view(scene, View::Rgb, ambient);
        let (ir_amb, gt_depth_ir) = self.ambient_view(scene, View::Ir, ambient);
        let layer = projector_on.then(|| self.speckle_layer(scene, pattern, View::Ir));
        let ir_image = self.compose(&ir_amb, layer.as_deref(), pattern.seed ^ 0x1);
        let rgb_image = self.compose(&rgb_amb, None, pattern.seed ^ 0x2);
        let gt_disparity = depth_to_binocular_disparity(&gt_depth_rgb, &self.rig);
        let nonoccluded = self.nonoccluded_mask(scene, &gt_depth_rgb);
        Ok(RenderedFrame {
            ir_image,
            rgb_image,
            gt_depth_ir,
            gt_depth_rgb,
            gt_disparity,
            nonoccluded,
        })
    }

    /// Speckle image of a white fronto-parallel plane at `Z_ref` in front of
    /// the IR camera, with no ambient light.
    pub fn reference_image(&self, pattern: &SpecklePattern) -> ImageGray {
        let rig = &self.rig;
        let rot = RigidTransform {
            translation: [0.0; 3],
            ..rig.ir_to_rgb
        };
        let plane = Scene::new(
            "reference",
            vec![Primitive::SlantedPlane {
                point: rig.ir_to_rgb.apply([0.0, 0.0, rig.z_ref]),
                normal: rot.apply([0.0, 0.0, 1.0]),
                albedo: Albedo::Uniform { value: 1.0 },
            }],
            0.0,
        );
        let amb = ImageGray::new(rig.ir_cam.width, rig.ir_cam.height);
        let layer = self.speckle_layer(&plane, pattern, View::Ir);
        self.compose(&amb, Some(&layer), pattern.seed ^ 0x3)
    }
}

/// Reference speckle image with default optics.
pub fn render_reference_image(pattern: &SpecklePattern, rig: &RigModel) -> ImageGray {
    Renderer::new(*rig, SpeckleOptics::default()).reference_image(pattern)
}

/// Renders `scene` with default optics.
pub fn render_scene(
    scene: &Scene,
    pattern: &SpecklePattern,
    rig: &RigModel,
    projector_on: bool,
    ambient: f64,
) -> Result<RenderedFrame> {
    Renderer::new(*rig, SpeckleOptics::default()).render(scene, pattern, projector_on, ambient)
}

/// Adds `pattern.count()` single-pixel dots at distinct uniformly random
/// pixels of `right_image`, each with brightness `optics.dot_brightness(1, Z)`
/// from the depth underneath. Pixels without valid depth receive no dot.
pub fn speckle_augment(
    right_image: &ImageGray,
    right_depth: &DepthMap,
    pattern: &SpecklePattern,
    optics: &SpeckleOptics,
) -> Result<ImageGray> {
    ensure_same_size("augmentation depth", right_image.dims(), right_depth.dims())?;
    let mut out = right_image.clone();
    let n = right_image.width() * right_image.height();
    if pattern.is_empty() || n == 0 {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(pattern.seed);
    let picks = rand::seq::index::sample(&mut rng, n, pattern.count().min(n));
    let w = right_image.width();
    for i in picks {
        let (x, y) = (i % w, i / w);
        if let Some(z) = right_depth.get(x, y) {
            let v = out.get(x, y) + optics.dot_brightness(1.0, z) as f32;
            out.set(x, y, v.clamp(0.0, 1.0));
        }
    }
    Ok(out)
}
