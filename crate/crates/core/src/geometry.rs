//! Rig model and the conversions between MSL disparity, depth and binocular
//! disparity.
//!
//! Frames: the RGB camera is the left camera of the rectified binocular pair
//! and defines the world frame. The IR camera is the right camera, `B` meters
//! along +x. The projector sits `B_m` meters to the left of the IR camera
//! (between the two cameras) with axes parallel to the IR camera.
//!
//! Sign conventions: binocular disparity is `x_left - x_right >= 0`. MSL
//! disparity is `x_live - x_ref`; with the projector on the -x side of the IR
//! camera this gives `d_m = B_m f_m (1/Z_ref - 1/Z)`, so points behind the
//! reference plane have positive disparity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{DepthMap, DisparityMap};

/// Denominators of the MSL depth formula below this value invalidate the pixel.
pub const MSL_DENOMINATOR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    /// Pinhole camera with the principal point at the image center.
    pub fn centered(focal: f64, width: usize, height: usize) -> Self {
        Self {
            fx: focal,
            fy: focal,
            cx: (width as f64 - 1.0) / 2.0,
            cy: (height as f64 - 1.0) / 2.0,
            width,
            height,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.fx > 0.0
            && self.fy > 0.0
            && self.width > 0
            && self.height > 0
            && (0.0..self.width as f64).contains(&self.cx)
            && (0.0..self.height as f64).contains(&self.cy);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParam(format!("bad camera intrinsics {self:?}")))
        }
    }

    /// Projects a camera-frame point to continuous pixel coordinates.
    #[inline]
    pub fn project(&self, p: [f64; 3]) -> Option<(f64, f64)> {
        if p[2] <= 0.0 {
            return None;
        }
        Some((self.fx * p[0] / p[2] + self.cx, self.fy * p[1] / p[2] + self.cy))
    }

    /// Back-projects pixel `(u, v)` at depth `z` into the camera frame.
    #[inline]
    pub fn backproject(&self, u: f64, v: f64, z: f64) -> [f64; 3] {
        [(u - self.cx) * z / self.fx, (v - self.cy) * z / self.fy, z]
    }

    /// Direction (not normalized, z = 1) of the ray through pixel `(u, v)`.
    #[inline]
    pub fn ray(&self, u: f64, v: f64) -> [f64; 3] {
        [(u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let width = ((self.width as f64) * factor).round() as usize;
        let height = ((self.height as f64) * factor).round() as usize;
        // Pixel centers: continuous coordinate u maps to (u + 0.5) * s - 0.5.
        Self {
            fx: self.fx * factor,
            fy: self.fy * factor,
            cx: (self.cx + 0.5) * factor - 0.5,
            cy: (self.cy + 0.5) * factor - 0.5,
            width,
            height,
        }
    }
}

/// `p_dst = R p_src + t`, rotation stored row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    pub rotation: [f64; 9],
    pub translation: [f64; 3],
}

impl RigidTransform {
    pub const IDENTITY: Self = Self {
        rotation: [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
        translation: [0.0; 3],
    };

    pub fn translation(t: [f64; 3]) -> Self {
        Self {
            translation: t,
            ..Self::IDENTITY
        }
    }

    /// Rotation about the y axis by `angle` radians followed by `t`.
    pub fn from_yaw(angle: f64, t: [f64; 3]) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            rotation: [c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c],
            translation: t,
        }
    }

    #[inline]
    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            r[0] * p[0] + r[1] * p[1] + r[2] * p[2] + t[0],
            r[3] * p[0] + r[4] * p[1] + r[5] * p[2] + t[1],
            r[6] * p[0] + r[7] * p[1] + r[8] * p[2] + t[2],
        ]
    }

    pub fn inverse(&self) -> Self {
        let r = &self.rotation;
        let rt = [r[0], r[3], r[6], r[1], r[4], r[7], r[2], r[5], r[8]];
        let t = &self.translation;
        let ti = [
            -(rt[0] * t[0] + rt[1] * t[1] + rt[2] * t[2]),
            -(rt[3] * t[0] + rt[4] * t[1] + rt[5] * t[2]),
            -(rt[6] * t[0] + rt[7] * t[1] + rt[8] * t[2]),
        ];
        Self {
            rotation: rt,
            translation: ti,
        }
    }

    pub fn validate(&self) -> Result<()> {
        const TOL: f64 = 1e-9;
        let r = &self.rotation;
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| r[3 * i + k] * r[3 * j + k]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (dot - want).abs() > TOL {
                    return Err(Error::InvalidParam("rotation is not orthonormal".into()));
                }
            }
        }
        let det = r[0] * (r[4] * r[8] - r[5] * r[7]) - r[1] * (r[3] * r[8] - r[5] * r[6])
            + r[2] * (r[3] * r[7] - r[4] * r[6]);
        if (det - 1.0).abs() > TOL {
            return Err(Error::InvalidParam(format!("rotation determinant {det} != 1")));
        }
        if !self.translation.iter().all(|t| t.is_finite()) {
            return Err(Error::InvalidParam("non-finite translation".into()));
        }
        Ok(())
    }
}

/// Camera/projector rig. The serialized form is the calibration file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigModel {
    pub ir_cam: CameraIntrinsics,
    pub rgb_cam: CameraIntrinsics,
    /// Stereo baseline (RGB to IR camera), meters.
    pub baseline: f64,
    /// MSL baseline (IR camera to projector), meters.
    pub msl_baseline: f64,
    /// Distance of the reference plane, meters.
    pub z_ref: f64,
    /// Maps IR-camera coordinates into the RGB-camera frame.
    pub ir_to_rgb: RigidTransform,
}

impl Default for RigModel {
    /// The prototype rig: 1280x960 sensors, 94.14 mm stereo baseline,
    /// 63.0 mm MSL baseline, reference plane at 0.8 m.
    fn default() -> Self {
        let cam = CameraIntrinsics::centered(570.0, 1280, 960);
        Self {
            ir_cam: cam,
            rgb_cam: cam,
            baseline: 0.09414,
            msl_baseline: 0.063,
            z_ref: 0.8,
            ir_to_rgb: RigidTransform::translation([0.09414, 0.0, 0.0]),
        }
    }
}

impl RigModel {
    pub fn validate(&self) -> Result<()> {
        self.ir_cam.validate()?;
        self.rgb_cam.validate()?;
        self.ir_to_rgb.validate()?;
        for (name, v) in [
            ("baseline", self.baseline),
            ("msl_baseline", self.msl_baseline),
            ("z_ref", self.z_ref),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParam(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Same rig with both sensors resampled by `factor` (e.g. 0.5 for 640x480).
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            ir_cam: self.ir_cam.scaled(factor),
            rgb_cam: self.rgb_cam.scaled(factor),
            ..*self
        }
    }

    /// `B * f` for the binocular pair, in meter-pixels.
    pub fn stereo_bf(&self) -> f64 {
        self.baseline * self.rgb_cam.fx
    }

    /// `B_m * f_m` for the MSL subsystem, in meter-pixels.
    pub fn msl_bf(&self) -> f64 {
        self.msl_baseline * self.ir_cam.fx
    }

    /// Projector origin expressed in the IR camera frame.
    pub fn projector_in_ir(&self) -> [f64; 3] {
        [-self.msl_baseline, 0.0, 0.0]
    }

    /// Converts a single MSL disparity to depth; `None` when the denominator
    /// falls below [`MSL_DENOMINATOR_FLOOR`].
    #[inline]
    pub fn msl_depth_of(&self, d_m: f64) -> Option<f64> {
        let denom = 1.0 - self.z_ref * d_m / self.msl_bf();
        (d_m.is_finite() && denom >= MSL_DENOMINATOR_FLOOR).then(|| self.z_ref / denom)
    }

    /// Inverse of [`Self::msl_depth_of`].
    #[inline]
    pub fn msl_disparity_of(&self, z: f64) -> f64 {
        self.msl_bf() * (1.0 / self.z_ref - 1.0 / z)
    }

    #[inline]
    pub fn stereo_disparity_of(&self, z: f64) -> Option<f64> {
        (z.is_finite() && z > 0.0).then(|| self.stereo_bf() / z)
    }

    #[inline]
    pub fn stereo_depth_of(&self, d: f64) -> Option<f64> {
        (d.is_finite() && d > 0.0).then(|| self.stereo_bf() / d)
    }
}

/// Depth from reference-relative MSL disparity:
/// `Z = Z_ref / (1 - Z_ref d_m / (B_m f_m))`.
pub fn msl_disparity_to_depth(d_m: &DisparityMap, rig: &RigModel) -> DepthMap {
    let (w, h) = d_m.dims();
    DepthMap::from_fn(w, h, |x, y| d_m.get(x, y).and_then(|d| rig.msl_depth_of(d)))
}

/// Binocular disparity `d = B f / Z`, per valid pixel.
pub fn depth_to_binocular_disparity(z: &DepthMap, rig: &RigModel) -> DisparityMap {
    let (w, h) = z.dims();
    DisparityMap::from_fn(w, h, |x, y| z.get(x, y).and_then(|z| rig.stereo_disparity_of(z)))
}

/// Inverse of [`depth_to_binocular_disparity`].
pub fn binocular_disparity_to_depth(d: &DisparityMap, rig: &RigModel) -> DepthMap {
    let (w, h) = d.dims();
    DepthMap::from_fn(w, h, |x, y| d.get(x, y).and_then(|d| rig.stereo_depth_of(d)))
}

/// Forward-warps an IR-frame depth map into the RGB camera with
/// nearest-pixel splatting and a z-buffer (nearest depth wins).
pub fn reproject_depth(z_ir: &DepthMap, rig: &RigModel) -> DepthMap {
    let ir = &rig.ir_cam;
    let rgb = &rig.rgb_cam;
    let (w, h) = (rgb.width, rgb.height);
    let mut zbuf = vec![f64::INFINITY; w * h];
    for (x, y, z) in z_ir.iter_valid() {
        let p = rig.ir_to_rgb.apply(ir.backproject(x as f64, y as f64, z));
        let Some((u, v)) = rgb.project(p) else { continue };
        let (u, v) = (u.round(), v.round());
        if u < 0.0 || v < 0.0 || u >= w as f64 || v >= h as f64 {
            continue;
        }
        let i = v as usize * w + u as usize;
        if p[2] < zbuf[i] {
            zbuf[i] = p[2];
        }
    }
    let valid = zbuf.iter().map(|z| z.is_finite()).collect();
    DepthMap::from_depths(w, h, zbuf, valid).expect("buffer sized from intrinsics")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rig() -> RigModel {
        RigModel::default()
    }

    #[test]
    fn zero_msl_disparity_is_reference_plane() {
        assert_eq!(rig().msl_depth_of(0.0), Some(0.8));
    }

    #[test]
    fn msl_depth_known_value() {
        // d = B_m f (1/Z_ref - 1/Z) with Z = 1 m.
        let r = rig();
        let d: f64 = 0.063 * 570.0 * (1.0 / 0.8 - 1.0);
        assert!((d - 8.9775).abs() < 1e-12);
        let z = r.msl_depth_of(8.9775).unwrap();
        assert!((z - 1.0).abs() < 1e-12, "{z}");
        // Plug back into the forward formula.
        let back: f64 = 0.8 / (1.0 - 0.8 * 8.9775 / (0.063 * 570.0));
        assert!((back - z).abs() < 1e-15);
    }

    #[test]
    fn singular_msl_disparity_is_invalid() {
        let r = rig();
        let singular = r.msl_bf() / r.z_ref;
        let map = DisparityMap::from_values(3, 1, vec![0.0, singular, singular + 5.0]).unwrap();
        let z = msl_disparity_to_depth(&map, &r);
        assert_eq!(z.get(0, 0), Some(0.8));
        assert!(!z.is_valid(1, 0));
        assert!(!z.is_valid(2, 0));
    }

    #[test]
    fn binocular_disparity_known_value() {
        let r = rig();
        let z = DepthMap::from_values(1, 1, vec![1.0]).unwrap();
        let d = depth_to_binocular_disparity(&z, &r).get(0, 0).unwrap();
        assert!((d - 53.6598).abs() < 1e-9, "{d}");
    }

    #[test]
    fn infinite_depth_is_invalid_disparity() {
        let r = rig();
        let mut z = DepthMap::invalid(2, 1);
        z.set(0, 0, 2.0);
        z.set(1, 0, f64::INFINITY);
        let d = depth_to_binocular_disparity(&z, &r);
        assert!(d.is_valid(0, 0));
        assert!(!d.is_valid(1, 0));
    }

    #[test]
    fn binocular_round_trip() {
        let r = rig();
        let zs: Vec<f64> = (0..50).map(|i| 0.3 + i as f64 * 0.2).collect();
        let z = DepthMap::from_values(zs.len(), 1, zs.clone()).unwrap();
        let back = binocular_disparity_to_depth(&depth_to_binocular_disparity(&z, &r), &r);
        for (i, want) in zs.iter().enumerate() {
            let got = back.get(i, 0).unwrap();
            assert!(((got - want) / want).abs() < 1e-9);
        }
    }

    #[test]
    fn msl_depth_is_increasing_in_disparity() {
        let r = rig();
        let singular = r.msl_bf() / r.z_ref;
        let mut prev = 0.0;
        let mut d = -200.0;
        while d < singular - 1e-3 {
            let z = r.msl_depth_of(d).unwrap();
            assert!(z > prev, "d={d} z={z} prev={prev}");
            prev = z;
            d += 0.25;
        }
    }

    #[test]
    fn reproject_identity_is_identity() {
        let cam = CameraIntrinsics::centered(50.0, 16, 12);
        let r = RigModel {
            ir_cam: cam,
            rgb_cam: cam,
            ir_to_rgb: RigidTransform::IDENTITY,
            ..rig()
        };
        let z = DepthMap::from_fn(16, 12, |x, y| ((x + y) % 5 != 0).then_some(1.0 + 0.1 * x as f64));
        let out = reproject_depth(&z, &r);
        for y in 0..12 {
            for x in 0..16 {
                if let Some(v) = z.get(x, y) {
                    assert!((out.get(x, y).unwrap() - v).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn reproject_keeps_nearest_on_collision() {
        // f = 10 px, 0.1 m translation: x=3 at 2.0 m lands on u=3.5 -> 4,
        // x=2 at 0.5 m lands on u=4.0.
        let cam = CameraIntrinsics::centered(10.0, 8, 1);
        let r = RigModel {
            ir_cam: cam,
            rgb_cam: cam,
            ir_to_rgb: RigidTransform::translation([0.1, 0.0, 0.0]),
            ..rig()
        };
        let mut z = DepthMap::invalid(8, 1);
        z.set(3, 0, 2.0);
        z.set(2, 0, 0.5);
        let out = reproject_depth(&z, &r);
        let land = |x: usize, d: f64| {
            let p = r.ir_to_rgb.apply(cam.backproject(x as f64, 0.0, d));
            cam.project(p).unwrap().0.round() as usize
        };
        assert_eq!(land(3, 2.0), land(2, 0.5));
        assert_eq!(out.get(land(2, 0.5), 0), Some(0.5));
        assert_eq!(out.valid_count(), 1);
    }

    #[test]
    fn reproject_fronto_parallel_plane_keeps_depth() {
        let r = RigModel {
            ir_to_rgb: RigidTransform::translation([0.063, 0.0, 0.0]),
            ..rig().scaled(0.25)
        };
        let (w, h) = (r.ir_cam.width, r.ir_cam.height);
        let z = DepthMap::from_values(w, h, vec![1.5; w * h]).unwrap();
        let out = reproject_depth(&z, &r);
        assert!(out.valid_count() > 0);
        for (_, _, v) in out.iter_valid() {
            assert!((v - 1.5).abs() < 1e-6);
        }
        // Analytic shift: every RGB column at or beyond round(f B / Z) is covered.
        let shift = (r.ir_cam.fx * 0.063 / 1.5).round() as usize;
        for y in 0..h {
            for x in shift + 1..w {
                assert!(out.is_valid(x, y), "hole at {x},{y}");
            }
        }
    }

    #[test]
    fn rigid_transform_inverse() {
        let t = RigidTransform::from_yaw(0.3, [0.1, -0.2, 0.05]);
        t.validate().unwrap();
        let p = [0.3, 0.7, 2.0];
        let q = t.inverse().apply(t.apply(p));
        for i in 0..3 {
            assert!((p[i] - q[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_rotation_rejected() {
        let mut t = RigidTransform::IDENTITY;
        t.rotation[0] = 2.0;
        assert!(t.validate().is_err());
        let mut r = rig();
        r.ir_to_rgb = t;
        assert!(r.validate().is_err());
        let mut r = rig();
        r.z_ref = 0.0;
        assert!(r.validate().is_err());
    }
}
