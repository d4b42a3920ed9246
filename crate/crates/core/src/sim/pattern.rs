use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geometry::CameraIntrinsics;

/// A pseudo-random dot pattern emitted by a diffractive projector.
///
/// Directions are unit vectors in the projector frame (axes parallel to the IR
/// camera, +z forward).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecklePattern {
    pub dots: Vec<Dot>,
    pub seed: u64,
    /// Half field of view as tangents `(tan_x, tan_y)`.
    pub half_fov_tan: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dot {
    pub direction: [f64; 3],
    /// Relative intensity in `(0, 1]`.
    pub intensity: f64,
}

impl SpecklePattern {
    /// The dot count of the prototype projector.
    pub const PROJECTOR_DOTS: usize = 11_000;
    /// Dot count used when augmenting stereo datasets.
    pub const AUGMENT_DOTS: usize = 30_000;

    /// `count` dots uniform in the tangent plane of the given field of view,
    /// intensities uniform in `[0.5, 1]`.
    pub fn generate(count: usize, seed: u64, half_fov_tan: (f64, f64)) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dots = (0..count)
            .map(|_| {
                let u = rng.random_range(-half_fov_tan.0..=half_fov_tan.0);
                let v = rng.random_range(-half_fov_tan.1..=half_fov_tan.1);
                Dot {
                    direction: normalize([u, v, 1.0]),
                    intensity: rng.random_range(0.5..=1.0),
                }
            })
            .collect();
        Self {
            dots,
            seed,
            half_fov_tan,
        }
    }

    /// Pattern whose field of view covers `cam` with a 15% margin, so that the
    /// projector offset does not leave the image border unlit.
    pub fn for_camera(count: usize, seed: u64, cam: &CameraIntrinsics) -> Self {
        let tx = cam.cx.max(cam.width as f64 - 1.0 - cam.cx) / cam.fx;
        let ty = cam.cy.max(cam.height as f64 - 1.0 - cam.cy) / cam.fy;
        Self::generate(count, seed, (tx * 1.15, ty * 1.15))
    }

    pub fn empty(seed: u64) -> Self {
        Self {
            dots: Vec::new(),
            seed,
            half_fov_tan: (0.0, 0.0),
        }
    }

    pub fn count(&self) -> usize {
        self.dots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dots.is_empty()
    }

    /// Copy with every direction perturbed by Gaussian noise of `sigma_tan`
    /// in the tangent plane, seeded by `(self.seed, frame)`. Models a moving
    /// speckle field that differs from frame to frame.
    pub fn jittered(&self, frame: u64, sigma_tan: f64) -> Self {
        let seed = self
            .seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(frame.wrapping_mul(0xD1B5_4A32_D192_ED03))
            ^ 0xA5A5_5A5A;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, sigma_tan.max(0.0)).expect("finite sigma");
        let dots = self
            .dots
            .iter()
            .map(|d| {
                let u = d.direction[0] / d.direction[2] + normal.sample(&mut rng);
                let v = d.direction[1] / d.direction[2] + normal.sample(&mut rng);
                Dot {
                    direction: normalize([u, v, 1.0]),
                    intensity: d.intensity,
                }
            })
            .collect();
        Self {
            dots,
            seed,
            half_fov_tan: self.half_fov_tan,
        }
    }
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    v.map(|c| c / n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_seeded() {
        let a = SpecklePattern::generate(100, 3, (0.5, 0.4));
        let b = SpecklePattern::generate(100, 3, (0.5, 0.4));
        let c = SpecklePattern::generate(100, 4, (0.5, 0.4));
        assert_eq!(a, b);
        assert_ne!(a, c);
        for d in &a.dots {
            let n: f64 = d.direction.iter().map(|c| c * c).sum();
            assert!((n - 1.0).abs() < 1e-12);
            assert!((d.direction[0] / d.direction[2]).abs() <= 0.5 + 1e-12);
            assert!(d.intensity > 0.0 && d.intensity <= 1.0);
        }
    }

    #[test]
    fn jitter_changes_per_frame() {
        let p = SpecklePattern::generate(50, 1, (0.5, 0.5));
        let f0 = p.jittered(0, 0.01);
        let f1 = p.jittered(1, 0.01);
        assert_ne!(f0, f1);
        assert_eq!(f0, p.jittered(0, 0.01));
        assert_eq!(p.jittered(5, 0.0).dots.len(), 50);
    }
}
