//! Built-in synthetic scenes: a 15-scene evaluation suite and a 3-scene demo.
//!
//! Geometry lives between 0.6 m and 3 m in the RGB camera frame. Textured
//! surfaces use fractal noise at a few millimetres per feature; textureless
//! ones use a single uniform albedo.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::sim::{Albedo, Primitive, Scene};

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteScene {
    pub scene: Scene,
    /// Most of the image is uniform albedo.
    pub textureless: bool,
}

struct Builder {
    rng: ChaCha8Rng,
}

impl Builder {
    fn jitter(&mut self, v: f64, amount: f64) -> f64 {
        v + self.rng.random_range(-amount..=amount)
    }

    fn texture(&mut self, mean: f64) -> Albedo {
        Albedo::Noise {
            mean,
            amplitude: 0.45,
            scale: self.rng.random_range(0.012..0.02),
            seed: self.rng.random(),
        }
    }

    fn flat(&mut self, value: f64) -> Albedo {
        Albedo::Uniform {
            value: self.jitter(value, 0.05),
        }
    }

    fn wall(&mut self, depth: f64, albedo: Albedo) -> Primitive {
        Primitive::FrontoPlane {
            depth: self.jitter(depth, 0.1),
            albedo,
        }
    }

    fn tilted(&mut self, depth: f64, nx: f64, ny: f64, albedo: Albedo) -> Primitive {
        Primitive::SlantedPlane {
            point: [0.0, 0.0, self.jitter(depth, 0.1)],
            normal: [self.jitter(nx, 0.05), self.jitter(ny, 0.05), -1.0],
            albedo,
        }
    }

    fn sphere(&mut self, x: f64, y: f64, z: f64, r: f64, albedo: Albedo) -> Primitive {
        Primitive::Sphere {
            center: [self.jitter(x, 0.05), self.jitter(y, 0.05), self.jitter(z, 0.05)],
            radius: r,
            albedo,
        }
    }

    fn board(&mut self, x: f64, y: f64, z: f64, hw: f64, hh: f64, albedo: Albedo) -> Primitive {
        Primitive::Quad {
            center: [self.jitter(x, 0.05), self.jitter(y, 0.05), self.jitter(z, 0.05)],
            half_u: [hw, 0.0, 0.0],
            half_v: [0.0, hh, 0.0],
            albedo,
        }
    }
}

/// Fifteen scenes; the last five are textureless-dominant. `seed` perturbs
/// placements and textures.
pub fn synthetic_suite(seed: u64) -> Vec<SuiteScene> {
    let mut b = Builder {
        rng: ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_5C3E),
    };
    let mut out = Vec::with_capacity(15);
    let mut push = |name: &str, prims: Vec<Primitive>, textureless: bool| {
        out.push(SuiteScene {
            scene: Scene::new(name, prims, 0.5),
            textureless,
        })
    };

    let t = b.texture(0.5);
    push("textured-wall", vec![b.wall(1.3, t)], false);
    let t = b.texture(0.5);
    push("textured-slant", vec![b.tilted(1.4, 0.35, 0.0, t)], false);
    let (t0, t1) = (b.texture(0.45), b.texture(0.55));
    push("sphere-on-wall", vec![b.sphere(0.0, 0.0, 1.1, 0.3, t0), b.wall(2.0, t1)], false);
    let (t0, t1, t2) = (b.texture(0.5), b.texture(0.5), b.texture(0.5));
    push(
        "two-boards",
        vec![b.board(-0.3, 0.0, 0.9, 0.25, 0.3, t0), b.board(0.35, 0.1, 1.4, 0.3, 0.3, t1), b.wall(2.2, t2)],
        false,
    );
    let (t0, t1) = (b.texture(0.5), b.texture(0.4));
    push("floor-and-ball", vec![b.tilted(1.6, 0.0, -0.45, t0), b.sphere(0.2, 0.1, 1.2, 0.22, t1)], false);
    let (t0, t1, t2, t3) = (b.texture(0.5), b.texture(0.6), b.texture(0.5), b.texture(0.5));
    push(
        "three-spheres",
        vec![
            b.sphere(-0.45, 0.0, 1.3, 0.2, t0),
            b.sphere(0.1, -0.2, 1.0, 0.18, t1),
            b.sphere(0.5, 0.25, 1.6, 0.25, t2),
            b.wall(2.4, t3),
        ],
        false,
    );
    let (t0, t1) = (b.texture(0.5), b.texture(0.5));
    push("near-board", vec![b.board(0.0, 0.0, 0.7, 0.2, 0.2, t0), b.wall(1.5, t1)], false);
    let (t0, t1) = (b.texture(0.5), b.texture(0.5));
    push("corner", vec![b.tilted(1.5, 0.6, 0.0, t0), b.tilted(1.5, -0.6, 0.0, t1)], false);
    let t0 = b.texture(0.5);
    let f = b.flat(0.6);
    push("mixed-board", vec![b.board(0.1, 0.0, 1.0, 0.3, 0.25, f), b.wall(1.8, t0)], false);
    let t0 = b.texture(0.5);
    let f = b.flat(0.55);
    push("mixed-ball", vec![b.sphere(0.0, 0.0, 1.2, 0.3, t0), b.wall(2.0, f)], false);

    let f = b.flat(0.6);
    push("plain-wall", vec![b.wall(1.5, f)], true);
    let f = b.flat(0.55);
    push("plain-slant", vec![b.tilted(1.3, -0.3, 0.1, f)], true);
    let (f0, f1) = (b.flat(0.7), b.flat(0.5));
    push("plain-ball", vec![b.sphere(0.0, 0.0, 1.0, 0.28, f0), b.wall(1.8, f1)], true);
    let (f0, f1, f2) = (b.flat(0.65), b.flat(0.45), b.flat(0.55));
    push(
        "plain-boards",
        vec![b.board(-0.3, 0.0, 1.0, 0.25, 0.35, f0), b.board(0.3, 0.0, 1.4, 0.25, 0.35, f1), b.wall(2.1, f2)],
        true,
    );
    let (f0, f1) = (b.flat(0.5), b.flat(0.6));
    push("plain-floor", vec![b.tilted(1.7, 0.0, -0.4, f0), b.sphere(-0.2, 0.0, 1.3, 0.2, f1)], true);
    out
}

/// A small demo set: textured wall, sphere in front of a plain wall, and
/// a textureless slant.
pub fn demo_scenes() -> Vec<Scene> {
    let suite = synthetic_suite(1);
    ["textured-wall", "mixed-ball", "plain-slant"]
        .iter()
        .map(|n| suite.iter().find(|s| s.scene.name == *n).expect("named scene").scene.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_shape() {
        let s = synthetic_suite(3);
        assert_eq!(s.len(), 15);
        assert!(s.iter().filter(|s| s.textureless).count() >= 5);
        for item in &s {
            item.scene.validate().unwrap();
        }
        assert_eq!(s, synthetic_suite(3));
        assert_ne!(s, synthetic_suite(4));
        assert_eq!(demo_scenes().len(), 3);
    }
}
