use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::noise::fractal_noise;
use crate::error::{Error, Result};
use crate::raster::ImageGray;

/// Texture coordinates of a hit.
type Uv = (f64, f64);

/// Surface reflectance, sampled at a hit point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Albedo {
    Uniform {
        value: f64,
    },
    /// Solid fractal noise: `mean + amplitude * (2 n - 1)` with feature size
    /// `scale` meters.
    Noise {
        mean: f64,
        amplitude: f64,
        scale: f64,
        seed: u64,
    },
    /// Grayscale image stretched over the surface parameterization; only quads
    /// have one, other primitives fall back to world `(x, y)` in meters.
    Image {
        path: PathBuf,
        #[serde(skip)]
        texture: Option<Arc<ImageGray>>,
    },
}

impl Albedo {
    fn sample(&self, world: [f64; 3], uv: Option<(f64, f64)>) -> f64 {
        let v = match self {
            Albedo::Uniform { value } => *value,
            Albedo::Noise {
                mean,
                amplitude,
                scale,
                seed,
            } => {
                let n = fractal_noise(*seed, world.map(|c| c / scale));
                mean + amplitude * (2.0 * n - 1.0)
            }
            Albedo::Image { texture, .. } => match texture {
                Some(tex) => {
                    let (u, v) = uv.unwrap_or((world[0].rem_euclid(1.0), world[1].rem_euclid(1.0)));
                    let x = (u * tex.width() as f64).floor() as isize;
                    let y = (v * tex.height() as f64).floor() as isize;
                    tex.get_clamped(x, y) as f64
                }
                None => 0.5,
            },
        };
        v.clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Primitive {
    /// Infinite plane `z = depth` in the world (RGB camera) frame.
    FrontoPlane { depth: f64, albedo: Albedo },
    /// Infinite plane through `point` with normal `normal`.
    SlantedPlane {
        point: [f64; 3],
        normal: [f64; 3],
        albedo: Albedo,
    },
    Sphere {
        center: [f64; 3],
        radius: f64,
        albedo: Albedo,
    },
    /// Parallelogram `center + s * half_u + t * half_v`, `s, t` in `[-1, 1]`.
    Quad {
        center: [f64; 3],
        half_u: [f64; 3],
        half_v: [f64; 3],
        albedo: Albedo,
    },
}

#[derive(Debug, Clone, Copy)]
pub struct Ray {
    pub origin: [f64; 3],
    pub dir: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    /// Ray parameter; equals the camera-frame depth when `dir.z == 1`.
    pub t: f64,
    pub point: [f64; 3],
    pub albedo: f64,
}

const MIN_Z: f64 = 0.1;
const T_EPS: f64 = 1e-9;

#[inline]
fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
fn at(r: &Ray, t: f64) -> [f64; 3] {
    [
        r.origin[0] + t * r.dir[0],
        r.origin[1] + t * r.dir[1],
        r.origin[2] + t * r.dir[2],
    ]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

impl Primitive {
    fn albedo(&self) -> &Albedo {
        match self {
            Primitive::FrontoPlane { albedo, .. }
            | Primitive::SlantedPlane { albedo, .. }
            | Primitive::Sphere { albedo, .. }
            | Primitive::Quad { albedo, .. } => albedo,
        }
    }

    fn albedo_mut(&mut self) -> &mut Albedo {
        match self {
            Primitive::FrontoPlane { albedo, .. }
            | Primitive::SlantedPlane { albedo, .. }
            | Primitive::Sphere { albedo, .. }
            | Primitive::Quad { albedo, .. } => albedo,
        }
    }

    /// Nearest intersection with `t > 0`, plus surface coordinates.
    fn intersect(&self, ray: &Ray) -> Option<(f64, Option<Uv>)> {
        match *self {
            Primitive::FrontoPlane { depth, .. } => {
                if ray.dir[2].abs() < 1e-15 {
                    return None;
                }
                let t = (depth - ray.origin[2]) / ray.dir[2];
                (t > T_EPS).then_some((t, None))
            }
            Primitive::SlantedPlane { point, normal, .. } => {
                let denom = dot(normal, ray.dir);
                if denom.abs() < 1e-15 {
                    return None;
                }
                let t = dot(normal, sub(point, ray.origin)) / denom;
                (t > T_EPS).then_some((t, None))
            }
            Primitive::Sphere { center, radius, .. } => {
                let oc = sub(ray.origin, center);
                let a = dot(ray.dir, ray.dir);
                let b = dot(oc, ray.dir);
                let c = dot(oc, oc) - radius * radius;
                let disc = b * b - a * c;
                if disc < 0.0 {
                    return None;
                }
                let sq = disc.sqrt();
                let t0 = (-b - sq) / a;
                let t1 = (-b + sq) / a;
                if t0 > T_EPS {
                    Some((t0, None))
                } else if t1 > T_EPS {
                    Some((t1, None))
                } else {
                    None
                }
            }
            Primitive::Quad {
                center,
                half_u,
                half_v,
                ..
            } => {
                let n = cross(half_u, half_v);
                let denom = dot(n, ray.dir);
                if denom.abs() < 1e-15 {
                    return None;
                }
                let t = dot(n, sub(center, ray.origin)) / denom;
                if t <= T_EPS {
                    return None;
                }
                let rel = sub(at(ray, t), center);
                let s = dot(rel, half_u) / dot(half_u, half_u);
                let q = dot(rel, half_v) / dot(half_v, half_v);
                ((-1.0..=1.0).contains(&s) && (-1.0..=1.0).contains(&q))
                    .then_some((t, Some(((s + 1.0) / 2.0, (q + 1.0) / 2.0))))
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParam(format!("{msg}: {self:?}")));
        match *self {
            Primitive::FrontoPlane { depth, .. } if depth <= MIN_Z => bad("plane too close"),
            Primitive::SlantedPlane { point, normal, .. }
                if point[2] <= MIN_Z || normal[2].abs() < 1e-6 =>
            {
                bad("slanted plane behind cameras or edge-on")
            }
            Primitive::Sphere { center, radius, .. }
                if radius <= 0.0 || center[2] - radius <= MIN_Z =>
            {
                bad("sphere too close")
            }
            Primitive::Quad {
                center,
                half_u,
                half_v,
                ..
            } => {
                let corners_ok = [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)]
                    .iter()
                    .all(|(s, t)| center[2] + s * half_u[2] + t * half_v[2] > MIN_Z);
                let n = cross(half_u, half_v);
                if !corners_ok || dot(n, n) < 1e-18 {
                    bad("quad too close or degenerate")
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// A static scene in the world (RGB camera) frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    #[serde(default)]
    pub name: String,
    pub primitives: Vec<Primitive>,
    /// Ambient illumination; rendered radiance is `ambient * albedo`.
    #[serde(default = "default_ambient")]
    pub ambient: f64,
}

fn default_ambient() -> f64 {
    0.5
}

impl Scene {
    pub fn new(name: impl Into<String>, primitives: Vec<Primitive>, ambient: f64) -> Self {
        Self {
            name: name.into(),
            primitives,
            ambient,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.primitives.is_empty() {
            return Err(Error::SceneEmpty);
        }
        self.primitives.iter().try_for_each(Primitive::validate)
    }

    /// Loads image-backed textures, resolving relative paths against `base`.
    pub fn load_textures(&mut self, base: &Path) -> Result<()> {
        for p in &mut self.primitives {
            if let Albedo::Image { path, texture } = p.albedo_mut() {
                let full = if path.is_absolute() {
                    path.clone()
                } else {
                    base.join(&*path)
                };
                *texture = Some(Arc::new(crate::io::read_png(&full)?));
            }
        }
        Ok(())
    }

    /// Nearest surface hit along `ray`.
    pub fn cast(&self, ray: &Ray) -> Option<Hit> {
        let mut best: Option<(f64, usize, Option<Uv>)> = None;
        for (i, p) in self.primitives.iter().enumerate() {
            if let Some((t, uv)) = p.intersect(ray) {
                if best.is_none_or(|(bt, _, _)| t < bt) {
                    best = Some((t, i, uv));
                }
            }
        }
        best.map(|(t, i, uv)| {
            let point = at(ray, t);
            Hit {
                t,
                point,
                albedo: self.primitives[i].albedo().sample(point, uv),
            }
        })
    }

    /// Whether `point` is the first surface seen from `origin`.
    pub fn visible_from(&self, origin: [f64; 3], point: [f64; 3]) -> bool {
        let dir = sub(point, origin);
        match self.cast(&Ray { origin, dir }) {
            // dir spans the full segment, so the target sits at t = 1.
            Some(hit) => hit.t >= 1.0 - 1e-7,
            None => true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ray(dir: [f64; 3]) -> Ray {
        Ray {
            origin: [0.0; 3],
            dir,
        }
    }

    #[test]
    fn nearest_hit_wins() {
        let scene = Scene::new(
            "t",
            vec![
                Primitive::FrontoPlane {
                    depth: 3.0,
                    albedo: Albedo::Uniform { value: 0.2 },
                },
                Primitive::Sphere {
                    center: [0.0, 0.0, 2.0],
                    radius: 0.5,
                    albedo: Albedo::Uniform { value: 0.9 },
                },
            ],
            0.5,
        );
        let hit = scene.cast(&ray([0.0, 0.0, 1.0])).unwrap();
        assert!((hit.t - 1.5).abs() < 1e-12);
        assert_eq!(hit.albedo, 0.9);
        let hit = scene.cast(&ray([1.0, 0.0, 1.0])).unwrap();
        assert!((hit.t - 3.0).abs() < 1e-12);
        assert!(!scene.visible_from([0.0; 3], [0.0, 0.0, 3.0]));
        assert!(scene.visible_from([0.0; 3], [0.0, 0.0, 1.5]));
    }

    #[test]
    fn quad_bounds_and_slanted_plane() {
        let q = Primitive::Quad {
            center: [0.0, 0.0, 1.0],
            half_u: [0.1, 0.0, 0.0],
            half_v: [0.0, 0.1, 0.0],
            albedo: Albedo::Uniform { value: 1.0 },
        };
        assert!(q.intersect(&ray([0.05, 0.05, 1.0])).is_some());
        assert!(q.intersect(&ray([0.2, 0.0, 1.0])).is_none());
        let p = Primitive::SlantedPlane {
            point: [0.0, 0.0, 2.0],
            normal: [0.0, 0.5, 1.0],
            albedo: Albedo::Uniform { value: 1.0 },
        };
        let (t, _) = p.intersect(&ray([0.0, 0.0, 1.0])).unwrap();
        assert!((t - 2.0).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        assert!(matches!(
            Scene::new("e", vec![], 0.5).validate(),
            Err(Error::SceneEmpty)
        ));
        let near = Scene::new(
            "n",
            vec![Primitive::FrontoPlane {
                depth: 0.05,
                albedo: Albedo::Uniform { value: 1.0 },
            }],
            0.5,
        );
        assert!(near.validate().is_err());
    }

    #[test]
    fn scene_json_round_trip() {
        let scene = Scene::new(
            "demo",
            vec![
                Primitive::FrontoPlane {
                    depth: 2.0,
                    albedo: Albedo::Noise {
                        mean: 0.5,
                        amplitude: 0.3,
                        scale: 0.05,
                        seed: 9,
                    },
                },
                Primitive::Sphere {
                    center: [0.1, 0.0, 1.2],
                    radius: 0.2,
                    albedo: Albedo::Uniform { value: 0.7 },
                },
            ],
            0.4,
        );
        let text = serde_json::to_string_pretty(&scene).unwrap();
        assert!(text.contains("\"kind\": \"fronto_plane\""));
        let back: Scene = serde_json::from_str(&text).unwrap();
        assert_eq!(back, scene);
    }
}
