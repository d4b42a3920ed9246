use serde::{Deserialize, Serialize};

use crate::raster::ImageGray;

const CENSUS_RADIUS: isize = 3;
const CENSUS_BITS: usize = 48;
const PATCH_RADIUS: isize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    /// 7x7 census transform, bits encoded as +1 / -1.
    #[default]
    Census,
    /// Mean-subtracted 9x9 intensity patch.
    NormalizedPatch,
}

impl FeatureKind {
    pub fn dim(self) -> usize {
        match self {
            FeatureKind::Census => CENSUS_BITS,
            FeatureKind::NormalizedPatch => ((2 * PATCH_RADIUS + 1) * (2 * PATCH_RADIUS + 1)) as usize,
        }
    }
}

/// Dense per-pixel feature vectors.
///
/// Census features also keep their packed bit form so correlations can be
/// computed with popcount; the values are identical to the `+1/-1` vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    width: usize,
    height: usize,
    kind: FeatureKind,
    data: Vec<f32>,
    packed: Option<Vec<u64>>,
}

impl FeatureMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    #[inline]
    pub fn feature(&self, x: usize, y: usize) -> &[f32] {
        let f = self.dim();
        let i = (y * self.width + x) * f;
        &self.data[i..i + f]
    }

    #[inline]
    pub(crate) fn census_bits(&self, x: usize, y: usize) -> Option<u64> {
        self.packed.as_ref().map(|p| p[y * self.width + x])
    }

    /// Euclidean norm of every feature vector.
    pub fn norms(&self) -> Vec<f64> {
        self.data
            .chunks_exact(self.dim())
            .map(|v| v.iter().map(|&a| (a as f64) * (a as f64)).sum::<f64>().sqrt())
            .collect()
    }
}

fn census(img: &ImageGray) -> FeatureMap {
    let (w, h) = img.dims();
    let mut packed = Vec::with_capacity(w * h);
    let mut data = Vec::with_capacity(w * h * CENSUS_BITS);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let c = img.get(x as usize, y as usize);
            let mut bits = 0u64;
            let mut k = 0;
            for dy in -CENSUS_RADIUS..=CENSUS_RADIUS {
                for dx in -CENSUS_RADIUS..=CENSUS_RADIUS {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let set = img.get_clamped(x + dx, y + dy) > c;
                    if set {
                        bits |= 1 << k;
                    }
                    data.push(if set { 1.0 } else { -1.0 });
                    k += 1;
                }
            }
            packed.push(bits);
        }
    }
    FeatureMap {
        width: w,
        height: h,
        kind: FeatureKind::Census,
        data,
        packed: Some(packed),
    }
}

fn normalized_patch(img: &ImageGray) -> FeatureMap {
    let (w, h) = img.dims();
    let dim = FeatureKind::NormalizedPatch.dim();
    let mut data = Vec::with_capacity(w * h * dim);
    let mut patch = Vec::with_capacity(dim);
    for y in 0..h as isize {
        for x in 0..w as isize {
            patch.clear();
            for dy in -PATCH_RADIUS..=PATCH_RADIUS {
                for dx in -PATCH_RADIUS..=PATCH_RADIUS {
                    patch.push(img.get_clamped(x + dx, y + dy) as f64);
                }
            }
            let mean = patch.iter().sum::<f64>() / dim as f64;
            data.extend(patch.iter().map(|v| (v - mean) as f32));
        }
    }
    FeatureMap {
        width: w,
        height: h,
        kind: FeatureKind::NormalizedPatch,
        data,
        packed: None,
    }
}

/// Per-pixel descriptors for the correlation volume.
pub fn extract_features(img: &ImageGray, kind: FeatureKind) -> FeatureMap {
    match kind {
        FeatureKind::Census => census(img),
        FeatureKind::NormalizedPatch => normalized_patch(img),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_patch_features_are_zero() {
        let f = extract_features(&ImageGray::filled(12, 9, 0.4), FeatureKind::NormalizedPatch);
        assert_eq!(f.dim(), 81);
        assert!(f.norms().iter().all(|&n| n < 1e-6));
    }

    #[test]
    fn census_is_affine_invariant() {
        let img = ImageGray::from_fn(20, 15, |x, y| ((x * 31 + y * 17) % 23) as f32 / 32.0);
        let a = extract_features(&img, FeatureKind::Census);
        let b = extract_features(&img.map(|v| 0.5 * v + 0.25), FeatureKind::Census);
        assert_eq!(a, b);
        // Monotone non-linear remap too.
        let c = extract_features(&img.map(|v| v * v * v + 0.1), FeatureKind::Census);
        assert_eq!(a.data, c.data);
    }

    #[test]
    fn step_edge_features_differ_across_edge() {
        let img = ImageGray::from_fn(20, 10, |x, _| if x < 10 { 0.2 } else { 0.8 });
        for kind in [FeatureKind::Census, FeatureKind::NormalizedPatch] {
            let f = extract_features(&img, kind);
            assert_ne!(f.feature(8, 5), f.feature(11, 5), "{kind:?}");
        }
    }

    #[test]
    fn packed_census_matches_vector() {
        let img = ImageGray::from_fn(9, 9, |x, y| ((x * 5 + y * 3) % 7) as f32);
        let f = extract_features(&img, FeatureKind::Census);
        for y in 0..9 {
            for x in 0..9 {
                let bits = f.census_bits(x, y).unwrap();
                for (k, &v) in f.feature(x, y).iter().enumerate() {
                    assert_eq!(v > 0.0, (bits >> k) & 1 == 1);
                }
            }
        }
    }
}
