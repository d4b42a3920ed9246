//! Space-time stereo: Hamming costs summed over many frames of a static
//! scene lit by a changing speckle field.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_same_size, Error, Result};
use crate::msl::{binarize, hamming_band, BinaryImage, CostBand, ShiftRange, Uniqueness};
use crate::raster::{DisparityMap, ImageGray};
use crate::sim::{Renderer, Scene, SpecklePattern, View};
use crate::stereo::left_right_check;

const BAND_ROWS: usize = 32;

/// Rectified `(left, right)` pairs of one static scene.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    frames: Vec<(ImageGray, ImageGray)>,
}

impl FrameSequence {
    pub fn new(frames: Vec<(ImageGray, ImageGray)>) -> Result<Self> {
        let (first, _) = frames.first().ok_or(Error::EmptySequence)?;
        let dims = first.dims();
        for (l, r) in &frames {
            ensure_same_size("left frame", dims, l.dims())?;
            ensure_same_size("right frame", dims, r.dims())?;
        }
        Ok(Self { frames })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.frames[0].0.dims()
    }

    pub fn frames(&self) -> &[(ImageGray, ImageGray)] {
        &self.frames
    }

    /// The first `n` frames.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        Self::new(self.frames[..n.min(self.len())].to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpacetimeParams {
    /// Frames rendered for a ground-truth sequence.
    pub frames: usize,
    /// Disparities searched are `0..d_max`.
    pub d_max: usize,
    /// Odd spatial window side.
    pub window: usize,
    pub binarize_radius: usize,
    pub min_valid_ratio: f64,
    pub uniqueness_ratio: f64,
    /// Significance level of the best-vs-runner-up test on summed mismatch
    /// counts; 0 disables it.
    pub significance: f64,
    /// Left-right tolerance in pixels; `None` disables the check.
    pub lrc: Option<f64>,
    /// Per-frame perturbation of dot directions (tangent units).
    pub jitter: f64,
}

impl Default for SpacetimeParams {
    fn default() -> Self {
        Self {
            frames: 200,
            d_max: 192,
            window: 7,
            binarize_radius: 5,
            min_valid_ratio: 0.8,
            uniqueness_ratio: 1.0,
            significance: 3.0,
            lrc: Some(1.0),
            jitter: 0.05,
        }
    }
}

impl SpacetimeParams {
    pub fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window.is_multiple_of(2) {
            return Err(Error::InvalidParam(format!("window must be odd and >= 3, got {}", self.window)));
        }
        if self.d_max < 2 || self.frames == 0 || self.binarize_radius == 0 {
            return Err(Error::InvalidParam("d_max >= 2, frames >= 1 and binarize radius >= 1 required".into()));
        }
        if !(0.0..=1.0).contains(&self.min_valid_ratio) || !(self.uniqueness_ratio > 0.0) || !(self.significance >= 0.0) {
            return Err(Error::InvalidParam("space-time ratios out of range".into()));
        }
        Ok(())
    }

    pub fn shifts(&self) -> ShiftRange {
        ShiftRange::new(0, self.d_max as i32 - 1)
    }

    pub fn uniqueness(&self) -> Uniqueness {
        Uniqueness {
            ratio: self.uniqueness_ratio,
            z: self.significance,
        }
    }

    fn min_count(&self) -> u32 {
        ((self.window * self.window) as f64 * self.min_valid_ratio).ceil() as u32
    }
}

/// Summed Hamming costs of all binary frame pairs for output rows `rows`.
pub fn spacetime_band(
    frames: &[(BinaryImage, BinaryImage)],
    shifts: ShiftRange,
    radius: usize,
    rows: Range<usize>,
) -> CostBand {
    let (l0, _) = &frames[0];
    let mut total = CostBand::zeros(rows.clone(), l0.width(), l0.height(), radius, shifts);
    for (l, r) in frames {
        total.accumulate(&hamming_band(l, r, shifts, radius, rows.clone()));
    }
    total
}

pub fn binarize_sequence(seq: &FrameSequence, radius: usize) -> Vec<(BinaryImage, BinaryImage)> {
    seq.frames
        .par_iter()
        .map(|(l, r)| (binarize(l, radius), binarize(r, radius)))
        .collect()
}

/// Left- and right-view disparities of the summed costs, before any
/// left-right check. The right view is read from the same costs.
pub fn spacetime_views(seq: &FrameSequence, params: &SpacetimeParams) -> Result<(DisparityMap, DisparityMap)> {
    params.validate()?;
    binary_views(&binarize_sequence(seq, params.binarize_radius), params)
}

/// [`spacetime_views`] on already binarized frames.
pub fn binary_views(
    binary: &[(BinaryImage, BinaryImage)],
    params: &SpacetimeParams,
) -> Result<(DisparityMap, DisparityMap)> {
    params.validate()?;
    let (l0, _) = binary.first().ok_or(Error::EmptySequence)?;
    let (w, h) = (l0.width(), l0.height());
    for (l, r) in binary {
        ensure_same_size("binary frame", (w, h), (l.width(), l.height()))?;
        ensure_same_size("binary frame", (w, h), (r.width(), r.height()))?;
    }
    let shifts = params.shifts();
    let radius = params.window / 2;
    let min_count = params.min_count();
    let u = params.uniqueness();
    type Rows = Vec<(Vec<Option<f64>>, Vec<Option<f64>>)>;
    let rows: Rows = crate::msl::hamming::bands(h, BAND_ROWS)
        .into_par_iter()
        .flat_map_iter(|rows| {
            let band = spacetime_band(binary, shifts, radius, rows.clone());
            rows.map(|y| {
                let left = (0..w).map(|x| band.select(x, y, min_count, u).map(|s| s.shift)).collect();
                let right = (0..w)
                    .map(|x| band.select_right(x, y, min_count, u).map(|s| s.shift))
                    .collect();
                (left, right)
            })
            .collect::<Vec<_>>()
        })
        .collect();
    let mut left = DisparityMap::invalid(w, h);
    let mut right = DisparityMap::invalid(w, h);
    for (y, (l, r)) in rows.into_iter().enumerate() {
        for x in 0..w {
            if let Some(d) = l[x] {
                left.set(x, y, d);
            }
            if let Some(d) = r[x] {
                right.set(x, y, d);
            }
        }
    }
    Ok((left, right))
}

fn checked(views: (DisparityMap, DisparityMap), lrc: Option<f64>) -> DisparityMap {
    match lrc {
        Some(tol) => left_right_check(&views.0, &views.1, tol),
        None => views.0,
    }
}

/// Left-view disparity from the whole sequence, refined and, when enabled,
/// left-right checked.
pub fn spacetime_match(seq: &FrameSequence, params: &SpacetimeParams) -> Result<DisparityMap> {
    Ok(checked(spacetime_views(seq, params)?, params.lrc))
}

/// Renders `params.frames` ground-truth frames and matches them, keeping
/// only the binarized frames in memory.
pub fn spacetime_ground_truth(
    renderer: &Renderer,
    scene: &Scene,
    pattern: &SpecklePattern,
    params: &SpacetimeParams,
) -> Result<DisparityMap> {
    params.validate()?;
    scene.validate()?;
    let (left_amb, _) = renderer.ambient_view(scene, View::Rgb, scene.ambient);
    let (right_amb, _) = renderer.ambient_view(scene, View::Ir, scene.ambient);
    let binary: Vec<_> = (0..params.frames as u64)
        .into_par_iter()
        .map(|k| {
            let (l, r) = gt_frame(renderer, scene, pattern, &left_amb, &right_amb, k, params.jitter);
            (binarize(&l, params.binarize_radius), binarize(&r, params.binarize_radius))
        })
        .collect();
    Ok(checked(binary_views(&binary, params)?, params.lrc))
}

fn gt_frame(
    renderer: &Renderer,
    scene: &Scene,
    pattern: &SpecklePattern,
    left_amb: &ImageGray,
    right_amb: &ImageGray,
    k: u64,
    jitter: f64,
) -> (ImageGray, ImageGray) {
    let p = pattern.jittered(k, jitter);
    let seed = p.seed ^ k.rotate_left(17);
    let l = renderer.speckle_layer(scene, &p, View::Rgb);
    let r = renderer.speckle_layer(scene, &p, View::Ir);
    (
        renderer.compose(left_amb, Some(&l), seed ^ 0x11),
        renderer.compose(right_amb, Some(&r), seed ^ 0x22),
    )
}

/// `n` frames in which both cameras see the speckle field, re-jittered per
/// frame, over the scene's ambient shading.
pub fn render_gt_sequence(
    renderer: &Renderer,
    scene: &Scene,
    pattern: &SpecklePattern,
    n: usize,
    jitter: f64,
) -> Result<FrameSequence> {
    scene.validate()?;
    if n == 0 {
        return Err(Error::EmptySequence);
    }
    let (left_amb, _) = renderer.ambient_view(scene, View::Rgb, scene.ambient);
    let (right_amb, _) = renderer.ambient_view(scene, View::Ir, scene.ambient);
    let frames = (0..n as u64)
        .into_par_iter()
        .map(|k| gt_frame(renderer, scene, pattern, &left_amb, &right_amb, k, jitter))
        .collect();
    FrameSequence::new(frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::msl::{block_match, MslMatchParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pair(w: usize, h: usize, shift: usize, seed: u64) -> (ImageGray, ImageGray) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let right = ImageGray::from_fn(w, h, |_, _| if rng.random_bool(0.15) { 1.0 } else { 0.1 });
        let left = ImageGray::from_fn(w, h, |x, y| right.get(x.saturating_sub(shift), y));
        (left, right)
    }

    fn params() -> SpacetimeParams {
        SpacetimeParams {
            d_max: 12,
            lrc: None,
            ..Default::default()
        }
    }

    #[test]
    fn empty_and_mismatched_sequences() {
        assert!(matches!(FrameSequence::new(vec![]), Err(Error::EmptySequence)));
        let a = ImageGray::new(8, 8);
        let b = ImageGray::new(9, 8);
        assert!(matches!(
            FrameSequence::new(vec![(a.clone(), a.clone()), (a, b)]),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn single_frame_equals_block_matching() {
        let (l, r) = random_pair(60, 40, 4, 1);
        let seq = FrameSequence::new(vec![(l.clone(), r.clone())]).unwrap();
        let p = params();
        let st = spacetime_match(&seq, &p).unwrap();
        let bm = block_match(
            &binarize(&l, p.binarize_radius),
            &binarize(&r, p.binarize_radius),
            &MslMatchParams {
                window: 7,
                search_min: 0,
                search_max: 11,
                min_valid_ratio: p.min_valid_ratio,
                uniqueness_ratio: p.uniqueness_ratio,
                significance: p.significance,
                binarize_radius: p.binarize_radius,
            },
        )
        .unwrap();
        assert_eq!(st, bm);
    }

    #[test]
    fn costs_add_over_frames() {
        let pairs: Vec<_> = (0..3).map(|k| random_pair(70, 20, 3, 10 + k)).collect();
        let seq = FrameSequence::new(pairs).unwrap();
        let bin = binarize_sequence(&seq, 5);
        let shifts = ShiftRange::new(0, 9);
        let total = spacetime_band(&bin, shifts, 3, 0..20);
        let mut sum = CostBand::zeros(0..20, 70, 20, 3, shifts);
        for f in &bin {
            sum.accumulate(&spacetime_band(std::slice::from_ref(f), shifts, 3, 0..20));
        }
        assert_eq!(total, sum);
    }

    #[test]
    fn sequence_recovers_shift_and_passes_own_lrc() {
        let pairs: Vec<_> = (0..4).map(|k| random_pair(80, 30, 5, 20 + k)).collect();
        let seq = FrameSequence::new(pairs).unwrap();
        let p = SpacetimeParams {
            lrc: Some(1.0),
            ..params()
        };
        let d = spacetime_match(&seq, &p).unwrap();
        let mut n = 0;
        for (x, _, v) in d.iter_valid() {
            if x >= 12 {
                assert_eq!(v, 5.0);
                n += 1;
            }
        }
        assert!(n > 1500, "{n}");
        let (_, right) = spacetime_views(&seq, &p).unwrap();
        assert_eq!(left_right_check(&d, &right, 1.0), d);
    }

    #[test]
    fn streamed_ground_truth_matches_stored_sequence() {
        use crate::geometry::RigModel;
        use crate::sim::{Albedo, Primitive, SpeckleOptics};
        let rig = RigModel::default().scaled(0.125);
        let renderer = Renderer::new(rig, SpeckleOptics::default());
        let pattern = SpecklePattern::for_camera(3000, 2, &rig.ir_cam);
        let scene = Scene::new(
            "wall",
            vec![Primitive::FrontoPlane {
                depth: 1.0,
                albedo: Albedo::Uniform { value: 0.6 },
            }],
            0.5,
        );
        let p = SpacetimeParams {
            frames: 4,
            d_max: 16,
            ..Default::default()
        };
        let seq = render_gt_sequence(&renderer, &scene, &pattern, 4, p.jitter).unwrap();
        assert_eq!(
            spacetime_ground_truth(&renderer, &scene, &pattern, &p).unwrap(),
            spacetime_match(&seq, &p).unwrap()
        );
    }
}
