//! Monocular structured light: match the live IR speckle image against the
//! stored reference image and convert the shift to depth.

mod binary;
pub mod hamming;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use binary::{binarize, BinaryImage};
pub use hamming::{hamming_band, select_min, window_count, CostBand, Selection, ShiftRange, Uniqueness};

use crate::error::{ensure_same_size, Error, Result};
use crate::geometry::{msl_disparity_to_depth, RigModel};
use crate::raster::{DepthMap, DisparityMap, ImageGray};

/// Output rows processed per work item.
const BAND_ROWS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MslMatchParams {
    /// Odd matching window side length.
    pub window: usize,
    pub search_min: i32,
    pub search_max: i32,
    /// Fraction of the window that must overlap both images.
    pub min_valid_ratio: f64,
    /// Best cost must be below this fraction of the runner-up.
    pub uniqueness_ratio: f64,
    /// Significance level of the best-vs-runner-up test; 0 disables it.
    pub significance: f64,
    /// Local-mean radius used to binarize both images.
    pub binarize_radius: usize,
}

impl Default for MslMatchParams {
    fn default() -> Self {
        Self {
            window: 21,
            search_min: -64,
            search_max: 128,
            min_valid_ratio: 0.8,
            uniqueness_ratio: 0.9,
            significance: 0.0,
            binarize_radius: 5,
        }
    }
}

impl MslMatchParams {
    pub fn validate(&self) -> Result<()> {
        if self.window < 5 || self.window.is_multiple_of(2) {
            return Err(Error::InvalidParam(format!(
                "MSL window must be odd and >= 5, got {}",
                self.window
            )));
        }
        if self.search_min >= self.search_max {
            return Err(Error::InvalidParam(format!(
                "empty MSL search range {}..{}",
                self.search_min, self.search_max
            )));
        }
        if !(0.0..=1.0).contains(&self.min_valid_ratio) || !(self.uniqueness_ratio > 0.0) || !(self.significance >= 0.0) {
            return Err(Error::InvalidParam("MSL ratios out of range".into()));
        }
        if self.binarize_radius == 0 {
            return Err(Error::InvalidParam("binarize radius must be >= 1".into()));
        }
        Ok(())
    }

    pub fn radius(&self) -> usize {
        self.window / 2
    }

    pub fn uniqueness(&self) -> Uniqueness {
        Uniqueness {
            ratio: self.uniqueness_ratio,
            z: self.significance,
        }
    }

    pub fn shifts(&self) -> ShiftRange {
        ShiftRange::new(self.search_min, self.search_max)
    }

    /// Smallest window coverage a candidate shift needs.
    pub fn min_count(&self) -> u32 {
        ((self.window * self.window) as f64 * self.min_valid_ratio).ceil() as u32
    }
}

/// Block matching of binary images with windowed Hamming cost, parabola
/// sub-pixel refinement, and uniqueness / window-coverage rejection.
pub fn block_match(
    live: &BinaryImage,
    reference: &BinaryImage,
    params: &MslMatchParams,
) -> Result<DisparityMap> {
    params.validate()?;
    ensure_same_size("reference image", live.dims(), reference.dims())?;
    let (w, h) = live.dims();
    let shifts = params.shifts();
    let radius = params.radius();
    let min_count = params.min_count();
    let rows: Vec<Vec<Option<f64>>> = hamming::bands(h, BAND_ROWS)
        .into_par_iter()
        .flat_map_iter(|rows| {
            let band = hamming_band(live, reference, shifts, radius, rows.clone());
            rows.map(move |y| {
                (0..w)
                    .map(|x| {
                        band.select(x, y, min_count, params.uniqueness())
                            .map(|s| s.shift)
                    })
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
        })
        .collect();
    let mut out = DisparityMap::invalid(w, h);
    for (y, row) in rows.into_iter().enumerate() {
        for (x, d) in row.into_iter().enumerate() {
            if let Some(d) = d {
                out.set(x, y, d);
            }
        }
    }
    Ok(out)
}

/// Binarizes both images and block-matches them.
pub fn msl_disparity(live_ir: &ImageGray, reference: &ImageGray, params: &MslMatchParams) -> Result<DisparityMap> {
    params.validate()?;
    ensure_same_size("reference image", live_ir.dims(), reference.dims())?;
    let live = binarize(live_ir, params.binarize_radius);
    let reference = binarize(reference, params.binarize_radius);
    block_match(&live, &reference, params)
}

/// MSL depth in the IR camera frame.
pub fn msl_depth(
    live_ir: &ImageGray,
    reference: &ImageGray,
    rig: &RigModel,
    params: &MslMatchParams,
) -> Result<DepthMap> {
    let d = msl_disparity(live_ir, reference, params)?;
    Ok(msl_disparity_to_depth(&d, rig))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_bits(w: usize, h: usize, density: f64, seed: u64) -> BinaryImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        BinaryImage::from_fn(w, h, |_, _| rng.random_bool(density))
    }

    fn shifted(img: &BinaryImage, k: i64) -> BinaryImage {
        // out(x) = img(x - k)
        BinaryImage::from_fn(img.width(), img.height(), |x, y| {
            let sx = x as i64 - k;
            sx >= 0 && (sx as usize) < img.width() && img.get(sx as usize, y)
        })
    }

    fn small_params() -> MslMatchParams {
        MslMatchParams {
            window: 9,
            search_min: -12,
            search_max: 12,
            ..Default::default()
        }
    }

    #[test]
    fn self_match_is_zero() {
        let img = random_bits(80, 40, 0.2, 1);
        let d = block_match(&img, &img, &small_params()).unwrap();
        for y in 4..36 {
            for x in 4..76 {
                assert_eq!(d.get(x, y), Some(0.0), "({x}, {y})");
            }
        }
        assert!(d.iter_valid().all(|(_, _, v)| v == 0.0));
    }

    #[test]
    fn reference_shifted_right_gives_negative_disparity() {
        let live = random_bits(96, 40, 0.2, 2);
        let reference = shifted(&live, 7);
        let d = block_match(&live, &reference, &small_params()).unwrap();
        let mut n = 0;
        for (x, _, v) in d.iter_valid() {
            if (8..80).contains(&x) {
                assert_eq!(v, -7.0, "x={x}");
                n += 1;
            }
        }
        assert!(n > 1000);
    }

    #[test]
    fn featureless_is_invalid() {
        let zero = BinaryImage::new(64, 32);
        let d = block_match(&zero, &zero, &small_params()).unwrap();
        assert_eq!(d.valid_count(), 0);
    }

    #[test]
    fn size_mismatch_and_bad_params() {
        let a = BinaryImage::new(10, 10);
        let b = BinaryImage::new(11, 10);
        assert!(matches!(
            block_match(&a, &b, &small_params()),
            Err(Error::SizeMismatch { .. })
        ));
        let p = MslMatchParams {
            window: 8,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = MslMatchParams {
            search_min: 5,
            search_max: 5,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn translation_covariance() {
        let reference = random_bits(120, 40, 0.2, 3);
        let live = shifted(&reference, 2);
        let live_k = shifted(&reference, 5);
        let p = small_params();
        let d0 = block_match(&live, &reference, &p).unwrap();
        let d1 = block_match(&live_k, &reference, &p).unwrap();
        for y in 8..32 {
            for x in 20..100 {
                if let (Some(a), Some(b)) = (d0.get(x, y), d1.get(x, y)) {
                    assert_eq!(b.floor() - a.floor(), 3.0);
                }
            }
        }
    }

    #[test]
    fn subpixel_stays_within_half_pixel() {
        let live = random_bits(64, 32, 0.3, 4);
        let reference = random_bits(64, 32, 0.3, 5);
        let band = hamming_band(&live, &reference, ShiftRange::new(-8, 8), 4, 0..32);
        for y in 0..32 {
            for x in 0..64 {
                if let Some(s) = band.select(x, y, 1, Uniqueness::ratio(2.0)) {
                    let int = band.shifts.shift(s.best_index) as f64;
                    assert!((s.shift - int).abs() <= 0.5);
                }
            }
        }
    }
}
