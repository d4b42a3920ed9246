use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::volume::CostVolume;
use crate::error::{ensure_same_size, Error, Result};
use crate::raster::DisparityMap;

/// Gaussian modulation constants and hint sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GuidanceParams {
    /// Peak magnitude of the modulation, `>= 1`.
    pub lambda: f64,
    /// Gaussian width in disparity pixels.
    pub sigma: f64,
    /// Fraction of valid hints kept by [`sample_guidance`].
    pub sample_fraction: f64,
    /// Standard deviation of noise added to sampled hints, pixels.
    pub hint_noise: f64,
}

impl Default for GuidanceParams {
    fn default() -> Self {
        Self {
            lambda: 10.0,
            sigma: 1.0,
            sample_fraction: 0.10,
            hint_noise: 0.0,
        }
    }
}

impl GuidanceParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 1.0) {
            return Err(Error::InvalidParam(format!("lambda must be >= 1, got {}", self.lambda)));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::InvalidParam(format!("sigma must be > 0, got {}", self.sigma)));
        }
        if !(self.sample_fraction > 0.0 && self.sample_fraction <= 1.0) {
            return Err(Error::InvalidParam(format!(
                "sample fraction must be in (0, 1], got {}",
                self.sample_fraction
            )));
        }
        if !(self.hint_noise >= 0.0) {
            return Err(Error::InvalidParam("hint noise must be >= 0".into()));
        }
        Ok(())
    }
}

/// Sparse disparity hints `g` with validity `v`, in the left image frame.
#[derive(Debug, Clone, PartialEq)]
pub struct GuidanceMap {
    width: usize,
    height: usize,
    hints: Vec<f64>,
    valid: Vec<bool>,
}

impl GuidanceMap {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            hints: vec![0.0; width * height],
            valid: vec![false; width * height],
        }
    }

    pub fn from_parts(width: usize, height: usize, hints: Vec<f64>, valid: Vec<bool>) -> Result<Self> {
        let n = width * height;
        if hints.len() != n || valid.len() != n {
            return Err(Error::InvalidParam(format!(
                "guidance buffers must hold {n} values, got {} hints and {} flags",
                hints.len(),
                valid.len()
            )));
        }
        Ok(Self {
            width,
            height,
            hints,
            valid,
        })
    }

    /// Every valid pixel of `d` becomes a hint.
    pub fn from_disparity(d: &DisparityMap) -> Self {
        Self {
            width: d.width(),
            height: d.height(),
            hints: d.values().to_vec(),
            valid: d.mask().to_vec(),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn hint(&self, x: usize, y: usize) -> Option<f64> {
        let i = y * self.width + x;
        self.valid[i].then(|| self.hints[i])
    }

    pub fn mask(&self) -> &[bool] {
        &self.valid
    }

    pub fn count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Drops hints outside `(0, d_max)`.
    pub fn restrict_to(&mut self, d_max: usize) {
        for (v, &g) in self.valid.iter_mut().zip(&self.hints) {
            if !(g > 0.0 && g < d_max as f64) {
                *v = false;
            }
        }
    }

    pub fn to_disparity(&self) -> DisparityMap {
        DisparityMap::from_parts(self.width, self.height, self.hints.clone(), self.valid.clone())
            .expect("guidance buffers are sized")
    }
}

/// `lambda * exp(-(d - g)^2 / (2 sigma^2))`.
#[inline]
pub fn gaussian_guidance(d: f64, hint: f64, params: &GuidanceParams) -> f64 {
    let t = d - hint;
    params.lambda * (-(t * t) / (2.0 * params.sigma * params.sigma)).exp()
}

/// `C'(x, y, d) = (1 - v + v * f(x, y, d)) * C(x, y, d)`. Cells without a
/// valid hint are copied unchanged.
pub fn modulate_cost_volume(
    volume: &CostVolume,
    guide: &GuidanceMap,
    params: &GuidanceParams,
) -> Result<CostVolume> {
    ensure_same_size("guidance", volume.dims(), guide.dims())?;
    params.validate()?;
    let mut scores = volume.scores().to_vec();
    let d_max = volume.d_max();
    for (i, cell) in scores.chunks_exact_mut(d_max).enumerate() {
        if !guide.valid[i] {
            continue;
        }
        let g = guide.hints[i];
        for (d, c) in cell.iter_mut().enumerate() {
            *c = (gaussian_guidance(d as f64, g, params) * *c as f64) as f32;
        }
    }
    Ok(volume.with_scores(scores))
}

/// Keeps `round(fraction * n_valid)` valid pixels of `d`, chosen uniformly
/// without replacement; optional Gaussian hint noise of `noise_sigma` px.
pub fn sample_guidance(d: &DisparityMap, fraction: f64, seed: u64, noise_sigma: f64) -> Result<GuidanceMap> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidParam(format!("sample fraction must be in (0, 1], got {fraction}")));
    }
    let (w, h) = d.dims();
    let mut out = GuidanceMap::empty(w, h);
    let candidates: Vec<usize> = d.mask().iter().enumerate().filter(|(_, &v)| v).map(|(i, _)| i).collect();
    let k = ((candidates.len() as f64) * fraction).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picks: Vec<usize> = if k == candidates.len() {
        candidates
    } else {
        rand::seq::index::sample(&mut rng, candidates.len(), k)
            .into_iter()
            .map(|j| candidates[j])
            .collect()
    };
    picks.sort_unstable();
    let noise = (noise_sigma > 0.0).then(|| Normal::new(0.0, noise_sigma).expect("finite sigma"));
    for i in picks {
        let mut g = d.values()[i];
        if let Some(n) = &noise {
            g += n.sample(&mut rng);
        }
        out.hints[i] = g;
        out.valid[i] = true;
    }
    Ok(out)
}
