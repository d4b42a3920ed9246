use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::FeatureMap;
use crate::error::{ensure_same_size, Error, Result};

/// Score assigned to shifts that leave the image: the value of orthogonal
/// features, so borders neither attract nor repel.
pub const OUT_OF_IMAGE_SCORE: f32 = 0.5;

/// Normalization of the correlation score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationForm {
    /// `<a, b> / (2 (|a| + eps)(|b| + eps)) + 0.5`.
    #[default]
    Printed,
    /// `<a, b> / (2 |a| |b|) + 0.5`, with 0.5 when either vector is zero.
    Cosine,
}

/// Normalized correlation of two feature vectors, in `[0, 1]`.
pub fn normalized_correlation(a: &[f32], b: &[f32], eps: f64, form: CorrelationForm) -> f64 {
    let mut dot = 0.0f64;
    let mut na = 0.0f64;
    let mut nb = 0.0f64;
    for (&p, &q) in a.iter().zip(b) {
        let (p, q) = (p as f64, q as f64);
        dot += p * q;
        na += p * p;
        nb += q * q;
    }
    correlation_from_parts(dot, na.sqrt(), nb.sqrt(), eps, form)
}

#[inline]
fn correlation_from_parts(dot: f64, na: f64, nb: f64, eps: f64, form: CorrelationForm) -> f64 {
    let s = match form {
        CorrelationForm::Printed => dot / (2.0 * (na + eps) * (nb + eps)) + 0.5,
        CorrelationForm::Cosine => {
            if na == 0.0 || nb == 0.0 {
                0.5
            } else {
                dot / (2.0 * na * nb) + 0.5
            }
        }
    };
    // Cauchy-Schwarz bounds the exact value; clamp only the rounding residue.
    if s.is_nan() {
        0.5
    } else {
        s.clamp(0.0, 1.0)
    }
}

/// Similarity volume, `scores[(y * width + x) * d_max + d]`; higher is better.
#[derive(Debug, Clone, PartialEq)]
pub struct CostVolume {
    width: usize,
    height: usize,
    d_max: usize,
    feature_dim: usize,
    scores: Vec<f32>,
}

impl CostVolume {
    pub fn from_fn(
        width: usize,
        height: usize,
        d_max: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Self {
        let mut scores = Vec::with_capacity(width * height * d_max);
        for y in 0..height {
            for x in 0..width {
                for d in 0..d_max {
                    scores.push(f(x, y, d));
                }
            }
        }
        Self {
            width,
            height,
            d_max,
            feature_dim: 0,
            scores,
        }
    }

    pub fn from_scores(width: usize, height: usize, d_max: usize, scores: Vec<f32>) -> Result<Self> {
        ensure_same_size("cost volume", (width * height * d_max, 1), (scores.len(), 1))?;
        Ok(Self {
            width,
            height,
            d_max,
            feature_dim: 0,
            scores,
        })
    }

    pub(crate) fn with_scores(&self, scores: Vec<f32>) -> Self {
        debug_assert_eq!(scores.len(), self.scores.len());
        Self {
            width: self.width,
            height: self.height,
            d_max: self.d_max,
            feature_dim: self.feature_dim,
            scores,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn d_max(&self) -> usize {
        self.d_max
    }

    /// Feature dimension the volume was built from (0 if built directly).
    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, d: usize) -> f32 {
        self.scores[(y * self.width + x) * self.d_max + d]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, d: usize, v: f32) {
        self.scores[(y * self.width + x) * self.d_max + d] = v;
    }

    /// Scores of pixel `(x, y)` for every disparity.
    #[inline]
    pub fn slice(&self, x: usize, y: usize) -> &[f32] {
        let i = (y * self.width + x) * self.d_max;
        &self.scores[i..i + self.d_max]
    }

    pub fn scores(&self) -> &[f32] {
        &self.scores
    }

    pub fn scores_mut(&mut self) -> &mut [f32] {
        &mut self.scores
    }
}

/// Correlation volume between left features and right features shifted by
/// `d` in `[0, d_max)`: left `x` pairs with right `x - d`.
pub fn build_cost_volume(
    left: &FeatureMap,
    right: &FeatureMap,
    d_max: usize,
    eps: f64,
    form: CorrelationForm,
) -> Result<CostVolume> {
    ensure_same_size("right features", left.dims(), right.dims())?;
    if left.dim() != right.dim() || left.kind() != right.kind() {
        return Err(Error::FeatureDimMismatch(left.dim(), right.dim()));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParam(format!("eps must be positive, got {eps}")));
    }
    if d_max == 0 {
        return Err(Error::InvalidParam("d_max must be positive".into()));
    }
    let (w, h) = left.dims();
    let nl = left.norms();
    let nr = right.norms();
    let dim = left.dim() as u32;
    let mut scores = vec![OUT_OF_IMAGE_SCORE; w * h * d_max];
    scores
        .par_chunks_mut(w * d_max)
        .enumerate()
        .for_each(|(y, row)| {
            for x in 0..w {
                let out = &mut row[x * d_max..(x + 1) * d_max];
                let li = y * w + x;
                let lbits = left.census_bits(x, y);
                for (d, o) in out.iter_mut().enumerate().take(x + 1) {
                    let xr = x - d;
                    let ri = y * w + xr;
                    let dot = match (lbits, right.census_bits(xr, y)) {
                        (Some(a), Some(b)) => dim as f64 - 2.0 * (a ^ b).count_ones() as f64,
                        _ => left
                            .feature(x, y)
                            .iter()
                            .zip(right.feature(xr, y))
                            .map(|(&p, &q)| p as f64 * q as f64)
                            .sum(),
                    };
                    *o = correlation_from_parts(dot, nl[li], nr[ri], eps, form) as f32;
                }
            }
        });
    Ok(CostVolume {
        width: w,
        height: h,
        d_max,
        feature_dim: left.dim(),
        scores,
    })
}
