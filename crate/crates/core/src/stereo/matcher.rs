use serde::{Deserialize, Serialize};

use super::aggregate::{aggregate, Aggregation};
use super::disparity::{extract_disparity, extract_right_disparity, left_right_check, DEFAULT_UNIQUENESS};
use super::features::{extract_features, FeatureKind};
use super::guidance::{modulate_cost_volume, GuidanceMap, GuidanceParams};
use super::volume::{build_cost_volume, CorrelationForm, CostVolume};
use crate::error::{ensure_same_size, Error, Result};
use crate::raster::{DisparityMap, ImageGray};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatcherConfig {
    /// Disparities searched are `0..d_max`.
    pub d_max: usize,
    pub features: FeatureKind,
    pub eps: f64,
    pub correlation: CorrelationForm,
    pub guidance: GuidanceParams,
    pub aggregation: Aggregation,
    pub uniqueness: f64,
    /// Left-right check tolerance in pixels; `None` disables the check.
    pub lrc: Option<f64>,
}

impl Default for MatcherConfig {
    fn default() -> Self {
        Self {
            d_max: 192,
            features: FeatureKind::Census,
            eps: 1e-4,
            correlation: CorrelationForm::Printed,
            guidance: GuidanceParams::default(),
            aggregation: Aggregation::default(),
            uniqueness: DEFAULT_UNIQUENESS,
            lrc: Some(1.0),
        }
    }
}

impl MatcherConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d_max < 2 {
            return Err(Error::InvalidParam(format!("d_max must be >= 2, got {}", self.d_max)));
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidParam(format!("eps must be positive, got {}", self.eps)));
        }
        if !(self.uniqueness > 0.0 && self.uniqueness <= 1.0) {
            return Err(Error::InvalidParam(format!("uniqueness must be in (0, 1], got {}", self.uniqueness)));
        }
        if let Some(tol) = self.lrc {
            if !(tol > 0.0) {
                return Err(Error::InvalidParam(format!("LRC tolerance must be positive, got {tol}")));
            }
        }
        self.guidance.validate()?;
        self.aggregation.validate()
    }
}

/// Correlation volume after optional modulation and aggregation.
pub fn guided_volume(
    left: &ImageGray,
    right: &ImageGray,
    guide: Option<&GuidanceMap>,
    cfg: &MatcherConfig,
) -> Result<CostVolume> {
    cfg.validate()?;
    ensure_same_size("right image", left.dims(), right.dims())?;
    let fl = extract_features(left, cfg.features);
    let fr = extract_features(right, cfg.features);
    let mut volume = build_cost_volume(&fl, &fr, cfg.d_max, cfg.eps, cfg.correlation)?;
    if let Some(guide) = guide {
        let mut g = guide.clone();
        g.restrict_to(cfg.d_max);
        volume = modulate_cost_volume(&volume, &g, &cfg.guidance)?;
    }
    aggregate(&volume, &cfg.aggregation)
}

/// Dense disparity of a rectified pair, optionally steered by hints.
/// Without hints this is the plain passive matcher.
pub fn match_guided(
    left: &ImageGray,
    right: &ImageGray,
    guide: Option<&GuidanceMap>,
    cfg: &MatcherConfig,
) -> Result<DisparityMap> {
    let volume = guided_volume(left, right, guide, cfg)?;
    let d_left = extract_disparity(&volume, cfg.uniqueness);
    Ok(match cfg.lrc {
        Some(tol) => left_right_check(&d_left, &extract_right_disparity(&volume, cfg.uniqueness), tol),
        None => d_left,
    })
}
