//! Binocular correlation-volume stereo with optional sparse disparity hints.

pub mod aggregate;
pub mod disparity;
pub mod features;
pub mod guidance;
pub mod matcher;
pub mod volume;

pub use aggregate::{aggregate, box_filter, sgm, Aggregation};
pub use disparity::{extract_disparity, extract_right_disparity, left_right_check, DEFAULT_UNIQUENESS};
pub use features::{extract_features, FeatureKind, FeatureMap};
pub use guidance::{gaussian_guidance, modulate_cost_volume, sample_guidance, GuidanceMap, GuidanceParams};
pub use matcher::{guided_volume, match_guided, MatcherConfig};
pub use volume::{build_cost_volume, normalized_correlation, CorrelationForm, CostVolume, OUT_OF_IMAGE_SCORE};
