//! Hybrid structured-light / stereo depth estimation.
//!
//! A monocular structured-light (MSL) subsystem matches a live speckle image
//! against a stored reference image to produce a depth map with holes. That
//! depth is reprojected into the RGB camera, converted to binocular disparity
//! and injected as sparse hints into the cost volume of a passive stereo
//! matcher through Gaussian modulation.
//!
//! The crate is organized by pipeline stage:
//!
//! 1. [`geometry`] – rig model, depth/disparity conversions, reprojection.
//! 2. [`sim`] – analytic ray-cast scenes, speckle projector, dataset augmentation.
//! 3. [`msl`] – binarization and bit-packed block matching against the reference.
//! 4. [`stereo`] – features, normalized correlation volumes, guidance, aggregation.
//! 5. [`spacetime`] – multi-frame ground truth by temporal cost integration.
//! 6. [`metrics`] – EPE / Bad-τ evaluation and comparison reports.
//! 7. [`io`] and [`pipeline`] – file formats and the end-to-end driver.

// Negated float comparisons reject NaN parameters on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod error;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod msl;
pub mod pipeline;
pub mod raster;
pub mod sim;
pub mod spacetime;
pub mod stereo;
pub mod suite;

pub use error::{Error, Result};
pub use geometry::{CameraIntrinsics, RigModel, RigidTransform};
pub use raster::{DepthMap, DisparityMap, ImageGray};
