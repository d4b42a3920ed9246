//! Synthetic scenes, DOE speckle projection and stereo-pair rendering.

mod noise;
mod pattern;
mod render;
mod scene;

pub use pattern::{Dot, SpecklePattern};
pub use render::{
    render_reference_image, render_scene, speckle_augment, DotImage, RenderedFrame, Renderer,
    SpeckleOptics, View,
};
pub use scene::{Albedo, Hit, Primitive, Ray, Scene};
