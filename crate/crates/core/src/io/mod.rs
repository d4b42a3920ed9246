//! File formats: PFM rasters, PNG images and JSON documents.

mod pfm;
mod png;

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

pub use pfm::{decode_pfm, encode_pfm, read_depth_pfm, read_pfm, write_depth_pfm, write_pfm, PfmRaster};
pub use png::{read_png, write_png, BitDepth};

use crate::error::{Error, Result};
use crate::geometry::RigModel;
use crate::sim::Scene;

pub(crate) fn file_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::File {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(file_err(path))?;
    Ok(serde_json::from_str(&text)?)
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(file_err(path))
}

pub fn load_calibration(path: &Path) -> Result<RigModel> {
    let rig: RigModel = read_json(path)?;
    rig.validate()?;
    Ok(rig)
}

pub fn save_calibration(path: &Path, rig: &RigModel) -> Result<()> {
    write_json(path, rig)
}

/// Reads a scene file and loads its textures relative to the file.
pub fn load_scene(path: &Path) -> Result<Scene> {
    let mut scene: Scene = read_json(path)?;
    scene.validate()?;
    scene.load_textures(path.parent().unwrap_or(Path::new(".")))?;
    Ok(scene)
}

pub fn save_scene(path: &Path, scene: &Scene) -> Result<()> {
    write_json(path, scene)
}
