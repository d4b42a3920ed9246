use std::path::Path;

use image::{GrayImage, ImageBuffer, Luma};

use super::file_err;
use crate::error::Result;
use crate::raster::ImageGray;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

/// Loads any PNG as grayscale intensities in `[0, 1]`.
pub fn read_png(path: &Path) -> Result<ImageGray> {
    let bytes = std::fs::read(path).map_err(file_err(path))?;
    let img = image::load_from_memory_with_format(&bytes, image::ImageFormat::Png)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = match img {
        image::DynamicImage::ImageLuma8(g) => g.into_raw().into_iter().map(|v| v as f32 / 255.0).collect(),
        other => other
            .into_luma16()
            .into_raw()
            .into_iter()
            .map(|v| v as f32 / 65535.0)
            .collect(),
    };
    ImageGray::from_vec(w, h, data)
}

/// Writes intensities clamped to `[0, 1]` and rounded to the chosen depth.
pub fn write_png(path: &Path, img: &ImageGray, depth: BitDepth) -> Result<()> {
    let (w, h) = (img.width() as u32, img.height() as u32);
    let q = |v: f32, max: f32| (v.clamp(0.0, 1.0) * max).round();
    match depth {
        BitDepth::Eight => {
            let raw = img.as_slice().iter().map(|&v| q(v, 255.0) as u8).collect();
            let buf = GrayImage::from_raw(w, h, raw).expect("buffer sized");
            buf.save_with_format(path, image::ImageFormat::Png)?;
        }
        BitDepth::Sixteen => {
            let raw = img.as_slice().iter().map(|&v| q(v, 65535.0) as u16).collect();
            let buf: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::from_raw(w, h, raw).expect("buffer sized");
            buf.save_with_format(path, image::ImageFormat::Png)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantized_roundtrip_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        for (depth, max) in [(BitDepth::Eight, 255.0f32), (BitDepth::Sixteen, 65535.0)] {
            let img = ImageGray::from_fn(13, 7, |x, y| ((x * 37 + y * 101) % (max as usize + 1)) as f32 / max);
            let p = dir.path().join("a.png");
            write_png(&p, &img, depth).unwrap();
            assert_eq!(read_png(&p).unwrap(), img);
        }
    }
}
