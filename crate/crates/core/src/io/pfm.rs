use std::fs;
use std::path::Path;

use super::file_err;
use crate::error::{Error, Result};
use crate::raster::{DepthMap, DisparityMap};

/// Decoded single-channel PFM contents in top-down row order. Pixels stored
/// as `+inf` come back with `valid = false`.
#[derive(Debug, Clone, PartialEq)]
pub struct PfmRaster {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f32>,
    pub valid: Vec<bool>,
}

/// Little-endian `Pf` encoding; invalid pixels become `+inf`.
pub fn encode_pfm(width: usize, height: usize, values: &[f64], valid: &[bool]) -> Vec<u8> {
    let header = format!("Pf\n{width} {height}\n-1.0\n");
    let mut out = Vec::with_capacity(header.len() + 4 * width * height);
    out.extend_from_slice(header.as_bytes());
    for y in (0..height).rev() {
        for x in 0..width {
            let i = y * width + x;
            let v = if valid[i] { values[i] as f32 } else { f32::INFINITY };
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn header_line<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a str> {
    let rest = &bytes[*pos..];
    let end = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::MalformedHeader("unterminated header".into()))?;
    *pos += end + 1;
    std::str::from_utf8(&rest[..end])
        .map(str::trim)
        .map_err(|_| Error::MalformedHeader("header is not text".into()))
}

pub fn decode_pfm(bytes: &[u8]) -> Result<PfmRaster> {
    let mut pos = 0;
    let magic = header_line(bytes, &mut pos)?;
    if magic != "Pf" {
        return Err(Error::MalformedHeader(format!("expected `Pf`, found `{magic}`")));
    }
    let dims = header_line(bytes, &mut pos)?;
    let parsed: Vec<usize> = dims
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::MalformedHeader(format!("bad dimensions `{dims}`")))?;
    let [width, height] = parsed[..] else {
        return Err(Error::MalformedHeader(format!("bad dimensions `{dims}`")));
    };
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader(format!("non-positive dimensions `{dims}`")));
    }
    let scale_text = header_line(bytes, &mut pos)?;
    let scale: f64 = scale_text
        .parse()
        .map_err(|_| Error::MalformedHeader(format!("bad scale `{scale_text}`")))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::MalformedHeader(format!("scale must be finite and non-zero, got {scale}")));
    }
    let little = scale < 0.0;
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::MalformedHeader("dimensions overflow".into()))?;
    let payload = &bytes[pos..];
    if payload.len() < 4 * n {
        return Err(Error::TruncatedPayload {
            expected: 4 * n,
            found: payload.len(),
        });
    }
    let mut values = vec![0f32; n];
    let mut valid = vec![false; n];
    for (k, chunk) in payload[..4 * n].chunks_exact(4).enumerate() {
        let b = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) };
        let (row, x) = (k / width, k % width);
        let i = (height - 1 - row) * width + x;
        values[i] = v;
        valid[i] = v.is_finite();
    }
    Ok(PfmRaster {
        width,
        height,
        values,
        valid,
    })
}

fn read_raster(path: &Path) -> Result<PfmRaster> {
    decode_pfm(&fs::read(path).map_err(file_err(path))?)
}

pub fn write_pfm(path: &Path, map: &DisparityMap) -> Result<()> {
    let bytes = encode_pfm(map.width(), map.height(), map.values(), map.mask());
    fs::write(path, bytes).map_err(file_err(path))
}

pub fn read_pfm(path: &Path) -> Result<DisparityMap> {
    let r = read_raster(path)?;
    DisparityMap::from_parts(r.width, r.height, r.values.iter().map(|&v| v as f64).collect(), r.valid)
}

pub fn write_depth_pfm(path: &Path, map: &DepthMap) -> Result<()> {
    let bytes = encode_pfm(map.width(), map.height(), map.values(), map.mask());
    fs::write(path, bytes).map_err(file_err(path))
}

pub fn read_depth_pfm(path: &Path) -> Result<DepthMap> {
    let r = read_raster(path)?;
    DepthMap::from_depths(r.width, r.height, r.values.iter().map(|&v| v as f64).collect(), r.valid)
}
