//! Raster containers shared by every stage.

use crate::error::{ensure_same_size, Result};

/// Floating point grayscale image, row-major, intensities nominally in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGray {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl ImageGray {
    pub fn new(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        ensure_same_size("image buffer", (width * height, 1), (data.len(), 1))?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f32) {
        self.data[y * self.width + x] = v;
    }

    /// Pixel lookup with coordinates clamped to the image border.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f32 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y)
    }

    pub fn row(&self, y: usize) -> &[f32] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

macro_rules! masked_map {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            width: usize,
            height: usize,
            data: Vec<f64>,
            valid: Vec<bool>,
        }

        impl $name {
            /// A map with every pixel invalid.
            pub fn invalid(width: usize, height: usize) -> Self {
                Self {
                    width,
                    height,
                    data: vec![0.0; width * height],
                    valid: vec![false; width * height],
                }
            }

            /// Builds a map from values and a mask. Non-finite values are
            /// forced invalid.
            pub fn from_parts(
                width: usize,
                height: usize,
                data: Vec<f64>,
                valid: Vec<bool>,
            ) -> Result<Self> {
                ensure_same_size("map data", (width * height, 1), (data.len(), 1))?;
                ensure_same_size("map mask", (width * height, 1), (valid.len(), 1))?;
                let valid = valid
                    .into_iter()
                    .zip(&data)
                    .map(|(v, d)| v && d.is_finite())
                    .collect();
                Ok(Self { width, height, data, valid })
            }

            /// Every finite value is valid.
            pub fn from_values(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
                let valid = vec![true; data.len()];
                Self::from_parts(width, height, data, valid)
            }

            pub fn from_fn(
                width: usize,
                height: usize,
                mut f: impl FnMut(usize, usize) -> Option<f64>,
            ) -> Self {
                let mut out = Self::invalid(width, height);
                for y in 0..height {
                    for x in 0..width {
                        if let Some(v) = f(x, y) {
                            out.set(x, y, v);
                        }
                    }
                }
                out
            }

            #[inline]
            pub fn width(&self) -> usize {
                self.width
            }

            #[inline]
            pub fn height(&self) -> usize {
                self.height
            }

            #[inline]
            pub fn dims(&self) -> (usize, usize) {
                (self.width, self.height)
            }

            #[inline]
            pub fn get(&self, x: usize, y: usize) -> Option<f64> {
                let i = y * self.width + x;
                self.valid[i].then(|| self.data[i])
            }

            #[inline]
            pub fn is_valid(&self, x: usize, y: usize) -> bool {
                self.valid[y * self.width + x]
            }

            /// Stores `v`; non-finite values mark the pixel invalid.
            #[inline]
            pub fn set(&mut self, x: usize, y: usize, v: f64) {
                let i = y * self.width + x;
                self.data[i] = v;
                self.valid[i] = v.is_finite();
            }

            #[inline]
            pub fn invalidate(&mut self, x: usize, y: usize) {
                self.valid[y * self.width + x] = false;
            }

            pub fn values(&self) -> &[f64] {
                &self.data
            }

            pub fn mask(&self) -> &[bool] {
                &self.valid
            }

            pub fn valid_count(&self) -> usize {
                self.valid.iter().filter(|&&v| v).count()
            }

            pub fn valid_fraction(&self) -> f64 {
                if self.valid.is_empty() {
                    return 0.0;
                }
                self.valid_count() as f64 / self.valid.len() as f64
            }

            /// Iterates `(x, y, value)` over valid pixels in row-major order.
            pub fn iter_valid(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
                let w = self.width;
                self.data
                    .iter()
                    .zip(&self.valid)
                    .enumerate()
                    .filter(|(_, (_, &v))| v)
                    .map(move |(i, (&d, _))| (i % w, i / w, d))
            }
        }
    };
}

masked_map!(
    /// Per-pixel disparity in pixels with a validity mask. Binocular
    /// disparities are non-negative (left x minus right x); MSL
    /// reference-relative disparities are signed.
    DisparityMap
);

masked_map!(
    /// Per-pixel depth in meters with a validity mask.
    DepthMap
);

impl DepthMap {
    /// Builds a map from values and a mask. Valid depths must also be positive.
    pub fn from_depths(width: usize, height: usize, data: Vec<f64>, valid: Vec<bool>) -> Result<Self> {
        let valid = valid.into_iter().zip(&data).map(|(v, &d)| v && d > 0.0).collect();
        Self::from_parts(width, height, data, valid)
    }

    pub fn min_max(&self) -> Option<(f64, f64)> {
        self.iter_valid().fold(None, |acc, (_, _, z)| match acc {
            None => Some((z, z)),
            Some((lo, hi)) => Some((lo.min(z), hi.max(z))),
        })
    }
}
