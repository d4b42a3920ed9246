use crate::raster::ImageGray;

/// One-bit raster packed LSB-first into 64-bit words, one word run per row.
/// Bits beyond `width` in the last word of a row are always zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    words_per_row: usize,
    words: Vec<u64>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize) -> Self {
        let words_per_row = width.div_ceil(64);
        Self {
            width,
            height,
            words_per_row,
            words: vec![0; words_per_row * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut img = Self::new(width, height);
        for y in 0..height {
            for x in 0..width {
                if f(x, y) {
                    img.set(x, y, true);
                }
            }
        }
        img
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
    pub fn words_per_row(&self) -> usize {
        self.words_per_row
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[u64] {
        &self.words[y * self.words_per_row..(y + 1) * self.words_per_row]
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        (self.row(y)[x >> 6] >> (x & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, bit: bool) {
        let w = &mut self.words[y * self.words_per_row + (x >> 6)];
        let m = 1u64 << (x & 63);
        if bit {
            *w |= m;
        } else {
            *w &= !m;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Whether every padding bit past `width` is zero.
    pub fn padding_is_clear(&self) -> bool {
        let tail = self.width % 64;
        if tail == 0 {
            return true;
        }
        let mask = !((1u64 << tail) - 1);
        (0..self.height).all(|y| self.row(y)[self.words_per_row - 1] & mask == 0)
    }
}

/// Local-mean binarization: a bit is set iff the pixel is strictly brighter
/// than the mean of its `(2 radius + 1)^2` neighborhood, with the window
/// clipped to the image. Invariant to `a * I + b` for `a > 0`.
pub fn binarize(img: &ImageGray, radius: usize) -> BinaryImage {
    let (w, h) = img.dims();
    // Integral image with a zero first row/column.
    let stride = w + 1;
    let mut integral = vec![0.0f64; stride * (h + 1)];
    for y in 0..h {
        let mut run = 0.0;
        for (x, &v) in img.row(y).iter().enumerate() {
            run += v as f64;
            integral[(y + 1) * stride + x + 1] = integral[y * stride + x + 1] + run;
        }
    }
    let r = radius.max(1);
    let mut out = BinaryImage::new(w, h);
    for y in 0..h {
        let y0 = y.saturating_sub(r);
        let y1 = (y + r + 1).min(h);
        for x in 0..w {
            let x0 = x.saturating_sub(r);
            let x1 = (x + r + 1).min(w);
            let sum = integral[y1 * stride + x1] - integral[y0 * stride + x1]
                - integral[y1 * stride + x0]
                + integral[y0 * stride + x0];
            let n = ((y1 - y0) * (x1 - x0)) as f64;
            // Compare against n * mean to avoid a rounding division.
            if img.get(x, y) as f64 * n > sum {
                out.set(x, y, true);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_get_and_padding() {
        let mut b = BinaryImage::new(70, 3);
        b.set(69, 2, true);
        b.set(0, 0, true);
        assert!(b.get(69, 2) && b.get(0, 0) && !b.get(68, 2));
        assert_eq!(b.count_ones(), 2);
        assert!(b.padding_is_clear());
        assert_eq!(b.words_per_row(), 2);
    }

    #[test]
    fn constant_image_is_all_zero() {
        let img = ImageGray::filled(33, 17, 0.37);
        let b = binarize(&img, 5);
        assert_eq!(b.count_ones(), 0);
    }

    #[test]
    fn isolated_dot_sets_only_its_footprint() {
        let mut img = ImageGray::new(40, 30);
        for (x, y, v) in [(20, 15, 1.0), (21, 15, 0.5), (20, 16, 0.25)] {
            img.set(x, y, v);
        }
        let b = binarize(&img, 5);
        assert_eq!(b.count_ones(), 3);
        assert!(b.get(20, 15) && b.get(21, 15) && b.get(20, 16));
        assert!(b.padding_is_clear());
    }

    #[test]
    fn affine_intensity_change_is_invisible() {
        // Dyadic intensities keep the affine map exact in f32.
        let img = ImageGray::from_fn(64, 48, |x, y| ((x * 7 + y * 13) % 17) as f32 / 64.0);
        let b0 = binarize(&img, 5);
        let b1 = binarize(&img.map(|v| 2.0 * v + 0.25), 5);
        let b2 = binarize(&img.map(|v| 0.5 * v + 0.125), 5);
        assert_eq!(b0, b1);
        assert_eq!(b0, b2);
        assert!(b0.count_ones() > 0);
    }
}
