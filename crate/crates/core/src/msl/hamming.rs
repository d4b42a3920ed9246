//! Windowed Hamming costs between two binary images over a range of
//! horizontal shifts, computed with word-level XOR and popcount.
//!
//! Convention: at shift `d`, live pixel `x` is compared with reference pixel
//! `x - d`. Only window positions inside both images contribute; the number
//! of such positions is [`window_count`].

use std::ops::Range;

use super::binary::BinaryImage;

/// Inclusive range of integer shifts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShiftRange {
    pub min: i32,
    pub max: i32,
}

impl ShiftRange {
    pub fn new(min: i32, max: i32) -> Self {
        assert!(min <= max, "empty shift range {min}..={max}");
        Self { min, max }
    }

    #[inline]
    pub fn len(&self) -> usize {
        (self.max - self.min + 1) as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn shift(&self, index: usize) -> i32 {
        self.min + index as i32
    }

    pub fn iter(&self) -> impl Iterator<Item = i32> {
        self.min..=self.max
    }
}

/// Number of window positions around `(x, y)` that fall inside both the live
/// image and the reference image shifted by `d`.
#[inline]
pub fn window_count(width: usize, height: usize, radius: usize, x: usize, y: usize, d: i32) -> u32 {
    let rows = (y + radius + 1).min(height) - y.saturating_sub(radius);
    let lo = (x as i64 - radius as i64).max(0).max(d as i64);
    let hi = (x as i64 + radius as i64 + 1)
        .min(width as i64)
        .min(width as i64 + d as i64);
    let cols = (hi - lo).max(0) as usize;
    (rows * cols) as u32
}

/// Costs for a band of output rows, laid out `[row][shift][x]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostBand {
    pub rows: Range<usize>,
    pub width: usize,
    pub height: usize,
    pub radius: usize,
    pub shifts: ShiftRange,
    pub costs: Vec<u32>,
}

impl CostBand {
    pub fn zeros(rows: Range<usize>, width: usize, height: usize, radius: usize, shifts: ShiftRange) -> Self {
        let n = rows.len() * shifts.len() * width;
        Self {
            rows,
            width,
            height,
            radius,
            shifts,
            costs: vec![0; n],
        }
    }

    /// Cost row for image row `y` and shift index `di`.
    #[inline]
    pub fn slice(&self, y: usize, di: usize) -> &[u32] {
        let base = ((y - self.rows.start) * self.shifts.len() + di) * self.width;
        &self.costs[base..base + self.width]
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, di: usize) -> u32 {
        self.slice(y, di)[x]
    }

    #[inline]
    pub fn count(&self, x: usize, y: usize, di: usize) -> u32 {
        window_count(self.width, self.height, self.radius, x, y, self.shifts.shift(di))
    }

    /// Element-wise sum; both bands must share geometry.
    pub fn accumulate(&mut self, other: &CostBand) {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.shifts, other.shifts);
        assert_eq!(self.width, other.width);
        for (a, b) in self.costs.iter_mut().zip(&other.costs) {
            *a += b;
        }
    }
}

#[inline]
fn word_at(row: &[u64], k: i64) -> u64 {
    if k >= 0 && (k as usize) < row.len() {
        row[k as usize]
    } else {
        0
    }
}

/// 64 bits of `row` starting at bit `start`; bits outside the row read as 0.
#[inline]
fn extract64(row: &[u64], start: i64) -> u64 {
    let q = start.div_euclid(64);
    let s = start.rem_euclid(64) as u32;
    let lo = word_at(row, q) >> s;
    if s == 0 {
        lo
    } else {
        lo | (word_at(row, q + 1) << (64 - s))
    }
}

/// Word mask with bits `[lo, hi)` set inside word `i`.
#[inline]
fn range_mask(i: usize, lo: i64, hi: i64) -> u64 {
    let base = (i * 64) as i64;
    let a = (lo - base).clamp(0, 64) as u32;
    let b = (hi - base).clamp(0, 64) as u32;
    if a >= b {
        return 0;
    }
    let upper = if b == 64 { u64::MAX } else { (1u64 << b) - 1 };
    let lower = if a == 64 { u64::MAX } else { (1u64 << a) - 1 };
    upper & !lower
}

/// Horizontal window popcounts of `live XOR shift(reference, d)` for one row.
fn row_window_counts(
    live: &[u64],
    reference: &[u64],
    width: usize,
    d: i32,
    radius: usize,
    diff: &mut [u64],
    prefix: &mut [u32],
    out: &mut [u32],
) {
    let lo = (d as i64).max(0);
    let hi = (width as i64).min(width as i64 + d as i64);
    let nw = live.len();
    for i in 0..nw {
        let shifted = extract64(reference, (i * 64) as i64 - d as i64);
        diff[i] = (live[i] ^ shifted) & range_mask(i, lo, hi);
    }
    // prefix[i] = ones in words [0, i)
    prefix[0] = 0;
    for i in 0..nw {
        prefix[i + 1] = prefix[i] + diff[i].count_ones();
    }
    let ones_before = |k: usize| -> u32 {
        let (q, s) = (k >> 6, k & 63);
        if q >= nw {
            prefix[nw]
        } else {
            prefix[q] + (diff[q] & ((1u64 << s) - 1)).count_ones()
        }
    };
    for (x, o) in out.iter_mut().enumerate().take(width) {
        let a = x.saturating_sub(radius);
        let b = (x + radius + 1).min(width);
        *o = ones_before(b) - ones_before(a);
    }
}

/// Windowed Hamming costs for output rows `rows`, window `(2 radius + 1)^2`.
pub fn hamming_band(
    live: &BinaryImage,
    reference: &BinaryImage,
    shifts: ShiftRange,
    radius: usize,
    rows: Range<usize>,
) -> CostBand {
    assert_eq!(live.dims(), reference.dims(), "binary images differ in size");
    let (w, h) = live.dims();
    let mut band = CostBand::zeros(rows.clone(), w, h, radius, shifts);
    if rows.is_empty() {
        return band;
    }
    let src0 = rows.start.saturating_sub(radius);
    let src1 = (rows.end + radius).min(h);
    let nsrc = src1 - src0;
    let nw = live.words_per_row();
    let mut diff = vec![0u64; nw];
    let mut prefix = vec![0u32; nw + 1];
    let mut horiz = vec![0u32; nsrc * w];
    let nd = shifts.len();
    for di in 0..nd {
        let d = shifts.shift(di);
        for (k, y) in (src0..src1).enumerate() {
            row_window_counts(
                live.row(y),
                reference.row(y),
                w,
                d,
                radius,
                &mut diff,
                &mut prefix,
                &mut horiz[k * w..(k + 1) * w],
            );
        }
        // Sliding vertical window sum over the rows that exist.
        let mut acc = vec![0u32; w];
        let (mut a, mut b) = (0usize, 0usize);
        for y in rows.clone() {
            let na = y.saturating_sub(radius) - src0;
            let nb = (y + radius + 1).min(h) - src0;
            for k in b.max(na)..nb {
                for (o, v) in acc.iter_mut().zip(&horiz[k * w..(k + 1) * w]) {
                    *o += v;
                }
            }
            for k in a..na.min(b) {
                for (o, v) in acc.iter_mut().zip(&horiz[k * w..(k + 1) * w]) {
                    *o -= v;
                }
            }
            (a, b) = (na, nb);
            let base = ((y - rows.start) * nd + di) * w;
            band.costs[base..base + w].copy_from_slice(&acc);
        }
    }
    band
}

/// Result of winner-take-all over one pixel's cost curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    /// Refined shift (integer minimum plus parabola offset).
    pub shift: f64,
    pub best_index: usize,
    pub best_cost: f64,
}

/// Rejection rule applied to the best and runner-up costs of a pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uniqueness {
    /// The best cost must be below `ratio * second`.
    pub ratio: f64,
    /// Raw mismatch counts must also satisfy `S - B > z * sqrt(S + B)`;
    /// 0 disables the test.
    pub z: f64,
}

impl Uniqueness {
    pub fn ratio(ratio: f64) -> Self {
        Self { ratio, z: 0.0 }
    }

    fn significant(&self, (best, nb): (f64, f64), (other, no): (f64, f64)) -> bool {
        let (b, s) = (best * nb, other * no);
        s - b > self.z * (s + b).sqrt()
    }

    fn accepts(&self, best: (f64, f64), second: (f64, f64)) -> bool {
        if !second.0.is_finite() {
            return true;
        }
        best.0 < self.ratio * second.0 && (self.z <= 0.0 || self.significant(best, second))
    }
}

/// Winner-take-all on normalized costs for one pixel. `cost(i)` yields the
/// mismatch fraction and the window coverage of candidate `i`, or `None` when
/// the candidate is unavailable.
///
/// The runner-up ignores the immediate neighbors of the winner. The first and
/// last available candidates border missing ones, so a minimum there may sit
/// on a truncated slope: the winner must lie strictly inside and beat both
/// of them significantly. A 3-point parabola refines the minimum.
pub fn select_min(
    n: usize,
    cost: impl Fn(usize) -> Option<(f64, f64)>,
    uniqueness: Uniqueness,
) -> Option<(f64, usize, f64)> {
    let mut best: Option<(usize, (f64, f64))> = None;
    let (mut lo, mut hi) = (usize::MAX, 0);
    for i in 0..n {
        if let Some(c) = cost(i) {
            lo = lo.min(i);
            hi = i;
            if best.is_none_or(|(_, b)| c.0 < b.0) {
                best = Some((i, c));
            }
        }
    }
    let (bi, bc) = best?;
    if bi == lo || bi == hi {
        return None;
    }
    let second = (0..n)
        .filter(|&i| i + 1 < bi || i > bi + 1)
        .filter_map(&cost)
        .fold((f64::INFINITY, 0.0), |m, c| if c.0 < m.0 { c } else { m });
    if !uniqueness.accepts(bc, second) {
        return None;
    }
    if [lo, hi].iter().any(|&e| !cost(e).is_some_and(|c| uniqueness.significant(bc, c))) {
        return None;
    }
    let (cm, cp) = (cost(bi - 1)?.0, cost(bi + 1)?.0);
    let bc = bc.0;
    // A zero-cost window is an exact match at an integer shift.
    let mut offset = 0.0;
    let denom = cm + cp - 2.0 * bc;
    if bc > 0.0 && denom > 0.0 {
        offset = ((cm - cp) / (2.0 * denom)).clamp(-0.5, 0.5);
    }
    Some((bi as f64 + offset, bi, bc))
}

impl CostBand {
    /// Winner-take-all for pixel `(x, y)` in this band. `min_count` is the
    /// smallest acceptable window coverage.
    pub fn select(&self, x: usize, y: usize, min_count: u32, uniqueness: Uniqueness) -> Option<Selection> {
        let cost = |di: usize| {
            let n = self.count(x, y, di);
            (n >= min_count.max(1)).then(|| (self.get(x, y, di) as f64 / n as f64, n as f64))
        };
        select_min(self.shifts.len(), cost, uniqueness).map(|(s, bi, bc)| Selection {
            shift: self.shifts.min as f64 + s,
            best_index: bi,
            best_cost: bc,
        })
    }

    /// Right-referenced winner-take-all from the same band: the right pixel
    /// `xr` at shift `d` pairs with left pixel `xr + d`.
    pub fn select_right(&self, xr: usize, y: usize, min_count: u32, uniqueness: Uniqueness) -> Option<Selection> {
        let cost = |di: usize| {
            let xl = xr as i64 + self.shifts.shift(di) as i64;
            if xl < 0 || xl >= self.width as i64 {
                return None;
            }
            let xl = xl as usize;
            let n = self.count(xl, y, di);
            (n >= min_count.max(1)).then(|| (self.get(xl, y, di) as f64 / n as f64, n as f64))
        };
        select_min(self.shifts.len(), cost, uniqueness).map(|(s, bi, bc)| Selection {
            shift: self.shifts.min as f64 + s,
            best_index: bi,
            best_cost: bc,
        })
    }
}

/// Splits `0..height` into bands of at most `band` rows.
pub(crate) fn bands(height: usize, band: usize) -> Vec<Range<usize>> {
    (0..height)
        .step_by(band.max(1))
        .map(|y| y..(y + band).min(height))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extract_and_masks() {
        let row = [0xFFFF_0000_0000_0001u64, 0x3];
        assert_eq!(extract64(&row, 0), row[0]);
        assert_eq!(extract64(&row, 64), 0x3);
        assert_eq!(extract64(&row, -1), row[0] << 1);
        assert_eq!(extract64(&row, 63) & 0b111, 0b111);
        assert_eq!(range_mask(0, 0, 64), u64::MAX);
        assert_eq!(range_mask(1, 0, 70), 0b111111);
        assert_eq!(range_mask(0, 3, 5), 0b11000);
        assert_eq!(range_mask(0, 70, 80), 0);
    }

    #[test]
    fn window_count_clips_both_images() {
        assert_eq!(window_count(100, 100, 2, 50, 50, 0), 25);
        assert_eq!(window_count(100, 100, 2, 0, 0, 0), 9);
        // Reference index x - d must be >= 0: with d = 51 only x' >= 51 count.
        assert_eq!(window_count(100, 100, 2, 50, 50, 51), 5 * 2);
        // Reference index x - d must be < 100: with d = -49 only x' <= 50 count.
        assert_eq!(window_count(100, 100, 2, 50, 50, -49), 5 * 3);
    }

    #[test]
    fn select_min_parabola_and_uniqueness() {
        let costs = [5.0, 4.0, 1.0, 2.0, 5.0, 6.0];
        let u = Uniqueness::ratio(0.9);
        let (s, bi, _) = select_min(costs.len(), |i| Some((costs[i], 49.0)), u).unwrap();
        assert_eq!(bi, 2);
        // (4 - 2) / (2 (4 + 2 - 2)) = 0.25
        assert!((s - 2.25).abs() < 1e-12);
        let flat = [1.0; 6];
        assert!(select_min(flat.len(), |i| Some((flat[i], 49.0)), u).is_none());
        let exact = [5.0, 4.0, 0.0, 2.0, 5.0, 6.0];
        assert_eq!(select_min(exact.len(), |i| Some((exact[i], 49.0)), u).unwrap().0, 2.0);
        let zero = [0.0; 6];
        assert!(select_min(zero.len(), |i| Some((zero[i], 49.0)), u).is_none());
    }

    #[test]
    fn minimum_next_to_missing_candidate_is_rejected() {
        let u = Uniqueness::ratio(0.9);
        let costs = [9.0, 6.0, 3.0, 1.0];
        assert!(select_min(4, |i| Some((costs[i], 49.0)), u).is_none());
        // Candidate 3 unavailable: index 2 is now the last one.
        assert!(select_min(4, |i| (i < 3).then(|| (costs[i], 49.0)), u).is_none());
        let inner = [9.0, 1.0, 6.0, 9.0];
        assert_eq!(select_min(4, |i| Some((inner[i], 49.0)), u).unwrap().1, 1);
    }

    #[test]
    fn significance_grows_with_evidence() {
        // Same mismatch fractions, ten times the bits.
        let costs = [0.5, 0.4, 0.2, 0.4, 0.5, 0.3, 0.5];
        let u = Uniqueness { ratio: 1.0, z: 3.0 };
        assert!(select_min(7, |i| Some((costs[i], 49.0)), u).is_none());
        assert_eq!(select_min(7, |i| Some((costs[i], 490.0)), u).unwrap().1, 2);
    }

    #[test]
    fn bands_cover_rows() {
        let b = bands(10, 4);
        assert_eq!(b, vec![0..4, 4..8, 8..10]);
    }
}
