use super::volume::CostVolume;
use crate::raster::DisparityMap;

/// Default best/runner-up similarity ratio.
pub const DEFAULT_UNIQUENESS: f64 = 0.98;

/// Argmax over `n` candidate scores with the parabola offset. The runner-up
/// ignores the two neighbours of the winner; the pick is rejected unless
/// `second < uniqueness * best` and `best > 0`.
pub(crate) fn select_max(n: usize, score: impl Fn(usize) -> Option<f64>, uniqueness: f64) -> Option<f64> {
    let mut best: Option<(usize, f64)> = None;
    for i in 0..n {
        if let Some(s) = score(i) {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((i, s));
            }
        }
    }
    let (bi, bs) = best?;
    if !(bs > 0.0) {
        return None;
    }
    let second = (0..n)
        .filter(|&i| i + 1 < bi || i > bi + 1)
        .filter_map(&score)
        .fold(f64::NEG_INFINITY, f64::max);
    if second.is_finite() && !(second < uniqueness * bs) {
        return None;
    }
    let mut offset = 0.0;
    if bi > 0 && bi + 1 < n {
        if let (Some(sm), Some(sp)) = (score(bi - 1), score(bi + 1)) {
            let denom = sm + sp - 2.0 * bs;
            if denom < 0.0 {
                offset = ((sm - sp) / (2.0 * denom)).clamp(-0.5, 0.5);
            }
        }
    }
    Some(bi as f64 + offset)
}

/// Left-view disparity: per-pixel argmax with sub-pixel refinement.
pub fn extract_disparity(volume: &CostVolume, uniqueness: f64) -> DisparityMap {
    let (w, h) = volume.dims();
    let n = volume.d_max();
    DisparityMap::from_fn(w, h, |x, y| {
        let s = volume.slice(x, y);
        select_max(n, |d| Some(s[d] as f64), uniqueness)
    })
}

/// Right-view disparity read from the same left-referenced volume:
/// right pixel `xr` at disparity `d` pairs with left pixel `xr + d`.
pub fn extract_right_disparity(volume: &CostVolume, uniqueness: f64) -> DisparityMap {
    let (w, h) = volume.dims();
    let n = volume.d_max();
    DisparityMap::from_fn(w, h, |xr, y| {
        select_max(
            n,
            |d| (xr + d < w).then(|| volume.get(xr + d, y, d) as f64),
            uniqueness,
        )
    })
}

/// Invalidates left pixels whose disparity disagrees with the right view at
/// `x - d_left` by more than `tol`, or whose right lookup is missing.
pub fn left_right_check(left: &DisparityMap, right: &DisparityMap, tol: f64) -> DisparityMap {
    let mut out = left.clone();
    let w = right.width() as f64;
    for (x, y, dl) in left.iter_valid() {
        let xr = (x as f64 - dl).round();
        let keep = xr >= 0.0
            && xr < w
            && y < right.height()
            && right.get(xr as usize, y).is_some_and(|dr| (dl - dr).abs() <= tol);
        if !keep {
            out.invalidate(x, y);
        }
    }
    out
}
