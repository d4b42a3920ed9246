use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::volume::CostVolume;
use crate::error::{Error, Result};

/// Cost aggregation applied to the similarity volume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Aggregation {
    None,
    /// Windowed mean over a `size x size` neighbourhood per disparity.
    Box { size: usize },
    /// Semi-global matching on `1 - score`.
    Sgm { paths: usize, p1: f64, p2: f64 },
}

impl Default for Aggregation {
    fn default() -> Self {
        Aggregation::Box { size: 5 }
    }
}

impl Aggregation {
    pub fn sgm() -> Self {
        Aggregation::Sgm {
            paths: 8,
            p1: 0.03,
            p2: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Aggregation::None => Ok(()),
            Aggregation::Box { size } if size % 2 == 1 => Ok(()),
            Aggregation::Box { size } => Err(Error::InvalidParam(format!("box size must be odd, got {size}"))),
            Aggregation::Sgm { paths, p1, p2 } => {
                if paths != 4 && paths != 8 {
                    return Err(Error::InvalidParam(format!("SGM needs 4 or 8 paths, got {paths}")));
                }
                if !(p1 >= 0.0 && p2 >= p1) {
                    return Err(Error::InvalidParam("SGM penalties need 0 <= p1 <= p2".into()));
                }
                Ok(())
            }
        }
    }
}

pub fn aggregate(volume: &CostVolume, method: &Aggregation) -> Result<CostVolume> {
    method.validate()?;
    Ok(match *method {
        Aggregation::None => volume.clone(),
        Aggregation::Box { size } => box_filter(volume, size / 2),
        Aggregation::Sgm { paths, p1, p2 } => sgm(volume, paths, p1 as f32, p2 as f32),
    })
}

/// Separable mean over the in-bounds part of each window.
pub fn box_filter(volume: &CostVolume, radius: usize) -> CostVolume {
    let (w, h) = volume.dims();
    let n = volume.d_max();
    let src = volume.scores();
    let mut horiz = vec![0f64; w * h * n];
    horiz.par_chunks_mut(w * n).enumerate().for_each(|(y, row)| {
        let line = &src[y * w * n..(y + 1) * w * n];
        let mut acc = vec![0f64; n];
        let mut lo = 0;
        let mut hi = 0;
        for x in 0..w {
            let want_lo = x.saturating_sub(radius);
            let want_hi = (x + radius + 1).min(w);
            while hi < want_hi {
                for (a, &s) in acc.iter_mut().zip(&line[hi * n..(hi + 1) * n]) {
                    *a += s as f64;
                }
                hi += 1;
            }
            while lo < want_lo {
                for (a, &s) in acc.iter_mut().zip(&line[lo * n..(lo + 1) * n]) {
                    *a -= s as f64;
                }
                lo += 1;
            }
            let count = (hi - lo) as f64;
            for (o, a) in row[x * n..(x + 1) * n].iter_mut().zip(&acc) {
                *o = a / count;
            }
        }
    });
    let mut out = vec![0f32; w * h * n];
    out.par_chunks_mut(w * n).enumerate().for_each(|(y, row)| {
        let y0 = y.saturating_sub(radius);
        let y1 = (y + radius + 1).min(h);
        let count = (y1 - y0) as f64;
        let mut acc = vec![0f64; w * n];
        for yy in y0..y1 {
            for (a, &s) in acc.iter_mut().zip(&horiz[yy * w * n..(yy + 1) * w * n]) {
                *a += s;
            }
        }
        for (o, a) in row.iter_mut().zip(&acc) {
            *o = (a / count) as f32;
        }
    });
    volume.with_scores(out)
}

const DIRS_4: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
const DIRS_8: [(isize, isize); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, 1), (1, -1), (-1, -1)];

/// One step of the path recurrence: `cost + min(prev[d], prev[d±1] + p1,
/// min(prev) + p2) - min(prev)`.
#[inline]
fn path_step(cost: &[f32], prev: Option<&[f32]>, p1: f32, p2: f32, out: &mut [f32]) {
    let Some(prev) = prev else {
        out.copy_from_slice(cost);
        return;
    };
    let n = cost.len();
    let m = prev.iter().copied().fold(f32::INFINITY, f32::min);
    for d in 0..n {
        let mut best = prev[d];
        if d > 0 {
            best = best.min(prev[d - 1] + p1);
        }
        if d + 1 < n {
            best = best.min(prev[d + 1] + p1);
        }
        best = best.min(m + p2);
        out[d] = cost[d] + best - m;
    }
}

/// Path costs along one scanline of dissimilarities (`line[i * n + d]`).
pub fn sgm_scanline(line: &[f32], n: usize, p1: f32, p2: f32) -> Vec<f32> {
    let mut out = vec![0f32; line.len()];
    for i in 0..line.len() / n {
        let (done, rest) = out.split_at_mut(i * n);
        let prev = (i > 0).then(|| &done[(i - 1) * n..]);
        path_step(&line[i * n..(i + 1) * n], prev, p1, p2, &mut rest[..n]);
    }
    out
}

/// Semi-global aggregation. The summed path cost `S` is mapped back to a
/// similarity `1 - S / (paths * (1 + p2))`. That lies in `[0, 1]` for input
/// scores in `[0, 1]`; modulated volumes can exceed 1 and keep their order.
pub fn sgm(volume: &CostVolume, paths: usize, p1: f32, p2: f32) -> CostVolume {
    let (w, h) = volume.dims();
    let n = volume.d_max();
    let cost: Vec<f32> = volume.scores().iter().map(|&s| 1.0 - s).collect();
    let dirs: &[(isize, isize)] = if paths == 8 { &DIRS_8 } else { &DIRS_4 };
    let mut total = vec![0f32; w * h * n];
    for &(dx, dy) in dirs {
        accumulate_direction(&cost, w, h, n, dx, dy, p1, p2, &mut total);
    }
    let scale = 1.0 / (paths as f32 * (1.0 + p2));
    let scores = total.iter().map(|&s| 1.0 - s * scale).collect();
    volume.with_scores(scores)
}

#[allow(clippy::too_many_arguments)]
fn accumulate_direction(
    cost: &[f32],
    w: usize,
    h: usize,
    n: usize,
    dx: isize,
    dy: isize,
    p1: f32,
    p2: f32,
    total: &mut [f32],
) {
    let stride = w * n;
    if dy == 0 {
        total.par_chunks_mut(stride).enumerate().for_each(|(y, trow)| {
            let mut prev = vec![0f32; n];
            let mut cur = vec![0f32; n];
            for k in 0..w {
                let x = if dx > 0 { k } else { w - 1 - k };
                let c = &cost[y * stride + x * n..y * stride + (x + 1) * n];
                path_step(c, (k > 0).then_some(&prev[..]), p1, p2, &mut cur);
                for (t, &v) in trow[x * n..(x + 1) * n].iter_mut().zip(&cur) {
                    *t += v;
                }
                std::mem::swap(&mut prev, &mut cur);
            }
        });
        return;
    }
    let mut prev_row = vec![0f32; stride];
    let mut cur_row = vec![0f32; stride];
    for k in 0..h {
        let y = if dy > 0 { k } else { h - 1 - k };
        cur_row
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(x, out)| {
                let c = &cost[y * stride + x * n..y * stride + (x + 1) * n];
                let px = x as isize - dx;
                let prev = (k > 0 && px >= 0 && (px as usize) < w)
                    .then(|| &prev_row[px as usize * n..(px as usize + 1) * n]);
                path_step(c, prev, p1, p2, out);
            });
        for (t, &v) in total[y * stride..(y + 1) * stride].iter_mut().zip(&cur_row) {
            *t += v;
        }
        std::mem::swap(&mut prev_row, &mut cur_row);
    }
}
