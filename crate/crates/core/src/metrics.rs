//! End-point error and Bad-τ rates, plus comparison tables.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_same_size, Error, Result};
use crate::raster::DisparityMap;

pub const DEFAULT_THRESHOLDS: [f64; 3] = [0.5, 1.0, 2.0];

/// How pixels with an invalid prediction are scored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum InvalidPolicy {
    /// Counted as failures at every threshold, with `epe_penalty` px of error.
    Penalty { epe_penalty: f64 },
    /// Excluded from evaluation.
    Skip,
}

impl Default for InvalidPolicy {
    fn default() -> Self {
        InvalidPolicy::Penalty { epe_penalty: 192.0 }
    }
}

/// Which ground-truth pixels are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskPolicy {
    #[default]
    AllValidGt,
    NonOccluded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BadRate {
    pub threshold: f64,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub epe: f64,
    pub bad: Vec<BadRate>,
    pub n_evaluated: usize,
    /// Evaluated pixels whose prediction was invalid.
    pub n_invalid_pred: usize,
    pub mask_policy: MaskPolicy,
    pub invalid_policy: InvalidPolicy,
}

impl EvalResult {
    pub fn bad_at(&self, threshold: f64) -> Option<f64> {
        self.bad.iter().find(|b| b.threshold == threshold).map(|b| b.percent)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions<'a> {
    pub thresholds: &'a [f64],
    pub invalid: InvalidPolicy,
    /// Extra pixel mask (e.g. non-occluded pixels); `None` evaluates all
    /// valid ground truth.
    pub mask: Option<&'a [bool]>,
}

impl Default for EvalOptions<'_> {
    fn default() -> Self {
        Self {
            thresholds: &DEFAULT_THRESHOLDS,
            invalid: InvalidPolicy::default(),
            mask: None,
        }
    }
}

/// Evaluates with the penalty policy over all valid ground truth.
pub fn evaluate(pred: &DisparityMap, gt: &DisparityMap, thresholds: &[f64]) -> Result<EvalResult> {
    evaluate_with(
        pred,
        gt,
        &EvalOptions {
            thresholds,
            ..Default::default()
        },
    )
}

pub fn evaluate_with(pred: &DisparityMap, gt: &DisparityMap, opts: &EvalOptions) -> Result<EvalResult> {
    ensure_same_size("prediction", gt.dims(), pred.dims())?;
    if let Some(mask) = opts.mask {
        ensure_same_size("evaluation mask", (gt.values().len(), 1), (mask.len(), 1))?;
    }
    let mut thresholds = opts.thresholds.to_vec();
    thresholds.sort_by(f64::total_cmp);
    let mut sum = 0.0;
    let mut n = 0usize;
    let mut n_invalid = 0usize;
    let mut over = vec![0usize; thresholds.len()];
    let gv = gt.values();
    let pv = pred.values();
    for i in 0..gv.len() {
        if !gt.mask()[i] || opts.mask.is_some_and(|m| !m[i]) {
            continue;
        }
        if pred.mask()[i] {
            let e = (pv[i] - gv[i]).abs();
            sum += e;
            n += 1;
            for (c, &t) in over.iter_mut().zip(&thresholds) {
                if e > t {
                    *c += 1;
                }
            }
        } else if let InvalidPolicy::Penalty { epe_penalty } = opts.invalid {
            sum += epe_penalty;
            n += 1;
            n_invalid += 1;
            over.iter_mut().for_each(|c| *c += 1);
        }
    }
    if n == 0 {
        return Err(Error::EmptyGroundTruth);
    }
    Ok(EvalResult {
        epe: sum / n as f64,
        bad: thresholds
            .iter()
            .zip(&over)
            .map(|(&threshold, &c)| BadRate {
                threshold,
                percent: 100.0 * c as f64 / n as f64,
            })
            .collect(),
        n_evaluated: n,
        n_invalid_pred: n_invalid,
        mask_policy: if opts.mask.is_some() {
            MaskPolicy::NonOccluded
        } else {
            MaskPolicy::AllValidGt
        },
        invalid_policy: opts.invalid,
    })
}

/// One row of a comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub name: String,
    pub result: EvalResult,
    /// Per column (EPE, then each threshold): whether this row is best.
    pub best: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub thresholds: Vec<f64>,
    pub rows: Vec<ReportRow>,
}

fn columns(r: &EvalResult, thresholds: &[f64]) -> Vec<f64> {
    std::iter::once(r.epe)
        .chain(thresholds.iter().map(|&t| r.bad_at(t).unwrap_or(f64::NAN)))
        .collect()
}

/// Builds a report; the lowest value in each column is flagged (ties all
/// flagged). Thresholds are taken from the first row.
pub fn compare(table: &[(String, EvalResult)]) -> Result<Report> {
    let first = table
        .first()
        .ok_or_else(|| Error::InvalidParam("comparison table is empty".into()))?;
    let thresholds: Vec<f64> = first.1.bad.iter().map(|b| b.threshold).collect();
    let values: Vec<Vec<f64>> = table.iter().map(|(_, r)| columns(r, &thresholds)).collect();
    let best_per_col: Vec<f64> = (0..=thresholds.len())
        .map(|c| values.iter().map(|v| v[c]).filter(|v| !v.is_nan()).fold(f64::INFINITY, f64::min))
        .collect();
    let rows = table
        .iter()
        .zip(&values)
        .map(|((name, result), v)| ReportRow {
            name: name.clone(),
            result: result.clone(),
            best: v.iter().zip(&best_per_col).map(|(a, b)| a == b).collect(),
        })
        .collect();
    Ok(Report { thresholds, rows })
}

impl Report {
    fn header(&self) -> Vec<String> {
        std::iter::once("EPE".to_string())
            .chain(self.thresholds.iter().map(|t| format!("Bad{t:.1} (%)")))
            .collect()
    }

    fn cells(&self, row: &ReportRow) -> Vec<String> {
        columns(&row.result, &self.thresholds)
            .iter()
            .enumerate()
            .map(|(c, v)| if c == 0 { format!("{v:.3}") } else { format!("{v:.2}") })
            .collect()
    }

    /// Aligned table; best values carry a trailing `*`.
    pub fn to_text(&self) -> String {
        let header = self.header();
        let name_w = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(0).max("Method".len());
        let mut body: Vec<Vec<String>> = Vec::new();
        for row in &self.rows {
            body.push(
                self.cells(row)
                    .into_iter()
                    .zip(&row.best)
                    .map(|(c, &b)| if b { format!("{c}*") } else { format!("{c} ") })
                    .collect(),
            );
        }
        let col_w: Vec<usize> = (0..header.len())
            .map(|c| body.iter().map(|r| r[c].len()).chain([header[c].len() + 1]).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        let _ = write!(out, "{:<name_w$}", "Method");
        for (h, w) in header.iter().zip(&col_w) {
            let _ = write!(out, "  {:>w$}", format!("{h} "));
        }
        out.push('\n');
        for (row, cells) in self.rows.iter().zip(&body) {
            let _ = write!(out, "{:<name_w$}", row.name);
            for (c, w) in cells.iter().zip(&col_w) {
                let _ = write!(out, "  {c:>w$}");
            }
            out.push('\n');
        }
        out
    }

    /// CSV with one `_best` flag column per metric.
    pub fn to_csv(&self) -> String {
        let header = self.header();
        let mut out = String::from("method");
        for h in &header {
            let _ = write!(out, ",{h},{h} best");
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.name);
            for (c, b) in self.cells(row).iter().zip(&row.best) {
                let _ = write!(out, ",{c},{b}");
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (DisparityMap, DisparityMap) {
        let gt = DisparityMap::from_values(2, 2, vec![10.0, 20.0, 30.0, 40.0]).unwrap();
        let pred = DisparityMap::from_values(2, 2, vec![10.4, 19.3, 31.5, 37.0]).unwrap();
        (pred, gt)
    }

    #[test]
    fn hand_example() {
        let (pred, gt) = toy();
        let r = evaluate(&pred, &gt, &DEFAULT_THRESHOLDS).unwrap();
        assert!((r.epe - 1.4).abs() < 1e-12);
        assert_eq!(r.bad_at(0.5), Some(75.0));
        assert_eq!(r.bad_at(1.0), Some(50.0));
        assert_eq!(r.bad_at(2.0), Some(25.0));
        assert_eq!(r.n_evaluated, 4);
    }

    #[test]
    fn identity_and_shift_invariance() {
        let (pred, gt) = toy();
        let r = evaluate(&gt, &gt, &DEFAULT_THRESHOLDS).unwrap();
        assert_eq!(r.epe, 0.0);
        assert!(r.bad.iter().all(|b| b.percent == 0.0));
        let shift = |m: &DisparityMap| DisparityMap::from_values(2, 2, m.values().iter().map(|v| v + 4.0).collect()).unwrap();
        let a = evaluate(&pred, &gt, &DEFAULT_THRESHOLDS).unwrap();
        let b = evaluate(&shift(&pred), &shift(&gt), &DEFAULT_THRESHOLDS).unwrap();
        assert!((a.epe - b.epe).abs() < 1e-12);
        assert_eq!(a.bad, b.bad);
    }

    #[test]
    fn invalid_prediction_policies() {
        let gt = DisparityMap::from_values(2, 1, vec![5.0, 6.0]).unwrap();
        let mut pred = gt.clone();
        pred.invalidate(1, 0);
        let p = evaluate_with(
            &pred,
            &gt,
            &EvalOptions {
                invalid: InvalidPolicy::Penalty { epe_penalty: 64.0 },
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(p.epe, 32.0);
        assert!(p.bad.iter().all(|b| b.percent == 50.0));
        let s = evaluate_with(
            &pred,
            &gt,
            &EvalOptions {
                invalid: InvalidPolicy::Skip,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!((s.epe, s.n_evaluated), (0.0, 1));
    }

    #[test]
    fn mask_and_errors() {
        let (pred, gt) = toy();
        let mask = [true, false, false, true];
        let r = evaluate_with(
            &pred,
            &gt,
            &EvalOptions {
                mask: Some(&mask),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(r.n_evaluated, 2);
        assert_eq!(r.mask_policy, MaskPolicy::NonOccluded);
        assert!(matches!(
            evaluate(&pred, &DisparityMap::invalid(2, 2), &DEFAULT_THRESHOLDS),
            Err(Error::EmptyGroundTruth)
        ));
        assert!(matches!(
            evaluate(&DisparityMap::invalid(3, 2), &gt, &DEFAULT_THRESHOLDS),
            Err(Error::SizeMismatch { .. })
        ));
    }

    fn fixture(epe: f64, b05: f64, b1: f64, b2: f64) -> EvalResult {
        EvalResult {
            epe,
            bad: [(0.5, b05), (1.0, b1), (2.0, b2)]
                .iter()
                .map(|&(threshold, percent)| BadRate { threshold, percent })
                .collect(),
            n_evaluated: 1,
            n_invalid_pred: 0,
            mask_policy: MaskPolicy::AllValidGt,
            invalid_policy: InvalidPolicy::default(),
        }
    }

    #[test]
    fn single_row_is_best_everywhere() {
        let r = compare(&[("only".into(), fixture(1.0, 3.0, 2.0, 1.0))]).unwrap();
        assert!(r.rows[0].best.iter().all(|&b| b));
    }

    #[test]
    fn two_rows_flag_smaller_values() {
        let r = compare(&[
            ("a".into(), fixture(1.0, 30.0, 2.0, 1.5)),
            ("b".into(), fixture(2.0, 20.0, 3.0, 1.0)),
        ])
        .unwrap();
        assert_eq!(r.rows[0].best, vec![true, false, true, false]);
        assert_eq!(r.rows[1].best, vec![false, true, false, true]);
        assert!(compare(&[]).is_err());
    }

    #[test]
    fn projector_on_raft_rows() {
        let r = compare(&[
            ("RAFT-O".into(), fixture(2.498, 57.83, 37.70, 21.88)),
            ("RAFT-OM".into(), fixture(1.370, 49.23, 29.31, 14.60)),
            ("RAFT-OM-G".into(), fixture(0.811, 45.13, 16.08, 3.59)),
        ])
        .unwrap();
        assert_eq!(r.rows[2].best, vec![true; 4]);
        assert!(r.rows[..2].iter().all(|row| row.best.iter().all(|&b| !b)));
        let text = r.to_text();
        let last = text.lines().last().unwrap();
        assert!(last.starts_with("RAFT-OM-G"));
        assert!(last.contains("0.811*") && last.contains("3.59*"));
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().last().unwrap().starts_with("RAFT-OM-G,0.811,true,45.13,true"));
        assert_eq!(r.to_json()["rows"][2]["best"], serde_json::json!([true, true, true, true]));
    }
}
