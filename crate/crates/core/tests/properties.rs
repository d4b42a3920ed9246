use monostereo::geometry::RigModel;
use monostereo::io::{decode_pfm, encode_pfm};
use monostereo::metrics::{evaluate_with, EvalOptions, InvalidPolicy};
use monostereo::msl::{hamming_band, window_count, BinaryImage, ShiftRange};
use monostereo::stereo::{
    left_right_check, modulate_cost_volume, normalized_correlation, CorrelationForm, CostVolume, GuidanceMap,
    GuidanceParams,
};
use monostereo::DisparityMap;
use proptest::prelude::*;

fn rig(bm: f64, f: f64, z_ref: f64) -> RigModel {
    let mut r = RigModel {
        msl_baseline: bm,
        z_ref,
        ..Default::default()
    };
    r.ir_cam.fx = f;
    r.ir_cam.fy = f;
    r
}

proptest! {
    #[test]
    fn msl_depth_round_trips(bm in 0.02..0.2f64, f in 200.0..2000.0f64, z_ref in 0.3..3.0f64, z in 0.2..10.0f64) {
        let r = rig(bm, f, z_ref);
        let back = r.msl_depth_of(r.msl_disparity_of(z)).unwrap();
        prop_assert!((back - z).abs() <= 1e-9 * z);
    }

    #[test]
    fn msl_depth_increases_with_disparity(bm in 0.02..0.2f64, f in 200.0..2000.0f64, d in -200.0..20.0f64, step in 0.01..5.0f64) {
        let r = rig(bm, f, 0.8);
        if let (Some(a), Some(b)) = (r.msl_depth_of(d), r.msl_depth_of(d + step)) {
            prop_assert!(b > a);
        }
    }

    #[test]
    fn correlation_stays_in_unit_interval(
        a in prop::collection::vec(-100.0..100.0f32, 1..40),
        b in prop::collection::vec(-100.0..100.0f32, 1..40),
    ) {
        let n = a.len().min(b.len());
        for form in [CorrelationForm::Printed, CorrelationForm::Cosine] {
            let s = normalized_correlation(&a[..n], &b[..n], 1e-6, form);
            prop_assert!((0.0..=1.0).contains(&s));
        }
    }

    #[test]
    fn modulation_peaks_at_the_hint(c in 0.05..1.0f32, hint in 0.0..31.0f64, lambda in 1.5..20.0f64, sigma in 0.3..4.0f64) {
        let vol = CostVolume::from_fn(1, 1, 32, |_, _, _| c);
        let guide = GuidanceMap::from_parts(1, 1, vec![hint], vec![true]).unwrap();
        let p = GuidanceParams { lambda, sigma, ..Default::default() };
        let out = modulate_cost_volume(&vol, &guide, &p).unwrap();
        let cell = out.slice(0, 0);
        let argmax = (0..32).max_by(|&i, &j| cell[i].total_cmp(&cell[j])).unwrap();
        prop_assert!((argmax as f64 - hint).abs() <= 0.5 + 1e-9);
    }

    #[test]
    fn unhinted_cells_are_untouched(scores in prop::collection::vec(0.0..1.0f32, 24), mask in prop::collection::vec(any::<bool>(), 4)) {
        let vol = CostVolume::from_scores(2, 2, 6, scores).unwrap();
        let guide = GuidanceMap::from_parts(2, 2, vec![2.0; 4], mask.clone()).unwrap();
        let out = modulate_cost_volume(&vol, &guide, &GuidanceParams::default()).unwrap();
        for (i, &hinted) in mask.iter().enumerate() {
            let (x, y) = (i % 2, i / 2);
            if !hinted {
                prop_assert_eq!(out.slice(x, y), vol.slice(x, y));
            }
        }
    }

    #[test]
    fn bad_rate_falls_with_threshold_and_ignores_order(
        pairs in prop::collection::vec((0.0..60.0f64, -5.0..5.0f64, any::<bool>()), 1..60),
        rot in 0usize..60,
    ) {
        let n = pairs.len();
        let gt: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let pred: Vec<f64> = pairs.iter().map(|p| p.0 + p.1).collect();
        let valid: Vec<bool> = pairs.iter().map(|p| p.2).collect();
        let thresholds = [0.25, 0.5, 1.0, 2.0, 4.0];
        let opts = EvalOptions { thresholds: &thresholds, invalid: InvalidPolicy::Penalty { epe_penalty: 64.0 }, mask: None };
        let run = |gt: Vec<f64>, pred: Vec<f64>, valid: Vec<bool>| {
            let gt = DisparityMap::from_values(n, 1, gt).unwrap();
            let pred = DisparityMap::from_parts(n, 1, pred, valid).unwrap();
            evaluate_with(&pred, &gt, &opts).unwrap()
        };
        let r = run(gt.clone(), pred.clone(), valid.clone());
        for w in r.bad.windows(2) {
            prop_assert!(w[1].percent <= w[0].percent);
        }
        let k = rot % n;
        let (mut gt, mut pred, mut valid) = (gt, pred, valid);
        gt.rotate_left(k);
        pred.rotate_left(k);
        valid.rotate_left(k);
        let s = run(gt, pred, valid);
        prop_assert!((r.epe - s.epe).abs() < 1e-9);
        for (a, b) in r.bad.iter().zip(&s.bad) {
            prop_assert!((a.percent - b.percent).abs() < 1e-9);
        }
    }

    #[test]
    fn pfm_round_trip(values in prop::collection::vec(-1e4..1e4f64, 12), valid in prop::collection::vec(any::<bool>(), 12)) {
        let bytes = encode_pfm(4, 3, &values, &valid);
        let back = decode_pfm(&bytes).unwrap();
        prop_assert_eq!((back.width, back.height), (4, 3));
        for i in 0..12 {
            prop_assert_eq!(back.valid[i], valid[i]);
            if valid[i] {
                prop_assert_eq!(back.values[i], values[i] as f32);
            }
        }
    }

    #[test]
    fn packed_hamming_matches_bit_counting(
        bits in prop::collection::vec(any::<bool>(), 2 * 70 * 9),
        radius in 1usize..4,
    ) {
        let (w, h) = (70, 9);
        let live = BinaryImage::from_fn(w, h, |x, y| bits[y * w + x]);
        let refr = BinaryImage::from_fn(w, h, |x, y| bits[w * h + y * w + x]);
        let shifts = ShiftRange::new(-5, 5);
        let band = hamming_band(&live, &refr, shifts, radius, 0..h);
        for y in 0..h {
            for x in 0..w {
                for (di, d) in shifts.iter().enumerate() {
                    let mut c = 0;
                    let mut n = 0;
                    for yy in y.saturating_sub(radius)..(y + radius + 1).min(h) {
                        for xx in x.saturating_sub(radius)..(x + radius + 1).min(w) {
                            let xr = xx as i64 - d as i64;
                            if (0..w as i64).contains(&xr) {
                                n += 1;
                                c += u32::from(live.get(xx, yy) != refr.get(xr as usize, yy));
                            }
                        }
                    }
                    prop_assert_eq!(band.get(x, y, di), c);
                    prop_assert_eq!(window_count(w, h, radius, x, y, d), n);
                }
            }
        }
    }

    #[test]
    fn lrc_only_removes_pixels(
        left in prop::collection::vec(prop::option::of(0.0..8.0f64), 24),
        right in prop::collection::vec(prop::option::of(0.0..8.0f64), 24),
        tol in 0.0..2.0f64,
    ) {
        let map = |v: &[Option<f64>]| DisparityMap::from_fn(8, 3, |x, y| v[y * 8 + x]);
        let (l, r) = (map(&left), map(&right));
        let out = left_right_check(&l, &r, tol);
        for (x, y, d) in out.iter_valid() {
            prop_assert_eq!(l.get(x, y), Some(d));
        }
        prop_assert!(out.valid_count() <= l.valid_count());
    }
}
