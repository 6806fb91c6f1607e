use krein_core::numerics::branches::{track_branches, SegmentLabel, TrackOptions};
use krein_core::numerics::roots::FnFamily;
use krein_core::sweep::{EigenvalueKind, SweepResult};
use num_complex::Complex64;
use proptest::prelude::*;

/// `((z − a)² + p − c)(z − d)`: a real pair meeting at `(p, z) = (c, a)`
/// next to a spectator root `d`.
fn family(a: f64, c: f64, d: f64) -> FnFamily<impl Fn(Complex64, f64) -> Complex64 + Sync> {
    FnFamily(move |z: Complex64, p: f64| ((z - a) * (z - a) + p - c) * (z - d))
}

fn sweep(a: f64, c: f64, d: f64, steps: usize) -> SweepResult {
    let grid: Vec<f64> = (0..steps)
        .map(|k| c - 1.0 + 2.0 * k as f64 / (steps - 1) as f64)
        .collect();
    let s = 1.0f64;
    let mut seeds = vec![
        Complex64::new(a - s, 0.0),
        Complex64::new(a + s, 0.0),
        Complex64::new(d, 0.0),
    ];
    seeds.sort_by(|x, y| x.re.total_cmp(&y.re));
    let tracked = track_branches(
        &family(a, c, d),
        "p",
        &grid,
        &seeds,
        &TrackOptions::default(),
    )
    .unwrap();
    SweepResult::new("toy", "p", EigenvalueKind::Direct, grid, tracked)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn pair_coalesces_once(a in -5.0..5.0f64, c in -3.0..3.0f64, gap in 4.0..10.0f64, steps in 6usize..40) {
        let d = a + gap;
        let result = sweep(a, c, d, steps);
        prop_assert_eq!(result.exceptional_points.len(), 1);
        let ep = result.exceptional_points[0];
        prop_assert!((ep.parameter - c).abs() < 1e-5, "{ep:?}");
        prop_assert!((ep.eigenvalue - a).norm() < 1e-3, "{ep:?}");
        prop_assert!(result.verify_exceptional_points(&family(a, c, d), 1e-4).unwrap().iter().all(|&v| v));
    }

    #[test]
    fn complex_pairs_are_conjugate(a in -5.0..5.0f64, c in -3.0..3.0f64, steps in 6usize..40) {
        let result = sweep(a, c, a + 6.0, steps);
        let rows = result.rows(false);
        prop_assert_eq!(rows.len(), 3 * steps);
        for r in rows.iter().filter(|r| r.segment_label == SegmentLabel::ComplexPair) {
            // A grid point on the exceptional point resolves the pair only to ~√ε.
            prop_assert!(r.parameter >= c - 1e-12);
            let partner = rows.iter().find(|o| {
                o.parameter == r.parameter && o.level != r.level && (o.re_e - r.re_e).abs() + (o.im_e + r.im_e).abs() < 1e-6
            });
            prop_assert!(partner.is_some(), "{r:?}");
        }
        let upper = result.rows(true);
        prop_assert!(upper
            .iter()
            .all(|r| r.segment_label != SegmentLabel::ComplexPair || r.im_e >= 0.0));
    }

    #[test]
    fn json_round_trip(a in -5.0..5.0f64, c in -3.0..3.0f64, steps in 6usize..40) {
        let result = sweep(a, c, a + 6.0, steps);
        let back = SweepResult::from_json(&result.to_json().unwrap()).unwrap();
        prop_assert_eq!(&back, &result);
        prop_assert_eq!(back.to_csv_string(false).unwrap(), result.to_csv_string(false).unwrap());
    }
}
