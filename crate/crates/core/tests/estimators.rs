use hpdiv::mst::mst_estimate;
use hpdiv::{knn_estimate, resolve_schedule, wnn_estimate, EstimateResult, PointCloud};
use proptest::prelude::*;

fn cloud(dim: usize, min: usize, max: usize) -> impl Strategy<Value = PointCloud> {
    (min..=max).prop_flat_map(move |n| {
        prop::collection::vec(-1.0f64..1.0, n * dim)
            .prop_map(move |data| PointCloud::new(dim, data).unwrap())
    })
}

fn pair() -> impl Strategy<Value = (PointCloud, PointCloud)> {
    (1usize..=3).prop_flat_map(|dim| (cloud(dim, 2, 25), cloud(dim, 2, 25)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn swapping_labels_and_priors((x, y) in pair(), k_frac in 0.0f64..1.0, p in 0.05f64..0.95) {
        let k = 1 + (k_frac * (x.len() + y.len() - 2) as f64) as usize;
        let a = knn_estimate(&x, &y, k, p, false).unwrap().value;
        let b = knn_estimate(&y, &x, k, 1.0 - p, false).unwrap().value;
        prop_assert_eq!(a, b);
        let a = mst_estimate(&x, &y, p, false).unwrap().value;
        let b = mst_estimate(&y, &x, 1.0 - p, false).unwrap().value;
        prop_assert_eq!(a, b);
    }

    #[test]
    fn single_k_range((x, y) in pair(), k_frac in 0.0f64..1.0) {
        let (n, m) = (x.len(), y.len());
        let k = 1 + (k_frac * (n + m - 2) as f64) as usize;
        let lower = EstimateResult::lower_limit(n, m);
        for v in [
            knn_estimate(&x, &y, k, 0.5, false).unwrap().value,
            mst_estimate(&x, &y, 0.5, false).unwrap().value,
        ] {
            prop_assert!(lower <= v && v <= 1.0, "{} not in [{}, 1]", v, lower);
        }
    }

    #[test]
    fn ensemble_identity((x, y) in pair(), l in prop::collection::vec(0.3f64..4.0, 2..=5)) {
        let d = x.dim().min(l.len() - 1);
        let Ok(schedule) = resolve_schedule(&l, d, x.len(), x.len() + y.len()) else {
            return Ok(());
        };
        let wnn = wnn_estimate(&x, &y, &schedule, 0.5, false).unwrap().value;
        let sum: f64 = schedule
            .terms()
            .map(|(k, w)| w * knn_estimate(&x, &y, k, 0.5, false).unwrap().value)
            .sum();
        let scale: f64 = schedule.w.iter().map(|w| w.abs()).sum::<f64>().max(1.0);
        prop_assert!((wnn - sum).abs() <= 1e-12 * scale * (1.0 + sum.abs()), "{} vs {}", wnn, sum);
    }

    #[test]
    fn clamped_estimates_in_unit_interval((x, y) in pair()) {
        for v in [
            knn_estimate(&x, &y, 1, 0.5, true).unwrap().value,
            mst_estimate(&x, &y, 0.5, true).unwrap().value,
        ] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}

#[test]
fn separated_clusters_reach_one() {
    let x =
        PointCloud::from_scalars(&(0..20).map(|i| i as f64 * 0.01).collect::<Vec<_>>()).unwrap();
    let y = PointCloud::from_scalars(&(0..20).map(|i| 100.0 + i as f64 * 0.01).collect::<Vec<_>>())
        .unwrap();
    assert_eq!(knn_estimate(&x, &y, 5, 0.5, false).unwrap().value, 1.0);
    let schedule = resolve_schedule(&[1.0, 2.0, 3.0], 1, 20, 40).unwrap();
    assert_eq!(
        wnn_estimate(&x, &y, &schedule, 0.5, false).unwrap().value,
        1.0
    );
}
