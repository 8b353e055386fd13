mod common;

use hpdiv::weights::k_for_l;
use hpdiv::{default_l_values, resolve_schedule, solve_weights, Error};
use proptest::prelude::*;

use common::{check_min_norm, rng};

fn l_set(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.25f64.ln()..64f64.ln(), d + 1..=d + 4)
        .prop_map(|logs| logs.into_iter().map(f64::exp).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn feasible_and_minimal(d in 1usize..=5, seed in any::<u64>(), l in (1usize..=5).prop_flat_map(l_set)) {
        let d = d.min(l.len() - 1);
        match solve_weights(&l, d) {
            Ok(w) => {
                let mut rng = rng(seed);
                if let Err(msg) = check_min_norm(&mut rng, &l, d, &w) {
                    return Err(TestCaseError::fail(msg));
                }
            }
            Err(Error::SingularConstraints { rcond }) => prop_assert!(rcond < 1e-12),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }

    #[test]
    fn weights_do_not_depend_on_n(n in 4usize..5000, extra in 0usize..100) {
        let l = default_l_values(2, None);
        let w = solve_weights(&l, 2).unwrap();
        if let Ok(schedule) = resolve_schedule(&l, 2, n, 2 * n + extra) {
            prop_assert_eq!(&schedule.w, &w);
            prop_assert_eq!(schedule.k_values, k_for_l(&l, n));
        }
    }
}

#[test]
fn four_point_grid_in_two_dimensions() {
    let l = [1.0, 2.0, 3.0, 4.0];
    let w = solve_weights(&l, 2).unwrap();
    check_min_norm(&mut rng(1), &l, 2, &w).unwrap();
    let reference = common::pinv_weights(&l, 2);
    for (a, b) in w.iter().zip(reference.iter()) {
        approx::assert_abs_diff_eq!(*a, *b, epsilon = 1e-10);
    }
}

#[test]
fn default_grids_are_minimal_where_admissible() {
    for d in 1..=4 {
        let l = default_l_values(d, None);
        let w = solve_weights(&l, d).unwrap();
        check_min_norm(&mut rng(d as u64), &l, d, &w).unwrap();
    }
    assert!(matches!(
        solve_weights(&default_l_values(5, None), 5),
        Err(Error::SingularConstraints { .. })
    ));
}
