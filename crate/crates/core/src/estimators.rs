//! The k-NN estimator and the weighted ensemble (WNN) estimator of the
//! Henze-Penrose divergence.
//!
//! Both count *dichotomous* points: points whose k-th nearest neighbor in the
//! pooled sample carries the other label. The k-NN estimate is
//! `1 - S (N + M) / (2 N M)` with `S` the count at a single `k`; the WNN
//! estimate uses `S = sum_l W(l) |E_{K(l)}|` over a [`WeightSchedule`].

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::neighbors::{build_index, NeighborIndex};
use crate::types::{
    divergence_from_count, validate_pair, EstimateParams, EstimateResult, JointSet, Method,
    PointCloud,
};
use crate::weights::{resolve_schedule, WeightSchedule};

/// Dichotomous counts per neighbor rank and their (weighted) total.
#[derive(Debug, Clone, PartialEq)]
pub struct DichotomousCount {
    pub total: f64,
    pub per_k: BTreeMap<usize, usize>,
}

/// Number of points whose `k`-th neighbor has the opposite label.
pub fn count_dichotomous(z: &JointSet, idx: &NeighborIndex<'_>, k: usize) -> Result<usize> {
    Ok(dichotomous_counts(z, idx, &[k])?[&k])
}

/// Dichotomous counts for several ranks at once.
///
/// Each point's neighbor list is fetched once up to the largest requested
/// rank, so the cost does not grow with the number of ranks.
pub fn dichotomous_counts(
    z: &JointSet,
    idx: &NeighborIndex<'_>,
    ks: &[usize],
) -> Result<BTreeMap<usize, usize>> {
    let mut counts: BTreeMap<usize, usize> = ks.iter().map(|&k| (k, 0)).collect();
    if ks.contains(&0) {
        return Err(Error::ZeroK);
    }
    let Some(k_max) = ks.iter().copied().max() else {
        return Ok(counts);
    };
    let available = z.len().saturating_sub(1);
    if k_max > available {
        return Err(Error::KTooLarge {
            k: k_max,
            available,
        });
    }
    for i in 0..z.len() {
        let own = z.label(i);
        let neighbors = idx.nearest(i, k_max)?;
        for (k, count) in counts.iter_mut() {
            if z.label(neighbors[k - 1].0) != own {
                *count += 1;
            }
        }
    }
    Ok(counts)
}

/// k-NN estimate of the divergence between `x` and `y`.
pub fn knn_estimate(
    x: &PointCloud,
    y: &PointCloud,
    k: usize,
    p: f64,
    clamp: bool,
) -> Result<EstimateResult> {
    let z = validate_pair(x, y, p)?;
    let idx = build_index(&z);
    let count = count_dichotomous(&z, &idx, k)?;
    Ok(EstimateResult {
        value: divergence_from_count(count as f64, z.n_x(), z.n_y(), clamp),
        method: Method::Knn,
        n: z.n_x(),
        m: z.n_y(),
        p,
        params: EstimateParams::Knn { k },
        clamped: clamp,
        ratio_warning: z.ratio_warning(),
    })
}

/// Weighted count `S = sum_l W(l) |E_{K(l)}|` for a resolved schedule.
pub fn weighted_count(
    z: &JointSet,
    idx: &NeighborIndex<'_>,
    schedule: &WeightSchedule,
) -> Result<DichotomousCount> {
    let mut seen = BTreeMap::new();
    for (&k, &l) in schedule.k_values.iter().zip(&schedule.l_values) {
        if let Some(first) = seen.insert(k, l) {
            return Err(Error::KCollision {
                first,
                second: l,
                k,
            });
        }
    }
    let per_k = dichotomous_counts(z, idx, &schedule.k_values)?;
    let total = schedule.terms().map(|(k, w)| w * per_k[&k] as f64).sum();
    Ok(DichotomousCount { total, per_k })
}

/// WNN estimate with an already resolved schedule.
pub fn wnn_estimate(
    x: &PointCloud,
    y: &PointCloud,
    schedule: &WeightSchedule,
    p: f64,
    clamp: bool,
) -> Result<EstimateResult> {
    let z = validate_pair(x, y, p)?;
    let idx = build_index(&z);
    let count = weighted_count(&z, &idx, schedule)?;
    Ok(EstimateResult {
        value: divergence_from_count(count.total, z.n_x(), z.n_y(), clamp),
        method: Method::Wnn,
        n: z.n_x(),
        m: z.n_y(),
        p,
        params: EstimateParams::Wnn(schedule.clone()),
        clamped: clamp,
        ratio_warning: z.ratio_warning(),
    })
}

/// WNN estimate that solves the weights and resolves `K(l)` from the sample
/// sizes and dimension of the inputs.
pub fn wnn_estimate_with(
    x: &PointCloud,
    y: &PointCloud,
    l_values: &[f64],
    p: f64,
    clamp: bool,
) -> Result<EstimateResult> {
    let schedule = resolve_schedule(l_values, x.dim(), x.len(), x.len() + y.len())?;
    wnn_estimate(x, y, &schedule, p, clamp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::solve_weights;

    fn hand_pair() -> (PointCloud, PointCloud) {
        (
            PointCloud::from_scalars(&[0.0, 2.0]).unwrap(),
            PointCloud::from_scalars(&[1.0, 3.0]).unwrap(),
        )
    }

    fn clusters(n: usize) -> (PointCloud, PointCloud) {
        let x: Vec<f64> = (0..n).map(|i| i as f64 * 0.01).collect();
        let y: Vec<f64> = (0..n).map(|i| 100.0 + i as f64 * 0.013).collect();
        (
            PointCloud::from_scalars(&x).unwrap(),
            PointCloud::from_scalars(&y).unwrap(),
        )
    }

    #[test]
    fn hand_counts() {
        let (x, y) = hand_pair();
        let z = validate_pair(&x, &y, 0.5).unwrap();
        let idx = build_index(&z);
        assert_eq!(count_dichotomous(&z, &idx, 1).unwrap(), 4);
        assert_eq!(count_dichotomous(&z, &idx, 2).unwrap(), 2);
        assert!(matches!(
            count_dichotomous(&z, &idx, 4),
            Err(Error::KTooLarge { k: 4, available: 3 })
        ));
    }

    #[test]
    fn hand_knn_values() {
        let (x, y) = hand_pair();
        assert_eq!(knn_estimate(&x, &y, 1, 0.5, false).unwrap().value, -1.0);
        assert_eq!(knn_estimate(&x, &y, 2, 0.5, false).unwrap().value, 0.0);
        let clamped = knn_estimate(&x, &y, 1, 0.5, true).unwrap();
        assert_eq!(clamped.value, 0.0);
        assert!(clamped.clamped);
    }

    #[test]
    fn hand_wnn_value() {
        let (x, y) = hand_pair();
        let est = wnn_estimate_with(&x, &y, &[1.0, 2.0], 0.5, false).unwrap();
        assert_eq!(est.value, -2.0);
        match est.params {
            EstimateParams::Wnn(s) => {
                assert_eq!(s.k_values, vec![1, 2]);
                assert_eq!(s.w, vec![2.0, -1.0]);
            }
            other => panic!("unexpected params {other:?}"),
        }
    }

    #[test]
    fn separated_clusters_give_one() {
        let (x, y) = clusters(10);
        let z = validate_pair(&x, &y, 0.5).unwrap();
        let idx = build_index(&z);
        for k in 1..10 {
            assert_eq!(count_dichotomous(&z, &idx, k).unwrap(), 0);
        }
        assert_eq!(knn_estimate(&x, &y, 5, 0.5, false).unwrap().value, 1.0);
        let est = wnn_estimate_with(&x, &y, &[1.0, 1.5, 2.0], 0.5, false).unwrap();
        assert_eq!(est.value, 1.0);
    }

    #[test]
    fn single_term_schedule_is_knn() {
        let (x, y) = clusters(9);
        let schedule = WeightSchedule {
            l_values: vec![1.0],
            d: 1,
            w: vec![1.0],
            k_values: vec![3],
            n: 9,
        };
        let wnn = wnn_estimate(&x, &y, &schedule, 0.5, false).unwrap();
        let knn = knn_estimate(&x, &y, 3, 0.5, false).unwrap();
        assert_eq!(wnn.value, knn.value);
    }

    #[test]
    fn duplicate_k_rejected() {
        let (x, y) = hand_pair();
        let schedule = WeightSchedule {
            l_values: vec![1.0, 1.2],
            d: 1,
            w: solve_weights(&[1.0, 1.2], 1).unwrap(),
            k_values: vec![1, 1],
            n: 2,
        };
        assert!(matches!(
            wnn_estimate(&x, &y, &schedule, 0.5, false),
            Err(Error::KCollision { k: 1, .. })
        ));
    }

    #[test]
    fn wnn_k_too_large() {
        let (x, y) = hand_pair();
        assert!(matches!(
            wnn_estimate_with(&x, &y, &[1.0, 2.0, 3.0], 0.5, false),
            Err(Error::KTooLarge { k: 4, available: 3 })
        ));
    }
}
