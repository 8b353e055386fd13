//! Euclidean minimum spanning tree of the pooled sample and the
//! Friedman-Rafsky count of edges joining the two samples.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::types::{
    divergence_from_count, validate_pair, EstimateParams, EstimateResult, JointSet, Method,
    PointCloud,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    /// Smaller endpoint index.
    pub a: usize,
    /// Larger endpoint index.
    pub b: usize,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpanningTree {
    pub edges: Vec<Edge>,
}

impl SpanningTree {
    /// Sum of edge lengths, accumulated shortest first so that two trees with
    /// the same multiset of lengths report the same total bit for bit.
    pub fn total_length(&self) -> f64 {
        let mut lengths: Vec<f64> = self.edges.iter().map(|e| e.length).collect();
        lengths.sort_by(f64::total_cmp);
        lengths.iter().sum()
    }
}

/// Edge key `(squared length, min endpoint, max endpoint)`; a strict total
/// order over edges, so the tree is unique.
#[derive(Debug, Clone, Copy)]
struct Key {
    d2: f64,
    a: usize,
    b: usize,
}

impl Key {
    fn new(d2: f64, i: usize, j: usize) -> Self {
        Self {
            d2,
            a: i.min(j),
            b: i.max(j),
        }
    }

    fn cmp(&self, other: &Self) -> Ordering {
        self.d2
            .total_cmp(&other.d2)
            .then(self.a.cmp(&other.a))
            .then(self.b.cmp(&other.b))
    }
}

/// Dense O(n^2) Prim's algorithm over Euclidean edge weights.
pub fn build_emst(z: &JointSet) -> Result<SpanningTree> {
    emst(z.cloud())
}

pub fn emst(cloud: &PointCloud) -> Result<SpanningTree> {
    let n = cloud.len();
    if n < 2 {
        return Err(Error::TooFewPoints(n));
    }
    let mut in_tree = vec![false; n];
    let mut best: Vec<Option<(Key, usize)>> = vec![None; n];
    let mut edges = Vec::with_capacity(n - 1);
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        let mut next: Option<(Key, usize, usize)> = None;
        for v in 0..n {
            if in_tree[v] {
                continue;
            }
            let key = Key::new(cloud.dist2(current, v), current, v);
            match best[v] {
                Some((old, _)) if old.cmp(&key) != Ordering::Greater => {}
                _ => best[v] = Some((key, current)),
            }
            let (key, parent) = best[v].expect("just set");
            if next.is_none_or(|(k, _, _)| key.cmp(&k) == Ordering::Less) {
                next = Some((key, v, parent));
            }
        }
        let (key, v, _) = next.expect("graph is complete");
        in_tree[v] = true;
        edges.push(Edge {
            a: key.a,
            b: key.b,
            length: key.d2.sqrt(),
        });
        current = v;
    }
    Ok(SpanningTree { edges })
}

/// Number of tree edges whose endpoints carry different labels.
pub fn dichotomous_edges(z: &JointSet, tree: &SpanningTree) -> usize {
    tree.edges
        .iter()
        .filter(|e| z.label(e.a) != z.label(e.b))
        .count()
}

/// Friedman-Rafsky estimate: `1 - R (N + M) / (2 N M)` with `R` the number of
/// dichotomous MST edges.
pub fn mst_estimate(x: &PointCloud, y: &PointCloud, p: f64, clamp: bool) -> Result<EstimateResult> {
    let z = validate_pair(x, y, p)?;
    let tree = build_emst(&z)?;
    let r = dichotomous_edges(&z, &tree);
    Ok(EstimateResult {
        value: divergence_from_count(r as f64, z.n_x(), z.n_y(), clamp),
        method: Method::Mst,
        n: z.n_x(),
        m: z.n_y(),
        p,
        params: EstimateParams::Mst {},
        clamped: clamp,
        ratio_warning: z.ratio_warning(),
    })
}
