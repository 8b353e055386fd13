//! Exact k-th nearest neighbor queries over a pooled sample.
//!
//! Neighbors of a point are ranked by `(squared distance, global index)`, so
//! equidistant points resolve to the lower index and every query has a single
//! well-defined answer. The query point itself is never returned.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::types::{sq_dist, JointSet, PointCloud};

const LEAF_SIZE: usize = 12;

#[derive(Debug, Clone, Copy)]
struct Candidate {
    d2: f64,
    index: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2
            .total_cmp(&other.d2)
            .then(self.index.cmp(&other.index))
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// KD-tree over a point cloud answering exact k-NN queries.
#[derive(Debug, Clone)]
pub struct NeighborIndex<'a> {
    cloud: &'a PointCloud,
    perm: Vec<usize>,
    nodes: Vec<Node>,
}

/// Builds the neighbor index over the pooled sample.
pub fn build_index(z: &JointSet) -> NeighborIndex<'_> {
    NeighborIndex::new(z.cloud())
}

impl<'a> NeighborIndex<'a> {
    pub fn new(cloud: &'a PointCloud) -> Self {
        let mut index = Self {
            cloud,
            perm: (0..cloud.len()).collect(),
            nodes: Vec::new(),
        };
        let len = index.perm.len();
        index.build(0, len);
        index
    }

    pub fn len(&self) -> usize {
        self.cloud.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cloud.is_empty()
    }

    pub fn cloud(&self) -> &'a PointCloud {
        self.cloud
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let axis = self.widest_axis(start, end);
        let cloud = self.cloud;
        let mid = start + (end - start) / 2;
        self.perm[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            cloud.point(a)[axis].total_cmp(&cloud.point(b)[axis])
        });
        let value = cloud.point(self.perm[mid])[axis];
        // Placeholder; children are filled in once their ids are known.
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    fn widest_axis(&self, start: usize, end: usize) -> usize {
        let dim = self.cloud.dim();
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for &i in &self.perm[start..end] {
            for (axis, &v) in self.cloud.point(i).iter().enumerate() {
                lo[axis] = lo[axis].min(v);
                hi[axis] = hi[axis].max(v);
            }
        }
        (0..dim)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap_or(0)
    }

    fn check(&self, i: usize, k: usize) -> Result<()> {
        let len = self.len();
        if i >= len {
            return Err(Error::IndexOutOfRange { index: i, len });
        }
        if k == 0 {
            return Err(Error::ZeroK);
        }
        if k > len - 1 {
            return Err(Error::KTooLarge {
                k,
                available: len - 1,
            });
        }
        Ok(())
    }

    /// The `k` nearest neighbors of point `i` (self excluded), closest first,
    /// as `(index, squared distance)` pairs.
    pub fn nearest(&self, i: usize, k: usize) -> Result<Vec<(usize, f64)>> {
        self.check(i, k)?;
        let query = self.cloud.point(i);
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.search(0, query, i, k, &mut heap);
        Ok(heap
            .into_sorted_vec()
            .into_iter()
            .map(|c| (c.index, c.d2))
            .collect())
    }

    /// Index of the point at rank `k` among the neighbors of point `i`.
    pub fn kth_neighbor(&self, i: usize, k: usize) -> Result<usize> {
        Ok(self.nearest(i, k)?[k - 1].0)
    }

    fn search(
        &self,
        node: usize,
        query: &[f64],
        exclude: usize,
        k: usize,
        heap: &mut BinaryHeap<Candidate>,
    ) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &j in &self.perm[start..end] {
                    if j == exclude {
                        continue;
                    }
                    let cand = Candidate {
                        d2: sq_dist(query, self.cloud.point(j)),
                        index: j,
                    };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if heap.peek().is_some_and(|worst| cand < *worst) {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = query[axis] - value;
                let (near, far) = if diff < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search(near, query, exclude, k, heap);
                // Equal bounds are still visited: a lower-index tie may live there.
                let bound = diff * diff;
                if heap.len() < k || heap.peek().is_some_and(|worst| bound <= worst.d2) {
                    self.search(far, query, exclude, k, heap);
                }
            }
        }
    }
}

/// Linear-scan reference for [`NeighborIndex::nearest`], O(n log n) per query.
pub fn nearest_linear(cloud: &PointCloud, i: usize, k: usize) -> Result<Vec<(usize, f64)>> {
    let len = cloud.len();
    if i >= len {
        return Err(Error::IndexOutOfRange { index: i, len });
    }
    if k == 0 {
        return Err(Error::ZeroK);
    }
    if k > len - 1 {
        return Err(Error::KTooLarge {
            k,
            available: len - 1,
        });
    }
    let mut all: Vec<Candidate> = (0..len)
        .filter(|&j| j != i)
        .map(|j| Candidate {
            d2: cloud.dist2(i, j),
            index: j,
        })
        .collect();
    all.sort_unstable();
    Ok(all[..k].iter().map(|c| (c.index, c.d2)).collect())
}

/// Linear-scan reference for [`NeighborIndex::kth_neighbor`].
pub fn kth_neighbor_linear(cloud: &PointCloud, i: usize, k: usize) -> Result<usize> {
    Ok(nearest_linear(cloud, i, k)?[k - 1].0)
}
