//! Domain types shared by every estimator: point clouds, the pooled sample,
//! the mixture parameter and estimate records.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::weights::WeightSchedule;

/// An ordered, nonempty set of finite points in `dim` dimensions.
///
/// Coordinates are stored row-major in one buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    data: Vec<f64>,
}

impl PointCloud {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        if data.is_empty() {
            return Err(Error::EmptyCloud);
        }
        if data.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: data.len() % dim,
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                point: pos / dim,
                axis: pos % dim,
            });
        }
        Ok(Self { dim, data })
    }

    /// Builds a cloud from rows; every row must have the same length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyCloud)?;
        let dim = first.as_ref().len();
        let mut data = Vec::with_capacity(dim * rows.len());
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(dim, data)
    }

    /// One-dimensional cloud from scalar values.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::new(1, values.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// New cloud holding the points at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            if i >= self.len() {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    len: self.len(),
                });
            }
            data.extend_from_slice(self.point(i));
        }
        Self::new(self.dim, data)
    }

    /// Squared Euclidean distance between points `i` and `j`.
    pub fn dist2(&self, i: usize, j: usize) -> f64 {
        sq_dist(self.point(i), self.point(j))
    }
}

/// Squared Euclidean distance, summed in coordinate order.
///
/// Every distance comparison in the crate goes through this function so that
/// ties are detected identically by the tree and by linear scans.
#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Which sample a pooled point came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Label {
    X,
    Y,
}

/// Raised when the sample sizes stray from `M = floor(N q / p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioWarning {
    pub n: usize,
    pub m: usize,
    pub expected_m: usize,
}

/// The pooled sample `Z = X ∪ Y`, X points first.
#[derive(Debug, Clone)]
pub struct JointSet {
    cloud: PointCloud,
    n_x: usize,
    n_y: usize,
    ratio_warning: Option<RatioWarning>,
}

impl JointSet {
    pub fn cloud(&self) -> &PointCloud {
        &self.cloud
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn len(&self) -> usize {
        self.n_x + self.n_y
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn label(&self, i: usize) -> Label {
        if i < self.n_x {
            Label::X
        } else {
            Label::Y
        }
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> + '_ {
        (0..self.len()).map(|i| self.label(i))
    }

    pub fn ratio_warning(&self) -> Option<RatioWarning> {
        self.ratio_warning
    }

    /// `(N + M) / (2 N M)`, the scale applied to dichotomous counts.
    pub fn count_scale(&self) -> f64 {
        count_scale(self.n_x, self.n_y)
    }
}

pub(crate) fn count_scale(n: usize, m: usize) -> f64 {
    (n + m) as f64 / (2.0 * n as f64 * m as f64)
}

/// Prior weight `p` of the first class, with `q = 1 - p` and `eta = p / q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixtureParam {
    p: f64,
    q: f64,
    eta: f64,
}

impl MixtureParam {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidP(p));
        }
        let q = 1.0 - p;
        Ok(Self { p, q, eta: p / q })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// `floor(N q / p)`, the second-sample size the estimators assume.
    pub fn matched_m(&self, n: usize) -> usize {
        (n as f64 * self.q / self.p).floor() as usize
    }
}

/// Pools `x` and `y` after checking shapes and `p`.
///
/// Any `(N, M)` is accepted; a [`RatioWarning`] is attached (and logged) when
/// `M` differs from `floor(N q / p)` by more than one.
pub fn validate_pair(x: &PointCloud, y: &PointCloud, p: f64) -> Result<JointSet> {
    let mix = MixtureParam::new(p)?;
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: y.dim(),
        });
    }
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let (n, m) = (x.len(), y.len());
    let expected_m = mix.matched_m(n);
    let ratio_warning = (m.abs_diff(expected_m) > 1).then(|| {
        log::warn!("sample sizes N={n}, M={m} deviate from floor(Nq/p)={expected_m}");
        RatioWarning { n, m, expected_m }
    });
    let mut data = Vec::with_capacity(x.as_flat().len() + y.as_flat().len());
    data.extend_from_slice(x.as_flat());
    data.extend_from_slice(y.as_flat());
    Ok(JointSet {
        cloud: PointCloud::new(x.dim(), data)?,
        n_x: n,
        n_y: m,
        ratio_warning,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Knn,
    Wnn,
    Mst,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Knn => "knn",
            Method::Wnn => "wnn",
            Method::Mst => "mst",
        })
    }
}

/// Method-specific parameters carried alongside an estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum EstimateParams {
    Knn { k: usize },
    Wnn(WeightSchedule),
    Mst {},
}

/// A divergence estimate plus the metadata needed to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateResult {
    pub value: f64,
    pub method: Method,
    pub n: usize,
    pub m: usize,
    pub p: f64,
    pub params: EstimateParams,
    /// Whether the value was clamped into `[0, 1]`.
    pub clamped: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio_warning: Option<RatioWarning>,
}

impl EstimateResult {
    /// Smallest value an unclamped estimate can take for these sample sizes.
    pub fn lower_limit(n: usize, m: usize) -> f64 {
        let total = (n + m) as f64;
        1.0 - total * total / (2.0 * n as f64 * m as f64)
    }
}

/// Maps a dichotomous (weighted) count to `1 - S (N + M) / (2 N M)`.
pub(crate) fn divergence_from_count(count: f64, n: usize, m: usize, clamp: bool) -> f64 {
    let value = 1.0 - count * count_scale(n, m);
    if clamp {
        value.clamp(0.0, 1.0)
    } else {
        value
    }
}
