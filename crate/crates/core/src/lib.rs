//! Graph-based estimators of the Henze-Penrose divergence between two
//! multivariate samples, with Bayes error bounds and a Monte Carlo harness.
//!
//! Three estimators share the affine map `1 - S (N + M) / (2 N M)` from a
//! count `S` of edges joining the two samples:
//!
//! - [`estimators::knn_estimate`]: `S` counts points whose k-th nearest
//!   neighbor in the pooled sample belongs to the other sample.
//! - [`estimators::wnn_estimate`]: `S` is a weighted sum of such counts at
//!   `K(l) = floor(l sqrt(N))`, with minimum-norm weights from
//!   [`weights::solve_weights`] that cancel the leading bias terms.
//! - [`mst::mst_estimate`]: `S` counts minimum spanning tree edges joining
//!   the samples (the Friedman-Rafsky statistic).

pub mod bench;
pub mod error;
pub mod estimators;
pub mod io;
pub mod mst;
pub mod neighbors;
pub mod oracle;
pub mod synth;
pub mod types;
pub mod weights;

pub use error::{Error, Result};
pub use estimators::{knn_estimate, wnn_estimate, wnn_estimate_with};
pub use mst::mst_estimate;
pub use oracle::{bayes_bounds, true_divergence, BayesBounds, DistributionSpec};
pub use types::{validate_pair, EstimateParams, EstimateResult, JointSet, Method, PointCloud};
pub use weights::{default_l_values, resolve_schedule, solve_weights, WeightSchedule};
