//! Seeded samplers for the synthetic densities in [`crate::oracle`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::oracle::{DistKind, DistributionSpec};
use crate::types::PointCloud;

/// Draws per acceptance-rate check of the rejection sampler.
const PROBE_BATCH: u64 = 100_000;
const MIN_ACCEPTANCE: f64 = 1e-4;

/// A density paired with its own ChaCha stream.
#[derive(Debug, Clone)]
pub struct SamplerState {
    spec: DistributionSpec,
    seed: u64,
    rng: ChaCha8Rng,
}

impl SamplerState {
    pub fn new(spec: DistributionSpec, seed: u64) -> Self {
        Self {
            spec,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Stream for one trial of an experiment: seeded with `base_seed ^ trial`.
    pub fn for_trial(spec: DistributionSpec, base_seed: u64, trial: u64) -> Self {
        Self::new(spec, base_seed ^ trial)
    }

    pub fn spec(&self) -> &DistributionSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Draws `n` i.i.d. points. Truncated normals are sampled by rejection
    /// from the untruncated Gaussian.
    pub fn sample(&mut self, n: usize) -> Result<PointCloud> {
        if n == 0 {
            return Err(Error::EmptyCloud);
        }
        let dim = self.spec.dim();
        let mut data = Vec::with_capacity(n * dim);
        let mut point = vec![0.0; dim];
        let mut attempts: u64 = 0;
        let mut accepted: u64 = 0;
        while accepted < n as u64 {
            match self.spec.kind() {
                DistKind::UniformBox => {
                    for (slot, axis) in point.iter_mut().zip(self.spec.axes()) {
                        let (lo, hi) = axis.bounds();
                        *slot = self.rng.random_range(lo..hi);
                    }
                }
                DistKind::TruncatedNormal => {
                    for (slot, axis) in point.iter_mut().zip(self.spec.axes()) {
                        let (mean, sigma) = axis.normal_params().expect("normal axis");
                        let z: f64 = self.rng.sample(StandardNormal);
                        *slot = mean + sigma * z;
                    }
                }
            }
            attempts += 1;
            if self.spec.contains(&point) {
                accepted += 1;
                data.extend_from_slice(&point);
            }
            if attempts % PROBE_BATCH == 0 {
                let rate = accepted as f64 / attempts as f64;
                if rate < MIN_ACCEPTANCE {
                    return Err(Error::RejectionStall { rate, attempts });
                }
            }
        }
        PointCloud::new(dim, data)
    }
}
