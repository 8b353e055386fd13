//! Ground-truth divergence by deterministic quadrature, and Bayes error bounds.
//!
//! Densities are products of per-axis marginals (a truncated normal with
//! diagonal covariance, or a uniform box), so axes on which both densities
//! agree integrate out of the divergence integral exactly and only the
//! remaining axes are put on a tensor grid.

use serde::Serialize;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::types::MixtureParam;

/// Largest number of non-separable axes the tensor-grid quadrature accepts.
pub const MAX_QUADRATURE_DIM: usize = 3;
const REFINE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Normal { mean: f64, sigma: f64, mass: f64 },
    Uniform,
}

/// One coordinate of a product density, supported on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    lo: f64,
    hi: f64,
    shape: Shape,
}

impl Axis {
    fn normal(mean: f64, sigma: f64, lo: f64, hi: f64) -> Result<Self> {
        check_bounds(lo, hi)?;
        if !(sigma.is_finite() && sigma > 0.0 && mean.is_finite()) {
            return Err(Error::InvalidDistribution(format!(
                "need finite mean and positive sigma, got mean={mean}, sigma={sigma}"
            )));
        }
        let std = Normal::standard();
        let mass = std.cdf((hi - mean) / sigma) - std.cdf((lo - mean) / sigma);
        if !(mass > 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "truncation box [{lo}, {hi}] holds no mass of N({mean}, {sigma}^2)"
            )));
        }
        Ok(Self {
            lo,
            hi,
            shape: Shape::Normal { mean, sigma, mass },
        })
    }

    fn uniform(lo: f64, hi: f64) -> Result<Self> {
        check_bounds(lo, hi)?;
        Ok(Self {
            lo,
            hi,
            shape: Shape::Uniform,
        })
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn density(&self, x: f64) -> f64 {
        if x < self.lo || x > self.hi {
            return 0.0;
        }
        match self.shape {
            Shape::Normal { mean, sigma, mass } => {
                Normal::standard().pdf((x - mean) / sigma) / (sigma * mass)
            }
            Shape::Uniform => 1.0 / (self.hi - self.lo),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return 1.0;
        }
        match self.shape {
            Shape::Normal { mean, sigma, mass } => {
                let std = Normal::standard();
                (std.cdf((x - mean) / sigma) - std.cdf((self.lo - mean) / sigma)) / mass
            }
            Shape::Uniform => (x - self.lo) / (self.hi - self.lo),
        }
    }

    /// Untruncated normal parameters, if this axis is a truncated normal.
    pub fn normal_params(&self) -> Option<(f64, f64)> {
        match self.shape {
            Shape::Normal { mean, sigma, .. } => Some((mean, sigma)),
            Shape::Uniform => None,
        }
    }
}

fn check_bounds(lo: f64, hi: f64) -> Result<()> {
    if lo.is_finite() && hi.is_finite() && lo < hi {
        Ok(())
    } else {
        Err(Error::InvalidDistribution(format!(
            "box bounds must be finite with lo < hi, got [{lo}, {hi}]"
        )))
    }
}

/// Which family a [`DistributionSpec`] belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistKind {
    TruncatedNormal,
    UniformBox,
}

/// Analytic product density on an axis-aligned box.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionSpec {
    kind: DistKind,
    axes: Vec<Axis>,
}

impl DistributionSpec {
    /// Normal with mean `mean` and per-axis standard deviations `sigma`,
    /// truncated to `bounds` and renormalized.
    pub fn truncated_normal(mean: &[f64], sigma: &[f64], bounds: &[(f64, f64)]) -> Result<Self> {
        if mean.is_empty() {
            return Err(Error::InvalidDistribution(
                "dimension must be at least 1".into(),
            ));
        }
        if sigma.len() != mean.len() || bounds.len() != mean.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                found: if sigma.len() != mean.len() {
                    sigma.len()
                } else {
                    bounds.len()
                },
            });
        }
        let axes = mean
            .iter()
            .zip(sigma)
            .zip(bounds)
            .map(|((&m, &s), &(lo, hi))| Axis::normal(m, s, lo, hi))
            .collect::<Result<_>>()?;
        Ok(Self {
            kind: DistKind::TruncatedNormal,
            axes,
        })
    }

    /// Isotropic truncated normal: every axis has standard deviation `sigma`
    /// and the box `[lo, hi]`.
    pub fn isotropic_normal(mean: &[f64], sigma: f64, lo: f64, hi: f64) -> Result<Self> {
        let d = mean.len();
        Self::truncated_normal(mean, &vec![sigma; d], &vec![(lo, hi); d])
    }

    pub fn uniform(bounds: &[(f64, f64)]) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidDistribution(
                "dimension must be at least 1".into(),
            ));
        }
        let axes = bounds
            .iter()
            .map(|&(lo, hi)| Axis::uniform(lo, hi))
            .collect::<Result<_>>()?;
        Ok(Self {
            kind: DistKind::UniformBox,
            axes,
        })
    }

    pub fn kind(&self) -> DistKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && self
                .axes
                .iter()
                .zip(x)
                .all(|(a, &v)| v >= a.lo && v <= a.hi)
    }

    /// Normalized density at `x`; zero outside the box.
    pub fn density(&self, x: &[f64]) -> f64 {
        if x.len() != self.dim() {
            return 0.0;
        }
        self.axes
            .iter()
            .zip(x)
            .map(|(a, &v)| a.density(v))
            .product()
    }
}

fn default_grid(dim: usize) -> usize {
    match dim {
        1 => 2001,
        2 => 401,
        _ => 101,
    }
}

fn grid_cap(dim: usize) -> usize {
    match dim {
        1 => 128_001,
        2 => 1601,
        _ => 201,
    }
}

/// Trapezoid rule for `sum_grid w(x) * F(fx(x), fy(x))` over the product
/// grids, where `fx` and `fy` are products of the per-axis marginals.
fn trapezoid<F>(fx: &[&Axis], fy: &[&Axis], points: usize, integrand: &F) -> f64
where
    F: Fn(f64, f64) -> f64,
{
    let dim = fx.len();
    // Per-axis nodes, weights and marginal values.
    let mut weights = Vec::with_capacity(dim);
    let mut fvals = Vec::with_capacity(dim);
    let mut gvals = Vec::with_capacity(dim);
    for (a, b) in fx.iter().zip(fy) {
        let lo = a.lo.min(b.lo);
        let hi = a.hi.max(b.hi);
        let h = (hi - lo) / (points - 1) as f64;
        let nodes: Vec<f64> = (0..points).map(|i| lo + h * i as f64).collect();
        let mut w = vec![h; points];
        w[0] = h / 2.0;
        w[points - 1] = h / 2.0;
        weights.push(w);
        fvals.push(nodes.iter().map(|&x| a.density(x)).collect::<Vec<_>>());
        gvals.push(nodes.iter().map(|&x| b.density(x)).collect::<Vec<_>>());
    }
    let mut total = 0.0;
    let mut idx = vec![0usize; dim];
    loop {
        let mut w = 1.0;
        let mut f = 1.0;
        let mut g = 1.0;
        for (axis, &i) in idx.iter().enumerate() {
            w *= weights[axis][i];
            f *= fvals[axis][i];
            g *= gvals[axis][i];
        }
        total += w * integrand(f, g);
        // Odometer increment, last axis fastest.
        let mut axis = dim;
        loop {
            if axis == 0 {
                return total;
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < points {
                break;
            }
            idx[axis] = 0;
        }
    }
}

/// Integrates `integrand(f_X, f_Y)` over the axes where the two densities
/// differ, refining the grid by interval doubling until successive values
/// agree to `1e-6` or the per-dimension cap is hit.
fn integrate_pair<F>(
    fx: &DistributionSpec,
    fy: &DistributionSpec,
    grid: Option<usize>,
    integrand: F,
) -> Result<Option<f64>>
where
    F: Fn(f64, f64) -> f64,
{
    if fx.dim() != fy.dim() {
        return Err(Error::DimensionMismatch {
            expected: fx.dim(),
            found: fy.dim(),
        });
    }
    let (ax, ay): (Vec<&Axis>, Vec<&Axis>) =
        fx.axes.iter().zip(&fy.axes).filter(|(a, b)| a != b).unzip();
    let dim = ax.len();
    if dim == 0 {
        return Ok(None);
    }
    if dim > MAX_QUADRATURE_DIM {
        return Err(Error::DimTooHigh(dim));
    }
    if ax.iter().zip(&ay).any(|(a, b)| a.bounds() != b.bounds()) {
        log::warn!("supports differ; integrating over the union of the boxes");
    }
    let mut points = grid.unwrap_or_else(|| default_grid(dim)).max(3);
    let cap = grid_cap(dim).max(points);
    let mut value = trapezoid(&ax, &ay, points, &integrand);
    while 2 * points - 1 <= cap {
        points = 2 * points - 1;
        let refined = trapezoid(&ax, &ay, points, &integrand);
        let delta = (refined - value).abs();
        value = refined;
        if delta < REFINE_TOL {
            break;
        }
    }
    Ok(Some(value))
}

/// Henze-Penrose divergence `1 - ∫ f_X f_Y / (p f_X + q f_Y)` by quadrature.
///
/// `grid` is the starting number of nodes per axis; `None` picks 2001, 401 or
/// 101 for one, two or three non-separable axes.
pub fn true_divergence(
    fx: &DistributionSpec,
    fy: &DistributionSpec,
    p: f64,
    grid: Option<usize>,
) -> Result<f64> {
    let mix = MixtureParam::new(p)?;
    let (p, q) = (mix.p(), mix.q());
    let overlap = integrate_pair(fx, fy, grid, |f, g| {
        let denom = p * f + q * g;
        if denom > 0.0 {
            f * g / denom
        } else {
            0.0
        }
    })?;
    // Identical densities: the integrand is f itself and integrates to one.
    Ok(overlap.map_or(0.0, |v| 1.0 - v))
}

/// Bayes error `∫ min(p f_X, q f_Y)` of the two-class problem, by quadrature.
pub fn bayes_error(
    fx: &DistributionSpec,
    fy: &DistributionSpec,
    p: f64,
    grid: Option<usize>,
) -> Result<f64> {
    let mix = MixtureParam::new(p)?;
    let (p, q) = (mix.p(), mix.q());
    let err = integrate_pair(fx, fy, grid, |f, g| (p * f).min(q * g))?;
    Ok(err.unwrap_or(p.min(q)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BayesBounds {
    pub lower: f64,
    pub upper: f64,
    pub p: f64,
}

/// Bayes error bounds implied by a divergence value at equal priors:
/// `(1 - sqrt(D)) / 2 <= err <= (1 - D) / 2`, with `D` clamped to `[0, 1]`.
pub fn bayes_bounds(divergence: f64, p: f64) -> Result<BayesBounds> {
    if p != 0.5 {
        return Err(Error::UnsupportedP(p));
    }
    if divergence.is_nan() {
        return Err(Error::InvalidDistribution("divergence is NaN".into()));
    }
    let d = divergence.clamp(0.0, 1.0);
    Ok(BayesBounds {
        lower: (1.0 - d.sqrt()) / 2.0,
        upper: (1.0 - d) / 2.0,
        p,
    })
}
