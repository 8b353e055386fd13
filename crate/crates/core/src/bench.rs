//! Monte Carlo harness: bias, variance and MSE of the estimators against N.
//!
//! Every `(n, trial)` cell draws its samples from streams keyed by
//! `base_seed`, `n`, the trial index and the sample side, so results do not
//! depend on the thread count or on which other sizes are in the grid. All
//! methods in a cell see the same samples.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{knn_estimate, wnn_estimate_with};
use crate::mst::mst_estimate;
use crate::oracle::{true_divergence, DistributionSpec};
use crate::synth::SamplerState;
use crate::types::{MixtureParam, PointCloud};
use crate::weights::default_l_values;

/// Half-width multiplier of the 95% normal confidence band.
pub const Z_95: f64 = 1.96;
pub const DEFAULT_TRIALS: usize = 100;
pub const DEFAULT_N_GRID: [usize; 5] = [128, 256, 512, 1024, 2048];
const BOX: (f64, f64) = (-5.0, 5.0);

/// Data-generating setup of an experiment.
#[derive(Debug, Clone)]
pub enum Scenario {
    /// `N(0, I)` vs `N(e_d, I)`: unit shift along the last axis.
    GaussShift,
    /// `N(0, I)` vs `N(e_1, 2 I)`: shift along the first axis, doubled covariance.
    GaussScale,
    /// `N(0, I)` vs uniform on the box.
    GaussVsUniform,
    /// `N(0, I)` vs itself; the true divergence is zero in any dimension.
    Identical,
    /// Subsamples without replacement from two fixed point sets.
    CsvPair { x: PointCloud, y: PointCloud },
}

impl Scenario {
    /// Densities of the synthetic scenarios, truncated to `[-5, 5]^dims`.
    pub fn densities(&self, dims: usize) -> Result<Option<(DistributionSpec, DistributionSpec)>> {
        let (lo, hi) = BOX;
        let origin = vec![0.0; dims];
        let base = || DistributionSpec::isotropic_normal(&origin, 1.0, lo, hi);
        let pair = match self {
            Scenario::GaussShift => {
                let mut mean = origin.clone();
                if let Some(last) = mean.last_mut() {
                    *last = 1.0;
                }
                (
                    base()?,
                    DistributionSpec::isotropic_normal(&mean, 1.0, lo, hi)?,
                )
            }
            Scenario::GaussScale => {
                let mut mean = origin.clone();
                if let Some(first) = mean.first_mut() {
                    *first = 1.0;
                }
                (
                    base()?,
                    DistributionSpec::isotropic_normal(&mean, 2f64.sqrt(), lo, hi)?,
                )
            }
            Scenario::GaussVsUniform => (base()?, DistributionSpec::uniform(&vec![BOX; dims])?),
            Scenario::Identical => (base()?, base()?),
            Scenario::CsvPair { .. } => return Ok(None),
        };
        Ok(Some(pair))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::GaussShift => "gauss-shift",
            Scenario::GaussScale => "gauss-scale",
            Scenario::GaussVsUniform => "gauss-vs-uniform",
            Scenario::Identical => "identical",
            Scenario::CsvPair { .. } => "csv",
        }
    }
}

/// An estimator the harness can run on one pair of samples.
pub trait Estimator: Sync {
    fn label(&self) -> String;
    fn estimate(&self, x: &PointCloud, y: &PointCloud, p: f64) -> Result<f64>;
}

/// Built-in estimator choices, parsed from tokens such as `knn:5`, `knn:log`,
/// `wnn`, `wnn:1/2/3` and `mst`.
#[derive(Debug, Clone, PartialEq)]
pub enum MethodSpec {
    Knn {
        k: usize,
    },
    /// k-NN with `k = ceil(ln N)`.
    KnnLog,
    /// WNN; `None` uses the default index values for the data dimension.
    Wnn {
        l_values: Option<Vec<f64>>,
    },
    Mst,
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodSpec::Knn { k } => write!(f, "knn:{k}"),
            MethodSpec::KnnLog => f.write_str("knn:log"),
            MethodSpec::Wnn { l_values: None } => f.write_str("wnn"),
            MethodSpec::Wnn { l_values: Some(ls) } => {
                let parts: Vec<String> = ls.iter().map(|l| l.to_string()).collect();
                write!(f, "wnn:{}", parts.join("/"))
            }
            MethodSpec::Mst => f.write_str("mst"),
        }
    }
}

impl FromStr for MethodSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidPlan(format!("unknown method {s:?}"));
        let (name, arg) = match s.split_once(':') {
            Some((name, arg)) => (name, Some(arg)),
            None => (s, None),
        };
        match (name, arg) {
            ("knn", Some("log")) => Ok(MethodSpec::KnnLog),
            ("knn", Some(k)) => match k.parse() {
                Ok(k) if k > 0 => Ok(MethodSpec::Knn { k }),
                _ => Err(bad()),
            },
            ("knn", None) => Ok(MethodSpec::Knn { k: 5 }),
            ("wnn", None) => Ok(MethodSpec::Wnn { l_values: None }),
            ("wnn", Some(ls)) => {
                let l_values = ls
                    .split('/')
                    .map(|l| l.parse::<f64>().map_err(|_| bad()))
                    .collect::<Result<Vec<_>>>()?;
                Ok(MethodSpec::Wnn {
                    l_values: Some(l_values),
                })
            }
            ("mst", None) => Ok(MethodSpec::Mst),
            _ => Err(bad()),
        }
    }
}

impl Estimator for MethodSpec {
    fn label(&self) -> String {
        self.to_string()
    }

    fn estimate(&self, x: &PointCloud, y: &PointCloud, p: f64) -> Result<f64> {
        let est = match self {
            MethodSpec::Knn { k } => knn_estimate(x, y, *k, p, false)?,
            MethodSpec::KnnLog => {
                let k = ((x.len() as f64).ln().ceil() as usize).max(1);
                knn_estimate(x, y, k, p, false)?
            }
            MethodSpec::Wnn { l_values } => {
                let defaults;
                let ls = match l_values {
                    Some(ls) => ls.as_slice(),
                    None => {
                        defaults = default_l_values(x.dim(), None);
                        defaults.as_slice()
                    }
                };
                wnn_estimate_with(x, y, ls, p, false)?
            }
            MethodSpec::Mst => mst_estimate(x, y, p, false)?,
        };
        Ok(est.value)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub scenario: Scenario,
    pub dims: usize,
    pub n_grid: Vec<usize>,
    pub methods: Vec<MethodSpec>,
    pub trials: usize,
    pub p: f64,
    pub base_seed: u64,
    /// Known divergence; when absent, synthetic scenarios use the quadrature oracle.
    pub truth: Option<f64>,
}

impl ExperimentPlan {
    pub fn new(scenario: Scenario, dims: usize, methods: Vec<MethodSpec>) -> Self {
        Self {
            scenario,
            dims,
            n_grid: DEFAULT_N_GRID.to_vec(),
            methods,
            trials: DEFAULT_TRIALS,
            p: 0.5,
            base_seed: 0,
            truth: None,
        }
    }

    fn validate(&self) -> Result<MixtureParam> {
        let mix = MixtureParam::new(self.p)?;
        if self.trials < 2 {
            return Err(Error::InvalidPlan("need at least 2 trials".into()));
        }
        if self.n_grid.is_empty() || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPlan(
                "n grid must be nonempty and strictly increasing".into(),
            ));
        }
        if self.n_grid[0] == 0 {
            return Err(Error::InvalidPlan("sample sizes must be positive".into()));
        }
        if self.dims == 0 {
            return Err(Error::InvalidPlan("dimension must be positive".into()));
        }
        if let Scenario::CsvPair { x, y } = &self.scenario {
            if x.dim() != y.dim() {
                return Err(Error::DimensionMismatch {
                    expected: x.dim(),
                    found: y.dim(),
                });
            }
        }
        Ok(mix)
    }

    /// The divergence bias is measured against, if one is known.
    pub fn resolve_truth(&self) -> Result<Option<f64>> {
        if self.truth.is_some() {
            return Ok(self.truth);
        }
        match self.scenario.densities(self.dims)? {
            Some((fx, fy)) => Ok(Some(true_divergence(&fx, &fy, self.p, None)?)),
            None => Ok(None),
        }
    }
}

/// Monte Carlo aggregate for one `(method, n)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSummary {
    pub method: String,
    pub n: usize,
    pub mean_est: f64,
    /// `E[T] - truth`; absent without a known truth.
    pub bias: Option<f64>,
    /// `E[T^2] - E[T]^2` over the trials.
    pub variance: f64,
    /// `E[(T - truth)^2]`; absent without a known truth.
    pub mse: Option<f64>,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: usize,
}

impl TrialSummary {
    pub fn from_estimates(method: &str, n: usize, estimates: &[f64], truth: Option<f64>) -> Self {
        let t = estimates.len() as f64;
        let mean = estimates.iter().sum::<f64>() / t;
        let variance = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / t;
        let half = Z_95 * (variance / t).sqrt();
        Self {
            method: method.to_string(),
            n,
            mean_est: mean,
            bias: truth.map(|truth| mean - truth),
            variance,
            mse: truth.map(|truth| estimates.iter().map(|e| (e - truth).powi(2)).sum::<f64>() / t),
            ci_low: mean - half,
            ci_high: mean + half,
            trials: estimates.len(),
        }
    }
}

/// A cell that could not be completed.
#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub method: String,
    pub n: usize,
    pub kind: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct PlanReport {
    pub truth: Option<f64>,
    pub summaries: Vec<TrialSummary>,
    pub failures: Vec<CellFailure>,
}

/// Stream index for one side of one trial at sample size `n`.
fn stream_index(n: usize, trial: usize, side: u64) -> u64 {
    ((n as u64) << 32) ^ ((trial as u64) << 1) ^ side
}

fn draw_pair(
    plan: &ExperimentPlan,
    densities: Option<&(DistributionSpec, DistributionSpec)>,
    n: usize,
    m: usize,
    trial: usize,
) -> Result<(PointCloud, PointCloud)> {
    let seed_x = stream_index(n, trial, 0);
    let seed_y = stream_index(n, trial, 1);
    match (&plan.scenario, densities) {
        (Scenario::CsvPair { x, y }, _) => {
            let pick = |cloud: &PointCloud, size: usize, stream: u64| -> Result<PointCloud> {
                if size > cloud.len() {
                    return Err(Error::InvalidPlan(format!(
                        "subsample of {size} requested from {} points",
                        cloud.len()
                    )));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(plan.base_seed ^ stream);
                let mut rows = rand::seq::index::sample(&mut rng, cloud.len(), size).into_vec();
                rows.sort_unstable();
                cloud.select(&rows)
            };
            Ok((pick(x, n, seed_x)?, pick(y, m, seed_y)?))
        }
        (_, Some((fx, fy))) => {
            let x = SamplerState::for_trial(fx.clone(), plan.base_seed, seed_x).sample(n)?;
            let y = SamplerState::for_trial(fy.clone(), plan.base_seed, seed_y).sample(m)?;
            Ok((x, y))
        }
        (_, None) => Err(Error::InvalidPlan("scenario has no densities".into())),
    }
}

/// Runs the plan with its built-in methods.
pub fn run_plan(plan: &ExperimentPlan) -> Result<PlanReport> {
    let estimators: Vec<&dyn Estimator> =
        plan.methods.iter().map(|m| m as &dyn Estimator).collect();
    run_plan_with(plan, &estimators)
}

/// Runs the plan's scenario and grid with arbitrary estimators.
///
/// Trials run in parallel on the current rayon pool; results are folded in
/// trial order. An estimator error fails only its own `(method, n)` cell.
pub fn run_plan_with(plan: &ExperimentPlan, estimators: &[&dyn Estimator]) -> Result<PlanReport> {
    let mix = plan.validate()?;
    let truth = plan.resolve_truth()?;
    let densities = plan.scenario.densities(plan.dims)?;
    let mut report = PlanReport {
        truth,
        ..PlanReport::default()
    };
    for &n in &plan.n_grid {
        let m = mix.matched_m(n).max(1);
        let per_trial: Vec<Result<Vec<Result<f64>>>> = (0..plan.trials)
            .into_par_iter()
            .map(|trial| {
                let (x, y) = draw_pair(plan, densities.as_ref(), n, m, trial)?;
                Ok(estimators
                    .iter()
                    .map(|e| e.estimate(&x, &y, plan.p))
                    .collect())
            })
            .collect();
        for (j, est) in estimators.iter().enumerate() {
            let label = est.label();
            let first_error = per_trial.iter().find_map(|trial| match trial {
                Err(e) => Some(e),
                Ok(row) => row[j].as_ref().err(),
            });
            if let Some(e) = first_error {
                log::warn!("cell {label} n={n} failed: {e}");
                report.failures.push(CellFailure {
                    method: label,
                    n,
                    kind: e.kind(),
                    message: e.to_string(),
                });
                continue;
            }
            let values: Vec<f64> = per_trial
                .iter()
                .filter_map(|trial| trial.as_ref().ok())
                .filter_map(|row| row[j].as_ref().ok().copied())
                .collect();
            report
                .summaries
                .push(TrialSummary::from_estimates(&label, n, &values, truth));
        }
    }
    Ok(report)
}

pub const SUMMARY_HEADER: &str = "method,n,mean,bias,variance,mse,ci_low,ci_high,trials";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{v:?}"))
}

/// Writes summaries as CSV with the fixed [`SUMMARY_HEADER`].
pub fn write_summaries<W: Write>(results: &[TrialSummary], out: &mut W) -> Result<()> {
    if results.is_empty() {
        return Err(Error::EmptyResults);
    }
    writeln!(out, "{SUMMARY_HEADER}")?;
    for s in results {
        writeln!(
            out,
            "{},{},{:?},{},{:?},{},{:?},{:?},{}",
            s.method,
            s.n,
            s.mean_est,
            opt(s.bias),
            s.variance,
            opt(s.mse),
            s.ci_low,
            s.ci_high,
            s.trials
        )?;
    }
    Ok(())
}

/// Writes summaries to `path`. Nothing is created when `results` is empty.
pub fn summarize_csv(results: &[TrialSummary], path: impl AsRef<Path>) -> Result<()> {
    if results.is_empty() {
        return Err(Error::EmptyResults);
    }
    let mut out = BufWriter::new(File::create(path)?);
    write_summaries(results, &mut out)?;
    out.flush()?;
    Ok(())
}

/// Reads a file written by [`summarize_csv`].
pub fn read_summaries(path: impl AsRef<Path>) -> Result<Vec<TrialSummary>> {
    let path = path.as_ref();
    let parse_err = |row: usize, column: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        row,
        column,
        message,
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        let row = i + 1;
        if row == 1 {
            if line != SUMMARY_HEADER {
                return Err(parse_err(row, 1, format!("unexpected header {line:?}")));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(Error::RaggedRows {
                path: path.to_path_buf(),
                row,
                expected: 9,
                found: fields.len(),
            });
        }
        let num = |col: usize| -> Result<f64> {
            fields[col]
                .parse()
                .map_err(|_| parse_err(row, col + 1, format!("not a number: {:?}", fields[col])))
        };
        let int = |col: usize| -> Result<usize> {
            fields[col]
                .parse()
                .map_err(|_| parse_err(row, col + 1, format!("not an integer: {:?}", fields[col])))
        };
        let maybe = |col: usize| -> Result<Option<f64>> {
            if fields[col].is_empty() {
                Ok(None)
            } else {
                num(col).map(Some)
            }
        };
        out.push(TrialSummary {
            method: fields[0].to_string(),
            n: int(1)?,
            mean_est: num(2)?,
            bias: maybe(3)?,
            variance: num(4)?,
            mse: maybe(5)?,
            ci_low: num(6)?,
            ci_high: num(7)?,
            trials: int(8)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Constant(f64);

    impl Estimator for Constant {
        fn label(&self) -> String {
            "const".into()
        }

        fn estimate(&self, _: &PointCloud, _: &PointCloud, _: f64) -> Result<f64> {
            Ok(self.0)
        }
    }

    struct Failing;

    impl Estimator for Failing {
        fn label(&self) -> String {
            "failing".into()
        }

        fn estimate(&self, _: &PointCloud, _: &PointCloud, _: f64) -> Result<f64> {
            Err(Error::SingularConstraints { rcond: 0.0 })
        }
    }

    fn small_plan() -> ExperimentPlan {
        ExperimentPlan {
            n_grid: vec![16, 32],
            trials: 4,
            truth: Some(0.5),
            base_seed: 9,
            ..ExperimentPlan::new(Scenario::GaussShift, 1, vec![MethodSpec::Knn { k: 3 }])
        }
    }

    #[test]
    fn constant_estimator_summary() {
        let report = run_plan_with(&small_plan(), &[&Constant(0.3)]).unwrap();
        assert_eq!(report.summaries.len(), 2);
        let s = &report.summaries[0];
        assert!((s.bias.unwrap() + 0.2).abs() < 1e-15);
        assert!(s.variance.abs() < 1e-30);
        assert!((s.mse.unwrap() - 0.04).abs() < 1e-15);
        assert!(s.ci_low <= s.mean_est && s.mean_est <= s.ci_high);
    }

    #[test]
    fn failing_cell_does_not_abort_plan() {
        let report = run_plan_with(&small_plan(), &[&Failing, &Constant(0.1)]).unwrap();
        assert_eq!(report.failures.len(), 2);
        assert_eq!(report.failures[0].kind, "SingularConstraints");
        assert_eq!(report.summaries.len(), 2);
        assert!(report.summaries.iter().all(|s| s.method == "const"));
    }

    #[test]
    fn plan_validation() {
        let mut plan = small_plan();
        plan.trials = 1;
        assert!(matches!(run_plan(&plan), Err(Error::InvalidPlan(_))));
        let mut plan = small_plan();
        plan.n_grid = vec![32, 16];
        assert!(matches!(run_plan(&plan), Err(Error::InvalidPlan(_))));
    }

    #[test]
    fn mse_identity_holds() {
        let mut plan = small_plan();
        plan.truth = None;
        plan.methods = vec![MethodSpec::Knn { k: 3 }, MethodSpec::Mst];
        let report = run_plan(&plan).unwrap();
        assert!(report.truth.is_some());
        for s in &report.summaries {
            let mse = s.mse.unwrap();
            let recombined = s.bias.unwrap().powi(2) + s.variance;
            assert!((mse - recombined).abs() <= 1e-12 * mse.max(1e-300), "{s:?}");
        }
    }

    #[test]
    fn reproducible_across_pools() {
        let plan = ExperimentPlan {
            methods: vec![MethodSpec::Knn { k: 3 }, MethodSpec::Wnn { l_values: None }],
            ..small_plan()
        };
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let a = one.install(|| run_plan(&plan)).unwrap();
        let b = four.install(|| run_plan(&plan)).unwrap();
        assert_eq!(a.summaries, b.summaries);
    }

    #[test]
    fn method_tokens() {
        for token in ["knn:5", "knn:log", "wnn", "wnn:1/2/3", "mst"] {
            assert_eq!(token.parse::<MethodSpec>().unwrap().to_string(), token);
        }
        assert!("knn:0".parse::<MethodSpec>().is_err());
        assert!("lasso".parse::<MethodSpec>().is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let rows = vec![
            TrialSummary::from_estimates("knn:5", 128, &[0.1, 0.2, 0.35], Some(0.25)),
            TrialSummary::from_estimates("mst", 256, &[0.3, 0.1], None),
        ];
        summarize_csv(&rows[..1], &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 2);
        summarize_csv(&rows, &path).unwrap();
        assert_eq!(read_summaries(&path).unwrap(), rows);
    }

    #[test]
    fn empty_summaries_create_no_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("none.csv");
        assert!(matches!(
            summarize_csv(&[], &path),
            Err(Error::EmptyResults)
        ));
        assert!(!path.exists());
    }
}
