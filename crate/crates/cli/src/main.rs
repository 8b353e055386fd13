//! `hpdiv`: estimate Henze-Penrose divergences, solve ensemble weights,
//! translate divergences into Bayes error bounds, generate synthetic samples
//! and run Monte Carlo benchmarks.

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use hpdiv::bench::{run_plan, write_summaries, ExperimentPlan, MethodSpec, Scenario};
use hpdiv::io::{class_pair, load_labeled, load_points, save_points, write_points, LabelColumn};
use hpdiv::synth::SamplerState;
use hpdiv::types::MixtureParam;
use hpdiv::weights::{constraint_residuals, default_l_values, resolve_schedule, solve_weights};
use hpdiv::{
    bayes_bounds, knn_estimate, mst_estimate, wnn_estimate_with, DistributionSpec, Error,
    EstimateParams, EstimateResult, PointCloud,
};

const EXIT_USAGE: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "hpdiv", version, about = "Graph-based Henze-Penrose divergence estimation")]
struct Cli {
    /// Log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate the divergence between two samples.
    Estimate(EstimateArgs),
    /// Solve the WNN ensemble weights.
    Weights(WeightsArgs),
    /// Bayes error bounds for a divergence value.
    Bounds(BoundsArgs),
    /// Draw a synthetic sample.
    Gen(GenArgs),
    /// Run a Monte Carlo bias/variance/MSE experiment.
    Bench(BenchArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum MethodArg {
    Knn,
    Wnn,
    Mst,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Dist {
    Tnorm,
    Uniform,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ScenarioArg {
    GaussShift,
    GaussScale,
    GaussVsUniform,
    Identical,
    Csv,
}

/// Two point files, or one labeled file and two class names.
#[derive(Args, Debug)]
struct InputArgs {
    /// First sample, one point per CSV row.
    #[arg(long, requires = "y", conflicts_with = "data")]
    x: Option<PathBuf>,
    /// Second sample, one point per CSV row.
    #[arg(long, requires = "x", conflicts_with = "data")]
    y: Option<PathBuf>,
    /// Labeled CSV: numeric features plus one class column.
    #[arg(long, requires_all = ["class_a", "class_b"])]
    data: Option<PathBuf>,
    #[arg(long, requires = "data")]
    class_a: Option<String>,
    #[arg(long, requires = "data")]
    class_b: Option<String>,
    /// Zero-based class column of --data (default: last).
    #[arg(long, requires = "data")]
    label_column: Option<usize>,
}

impl InputArgs {
    fn is_given(&self) -> bool {
        self.x.is_some() || self.data.is_some()
    }

    fn load(&self) -> hpdiv::Result<(PointCloud, PointCloud)> {
        match (&self.x, &self.y, &self.data) {
            (Some(x), Some(y), None) => Ok((load_points(x, None)?, load_points(y, None)?)),
            (None, None, Some(data)) => {
                let column = self.label_column.map_or(LabelColumn::Last, LabelColumn::Index);
                let ds = load_labeled(data, column)?;
                class_pair(
                    &ds,
                    self.class_a.as_deref().unwrap_or_default(),
                    self.class_b.as_deref().unwrap_or_default(),
                )
            }
            _ => Err(Error::InvalidPlan(
                "give either --x and --y, or --data with --class-a and --class-b".into(),
            )),
        }
    }
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Neighbor rank for --method knn.
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Comma-separated index values for --method wnn.
    #[arg(long, value_delimiter = ',')]
    l_values: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Clamp the estimate into [0, 1].
    #[arg(long)]
    clamp: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(flatten)]
    input: InputArgs,
}

#[derive(Args, Debug)]
struct WeightsArgs {
    /// Data dimension.
    #[arg(long)]
    d: usize,
    /// Comma-separated index values (default: evenly spaced on [1, 3]).
    #[arg(long, value_delimiter = ',')]
    l_values: Option<Vec<f64>>,
    /// Number of default index values (default: d + 3).
    #[arg(long, conflicts_with = "l_values")]
    count: Option<usize>,
    /// First-sample size; resolves K(l) = floor(l sqrt(N)).
    #[arg(long)]
    n: Option<usize>,
    /// Second-sample size used for the K(l) range check (default: N).
    #[arg(long, requires = "n")]
    m: Option<usize>,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[arg(long, allow_hyphen_values = true)]
    divergence: f64,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, value_enum)]
    dist: Dist,
    #[arg(long)]
    dim: usize,
    /// Comma-separated mean (default: origin).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    mean: Option<Vec<f64>>,
    /// Comma-separated per-axis standard deviations (default: 1).
    #[arg(long, value_delimiter = ',')]
    sigma: Option<Vec<f64>>,
    /// Per-axis box as LO,HI.
    #[arg(long = "box", value_delimiter = ',', allow_hyphen_values = true, default_value = "-5,5")]
    bounds: Vec<f64>,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_enum)]
    scenario: ScenarioArg,
    #[arg(long, default_value_t = 2)]
    dims: usize,
    #[arg(long, value_delimiter = ',', default_value = "128,256,512,1024,2048")]
    n_grid: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Comma-separated methods: knn:K, knn:log, wnn, wnn:L1/L2/..., mst.
    #[arg(long, value_delimiter = ',', default_value = "knn:5,wnn,mst")]
    methods: Vec<String>,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV of per-cell summaries.
    #[arg(long)]
    out: PathBuf,
    /// True divergence to measure bias against.
    #[arg(long, allow_hyphen_values = true)]
    truth: Option<f64>,
    #[command(flatten)]
    input: InputArgs,
}

/// A failure carrying its exit code.
struct Failure {
    code: u8,
    kind: String,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            code: if e.is_numeric() { EXIT_NUMERIC } else { EXIT_USAGE },
            kind: e.kind().to_string(),
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Error::Io(e).into()
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        kind: "UsageError".into(),
        message: message.into(),
    }
}

fn print_json(value: &Value) -> io::Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer(&mut out, value)?;
    writeln!(out)
}

fn estimate_json(est: &EstimateResult) -> Value {
    let mut obj = Map::new();
    obj.insert("method".into(), json!(est.method.to_string()));
    obj.insert("value".into(), json!(est.value));
    obj.insert("n".into(), json!(est.n));
    obj.insert("m".into(), json!(est.m));
    obj.insert("p".into(), json!(est.p));
    match &est.params {
        EstimateParams::Knn { k } => {
            obj.insert("k".into(), json!(k));
        }
        EstimateParams::Wnn(s) => {
            obj.insert("l_values".into(), json!(s.l_values));
            obj.insert("weights".into(), json!(s.w));
            obj.insert("k_values".into(), json!(s.k_values));
        }
        EstimateParams::Mst {} => {}
    }
    obj.insert("clamped".into(), json!(est.clamped));
    if let Some(w) = est.ratio_warning {
        obj.insert(
            "warning".into(),
            json!(format!("M={} differs from floor(Nq/p)={}", w.m, w.expected_m)),
        );
    }
    Value::Object(obj)
}

fn cmd_estimate(args: &EstimateArgs) -> Result<(), Failure> {
    if !args.input.is_given() {
        return Err(usage("estimate needs --x/--y or --data/--class-a/--class-b"));
    }
    let (x, y) = args.input.load()?;
    let est = match args.method {
        MethodArg::Knn => knn_estimate(&x, &y, args.k, args.p, args.clamp)?,
        MethodArg::Mst => mst_estimate(&x, &y, args.p, args.clamp)?,
        MethodArg::Wnn => {
            let ls = args
                .l_values
                .clone()
                .unwrap_or_else(|| default_l_values(x.dim(), None));
            wnn_estimate_with(&x, &y, &ls, args.p, args.clamp)?
        }
    };
    match args.format {
        Format::Json => print_json(&estimate_json(&est))?,
        Format::Csv => {
            let mut out = io::stdout().lock();
            writeln!(out, "method,value,n,m,p,clamped")?;
            writeln!(
                out,
                "{},{:?},{},{},{:?},{}",
                est.method, est.value, est.n, est.m, est.p, est.clamped
            )?;
        }
    }
    Ok(())
}

fn cmd_weights(args: &WeightsArgs) -> Result<(), Failure> {
    let ls = args
        .l_values
        .clone()
        .unwrap_or_else(|| default_l_values(args.d, args.count));
    let mut obj = Map::new();
    obj.insert("d".into(), json!(args.d));
    obj.insert("l_values".into(), json!(ls));
    let w = match args.n {
        Some(n) => {
            let m = args.m.unwrap_or(n);
            let schedule = resolve_schedule(&ls, args.d, n, n + m)?;
            obj.insert("n".into(), json!(n));
            obj.insert("k_values".into(), json!(schedule.k_values));
            schedule.w
        }
        None => solve_weights(&ls, args.d)?,
    };
    let residuals = constraint_residuals(&ls, args.d, &w);
    let max_residual = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    obj.insert("weights".into(), json!(w));
    obj.insert("residuals".into(), json!(residuals));
    obj.insert("max_residual".into(), json!(max_residual));
    print_json(&Value::Object(obj))?;
    Ok(())
}

fn cmd_bounds(args: &BoundsArgs) -> Result<(), Failure> {
    let b = bayes_bounds(args.divergence, args.p)?;
    print_json(&json!({ "lower": b.lower, "upper": b.upper, "p": b.p }))?;
    Ok(())
}

fn expand(values: Option<&[f64]>, dim: usize, default: f64, name: &str) -> Result<Vec<f64>, Failure> {
    match values {
        None => Ok(vec![default; dim]),
        Some([v]) => Ok(vec![*v; dim]),
        Some(v) if v.len() == dim => Ok(v.to_vec()),
        Some(v) => Err(usage(format!("--{name} has {} values, expected 1 or {dim}", v.len()))),
    }
}

fn cmd_gen(args: &GenArgs) -> Result<(), Failure> {
    if args.dim == 0 {
        return Err(usage("--dim must be positive"));
    }
    let [lo, hi] = args.bounds[..] else {
        return Err(usage("--box takes LO,HI"));
    };
    let bounds = vec![(lo, hi); args.dim];
    let spec = match args.dist {
        Dist::Tnorm => {
            let mean = expand(args.mean.as_deref(), args.dim, 0.0, "mean")?;
            let sigma = expand(args.sigma.as_deref(), args.dim, 1.0, "sigma")?;
            DistributionSpec::truncated_normal(&mean, &sigma, &bounds)?
        }
        Dist::Uniform => DistributionSpec::uniform(&bounds)?,
    };
    let cloud = SamplerState::new(spec, args.seed).sample(args.n)?;
    match &args.out {
        Some(path) => save_points(&cloud, path)?,
        None => {
            let mut out = io::BufWriter::new(io::stdout().lock());
            write_points(&cloud, &mut out)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> Result<(), Failure> {
    let methods = args
        .methods
        .iter()
        .map(|m| m.parse::<MethodSpec>())
        .collect::<hpdiv::Result<Vec<_>>>()?;
    let (scenario, dims) = match args.scenario {
        ScenarioArg::Csv => {
            if !args.input.is_given() {
                return Err(usage("--scenario csv needs --x/--y or --data/--class-a/--class-b"));
            }
            let (x, y) = args.input.load()?;
            let dims = x.dim();
            (Scenario::CsvPair { x, y }, dims)
        }
        other => {
            if args.input.is_given() {
                return Err(usage("input files are only used with --scenario csv"));
            }
            let scenario = match other {
                ScenarioArg::GaussShift => Scenario::GaussShift,
                ScenarioArg::GaussScale => Scenario::GaussScale,
                ScenarioArg::GaussVsUniform => Scenario::GaussVsUniform,
                _ => Scenario::Identical,
            };
            (scenario, args.dims)
        }
    };
    MixtureParam::new(args.p)?;
    let plan = ExperimentPlan {
        scenario,
        dims,
        n_grid: args.n_grid.clone(),
        methods,
        trials: args.trials,
        p: args.p,
        base_seed: args.seed,
        truth: args.truth,
    };
    let report = run_plan(&plan)?;
    for f in &report.failures {
        eprintln!(
            "{}",
            json!({ "error": f.kind, "method": f.method, "n": f.n, "message": f.message })
        );
    }
    if report.summaries.is_empty() {
        return Err(Error::EmptyResults.into());
    }
    let mut out = io::BufWriter::new(std::fs::File::create(&args.out)?);
    write_summaries(&report.summaries, &mut out)?;
    out.flush()?;
    print_json(&json!({
        "scenario": plan.scenario.name(),
        "truth": report.truth,
        "cells": report.summaries.len(),
        "failed_cells": report.failures.len(),
        "out": args.out.display().to_string(),
    }))?;
    Ok(())
}

fn configure_threads() {
    let threads = std::env::var("HPDIV_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(0);
    if threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            log::warn!("could not size thread pool: {e}");
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                e.exit();
            }
            let message = e.to_string();
            let first = message.lines().next().unwrap_or_default();
            eprintln!("{}", json!({ "error": "UsageError", "message": first }));
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();
    configure_threads();

    let result = match &cli.command {
        Command::Estimate(a) => cmd_estimate(a),
        Command::Weights(a) => cmd_weights(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", json!({ "error": f.kind, "message": f.message }));
            ExitCode::from(f.code)
        }
    }
}
