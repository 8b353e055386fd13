use hpdiv::bench::{run_plan, ExperimentPlan, MethodSpec, Scenario, TrialSummary};
use hpdiv::PointCloud;

fn plan(
    scenario: Scenario,
    dims: usize,
    n_grid: Vec<usize>,
    methods: &[&str],
    trials: usize,
) -> ExperimentPlan {
    let mut plan = ExperimentPlan::new(
        scenario,
        dims,
        methods
            .iter()
            .map(|m| m.parse::<MethodSpec>().unwrap())
            .collect(),
    );
    plan.n_grid = n_grid;
    plan.trials = trials;
    plan.base_seed = 77;
    plan
}

fn only(summaries: &[TrialSummary], method: &str, n: usize) -> TrialSummary {
    summaries
        .iter()
        .find(|s| s.method == method && s.n == n)
        .cloned()
        .unwrap()
}

#[test]
fn identical_pairs_estimate_near_zero() {
    let report = run_plan(&plan(
        Scenario::Identical,
        1,
        vec![1000],
        &["knn:5", "mst", "wnn"],
        30,
    ))
    .unwrap();
    assert_eq!(report.truth, Some(0.0));
    for s in &report.summaries {
        assert!(s.mean_est.abs() < 0.05, "{}: {}", s.method, s.mean_est);
    }
}

#[test]
fn disjoint_supports_estimate_one() {
    let x =
        PointCloud::from_scalars(&(0..200).map(|i| i as f64 * 0.01).collect::<Vec<_>>()).unwrap();
    let y = PointCloud::from_scalars(&(0..200).map(|i| 10.0 + i as f64 * 0.01).collect::<Vec<_>>())
        .unwrap();
    let mut p = plan(
        Scenario::CsvPair { x, y },
        1,
        vec![50, 100],
        &["knn:5", "mst", "wnn"],
        10,
    );
    p.truth = Some(1.0);
    let report = run_plan(&p).unwrap();
    assert!(report.failures.is_empty(), "{:?}", report.failures);
    for s in &report.summaries {
        // The spanning tree always keeps one bridge edge between the clusters.
        let expected = if s.method == "mst" {
            1.0 - 1.0 / s.n as f64
        } else {
            1.0
        };
        approx::assert_relative_eq!(s.mean_est, expected, max_relative = 1e-12);
        assert!(s.variance < 1e-20, "{} at n={}", s.method, s.n);
    }
}

#[test]
fn mse_is_bias_squared_plus_variance() {
    let report = run_plan(&plan(
        Scenario::GaussShift,
        2,
        vec![200, 400],
        &["knn:5", "knn:log", "mst"],
        20,
    ))
    .unwrap();
    for s in &report.summaries {
        let (bias, mse) = (s.bias.unwrap(), s.mse.unwrap());
        approx::assert_relative_eq!(mse, bias * bias + s.variance, max_relative = 1e-9);
    }
}

#[test]
fn knn_mse_grows_with_dimension_under_shift() {
    let n = 500;
    let low = run_plan(&plan(Scenario::GaussShift, 2, vec![n], &["knn:5"], 100)).unwrap();
    let high = run_plan(&plan(Scenario::GaussShift, 10, vec![n], &["knn:5"], 100)).unwrap();
    let (low, high) = (
        only(&low.summaries, "knn:5", n).mse.unwrap(),
        only(&high.summaries, "knn:5", n).mse.unwrap(),
    );
    assert!(high >= low, "d=2 {low} vs d=10 {high}");
}

#[test]
fn knn_mse_does_not_drop_with_dimension_on_identical_pairs() {
    let n = 500;
    let low = run_plan(&plan(Scenario::Identical, 2, vec![n], &["knn:5"], 100)).unwrap();
    let high = run_plan(&plan(Scenario::Identical, 10, vec![n], &["knn:5"], 100)).unwrap();
    let (low, high) = (
        only(&low.summaries, "knn:5", n).mse.unwrap(),
        only(&high.summaries, "knn:5", n).mse.unwrap(),
    );
    // Soft check: allow Monte Carlo noise of a few percent.
    assert!(high >= 0.9 * low, "d=2 {low} vs d=10 {high}");
}

#[test]
fn reruns_are_identical() {
    let p = plan(
        Scenario::GaussVsUniform,
        2,
        vec![100],
        &["knn:3", "wnn", "mst"],
        8,
    );
    let a = run_plan(&p).unwrap();
    let b = run_plan(&p).unwrap();
    assert_eq!(a.summaries, b.summaries);
}
