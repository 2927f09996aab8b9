mod common;

use common::{simulate, Process};
use medmediate::estimators::{Effect, MethodId};
use medmediate::formula::outcome_prevalence;
use medmediate::inference::BootstrapPlan;
use medmediate::scenario::ScenarioSpec;
use medmediate::simulation::{
    export_results, generate_dataset, import_results, run_scenario, truth_of, ResultFormat, SimulationPlan,
};

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

#[test]
fn empirical_prevalence_matches_integrated() {
    let spec = ScenarioSpec::table(1).unwrap();
    let ds = generate_dataset(&spec, 1_000_000, 1);
    let p = outcome_prevalence(&spec).unwrap();
    let se = (p * (1.0 - p) / 1e6).sqrt();
    assert!((mean(ds.column("Y").unwrap()) - p).abs() < 4.0 * se);
}

#[test]
fn generator_agrees_with_independent_simulator() {
    for (id, binary, rho) in [(4, [false, false], 0.25), (8, [true, true], 0.5), (12, [true, false], 0.75)] {
        let n = 200_000;
        let a = generate_dataset(&ScenarioSpec::table(id).unwrap(), n, 2);
        let b = simulate(&Process::scenario(binary, rho, false), n, 3);
        for col in ["Y", "X", "M1", "M2", "C"] {
            let (va, vb) = (a.column(col).unwrap(), b.column(col).unwrap());
            let (ma, mb) = (mean(va), mean(vb));
            let var = va.iter().map(|v| (v - ma).powi(2)).sum::<f64>() / n as f64;
            let se = (2.0 * var / n as f64).sqrt();
            assert!((ma - mb).abs() < 4.5 * se, "scenario {id} column {col}: {ma} vs {mb}");
        }
    }
}

#[test]
fn scenario_runs_ignore_thread_count() {
    let spec = ScenarioSpec::table(9).unwrap();
    let mut plan = SimulationPlan::new(6, 300, MethodId::ALL.to_vec(), 11);
    plan.bootstrap = Some(BootstrapPlan::new(40, 0));
    plan.draws = 100;
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_scenario(&spec, &plan).unwrap())
    };
    let (a, b) = (run(1), run(4));
    assert_eq!(a.records, b.records);
    assert_eq!(a.outcomes, b.outcomes);
}

#[test]
fn metrics_follow_their_definitions() {
    let spec = ScenarioSpec::table(3).unwrap();
    let mut plan = SimulationPlan::new(8, 400, vec![MethodId::Difference, MethodId::Jerolon], 12);
    plan.bootstrap = Some(BootstrapPlan::new(40, 0));
    plan.draws = 100;
    let run = run_scenario(&spec, &plan).unwrap();
    for rec in &run.records {
        let ests: Vec<_> = run
            .outcomes
            .iter()
            .filter(|o| o.method == rec.method)
            .filter_map(|o| o.result.as_ref().ok())
            .collect();
        let truth = truth_of(&run.truth, rec.effect);
        assert_eq!(truth, rec.truth);
        let values: Vec<f64> = ests.iter().map(|e| e.value(rec.effect).unwrap()).collect();
        let bias = 100.0 * (mean(&values) - truth) / truth;
        let mse = mean(&values.iter().map(|v| (v - truth).powi(2)).collect::<Vec<_>>());
        assert!((rec.percent_bias - bias).abs() < 1e-9);
        assert!((rec.mse - mse).abs() < 1e-12);
        let hits = ests.iter().filter(|e| e.intervals[&rec.effect].contains(truth)).count();
        assert_eq!(rec.coverage, Some(hits as f64 / ests.len() as f64));
        assert_eq!(rec.n_used, ests.len());
    }
    let effects = |m| run.records.iter().filter(|r| r.method == m).map(|r| r.effect).collect::<Vec<_>>();
    assert_eq!(effects(MethodId::Difference), [Effect::Te, Effect::De, Effect::Ie]);
    assert_eq!(effects(MethodId::Jerolon).len(), 5);
}

#[test]
fn results_round_trip_through_files() {
    let spec = ScenarioSpec::table(14).unwrap();
    let mut plan = SimulationPlan::new(4, 300, vec![MethodId::Weighting, MethodId::Wang], 13);
    plan.bootstrap = None;
    let records = run_scenario(&spec, &plan).unwrap().records;
    assert!(records.iter().all(|r| r.coverage.is_none() && r.mean_width.is_none()));
    let dir = tempfile::tempdir().unwrap();
    for (format, name) in [(ResultFormat::Csv, "m.csv"), (ResultFormat::Json, "m.json")] {
        let path = dir.path().join(name);
        export_results(&records, &path, format).unwrap();
        assert_eq!(import_results(&path, format).unwrap(), records, "{name}");
    }
}
