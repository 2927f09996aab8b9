//! A small simulation study: percent bias, MSE and coverage over replicates
//! of one scenario.

use medmediate::estimators::MethodId;
use medmediate::inference::BootstrapPlan;
use medmediate::scenario::ScenarioSpec;
use medmediate::simulation::{run_scenario, SimulationPlan};

fn main() {
    let spec = ScenarioSpec::table(1).unwrap();
    let mut plan = SimulationPlan::new(
        50,
        1000,
        vec![MethodId::Difference, MethodId::Weighting, MethodId::Wang, MethodId::Jerolon],
        2024,
    );
    plan.bootstrap = Some(BootstrapPlan::new(100, 0));
    plan.draws = 200;
    let run = run_scenario(&spec, &plan).unwrap();
    println!("scenario {} (prevalence {:.3})", spec.id, run.prevalence);
    println!("method      effect  truth   %bias    mse      coverage");
    for r in &run.records {
        let cov = r.coverage.map(|c| format!("{c:.2}")).unwrap_or_else(|| "-".into());
        println!(
            "{:<11} {:<6}  {:.3}  {:>6.2}  {:.5}  {cov}",
            r.method.to_string(),
            r.effect.to_string(),
            r.truth,
            r.percent_bias,
            r.mse
        );
    }
}
