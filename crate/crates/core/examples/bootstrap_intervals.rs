//! Percentile bootstrap intervals for the weighting estimator and
//! quasi-Bayes intervals for the Jérolon estimator.

use medmediate::estimators::{EstimatorConfig, MethodId};
use medmediate::inference::{estimate_with_intervals, interval_table, BootstrapPlan};
use medmediate::scenario::ScenarioSpec;
use medmediate::simulation::generate_dataset;

fn main() {
    let ds = generate_dataset(&ScenarioSpec::table(4).unwrap(), 1500, 3);
    let plan = BootstrapPlan::new(200, 11);
    for method in [MethodId::Weighting, MethodId::Jerolon] {
        let est = estimate_with_intervals(&ds, &EstimatorConfig::new(method).seed(5), Some(&plan)).unwrap();
        println!("{method}");
        for (effect, value, iv) in interval_table(&est) {
            let iv = iv.unwrap();
            println!("  {effect:<4} {value:.3} [{:.3}, {:.3}] ({:?})", iv.lower, iv.upper, iv.source);
        }
    }
}
