//! Runs all six estimators on one simulated dataset and compares them with
//! the scenario's true effects.

use medmediate::estimators::{estimate, EstimatorConfig, MethodId};
use medmediate::formula::true_effects;
use medmediate::scenario::ScenarioSpec;
use medmediate::simulation::generate_dataset;

fn main() {
    let spec = ScenarioSpec::table(7).unwrap();
    let truth = true_effects(&spec).unwrap();
    let ds = generate_dataset(&spec, 5000, 42);
    println!("truth       TE {:.3}  DE {:.3}  IE {:.3}  IE1 {:.3}  IE2 {:.3}", truth.te, truth.de, truth.ie, truth.ie1, truth.ie2);
    for method in MethodId::ALL {
        let est = estimate(&ds, &EstimatorConfig::new(method).seed(1)).unwrap();
        let path = est
            .ie_path
            .as_ref()
            .map(|p| format!("  IE1 {:.3}  IE2 {:.3}", p[0], p[1]))
            .unwrap_or_default();
        println!("{method:<11} TE {:.3}  DE {:.3}  IE {:.3}{path}", est.te, est.de, est.ie);
    }
}
