//! True effects and outcome prevalence of every simulation scenario.

use medmediate::formula::true_effects;
use medmediate::scenario::ScenarioSpec;

fn main() {
    println!("id  kinds                    rho   prev     TE      DE      IE      IE1     IE2");
    for spec in ScenarioSpec::grid() {
        let t = true_effects(&spec).unwrap();
        println!(
            "{:>2}  {:<24} {:.2}  {:.3}  {:.4}  {:.4}  {:.4}  {:.4}  {:.4}",
            spec.id,
            format!("{:?}", spec.mediator_kinds),
            spec.rho,
            spec.prevalence().unwrap(),
            t.te,
            t.de,
            t.ie,
            t.ie1,
            t.ie2
        );
    }
}
