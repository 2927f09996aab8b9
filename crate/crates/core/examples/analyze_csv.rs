//! Writes a dataset to CSV, loads it back with role assignments and runs the
//! `analyze` command on it.

use medmediate::data::{load_csv, MediatorKind, RoleSpec};
use medmediate::scenario::ScenarioSpec;
use medmediate::simulation::generate_dataset;

fn main() {
    let dir = std::env::temp_dir().join("medmediate-analyze-example");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("study.csv");
    generate_dataset(&ScenarioSpec::table(12).unwrap(), 2000, 9).save_csv(&path).unwrap();

    let roles = RoleSpec::new("Y", "X")
        .mediator("M1", MediatorKind::Binary)
        .mediator("M2", MediatorKind::Continuous)
        .covariate("C");
    let ds = load_csv(&path, &roles).unwrap();
    println!("loaded {} rows from {}", ds.n_rows(), path.display());

    let code = medmediate::cli::run([
        "medmediate",
        "analyze",
        "--data",
        path.to_str().unwrap(),
        "--outcome",
        "Y",
        "--exposure",
        "X",
        "--mediators",
        "M1:binary,M2:continuous",
        "--covariates",
        "C",
        "--boot",
        "100",
        "--seed",
        "1",
    ]);
    std::process::exit(code);
}
