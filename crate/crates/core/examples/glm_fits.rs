//! Fits each GLM family to a simulated dataset and prints coefficients with
//! model-based and sandwich standard errors.

use medmediate::glm::{self, design_with_intercept, Family};
use medmediate::scenario::ScenarioSpec;
use medmediate::simulation::generate_dataset;

fn main() {
    let ds = generate_dataset(&ScenarioSpec::table(3).unwrap(), 5000, 1);
    let col = |n: &str| ds.column(n).unwrap();

    let fits = [
        ("X ~ C (logistic)", Family::Logistic, design_with_intercept(&[col("C")]), col("X")),
        ("M1 ~ X + C (probit)", Family::Probit, design_with_intercept(&[col("X"), col("C")]), col("M1")),
        ("M2 ~ X + C (linear)", Family::Linear, design_with_intercept(&[col("X"), col("C")]), col("M2")),
        (
            "Y ~ X + M1 + M2 + C (modified Poisson)",
            Family::ModifiedPoisson,
            design_with_intercept(&[col("X"), col("M1"), col("M2"), col("C")]),
            col("Y"),
        ),
    ];
    for (label, family, design, y) in fits {
        let fit = glm::fit(family, &design, y, None).unwrap();
        println!("{label}: {} iterations", fit.iterations);
        let robust = fit.robust_se();
        for (j, b) in fit.coefficients.iter().enumerate() {
            let model_se = fit.covariance_model[(j, j)].sqrt();
            println!("  b{j} = {b:>8.4}  se {model_se:.4}  robust se {:.4}", robust[j]);
        }
    }
}
