//! Bivariate normal probabilities and the cell probabilities of two
//! correlated probit mediators.

use medmediate::bvn::{bvn_cdf, orthant_probabilities};

fn main() {
    println!("P(Z1 <= 0, Z2 <= 0) by rho:");
    for rho in [-0.9, -0.5, 0.0, 0.5, 0.9] {
        let exact = 0.25 + f64::asin(rho) / (2.0 * std::f64::consts::PI);
        println!("  rho {rho:>5.2}: {:.12} (closed form {exact:.12})", bvn_cdf(0.0, 0.0, rho));
    }

    let (mu1, mu2, rho) = (-0.2, 0.5, 0.6);
    let p = orthant_probabilities(mu1, mu2, rho);
    println!("\nlatent means ({mu1}, {mu2}), rho {rho}");
    for (a, row) in p.iter().enumerate() {
        for (b, v) in row.iter().enumerate() {
            println!("  P(M1={a}, M2={b}) = {v:.6}");
        }
    }
}
