use medmediate::joint::{fit_joint, pearson, sample_counterfactual_pair};
use medmediate::scenario::ScenarioSpec;
use medmediate::simulation::generate_dataset;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn phi_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

#[test]
fn correlation_recovered_for_each_mediator_pair() {
    for (id, rho, tol) in [(1, 0.0, 0.02), (10, 0.75, 0.03), (11, 0.75, 0.03), (12, 0.75, 0.03), (5, 0.25, 0.03)] {
        let ds = generate_dataset(&ScenarioSpec::table(id).unwrap(), 100_000, 17 + u64::from(id));
        let model = fit_joint(&ds, ["M1", "M2"]).unwrap();
        assert!((model.rho() - rho).abs() < tol, "scenario {id}: rho {}", model.rho());
    }
}

#[test]
fn marginal_coefficients_recovered() {
    let spec = ScenarioSpec::table(2).unwrap();
    let ds = generate_dataset(&spec, 100_000, 3);
    let model = fit_joint(&ds, ["M1", "M2"]).unwrap();
    for (k, truth) in [spec.mediator1, spec.mediator2].into_iter().enumerate() {
        let fit = &model.marginals[k].fit;
        for (j, t) in truth.into_iter().enumerate() {
            let se = fit.covariance_model[(j, j)].sqrt();
            assert!((fit.coefficients[j] - t).abs() < 4.0 * se, "mediator {k} coef {j}");
        }
    }
}

fn pearson_oracle(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

proptest! {
    #[test]
    fn pearson_matches_two_pass(pairs in prop::collection::vec((-1e3..1e3f64, -1e3..1e3f64), 3..200)) {
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let want = pearson_oracle(&a, &b);
        prop_assume!(want.is_finite());
        prop_assert!((pearson(&a, &b) - want).abs() < 1e-12);
    }
}

#[test]
fn counterfactual_draws_follow_the_fitted_law() {
    let spec = ScenarioSpec::table(11).unwrap();
    let ds = generate_dataset(&spec, 100_000, 8);
    let model = fit_joint(&ds, ["M1", "M2"]).unwrap();
    let mut g = ChaCha20Rng::seed_from_u64(1);
    let draws = 100_000;
    let mut cells = [[0.0; 2]; 2];
    for _ in 0..draws {
        let (m1, m2) = sample_counterfactual_pair(&model, 1.0, 1.0, &[0.0], &mut g);
        cells[m1 as usize][m2 as usize] += 1.0 / draws as f64;
    }
    assert!((cells[1][0] + cells[1][1] - phi_cdf(-0.2)).abs() < 0.01);

    // Same cells among observed rows with X = 1, C = 0.
    let (x, c) = (ds.column("X").unwrap(), ds.column("C").unwrap());
    let (m1, m2) = (ds.column("M1").unwrap(), ds.column("M2").unwrap());
    let mut observed = [[0.0; 2]; 2];
    let mut count = 0.0;
    for i in 0..ds.n_rows() {
        if x[i] == 1.0 && c[i] == 0.0 {
            observed[m1[i] as usize][m2[i] as usize] += 1.0;
            count += 1.0;
        }
    }
    for a in 0..2 {
        for b in 0..2 {
            assert!((cells[a][b] - observed[a][b] / count).abs() < 0.02, "cell {a}{b}");
        }
    }
}

#[test]
fn cross_world_draws_use_one_latent_pair() {
    let ds = generate_dataset(&ScenarioSpec::table(10).unwrap(), 20_000, 9);
    let model = fit_joint(&ds, ["M1", "M2"]).unwrap();
    let shift = model.marginals[1].fit.coefficients[1];
    let mut a = ChaCha20Rng::seed_from_u64(4);
    let mut b = ChaCha20Rng::seed_from_u64(4);
    for _ in 0..100 {
        let (p1, p2) = sample_counterfactual_pair(&model, 0.0, 0.0, &[1.0], &mut a);
        let (q1, q2) = sample_counterfactual_pair(&model, 0.0, 1.0, &[1.0], &mut b);
        assert_eq!(p1, q1);
        assert!((q2 - p2 - shift).abs() < 1e-12);
    }
}

#[test]
fn sampling_is_reproducible() {
    let ds = generate_dataset(&ScenarioSpec::table(3).unwrap(), 5_000, 10);
    let model = fit_joint(&ds, ["M1", "M2"]).unwrap();
    let draw = |seed| {
        let mut g = ChaCha20Rng::seed_from_u64(seed);
        (0..50).map(|_| sample_counterfactual_pair(&model, 1.0, 0.0, &[1.0], &mut g)).collect::<Vec<_>>()
    };
    assert_eq!(draw(5), draw(5));
    assert_ne!(draw(5), draw(6));
}
