//! Acceptance criteria. Each test prints one PASS/FAIL line and then
//! asserts the same condition.

mod common;

use std::time::Instant;

use common::{mc_effects, Process};
use medmediate::bvn::bvn_cdf;
use medmediate::estimators::{estimate, Effect, EstimatorConfig, MethodId};
use medmediate::formula::true_effects;
use medmediate::glm::{self, Family};
use medmediate::inference::BootstrapPlan;
use medmediate::scenario::ScenarioSpec;
use medmediate::simulation::{generate_dataset, run_scenario, SimulationPlan};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

fn report(id: u32, pass: bool, summary: &str, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("[{tag}] criterion {id}: {summary} ({detail})");
}

#[test]
fn criterion_1_decomposition_identity() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    for (k, id) in [1u32, 5, 9, 14].into_iter().enumerate() {
        let spec = ScenarioSpec::table(id).unwrap();
        for r in 0..5 {
            let ds = generate_dataset(&spec, 2000, 1000 + (k * 5 + r) as u64);
            for m in MethodId::ALL {
                let est = estimate(&ds, &EstimatorConfig::new(m).seed(r as u64)).unwrap();
                worst = worst.max(est.decomposition_error());
                runs += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst <= 1e-10 && secs < 300.0;
    report(
        1,
        pass,
        "te = de x ie for all six methods on 20 datasets",
        &format!("{runs} estimates, max relative error {worst:.2e}, {secs:.1}s"),
    );
    assert!(pass);
}

#[test]
fn criterion_2_oracle_equivalence() {
    let start = Instant::now();
    let cases = [
        (1u32, Process::scenario([false, false], 0.0, false)),
        (7, Process::scenario([false, false], 0.5, false)),
        (11, Process::scenario([true, true], 0.75, false)),
        (16, Process::scenario([false, false], 0.75, true)),
    ];
    let mut worst_z: f64 = 0.0;
    for (id, process) in cases {
        let truth = true_effects(&ScenarioSpec::table(id).unwrap()).unwrap();
        let mc = mc_effects(&process, 10_000_000, 77 + u64::from(id));
        let values = [truth.te, truth.de, truth.ie, truth.ie1, truth.ie2];
        for (v, (est, se)) in values.iter().zip(mc.effects) {
            worst_z = worst_z.max((v - est).abs() / se);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst_z < 3.0 && secs < 600.0;
    report(
        2,
        pass,
        "integrated truth matches 1e7-draw Monte Carlo for scenarios 1, 7, 11, 16",
        &format!("max |z| = {worst_z:.2} over 20 effects, {secs:.1}s"),
    );
    assert!(pass);
}

#[test]
fn criterion_3_null_path() {
    let mut lines = Vec::new();
    let mut pass = true;
    for id in [1u32, 2, 3] {
        let spec = ScenarioSpec::table(id).unwrap().with_null_mediation();
        let truth = true_effects(&spec).unwrap();
        pass &= truth.ie1 == 1.0 && truth.ie2 == 1.0;
        let ds = generate_dataset(&spec, 100_000, 300 + u64::from(id));
        for m in MethodId::ALL {
            let ie = estimate(&ds, &EstimatorConfig::new(m).seed(5)).unwrap().ie;
            pass &= ie > 0.98 && ie < 1.02;
            lines.push(format!("s{id} {m} {ie:.4}"));
        }
        lines.push(format!("s{id} truth IE1 {} IE2 {}", truth.ie1, truth.ie2));
    }
    report(
        3,
        pass,
        "null mediation: every IE in (0.98, 1.02) at N=1e5, truth IE1 = IE2 = 1",
        &lines.join(", "),
    );
    assert!(pass);
}

#[test]
fn criterion_4_scenario_1_bias_and_coverage() {
    let start = Instant::now();
    let spec = ScenarioSpec::table(1).unwrap();
    let mut plan = SimulationPlan::new(200, 1000, vec![MethodId::Weighting, MethodId::Jerolon], 2024);
    plan.bootstrap = Some(BootstrapPlan::new(200, 0));
    let run = run_scenario(&spec, &plan).unwrap();
    let find = |m: MethodId, e: Effect| {
        run.records
            .iter()
            .find(|r| r.method == m && r.effect == e)
            .unwrap()
            .clone()
    };
    let w = find(MethodId::Weighting, Effect::Te);
    let j = find(MethodId::Jerolon, Effect::Ie);
    let cov = w.coverage.unwrap();
    let pass = w.percent_bias.abs() < 10.0 && j.percent_bias.abs() < 10.0 && (0.90..=0.985).contains(&cov);
    report(
        4,
        pass,
        "scenario 1, 200 replicates: weighting TE and jerolon IE |bias| < 10%, weighting TE coverage in [0.90, 0.985]",
        &format!(
            "weighting TE bias {:.2}%, coverage {:.3} (n={}); jerolon IE bias {:.2}% (n={}); {:.0}s",
            w.percent_bias,
            cov,
            w.n_used,
            j.percent_bias,
            j.n_used,
            start.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_5_traditional_bias_direction() {
    let spec = ScenarioSpec::table(10).unwrap();
    let mut plan = SimulationPlan::new(200, 1000, vec![MethodId::Difference, MethodId::Regression], 10);
    plan.bootstrap = None;
    let run = run_scenario(&spec, &plan).unwrap();
    let bias = |m: MethodId| {
        run.records
            .iter()
            .find(|r| r.method == m && r.effect == Effect::De)
            .unwrap()
            .percent_bias
    };
    let ie = |m: MethodId| -> Vec<f64> {
        let mut v: Vec<(usize, f64)> = run
            .outcomes
            .iter()
            .filter(|o| o.method == m)
            .filter_map(|o| o.result.as_ref().ok().map(|e| (o.replicate, e.ie)))
            .collect();
        v.sort_by_key(|p| p.0);
        v.into_iter().map(|p| p.1).collect()
    };
    let (d, r) = (ie(MethodId::Difference), ie(MethodId::Regression));
    assert_eq!(d.len(), r.len());
    let mean_rel = d.iter().zip(&r).map(|(a, b)| (a - b).abs() / b).sum::<f64>() / d.len() as f64;
    let (bd, br) = (bias(MethodId::Difference), bias(MethodId::Regression));
    let pass = bd < 0.0 && br < 0.0 && mean_rel < 0.05;
    report(
        5,
        pass,
        "scenario 10: difference/regression DE bias negative, their IE agree within 5%",
        &format!("DE bias difference {bd:.2}%, regression {br:.2}%; mean |IE_D - IE_R| / IE_R = {:.2}%", 100.0 * mean_rel),
    );
    assert!(pass);
}

#[test]
fn criterion_6_path_specific() {
    let spec = ScenarioSpec::table(10).unwrap();
    let small = generate_dataset(&spec, 1000, 61);
    let mut emitters = Vec::new();
    for m in MethodId::ALL {
        let est = estimate(&small, &EstimatorConfig::new(m).seed(1)).unwrap();
        if est.value(Effect::Ie1).is_some() && est.value(Effect::Ie2).is_some() {
            emitters.push(m);
        }
    }
    let capability = emitters == [MethodId::Wang, MethodId::Jerolon];

    let truth = true_effects(&spec).unwrap();
    let ds = generate_dataset(&spec, 100_000, 62);
    let wang = estimate(&ds, &EstimatorConfig::new(MethodId::Wang)).unwrap();
    let path = wang.ie_path.clone().unwrap();
    let rel1 = (path[0] / truth.ie1 - 1.0).abs();
    let rel2 = (path[1] / truth.ie2 - 1.0).abs();
    let pass = capability && rel1 < 0.05 && rel2 < 0.05;
    report(
        6,
        pass,
        "only wang/jerolon emit IE1/IE2; wang IE1, IE2 within 5% of truth in scenario 10 at N=1e5",
        &format!(
            "emitters {emitters:?}; IE1 {:.4} vs {:.4} ({:.1}%), IE2 {:.4} vs {:.4} ({:.1}%)",
            path[0],
            truth.ie1,
            100.0 * rel1,
            path[1],
            truth.ie2,
            100.0 * rel2
        ),
    );
    assert!(pass);
}

fn random_instance(family: Family, seed: u64) -> (DMatrix<f64>, Vec<f64>, Vec<f64>) {
    let mut g = ChaCha20Rng::seed_from_u64(seed);
    let n = g.random_range(25..=50);
    let p = g.random_range(2..=4);
    let x = DMatrix::from_fn(n, p, |_, j| if j == 0 { 1.0 } else { g.sample::<f64, _>(StandardNormal) });
    let beta: Vec<f64> = (0..p).map(|j| if j == 0 { -0.8 } else { 0.3 * g.sample::<f64, _>(StandardNormal) }).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let eta: f64 = (0..p).map(|j| x[(i, j)] * beta[j]).sum();
            match family {
                Family::Linear => eta + g.sample::<f64, _>(StandardNormal),
                Family::Logistic => f64::from(g.random::<f64>() < 1.0 / (1.0 + (-eta).exp())),
                Family::Probit => f64::from(eta + g.sample::<f64, _>(StandardNormal) > 0.0),
                Family::ModifiedPoisson => f64::from(g.random::<f64>() < eta.exp().min(0.95)),
            }
        })
        .collect();
    let w: Vec<f64> = (0..n).map(|_| g.random_range(0.5..2.0)).collect();
    (x, y, w)
}

/// Per-observation score u and negative second derivative h in η.
fn score_terms(family: Family, y: f64, eta: f64) -> (f64, f64) {
    match family {
        Family::Linear => (y - eta, 1.0),
        Family::ModifiedPoisson => (y - eta.exp(), eta.exp()),
        Family::Logistic => {
            let mu = 1.0 / (1.0 + (-eta).exp());
            (y - mu, mu * (1.0 - mu))
        }
        Family::Probit => {
            let phi = (-0.5 * eta * eta).exp() / (2.0 * std::f64::consts::PI).sqrt();
            let cdf = medmediate::normal::cdf(eta);
            let lp = phi / cdf;
            let lm = phi / (1.0 - cdf);
            let u = y * lp - (1.0 - y) * lm;
            let h = y * lp * (lp + eta) + (1.0 - y) * lm * (lm - eta);
            (u, h)
        }
    }
}

#[test]
fn criterion_7_numerical_kernels() {
    let mut bvn_err: f64 = 0.0;
    for k in -9..=9 {
        let rho = f64::from(k) / 10.0;
        let exact = 0.25 + rho.asin() / (2.0 * std::f64::consts::PI);
        bvn_err = bvn_err.max((bvn_cdf(0.0, 0.0, rho) - exact).abs());
    }

    let families = [Family::Logistic, Family::Probit, Family::ModifiedPoisson, Family::Linear];
    let mut score_err: f64 = 0.0;
    let mut sandwich_err: f64 = 0.0;
    for i in 0..20u64 {
        let family = families[(i % 4) as usize];
        let (x, y, w) = random_instance(family, 500 + i);
        let fit = glm::fit(family, &x, &y, Some(&w)).unwrap();
        let beta = fit.coefficients.clone();
        let h = 1e-5;
        for j in 0..beta.len() {
            let mut up = beta.clone();
            let mut dn = beta.clone();
            up[j] += h;
            dn[j] -= h;
            let g = (glm::log_likelihood(family, &x, &y, Some(&w), &up)
                - glm::log_likelihood(family, &x, &y, Some(&w), &dn))
                / (2.0 * h);
            score_err = score_err.max(g.abs());
        }

        let p = x.ncols();
        let mut a = DMatrix::zeros(p, p);
        let mut b = DMatrix::zeros(p, p);
        for r in 0..x.nrows() {
            let xi: DVector<f64> = x.row(r).transpose();
            let eta = xi.dot(&beta);
            let (u, hh) = score_terms(family, y[r], eta);
            a += &xi * xi.transpose() * (w[r] * hh);
            b += &xi * xi.transpose() * (w[r] * w[r] * u * u);
        }
        let ainv = a.try_inverse().unwrap();
        let dense = &ainv * b * &ainv;
        let diff = (&dense - &fit.covariance_robust).amax() / dense.amax().max(1e-300);
        sandwich_err = sandwich_err.max(diff);
    }
    let pass = bvn_err < 1e-10 && score_err < 1e-6 && sandwich_err < 1e-10;
    report(
        7,
        pass,
        "bvn closed form, GLM score at MLE, sandwich vs dense oracle",
        &format!("bvn max err {bvn_err:.1e}, max |FD score| {score_err:.1e}, sandwich max rel diff {sandwich_err:.1e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_8_determinism_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, sub: &str| {
        let out = dir.path().join(sub);
        let code = medmediate::cli::run([
            "medmediate", "--threads", threads, "simulate", "--scenario", "7", "--replicates", "10", "--n", "300",
            "--methods", "all", "--boot", "40", "--draws", "100", "--seed", "1", "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        std::fs::read(out.join("metrics.csv")).unwrap()
    };
    let one = run("1", "t1");
    let eight = run("8", "t8");
    let pass = one == eight && !one.is_empty();
    report(
        8,
        pass,
        "simulate with 1 and 8 threads writes byte-identical metrics.csv",
        &format!("{} bytes, identical = {}", one.len(), one == eight),
    );
    assert!(pass);
}

#[test]
fn criterion_9_four_mediator_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("four.csv");
    let mut g = ChaCha20Rng::seed_from_u64(909);
    let mut text = String::from("y,x,b1,b2,c1,c2,age,sex\n");
    for _ in 0..2000 {
        let age: f64 = g.sample(StandardNormal);
        let sex = f64::from(g.random::<f64>() < 0.5);
        let x = f64::from(g.random::<f64>() < 1.0 / (1.0 + (0.3 * age - 0.2 * sex).exp()));
        let z: [f64; 4] = [g.sample(StandardNormal), g.sample(StandardNormal), g.sample(StandardNormal), g.sample(StandardNormal)];
        let shared: f64 = g.sample(StandardNormal);
        let b1 = f64::from(-0.4 + 0.6 * x + 0.2 * age + 0.5 * shared + z[0] > 0.0);
        let b2 = f64::from(-0.2 + 0.4 * x - 0.1 * sex + 0.5 * shared + z[1] > 0.0);
        let c1 = 0.5 * x + 0.3 * age + 0.5 * shared + z[2];
        let c2 = -0.3 + 0.4 * x + 0.2 * sex + 0.5 * shared + z[3];
        let eta = -1.6 + 0.3 * x + 0.4 * b1 + 0.3 * b2 + 0.25 * c1 + 0.2 * c2 + 0.2 * age + 0.1 * sex;
        let y = f64::from(g.random::<f64>() < 1.0 / (1.0 + (-eta).exp()));
        text.push_str(&format!("{y},{x},{b1},{b2},{c1},{c2},{age},{sex}\n"));
    }
    std::fs::write(&csv, text).unwrap();
    let out = dir.path().join("res.json");
    let code = medmediate::cli::run([
        "medmediate", "analyze", "--data", csv.to_str().unwrap(), "--outcome", "y", "--exposure", "x",
        "--mediators", "b1:binary,b2:binary,c1:continuous,c2:continuous", "--covariates", "age,sex",
        "--methods", "difference,regression,weighting,iorw", "--boot", "200", "--seed", "9",
        "--out", out.to_str().unwrap(), "--json",
    ]);
    let completed = code == 0;
    let json: serde_json::Value = if completed {
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap()
    } else {
        serde_json::Value::Null
    };
    let width = |m: &str| json["methods"][m]["IE"]["width"].as_f64().unwrap_or(f64::NAN);
    let (d, r, w, i) = (width("difference"), width("regression"), width("weighting"), width("iorw"));
    let pass = completed && w.min(i) > d.max(r);
    report(
        9,
        pass,
        "four-mediator analyze completes; IE widths weighting/iorw > difference/regression",
        &format!("exit {code}; IE widths difference {d:.4}, regression {r:.4}, weighting {w:.4}, iorw {i:.4}"),
    );
    assert!(pass);
}
