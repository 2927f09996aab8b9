//! Data generation and the Monte Carlo benchmark.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Column, Dataset, MediatorKind, Role};
use crate::error::Result;
use crate::estimators::{Effect, EffectEstimates, EstimatorConfig, MethodId};
use crate::formula::{true_effects, TrueEffects};
use crate::inference::{estimate_with_intervals, BootstrapPlan};
use crate::joint::correlate;
use crate::normal;
use crate::rng::{self, label};
use crate::scenario::ScenarioSpec;

/// Mediator values for one subject given standard-normal latent residuals
/// `eps` (already correlated).
pub fn mediator_values(spec: &ScenarioSpec, x: f64, c: f64, eps: [f64; 2]) -> [f64; 2] {
    let coefs = [spec.mediator1, spec.mediator2];
    let mut m = [0.0; 2];
    for k in 0..2 {
        let a = coefs[k];
        let base = a[0] + a[1] * x + a[2] * c;
        m[k] = match spec.mediator_kinds[k] {
            MediatorKind::Binary => f64::from(base + eps[k] > 0.0),
            MediatorKind::Continuous => base + spec.sigmas[k] * eps[k],
        };
    }
    m
}

/// Simulates `n` subjects with columns `Y, X, M1, M2, C`.
pub fn generate_dataset(spec: &ScenarioSpec, n: usize, seed: u64) -> Dataset {
    let mut g = rng::stream(seed, &[label::DATASET]);
    let model = spec.outcome_model();
    let mut cols: [Vec<f64>; 5] = Default::default();
    for col in cols.iter_mut() {
        col.reserve(n);
    }
    for _ in 0..n {
        let c = f64::from(g.random::<f64>() < spec.covariate_p);
        let x = f64::from(g.random::<f64>() < spec.exposure_probability(c));
        let eps = correlate(spec.rho, [g.sample(StandardNormal), g.sample(StandardNormal)]);
        let m = mediator_values(spec, x, c, eps);
        let p = normal::expit(model.eta(x, m, &[c]));
        let y = f64::from(g.random::<f64>() < p);
        for (col, v) in cols.iter_mut().zip([y, x, m[0], m[1], c]) {
            col.push(v);
        }
    }
    let [y, x, m1, m2, c] = cols;
    let column = |name: &str, values| Column {
        name: name.into(),
        values,
    };
    Dataset::new(
        vec![column("Y", y), column("X", x), column("M1", m1), column("M2", m2), column("C", c)],
        vec![
            ("Y".into(), Role::Outcome),
            ("X".into(), Role::Exposure),
            ("M1".into(), Role::Mediator(spec.mediator_kinds[0])),
            ("M2".into(), Role::Mediator(spec.mediator_kinds[1])),
            ("C".into(), Role::Covariate),
        ],
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationPlan {
    pub n_replicates: usize,
    pub n: usize,
    pub methods: Vec<MethodId>,
    /// `None` skips the bootstrap: only point metrics are computed for the
    /// bootstrap-based methods.
    pub bootstrap: Option<BootstrapPlan>,
    /// Imputation and quasi-Bayes draws per estimate.
    pub draws: usize,
    pub seed: u64,
    /// Adds the M₁M₂ term for methods that support it when the scenario
    /// has an interaction.
    pub interaction_when_supported: bool,
}

impl SimulationPlan {
    pub fn new(n_replicates: usize, n: usize, methods: Vec<MethodId>, seed: u64) -> Self {
        SimulationPlan {
            n_replicates,
            n,
            methods,
            bootstrap: Some(BootstrapPlan::default()),
            draws: 1000,
            seed,
            interaction_when_supported: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub scenario: u32,
    pub method: MethodId,
    pub effect: Effect,
    pub truth: f64,
    pub percent_bias: f64,
    pub mse: f64,
    pub coverage: Option<f64>,
    pub mean_width: Option<f64>,
    pub n_used: usize,
}

/// Estimates of one method in one replicate.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicateOutcome {
    pub replicate: usize,
    pub method: MethodId,
    pub result: std::result::Result<EffectEstimates, String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioRun {
    pub spec: ScenarioSpec,
    pub truth: TrueEffects,
    pub prevalence: f64,
    pub records: Vec<MetricsRecord>,
    /// Failed replicates per method.
    pub failures: BTreeMap<MethodId, usize>,
    pub outcomes: Vec<ReplicateOutcome>,
}

/// Seed of replicate `r` of scenario `id`.
pub fn replicate_seed(master: u64, id: u32, r: usize) -> u64 {
    rng::derive_seed(master, &[label::REPLICATE, u64::from(id), r as u64])
}

/// Runs every method on `n_replicates` simulated datasets and scores the
/// estimates against the integrated truth.
pub fn run_scenario(spec: &ScenarioSpec, plan: &SimulationPlan) -> Result<ScenarioRun> {
    let truth = true_effects(spec)?;
    let prevalence = spec.prevalence()?;
    if let Some(b) = &plan.bootstrap {
        b.validate()?;
    }

    let per_rep: Vec<Vec<ReplicateOutcome>> = (0..plan.n_replicates)
        .into_par_iter()
        .map(|r| {
            let seed = replicate_seed(plan.seed, spec.id, r);
            let ds = generate_dataset(spec, plan.n, seed);
            plan.methods
                .iter()
                .map(|&method| {
                    let mut cfg = EstimatorConfig::new(method)
                        .draws(plan.draws)
                        .seed(rng::derive_seed(seed, &[label::METHOD, method as u64]));
                    cfg.include_interaction = plan.interaction_when_supported
                        && spec.interaction
                        && method.capabilities().interaction_supported;
                    let boot = plan.bootstrap.as_ref().map(|b| BootstrapPlan {
                        seed: rng::derive_seed(seed, &[label::BOOTSTRAP, method as u64]),
                        ..b.clone()
                    });
                    ReplicateOutcome {
                        replicate: r,
                        method,
                        result: estimate_with_intervals(&ds, &cfg, boot.as_ref()).map_err(|e| e.to_string()),
                    }
                })
                .collect()
        })
        .collect();
    let outcomes: Vec<ReplicateOutcome> = per_rep.into_iter().flatten().collect();

    let mut records = Vec::new();
    let mut failures = BTreeMap::new();
    for &method in &plan.methods {
        let ok: Vec<&EffectEstimates> = outcomes
            .iter()
            .filter(|o| o.method == method)
            .filter_map(|o| o.result.as_ref().ok())
            .collect();
        failures.insert(method, plan.n_replicates - ok.len());
        for effect in Effect::ALL {
            let t = truth_of(&truth, effect);
            let est: Vec<f64> = ok.iter().filter_map(|e| e.value(effect)).collect();
            if est.is_empty() {
                continue;
            }
            let intervals: Vec<_> = ok.iter().filter_map(|e| e.intervals.get(&effect)).collect();
            records.push(metrics(spec.id, method, effect, t, &est, &intervals));
        }
    }
    Ok(ScenarioRun {
        spec: spec.clone(),
        truth,
        prevalence,
        records,
        failures,
        outcomes,
    })
}

pub fn truth_of(truth: &TrueEffects, effect: Effect) -> f64 {
    match effect {
        Effect::Te => truth.te,
        Effect::De => truth.de,
        Effect::Ie => truth.ie,
        Effect::Ie1 => truth.ie1,
        Effect::Ie2 => truth.ie2,
    }
}

/// Percent bias, MSE, coverage and mean width of a set of estimates.
pub fn metrics(
    scenario: u32,
    method: MethodId,
    effect: Effect,
    truth: f64,
    estimates: &[f64],
    intervals: &[&crate::estimators::IntervalEstimate],
) -> MetricsRecord {
    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let mse = estimates.iter().map(|e| (e - truth).powi(2)).sum::<f64>() / n;
    let (coverage, mean_width) = if intervals.is_empty() {
        (None, None)
    } else {
        let k = intervals.len() as f64;
        let hit = intervals.iter().filter(|i| i.contains(truth)).count() as f64;
        let width = intervals.iter().map(|i| i.width()).sum::<f64>() / k;
        (Some(hit / k), Some(width))
    };
    MetricsRecord {
        scenario,
        method,
        effect,
        truth,
        percent_bias: 100.0 * (mean - truth) / truth,
        mse,
        coverage,
        mean_width,
        n_used: estimates.len(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResultFormat {
    Csv,
    Json,
}

pub const METRICS_HEADER: [&str; 9] = [
    "scenario",
    "method",
    "effect",
    "truth",
    "percent_bias",
    "mse",
    "coverage",
    "mean_width",
    "n_used",
];

pub fn write_results_csv<W: std::io::Write>(records: &[MetricsRecord], writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(METRICS_HEADER)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results_csv<R: std::io::Read>(reader: R) -> Result<Vec<MetricsRecord>> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != METRICS_HEADER {
        return Err(crate::error::Error::Config(format!(
            "not a metrics file: header {header:?}"
        )));
    }
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn export_results(records: &[MetricsRecord], path: impl AsRef<Path>, format: ResultFormat) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    match format {
        ResultFormat::Csv => write_results_csv(records, file),
        ResultFormat::Json => {
            serde_json::to_writer_pretty(file, records)?;
            Ok(())
        }
    }
}

pub fn import_results(path: impl AsRef<Path>, format: ResultFormat) -> Result<Vec<MetricsRecord>> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    match format {
        ResultFormat::Csv => read_results_csv(file),
        ResultFormat::Json => Ok(serde_json::from_reader(file)?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{IntervalEstimate, IntervalSource};

    #[test]
    fn deterministic_mediators() {
        let bin = ScenarioSpec::table(2).unwrap();
        assert_eq!(mediator_values(&bin, 1.0, 0.0, [0.0, 0.0])[0], 0.0);
        let cont = ScenarioSpec::table(1).unwrap();
        assert_eq!(mediator_values(&cont, 1.0, 1.0, [0.0, 2.0])[1], 2.5);
    }

    #[test]
    fn metric_arithmetic() {
        let r = metrics(1, MethodId::Difference, Effect::Te, 1.1, &[1.0, 1.2], &[]);
        assert!(r.percent_bias.abs() < 1e-12);
        assert!((r.mse - 0.01).abs() < 1e-12);
        let hit = IntervalEstimate { lower: 0.5, upper: 2.0, level: 0.95, source: IntervalSource::Bootstrap };
        let miss = IntervalEstimate { lower: 2.0, upper: 3.0, ..hit };
        let ivs: Vec<&IntervalEstimate> = (0..200).map(|i| if i < 190 { &hit } else { &miss }).collect();
        let r = metrics(1, MethodId::Difference, Effect::Te, 1.1, &[1.1; 200], &ivs);
        assert_eq!(r.coverage, Some(0.95));
    }

    #[test]
    fn csv_shapes() {
        let mut buf = Vec::new();
        write_results_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{}\n", METRICS_HEADER.join(",")));
        let rec = metrics(3, MethodId::Wang, Effect::Ie1, 1.05, &[1.0, 1.1], &[]);
        let mut buf = Vec::new();
        write_results_csv(std::slice::from_ref(&rec), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(read_results_csv(buf.as_slice()).unwrap(), vec![rec]);
    }
}
