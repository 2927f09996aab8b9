//! Imputation-based regression method.
//!
//! Mediators are drawn independently from their fitted marginal models
//! (log-link for binary, linear-normal for continuous) under exposure 0 and
//! 1, pushed through the log-link outcome model and averaged over subjects
//! and draws. The residual correlation between mediators is ignored.
//!
//! Draw `d` uses the random stream keyed by `(seed, d)` and visits subjects
//! in row order; both exposure settings share the same uniforms/normals so
//! the three means are coupled.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{exposure_covariate_design, outcome_design, EffectEstimates, EstimatorConfig, MethodId};
use crate::data::{Dataset, MediatorKind};
use crate::error::Result;
use crate::glm::{self, Family};
use crate::joint::linear_predictor;
use crate::rng::{self, label};

pub fn estimate_regression(ds: &Dataset, cfg: &EstimatorConfig) -> Result<EffectEstimates> {
    let view = ds.view()?;
    let n = view.n_rows();
    let outcome = glm::fit(Family::ModifiedPoisson, &outcome_design(&view, false)?, view.outcome, None)?;
    let beta = outcome.coefficients.as_slice();
    let k = view.mediators.len();

    let med_design = exposure_covariate_design(&view);
    let mut marginals = Vec::with_capacity(k);
    for m in &view.mediators {
        let family = match m.kind {
            MediatorKind::Binary => Family::ModifiedPoisson,
            MediatorKind::Continuous => Family::Linear,
        };
        let fit = glm::fit(family, &med_design, m.values, None)?;
        marginals.push((m.kind, fit.coefficients.as_slice().to_vec(), fit.residual_sd.unwrap_or(0.0)));
    }

    let rows = view.covariate_rows();
    // Per subject, per mediator: linear predictors at X = 0 and X = 1.
    let lp: Vec<Vec<[f64; 2]>> = rows
        .iter()
        .map(|c| {
            marginals
                .iter()
                .map(|(_, a, _)| [linear_predictor(a, 0.0, c), linear_predictor(a, 1.0, c)])
                .collect()
        })
        .collect();
    let cov_part: Vec<f64> = rows
        .iter()
        .map(|c| c.iter().zip(&beta[2 + k..]).map(|(v, b)| v * b).sum())
        .collect();

    let draws = cfg.n_imputation_draws;
    let sums: Vec<[f64; 3]> = (0..draws)
        .into_par_iter()
        .map(|d| {
            let mut g = rng::stream(cfg.rng_seed, &[label::IMPUTATION, d as u64]);
            let mut acc = [0.0; 3];
            let mut m0 = vec![0.0; k];
            let mut m1 = vec![0.0; k];
            for i in 0..n {
                for (j, (kind, _, sigma)) in marginals.iter().enumerate() {
                    let [e0, e1] = lp[i][j];
                    match kind {
                        MediatorKind::Binary => {
                            let u: f64 = g.random();
                            m0[j] = f64::from(u < e0.exp().min(1.0));
                            m1[j] = f64::from(u < e1.exp().min(1.0));
                        }
                        MediatorKind::Continuous => {
                            let z: f64 = g.sample(StandardNormal);
                            m0[j] = e0 + sigma * z;
                            m1[j] = e1 + sigma * z;
                        }
                    }
                }
                let med = |m: &[f64]| m.iter().zip(&beta[2..2 + k]).map(|(v, b)| v * b).sum::<f64>();
                let base = beta[0] + cov_part[i];
                let (s0, s1) = (med(&m0), med(&m1));
                acc[0] += (base + s0).exp();
                acc[1] += (base + beta[1] + s0).exp();
                acc[2] += (base + beta[1] + s1).exp();
            }
            acc
        })
        .collect();
    let mut total = [0.0; 3];
    for s in &sums {
        for j in 0..3 {
            total[j] += s[j];
        }
    }
    let [y000, y100, y111] = total;
    let mut est = EffectEstimates::new(MethodId::Regression, y111 / y000, y100 / y000, y111 / y100, n);
    est.meta.draws = Some(draws);
    Ok(est)
}
