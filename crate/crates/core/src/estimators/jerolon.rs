//! Quasi-Bayesian simulation of counterfactual mediators.
//!
//! Parameters are drawn from the asymptotic normal law of each fit (the
//! outcome model with its sandwich covariance, the mediator marginals with
//! their model-based covariance; ρ and σ stay at their estimates). For each
//! draw every subject's counterfactual mediator pairs are simulated from one
//! latent residual pair and pushed through the log-link outcome model,
//! giving five counterfactual means per draw.
//!
//! The latent residual pair of each subject is drawn once and reused across
//! parameter draws, so all spread between draws comes from parameter
//! uncertainty. Point estimates are ratios of the median counterfactual
//! means, which keeps TE = DE × IE exact; intervals are the 2.5% and 97.5%
//! quantiles of the per-draw effects.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{
    outcome_design, quantile_sorted, require_two_mediators, Effect, EffectEstimates, EstimatorConfig,
    IntervalEstimate, IntervalSource, MethodId,
};
use crate::data::{Dataset, MediatorKind};
use crate::error::{Error, Result};
use crate::formula::{Link, SETTINGS};
use crate::glm::{self, Family, GlmFit};
use crate::joint::{correlate, fit_joint, linear_predictor, JointMediatorModel};
use crate::rng::{self, label};

const MAX_REJECTED_SHARE: f64 = 0.01;

pub fn estimate_jerolon(ds: &Dataset, cfg: &EstimatorConfig) -> Result<EffectEstimates> {
    let view = ds.view()?;
    require_two_mediators(&view, "jerolon")?;
    let design = outcome_design(&view, cfg.include_interaction)?;
    let outcome = glm::fit(Family::ModifiedPoisson, &design, view.outcome, None)?;
    let joint = fit_joint(ds, [view.mediators[0].name, view.mediators[1].name])?;
    estimate_jerolon_with_models(ds, cfg, &outcome, &joint)
}

/// Square root `L` with `L Lᵀ = cov`; falls back to an eigen decomposition
/// (negative eigenvalues clipped) when Cholesky fails.
fn sqrt_factor(cov: &DMatrix<f64>) -> DMatrix<f64> {
    if let Some(ch) = cov.clone().cholesky() {
        return ch.l();
    }
    let eig = cov.clone().symmetric_eigen();
    let d = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&d)
}

fn draw_normal<R: Rng>(mean: &DVector<f64>, factor: &DMatrix<f64>, g: &mut R) -> Vec<f64> {
    let z = DVector::from_iterator(mean.len(), (0..mean.len()).map(|_| g.sample::<f64, _>(StandardNormal)));
    (mean + factor * z).as_slice().to_vec()
}

/// Runs the simulation on already fitted models. `outcome` must be a fit on
/// `[1, X, M₁, M₂, (M₁M₂), C...]` matching `cfg.include_interaction`.
pub fn estimate_jerolon_with_models(
    ds: &Dataset,
    cfg: &EstimatorConfig,
    outcome: &GlmFit,
    joint: &JointMediatorModel,
) -> Result<EffectEstimates> {
    let view = ds.view()?;
    require_two_mediators(&view, "jerolon")?;
    let n = view.n_rows();
    let rows = view.covariate_rows();
    let rho = joint.rho();

    let mut latent = rng::stream(cfg.rng_seed, &[label::QB_LATENT]);
    let eps: Vec<[f64; 2]> = (0..n)
        .map(|_| correlate(rho, [latent.sample(StandardNormal), latent.sample(StandardNormal)]))
        .collect();

    let beta_factor = sqrt_factor(&outcome.covariance_robust);
    let alpha_factor: Vec<DMatrix<f64>> =
        joint.marginals.iter().map(|m| sqrt_factor(&m.fit.covariance_model)).collect();
    let interaction = cfg.include_interaction;

    let simulate = |attempt: usize| -> Option<[f64; 5]> {
        let mut g = rng::stream(cfg.rng_seed, &[label::QB_PARAMS, attempt as u64]);
        let beta = draw_normal(&outcome.coefficients, &beta_factor, &mut g);
        let alpha: Vec<Vec<f64>> = joint
            .marginals
            .iter()
            .zip(&alpha_factor)
            .map(|(m, l)| draw_normal(&m.fit.coefficients, l, &mut g))
            .collect();
        let model = super::wang::coefficients_to_model(&beta, interaction, Link::Log);
        let mut sums = [0.0; 5];
        for i in 0..n {
            let c = &rows[i];
            let mut med = [[0.0; 2]; 2];
            for k in 0..2 {
                for x in 0..2 {
                    let lp = linear_predictor(&alpha[k], x as f64, c);
                    let mk = &joint.marginals[k];
                    med[k][x] = match mk.kind {
                        MediatorKind::Binary => f64::from(lp + eps[i][k] > 0.0),
                        MediatorKind::Continuous => lp + mk.sigma * eps[i][k],
                    };
                }
            }
            for (s, &(x, xm)) in sums.iter_mut().zip(&SETTINGS) {
                let m = [med[0][xm[0] as usize], med[1][xm[1] as usize]];
                *s += model.mean(x, m, c);
            }
        }
        let means = sums.map(|s| s / n as f64);
        means.iter().all(|v| v.is_finite() && *v > 0.0).then_some(means)
    };

    let wanted = cfg.n_quasibayes_draws;
    let mut accepted: Vec<[f64; 5]> = Vec::with_capacity(wanted);
    let mut next = 0usize;
    let mut rejected = 0usize;
    let max_rejected = (MAX_REJECTED_SHARE * wanted as f64).floor() as usize;
    while accepted.len() < wanted {
        let batch = wanted - accepted.len();
        let out: Vec<Option<[f64; 5]>> = (next..next + batch).into_par_iter().map(simulate).collect();
        next += batch;
        for o in out {
            match o {
                Some(m) => accepted.push(m),
                None => rejected += 1,
            }
        }
        if rejected > max_rejected {
            return Err(Error::RejectedDraws {
                rejected,
                requested: wanted,
            });
        }
    }

    let median = |j: usize| {
        let mut v: Vec<f64> = accepted.iter().map(|m| m[j]).collect();
        v.sort_by(f64::total_cmp);
        quantile_sorted(&v, 0.5)
    };
    let med: Vec<f64> = (0..5).map(median).collect();
    let ratio = |a: usize, b: usize| med[a] / med[b];
    let mut est = EffectEstimates::new(MethodId::Jerolon, ratio(2, 0), ratio(1, 0), ratio(2, 1), n);
    est.ie_path = Some(vec![ratio(2, 3), ratio(2, 4)]);

    let pairs = [
        (Effect::Te, 2, 0),
        (Effect::De, 1, 0),
        (Effect::Ie, 2, 1),
        (Effect::Ie1, 2, 3),
        (Effect::Ie2, 2, 4),
    ];
    let mut intervals = BTreeMap::new();
    for (effect, a, b) in pairs {
        let mut v: Vec<f64> = accepted.iter().map(|m| m[a] / m[b]).collect();
        v.sort_by(f64::total_cmp);
        intervals.insert(
            effect,
            IntervalEstimate {
                lower: quantile_sorted(&v, 0.025),
                upper: quantile_sorted(&v, 0.975),
                level: 0.95,
                source: IntervalSource::QuasiBayes,
            },
        );
    }
    est.intervals = intervals;
    est.meta.draws = Some(wanted);
    est.meta.rejected_draws = rejected;
    Ok(est)
}
