//! Inverse odds ratio weighting.
//!
//! A logistic model `X ~ M + C` gives the mediator part of the
//! exposure–mediator odds ratio; exposed subjects are weighted by its
//! inverse `exp(−Σ φₖ mₖ)` and unexposed subjects by 1. The weighted
//! log-link regression `Y ~ X + C` gives DE, the unweighted one TE, and
//! IE = TE / DE.

use super::{quantile_sorted, EffectEstimates, EstimatorConfig, MethodId};
use crate::data::{Dataset, RoleView};
use crate::error::{Error, Result};
use crate::glm::{self, Family};

/// IORW weights truncated at the given upper quantile of the exposed
/// weights, and the number of exposed subjects truncated.
pub fn iorw_weights(view: &RoleView, truncation_quantile: f64) -> Result<(Vec<f64>, usize)> {
    let n = view.n_rows();
    let k = view.mediators.len();
    let mut cols: Vec<&[f64]> = view.mediators.iter().map(|m| m.values).collect();
    cols.extend(view.covariates.iter().copied());
    let design = glm::design_with_intercept(&cols);
    let model = glm::fit(Family::Logistic, &design, view.exposure, None)?;
    let phi = &model.coefficients.as_slice()[1..1 + k];

    let mut w = vec![1.0; n];
    let mut exposed = Vec::new();
    for i in 0..n {
        if view.exposure[i] > 0.5 {
            let s: f64 = view.mediators.iter().zip(phi).map(|(m, p)| p * m.values[i]).sum();
            w[i] = (-s).exp();
            if !w[i].is_finite() {
                return Err(Error::DegenerateWeights(format!("non-finite weight at row {i}")));
            }
            exposed.push(w[i]);
        }
    }
    if exposed.is_empty() {
        return Err(Error::DegenerateWeights("no exposed subjects".into()));
    }
    let mut truncated = 0;
    if truncation_quantile < 1.0 {
        exposed.sort_by(f64::total_cmp);
        let cap = quantile_sorted(&exposed, truncation_quantile);
        for i in 0..n {
            if view.exposure[i] > 0.5 && w[i] > cap {
                w[i] = cap;
                truncated += 1;
            }
        }
        if truncated == exposed.len() {
            return Err(Error::DegenerateWeights("every exposed weight was truncated".into()));
        }
    }
    Ok((w, truncated))
}

pub fn estimate_iorw(ds: &Dataset, cfg: &EstimatorConfig) -> Result<EffectEstimates> {
    let view = ds.view()?;
    let (w, truncated) = iorw_weights(&view, cfg.weight_truncation_quantile)?;
    let design = super::exposure_covariate_design(&view);
    let total = glm::fit(Family::ModifiedPoisson, &design, view.outcome, None)?;
    let direct = glm::fit(Family::ModifiedPoisson, &design, view.outcome, Some(&w))?;
    let te = total.coefficients[1].exp();
    let de = direct.coefficients[1].exp();
    let mut est = EffectEstimates::new(MethodId::Iorw, te, de, te / de, view.n_rows());
    est.meta.truncated_weights = Some(truncated);
    Ok(est)
}
