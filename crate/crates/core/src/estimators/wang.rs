//! Mediation-formula estimator with a joint mediator model.
//!
//! A log-link outcome model `Y ~ X + M₁ + M₂ + C` is integrated against the
//! fitted joint mediator law and averaged over the empirical covariate
//! distribution.

use super::{outcome_design, require_two_mediators, EffectEstimates, EstimatorConfig, MethodId};
use crate::data::Dataset;
use crate::error::Result;
use crate::formula::{self, CovariateLaw, Link, MediatorLaw, OutcomeModel, TrueEffects};
use crate::glm::{self, Family, GlmFit};
use crate::joint::fit_joint;

/// Maps a fit on `[1, X, M₁, M₂, (M₁M₂), C...]` to an outcome model.
pub fn outcome_model_from_fit(fit: &GlmFit, interaction: bool, link: Link) -> OutcomeModel {
    coefficients_to_model(fit.coefficients.as_slice(), interaction, link)
}

pub(crate) fn coefficients_to_model(b: &[f64], interaction: bool, link: Link) -> OutcomeModel {
    let off = 4 + usize::from(interaction);
    OutcomeModel {
        link,
        intercept: b[0],
        exposure: b[1],
        mediators: [b[2], b[3]],
        interaction: if interaction { b[4] } else { 0.0 },
        covariates: b[off..].to_vec(),
    }
}

/// The five effects for given outcome and mediator models.
pub fn wang_effects(
    outcome: &OutcomeModel,
    mediators: &MediatorLaw,
    covariates: &CovariateLaw,
) -> Result<TrueEffects> {
    formula::mediation_effects(outcome, mediators, covariates)
}

pub fn estimate_wang(ds: &Dataset, _cfg: &EstimatorConfig) -> Result<EffectEstimates> {
    let view = ds.view()?;
    require_two_mediators(&view, "wang")?;
    let fit = glm::fit(Family::ModifiedPoisson, &outcome_design(&view, false)?, view.outcome, None)?;
    let outcome = outcome_model_from_fit(&fit, false, Link::Log);
    let joint = fit_joint(ds, [view.mediators[0].name, view.mediators[1].name])?;
    let law = MediatorLaw::from_joint(&joint);
    let covariates = CovariateLaw::empirical(&view.covariate_rows());
    let fx = wang_effects(&outcome, &law, &covariates)?;
    let mut est = EffectEstimates::new(MethodId::Wang, fx.te, fx.de, fx.ie, ds.n_rows());
    est.ie_path = Some(vec![fx.ie1, fx.ie2]);
    Ok(est)
}
