//! Difference in coefficients: the exposure coefficient of a log-link
//! outcome model without the mediators (TE) and with them (DE).

use super::{exposure_covariate_design, outcome_design, EffectEstimates, EstimatorConfig, MethodId};
use crate::data::Dataset;
use crate::error::Result;
use crate::glm::{self, Family};

pub fn estimate_difference(ds: &Dataset, _cfg: &EstimatorConfig) -> Result<EffectEstimates> {
    let view = ds.view()?;
    let total = glm::fit(Family::ModifiedPoisson, &exposure_covariate_design(&view), view.outcome, None)?;
    let direct = glm::fit(Family::ModifiedPoisson, &outcome_design(&view, false)?, view.outcome, None)?;
    let phi1 = total.coefficients[1];
    let theta1 = direct.coefficients[1];
    Ok(EffectEstimates::new(
        MethodId::Difference,
        phi1.exp(),
        theta1.exp(),
        (phi1 - theta1).exp(),
        ds.n_rows(),
    ))
}
