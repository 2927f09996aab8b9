//! Inverse-probability weighting with an exposure model `X ~ C`.
//!
//! `E[Y(x, M(x, x))]` is the weighted outcome mean in arm `x` with weights
//! `P(X = x) / P(X = x | C)`. `E[Y(1, M(0, 0))]` is the arm-0 weighted mean
//! of outcome-model predictions with the exposure switched to 1.

use nalgebra::DMatrix;

use super::{outcome_design, EffectEstimates, EstimatorConfig, MethodId};
use crate::data::{Dataset, RoleView};
use crate::error::{Error, Result};
use crate::glm::{self, Family};
use crate::normal;

const POSITIVITY_FLOOR: f64 = 1e-6;

/// Stabilized inverse-probability weights `P(X = xᵢ) / P(X = xᵢ | Cᵢ)`.
pub fn exposure_weights(view: &RoleView) -> Result<Vec<f64>> {
    let n = view.n_rows();
    let q = view.covariates.len();
    let design = DMatrix::from_fn(n, 1 + q, |i, j| if j == 0 { 1.0 } else { view.covariates[j - 1][i] });
    let model = glm::fit(Family::Logistic, &design, view.exposure, None)?;
    let p1 = view.exposure.iter().sum::<f64>() / n as f64;
    let coef = model.coefficients.as_slice();
    let mut w = Vec::with_capacity(n);
    for i in 0..n {
        let mut eta = coef[0];
        for (b, c) in coef[1..].iter().zip(&view.covariates) {
            eta += b * c[i];
        }
        let treated = view.exposure[i] > 0.5;
        let p = if treated { normal::expit(eta) } else { normal::expit(-eta) };
        if p < POSITIVITY_FLOOR {
            return Err(Error::Positivity {
                level: u8::from(treated),
                probability: p,
                row: i,
            });
        }
        w.push(if treated { p1 } else { 1.0 - p1 } / p);
    }
    Ok(w)
}

pub fn estimate_weighting(ds: &Dataset, cfg: &EstimatorConfig) -> Result<EffectEstimates> {
    let view = ds.view()?;
    let n = view.n_rows();
    let w = exposure_weights(&view)?;
    let design = outcome_design(&view, cfg.include_interaction)?;
    let outcome = glm::fit(Family::ModifiedPoisson, &design, view.outcome, None)?;
    let beta = outcome.coefficients.as_slice();

    let (mut sw0, mut sw1, mut y0, mut y1, mut y10) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        if view.exposure[i] > 0.5 {
            sw1 += w[i];
            y1 += w[i] * view.outcome[i];
        } else {
            sw0 += w[i];
            y0 += w[i] * view.outcome[i];
            let row = design.row(i);
            let eta: f64 = row.iter().zip(beta).map(|(x, b)| x * b).sum::<f64>() + beta[1];
            y10 += w[i] * eta.exp();
        }
    }
    let (m000, m111, m100) = (y0 / sw0, y1 / sw1, y10 / sw0);
    Ok(EffectEstimates::new(
        MethodId::Weighting,
        m111 / m000,
        m100 / m000,
        m111 / m100,
        n,
    ))
}
