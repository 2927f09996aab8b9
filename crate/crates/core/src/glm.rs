//! Weighted maximum-likelihood fits for the four regression families every
//! estimator needs.
//!
//! Logistic and log-link Poisson fits use Newton steps on the canonical link,
//! which coincide with IRLS; probit uses Newton with the exact (observed)
//! Hessian; linear models are solved directly by weighted least squares.
//! All fits run on an internally standardized design (non-intercept columns
//! centred and scaled) and are mapped back afterwards. Every fit carries the
//! model-based covariance and the Huber–White sandwich `A⁻¹ B A⁻¹`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::normal;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Logistic,
    Probit,
    Linear,
    /// Log-link Poisson likelihood on a binary response; inference should
    /// use the sandwich covariance.
    ModifiedPoisson,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PredictType {
    LinearPredictor,
    Mean,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GlmError {
    #[error("design is {rows}x{cols} but the response has {response} values")]
    Dimension {
        rows: usize,
        cols: usize,
        response: usize,
    },
    #[error("need more observations than parameters (n = {n}, p = {p})")]
    TooFewObservations { n: usize, p: usize },
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("invalid response for {family:?}: {reason}")]
    InvalidResponse { family: Family, reason: String },
    #[error("design matrix is rank deficient (singular value ratio {ratio:.3e})")]
    RankDeficient { ratio: f64 },
    #[error("{family:?} fit did not converge in {iterations} iterations")]
    NotConverged { family: Family, iterations: usize },
    #[error("separation detected in {family:?} fit (|standardized coefficient| = {magnitude:.1})")]
    Separation { family: Family, magnitude: f64 },
    #[error("prediction row has {got} entries, model has {expected} coefficients")]
    PredictDimension { expected: usize, got: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Relative deviance change below which iteration stops.
    pub deviance_tolerance: f64,
    /// Max |score| (standardized scale, per unit mean weight) below which
    /// iteration stops.
    pub score_tolerance: f64,
    /// |standardized coefficient| above which a fit is declared separated.
    pub separation_bound: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 100,
            deviance_tolerance: 1e-10,
            score_tolerance: 1e-8,
            separation_bound: 30.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GlmFit {
    pub family: Family,
    /// Intercept first, in design column order.
    pub coefficients: DVector<f64>,
    pub covariance_model: DMatrix<f64>,
    pub covariance_robust: DMatrix<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Residual standard deviation; only set for linear fits.
    pub residual_sd: Option<f64>,
    pub deviance: f64,
    pub n_obs: usize,
}

impl GlmFit {
    pub fn linear_predictor(&self, row: &[f64]) -> Result<f64, GlmError> {
        if row.len() != self.coefficients.len() {
            return Err(GlmError::PredictDimension {
                expected: self.coefficients.len(),
                got: row.len(),
            });
        }
        Ok(row.iter().zip(self.coefficients.iter()).map(|(x, b)| x * b).sum())
    }

    pub fn robust_se(&self) -> Vec<f64> {
        self.covariance_robust.diagonal().iter().map(|v| v.sqrt()).collect()
    }
}

/// Inverse link for each family: expit, Φ, identity and exp respectively.
pub fn inverse_link(family: Family, eta: f64) -> f64 {
    match family {
        Family::Logistic => normal::expit(eta),
        Family::Probit => normal::cdf(eta),
        Family::Linear => eta,
        Family::ModifiedPoisson => eta.exp(),
    }
}

/// Evaluates a fitted model on one design row. Exp-link means above one are
/// returned unclipped.
pub fn predict(fit: &GlmFit, design_row: &[f64], kind: PredictType) -> Result<f64, GlmError> {
    let eta = fit.linear_predictor(design_row)?;
    Ok(match kind {
        PredictType::LinearPredictor => eta,
        PredictType::Mean => inverse_link(fit.family, eta),
    })
}

/// Per-observation log-likelihood contribution, score dℓ/dη and negative
/// second derivative -d²ℓ/dη².
#[inline]
fn contribution(family: Family, y: f64, eta: f64) -> (f64, f64, f64) {
    match family {
        Family::Logistic => {
            let mu = normal::expit(eta);
            (y * eta - normal::softplus(eta), y - mu, mu * (1.0 - mu))
        }
        Family::ModifiedPoisson => {
            let mu = eta.exp();
            (y * eta - mu, y - mu, mu)
        }
        Family::Probit => {
            let lp = normal::mills(eta);
            let lm = normal::mills(-eta);
            let ll = y * normal::ln_cdf(eta) + (1.0 - y) * normal::ln_cdf(-eta);
            let u = y * lp - (1.0 - y) * lm;
            let h = y * lp * (lp + eta) + (1.0 - y) * lm * (lm - eta);
            (ll, u, h)
        }
        Family::Linear => {
            let r = y - eta;
            (-0.5 * r * r, r, 1.0)
        }
    }
}

/// Weighted log-likelihood at `beta` (the linear family uses −½ Σ w r²).
pub fn log_likelihood(
    family: Family,
    design: &DMatrix<f64>,
    response: &[f64],
    weights: Option<&[f64]>,
    beta: &DVector<f64>,
) -> f64 {
    let eta = design * beta;
    eta.iter()
        .zip(response)
        .enumerate()
        .map(|(i, (&e, &y))| weights.map_or(1.0, |w| w[i]) * contribution(family, y, e).0)
        .sum()
}

struct State {
    loglik: f64,
    score: DVector<f64>,
    info: DMatrix<f64>,
    meat: DMatrix<f64>,
}

fn evaluate(family: Family, xs: &DMatrix<f64>, y: &[f64], w: &[f64], gamma: &DVector<f64>) -> State {
    let eta = xs * gamma;
    let n = y.len();
    let mut loglik = 0.0;
    let mut wu = DVector::zeros(n);
    let mut wh = DVector::zeros(n);
    let mut wu2 = DVector::zeros(n);
    for i in 0..n {
        let (l, u, h) = contribution(family, y[i], eta[i]);
        loglik += w[i] * l;
        wu[i] = w[i] * u;
        wh[i] = w[i] * h;
        wu2[i] = (w[i] * u) * (w[i] * u);
    }
    let score = xs.tr_mul(&wu);
    let info = weighted_gram(xs, &wh);
    let meat = weighted_gram(xs, &wu2);
    State {
        loglik,
        score,
        info,
        meat,
    }
}

/// Xᵀ diag(d) X.
fn weighted_gram(x: &DMatrix<f64>, d: &DVector<f64>) -> DMatrix<f64> {
    let mut xd = x.clone();
    for mut col in xd.column_iter_mut() {
        col.component_mul_assign(d);
    }
    let g = x.tr_mul(&xd);
    symmetrize(g)
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

fn spd_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    m.clone().cholesky().map(|c| c.inverse()).or_else(|| m.clone().try_inverse())
}

fn check_inputs(
    family: Family,
    design: &DMatrix<f64>,
    response: &[f64],
    weights: Option<&[f64]>,
) -> Result<(), GlmError> {
    let (n, p) = design.shape();
    if response.len() != n {
        return Err(GlmError::Dimension {
            rows: n,
            cols: p,
            response: response.len(),
        });
    }
    if n <= p {
        return Err(GlmError::TooFewObservations { n, p });
    }
    if let Some(w) = weights {
        if w.len() != n {
            return Err(GlmError::InvalidWeights(format!(
                "{} weights for {n} observations",
                w.len()
            )));
        }
        if w.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
            return Err(GlmError::InvalidWeights(
                "weights must be positive and finite".into(),
            ));
        }
    }
    let bad = |reason: &str| GlmError::InvalidResponse {
        family,
        reason: reason.to_string(),
    };
    if response.iter().any(|v| !v.is_finite()) {
        return Err(bad("non-finite value"));
    }
    match family {
        Family::Logistic | Family::Probit => {
            if response.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                return Err(bad("values must lie in [0, 1]"));
            }
        }
        Family::ModifiedPoisson => {
            if response.iter().any(|&v| v < 0.0) {
                return Err(bad("values must be non-negative"));
            }
        }
        Family::Linear => {}
    }
    if design.iter().any(|v| !v.is_finite()) {
        return Err(GlmError::InvalidResponse {
            family,
            reason: "design contains non-finite values".into(),
        });
    }
    Ok(())
}

fn check_rank(design: &DMatrix<f64>) -> Result<(), GlmError> {
    let r = design.clone().qr().r();
    let sv = r.singular_values();
    let max = sv.max();
    let min = sv.min();
    let ratio = if max > 0.0 { min / max } else { 0.0 };
    if !(ratio > 1e-10) {
        return Err(GlmError::RankDeficient { ratio });
    }
    Ok(())
}

/// Column standardization `Xs = X A`; coefficients map back as `β = A γ`.
fn standardizer(design: &DMatrix<f64>) -> Result<DMatrix<f64>, GlmError> {
    let (n, p) = design.shape();
    let mut a = DMatrix::identity(p, p);
    for j in 1..p {
        let col = design.column(j);
        let mean = col.sum() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let sd = var.sqrt();
        if !(sd > 0.0) {
            return Err(GlmError::RankDeficient { ratio: 0.0 });
        }
        a[(0, j)] = -mean / sd;
        a[(j, j)] = 1.0 / sd;
    }
    Ok(a)
}

fn initial_intercept(family: Family, y: &[f64], w: &[f64]) -> f64 {
    let sw: f64 = w.iter().sum();
    let ybar = y.iter().zip(w).map(|(y, w)| y * w).sum::<f64>() / sw;
    let clamp = |p: f64| p.clamp(1e-8, 1.0 - 1e-8);
    match family {
        Family::Logistic => normal::logit(clamp(ybar)),
        Family::Probit => normal::quantile(clamp(ybar)),
        Family::ModifiedPoisson => ybar.max(1e-8).ln(),
        Family::Linear => ybar,
    }
}

/// Fits `family` with default options.
pub fn fit(
    family: Family,
    design: &DMatrix<f64>,
    response: &[f64],
    weights: Option<&[f64]>,
) -> Result<GlmFit, GlmError> {
    fit_with(family, design, response, weights, &FitOptions::default())
}

pub fn fit_with(
    family: Family,
    design: &DMatrix<f64>,
    response: &[f64],
    weights: Option<&[f64]>,
    opts: &FitOptions,
) -> Result<GlmFit, GlmError> {
    check_inputs(family, design, response, weights)?;
    check_rank(design)?;
    let (n, p) = design.shape();
    let a = standardizer(design)?;
    let xs = design * &a;
    let unit;
    let w: &[f64] = match weights {
        Some(w) => w,
        None => {
            unit = vec![1.0; n];
            &unit
        }
    };
    let mean_w = w.iter().sum::<f64>() / n as f64;

    let (gamma, state, iterations, converged) = if family == Family::Linear {
        let wy = DVector::from_iterator(n, w.iter().zip(response).map(|(w, y)| w * y));
        let info = weighted_gram(&xs, &DVector::from_column_slice(w));
        let rhs = xs.tr_mul(&wy);
        let gamma = info
            .clone()
            .cholesky()
            .map(|c| c.solve(&rhs))
            .ok_or(GlmError::RankDeficient { ratio: 0.0 })?;
        let state = evaluate(family, &xs, response, w, &gamma);
        (gamma, state, 1, true)
    } else {
        newton(family, &xs, response, w, mean_w, opts)?
    };

    let beta = &a * &gamma;
    let info_inv = spd_inverse(&state.info).ok_or(GlmError::RankDeficient { ratio: 0.0 })?;
    let robust_s = &info_inv * &state.meat * &info_inv;
    let covariance_robust = symmetrize(&a * robust_s * a.transpose());

    let (covariance_model, residual_sd) = if family == Family::Linear {
        let rss_w = -2.0 * state.loglik;
        let sigma2 = rss_w / (mean_w * n as f64) * n as f64 / (n - p) as f64;
        let cov = symmetrize(&a * &info_inv * a.transpose()) * (sigma2 * mean_w);
        (cov, Some(sigma2.sqrt()))
    } else {
        (symmetrize(&a * &info_inv * a.transpose()), None)
    };

    Ok(GlmFit {
        family,
        coefficients: beta,
        covariance_model,
        covariance_robust,
        converged,
        iterations,
        residual_sd,
        deviance: -2.0 * state.loglik,
        n_obs: n,
    })
}

/// One more full Newton step, kept if the score shrinks and the likelihood
/// does not drop beyond rounding.
fn polish(
    family: Family,
    xs: &DMatrix<f64>,
    y: &[f64],
    w: &[f64],
    gamma: DVector<f64>,
    state: State,
    dir: &DVector<f64>,
) -> (DVector<f64>, State) {
    let candidate = &gamma + dir;
    let next = evaluate(family, xs, y, w, &candidate);
    if next.loglik >= state.loglik - 1e-12 * state.loglik.abs() && next.score.amax() <= state.score.amax() {
        (candidate, next)
    } else {
        (gamma, state)
    }
}

fn newton(
    family: Family,
    xs: &DMatrix<f64>,
    y: &[f64],
    w: &[f64],
    mean_w: f64,
    opts: &FitOptions,
) -> Result<(DVector<f64>, State, usize, bool), GlmError> {
    let p = xs.ncols();
    let mut gamma = DVector::zeros(p);
    gamma[0] = initial_intercept(family, y, w);
    let mut state = evaluate(family, xs, y, w, &gamma);
    let max_score = |s: &State| s.score.amax() / mean_w;

    let newton_step = |s: &State| s.info.clone().cholesky().map(|c| c.solve(&s.score));
    // Under separation the score vanishes while Newton steps stay O(1), so
    // the stopping rules also require the pending step to be small.
    const STEP_TOLERANCE: f64 = 1e-6;
    let mut step = newton_step(&state);

    for iter in 1..=opts.max_iterations {
        let Some(dir) = step.take() else {
            return Err(GlmError::Separation {
                family,
                magnitude: gamma.amax(),
            });
        };
        if max_score(&state) < opts.score_tolerance && dir.amax() < STEP_TOLERANCE {
            let (gamma, state) = polish(family, xs, y, w, gamma, state, &dir);
            return Ok((gamma, state, iter - 1, true));
        }

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let candidate = &gamma + &dir * t;
            let next = evaluate(family, xs, y, w, &candidate);
            if next.loglik.is_finite()
                && next.loglik >= state.loglik - 1e-12 * state.loglik.abs()
            {
                accepted = Some((candidate, next));
                break;
            }
            t *= 0.5;
        }
        let Some((candidate, next)) = accepted else {
            // No ascent direction left at working precision.
            return Ok((gamma, state, iter, true));
        };

        let magnitude = candidate.amax();
        if magnitude > opts.separation_bound {
            return Err(GlmError::Separation { family, magnitude });
        }
        let dev_old = -2.0 * state.loglik;
        let dev_new = -2.0 * next.loglik;
        let rel = (dev_new - dev_old).abs() / (dev_new.abs() + 0.1);
        gamma = candidate;
        state = next;
        step = newton_step(&state);
        let small_step = step.as_ref().is_some_and(|d| d.amax() < STEP_TOLERANCE);
        if small_step && (max_score(&state) < opts.score_tolerance || rel < opts.deviance_tolerance) {
            let (gamma, state) = polish(family, xs, y, w, gamma, state, step.as_ref().unwrap());
            return Ok((gamma, state, iter, true));
        }
    }
    if matches!(family, Family::Logistic | Family::Probit) {
        let eta = xs * &gamma;
        let saturated = eta.iter().any(|&e| {
            let mu = inverse_link(family, e);
            mu < 1e-10 || mu > 1.0 - 1e-10
        });
        if saturated {
            return Err(GlmError::Separation {
                family,
                magnitude: gamma.amax(),
            });
        }
    }
    Err(GlmError::NotConverged {
        family,
        iterations: opts.max_iterations,
    })
}

/// Builds an `n × (1 + k)` design with an intercept column followed by the
/// given columns.
pub fn design_with_intercept(columns: &[&[f64]]) -> DMatrix<f64> {
    let n = columns.first().map_or(0, |c| c.len());
    let p = columns.len() + 1;
    DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { columns[j - 1][i] })
}
