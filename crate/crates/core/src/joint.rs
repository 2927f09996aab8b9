//! Joint model for two contemporaneous mediators.
//!
//! Each mediator has its own marginal regression on the exposure and the
//! covariates: probit (latent residual variance fixed at 1) for a binary
//! mediator, linear for a continuous one. The latent residuals are bivariate
//! normal with a constant correlation ρ, estimated after the marginals are
//! fixed.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::bvn::orthant_probabilities;
use crate::data::{Dataset, MediatorKind};
use crate::error::{Error, Result};
use crate::glm::{self, Family, GlmFit};
use crate::normal;

const RHO_SEARCH: f64 = 0.9995;
const RHO_DEGENERATE: f64 = 0.999;

/// Marginal model of one mediator on the design `[1, X, C...]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MediatorMarginal {
    pub name: String,
    pub kind: MediatorKind,
    pub fit: GlmFit,
    /// Latent residual standard deviation (1 for binary mediators).
    pub sigma: f64,
}

impl MediatorMarginal {
    /// Linear predictor at exposure `x` and the given covariate values.
    pub fn mean(&self, x: f64, covariates: &[f64]) -> f64 {
        linear_predictor(self.fit.coefficients.as_slice(), x, covariates)
    }
}

pub(crate) fn linear_predictor(coef: &[f64], x: f64, covariates: &[f64]) -> f64 {
    let mut eta = coef[0] + coef[1] * x;
    for (b, c) in coef[2..].iter().zip(covariates) {
        eta += b * c;
    }
    eta
}

#[derive(Clone, Debug, PartialEq)]
pub struct JointMediatorModel {
    pub marginals: Vec<MediatorMarginal>,
    /// Latent residual correlation matrix. Only the two-mediator case is
    /// fitted.
    pub correlation: DMatrix<f64>,
}

impl JointMediatorModel {
    pub fn rho(&self) -> f64 {
        self.correlation[(0, 1)]
    }

    pub fn kinds(&self) -> [MediatorKind; 2] {
        [self.marginals[0].kind, self.marginals[1].kind]
    }

    pub fn sigmas(&self) -> [f64; 2] {
        [self.marginals[0].sigma, self.marginals[1].sigma]
    }

    /// Latent residual covariance `[[σ₁², ρσ₁σ₂], [ρσ₁σ₂, σ₂²]]`.
    pub fn latent_covariance(&self) -> DMatrix<f64> {
        let s = self.sigmas();
        let r = self.rho();
        DMatrix::from_row_slice(2, 2, &[s[0] * s[0], r * s[0] * s[1], r * s[0] * s[1], s[1] * s[1]])
    }

    /// Copy with the mediator order reversed.
    pub fn swapped(&self) -> JointMediatorModel {
        JointMediatorModel {
            marginals: vec![self.marginals[1].clone(), self.marginals[0].clone()],
            correlation: self.correlation.clone(),
        }
    }
}

/// Fits both marginals and the latent correlation for the two named
/// mediators. The exposure and covariates are taken from the dataset roles.
pub fn fit_joint(ds: &Dataset, mediators: [&str; 2]) -> Result<JointMediatorModel> {
    let view = ds.view()?;
    let mut design_cols: Vec<&[f64]> = vec![view.exposure];
    design_cols.extend(view.covariates.iter().copied());
    let design = glm::design_with_intercept(&design_cols);

    let mut marginals = Vec::with_capacity(2);
    let mut responses = Vec::with_capacity(2);
    for name in mediators {
        let column = view
            .mediators
            .iter()
            .find(|m| m.name == name)
            .ok_or_else(|| Error::Config(format!("'{name}' is not a mediator of this dataset")))?;
        let (family, kind) = match column.kind {
            MediatorKind::Binary => (Family::Probit, MediatorKind::Binary),
            MediatorKind::Continuous => (Family::Linear, MediatorKind::Continuous),
        };
        let fit = glm::fit(family, &design, column.values, None)?;
        let sigma = fit.residual_sd.unwrap_or(1.0);
        marginals.push(MediatorMarginal {
            name: name.to_string(),
            kind,
            fit,
            sigma,
        });
        responses.push(column.values);
    }

    let eta: Vec<DVector<f64>> = marginals.iter().map(|m| &design * &m.fit.coefficients).collect();
    let rho = match (marginals[0].kind, marginals[1].kind) {
        (MediatorKind::Continuous, MediatorKind::Continuous) => {
            let r1: Vec<f64> = responses[0].iter().zip(eta[0].iter()).map(|(y, e)| y - e).collect();
            let r2: Vec<f64> = responses[1].iter().zip(eta[1].iter()).map(|(y, e)| y - e).collect();
            pearson(&r1, &r2)
        }
        (MediatorKind::Binary, MediatorKind::Continuous) => mixed_rho(
            responses[0],
            eta[0].as_slice(),
            responses[1],
            eta[1].as_slice(),
            marginals[1].sigma,
        )?,
        (MediatorKind::Continuous, MediatorKind::Binary) => mixed_rho(
            responses[1],
            eta[1].as_slice(),
            responses[0],
            eta[0].as_slice(),
            marginals[0].sigma,
        )?,
        (MediatorKind::Binary, MediatorKind::Binary) => {
            binary_rho(responses[0], eta[0].as_slice(), responses[1], eta[1].as_slice())?
        }
    };
    if !rho.is_finite() || rho.abs() >= RHO_DEGENERATE {
        return Err(Error::DegenerateCorrelation(rho.abs()));
    }
    Ok(JointMediatorModel {
        marginals,
        correlation: DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]),
    })
}

/// Sample Pearson correlation.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    sab / (saa * sbb).sqrt()
}

/// Brent's minimizer (golden section with parabolic steps) on
/// `[-0.9995, 0.9995]`.
fn minimize_rho<F: Fn(f64) -> f64>(f: F) -> Result<f64> {
    const GOLD: f64 = 0.381_966_011_250_105_1;
    let (mut a, mut b) = (-RHO_SEARCH, RHO_SEARCH);
    let mut x = a + GOLD * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x);
    let (mut fw, mut fv) = (fx, fx);
    let (mut d, mut e) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let tol = 1e-10 * x.abs() + 1e-12;
        if (x - m).abs() <= 2.0 * tol - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            if p.abs() < (0.5 * q * e).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < 2.0 * tol || b - u < 2.0 * tol {
                    d = if x < m { tol } else { -tol };
                }
                golden = false;
            }
        }
        if golden {
            e = if x < m { b - x } else { a - x };
            d = GOLD * e;
        }
        let u = if d.abs() >= tol { x + d } else { x + tol.copysign(d) };
        let fu = f(u);
        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            (v, fv, w, fw, x, fx) = (w, fw, x, fx, u, fu);
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                (v, fv, w, fw) = (w, fw, u, fu);
            } else if fu <= fv || v == x || v == w {
                (v, fv) = (u, fu);
            }
        }
    }
    if !fx.is_finite() {
        return Err(Error::DegenerateCorrelation(x.abs()));
    }
    Ok(x)
}

/// Conditional likelihood of a binary mediator given a continuous one, with
/// both marginals held fixed:
/// `P(B = 1 | C) = Φ((η_b + ρ e) / √(1 − ρ²))`, `e = (c − η_c) / σ_c`.
fn mixed_rho(b: &[f64], eta_b: &[f64], c: &[f64], eta_c: &[f64], sigma_c: f64) -> Result<f64> {
    let e: Vec<f64> = c.iter().zip(eta_c).map(|(v, m)| (v - m) / sigma_c).collect();
    minimize_rho(|rho| {
        let s = (1.0 - rho * rho).sqrt();
        -b.iter()
            .zip(eta_b)
            .zip(&e)
            .map(|((&y, &m), &r)| {
                let t = (m + rho * r) / s;
                if y > 0.5 {
                    normal::ln_cdf(t)
                } else {
                    normal::ln_cdf(-t)
                }
            })
            .sum::<f64>()
    })
}

/// Pairwise bivariate-probit likelihood with the marginal probits fixed.
/// Rows sharing (η₁, η₂, m₁, m₂) are pooled.
fn binary_rho(m1: &[f64], eta1: &[f64], m2: &[f64], eta2: &[f64]) -> Result<f64> {
    let mut cells: BTreeMap<(u64, u64, bool, bool), (f64, f64, usize)> = BTreeMap::new();
    for i in 0..m1.len() {
        let key = (eta1[i].to_bits(), eta2[i].to_bits(), m1[i] > 0.5, m2[i] > 0.5);
        cells.entry(key).or_insert((eta1[i], eta2[i], 0)).2 += 1;
    }
    let cells: Vec<_> = cells
        .into_iter()
        .map(|((_, _, a, b), (e1, e2, n))| (e1, e2, a as usize, b as usize, n as f64))
        .collect();
    minimize_rho(|rho| {
        -cells
            .iter()
            .map(|&(e1, e2, a, b, n)| n * orthant_probabilities(e1, e2, rho)[a][b].max(1e-300).ln())
            .sum::<f64>()
    })
}

/// Mediator values at exposures `x` given correlated standard-normal latent
/// residuals `eps` (see [`correlate`]).
pub fn mediators_from_latent(
    model: &JointMediatorModel,
    x: [f64; 2],
    covariates: &[f64],
    eps: [f64; 2],
) -> [f64; 2] {
    let mut out = [0.0; 2];
    for k in 0..2 {
        let m = &model.marginals[k];
        let lp = m.mean(x[k], covariates);
        out[k] = match m.kind {
            MediatorKind::Binary => f64::from(lp + eps[k] > 0.0),
            MediatorKind::Continuous => lp + m.sigma * eps[k],
        };
    }
    out
}

/// Correlated standard-normal pair from two independent standard normals.
#[inline]
pub fn correlate(rho: f64, z: [f64; 2]) -> [f64; 2] {
    [z[0], rho * z[0] + (1.0 - rho * rho).sqrt() * z[1]]
}

/// Draws `(M₁(x1), M₂(x2))` for one subject: the latent residual pair is
/// drawn once and each mediator is formed from its own linear predictor at
/// its own exposure setting; binary mediators are thresholded at 0.
pub fn sample_counterfactual_pair<R: Rng + ?Sized>(
    model: &JointMediatorModel,
    x1: f64,
    x2: f64,
    covariates: &[f64],
    rng: &mut R,
) -> (f64, f64) {
    let z = [rng.sample(StandardNormal), rng.sample(StandardNormal)];
    let eps = correlate(model.rho(), z);
    let m = mediators_from_latent(model, [x1, x2], covariates, eps);
    (m[0], m[1])
}
