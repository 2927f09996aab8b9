//! Counterfactual means by the mediation formula.
//!
//! `E[Y(x, M₁(x′), M₂(x″))]` is obtained by integrating an outcome model
//! against the joint law of the two mediators, each evaluated at its own
//! exposure setting, and averaging over a covariate law. Continuous mediator
//! dimensions are integrated by adaptive cubature over ±8 standard
//! deviations; binary dimensions are summed exactly.
//!
//! With a log link the conditional mean `exp(η)` can exceed one inside the
//! integrand. It is used unclipped: the target is a ratio of means, and
//! clipping would bias it.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bvn::orthant_probabilities;
use crate::cubature::{self, Tolerance};
use crate::data::MediatorKind;
use crate::error::{Error, Result};
use crate::joint::JointMediatorModel;
use crate::normal;

const SPAN: f64 = 8.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Link {
    Log,
    Logit,
}

/// Outcome regression on `[1, X, M₁, M₂, M₁M₂, C...]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeModel {
    pub link: Link,
    pub intercept: f64,
    pub exposure: f64,
    pub mediators: [f64; 2],
    pub interaction: f64,
    pub covariates: Vec<f64>,
}

impl OutcomeModel {
    #[inline]
    pub fn eta(&self, x: f64, m: [f64; 2], c: &[f64]) -> f64 {
        let mut eta = self.intercept
            + self.exposure * x
            + self.mediators[0] * m[0]
            + self.mediators[1] * m[1]
            + self.interaction * m[0] * m[1];
        for (b, v) in self.covariates.iter().zip(c) {
            eta += b * v;
        }
        eta
    }

    #[inline]
    pub fn mean(&self, x: f64, m: [f64; 2], c: &[f64]) -> f64 {
        let eta = self.eta(x, m, c);
        match self.link {
            Link::Log => eta.exp(),
            Link::Logit => normal::expit(eta),
        }
    }

    /// Same model with every mediator and interaction coefficient set to 0.
    pub fn without_mediation(&self) -> OutcomeModel {
        OutcomeModel {
            mediators: [0.0, 0.0],
            interaction: 0.0,
            ..self.clone()
        }
    }

    pub fn swapped(&self) -> OutcomeModel {
        OutcomeModel {
            mediators: [self.mediators[1], self.mediators[0]],
            ..self.clone()
        }
    }
}

/// `intercept + exposure·x + covariates·c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearPredictor {
    pub intercept: f64,
    pub exposure: f64,
    pub covariates: Vec<f64>,
}

impl LinearPredictor {
    #[inline]
    pub fn eval(&self, x: f64, c: &[f64]) -> f64 {
        let mut eta = self.intercept + self.exposure * x;
        for (b, v) in self.covariates.iter().zip(c) {
            eta += b * v;
        }
        eta
    }
}

/// Joint mediator law: `M*ₖ = LPₖ(x, c) + σₖ εₖ`, `corr(ε₁, ε₂) = ρ`, with
/// `Mₖ = I(M*ₖ > 0)` for binary mediators (σ = 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MediatorLaw {
    pub kinds: [MediatorKind; 2],
    pub predictors: [LinearPredictor; 2],
    pub sigmas: [f64; 2],
    pub rho: f64,
}

impl MediatorLaw {
    pub fn from_joint(model: &JointMediatorModel) -> MediatorLaw {
        let lp = |k: usize| {
            let c = model.marginals[k].fit.coefficients.as_slice();
            LinearPredictor {
                intercept: c[0],
                exposure: c[1],
                covariates: c[2..].to_vec(),
            }
        };
        MediatorLaw {
            kinds: model.kinds(),
            predictors: [lp(0), lp(1)],
            sigmas: model.sigmas(),
            rho: model.rho(),
        }
    }

    pub fn swapped(&self) -> MediatorLaw {
        MediatorLaw {
            kinds: [self.kinds[1], self.kinds[0]],
            predictors: [self.predictors[1].clone(), self.predictors[0].clone()],
            sigmas: [self.sigmas[1], self.sigmas[0]],
            rho: self.rho,
        }
    }
}

/// Discrete covariate law as weighted support points.
#[derive(Clone, Debug, PartialEq)]
pub struct CovariateLaw {
    points: Vec<(Vec<f64>, f64)>,
}

impl CovariateLaw {
    /// Empirical law of the given rows; identical rows are pooled.
    pub fn empirical(rows: &[Vec<f64>]) -> CovariateLaw {
        let mut counts: BTreeMap<Vec<u64>, (usize, &Vec<f64>)> = BTreeMap::new();
        for r in rows {
            let key = r.iter().map(|v| v.to_bits()).collect();
            counts.entry(key).or_insert((0, r)).0 += 1;
        }
        let n = rows.len() as f64;
        CovariateLaw {
            points: counts.into_values().map(|(k, r)| (r.clone(), k as f64 / n)).collect(),
        }
    }

    /// A single Bernoulli(p) covariate.
    pub fn bernoulli(p: f64) -> CovariateLaw {
        CovariateLaw {
            points: vec![(vec![0.0], 1.0 - p), (vec![1.0], p)],
        }
    }

    /// No covariates.
    pub fn none() -> CovariateLaw {
        CovariateLaw {
            points: vec![(Vec::new(), 1.0)],
        }
    }

    pub fn from_points(points: Vec<(Vec<f64>, f64)>) -> CovariateLaw {
        CovariateLaw { points }
    }

    pub fn points(&self) -> &[(Vec<f64>, f64)] {
        &self.points
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CounterfactualQuery<'a> {
    pub x_outcome: f64,
    /// Exposure settings for M₁ and M₂.
    pub x_med: [f64; 2],
    pub outcome: &'a OutcomeModel,
    pub mediators: &'a MediatorLaw,
    pub covariates: &'a CovariateLaw,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
}

/// Evaluates one counterfactual mean.
pub fn counterfactual_mean(q: &CounterfactualQuery) -> Result<Integral> {
    counterfactual_mean_with(q, Tolerance::default())
}

pub fn counterfactual_mean_with(q: &CounterfactualQuery, tol: Tolerance) -> Result<Integral> {
    let law = q.mediators;
    if !(law.rho.abs() < 1.0) {
        return Err(Error::DegenerateCorrelation(law.rho.abs()));
    }
    let mut value = 0.0;
    let mut abs_error = 0.0;
    for (c, w) in q.covariates.points() {
        let mu = [
            law.predictors[0].eval(q.x_med[0], c),
            law.predictors[1].eval(q.x_med[1], c),
        ];
        let y = |m: [f64; 2]| q.outcome.mean(q.x_outcome, m, c);
        let part = conditional_mean(law, mu, &y, tol)?;
        value += w * part.value;
        abs_error += w * part.abs_error;
    }
    Ok(Integral { value, abs_error })
}

fn conditional_mean(
    law: &MediatorLaw,
    mu: [f64; 2],
    y: &dyn Fn([f64; 2]) -> f64,
    tol: Tolerance,
) -> Result<Integral> {
    let rho = law.rho;
    let s = (1.0 - rho * rho).sqrt();
    let sig = law.sigmas;
    let fail = |e: cubature::CubatureFailure| Error::Integration {
        achieved: e.abs_error,
        evaluations: e.evaluations,
    };
    match law.kinds {
        [MediatorKind::Binary, MediatorKind::Binary] => {
            let p = orthant_probabilities(mu[0], mu[1], rho);
            let mut value = 0.0;
            for (a, row) in p.iter().enumerate() {
                for (b, pab) in row.iter().enumerate() {
                    value += pab * y([a as f64, b as f64]);
                }
            }
            Ok(Integral { value, abs_error: 0.0 })
        }
        [MediatorKind::Continuous, MediatorKind::Continuous] => {
            let f = |z: &[f64; 2]| {
                let m1 = mu[0] + sig[0] * z[0];
                let m2 = mu[1] + sig[1] * (rho * z[0] + s * z[1]);
                y([m1, m2]) * normal::pdf(z[0]) * normal::pdf(z[1])
            };
            let r = cubature::integrate(f, [-SPAN; 2], [SPAN; 2], tol).map_err(fail)?;
            Ok(Integral {
                value: r.value,
                abs_error: r.abs_error,
            })
        }
        [kb, _] => {
            let (b, c) = if kb == MediatorKind::Binary { (0, 1) } else { (1, 0) };
            let f = |z: &[f64; 1]| {
                let mc = mu[c] + sig[c] * z[0];
                let p1 = normal::cdf((mu[b] + rho * z[0]) / s);
                let mut m = [0.0; 2];
                m[c] = mc;
                m[b] = 1.0;
                let y1 = y(m);
                m[b] = 0.0;
                let y0 = y(m);
                (p1 * y1 + (1.0 - p1) * y0) * normal::pdf(z[0])
            };
            let r = cubature::integrate(f, [-SPAN], [SPAN], tol).map_err(fail)?;
            Ok(Integral {
                value: r.value,
                abs_error: r.abs_error,
            })
        }
    }
}

/// Exposure settings `(x, x′, x″)` of the five counterfactual means, in the
/// order stored in [`TrueEffects::means`].
pub const SETTINGS: [(f64, [f64; 2]); 5] = [
    (0.0, [0.0, 0.0]),
    (1.0, [0.0, 0.0]),
    (1.0, [1.0, 1.0]),
    (1.0, [0.0, 1.0]),
    (1.0, [1.0, 0.0]),
];

/// The five effects implied by an outcome model and a mediator law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrueEffects {
    pub te: f64,
    pub de: f64,
    pub ie: f64,
    pub ie1: f64,
    pub ie2: f64,
    /// Largest propagated absolute integration error over the five effects.
    pub estimated_abs_error: f64,
    /// `E[Y(0,M(0,0))]`, `E[Y(1,M(0,0))]`, `E[Y(1,M(1,1))]`,
    /// `E[Y(1,M(0,1))]`, `E[Y(1,M(1,0))]`.
    pub means: [Integral; 5],
}

impl TrueEffects {
    pub fn from_means(means: [Integral; 5]) -> TrueEffects {
        let v = |k: usize| means[k].value;
        let rel = |k: usize| means[k].abs_error / means[k].value.abs();
        let ratio = |a: usize, b: usize| (v(a) / v(b), v(a) / v(b) * (rel(a) + rel(b)));
        let (te, e_te) = ratio(2, 0);
        let (de, e_de) = ratio(1, 0);
        let (ie, e_ie) = ratio(2, 1);
        let (ie1, e1) = ratio(2, 3);
        let (ie2, e2) = ratio(2, 4);
        TrueEffects {
            te,
            de,
            ie,
            ie1,
            ie2,
            estimated_abs_error: [e_te, e_de, e_ie, e1, e2].into_iter().fold(0.0, f64::max),
            means,
        }
    }
}

/// Evaluates the five counterfactual means (in parallel) and their ratios.
pub fn mediation_effects(
    outcome: &OutcomeModel,
    mediators: &MediatorLaw,
    covariates: &CovariateLaw,
) -> Result<TrueEffects> {
    let means: Vec<Integral> = SETTINGS
        .par_iter()
        .map(|&(x, xm)| {
            counterfactual_mean(&CounterfactualQuery {
                x_outcome: x,
                x_med: xm,
                outcome,
                mediators,
                covariates,
            })
        })
        .collect::<Result<_>>()?;
    Ok(TrueEffects::from_means([means[0], means[1], means[2], means[3], means[4]]))
}

/// Ground-truth effects of a simulation scenario.
pub fn true_effects(spec: &crate::scenario::ScenarioSpec) -> Result<TrueEffects> {
    mediation_effects(&spec.outcome_model(), &spec.mediator_law(), &spec.covariate_law())
}

/// Marginal `P(Y = 1)` under a scenario's data-generating process.
pub fn outcome_prevalence(spec: &crate::scenario::ScenarioSpec) -> Result<f64> {
    let outcome = spec.outcome_model();
    let law = spec.mediator_law();
    let mut total = 0.0;
    for x in [0.0, 1.0] {
        let points = spec
            .covariate_law()
            .points()
            .iter()
            .map(|(c, w)| {
                let px = spec.exposure_probability(c[0]);
                (c.clone(), w * if x == 1.0 { px } else { 1.0 - px })
            })
            .collect();
        let covariates = CovariateLaw::from_points(points);
        total += counterfactual_mean(&CounterfactualQuery {
            x_outcome: x,
            x_med: [x, x],
            outcome: &outcome,
            mediators: &law,
            covariates: &covariates,
        })?
        .value;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn law(kinds: [MediatorKind; 2], rho: f64) -> MediatorLaw {
        MediatorLaw {
            kinds,
            predictors: [
                LinearPredictor { intercept: -1.2, exposure: 1.0, covariates: vec![0.2] },
                LinearPredictor { intercept: -1.5, exposure: 1.5, covariates: vec![0.5] },
            ],
            sigmas: [1.0, 1.0],
            rho,
        }
    }

    fn outcome(link: Link) -> OutcomeModel {
        OutcomeModel {
            link,
            intercept: -1.0,
            exposure: 0.5,
            mediators: [0.3, 0.2],
            interaction: 0.0,
            covariates: vec![0.4],
        }
    }

    #[test]
    fn flat_outcome_returns_intercept() {
        let flat = OutcomeModel {
            link: Link::Log,
            intercept: 0.3f64.ln(),
            exposure: 0.0,
            mediators: [0.0, 0.0],
            interaction: 0.0,
            covariates: vec![0.0],
        };
        let cov = CovariateLaw::bernoulli(0.5);
        for kinds in [
            [MediatorKind::Continuous; 2],
            [MediatorKind::Binary; 2],
            [MediatorKind::Binary, MediatorKind::Continuous],
        ] {
            let l = law(kinds, 0.4);
            for &(x, xm) in &SETTINGS {
                let r = counterfactual_mean(&CounterfactualQuery {
                    x_outcome: x,
                    x_med: xm,
                    outcome: &flat,
                    mediators: &l,
                    covariates: &cov,
                })
                .unwrap();
                assert!((r.value - 0.3).abs() < 1e-9, "{kinds:?} {}", r.value);
            }
        }
    }

    #[test]
    fn two_binary_independent_is_four_term_sum() {
        let l = law([MediatorKind::Binary; 2], 0.0);
        let o = outcome(Link::Logit);
        let cov = CovariateLaw::from_points(vec![(vec![1.0], 1.0)]);
        let got = counterfactual_mean(&CounterfactualQuery {
            x_outcome: 1.0,
            x_med: [0.0, 1.0],
            outcome: &o,
            mediators: &l,
            covariates: &cov,
        })
        .unwrap()
        .value;
        let p1 = normal::cdf(-1.2 + 0.2);
        let p2 = normal::cdf(-1.5 + 1.5 + 0.5);
        let mut want = 0.0;
        for (a, pa) in [(0.0, 1.0 - p1), (1.0, p1)] {
            for (b, pb) in [(0.0, 1.0 - p2), (1.0, p2)] {
                want += pa * pb * o.mean(1.0, [a, b], &[1.0]);
            }
        }
        assert!((got - want).abs() < 1e-14);
    }

    #[test]
    fn lognormal_closed_form() {
        // Log link, continuous mediators: E exp(b·M) is a lognormal moment.
        let l = law([MediatorKind::Continuous; 2], 0.5);
        let o = outcome(Link::Log);
        let cov = CovariateLaw::none();
        let got = counterfactual_mean(&CounterfactualQuery {
            x_outcome: 1.0,
            x_med: [1.0, 0.0],
            outcome: &o,
            mediators: &l,
            covariates: &cov,
        })
        .unwrap();
        let (b1, b2) = (0.3f64, 0.2f64);
        let (m1, m2) = (-0.2, -1.5);
        let var = b1 * b1 + b2 * b2 + 2.0 * 0.5 * b1 * b2;
        let want = (-1.0 + 0.5 + b1 * m1 + b2 * m2 + 0.5 * var).exp();
        assert!((got.value - want).abs() < 1e-7 * want, "{} {}", got.value, want);
    }

    #[test]
    fn empirical_law_pools_rows() {
        let law = CovariateLaw::empirical(&[vec![1.0], vec![0.0], vec![1.0], vec![1.0]]);
        assert_eq!(law.points(), &[(vec![0.0], 0.25), (vec![1.0], 0.75)]);
    }
}
