//! Benchmark scenarios.
//!
//! Data-generating process, for a binary covariate `C`:
//!
//! ```text
//! C ~ Bernoulli(0.5)
//! X ~ Bernoulli(expit(−0.25 − C))
//! LP₁ = −1.2 + X + 0.2C + ε₁        LP₂ = −1.5 + 1.5X + 0.5C + ε₂
//! (ε₁, ε₂) ~ N(0, [[σ₁², ρσ₁σ₂], [ρσ₁σ₂, σ₂²]])
//! Mₖ = LPₖ (continuous) or I(LPₖ > 0) (binary)
//! Y ~ Bernoulli(expit(β₀ + 0.5X + 1.5M₁ + 0.5M₂ + β₄M₁M₂ + 1.5C))
//! ```
//!
//! The sixteen scenarios vary the mediator types, ρ and the interaction
//! `β₄ ∈ {0, 0.2}`. In the mixed scenarios M₁ is binary and M₂ continuous.

use serde::{Deserialize, Serialize};

use crate::data::MediatorKind;
use crate::error::{Error, Result};
use crate::formula::{self, CovariateLaw, Link, LinearPredictor, MediatorLaw, OutcomeModel};
use crate::normal;

pub const PREVALENCE_BAND: (f64, f64) = (0.25, 0.4);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeCoefficients {
    pub intercept: f64,
    pub exposure: f64,
    pub m1: f64,
    pub m2: f64,
    pub interaction: f64,
    pub covariate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub id: u32,
    pub mediator_kinds: [MediatorKind; 2],
    pub rho: f64,
    pub interaction: bool,
    /// P(C = 1).
    pub covariate_p: f64,
    /// Exposure logit: intercept, C.
    pub exposure: [f64; 2],
    /// Mediator linear predictors: intercept, X, C.
    pub mediator1: [f64; 3],
    pub mediator2: [f64; 3],
    pub sigmas: [f64; 2],
    pub outcome: OutcomeCoefficients,
}

/// Default outcome intercept. Continuous mediators take values on a wider
/// range than binary ones, so a smaller offset keeps the outcome prevalence
/// inside the target band.
pub fn default_beta0(kinds: [MediatorKind; 2]) -> f64 {
    if kinds == [MediatorKind::Continuous; 2] {
        -1.0
    } else {
        -2.0
    }
}

impl ScenarioSpec {
    pub fn new(id: u32, mediator_kinds: [MediatorKind; 2], rho: f64, interaction: bool) -> Self {
        ScenarioSpec {
            id,
            mediator_kinds,
            rho,
            interaction,
            covariate_p: 0.5,
            exposure: [-0.25, -1.0],
            mediator1: [-1.2, 1.0, 0.2],
            mediator2: [-1.5, 1.5, 0.5],
            sigmas: [1.0, 1.0],
            outcome: OutcomeCoefficients {
                intercept: default_beta0(mediator_kinds),
                exposure: 0.5,
                m1: 1.5,
                m2: 0.5,
                interaction: if interaction { 0.2 } else { 0.0 },
                covariate: 1.5,
            },
        }
    }

    /// One row of the scenario grid.
    pub fn table(id: u32) -> Result<Self> {
        use MediatorKind::{Binary as B, Continuous as C};
        const RHOS: [f64; 4] = [0.0, 0.25, 0.5, 0.75];
        let spec = match id {
            1..=12 => {
                let i = (id - 1) as usize;
                let kinds = [[C, C], [B, B], [B, C]][i % 3];
                ScenarioSpec::new(id, kinds, RHOS[i / 3], false)
            }
            13..=16 => ScenarioSpec::new(id, [C, C], RHOS[(id - 13) as usize], true),
            _ => return Err(Error::UnknownScenario(id)),
        };
        Ok(spec)
    }

    pub fn grid() -> Vec<Self> {
        (1..=16).map(|id| Self::table(id).expect("valid id")).collect()
    }

    pub fn beta0(&self) -> f64 {
        self.outcome.intercept
    }

    /// Copy with the mediator and interaction outcome coefficients zeroed.
    pub fn with_null_mediation(&self) -> Self {
        let mut s = self.clone();
        s.outcome.m1 = 0.0;
        s.outcome.m2 = 0.0;
        s.outcome.interaction = 0.0;
        s
    }

    pub fn exposure_probability(&self, c: f64) -> f64 {
        normal::expit(self.exposure[0] + self.exposure[1] * c)
    }

    pub fn outcome_model(&self) -> OutcomeModel {
        let o = &self.outcome;
        OutcomeModel {
            link: Link::Logit,
            intercept: o.intercept,
            exposure: o.exposure,
            mediators: [o.m1, o.m2],
            interaction: o.interaction,
            covariates: vec![o.covariate],
        }
    }

    pub fn mediator_law(&self) -> MediatorLaw {
        let lp = |a: [f64; 3]| LinearPredictor {
            intercept: a[0],
            exposure: a[1],
            covariates: vec![a[2]],
        };
        let sig = |k: usize| match self.mediator_kinds[k] {
            MediatorKind::Binary => 1.0,
            MediatorKind::Continuous => self.sigmas[k],
        };
        MediatorLaw {
            kinds: self.mediator_kinds,
            predictors: [lp(self.mediator1), lp(self.mediator2)],
            sigmas: [sig(0), sig(1)],
            rho: self.rho,
        }
    }

    pub fn covariate_law(&self) -> CovariateLaw {
        CovariateLaw::bernoulli(self.covariate_p)
    }

    /// Marginal outcome prevalence implied by the process.
    pub fn prevalence(&self) -> Result<f64> {
        formula::outcome_prevalence(self)
    }

    /// Errors if the prevalence falls outside [0.25, 0.4].
    pub fn check_prevalence(&self) -> Result<f64> {
        let p = self.prevalence()?;
        if p < PREVALENCE_BAND.0 || p > PREVALENCE_BAND.1 {
            return Err(Error::Prevalence {
                id: self.id,
                prevalence: p,
            });
        }
        Ok(p)
    }
}

/// Partial scenario description read from a JSON file. Unset fields come
/// from scenario `base` (or from the default process with `mediator_kinds`).
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioOverride {
    pub base: Option<u32>,
    pub id: Option<u32>,
    pub mediator_kinds: Option<[MediatorKind; 2]>,
    pub rho: Option<f64>,
    pub interaction: Option<bool>,
    pub beta0: Option<f64>,
    pub beta4: Option<f64>,
    pub covariate_p: Option<f64>,
    pub exposure: Option<[f64; 2]>,
    pub mediator1: Option<[f64; 3]>,
    pub mediator2: Option<[f64; 3]>,
    pub sigmas: Option<[f64; 2]>,
    pub outcome: Option<OutcomeCoefficients>,
}

impl ScenarioOverride {
    pub fn resolve(&self) -> Result<ScenarioSpec> {
        let mut spec = match (self.base, self.mediator_kinds) {
            (Some(id), _) => ScenarioSpec::table(id)?,
            (None, Some(kinds)) => ScenarioSpec::new(0, kinds, 0.0, false),
            (None, None) => {
                return Err(Error::Config(
                    "scenario override needs `base` or `mediator_kinds`".into(),
                ))
            }
        };
        if let Some(kinds) = self.mediator_kinds {
            if kinds != spec.mediator_kinds {
                spec.mediator_kinds = kinds;
                spec.outcome.intercept = default_beta0(kinds);
            }
        }
        if let Some(v) = self.id {
            spec.id = v;
        }
        if let Some(v) = self.rho {
            spec.rho = v;
        }
        if let Some(v) = self.interaction {
            spec.interaction = v;
            spec.outcome.interaction = if v { 0.2 } else { 0.0 };
        }
        if let Some(v) = self.covariate_p {
            spec.covariate_p = v;
        }
        if let Some(v) = self.exposure {
            spec.exposure = v;
        }
        if let Some(v) = self.mediator1 {
            spec.mediator1 = v;
        }
        if let Some(v) = self.mediator2 {
            spec.mediator2 = v;
        }
        if let Some(v) = self.sigmas {
            spec.sigmas = v;
        }
        if let Some(v) = &self.outcome {
            spec.outcome = v.clone();
        }
        if let Some(v) = self.beta0 {
            spec.outcome.intercept = v;
        }
        if let Some(v) = self.beta4 {
            spec.outcome.interaction = v;
            spec.interaction = v != 0.0;
        }
        if !(spec.rho.abs() < 1.0) {
            return Err(Error::Config(format!("rho must lie in (-1, 1), got {}", spec.rho)));
        }
        if !(0.0..=1.0).contains(&spec.covariate_p) {
            return Err(Error::Config("covariate_p must lie in [0, 1]".into()));
        }
        if spec.sigmas.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::Config("sigmas must be positive".into()));
        }
        Ok(spec)
    }
}

/// Parses a JSON scenario file holding one override object or an array.
pub fn parse_overrides(json: &str) -> Result<Vec<ScenarioSpec>> {
    let value: serde_json::Value = serde_json::from_str(json)?;
    let items: Vec<ScenarioOverride> = if value.is_array() {
        serde_json::from_value(value)?
    } else {
        vec![serde_json::from_value(value)?]
    };
    items.iter().map(ScenarioOverride::resolve).collect()
}
