//! The six mediation estimators.
//!
//! Every estimator maps a dataset and a configuration to risk-ratio scale
//! effects. TE = DE × IE holds by construction for all of them.
//!
//! | method     | path-specific | M₁M₂ interaction | bootstrap needed |
//! |------------|---------------|------------------|------------------|
//! | difference | no            | no               | yes              |
//! | regression | no            | no               | yes              |
//! | weighting  | no            | yes              | yes              |
//! | iorw       | no            | no               | yes              |
//! | wang       | yes           | no               | yes              |
//! | jerolon    | yes           | yes              | no               |

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, MediatorKind, RoleView};
use crate::error::{Error, Result};

mod difference;
mod iorw;
mod jerolon;
mod regression;
mod wang;
mod weighting;

pub use difference::estimate_difference;
pub use iorw::{estimate_iorw, iorw_weights};
pub use jerolon::{estimate_jerolon, estimate_jerolon_with_models};
pub use regression::estimate_regression;
pub use wang::{estimate_wang, outcome_model_from_fit, wang_effects};
pub use weighting::{estimate_weighting, exposure_weights};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodId {
    Difference,
    Regression,
    Weighting,
    Iorw,
    Wang,
    Jerolon,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Capabilities {
    pub path_specific: bool,
    pub mediator_kinds: &'static [MediatorKind],
    pub interaction_supported: bool,
    pub bootstrap_required: bool,
    /// Number of mediators the method requires, if fixed.
    pub mediator_count: Option<usize>,
}

const BOTH_KINDS: &[MediatorKind] = &[MediatorKind::Binary, MediatorKind::Continuous];

impl MethodId {
    pub const ALL: [MethodId; 6] = [
        MethodId::Difference,
        MethodId::Regression,
        MethodId::Weighting,
        MethodId::Iorw,
        MethodId::Wang,
        MethodId::Jerolon,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MethodId::Difference => "difference",
            MethodId::Regression => "regression",
            MethodId::Weighting => "weighting",
            MethodId::Iorw => "iorw",
            MethodId::Wang => "wang",
            MethodId::Jerolon => "jerolon",
        }
    }

    pub fn capabilities(self) -> Capabilities {
        let path = matches!(self, MethodId::Wang | MethodId::Jerolon);
        Capabilities {
            path_specific: path,
            mediator_kinds: BOTH_KINDS,
            interaction_supported: matches!(self, MethodId::Weighting | MethodId::Jerolon),
            bootstrap_required: self != MethodId::Jerolon,
            mediator_count: path.then_some(2),
        }
    }

    /// Whether the method can run on a dataset with `n_mediators` mediators.
    pub fn accepts(self, n_mediators: usize) -> bool {
        n_mediators >= 1 && self.capabilities().mediator_count.is_none_or(|k| k == n_mediators)
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for MethodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MethodId::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown method '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Effect {
    #[serde(rename = "TE")]
    Te,
    #[serde(rename = "DE")]
    De,
    #[serde(rename = "IE")]
    Ie,
    #[serde(rename = "IE1")]
    Ie1,
    #[serde(rename = "IE2")]
    Ie2,
}

impl Effect {
    pub const ALL: [Effect; 5] = [Effect::Te, Effect::De, Effect::Ie, Effect::Ie1, Effect::Ie2];

    pub fn as_str(self) -> &'static str {
        match self {
            Effect::Te => "TE",
            Effect::De => "DE",
            Effect::Ie => "IE",
            Effect::Ie1 => "IE1",
            Effect::Ie2 => "IE2",
        }
    }
}

impl fmt::Display for Effect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Effect {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Effect::ALL
            .into_iter()
            .find(|e| e.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown effect '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntervalSource {
    Bootstrap,
    QuasiBayes,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalEstimate {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub source: IntervalSource,
}

impl IntervalEstimate {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scale {
    RR,
}

/// Run details attached to an estimate.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EstimateMeta {
    pub n_obs: usize,
    /// Monte Carlo draws used (imputation or quasi-Bayes).
    pub draws: Option<usize>,
    pub rejected_draws: usize,
    pub bootstrap_used: Option<usize>,
    pub bootstrap_failed: Option<usize>,
    /// Exposed subjects whose IORW weight was truncated.
    pub truncated_weights: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectEstimates {
    pub te: f64,
    pub de: f64,
    pub ie: f64,
    /// Path-specific indirect effects, one per mediator.
    pub ie_path: Option<Vec<f64>>,
    pub intervals: BTreeMap<Effect, IntervalEstimate>,
    pub method: MethodId,
    pub scale: Scale,
    pub meta: EstimateMeta,
}

impl EffectEstimates {
    pub(crate) fn new(method: MethodId, te: f64, de: f64, ie: f64, n_obs: usize) -> Self {
        EffectEstimates {
            te,
            de,
            ie,
            ie_path: None,
            intervals: BTreeMap::new(),
            method,
            scale: Scale::RR,
            meta: EstimateMeta {
                n_obs,
                ..EstimateMeta::default()
            },
        }
    }

    pub fn value(&self, effect: Effect) -> Option<f64> {
        match effect {
            Effect::Te => Some(self.te),
            Effect::De => Some(self.de),
            Effect::Ie => Some(self.ie),
            Effect::Ie1 => self.ie_path.as_ref().and_then(|p| p.first().copied()),
            Effect::Ie2 => self.ie_path.as_ref().and_then(|p| p.get(1).copied()),
        }
    }

    /// Effects this estimate carries, in canonical order.
    pub fn effects(&self) -> Vec<Effect> {
        Effect::ALL.into_iter().filter(|e| self.value(*e).is_some()).collect()
    }

    /// Relative discrepancy `|te − de·ie| / te`.
    pub fn decomposition_error(&self) -> f64 {
        (self.te - self.de * self.ie).abs() / self.te.abs()
    }

    fn check(self) -> Result<Self> {
        let ok = self.effects().into_iter().all(|e| {
            let v = self.value(e).unwrap();
            v.is_finite() && v > 0.0
        });
        if ok {
            Ok(self)
        } else {
            Err(Error::Config(format!(
                "{} produced a non-positive or non-finite effect (TE {}, DE {}, IE {})",
                self.method, self.te, self.de, self.ie
            )))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub method: MethodId,
    pub n_imputation_draws: usize,
    pub n_quasibayes_draws: usize,
    pub weight_truncation_quantile: f64,
    pub include_interaction: bool,
    pub rng_seed: u64,
}

impl EstimatorConfig {
    pub fn new(method: MethodId) -> Self {
        EstimatorConfig {
            method,
            n_imputation_draws: 1000,
            n_quasibayes_draws: 1000,
            weight_truncation_quantile: 0.99,
            include_interaction: false,
            rng_seed: 0,
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn draws(mut self, n: usize) -> Self {
        self.n_imputation_draws = n;
        self.n_quasibayes_draws = n;
        self
    }

    pub fn interaction(mut self, on: bool) -> Self {
        self.include_interaction = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.include_interaction && !self.method.capabilities().interaction_supported {
            return Err(Error::UnsupportedInteraction(self.method.as_str()));
        }
        let q = self.weight_truncation_quantile;
        if !(q > 0.5 && q <= 1.0) {
            return Err(Error::Config(format!("weight truncation quantile must lie in (0.5, 1], got {q}")));
        }
        if self.n_imputation_draws == 0 || self.n_quasibayes_draws == 0 {
            return Err(Error::Config("draw counts must be positive".into()));
        }
        Ok(())
    }
}

/// Runs the configured method on `ds`.
pub fn estimate(ds: &Dataset, cfg: &EstimatorConfig) -> Result<EffectEstimates> {
    cfg.validate()?;
    let est = match cfg.method {
        MethodId::Difference => estimate_difference(ds, cfg),
        MethodId::Regression => estimate_regression(ds, cfg),
        MethodId::Weighting => estimate_weighting(ds, cfg),
        MethodId::Iorw => estimate_iorw(ds, cfg),
        MethodId::Wang => estimate_wang(ds, cfg),
        MethodId::Jerolon => estimate_jerolon(ds, cfg),
    }?;
    est.check()
}

/// Outcome design `[1, X, M₁..M_K, (M₁M₂), C...]`.
pub(crate) fn outcome_design(view: &RoleView, interaction: bool) -> Result<DMatrix<f64>> {
    let k = view.mediators.len();
    if interaction && k != 2 {
        return Err(Error::Config(format!(
            "a mediator-mediator interaction needs exactly two mediators, found {k}"
        )));
    }
    let n = view.n_rows();
    let p = 2 + k + usize::from(interaction) + view.covariates.len();
    Ok(DMatrix::from_fn(n, p, |i, j| outcome_row_entry(view, interaction, i, j)))
}

fn outcome_row_entry(view: &RoleView, interaction: bool, i: usize, j: usize) -> f64 {
    let k = view.mediators.len();
    match j {
        0 => 1.0,
        1 => view.exposure[i],
        j if j < 2 + k => view.mediators[j - 2].values[i],
        j if interaction && j == 2 + k => view.mediators[0].values[i] * view.mediators[1].values[i],
        j => view.covariates[j - 2 - k - usize::from(interaction)][i],
    }
}

/// Design `[1, X, C...]`.
pub(crate) fn exposure_covariate_design(view: &RoleView) -> DMatrix<f64> {
    let mut cols: Vec<&[f64]> = vec![view.exposure];
    cols.extend(view.covariates.iter().copied());
    crate::glm::design_with_intercept(&cols)
}

pub(crate) fn require_two_mediators(view: &RoleView, method: &'static str) -> Result<()> {
    if view.mediators.len() != 2 {
        return Err(Error::MediatorCount {
            method,
            expected: 2,
            found: view.mediators.len(),
        });
    }
    Ok(())
}

/// Linear type-7 quantile of sorted data.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capabilities_match_method_table() {
        for m in MethodId::ALL {
            let c = m.capabilities();
            assert_eq!(c.path_specific, matches!(m, MethodId::Wang | MethodId::Jerolon));
            assert_eq!(c.bootstrap_required, m != MethodId::Jerolon);
            assert_eq!(m.as_str().parse::<MethodId>().unwrap(), m);
        }
        assert!(!MethodId::Wang.accepts(4));
        assert!(MethodId::Iorw.accepts(4));
    }

    #[test]
    fn interaction_rejected_where_unsupported() {
        let cfg = EstimatorConfig::new(MethodId::Difference).interaction(true);
        assert!(matches!(cfg.validate(), Err(Error::UnsupportedInteraction(_))));
        assert!(EstimatorConfig::new(MethodId::Jerolon).interaction(true).validate().is_ok());
    }

    #[test]
    fn type7_quantile() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&v, 0.5), 3.0);
        assert_eq!(quantile_sorted(&v, 0.9), 4.6);
        assert_eq!(quantile_sorted(&v, 1.0), 5.0);
    }
}
