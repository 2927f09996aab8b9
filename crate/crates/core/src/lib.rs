//! Causal mediation analysis with multiple correlated mediators and a binary
//! outcome.
//!
//! The crate provides six estimators of the total, direct and joint indirect
//! effects on the risk-ratio scale (two of which also estimate path-specific
//! indirect effects), a ground-truth oracle that evaluates the mediation
//! formula by numerical integration, nonparametric bootstrap intervals, and a
//! simulation harness for the sixteen-scenario benchmark grid.
//!
//! ```no_run
//! use medmediate::prelude::*;
//!
//! let spec = ScenarioSpec::table(7).unwrap();
//! let data = generate_dataset(&spec, 1000, 42);
//! let cfg = EstimatorConfig::new(MethodId::Weighting);
//! let est = estimate(&data, &cfg).unwrap();
//! println!("TE = {:.3}, DE = {:.3}, IE = {:.3}", est.te, est.de, est.ie);
//! ```

pub mod bvn;
pub mod cli;
pub mod cubature;
pub mod data;
pub mod error;
pub mod estimators;
pub mod formula;
pub mod glm;
pub mod inference;
pub mod joint;
pub mod normal;
pub mod rng;
pub mod scenario;
pub mod simulation;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::bvn::bvn_cdf;
    pub use crate::data::{load_csv, validate, Dataset, MediatorKind, Role, RoleSpec};
    pub use crate::error::{Error, Result};
    pub use crate::estimators::{
        estimate, Effect, EffectEstimates, EstimatorConfig, IntervalEstimate, MethodId,
    };
    pub use crate::formula::{counterfactual_mean, true_effects, TrueEffects};
    pub use crate::glm::{fit, predict, Family, GlmFit, PredictType};
    pub use crate::inference::{bootstrap_ci, BootstrapPlan};
    pub use crate::joint::{fit_joint, sample_counterfactual_pair, JointMediatorModel};
    pub use crate::scenario::ScenarioSpec;
    pub use crate::simulation::{generate_dataset, run_scenario, MetricsRecord, SimulationPlan};
}
