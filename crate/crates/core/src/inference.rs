//! Nonparametric bootstrap percentile intervals.
//!
//! Rows are resampled with replacement (unstratified) and the whole
//! estimation pipeline is rerun on each resample. Resample `b` draws its row
//! indices from the stream keyed by `(seed, b)`, and its own Monte Carlo
//! seed is derived the same way, so results do not depend on scheduling.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimators::{
    estimate, Effect, EffectEstimates, EstimatorConfig, IntervalEstimate, IntervalSource, MethodId,
};
use crate::rng::{self, label};

const MAX_FAILURE_SHARE: f64 = 0.10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum FailurePolicy {
    /// Drop failed resamples, count them, and abort above 10%.
    #[default]
    DropAndRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapPlan {
    pub n_resamples: usize,
    pub level: f64,
    pub seed: u64,
    pub failure_policy: FailurePolicy,
}

impl Default for BootstrapPlan {
    fn default() -> Self {
        BootstrapPlan {
            n_resamples: 200,
            level: 0.95,
            seed: 0,
            failure_policy: FailurePolicy::DropAndRecord,
        }
    }
}

impl BootstrapPlan {
    pub fn new(n_resamples: usize, seed: u64) -> Self {
        BootstrapPlan {
            n_resamples,
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Config(format!("confidence level must lie in (0, 1), got {}", self.level)));
        }
        let alpha = 1.0 - self.level;
        if (self.n_resamples as f64) < 2.0 / alpha {
            return Err(Error::Config(format!(
                "{} resamples are too few for a {} interval (need at least {})",
                self.n_resamples,
                self.level,
                (2.0 / alpha).ceil()
            )));
        }
        Ok(())
    }
}

/// Row indices of resample `b`.
pub fn resample_indices(n: usize, seed: u64, b: usize) -> Vec<usize> {
    let mut g = rng::stream(seed, &[label::BOOTSTRAP, b as u64]);
    (0..n).map(|_| g.random_range(0..n)).collect()
}

/// Percentile interval from resample estimates: order statistics of rank
/// `⌊α/2·(B+1)⌋` and `⌈(1−α/2)·(B+1)⌉` (1-based, clamped to `1..=B`).
pub fn percentile_interval(values: &[f64], level: f64) -> (f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let b = v.len();
    let alpha = 1.0 - level;
    let lo = ((alpha / 2.0 * (b + 1) as f64).floor() as usize).clamp(1, b);
    let hi = (((1.0 - alpha / 2.0) * (b + 1) as f64).ceil() as usize).clamp(1, b);
    (v[lo - 1], v[hi - 1])
}

/// Point estimates on `ds` with bootstrap percentile intervals for every
/// effect the method reports.
pub fn bootstrap_ci(ds: &Dataset, cfg: &EstimatorConfig, plan: &BootstrapPlan) -> Result<EffectEstimates> {
    if cfg.method == MethodId::Jerolon {
        return Err(Error::Config(
            "jerolon reports quasi-Bayes intervals and is not bootstrapped".into(),
        ));
    }
    plan.validate()?;
    let mut point = estimate(ds, cfg)?;
    let n = ds.n_rows();
    let results: Vec<Option<EffectEstimates>> = (0..plan.n_resamples)
        .into_par_iter()
        .map(|b| {
            let sample = ds.select_rows(&resample_indices(n, plan.seed, b));
            let mut c = cfg.clone();
            c.rng_seed = rng::derive_seed(cfg.rng_seed, &[label::BOOTSTRAP, b as u64]);
            estimate(&sample, &c).ok()
        })
        .collect();
    let ok: Vec<&EffectEstimates> = results.iter().flatten().collect();
    let failed = plan.n_resamples - ok.len();
    if failed as f64 > MAX_FAILURE_SHARE * plan.n_resamples as f64 || ok.is_empty() {
        return Err(Error::BootstrapFailures {
            failed,
            total: plan.n_resamples,
        });
    }

    let mut intervals = BTreeMap::new();
    for effect in point.effects() {
        let values: Vec<f64> = ok.iter().filter_map(|e| e.value(effect)).collect();
        let (lower, upper) = percentile_interval(&values, plan.level);
        intervals.insert(
            effect,
            IntervalEstimate {
                lower,
                upper,
                level: plan.level,
                source: IntervalSource::Bootstrap,
            },
        );
    }
    point.intervals = intervals;
    point.meta.bootstrap_used = Some(ok.len());
    point.meta.bootstrap_failed = Some(failed);
    Ok(point)
}

/// Runs one method with the intervals it calls for: bootstrap for every
/// method but Jerolon, quasi-Bayes for Jerolon. With `plan = None` the
/// bootstrap is skipped and only point estimates are returned.
pub fn estimate_with_intervals(
    ds: &Dataset,
    cfg: &EstimatorConfig,
    plan: Option<&BootstrapPlan>,
) -> Result<EffectEstimates> {
    match plan {
        Some(p) if cfg.method.capabilities().bootstrap_required => bootstrap_ci(ds, cfg, p),
        _ => estimate(ds, cfg),
    }
}

/// Effects in canonical order with their intervals, if any.
pub fn interval_table(est: &EffectEstimates) -> Vec<(Effect, f64, Option<IntervalEstimate>)> {
    est.effects()
        .into_iter()
        .map(|e| (e, est.value(e).unwrap(), est.intervals.get(&e).copied()))
        .collect()
}
