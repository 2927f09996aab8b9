//! Brute-force counterfactual simulation used as an independent oracle.
#![allow(dead_code)]

use medmediate::data::{Column, Dataset, MediatorKind, Role};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// Plain description of a process, independent of the crate's types.
#[derive(Clone, Debug)]
pub struct Process {
    pub binary: [bool; 2],
    pub rho: f64,
    pub sigma: [f64; 2],
    pub p_c: f64,
    /// (intercept, X, C) per mediator.
    pub med: [[f64; 3]; 2],
    /// (intercept, X, M1, M2, M1M2, C), logit link.
    pub out: [f64; 6],
}

impl Process {
    pub fn scenario(binary: [bool; 2], rho: f64, interaction: bool) -> Self {
        let beta0 = if binary == [false, false] { -1.0 } else { -2.0 };
        Process {
            binary,
            rho,
            sigma: [1.0, 1.0],
            p_c: 0.5,
            med: [[-1.2, 1.0, 0.2], [-1.5, 1.5, 0.5]],
            out: [beta0, 0.5, 1.5, 0.5, if interaction { 0.2 } else { 0.0 }, 1.5],
        }
    }

    fn mediator(&self, k: usize, x: f64, c: f64, e: f64) -> f64 {
        let lp = self.med[k][0] + self.med[k][1] * x + self.med[k][2] * c;
        if self.binary[k] {
            if lp + e > 0.0 { 1.0 } else { 0.0 }
        } else {
            lp + self.sigma[k] * e
        }
    }

    fn outcome_prob(&self, x: f64, m1: f64, m2: f64, c: f64) -> f64 {
        let o = &self.out;
        let eta = o[0] + o[1] * x + o[2] * m1 + o[3] * m2 + o[4] * m1 * m2 + o[5] * c;
        1.0 / (1.0 + (-eta).exp())
    }
}

/// Counterfactual settings (x, x′, x″), in the order
/// 000, 1(00), 1(11), 1(01), 1(10).
pub const SETTINGS: [(f64, f64, f64); 5] = [
    (0.0, 0.0, 0.0),
    (1.0, 0.0, 0.0),
    (1.0, 1.0, 1.0),
    (1.0, 0.0, 1.0),
    (1.0, 1.0, 0.0),
];

/// Monte Carlo estimate of each effect with its standard error. Each draw
/// samples C and one latent pair, then evaluates all five conditional
/// outcome probabilities, so the ratios use paired draws.
pub struct McEffects {
    pub means: [f64; 5],
    /// (estimate, standard error) of TE, DE, IE, IE1, IE2.
    pub effects: [(f64, f64); 5],
}

pub const RATIOS: [(usize, usize); 5] = [(2, 0), (1, 0), (2, 1), (2, 3), (2, 4)];

pub fn mc_effects(p: &Process, draws: usize, seed: u64) -> McEffects {
    let chunks = 64usize;
    let per = draws / chunks;
    let partial: Vec<([f64; 5], [[f64; 5]; 5])> = (0..chunks)
        .into_par_iter()
        .map(|ch| {
            let mut g = ChaCha20Rng::seed_from_u64(seed ^ ((ch as u64 + 1) << 32));
            let mut s = [0.0; 5];
            let mut ss = [[0.0; 5]; 5];
            for _ in 0..per {
                let c = if g.random::<f64>() < p.p_c { 1.0 } else { 0.0 };
                let z1: f64 = g.sample(StandardNormal);
                let z2: f64 = g.sample(StandardNormal);
                let e1 = z1;
                let e2 = p.rho * z1 + (1.0 - p.rho * p.rho).sqrt() * z2;
                let mut v = [0.0; 5];
                for (j, &(x, x1, x2)) in SETTINGS.iter().enumerate() {
                    let m1 = p.mediator(0, x1, c, e1);
                    let m2 = p.mediator(1, x2, c, e2);
                    v[j] = p.outcome_prob(x, m1, m2, c);
                }
                for a in 0..5 {
                    s[a] += v[a];
                    for b in 0..5 {
                        ss[a][b] += v[a] * v[b];
                    }
                }
            }
            (s, ss)
        })
        .collect();
    let n = (per * chunks) as f64;
    let mut s = [0.0; 5];
    let mut ss = [[0.0; 5]; 5];
    for (ps, pss) in &partial {
        for a in 0..5 {
            s[a] += ps[a];
            for b in 0..5 {
                ss[a][b] += pss[a][b];
            }
        }
    }
    let means = s.map(|v| v / n);
    let cov = |a: usize, b: usize| (ss[a][b] / n - means[a] * means[b]) / n;
    let effects = RATIOS.map(|(a, b)| {
        let r = means[a] / means[b];
        // Delta method for a ratio of means.
        let var = (cov(a, a) - 2.0 * r * cov(a, b) + r * r * cov(b, b)) / (means[b] * means[b]);
        (r, var.max(0.0).sqrt())
    });
    McEffects { means, effects }
}

/// Simulates an observed dataset from the process (columns Y, X, M1, M2, C;
/// exposure logit −0.25 − C).
pub fn simulate(p: &Process, n: usize, seed: u64) -> Dataset {
    let mut g = ChaCha20Rng::seed_from_u64(seed);
    let mut cols = vec![Vec::with_capacity(n); 5];
    for _ in 0..n {
        let c = if g.random::<f64>() < p.p_c { 1.0 } else { 0.0 };
        let px = 1.0 / (1.0 + (0.25_f64 + c).exp());
        let x = if g.random::<f64>() < px { 1.0 } else { 0.0 };
        let z1: f64 = g.sample(StandardNormal);
        let z2: f64 = g.sample(StandardNormal);
        let e2 = p.rho * z1 + (1.0 - p.rho * p.rho).sqrt() * z2;
        let m1 = p.mediator(0, x, c, z1);
        let m2 = p.mediator(1, x, c, e2);
        let y = if g.random::<f64>() < p.outcome_prob(x, m1, m2, c) { 1.0 } else { 0.0 };
        for (col, v) in cols.iter_mut().zip([y, x, m1, m2, c]) {
            col.push(v);
        }
    }
    let kind = |b: bool| if b { MediatorKind::Binary } else { MediatorKind::Continuous };
    let names = ["Y", "X", "M1", "M2", "C"];
    Dataset::new(
        names
            .iter()
            .zip(cols)
            .map(|(n, values)| Column { name: n.to_string(), values })
            .collect(),
        vec![
            ("Y".into(), Role::Outcome),
            ("X".into(), Role::Exposure),
            ("M1".into(), Role::Mediator(kind(p.binary[0]))),
            ("M2".into(), Role::Mediator(kind(p.binary[1]))),
            ("C".into(), Role::Covariate),
        ],
    )
}
