//! Adaptive cubature on boxes in one or two dimensions.
//!
//! Each region is integrated with a tensor-product 15-point Gauss–Kronrod
//! rule; the embedded 7-point Gauss rule gives the error estimate. The region
//! with the largest error is bisected along the axis whose own Kronrod/Gauss
//! discrepancy is largest, until the summed error meets the tolerance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Rule {
    nodes: [f64; 15],
    kronrod: [f64; 15],
    gauss: [f64; 15],
}

fn rule() -> Rule {
    let mut nodes = [0.0; 15];
    let mut kronrod = [0.0; 15];
    let mut gauss = [0.0; 15];
    for i in 0..7 {
        nodes[i] = -XGK[i];
        nodes[14 - i] = XGK[i];
        kronrod[i] = WGK[i];
        kronrod[14 - i] = WGK[i];
        if i % 2 == 1 {
            gauss[i] = WG[i / 2];
            gauss[14 - i] = WG[i / 2];
        }
    }
    nodes[7] = 0.0;
    kronrod[7] = WGK[7];
    gauss[7] = WG[3];
    Rule {
        nodes,
        kronrod,
        gauss,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CubatureResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CubatureFailure {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_evaluations: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rel: 1e-7,
            abs: 1e-14,
            max_evaluations: 5_000_000,
        }
    }
}

struct Region<const D: usize> {
    center: [f64; D],
    half: [f64; D],
    value: f64,
    error: f64,
    split_axis: usize,
}

impl<const D: usize> PartialEq for Region<D> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<const D: usize> Eq for Region<D> {}
impl<const D: usize> PartialOrd for Region<D> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const D: usize> Ord for Region<D> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn integrate_region<const D: usize, F: FnMut(&[f64; D]) -> f64>(
    f: &mut F,
    rule: &Rule,
    center: [f64; D],
    half: [f64; D],
) -> Region<D> {
    let vol: f64 = half.iter().product();
    let mut k = 0.0;
    let mut g = 0.0;
    // Per-axis estimates: Gauss weights on that axis, Kronrod elsewhere.
    let mut axis_g = [0.0; D];
    let mut idx = [0usize; D];
    let total = 15usize.pow(D as u32);
    let mut x = [0.0; D];
    for flat in 0..total {
        let mut rem = flat;
        for d in 0..D {
            idx[d] = rem % 15;
            rem /= 15;
            x[d] = center[d] + half[d] * rule.nodes[idx[d]];
        }
        let fx = f(&x);
        let wk: f64 = idx.iter().map(|&i| rule.kronrod[i]).product();
        let wg: f64 = idx.iter().map(|&i| rule.gauss[i]).product();
        k += wk * fx;
        g += wg * fx;
        if D > 1 {
            for d in 0..D {
                if rule.gauss[idx[d]] != 0.0 {
                    axis_g[d] += wk / rule.kronrod[idx[d]] * rule.gauss[idx[d]] * fx;
                }
            }
        }
    }
    let mut split_axis = 0;
    if D > 1 {
        let mut best = -1.0;
        for d in 0..D {
            let e = (k - axis_g[d]).abs();
            if e > best {
                best = e;
                split_axis = d;
            }
        }
    }
    Region {
        center,
        half,
        value: k * vol,
        error: ((k - g) * vol).abs(),
        split_axis,
    }
}

/// Integrates `f` over the box `[lower, upper]`.
pub fn integrate<const D: usize, F: FnMut(&[f64; D]) -> f64>(
    mut f: F,
    lower: [f64; D],
    upper: [f64; D],
    tol: Tolerance,
) -> Result<CubatureResult, CubatureFailure> {
    let rule = rule();
    let per_region = 15usize.pow(D as u32);
    let mut center = [0.0; D];
    let mut half = [0.0; D];
    for d in 0..D {
        center[d] = 0.5 * (lower[d] + upper[d]);
        half[d] = 0.5 * (upper[d] - lower[d]);
    }
    let first = integrate_region(&mut f, &rule, center, half);
    let mut value = first.value;
    let mut error = first.error;
    let mut evaluations = per_region;
    let mut heap = BinaryHeap::new();
    heap.push(first);

    loop {
        if error <= tol.abs.max(tol.rel * value.abs()) {
            // Re-sum to shed accumulated rounding from incremental updates.
            let value: f64 = heap.iter().map(|r| r.value).sum();
            let abs_error: f64 = heap.iter().map(|r| r.error).sum();
            return Ok(CubatureResult {
                value,
                abs_error,
                evaluations,
            });
        }
        if evaluations + 2 * per_region > tol.max_evaluations {
            return Err(CubatureFailure {
                value,
                abs_error: error,
                evaluations,
            });
        }
        let worst = heap.pop().expect("non-empty");
        let axis = worst.split_axis;
        let mut half = worst.half;
        half[axis] *= 0.5;
        let mut c1 = worst.center;
        let mut c2 = worst.center;
        c1[axis] -= half[axis];
        c2[axis] += half[axis];
        let r1 = integrate_region(&mut f, &rule, c1, half);
        let r2 = integrate_region(&mut f, &rule, c2, half);
        evaluations += 2 * per_region;
        value += r1.value + r2.value - worst.value;
        error += r1.error + r2.error - worst.error;
        heap.push(r1);
        heap.push(r2);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normal::pdf;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x: &[f64; 1]| x[0].powi(5) - 2.0 * x[0], [0.0], [2.0], Tolerance::default())
            .unwrap();
        assert!((r.value - (64.0 / 6.0 - 4.0)).abs() < 1e-12);
    }

    #[test]
    fn gaussian_mass_in_two_dimensions() {
        let r = integrate(
            |z: &[f64; 2]| pdf(z[0]) * pdf(z[1]),
            [-8.0, -8.0],
            [8.0, 8.0],
            Tolerance::default(),
        )
        .unwrap();
        assert!((r.value - 1.0).abs() < 1e-9, "{}", r.value);
        assert!(r.abs_error < 1e-7);
    }

    #[test]
    fn lognormal_mean() {
        // E[exp(Z)] = exp(1/2)
        let r = integrate(|z: &[f64; 1]| z[0].exp() * pdf(z[0]), [-8.0], [8.0], Tolerance::default())
            .unwrap();
        assert!((r.value - 0.5f64.exp()).abs() < 1e-7 * 0.5f64.exp() + 1e-9);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let tol = Tolerance {
            rel: 1e-15,
            abs: 0.0,
            max_evaluations: 2000,
        };
        let r = integrate(|x: &[f64; 2]| (x[0] * x[1]).abs().sqrt(), [-1.0, -1.0], [1.0, 1.0], tol);
        assert!(r.is_err());
    }
}
