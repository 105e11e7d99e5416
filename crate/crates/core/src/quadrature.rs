//! Globally adaptive Gauss-Kronrod (7/15) quadrature with forced breakpoints.

use std::ops::{Add, Mul, Sub};

use crate::linalg::Mat4;

/// Values that can be integrated: a vector space with a norm.
pub trait Integrand: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl Integrand for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Integrand for Mat4 {
    fn zero() -> Self {
        Mat4::zeros()
    }
    fn magnitude(&self) -> f64 {
        self.abs().max()
    }
}

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
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod<T: Integrand, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> (T, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k = k + s * WGK[j];
        if j % 2 == 1 {
            g = g + s * WG[j / 2];
        }
    }
    let k = k * h;
    let g = g * h;
    (k, (k - g).magnitude())
}

#[derive(Clone, Copy, Debug)]
pub struct Options {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 0.0,
            max_intervals: 20_000,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
    pub intervals: usize,
    pub converged: bool,
}

/// Integrates `f` over `[a, b]`, splitting first at every breakpoint that
/// falls strictly inside the interval.
pub fn integrate<T, F>(mut f: F, a: f64, b: f64, breakpoints: &[f64], opts: Options) -> Estimate<T>
where
    T: Integrand,
    F: FnMut(f64) -> T,
{
    let mut knots: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|x| *x > a && *x < b)
        .collect();
    knots.push(a);
    knots.push(b);
    knots.sort_by(f64::total_cmp);
    knots.dedup();

    let mut parts: Vec<(f64, f64, T, f64)> = knots
        .windows(2)
        .map(|w| {
            let (v, e) = kronrod(&mut f, w[0], w[1]);
            (w[0], w[1], v, e)
        })
        .collect();

    loop {
        let total = parts.iter().fold(T::zero(), |acc, p| acc + p.2);
        let err: f64 = parts.iter().map(|p| p.3).sum();
        let target = opts.abs_tol.max(opts.rel_tol * total.magnitude());
        let done = err <= target;
        if done || parts.len() >= opts.max_intervals {
            return Estimate {
                value: total,
                error: err,
                intervals: parts.len(),
                converged: done,
            };
        }
        let worst = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap();
        let (lo, hi, _, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            return Estimate {
                value: total,
                error: err,
                intervals: parts.len() + 1,
                converged: false,
            };
        }
        let (v1, e1) = kronrod(&mut f, lo, mid);
        let (v2, e2) = kronrod(&mut f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}

/// Knots at `center ± width·10^k` for `k = -2..=2`, for Lorentzian features.
pub fn lorentzian_knots(center: f64, widths: &[f64]) -> Vec<f64> {
    let mut out = vec![center];
    for &w in widths {
        if w > 0.0 && w.is_finite() {
            for k in -2..=2 {
                let d = w * 10f64.powi(k);
                out.push(center - d);
                out.push(center + d);
            }
        }
    }
    out
}
