//! Minimization of the EPR variance over coupling angles and motional
//! cooperativity, cooperativity sweeps, and the large-`C_S` reference
//! formulas.
//!
//! Search: a fixed grid of seeds, then Nelder-Mead from the five best.
//! The free search is also seeded from the symmetric optimum and from any
//! caller-supplied warm start, so it can never end above either.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use rayon::prelude::*;

use crate::conditional::conditional_steady_state;
use crate::model::{unidirectional_rate, HybridParams, OscillatorParams};
use crate::simplex::{self, minimize};
use crate::unconditional::covariance_analytic;

const PENALTY: f64 = 1e6;
const ANGLE_LO: f64 = 0.02;
const ANGLE_HI: f64 = FRAC_PI_2 - 0.02;
const ANGLE_SEEDS: usize = 24;
const LOG_CM_SEEDS: usize = 16;
const LOG_CM_RANGE: (f64, f64) = (-1.0, 6.0);
const REFINED: usize = 5;
const TIE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Unconditional,
    Conditional,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Constraint {
    Free,
    Symmetric,
    /// Both angles pinned at `π/4`; only `C_M` is searched.
    Qnd,
}

impl Constraint {
    pub fn name(self) -> &'static str {
        match self {
            Constraint::Free => "free",
            Constraint::Symmetric => "symmetric",
            Constraint::Qnd => "qnd",
        }
    }
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Unconditional => "unconditional",
            Mode::Conditional => "conditional",
        }
    }
}

/// Everything held fixed while `C_S` varies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Context {
    pub gamma_s0: f64,
    pub n_bar_s: f64,
    pub gamma_m0: f64,
    pub n_bar_m: f64,
    pub epsilon: f64,
}

impl Context {
    pub fn spin_decoherence(&self) -> f64 {
        self.gamma_s0 * (self.n_bar_s + 0.5)
    }

    pub fn mech_decoherence(&self) -> f64 {
        self.gamma_m0 * (self.n_bar_m + 0.5)
    }

    /// `r = γ̃_M0 / γ̃_S0`.
    pub fn r(&self) -> f64 {
        self.mech_decoherence() / self.spin_decoherence()
    }

    pub fn params(&self, c_s: f64, theta_s: f64, theta_m: f64, c_m: f64) -> crate::Result<HybridParams> {
        HybridParams::new(
            OscillatorParams::with_cooperativity(self.gamma_s0, self.n_bar_s, c_s, theta_s)?,
            OscillatorParams::with_cooperativity(self.gamma_m0, self.n_bar_m, c_m, theta_m)?,
            self.epsilon,
        )
    }
}

fn xi_for(h: &HybridParams, mode: Mode) -> Option<f64> {
    let state = match mode {
        Mode::Unconditional => covariance_analytic(h).ok()?,
        Mode::Conditional => conditional_steady_state(h).ok()?,
    };
    state.xi_g.is_finite().then_some(state.xi_g)
}

/// EPR variance at the given point, or `+inf` when the point is unstable
/// or outside the angle range.
pub fn objective(ctx: &Context, c_s: f64, theta_s: f64, theta_m: f64, log10_cm: f64, mode: Mode) -> f64 {
    let Ok(h) = ctx.params(c_s, theta_s, theta_m, 10f64.powf(log10_cm)) else {
        return f64::INFINITY;
    };
    if !h.is_stable() {
        return f64::INFINITY;
    }
    xi_for(&h, mode).unwrap_or(f64::INFINITY)
}

fn angle_excess(theta: f64) -> f64 {
    (-theta).max(0.0) + (theta - FRAC_PI_2).max(0.0)
}

/// Objective used inside the simplex: finite everywhere, with unstable
/// points mapped to `1e6` plus their distance from the stable region.
fn penalized(ctx: &Context, c_s: f64, theta_s: f64, theta_m: f64, log10_cm: f64, mode: Mode) -> f64 {
    let out = angle_excess(theta_s) + angle_excess(theta_m);
    if out > 0.0 || !log10_cm.is_finite() {
        return PENALTY + out;
    }
    let Ok(h) = ctx.params(c_s, theta_s, theta_m, 10f64.powf(log10_cm)) else {
        return PENALTY;
    };
    if !h.is_stable() {
        let ds = (-h.spin.gamma_eff()).max(0.0) / ctx.spin_decoherence();
        let dm = (-h.mech.gamma_eff()).max(0.0) / ctx.mech_decoherence();
        return PENALTY + ds + dm;
    }
    xi_for(&h, mode).map_or(PENALTY, |x| x.min(PENALTY))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizationResult {
    pub c_s: f64,
    pub constraint: Constraint,
    pub mode: Mode,
    pub theta_s: f64,
    pub theta_m: f64,
    pub c_m: f64,
    pub xi_g: f64,
    /// `−2√(1−ε) R / γ_M`.
    pub r_over_gamma_m: f64,
    pub converged: bool,
    pub iterations: usize,
    pub feasible: bool,
}

impl OptimizationResult {
    fn infeasible(c_s: f64, constraint: Constraint, mode: Mode) -> Self {
        Self {
            c_s,
            constraint,
            mode,
            theta_s: f64::NAN,
            theta_m: f64::NAN,
            c_m: f64::NAN,
            xi_g: f64::INFINITY,
            r_over_gamma_m: f64::NAN,
            converged: false,
            iterations: 0,
            feasible: false,
        }
    }

    /// Search coordinates `(θ_S, θ_M, log10 C_M)`.
    pub fn point(&self) -> Option<[f64; 3]> {
        self.feasible
            .then(|| [self.theta_s, self.theta_m, self.c_m.log10()])
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
}

struct Candidate {
    x: Vec<f64>,
    f: f64,
    converged: bool,
    iterations: usize,
}

/// Runs Nelder-Mead from the best grid seeds and from `extra`, returning
/// the lowest end point (smallest last coordinate among near-ties).
fn refine<F>(f: F, mut grid: Vec<(f64, Vec<f64>)>, extra: &[Vec<f64>], step: &[f64]) -> Option<Candidate>
where
    F: Fn(&[f64]) -> f64,
{
    grid.sort_by(|a, b| a.0.total_cmp(&b.0));
    let starts = grid
        .into_iter()
        .take(REFINED)
        .map(|(_, x)| x)
        .chain(extra.iter().cloned());
    let mut best: Option<Candidate> = None;
    for x0 in starts {
        let m = minimize(&f, &x0, step, simplex::Options::default());
        let cand = Candidate {
            x: m.x,
            f: m.f,
            converged: m.converged,
            iterations: m.iterations,
        };
        let better = match &best {
            None => true,
            Some(b) => {
                if (cand.f - b.f).abs() <= TIE {
                    cand.x.last() < b.x.last()
                } else {
                    cand.f < b.f
                }
            }
        };
        if better {
            best = Some(cand);
        }
    }
    best.filter(|b| b.f < PENALTY)
}

fn finish(
    ctx: &Context,
    c_s: f64,
    constraint: Constraint,
    mode: Mode,
    cand: Option<Candidate>,
    angles: impl Fn(&[f64]) -> (f64, f64, f64),
) -> OptimizationResult {
    let Some(cand) = cand else {
        return OptimizationResult::infeasible(c_s, constraint, mode);
    };
    let (theta_s, theta_m, log_cm) = angles(&cand.x);
    let c_m = 10f64.powf(log_cm);
    let xi_g = objective(ctx, c_s, theta_s, theta_m, log_cm, mode);
    let h = match ctx.params(c_s, theta_s, theta_m, c_m) {
        Ok(h) if h.is_stable() && xi_g.is_finite() => h,
        _ => return OptimizationResult::infeasible(c_s, constraint, mode),
    };
    OptimizationResult {
        c_s,
        constraint,
        mode,
        theta_s,
        theta_m,
        c_m,
        xi_g,
        r_over_gamma_m: -2.0 * h.transmission() * unidirectional_rate(&h) / h.mech.gamma_eff(),
        converged: cand.converged,
        iterations: cand.iterations,
        feasible: true,
    }
}

/// Optimizes angles and `C_M` at fixed `C_S`. `warm` points, given as
/// `(θ_S, θ_M, log10 C_M)`, are refined alongside the grid seeds.
pub fn optimize_point_from(
    c_s: f64,
    ctx: &Context,
    constraint: Constraint,
    mode: Mode,
    warm: &[[f64; 3]],
) -> OptimizationResult {
    let log_cms: Vec<f64> = linspace(LOG_CM_RANGE.0, LOG_CM_RANGE.1, LOG_CM_SEEDS).collect();
    let angles: Vec<f64> = linspace(ANGLE_LO, ANGLE_HI, ANGLE_SEEDS).collect();
    match constraint {
        Constraint::Qnd => {
            let q = FRAC_PI_4;
            let f = |x: &[f64]| penalized(ctx, c_s, q, q, x[0], mode);
            let grid = log_cms.iter().map(|&l| (f(&[l]), vec![l])).collect();
            let extra: Vec<Vec<f64>> = warm.iter().map(|w| vec![w[2]]).collect();
            let best = refine(f, grid, &extra, &[0.25]);
            finish(ctx, c_s, constraint, mode, best, |x| (q, q, x[0]))
        }
        Constraint::Symmetric => {
            let f = |x: &[f64]| penalized(ctx, c_s, x[0], x[0], x[1], mode);
            let mut grid = Vec::with_capacity(angles.len() * log_cms.len());
            for &t in &angles {
                for &l in &log_cms {
                    grid.push((f(&[t, l]), vec![t, l]));
                }
            }
            let extra: Vec<Vec<f64>> = warm.iter().map(|w| vec![0.5 * (w[0] + w[1]), w[2]]).collect();
            let best = refine(f, grid, &extra, &[0.05, 0.25]);
            finish(ctx, c_s, constraint, mode, best, |x| (x[0], x[0], x[1]))
        }
        Constraint::Free => {
            let sym = optimize_point_from(c_s, ctx, Constraint::Symmetric, mode, &[]);
            let f = |x: &[f64]| penalized(ctx, c_s, x[0], x[1], x[2], mode);
            let mut grid = Vec::with_capacity(angles.len().pow(2) * log_cms.len());
            for &ts in &angles {
                for &tm in &angles {
                    for &l in &log_cms {
                        grid.push((f(&[ts, tm, l]), vec![ts, tm, l]));
                    }
                }
            }
            let extra: Vec<Vec<f64>> = warm
                .iter()
                .copied()
                .chain(sym.point())
                .map(|w| w.to_vec())
                .collect();
            let best = refine(f, grid, &extra, &[0.05, 0.05, 0.25]);
            finish(ctx, c_s, constraint, mode, best, |x| (x[0], x[1], x[2]))
        }
    }
}

pub fn optimize_point(c_s: f64, ctx: &Context, constraint: Constraint, mode: Mode) -> OptimizationResult {
    optimize_point_from(c_s, ctx, constraint, mode, &[])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub result: OptimizationResult,
    /// Conditional EPR variance at the reported parameters.
    pub conditional_xi_g: f64,
    /// `(ξ_reported − ξ_conditional) / ξ_reported`.
    pub rel_improvement: f64,
}

/// One row per `(C_S, constraint)`, grid-major. Each constraint is swept in
/// order, warm-starting from the previous grid point.
pub fn sweep_cs(cs_grid: &[f64], ctx: &Context, constraints: &[Constraint], mode: Mode) -> Vec<SweepRow> {
    let columns: Vec<Vec<SweepRow>> = constraints
        .par_iter()
        .map(|&constraint| {
            let mut prev: Option<[f64; 3]> = None;
            let results: Vec<OptimizationResult> = cs_grid
                .iter()
                .map(|&c_s| {
                    let warm: Vec<[f64; 3]> = prev.into_iter().collect();
                    let res = optimize_point_from(c_s, ctx, constraint, mode, &warm);
                    if let Some(p) = res.point() {
                        prev = Some(p);
                    }
                    res
                })
                .collect();
            results
                .into_par_iter()
                .map(|result| {
                    let conditional_xi_g = if result.feasible {
                        objective(
                            ctx,
                            result.c_s,
                            result.theta_s,
                            result.theta_m,
                            result.c_m.log10(),
                            Mode::Conditional,
                        )
                    } else {
                        f64::NAN
                    };
                    SweepRow {
                        result,
                        conditional_xi_g,
                        rel_improvement: (result.xi_g - conditional_xi_g) / result.xi_g,
                    }
                })
                .collect()
        })
        .collect();
    (0..cs_grid.len())
        .flat_map(|i| columns.iter().map(move |col| col[i]))
        .collect()
}

/// Angle-optimized EPR variance at one `(C_S, C_M)` cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeatmapCell {
    pub c_s: f64,
    pub c_m: f64,
    pub free: AngleOptimum,
    pub symmetric: AngleOptimum,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngleOptimum {
    pub theta_s: f64,
    pub theta_m: f64,
    pub xi_g: f64,
    pub feasible: bool,
}

impl AngleOptimum {
    fn from_result(r: &OptimizationResult) -> Self {
        Self {
            theta_s: r.theta_s,
            theta_m: r.theta_m,
            xi_g: r.xi_g,
            feasible: r.feasible,
        }
    }
}

fn optimize_angles(c_s: f64, c_m: f64, ctx: &Context, constraint: Constraint) -> OptimizationResult {
    let l = c_m.log10();
    let mode = Mode::Unconditional;
    let angles: Vec<f64> = linspace(ANGLE_LO, ANGLE_HI, ANGLE_SEEDS).collect();
    let sym = {
        let f = |x: &[f64]| penalized(ctx, c_s, x[0], x[0], l, mode);
        let grid = angles.iter().map(|&t| (f(&[t]), vec![t])).collect();
        let best = refine(f, grid, &[], &[0.05]);
        finish(ctx, c_s, Constraint::Symmetric, mode, best, |x| (x[0], x[0], l))
    };
    if constraint == Constraint::Symmetric {
        return sym;
    }
    let f = |x: &[f64]| penalized(ctx, c_s, x[0], x[1], l, mode);
    let mut grid = Vec::with_capacity(angles.len().pow(2));
    for &ts in &angles {
        for &tm in &angles {
            grid.push((f(&[ts, tm]), vec![ts, tm]));
        }
    }
    let extra: Vec<Vec<f64>> = sym.point().map(|p| vec![p[0], p[1]]).into_iter().collect();
    let best = refine(f, grid, &extra, &[0.05, 0.05]);
    finish(ctx, c_s, Constraint::Free, mode, best, |x| (x[0], x[1], l))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Heatmap {
    /// Row-major in `cs_grid`, then `cm_grid`.
    pub cells: Vec<HeatmapCell>,
    /// Free-mode optimum over `C_M` at each `C_S`.
    pub ridge: Vec<OptimizationResult>,
}

pub fn heatmap_cs_cm(cs_grid: &[f64], cm_grid: &[f64], ctx: &Context) -> Heatmap {
    let pairs: Vec<(f64, f64)> = cs_grid
        .iter()
        .flat_map(|&cs| cm_grid.iter().map(move |&cm| (cs, cm)))
        .collect();
    let cells = pairs
        .par_iter()
        .map(|&(c_s, c_m)| {
            let free = optimize_angles(c_s, c_m, ctx, Constraint::Free);
            let symmetric = optimize_angles(c_s, c_m, ctx, Constraint::Symmetric);
            HeatmapCell {
                c_s,
                c_m,
                free: AngleOptimum::from_result(&free),
                symmetric: AngleOptimum::from_result(&symmetric),
            }
        })
        .collect();
    let ridge = sweep_cs(cs_grid, ctx, &[Constraint::Free], Mode::Unconditional)
        .into_iter()
        .map(|row| row.result)
        .collect();
    Heatmap { cells, ridge }
}

/// Large-`C_S` closed forms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AsymptoticReferences {
    /// `√([1 + r + 1/(2n̄_S+1)] / (2C_S))`.
    pub scaling_asym: f64,
    /// `√(2(1+r)/C_S)`.
    pub scaling_sym: f64,
    /// `√(ε/(4−3ε))`.
    pub floor_free: f64,
    /// `√ε (1 + ε/16)`.
    pub floor_sym: f64,
    /// `√(1−ε) C_S / r`.
    pub c_m_opt: f64,
    pub sin_2theta_opt: f64,
}

pub fn asymptotic_references(c_s: f64, r: f64, n_bar_s: f64, epsilon: f64) -> AsymptoticReferences {
    let t = (1.0 - epsilon).sqrt();
    AsymptoticReferences {
        scaling_asym: ((1.0 + r + 1.0 / (2.0 * n_bar_s + 1.0)) / (2.0 * c_s)).sqrt(),
        scaling_sym: (2.0 * (1.0 + r) / c_s).sqrt(),
        floor_free: (epsilon / (4.0 - 3.0 * epsilon)).sqrt(),
        floor_sym: epsilon.sqrt() * (1.0 + epsilon / 16.0),
        c_m_opt: t * c_s / r,
        sin_2theta_opt: sin_2theta_opt(c_s, r, epsilon),
    }
}

/// Symmetric-coupling optimum angle, `sin 2θ_opt`.
pub fn sin_2theta_opt(c_s: f64, r: f64, epsilon: f64) -> f64 {
    let t = (1.0 - epsilon).sqrt();
    4.0 * (1.0 - epsilon) / (t + 1.0).powi(2) * (1.0 - 2.0 * (t + r) / (t + 1.0) / c_s)
}

/// Large-`C_S` symmetric-coupling EPR variance at angle `θ ≠ π/4`.
pub fn xi_symmetric_large_cs(theta: f64, c_s: f64, c_m: f64, r: f64, epsilon: f64) -> f64 {
    let t2 = 1.0 - epsilon;
    let c2 = (2.0 * theta).cos();
    -(1.0 + 2.0 * (t2 + r) / (c_s * t2 + c_m * r)) / c2
        + (2.0 * theta).tan() * 4.0 * c_m * c_s * r * t2 / ((c_m * r + c_s * t2) * (c_m * r + c_s))
}
