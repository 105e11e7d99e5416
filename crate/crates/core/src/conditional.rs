//! Conditional steady state under continuous homodyne detection of the
//! output light (phase ψ = 0).
//!
//! Only second moments are propagated: the Riccati flow
//! `dΣ/dt = AΣ + ΣAᵀ + D − (ΣCᵀ + Γᵀ)(CΣ + Γ)`.
//! The monitored jump operators are
//! `s₊ = √((1−ε)Γ_SP) a_S† + √Γ_MB a_M` and `s₋ = √((1−ε)Γ_SB) a_S + √Γ_MP a_M†`,
//! read out in the cosine `(s₊ + s₋)/√2` and sine `(s₊ − s₋)/(√2 i)` channels.
//! Transmission-loss channels enter `D` only.

use std::f64::consts::FRAC_PI_4;

use nalgebra::{Matrix2x4, Matrix4x2};

use crate::error::{Error, Result};
use crate::linalg::{lyapunov, min_eigenvalue_sym, spectral_radius, symmetrize, Mat4};
use crate::model::{diffusion_matrix, drift_matrix, HybridParams, P_M, P_S, X_M, X_S};
use crate::unconditional::{covariance_from_moments, covariance_lyapunov, CovarianceState};

/// Measurement matrices: row 0 is the cosine channel, row 1 the sine channel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Measurement {
    pub c: Matrix2x4<f64>,
    pub gamma: Matrix2x4<f64>,
}

impl Measurement {
    pub fn detached() -> Self {
        Self {
            c: Matrix2x4::zeros(),
            gamma: Matrix2x4::zeros(),
        }
    }

    /// Innovation gain `ΣCᵀ + Γᵀ`.
    pub fn gain(&self, sigma: &Mat4) -> Matrix4x2<f64> {
        sigma * self.c.transpose() + self.gamma.transpose()
    }
}

pub fn measurement_matrices(h: &HybridParams) -> Measurement {
    let t = h.transmission();
    let (sb, sp) = h.spin.sidebands();
    let (mb, mp) = h.mech.sidebands();
    let sum_s = t * (sb.sqrt() + sp.sqrt());
    let dif_s = t * (sb.sqrt() - sp.sqrt());
    let sum_m = mb.sqrt() + mp.sqrt();
    let dif_m = mb.sqrt() - mp.sqrt();

    let mut c = Matrix2x4::zeros();
    c[(0, X_S)] = sum_s;
    c[(0, X_M)] = sum_m;
    c[(1, P_S)] = -sum_s;
    c[(1, P_M)] = sum_m;

    let mut gamma = Matrix2x4::zeros();
    gamma[(0, X_S)] = -dif_s / 2.0;
    gamma[(0, X_M)] = -dif_m / 2.0;
    gamma[(1, P_S)] = dif_s / 2.0;
    gamma[(1, P_M)] = -dif_m / 2.0;
    Measurement { c, gamma }
}

pub fn riccati_rhs_with(sigma: &Mat4, a: &Mat4, d: &Mat4, meas: &Measurement) -> Mat4 {
    let k = meas.gain(sigma);
    a * sigma + sigma * a.transpose() + d - k * k.transpose()
}

/// General-angle Riccati right-hand side.
pub fn riccati_rhs_general(sigma: &Mat4, h: &HybridParams) -> Mat4 {
    riccati_rhs_with(
        sigma,
        &drift_matrix(h),
        &diffusion_matrix(h),
        &measurement_matrices(h),
    )
}

fn check_qnd(h: &HybridParams) -> Result<()> {
    for (name, theta) in [("theta_S", h.spin.theta), ("theta_M", h.mech.theta)] {
        if (theta - FRAC_PI_4).abs() > 1e-12 {
            return Err(Error::Rejected(format!(
                "{name} = {theta} but the QND flow needs pi/4"
            )));
        }
    }
    Ok(())
}

/// Explicit flow of `Δ²X_S`, `Δ²X_M` and the two-sided `<X_S, X_M>` at
/// `θ_S = θ_M = π/4`, mirrored onto the P block.
pub fn riccati_rhs_qnd(sigma: &Mat4, h: &HybridParams) -> Result<Mat4> {
    check_qnd(h)?;
    let (s, m) = (&h.spin, &h.mech);
    let ks = (1.0 - h.epsilon) * s.coupling;
    let var_s = sigma[(X_S, X_S)];
    let var_m = sigma[(X_M, X_M)];
    let cross = 2.0 * sigma[(X_S, X_M)];

    let a = 2.0 * ks.sqrt() * var_s + m.coupling.sqrt() * cross;
    let b = ks.sqrt() * cross + 2.0 * m.coupling.sqrt() * var_m;
    let d_s = -s.gamma0 * var_s + s.coupling / 2.0 + s.decoherence_rate() - 0.5 * a * a;
    let d_m = -m.gamma0 * var_m + m.coupling / 2.0 + m.decoherence_rate() - 0.5 * b * b;
    let d_x = -a * b - 0.5 * (s.gamma0 + m.gamma0) * cross - (ks * m.coupling).sqrt();

    let mut out = Mat4::zeros();
    out[(X_S, X_S)] = d_s;
    out[(P_S, P_S)] = d_s;
    out[(X_M, X_M)] = d_m;
    out[(P_M, P_M)] = d_m;
    out[(X_S, X_M)] = d_x / 2.0;
    out[(X_M, X_S)] = d_x / 2.0;
    out[(P_S, P_M)] = -d_x / 2.0;
    out[(P_M, P_S)] = -d_x / 2.0;
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flow {
    Qnd,
    General,
}

#[derive(Clone, Copy, Debug)]
pub struct IntegratorOptions {
    pub max_steps: usize,
    /// Converged once `‖dΣ/dt‖ ≤ tol · ‖D‖`.
    pub tol: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            max_steps: 10_000_000,
            tol: 1e-12,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RiccatiRun {
    pub state: CovarianceState,
    pub steps: usize,
    pub residual: f64,
    /// False when the step budget ran out before the residual criterion.
    pub converged: bool,
}

/// Integrates the Riccati flow from `sigma0` with classical RK4.
///
/// The step is `0.05 / max(γ_S, γ_M, Γ_S, Γ_M)`, reduced to `0.05 / ρ` when
/// the closed-loop drift `A − KC` has a larger spectral radius `ρ` (a wide
/// initial covariance makes the early flow stiff).
pub fn riccati_integrate(
    h: &HybridParams,
    flow: Flow,
    sigma0: &Mat4,
    opts: IntegratorOptions,
) -> Result<RiccatiRun> {
    h.check_stable()?;
    if flow == Flow::Qnd {
        check_qnd(h)?;
    }
    let a = drift_matrix(h);
    let d = diffusion_matrix(h);
    let meas = measurement_matrices(h);
    let rhs = |s: &Mat4| -> Mat4 {
        match flow {
            Flow::General => riccati_rhs_with(s, &a, &d, &meas),
            Flow::Qnd => riccati_rhs_qnd(s, h).expect("angles checked"),
        }
    };
    let base = 0.05
        / [
            h.spin.gamma_eff(),
            h.mech.gamma_eff(),
            h.spin.coupling,
            h.mech.coupling,
        ]
        .into_iter()
        .fold(0.0, f64::max);
    let scale = d.norm();

    let mut sigma = symmetrize(sigma0);
    let mut dt = base;
    let mut residual = f64::INFINITY;
    for step in 0..opts.max_steps {
        let k1 = rhs(&sigma);
        residual = k1.norm();
        if residual <= opts.tol * scale {
            return Ok(RiccatiRun {
                state: CovarianceState::for_params(sigma, h),
                steps: step,
                residual,
                converged: true,
            });
        }
        if !residual.is_finite() {
            break;
        }
        if step % 8 == 0 {
            let closed = a - meas.gain(&sigma) * meas.c;
            dt = base.min(0.05 / (2.0 * spectral_radius(&closed)));
        }
        let k2 = rhs(&(sigma + k1 * (dt / 2.0)));
        let k3 = rhs(&(sigma + k2 * (dt / 2.0)));
        let k4 = rhs(&(sigma + k3 * dt));
        sigma = symmetrize(&(sigma + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)));
    }
    if !residual.is_finite() {
        return Err(Error::NoConvergence {
            iterations: opts.max_steps,
            residual,
        });
    }
    Ok(RiccatiRun {
        state: CovarianceState::for_params(sigma, h),
        steps: opts.max_steps,
        residual,
        converged: false,
    })
}

/// Riccati steady state by time integration from the unconditional state.
pub fn riccati_steady_state(h: &HybridParams, flow: Flow) -> Result<CovarianceState> {
    let start = covariance_lyapunov(h)?;
    let opts = IntegratorOptions::default();
    let run = riccati_integrate(h, flow, &start.sigma, opts)?;
    if !run.converged {
        return Err(Error::NoConvergence {
            iterations: opts.max_steps,
            residual: run.residual,
        });
    }
    Ok(run.state)
}

/// Conditional steady state by Newton-Kleinman iteration on the algebraic
/// Riccati equation, started from the unconditional covariance.
pub fn conditional_steady_state(h: &HybridParams) -> Result<CovarianceState> {
    let start = covariance_lyapunov(h)?;
    let meas = measurement_matrices(h);
    let a = drift_matrix(h) - meas.gamma.transpose() * meas.c;
    let d = diffusion_matrix(h) - meas.gamma.transpose() * meas.gamma;
    let ctc = meas.c.transpose() * meas.c;

    let mut sigma = start.sigma;
    let mut change = f64::INFINITY;
    for _ in 0..200 {
        let closed = a - sigma * ctc;
        let q = d + sigma * ctc * sigma;
        let next = symmetrize(&lyapunov(&closed, &q)?);
        let previous = change;
        change = (next - sigma).norm();
        let scale = next.norm();
        // Stiff parameter sets stall at a roundoff floor above the target.
        let stalled = change >= previous && change <= 1e-8 * scale;
        if stalled {
            return Ok(CovarianceState::for_params(sigma, h));
        }
        sigma = next;
        if change <= 1e-13 * scale {
            return Ok(CovarianceState::for_params(sigma, h));
        }
    }
    Err(Error::NoConvergence {
        iterations: 200,
        residual: change,
    })
}

/// Closed-form QND steady state in the hot motional bath limit.
///
/// Expressed through `C_S`, `C_M`, `r = γ̃_M0/γ̃_S0`, `n̄_S` and `ε`. At
/// `C_M = 0` the oscillators decouple and the exact spin-only solution is
/// returned, with the mechanics left thermal.
pub fn conditional_analytic_qnd(h: &HybridParams) -> Result<CovarianceState> {
    check_qnd(h)?;
    if h.mech.n_bar < 1e3 {
        return Err(Error::Rejected(format!(
            "n_bar_M = {} is below the hot-bath guard 1e3",
            h.mech.n_bar
        )));
    }
    if h.epsilon >= 1.0 || h.spin.coupling == 0.0 {
        return Err(Error::Rejected(
            "hot-bath solution needs epsilon < 1 and Gamma_S > 0".into(),
        ));
    }
    let cs = h.spin.cooperativity();
    let cm = h.mech.cooperativity();
    let r = h.mech.decoherence_rate() / h.spin.decoherence_rate();
    let ns = h.spin.n_bar;
    let hs = ns + 0.5;
    let t2 = 1.0 - h.epsilon;

    let (var_s, var_m, cross) = if cm == 0.0 {
        let ks = t2 * h.spin.coupling;
        let g0 = h.spin.gamma0;
        let src = h.spin.coupling / 2.0 + h.spin.decoherence_rate();
        let var_s = (-g0 + (g0 * g0 + 8.0 * ks * src).sqrt()) / (4.0 * ks);
        (var_s, h.mech.n_bar + 0.5, 0.0)
    } else {
        let inner = ((cm * (cm + 2.0)).sqrt() * r + 1.0 / (2.0 * ns + 1.0)).powi(2);
        let root = ((cm + 2.0) / cm * (inner + t2 * cs * (cs - 2.0 * cm * r + 2.0))).sqrt();
        let var_m = hs * (root - (cm * r + 2.0 * r - t2 * cs));
        let cross = (cm * r).sqrt() * (((cm + 2.0) / cm).sqrt() - 2.0 * var_m) / (cs * t2).sqrt();
        let coef = ((cm * r).sqrt() + 1.0 / ((2.0 * ns + 1.0) * ((cm + 2.0) * r).sqrt()))
            / (2.0 * (cs * t2).sqrt());
        let var_s = -(cm / (cm + 2.0)).sqrt() / 2.0 - coef * cross;
        (var_s, var_m, cross)
    };
    Ok(CovarianceState::for_params(
        covariance_from_moments(var_s, var_m, cross),
        h,
    ))
}

/// Smallest eigenvalue of `upper − lower`; non-negative when
/// `lower ⪯ upper` in the Loewner order.
pub fn loewner_gap(upper: &Mat4, lower: &Mat4) -> f64 {
    min_eigenvalue_sym(&(upper - lower))
}
