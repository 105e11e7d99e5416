//! Unconditional steady state: closed form, Lyapunov solve, and a
//! time-domain quadrature of the stationary response. Also the EPR variance.

use crate::error::Result;
use crate::linalg::{heisenberg_min_eigenvalue, lyapunov, Mat4};
use crate::model::{
    diffusion_matrix, drift_matrix, epr_weight, unidirectional_rate, HybridParams, P_M, P_S, X_M,
    X_S,
};
use crate::quadrature::{self, Options};

/// Steady-state covariance plus the EPR variance at the readout weight `g`.
///
/// `g` is `+inf` when only the mechanics carries light coupling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovarianceState {
    pub sigma: Mat4,
    pub g: f64,
    pub xi_g: f64,
}

impl CovarianceState {
    pub fn new(sigma: Mat4, g: f64) -> Self {
        Self {
            sigma,
            g,
            xi_g: epr_variance(&sigma, g),
        }
    }

    pub fn for_params(sigma: Mat4, h: &HybridParams) -> Self {
        Self::new(sigma, readout_weight(h))
    }

    /// `Δ²X_S`.
    pub fn var_xs(&self) -> f64 {
        self.sigma[(X_S, X_S)]
    }

    /// `Δ²X_M`.
    pub fn var_xm(&self) -> f64 {
        self.sigma[(X_M, X_M)]
    }

    /// Two-sided correlator `<X_S X_M + X_M X_S>`.
    pub fn cross_xsxm(&self) -> f64 {
        2.0 * self.sigma[(X_S, X_M)]
    }

    pub fn heisenberg_min_eigenvalue(&self) -> f64 {
        heisenberg_min_eigenvalue(&self.sigma)
    }

    pub fn is_physical(&self) -> bool {
        self.heisenberg_min_eigenvalue() >= -1e-10 * self.sigma.trace()
    }
}

/// EPR weight with its degenerate limits filled in: `1` when neither
/// oscillator couples to light, `+inf` when only the mechanics does.
pub fn readout_weight(h: &HybridParams) -> f64 {
    match epr_weight(h) {
        Ok(g) => g,
        Err(_) if h.mech.coupling == 0.0 => 1.0,
        Err(_) => f64::INFINITY,
    }
}

fn from_moments(var_s: f64, var_m: f64, cross_two_sided: f64) -> Mat4 {
    let mut s = Mat4::zeros();
    s[(X_S, X_S)] = var_s;
    s[(P_S, P_S)] = var_s;
    s[(X_M, X_M)] = var_m;
    s[(P_M, P_M)] = var_m;
    let c = cross_two_sided / 2.0;
    s[(X_S, X_M)] = c;
    s[(X_M, X_S)] = c;
    s[(P_S, P_M)] = -c;
    s[(P_M, P_S)] = -c;
    s
}

/// Builds an RWA-symmetric covariance from `Δ²X_S`, `Δ²X_M` and the
/// two-sided correlator.
pub fn covariance_from_moments(var_s: f64, var_m: f64, cross_two_sided: f64) -> Mat4 {
    from_moments(var_s, var_m, cross_two_sided)
}

/// Closed-form steady state.
pub fn covariance_analytic(h: &HybridParams) -> Result<CovarianceState> {
    h.check_stable()?;
    let (s, m) = (&h.spin, &h.mech);
    let gs = s.gamma_eff();
    let gm = m.gamma_eff();
    let t = h.transmission();
    let r = unidirectional_rate(h);
    let var_s = (s.coupling / 2.0 + s.decoherence_rate()) / gs;
    let cross = -(2.0 * t / (gs + gm))
        * ((s.coupling * m.coupling).sqrt() * (m.theta + s.theta).sin() - 2.0 * r * var_s);
    let var_m = (m.coupling / 2.0 + m.decoherence_rate() + t * r * cross) / gm;
    Ok(CovarianceState::for_params(from_moments(var_s, var_m, cross), h))
}

/// Steady state from the Lyapunov equation `AΣ + ΣAᵀ + D = 0`.
pub fn covariance_lyapunov(h: &HybridParams) -> Result<CovarianceState> {
    h.check_stable()?;
    let sigma = lyapunov(&drift_matrix(h), &diffusion_matrix(h))?;
    Ok(CovarianceState::for_params(sigma, h))
}

/// `(e^{aτ} − e^{bτ})/(a − b)`, with its `τ e^{aτ}` limit when `a ≈ b`.
fn cascade_kernel(a: f64, b: f64, tau: f64) -> f64 {
    let d = a - b;
    if d.abs() < 1e-9 * (a.abs() + b.abs()) {
        tau * (0.5 * (a + b) * tau).exp()
    } else {
        (b * tau).exp() * (d * tau).exp_m1() / d
    }
}

/// Propagator `e^{Aτ}` of the cascaded drift.
pub fn propagator(h: &HybridParams, tau: f64) -> Mat4 {
    let a_s = -h.spin.gamma_eff() / 2.0;
    let a_m = -h.mech.gamma_eff() / 2.0;
    let c = h.transmission() * unidirectional_rate(h);
    let k = c * cascade_kernel(a_s, a_m, tau);
    let mut e = Mat4::zeros();
    e[(X_S, X_S)] = (a_s * tau).exp();
    e[(P_S, P_S)] = e[(X_S, X_S)];
    e[(X_M, X_M)] = (a_m * tau).exp();
    e[(P_M, P_M)] = e[(X_M, X_M)];
    e[(X_M, X_S)] = k;
    e[(P_M, P_S)] = -k;
    e
}

/// Steady state as the integral `∫₀^T e^{Aτ} D e^{Aᵀτ} dτ`, truncated at
/// `T = 50 / min(γ_S, γ_M)`.
pub fn covariance_time_domain(h: &HybridParams, rel_tol: f64) -> Result<CovarianceState> {
    h.check_stable()?;
    let d = diffusion_matrix(h);
    let gs = h.spin.gamma_eff();
    let gm = h.mech.gamma_eff();
    let t_end = 50.0 / gs.min(gm);
    let mut knots = Vec::new();
    let mut t = 0.1 / gs.max(gm);
    while t < t_end {
        knots.push(t);
        t *= 4.0;
    }
    let est = quadrature::integrate(
        |tau| {
            let e = propagator(h, tau);
            e * d * e.transpose()
        },
        0.0,
        t_end,
        &knots,
        Options {
            rel_tol,
            abs_tol: 0.0,
            max_intervals: 50_000,
        },
    );
    Ok(CovarianceState::for_params(est.value, h))
}

/// `Δ²(X_S + g X_M)` and `Δ²(P_S − g P_M)`.
pub fn epr_blocks(sigma: &Mat4, g: f64) -> (f64, f64) {
    let x = sigma[(X_S, X_S)] + g * g * sigma[(X_M, X_M)] + 2.0 * g * sigma[(X_S, X_M)];
    let p = sigma[(P_S, P_S)] + g * g * sigma[(P_M, P_M)] - 2.0 * g * sigma[(P_S, P_M)];
    (x, p)
}

/// `ξ_g = [Δ²(X_S + g X_M) + Δ²(P_S − g P_M)] / (1 + g²)`.
pub fn epr_variance(sigma: &Mat4, g: f64) -> f64 {
    if g.is_infinite() {
        return sigma[(X_M, X_M)] + sigma[(P_M, P_M)];
    }
    let (x, p) = epr_blocks(sigma, g);
    (x + p) / (1.0 + g * g)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightOptimum {
    pub g: f64,
    pub xi: f64,
    /// The minimum over `g ≥ 0` sits at `g = 0` or `g = inf`.
    pub boundary: bool,
}

/// Minimizes `ξ_g` over `g ≥ 0` in closed form.
///
/// `ξ_g (1 + g²)/2` is the quadratic form of `K = [[Σ_SS, Σ_SM], [Σ_SM, Σ_MM]]`
/// on `(1, g)`, so the minimum is `2 λ_min(K)` when the minimizing
/// eigenvector has `g > 0`.
pub fn epr_variance_min_g(sigma: &Mat4) -> WeightOptimum {
    let a = 0.5 * (sigma[(X_S, X_S)] + sigma[(P_S, P_S)]);
    let b = 0.5 * (sigma[(X_M, X_M)] + sigma[(P_M, P_M)]);
    let c = 0.5 * (sigma[(X_S, X_M)] - sigma[(P_S, P_M)]);
    if c < -1e-15 * (a + b) {
        let lambda = 0.5 * (a + b) - ((0.5 * (a - b)).powi(2) + c * c).sqrt();
        let g = (lambda - a) / c;
        return WeightOptimum {
            g,
            xi: 2.0 * lambda,
            boundary: false,
        };
    }
    if a <= b {
        WeightOptimum {
            g: 0.0,
            xi: 2.0 * a,
            boundary: true,
        }
    } else {
        WeightOptimum {
            g: f64::INFINITY,
            xi: 2.0 * b,
            boundary: true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::OscillatorParams;

    fn params(gs: f64, ts: f64, gm: f64, tm: f64, eps: f64) -> HybridParams {
        HybridParams::new(
            OscillatorParams::new(1.0, 0.7, gs, ts).unwrap(),
            OscillatorParams::new(0.3, 4.0, gm, tm).unwrap(),
            eps,
        )
        .unwrap()
    }

    #[test]
    fn thermal_equilibrium() {
        let h = params(0.0, 0.3, 0.0, 1.1, 0.0);
        let st = covariance_analytic(&h).unwrap();
        let want = Mat4::from_diagonal(&nalgebra::Vector4::new(1.2, 1.2, 4.5, 4.5));
        assert!((st.sigma - want).norm() < 1e-14);
    }

    #[test]
    fn severed_cascade() {
        let h = params(3.0, 0.9, 2.0, 1.1, 1.0);
        let st = covariance_analytic(&h).unwrap();
        assert_eq!(st.sigma[(X_S, X_M)], 0.0);
        let m = &h.mech;
        assert!((st.var_xm() - (m.coupling / 2.0 + m.decoherence_rate()) / m.gamma_eff()).abs() < 1e-14);
    }

    #[test]
    fn analytic_matches_lyapunov() {
        let h = params(3.0, 0.9, 2.0, 1.2, 0.2);
        let a = covariance_analytic(&h).unwrap();
        let l = covariance_lyapunov(&h).unwrap();
        assert!((a.sigma - l.sigma).norm() < 1e-12 * a.sigma.norm());
    }

    #[test]
    fn block_decoupled_solution() {
        let h = params(3.0, 0.8, 2.0, 0.8, 0.0);
        let l = covariance_lyapunov(&h).unwrap();
        let s = &h.spin;
        assert!((l.var_xs() - (s.coupling / 2.0 + s.decoherence_rate()) / s.gamma_eff()).abs() < 1e-13);
        assert_eq!(l.sigma[(X_S, P_S)], 0.0);
    }

    #[test]
    fn time_domain_degenerate_kernel() {
        // γ_S = γ_M exactly exercises the limit kernel.
        let mut h = params(2.0, 0.9, 0.0, 0.3, 0.0);
        let gm0 = h.spin.gamma_eff() + 0.5 * (0.6f64).cos();
        h.mech = OscillatorParams::new(gm0, 2.0, 0.5, 0.3).unwrap();
        assert_eq!(h.spin.gamma_eff(), h.mech.gamma_eff());
        let t = covariance_time_domain(&h, 1e-12).unwrap();
        let l = covariance_lyapunov(&h).unwrap();
        assert!((t.sigma - l.sigma).norm() < 1e-9 * l.sigma.norm());
    }

    #[test]
    fn rejects_unstable() {
        let h = params(5.0, 0.0, 1.0, 1.0, 0.0);
        assert!(covariance_analytic(&h).is_err());
        assert!(covariance_lyapunov(&h).is_err());
    }

    #[test]
    fn epr_examples() {
        let v = Mat4::identity() * 0.5;
        for g in [0.1, 1.0, 7.0] {
            assert!((epr_variance(&v, g) - 1.0).abs() < 1e-15);
        }
        let s: f64 = 0.8;
        let tms = covariance_from_moments((2.0 * s).cosh() / 2.0, (2.0 * s).cosh() / 2.0, -(2.0 * s).sinh());
        assert!((epr_variance(&tms, 1.0) - (-2.0 * s).exp()).abs() < 1e-14);
        let opt = epr_variance_min_g(&tms);
        assert!((opt.g - 1.0).abs() < 1e-14 && !opt.boundary);
        let (x, p) = epr_blocks(&tms, 1.3);
        assert!((x - p).abs() < 1e-12);
    }

    #[test]
    fn uncorrelated_weight_is_boundary() {
        let s = covariance_from_moments(0.7, 2.0, 0.0);
        let opt = epr_variance_min_g(&s);
        assert!(opt.boundary && opt.g == 0.0 && (opt.xi - 1.4).abs() < 1e-15);
        let s = covariance_from_moments(3.0, 0.6, 0.0);
        let opt = epr_variance_min_g(&s);
        assert!(opt.boundary && opt.g.is_infinite() && (opt.xi - 1.2).abs() < 1e-15);
    }
}
