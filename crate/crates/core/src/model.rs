//! Oscillator parameters, derived rates, and the drift/diffusion matrices
//! of the cascaded Langevin dynamics in the rotating frame.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use crate::error::{Error, Result};
use crate::linalg::Mat4;

pub const X_S: usize = 0;
pub const P_S: usize = 1;
pub const X_M: usize = 2;
pub const P_M: usize = 3;

/// One oscillator: intrinsic linewidth, bath occupancy, total light
/// coupling rate `Γ = Γ_B + Γ_P` and coupling angle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OscillatorParams {
    pub gamma0: f64,
    pub n_bar: f64,
    pub coupling: f64,
    pub theta: f64,
}

fn check_theta(theta: f64) -> Result<()> {
    if (0.0..=FRAC_PI_2).contains(&theta) {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "theta",
            value: theta,
            range: "[0, pi/2]",
        })
    }
}

impl OscillatorParams {
    pub fn new(gamma0: f64, n_bar: f64, coupling: f64, theta: f64) -> Result<Self> {
        if !(gamma0 > 0.0 && gamma0.is_finite()) {
            return Err(Error::Domain {
                name: "gamma0",
                value: gamma0,
                range: "(0, inf)",
            });
        }
        if !(n_bar >= 0.0 && n_bar.is_finite()) {
            return Err(Error::Domain {
                name: "n_bar",
                value: n_bar,
                range: "[0, inf)",
            });
        }
        if !(coupling >= 0.0 && coupling.is_finite()) {
            return Err(Error::Domain {
                name: "coupling",
                value: coupling,
                range: "[0, inf)",
            });
        }
        check_theta(theta)?;
        Ok(Self {
            gamma0,
            n_bar,
            coupling,
            theta,
        })
    }

    /// Builds the oscillator from a cooperativity, `Γ = C γ̃₀`.
    pub fn with_cooperativity(gamma0: f64, n_bar: f64, cooperativity: f64, theta: f64) -> Result<Self> {
        let gt = gamma0 * (n_bar + 0.5);
        Self::new(gamma0, n_bar, cooperativity * gt, theta)
    }

    pub fn sidebands(&self) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        (self.coupling * s * s, self.coupling * c * c)
    }

    /// `γ = γ₀ - Γ cos 2θ`.
    pub fn effective_linewidth(&self) -> Linewidth {
        let value = self.gamma0 - self.coupling * (2.0 * self.theta).cos();
        Linewidth {
            value,
            stable: value > 0.0,
        }
    }

    pub fn gamma_eff(&self) -> f64 {
        self.effective_linewidth().value
    }

    /// `γ̃₀ = γ₀ (n̄ + 1/2)`.
    pub fn decoherence_rate(&self) -> f64 {
        self.gamma0 * (self.n_bar + 0.5)
    }

    pub fn cooperativity(&self) -> f64 {
        self.coupling / self.decoherence_rate()
    }

    pub fn rates(&self) -> OscillatorRates {
        let (gamma_b, gamma_p) = self.sidebands();
        OscillatorRates {
            gamma_b,
            gamma_p,
            gamma_eff: self.gamma_eff(),
            gamma_tilde0: self.decoherence_rate(),
            cooperativity: self.cooperativity(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Linewidth {
    pub value: f64,
    pub stable: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OscillatorRates {
    pub gamma_b: f64,
    pub gamma_p: f64,
    pub gamma_eff: f64,
    pub gamma_tilde0: f64,
    pub cooperativity: f64,
}

/// `(Γ_B, Γ_P) = (Γ sin²θ, Γ cos²θ)`.
pub fn sideband_split(coupling: f64, theta: f64) -> Result<(f64, f64)> {
    check_theta(theta)?;
    if !(coupling >= 0.0) {
        return Err(Error::Domain {
            name: "coupling",
            value: coupling,
            range: "[0, inf)",
        });
    }
    let (s, c) = theta.sin_cos();
    Ok((coupling * s * s, coupling * c * c))
}

pub fn effective_linewidth(p: &OscillatorParams) -> Linewidth {
    p.effective_linewidth()
}

/// Returns `(γ̃₀, C)`.
pub fn decoherence_and_cooperativity(p: &OscillatorParams) -> Result<(f64, f64)> {
    if p.gamma0 == 0.0 {
        return Err(Error::Singular("cooperativity with gamma0 = 0"));
    }
    Ok((p.decoherence_rate(), p.cooperativity()))
}

/// Spin (first in the cascade), mechanics (second) and the power loss
/// between them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HybridParams {
    pub spin: OscillatorParams,
    pub mech: OscillatorParams,
    pub epsilon: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivedRates {
    pub spin: OscillatorRates,
    pub mech: OscillatorRates,
    pub r: f64,
    pub g: Option<f64>,
}

impl HybridParams {
    pub fn new(spin: OscillatorParams, mech: OscillatorParams, epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::Domain {
                name: "epsilon",
                value: epsilon,
                range: "[0, 1]",
            });
        }
        Ok(Self { spin, mech, epsilon })
    }

    pub fn transmission(&self) -> f64 {
        (1.0 - self.epsilon).sqrt()
    }

    pub fn is_stable(&self) -> bool {
        self.spin.effective_linewidth().stable && self.mech.effective_linewidth().stable
    }

    /// Rejects parameter sets where either effective linewidth is not positive.
    pub fn check_stable(&self) -> Result<()> {
        let gs = self.spin.gamma_eff();
        if !(gs > 0.0) {
            return Err(Error::Unstable {
                which: "gamma_S",
                value: gs,
            });
        }
        let gm = self.mech.gamma_eff();
        if !(gm > 0.0) {
            return Err(Error::Unstable {
                which: "gamma_M",
                value: gm,
            });
        }
        Ok(())
    }

    pub fn derived(&self) -> DerivedRates {
        DerivedRates {
            spin: self.spin.rates(),
            mech: self.mech.rates(),
            r: unidirectional_rate(self),
            g: epr_weight(self).ok(),
        }
    }

    pub fn with_angles(&self, theta_s: f64, theta_m: f64) -> Result<Self> {
        check_theta(theta_s)?;
        check_theta(theta_m)?;
        let mut out = *self;
        out.spin.theta = theta_s;
        out.mech.theta = theta_m;
        Ok(out)
    }
}

/// `R = √(Γ_SB Γ_MP) − √(Γ_MB Γ_SP)`.
pub fn unidirectional_rate(h: &HybridParams) -> f64 {
    let (sb, sp) = h.spin.sidebands();
    let (mb, mp) = h.mech.sidebands();
    (sb * mp).sqrt() - (mb * sp).sqrt()
}

/// `R = −√(Γ_S Γ_M) sin(θ_M − θ_S)`.
pub fn unidirectional_rate_from_angles(h: &HybridParams) -> f64 {
    -(h.spin.coupling * h.mech.coupling).sqrt() * (h.mech.theta - h.spin.theta).sin()
}

/// Readout weight `g = √(Γ_M / ((1−ε) Γ_S)) cos(θ_M − π/4) / cos(θ_S − π/4)`.
pub fn epr_weight(h: &HybridParams) -> Result<f64> {
    if h.spin.coupling == 0.0 {
        return Err(Error::Singular("EPR weight with Gamma_S = 0"));
    }
    if h.epsilon >= 1.0 {
        return Err(Error::Singular("EPR weight with epsilon = 1"));
    }
    let cs = (h.spin.theta - FRAC_PI_4).cos();
    if cs == 0.0 {
        return Err(Error::Singular("EPR weight with cos(theta_S - pi/4) = 0"));
    }
    Ok((h.mech.coupling / ((1.0 - h.epsilon) * h.spin.coupling)).sqrt()
        * (h.mech.theta - FRAC_PI_4).cos()
        / cs)
}

/// Drift matrix in the basis (X_S, P_S, X_M, P_M).
pub fn drift_matrix(h: &HybridParams) -> Mat4 {
    let gs = h.spin.gamma_eff();
    let gm = h.mech.gamma_eff();
    let c = h.transmission() * unidirectional_rate(h);
    let mut a = Mat4::zeros();
    a[(X_S, X_S)] = -gs / 2.0;
    a[(P_S, P_S)] = -gs / 2.0;
    a[(X_M, X_M)] = -gm / 2.0;
    a[(P_M, P_M)] = -gm / 2.0;
    a[(X_M, X_S)] = c;
    a[(P_M, P_S)] = -c;
    a
}

/// Diffusion matrix of the thermal and light-noise forces.
pub fn diffusion_matrix(h: &HybridParams) -> Mat4 {
    let ds = h.spin.decoherence_rate() + h.spin.coupling / 2.0;
    let dm = h.mech.decoherence_rate() + h.mech.coupling / 2.0;
    let cross = -h.transmission()
        * (h.spin.coupling * h.mech.coupling).sqrt()
        * (h.spin.theta + h.mech.theta).sin()
        / 2.0;
    let mut d = Mat4::zeros();
    d[(X_S, X_S)] = ds;
    d[(P_S, P_S)] = ds;
    d[(X_M, X_M)] = dm;
    d[(P_M, P_M)] = dm;
    d[(X_S, X_M)] = cross;
    d[(X_M, X_S)] = cross;
    d[(P_S, P_M)] = -cross;
    d[(P_M, P_S)] = -cross;
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{min_eigenvalue_sym, spectral_abscissa};
    use std::f64::consts::{FRAC_PI_3, PI};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    fn hybrid(gs: f64, ts: f64, gm: f64, tm: f64, eps: f64) -> HybridParams {
        HybridParams::new(
            OscillatorParams::new(1.0, 0.5, gs, ts).unwrap(),
            OscillatorParams::new(2.0, 3.0, gm, tm).unwrap(),
            eps,
        )
        .unwrap()
    }

    #[test]
    fn split_examples() {
        let (b, p) = sideband_split(1.0, FRAC_PI_4).unwrap();
        assert!(close(b, 0.5, 1e-15) && close(p, 0.5, 1e-15));
        let (b, p) = sideband_split(2.0, FRAC_PI_2).unwrap();
        assert!(close(b, 2.0, 1e-15) && p.abs() < 1e-15);
        let (b, p) = sideband_split(1.0, FRAC_PI_3).unwrap();
        assert!(close(b, 0.75, 1e-15) && close(p, 0.25, 1e-15));
        assert!(sideband_split(1.0, 1.6).is_err());
        assert!(sideband_split(1.0, -0.1).is_err());
    }

    #[test]
    fn linewidth_examples() {
        let lw = |t| OscillatorParams::new(1.0, 0.0, 5.0, t).unwrap().effective_linewidth();
        assert!(close(lw(FRAC_PI_4).value, 1.0, 1e-15));
        assert!(close(lw(FRAC_PI_2).value, 6.0, 1e-15));
        let unstable = lw(0.0);
        assert!(close(unstable.value, -4.0, 1e-15) && !unstable.stable);
    }

    #[test]
    fn decoherence_examples() {
        let tw = 2.0 * PI;
        let p = OscillatorParams::new(tw * 5e3, 1.0, 3.0, 0.3).unwrap();
        assert!(close(p.decoherence_rate(), tw * 7.5e3, 1e-15));
        let p = OscillatorParams::new(1.0, 0.0, 10.0, 0.3).unwrap();
        assert_eq!(decoherence_and_cooperativity(&p).unwrap(), (0.5, 20.0));
        let p = OscillatorParams::new(tw * 0.1, 1e5, 0.0, 0.3).unwrap();
        let (gt, c) = decoherence_and_cooperativity(&p).unwrap();
        assert!(close(gt, tw * 10.00005e3, 1e-14) && c == 0.0);
        let zero = OscillatorParams {
            gamma0: 0.0,
            n_bar: 1.0,
            coupling: 1.0,
            theta: 0.2,
        };
        assert!(decoherence_and_cooperativity(&zero).is_err());
    }

    #[test]
    fn rate_examples() {
        assert!(unidirectional_rate(&hybrid(3.0, 0.7, 2.0, 0.7, 0.0)).abs() < 1e-15);
        let r = unidirectional_rate(&hybrid(1.0, FRAC_PI_4, 1.0, FRAC_PI_2, 0.0));
        assert!(close(r, -(FRAC_PI_4.sin()), 1e-14));
        let r = unidirectional_rate(&hybrid(4.0, 0.0, 1.0, FRAC_PI_2, 0.0));
        assert!(close(r, -2.0, 1e-15));
    }

    #[test]
    fn weight_examples() {
        assert!(close(epr_weight(&hybrid(2.0, 0.4, 2.0, 0.4, 0.0)).unwrap(), 1.0, 1e-15));
        let w = epr_weight(&hybrid(2.0, 0.4, 2.0, FRAC_PI_2 - 0.4, 0.0)).unwrap();
        assert!(close(w, 1.0, 1e-14));
        let w = epr_weight(&hybrid(1.0, FRAC_PI_4, 4.0, FRAC_PI_4, 0.75)).unwrap();
        assert!(close(w, 4.0, 1e-15));
        assert!(epr_weight(&hybrid(0.0, 0.4, 1.0, 0.4, 0.0)).is_err());
        assert!(epr_weight(&hybrid(1.0, 0.4, 1.0, 0.4, 1.0)).is_err());
    }

    #[test]
    fn drift_structure() {
        let a = drift_matrix(&hybrid(3.0, 0.7, 2.0, 0.7, 0.0));
        assert!(a[(X_M, X_S)].abs() < 1e-15);
        let a = drift_matrix(&hybrid(3.0, 0.2, 2.0, 1.3, 1.0));
        assert_eq!(a[(X_M, X_S)], 0.0);
        let h = hybrid(3.0, 0.2, 2.0, 1.3, 0.3);
        let a = drift_matrix(&h);
        let mut ev: Vec<f64> = a.complex_eigenvalues().iter().map(|z| z.re).collect();
        ev.sort_by(f64::total_cmp);
        let mut want = vec![-h.spin.gamma_eff() / 2.0; 2];
        want.extend([-h.mech.gamma_eff() / 2.0; 2]);
        want.sort_by(f64::total_cmp);
        for (x, y) in ev.iter().zip(&want) {
            assert!(close(*x, *y, 1e-12));
        }
        assert_eq!(spectral_abscissa(&a) < 0.0, h.is_stable());
    }

    #[test]
    fn diffusion_examples() {
        let h = hybrid(0.0, 0.7, 0.0, 0.2, 0.0);
        let d = diffusion_matrix(&h);
        let want = Mat4::from_diagonal(&nalgebra::Vector4::new(1.0, 1.0, 7.0, 7.0));
        assert!((d - want).norm() < 1e-15);
        let d = diffusion_matrix(&hybrid(3.0, 0.2, 2.0, 1.3, 1.0));
        assert_eq!(d[(X_S, X_M)], 0.0);
        assert_eq!(d[(P_S, P_M)], 0.0);
        let d = diffusion_matrix(&hybrid(3.0, 0.9, 2.0, 1.3, 0.1));
        assert!(min_eigenvalue_sym(&d) >= -1e-12 * d.trace());
    }
}
