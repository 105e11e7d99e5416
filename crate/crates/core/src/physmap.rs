//! Cavity optomechanics in terms of the generic sideband model.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CavityParams {
    /// Cavity decay rate (FWHM).
    pub kappa: f64,
    /// Detuning `ω_c − ω_L`.
    pub delta: f64,
    /// Drive-enhanced coupling, taken real.
    pub g_om: f64,
    pub omega_m_bare: f64,
}

impl CavityParams {
    pub fn new(kappa: f64, delta: f64, g_om: f64, omega_m_bare: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::Domain {
                name: "kappa",
                value: kappa,
                range: "(0, inf)",
            });
        }
        if !(omega_m_bare > 0.0 && omega_m_bare.is_finite()) {
            return Err(Error::Domain {
                name: "Omega_M_bare",
                value: omega_m_bare,
                range: "(0, inf)",
            });
        }
        if !delta.is_finite() || !g_om.is_finite() {
            return Err(Error::Rejected("delta and g_om must be finite".into()));
        }
        Ok(Self {
            kappa,
            delta,
            g_om,
            omega_m_bare,
        })
    }

    /// `L(Ω) = (κ/2) / (κ/2 + i(Δ − Ω))`.
    pub fn lorentzian(&self, omega: f64) -> Complex64 {
        let k = self.kappa / 2.0;
        k / Complex64::new(k, self.delta - omega)
    }

    /// Right-hand side of the spring-shift equation.
    pub fn shifted_resonance_map(&self, omega: f64) -> f64 {
        let d = self.lorentzian(omega) - self.lorentzian(-omega).conj();
        2.0 * self.g_om * self.g_om * d.im / self.kappa + self.omega_m_bare
    }

    /// Optical contribution to the mechanical linewidth at `omega`.
    pub fn optical_broadening(&self, omega: f64) -> f64 {
        let d = self.lorentzian(omega) - self.lorentzian(-omega).conj();
        4.0 * self.g_om * self.g_om * d.re / self.kappa
    }
}

/// Solves `Ω̃ = F(Ω̃)` by iteration from the bare frequency. The update is
/// halved whenever the step length grows twice in a row.
pub fn spring_shift_fixed_point(c: &CavityParams) -> Result<f64> {
    let tol = 1e-12 * c.omega_m_bare;
    let mut x = c.omega_m_bare;
    let mut prev = x;
    let mut relax = 1.0;
    let mut last_step = f64::INFINITY;
    let mut growth = 0;
    for _ in 0..1000 {
        let fx = c.shifted_resonance_map(x);
        if (fx - x).abs() <= tol {
            return Ok(x);
        }
        let step = relax * (fx - x);
        if step.abs() > last_step {
            growth += 1;
            if growth >= 2 {
                relax /= 2.0;
                growth = 0;
            }
        } else {
            growth = 0;
        }
        last_step = step.abs();
        prev = x;
        x += step;
        if !x.is_finite() {
            break;
        }
    }
    Err(Error::FixedPoint { last: x, previous: prev })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SidebandRates {
    pub gamma_mb: f64,
    pub gamma_mp: f64,
    pub theta_plus: f64,
    pub theta_minus: f64,
    pub theta_m: f64,
}

impl SidebandRates {
    pub fn coupling(&self) -> f64 {
        self.gamma_mb + self.gamma_mp
    }
}

/// Sideband rates and phases at the shifted resonance `omega`.
pub fn sideband_rates_from_cavity(c: &CavityParams, omega: f64) -> SidebandRates {
    let scale = 4.0 * c.g_om * c.g_om / c.kappa;
    let gamma_mb = scale * c.lorentzian(omega).norm_sqr();
    let gamma_mp = scale * c.lorentzian(-omega).norm_sqr();
    let theta_m = if gamma_mp == 0.0 {
        FRAC_PI_2
    } else {
        gamma_mb.sqrt().atan2(gamma_mp.sqrt())
    };
    SidebandRates {
        gamma_mb,
        gamma_mp,
        theta_plus: -(2.0 * (c.delta - omega) / c.kappa).atan(),
        theta_minus: -(2.0 * (c.delta + omega) / c.kappa).atan(),
        theta_m,
    }
}

/// Relative quadrature phase between the subsystems that makes the
/// cascade rate real.
pub fn cascade_phase_choice(theta_plus: f64, theta_minus: f64) -> f64 {
    -(theta_plus + theta_minus) / 2.0
}

/// Complex cascade rate
/// `R₀ = √(Γ_SB Γ_MP) e^{−i(θ₋+φ)} − √(Γ_MB Γ_SP) e^{i(θ₊+φ)}`.
pub fn cascade_rate(
    spin_sidebands: (f64, f64),
    mech: &SidebandRates,
    phi: f64,
) -> Complex64 {
    let (sb, sp) = spin_sidebands;
    (sb * mech.gamma_mp).sqrt() * Complex64::from_polar(1.0, -(mech.theta_minus + phi))
        - (mech.gamma_mb * sp).sqrt() * Complex64::from_polar(1.0, mech.theta_plus + phi)
}

/// Full cavity-to-model mapping with validity warnings.
#[derive(Clone, Debug, PartialEq)]
pub struct MechanicalMapping {
    pub omega_m: f64,
    pub rates: SidebandRates,
    /// `γ_M0` plus optical broadening.
    pub gamma_m: f64,
    pub phi: f64,
    pub warnings: Vec<String>,
}

pub fn map_cavity(c: &CavityParams, gamma_m0: f64) -> Result<MechanicalMapping> {
    let omega_m = spring_shift_fixed_point(c)?;
    let rates = sideband_rates_from_cavity(c, omega_m);
    let gamma_m = gamma_m0 + c.optical_broadening(omega_m);
    let mut warnings = Vec::new();
    if gamma_m >= c.kappa / 10.0 {
        warnings.push(format!(
            "gamma_M = {gamma_m:.6e} is not small against kappa/10 = {:.6e}; adiabatic elimination is questionable",
            c.kappa / 10.0
        ));
    }
    let q = omega_m / gamma_m;
    if q < 100.0 {
        warnings.push(format!("mechanical Q = {q:.6e} is below 100"));
    }
    Ok(MechanicalMapping {
        omega_m,
        phi: cascade_phase_choice(rates.theta_plus, rates.theta_minus),
        rates,
        gamma_m,
        warnings,
    })
}
