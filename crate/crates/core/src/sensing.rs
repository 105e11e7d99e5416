//! Force sensing on the mechanics: added-noise spectra of the mechanics-only
//! and hybrid sensors, matched-filter sensitivity, and the mechanics-only
//! optimum used as the standard-quantum-limit reference.
//!
//! Frequencies are lab-frame angular frequencies. The mechanics sits at
//! `+Ω̃_M`, the spin at `−Ω̃_M`. Spectra are even in `Ω`, so integrals are
//! evaluated over the positive band and doubled.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{unidirectional_rate, HybridParams, OscillatorParams};
use crate::quadrature::{self, integrate, lorentzian_knots};
use crate::simplex::{self, minimize};

/// Band half-width in units of the widest feature.
pub const DEFAULT_BAND_MULTIPLE: f64 = 50.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensingParams {
    pub hybrid: HybridParams,
    /// Mechanical resonance `Ω̃_M`.
    pub omega_m: f64,
    pub gamma_sig: f64,
    pub band_multiple: f64,
}

impl SensingParams {
    /// Requires `Ω̃_M ≥ 50·max(γ_S, γ_M, γ_sig)`.
    pub fn new(hybrid: HybridParams, omega_m: f64, gamma_sig: f64) -> Result<Self> {
        if !(gamma_sig > 0.0 && gamma_sig.is_finite()) {
            return Err(Error::Domain {
                name: "gamma_sig",
                value: gamma_sig,
                range: "(0, inf)",
            });
        }
        let p = Self {
            hybrid,
            omega_m,
            gamma_sig,
            band_multiple: DEFAULT_BAND_MULTIPLE,
        };
        let ratio = p.separation();
        if !(ratio >= 50.0) {
            return Err(Error::Rejected(format!(
                "Omega_M / max linewidth = {ratio:.3e}, needs at least 50"
            )));
        }
        Ok(p)
    }

    fn widest(&self) -> f64 {
        self.hybrid
            .spin
            .gamma_eff()
            .abs()
            .max(self.hybrid.mech.gamma_eff().abs())
            .max(self.gamma_sig)
    }

    /// `Ω̃_M / max(γ_S, γ_M, γ_sig)`.
    pub fn separation(&self) -> f64 {
        self.omega_m / self.widest()
    }

    /// Set when the rotating-wave separation is below `10³`.
    pub fn band_warning(&self) -> Option<String> {
        let ratio = self.separation();
        (ratio < 1e3).then(|| format!("band separation {ratio:.3e} is below 1e3"))
    }
}

/// `χ(Ω) = 1/[γ/2 + i(center − Ω)]`.
pub fn susceptibility(omega: f64, gamma: f64, center: f64) -> Complex64 {
    Complex64::new(gamma / 2.0, center - omega).inv()
}

fn chi2(omega: f64, gamma: f64, center: f64) -> f64 {
    1.0 / ((gamma / 2.0).powi(2) + (center - omega).powi(2))
}

/// `(√Γ_B + √Γ_P)²/2 · (Γ/2 + γ̃₀) − γ(γ − γ₀)/4`.
fn single_mode_coefficient(p: &OscillatorParams) -> f64 {
    let (b, pp) = p.sidebands();
    let sum = b.sqrt() + pp.sqrt();
    let g = p.gamma_eff();
    sum * sum / 2.0 * ((b + pp) / 2.0 + p.decoherence_rate()) - g * (g - p.gamma0) / 4.0
}

/// Added noise of the mechanics-only sensor.
pub fn noise_mech(mech: &OscillatorParams, omega_m: f64, omega: f64) -> f64 {
    let g = mech.gamma_eff();
    0.5 + (chi2(omega, g, omega_m) + chi2(-omega, g, omega_m)) * single_mode_coefficient(mech)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HybridCoefficients {
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
    pub h4: f64,
}

pub fn hybrid_coefficients(h: &HybridParams) -> HybridCoefficients {
    let (sb, sp) = h.spin.sidebands();
    let (mb, mp) = h.mech.sidebands();
    let sum_s = sb.sqrt() + sp.sqrt();
    let dif_s = sb.sqrt() - sp.sqrt();
    let sum_m = mb.sqrt() + mp.sqrt();
    let r = unidirectional_rate(h);
    let q = (sb * mp).sqrt() + (sp * mb).sqrt();
    let gs = h.spin.gamma_eff();
    let gm = h.mech.gamma_eff();
    let src_s = (sb + sp) / 2.0 + h.spin.decoherence_rate();
    HybridCoefficients {
        h1: single_mode_coefficient(&h.spin),
        h2: single_mode_coefficient(&h.mech),
        h3: gm * sum_s * sum_m / 2.0 * (r * src_s - gs * q / 4.0)
            + r * sum_m * sum_m / 2.0 * (r * src_s - gs * q / 2.0)
            - r * gs * gm * dif_s * sum_m / 8.0,
        h4: -sum_s * sum_m * q / 2.0 + r * dif_s * sum_m / 2.0,
    }
}

fn require_lossless(h: &HybridParams) -> Result<()> {
    if h.epsilon != 0.0 {
        return Err(Error::Rejected(format!(
            "hybrid noise spectrum requires epsilon = 0, got {}",
            h.epsilon
        )));
    }
    Ok(())
}

fn noise_hybrid_with(h: &HybridParams, k: &HybridCoefficients, omega_m: f64, omega: f64) -> f64 {
    let gs = h.spin.gamma_eff();
    let gm = h.mech.gamma_eff();
    let s_pos = chi2(omega, gs, -omega_m);
    let s_neg = chi2(-omega, gs, -omega_m);
    let m_pos = chi2(omega, gm, omega_m);
    let m_neg = chi2(-omega, gm, omega_m);
    0.5 + k.h1 * (s_pos + s_neg)
        + k.h2 * (m_pos + m_neg)
        + k.h3 * (m_pos * s_neg + m_neg * s_pos)
        + k.h4
            * (m_pos * s_neg * (omega - omega_m).powi(2) + m_neg * s_pos * (omega + omega_m).powi(2))
}

/// Added noise of the hybrid sensor. Lossless cascades only.
pub fn noise_hybrid(h: &HybridParams, omega_m: f64, omega: f64) -> Result<f64> {
    require_lossless(h)?;
    Ok(noise_hybrid_with(h, &hybrid_coefficients(h), omega_m, omega))
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSpectrum {
    pub omegas: Vec<f64>,
    pub values: Vec<f64>,
}

fn sorted(omegas: &[f64]) -> Vec<f64> {
    let mut w = omegas.to_vec();
    w.sort_by(f64::total_cmp);
    w
}

pub fn noise_spectrum_mech(params: &SensingParams, omegas: &[f64]) -> Result<NoiseSpectrum> {
    let mech = &params.hybrid.mech;
    if !mech.effective_linewidth().stable {
        return Err(Error::Unstable {
            which: "gamma_M",
            value: mech.gamma_eff(),
        });
    }
    let omegas = sorted(omegas);
    let values = omegas
        .iter()
        .map(|&w| noise_mech(mech, params.omega_m, w))
        .collect();
    Ok(NoiseSpectrum { omegas, values })
}

pub fn noise_spectrum_hybrid(params: &SensingParams, omegas: &[f64]) -> Result<NoiseSpectrum> {
    let h = &params.hybrid;
    require_lossless(h)?;
    h.check_stable()?;
    let k = hybrid_coefficients(h);
    let omegas = sorted(omegas);
    let values = omegas
        .iter()
        .map(|&w| noise_hybrid_with(h, &k, params.omega_m, w))
        .collect();
    Ok(NoiseSpectrum { omegas, values })
}

/// Real Lorentzian force waveform centered at `±Ω̃_M`; `∫|f|² dΩ → 4π`.
pub fn signal_waveform(omega: f64, omega_m: f64, gamma_sig: f64) -> Complex64 {
    let a = gamma_sig.sqrt();
    a / Complex64::new(gamma_sig / 2.0, omega_m - omega)
        + a / Complex64::new(gamma_sig / 2.0, -(omega_m + omega))
}

/// Output signal `S(Ω)` for `Ω > 0`; `S(−Ω) = S*(Ω)`.
pub fn signal(params: &SensingParams, omega: f64) -> Complex64 {
    let mech = &params.hybrid.mech;
    let (b, p) = mech.sidebands();
    let chi = susceptibility(omega.abs(), mech.gamma_eff(), params.omega_m);
    let s = (b.sqrt() + p.sqrt()) * mech.gamma0.sqrt() * chi
        * signal_waveform(omega.abs(), params.omega_m, params.gamma_sig)
        / std::f64::consts::SQRT_2;
    if omega < 0.0 {
        s.conj()
    } else {
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sensor {
    Mechanics,
    Hybrid,
}

/// Positive-frequency integration band and knots.
fn band(params: &SensingParams) -> Result<(f64, f64, Vec<f64>)> {
    let w = params.band_multiple * params.widest();
    let lo = params.omega_m - w;
    if !(lo > 0.0) {
        return Err(Error::Rejected(format!(
            "integration band reaches zero frequency: Omega_M = {:.6e}, half-width = {w:.6e}",
            params.omega_m
        )));
    }
    let widths = [
        params.hybrid.spin.gamma_eff(),
        params.hybrid.mech.gamma_eff(),
        params.gamma_sig,
    ];
    Ok((lo, params.omega_m + w, lorentzian_knots(params.omega_m, &widths)))
}

fn noise_fn(params: &SensingParams, sensor: Sensor) -> Result<Box<dyn Fn(f64) -> f64 + '_>> {
    let h = &params.hybrid;
    match sensor {
        Sensor::Mechanics => {
            if !h.mech.effective_linewidth().stable {
                return Err(Error::Unstable {
                    which: "gamma_M",
                    value: h.mech.gamma_eff(),
                });
            }
            Ok(Box::new(move |w| noise_mech(&h.mech, params.omega_m, w)))
        }
        Sensor::Hybrid => {
            require_lossless(h)?;
            h.check_stable()?;
            let k = hybrid_coefficients(h);
            Ok(Box::new(move |w| noise_hybrid_with(h, &k, params.omega_m, w)))
        }
    }
}

fn quad_opts() -> quadrature::Options {
    quadrature::Options {
        rel_tol: 1e-10,
        abs_tol: 0.0,
        max_intervals: 50_000,
    }
}

/// `V = [∫ |S|²/N dΩ]⁻¹` over both frequency bands.
pub fn matched_filter_sensitivity(params: &SensingParams, sensor: Sensor) -> Result<f64> {
    let (lo, hi, knots) = band(params)?;
    let noise = noise_fn(params, sensor)?;
    let est = integrate(|w| signal(params, w).norm_sqr() / noise(w), lo, hi, &knots, quad_opts());
    if !est.converged {
        return Err(Error::NoConvergence {
            iterations: est.intervals,
            residual: est.error,
        });
    }
    Ok(1.0 / (2.0 * est.value))
}

/// Variance for an arbitrary filter `G` given on `Ω > 0`, extended by
/// `G(−Ω) = G*(Ω)`.
pub fn filter_sensitivity<G>(params: &SensingParams, sensor: Sensor, filter: G) -> Result<f64>
where
    G: Fn(f64) -> Complex64,
{
    let (lo, hi, knots) = band(params)?;
    let noise = noise_fn(params, sensor)?;
    let num = integrate(|w| filter(w).norm_sqr() * noise(w), lo, hi, &knots, quad_opts());
    let den = integrate(|w| (filter(w).conj() * signal(params, w)).re, lo, hi, &knots, quad_opts());
    Ok(2.0 * num.value / (2.0 * den.value).powi(2))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SqlBenchmark {
    pub v_m: f64,
    pub c_m_opt: f64,
    pub theta_m_opt: f64,
}

fn mech_only(gamma_m0: f64, n_bar_m: f64, theta_m: f64, log10_cm: f64) -> Result<HybridParams> {
    HybridParams::new(
        OscillatorParams::new(gamma_m0, 0.0, 0.0, theta_m)?,
        OscillatorParams::with_cooperativity(gamma_m0, n_bar_m, 10f64.powf(log10_cm), theta_m)?,
        0.0,
    )
}

fn mech_sensitivity(gamma_m0: f64, n_bar_m: f64, gamma_sig: f64, omega_m: f64, x: &[f64]) -> Option<f64> {
    let h = mech_only(gamma_m0, n_bar_m, x[0], x[1]).ok()?;
    if !h.is_stable() {
        return None;
    }
    let p = SensingParams {
        hybrid: h,
        omega_m,
        gamma_sig,
        band_multiple: DEFAULT_BAND_MULTIPLE,
    };
    matched_filter_sensitivity(&p, Sensor::Mechanics)
        .ok()
        .filter(|v| v.is_finite() && *v > 0.0)
}

/// Best mechanics-only sensitivity over `(θ_M, C_M)` at fixed intrinsic
/// damping `γ_M0`, occupation `n̄_M` and signal bandwidth.
pub fn sql_benchmark(gamma_m0: f64, n_bar_m: f64, gamma_sig: f64, omega_m: f64) -> Result<SqlBenchmark> {
    let gm_tilde = gamma_m0 * (n_bar_m + 0.5);
    let penalty = |x: &[f64]| -> f64 {
        if !(0.0..=FRAC_PI_2).contains(&x[0]) || !x[1].is_finite() {
            return 1e300;
        }
        match mech_sensitivity(gamma_m0, n_bar_m, gamma_sig, omega_m, x) {
            Some(v) => v,
            None => {
                let gm = gamma_m0 - 10f64.powf(x[1]) * gm_tilde * (2.0 * x[0]).cos();
                1e300 * (1.0 + (-gm).max(0.0) / gm_tilde).min(1.5)
            }
        }
    };
    let mut grid = Vec::new();
    for i in 0..24 {
        let t = 0.02 + (FRAC_PI_2 - 0.04) * i as f64 / 23.0;
        for j in 0..16 {
            let l = -1.0 + 7.0 * j as f64 / 15.0;
            grid.push((penalty(&[t, l]), [t, l]));
        }
    }
    grid.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best: Option<(f64, Vec<f64>)> = None;
    for (_, x0) in grid.iter().take(5) {
        let m = minimize(&penalty, x0, &[0.05, 0.25], simplex::Options::default());
        if best.as_ref().is_none_or(|b| m.f < b.0) {
            best = Some((m.f, m.x));
        }
    }
    let (_, x) = best.ok_or(Error::Infeasible)?;
    let v_m = mech_sensitivity(gamma_m0, n_bar_m, gamma_sig, omega_m, &x).ok_or(Error::Infeasible)?;
    Ok(SqlBenchmark {
        v_m,
        c_m_opt: 10f64.powf(x[1]),
        theta_m_opt: x[0],
    })
}

/// `V_H / V_M`; below one the hybrid sensor beats the mechanics-only optimum.
pub fn enhancement_ratio(params: &SensingParams, sql: &SqlBenchmark) -> Result<f64> {
    Ok(matched_filter_sensitivity(params, Sensor::Hybrid)? / sql.v_m)
}
