//! Dephasing rates from a noise spectrum and a transfer function.
//!
//! For the one-loop interferometer
//! `Γ = (8H²/ω0⁵) ∫_{ξmin}^{∞} S(ξ) F(ξ) dξ`, and the coherence after a time
//! `t` is `e^{−Γt}`. The inverse problems (largest tolerable white amplitude,
//! flicker constant, relative current noise) follow from the same integral.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::{DerivedQuantities, ExperimentParams};
use crate::quadrature::{integrate, QuadOptions};
use crate::spectra::{normalize, NoiseSpectrum, NormalizedSpectrum};
use crate::transfer::{
    check_resolution, dev_envelope_coefficient, f_dev, f_ho, ho_envelope_coefficient, numeric_transfer,
    windowed_fourier, SampledTrajectories, TransferKind,
};

/// Reference value of `∫₁^∞ F_HO dξ` used by the white-noise bound.
pub const WHITE_INTEGRAL: f64 = 1.8;
/// Reference value of `∫₁^∞ F_HO/ξ dξ` used by the flicker bound.
pub const FLICKER_INTEGRAL: f64 = 1.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegrationConfig {
    /// Lower cutoff `ω_min/ω0`; 1 for a single loop, `10⁻ⁿ` for `10ⁿ` repeated runs.
    pub xi_min: f64,
    /// Upper truncation; the remainder is bounded analytically.
    pub xi_max: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self {
            xi_min: 1.0,
            xi_max: 1e4,
            rel_tol: 1e-6,
            max_panels: 20_000,
        }
    }
}

impl IntegrationConfig {
    pub fn with_xi_min(mut self, xi_min: f64) -> Self {
        self.xi_min = xi_min;
        self
    }

    pub fn with_xi_max(mut self, xi_max: f64) -> Self {
        self.xi_max = xi_max;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.xi_min >= 0.0 && self.xi_min.is_finite()) {
            return Err(Error::invalid("xi_min", "must be finite and ≥ 0"));
        }
        if !(self.xi_max > self.xi_min && self.xi_max.is_finite()) {
            return Err(Error::invalid("xi_max", "must be finite and exceed xi_min"));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::invalid("rel_tol", "must be > 0"));
        }
        if self.max_panels == 0 {
            return Err(Error::invalid("max_panels", "must be ≥ 1"));
        }
        Ok(())
    }
}

/// Panel breaks: decades below 1, every integer up to 20, doublings beyond.
pub fn breakpoints(lo: f64, hi: f64) -> Vec<f64> {
    let mut b = vec![lo];
    if lo < 1.0 && lo > 0.0 {
        let mut k = lo.log10().floor() as i32 + 1;
        while k < 0 {
            let x = 10f64.powi(k);
            if x > lo && x < hi {
                b.push(x);
            }
            k += 1;
        }
    } else if lo == 0.0 {
        for k in (-12..0).map(|k| 10f64.powi(k)) {
            if k < hi {
                b.push(k);
            }
        }
    }
    for n in 1..=20 {
        let x = n as f64;
        if x > lo && x < hi {
            b.push(x);
        }
    }
    let mut x = 40.0;
    while x < hi {
        if x > lo {
            b.push(x);
        }
        x *= 2.0;
    }
    b.push(hi);
    b.dedup();
    b
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureDiagnostics {
    pub panels: usize,
    pub evaluations: usize,
    /// Estimated absolute error of `integral_value`.
    pub abs_error: f64,
    pub xi_lower: f64,
    /// Upper limit actually used; below `xi_max` when a tabulated spectrum ends first.
    pub xi_upper: f64,
    pub truncated_by_table: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DephasingResult {
    /// Γ [s⁻¹]
    pub gamma: f64,
    /// `e^{−Γ T_exp}`
    pub coherence: f64,
    /// `∫ S F dξ` over the integrated range, without the tail.
    pub integral_value: f64,
    /// Bound on the omitted `∫_{ξmax}^{∞} S F dξ`; `None` where no envelope is known.
    pub tail_estimate: Option<f64>,
    /// Factor turning `integral_value` into Γ.
    pub prefactor: f64,
    pub diagnostics: QuadratureDiagnostics,
}

impl DephasingResult {
    /// Error bar on Γ: quadrature error plus tail bound.
    pub fn gamma_error(&self) -> f64 {
        self.prefactor * (self.diagnostics.abs_error + self.tail_estimate.unwrap_or(0.0))
    }
}

/// `8H²/ω0⁵`
pub fn ho_prefactor(dq: &DerivedQuantities) -> f64 {
    8.0 * dq.h * dq.h / dq.omega0.powi(5)
}

pub fn coherence(gamma: f64, t: f64) -> f64 {
    (-gamma * t).exp()
}

#[derive(Clone, Copy)]
enum Weight {
    Ho,
    Dev,
    Total,
}

impl Weight {
    fn eval(self, xi: f64) -> Result<f64> {
        match self {
            Weight::Ho => f_ho(xi),
            Weight::Dev => f_dev(xi),
            Weight::Total => {
                let a = f_ho(xi)?.sqrt() + f_dev(xi)?.sqrt();
                Ok(a * a)
            }
        }
    }

    fn envelope_coefficient(self, x: f64) -> f64 {
        match self {
            Weight::Ho => ho_envelope_coefficient(x),
            Weight::Dev => dev_envelope_coefficient(x),
            Weight::Total => ho_envelope_coefficient(x) + dev_envelope_coefficient(x),
        }
    }

    fn has_pole_at_one(self) -> bool {
        !matches!(self, Weight::Ho)
    }
}

struct Range {
    lo: f64,
    hi: f64,
    truncated: bool,
}

fn integration_range(spec: &NoiseSpectrum, dq: &DerivedQuantities, cfg: &IntegrationConfig) -> Result<Range> {
    cfg.validate()?;
    spec.validate()?;
    match spec {
        NoiseSpectrum::Flicker { alpha, .. } if cfg.xi_min == 0.0 && *alpha > 0.0 => Err(Error::NonIntegrableAtDc),
        NoiseSpectrum::Custom(t) => {
            let lo_w = cfg.xi_min * dq.omega0;
            if lo_w < t.omega_min() {
                return Err(Error::OutOfTableRange {
                    omega: lo_w,
                    min: t.omega_min(),
                    max: t.omega_max(),
                });
            }
            let table_hi = t.omega_max() / dq.omega0;
            if table_hi <= cfg.xi_min {
                return Err(Error::OutOfTableRange {
                    omega: lo_w,
                    min: t.omega_min(),
                    max: t.omega_max(),
                });
            }
            Ok(Range {
                lo: cfg.xi_min,
                hi: table_hi.min(cfg.xi_max),
                truncated: table_hi < cfg.xi_max,
            })
        }
        _ => Ok(Range {
            lo: cfg.xi_min,
            hi: cfg.xi_max,
            truncated: false,
        }),
    }
}

fn run_quadrature<F>(
    integrand: F,
    range: &Range,
    cfg: &IntegrationConfig,
    prefactor: f64,
    tail: Option<f64>,
    t_exp: f64,
) -> Result<DephasingResult>
where
    F: Fn(f64) -> Result<f64>,
{
    let out = integrate(
        integrand,
        &breakpoints(range.lo, range.hi),
        QuadOptions {
            rel_tol: cfg.rel_tol,
            abs_tol: 0.0,
            max_panels: cfg.max_panels,
        },
    )?;
    let gamma = (prefactor * out.value).max(0.0);
    Ok(DephasingResult {
        gamma,
        coherence: coherence(gamma, t_exp),
        integral_value: out.value,
        tail_estimate: tail,
        prefactor,
        diagnostics: QuadratureDiagnostics {
            panels: out.panels,
            evaluations: out.evaluations,
            abs_error: out.error,
            xi_lower: range.lo,
            xi_upper: range.hi,
            truncated_by_table: range.truncated,
        },
    })
}

fn analytic_gamma(
    spec: &NoiseSpectrum,
    dq: &DerivedQuantities,
    weight: Weight,
    cfg: &IntegrationConfig,
) -> Result<DephasingResult> {
    let range = integration_range(spec, dq, cfg)?;
    if weight.has_pole_at_one() && range.lo <= 1.0 && range.hi >= 1.0 {
        return Err(Error::NonRemovableSingularity { xi: 1.0 });
    }
    let s = normalize(spec, dq);
    // ∫_X^∞ S·F ≤ sup S · c(X)² ∫_X^∞ ξ⁻⁶ = sup S · c(X)² / (5X⁵)
    let tail = if range.truncated || range.hi < 3.0 {
        None
    } else {
        let x = range.hi;
        let c = weight.envelope_coefficient(x);
        Some(s.sup_from(x) * c * c / (5.0 * x.powi(5)))
    };
    let integrand = |xi: f64| Ok(s.eval(xi)? * weight.eval(xi)?);
    run_quadrature(integrand, &range, cfg, ho_prefactor(dq), tail, dq.t_exp)
}

/// Γ for a spectrum and transfer function.
///
/// For [`TransferKind::Numeric`] the prefactor is `2ω0`,
/// i.e. `Γ = 2∫_{ωmin}^{ωmax} S(ω) F(ω) dω`; the coupling constants must be
/// folded into the sampled signals by the caller.
pub fn gamma(
    spec: &NoiseSpectrum,
    dq: &DerivedQuantities,
    kind: &TransferKind,
    cfg: &IntegrationConfig,
) -> Result<DephasingResult> {
    match kind {
        TransferKind::Ho => analytic_gamma(spec, dq, Weight::Ho, cfg),
        TransferKind::Dev => analytic_gamma(spec, dq, Weight::Dev, cfg),
        TransferKind::Numeric(nt) => {
            let range = integration_range(spec, dq, cfg)?;
            check_resolution(range.hi * dq.omega0, nt.trajectories.dt)?;
            let s = normalize(spec, dq);
            let integrand = |xi: f64| Ok(s.eval(xi)? * numeric_transfer(nt, xi * dq.omega0)?);
            run_quadrature(integrand, &range, cfg, 2.0 * dq.omega0, None, dq.t_exp)
        }
    }
}

/// Γ with the phase and trajectory-deviation amplitudes added before squaring,
/// `∫ S (√F_HO + √F_dev)² dξ`. `F_dev` has a double pole at ξ = 1, so the
/// integration range must exclude it.
pub fn gamma_total(spec: &NoiseSpectrum, dq: &DerivedQuantities, cfg: &IntegrationConfig) -> Result<DephasingResult> {
    analytic_gamma(spec, dq, Weight::Total, cfg)
}

/// `∫ F_HO(ξ)/ξ^α dξ` over the configured range, without tail.
pub fn ho_weight_integral(alpha: f64, cfg: &IntegrationConfig) -> Result<f64> {
    cfg.validate()?;
    if cfg.xi_min == 0.0 && alpha >= 1.0 {
        return Err(Error::NonIntegrableAtDc);
    }
    let range = Range {
        lo: cfg.xi_min,
        hi: cfg.xi_max,
        truncated: false,
    };
    let out = integrate(
        |xi| Ok(f_ho(xi)? / xi.powf(alpha)),
        &breakpoints(range.lo, range.hi),
        QuadOptions {
            rel_tol: cfg.rel_tol,
            abs_tol: 0.0,
            max_panels: cfg.max_panels,
        },
    )?;
    Ok(out.value)
}

fn positive_target(gamma_max: f64) -> Result<()> {
    if gamma_max > 0.0 && gamma_max.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("target", "target must be positive"))
    }
}

/// Largest white amplitude `A` with `Γ_W ≤ gamma_max`, given `∫ F_HO dξ = integral`.
pub fn bound_white(gamma_max: f64, dq: &DerivedQuantities, integral: f64) -> Result<f64> {
    positive_target(gamma_max)?;
    Ok((gamma_max / (ho_prefactor(dq) * integral)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlickerBound {
    /// `K̃` [T m⁻¹ Hz^(-1/2)]
    pub ktilde: f64,
    /// `K` in the units of the template spectrum.
    pub k: f64,
}

/// Largest flicker constant with `Γ_F ≤ gamma_max`, given `∫ F_HO/ξ^α dξ = integral`.
/// `template` supplies α, the current, distance and μ0.
pub fn bound_flicker(
    gamma_max: f64,
    dq: &DerivedQuantities,
    template: &NoiseSpectrum,
    integral: f64,
) -> Result<FlickerBound> {
    positive_target(gamma_max)?;
    let NoiseSpectrum::Flicker {
        alpha,
        current,
        distance,
        mu0,
        ..
    } = *template
    else {
        return Err(Error::invalid("template", "bound_flicker needs a flicker spectrum"));
    };
    let ktilde = (gamma_max / (ho_prefactor(dq) * integral)).sqrt();
    let k = ktilde * ktilde * dq.omega0.powf(alpha) * 2.0 * PI * distance * distance / (mu0 * current * current);
    Ok(FlickerBound { ktilde, k })
}

/// `δI/I = √(Γ/2) · ω0³ / (2|H η0|)`
pub fn current_noise_ratio(gamma: f64, dq: &DerivedQuantities) -> f64 {
    (gamma.max(0.0) / 2.0).sqrt() * dq.omega0.powi(3) / (2.0 * (dq.h * dq.eta0).abs())
}

/// `δI/I` from a white amplitude or a flicker `K̃` sitting exactly at its bound:
/// `level · √(integral · ω0) / |η0|`.
pub fn current_noise_ratio_from_level(level: f64, integral: f64, dq: &DerivedQuantities) -> f64 {
    level * (integral * dq.omega0).sqrt() / dq.eta0.abs()
}

/// Coefficients of a single shared noise source `f(t)` in the arm Lagrangians,
/// `δA_j = S_j D_As f + D_An f`, `δB_j = S_j D_Bs f + D_Bn f`, `δC_j = D_Cj f`,
/// entering the phase as `δA_j x_j² + δB_j x_j + δC_j`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GenericNoiseCoupling {
    pub d_an: f64,
    pub d_as: f64,
    pub d_bn: f64,
    pub d_bs: f64,
    pub d_cr: f64,
    pub d_cl: f64,
}

impl GenericNoiseCoupling {
    /// Couplings of gradient noise in the wire-trap interferometer.
    pub fn interferometer(params: &ExperimentParams, dq: &DerivedQuantities) -> Self {
        let k = params.chi_rho * params.mass / params.mu0;
        Self {
            d_an: k * dq.eta0,
            d_as: 0.0,
            d_bn: k * params.b0,
            d_bs: -params.hbar * params.gamma_e,
            d_cr: 0.0,
            d_cl: 0.0,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            d_an: c * self.d_an,
            d_as: c * self.d_as,
            d_bn: c * self.d_bn,
            d_bs: c * self.d_bs,
            d_cr: c * self.d_cr,
            d_cl: c * self.d_cl,
        }
    }

    fn validate(&self) -> Result<()> {
        let all = [self.d_an, self.d_as, self.d_bn, self.d_bs, self.d_cr, self.d_cl];
        if all.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::invalid("couplings", "must be finite"))
        }
    }

    /// `D_An(x_R² − x_L²) + D_As(x_R² + x_L²) + D_Bn(x_R − x_L) + D_Bs(x_R + x_L) + D_CR − D_CL`
    pub fn phase_signal(&self, traj: &SampledTrajectories) -> Vec<f64> {
        traj.right
            .iter()
            .zip(&traj.left)
            .map(|(&r, &l)| {
                self.d_an * (r * r - l * l)
                    + self.d_as * (r * r + l * l)
                    + self.d_bn * (r - l)
                    + self.d_bs * (r + l)
                    + (self.d_cr - self.d_cl)
            })
            .collect()
    }
}

/// Γ from arbitrary couplings and sampled trajectories:
/// `Γ = (2/ħ²) ∫_{ωmin}^{ωmax} S(ω) |∫_{t_i}^{t_f} g(t) e^{iωt} dt|² dω`
/// with `g` from [`GenericNoiseCoupling::phase_signal`]. The factor 2 collects
/// the negative frequencies of the two-sided spectrum.
pub fn generic_gamma(
    spec: &NoiseSpectrum,
    couplings: &GenericNoiseCoupling,
    traj: &SampledTrajectories,
    window: (f64, f64),
    params: &ExperimentParams,
    dq: &DerivedQuantities,
    cfg: &IntegrationConfig,
) -> Result<DephasingResult> {
    couplings.validate()?;
    let range = integration_range(spec, dq, cfg)?;
    let idx = traj.window_indices(window)?;
    check_resolution(range.hi * dq.omega0, traj.dt)?;
    let g = couplings.phase_signal(traj);
    let s: NormalizedSpectrum = normalize(spec, dq);
    let integrand = |xi: f64| {
        let a = windowed_fourier(&g, traj.t0, traj.dt, idx, xi * dq.omega0)?;
        Ok(s.eval(xi)? * a.norm_sqr())
    };
    let prefactor = 2.0 * dq.omega0 / (params.hbar * params.hbar);
    run_quadrature(integrand, &range, cfg, prefactor, None, dq.t_exp)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    /// Wire cross-section [m²].
    pub area: f64,
    /// Temperature [K].
    pub temperature: f64,
}

/// Flicker material constant `C = K·𝒜/T²` [m² K⁻² for α = 1].
///
/// With `K = 0.7e-13`, `𝒜 = 7.85e-11 m²`, `T = 4.2 K` this gives about
/// `3.1e-25`, a hundred times below the `0.3e-23` sometimes quoted for
/// niobium wires.
pub fn nb_material_constant(k: f64, mat: &MaterialParams) -> Result<f64> {
    if !(mat.area > 0.0 && mat.area.is_finite()) {
        return Err(Error::invalid("area", "must be > 0"));
    }
    if !(mat.temperature > 0.0 && mat.temperature.is_finite()) {
        return Err(Error::invalid("temperature", "must be > 0"));
    }
    Ok(k * mat.area / (mat.temperature * mat.temperature))
}
