//! Monte-Carlo phase variance along the classical loop.
//!
//! Each realization gives `δφ = (1/ħ) ∫₀^{T_exp} g(t) δη(t) dt`, with `g` the
//! gradient-noise coupling of the arm Lagrangians evaluated on the unperturbed
//! trajectories. For a stationary two-sided spectrum
//! `Var δφ = (1/π) ∫ S |ĝ|²/ħ² dω`, which is `Γ/(2π)` for the rate `Γ` returned
//! by the dephasing module over the same band.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::grid::SimulationGrid;
use super::synthesis::synthesize_noise_indexed;
use crate::dephasing::GenericNoiseCoupling;
use crate::error::{Error, Result};
use crate::physics::{DerivedQuantities, ExperimentParams};
use crate::spectra::NoiseSpectrum;
use crate::transfer::SampledTrajectories;

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVarianceResult {
    /// Sample variance of `δφ` over one loop [rad²].
    pub variance: f64,
    pub variance_se: f64,
    /// `2π·variance`, directly comparable with the analytic Γ.
    pub gamma_equivalent: f64,
    pub gamma_equivalent_se: f64,
    /// `variance / T_exp` [s⁻¹].
    pub variance_per_texp: f64,
    pub realizations: usize,
}

/// Phase of one realization's first loop.
pub fn loop_phase(values: &[f64], kernel: &[f64], dt: f64, hbar: f64) -> f64 {
    let last = kernel.len() - 1;
    let mut acc = 0.0;
    for (k, (&g, &v)) in kernel.iter().zip(values).enumerate() {
        let w = if k == 0 || k == last { 0.5 } else { 1.0 };
        acc += w * g * v;
    }
    acc * dt / hbar
}

pub fn phase_variance_mc(
    spec: &NoiseSpectrum,
    dq: &DerivedQuantities,
    params: &ExperimentParams,
    m: usize,
    grid: &SimulationGrid,
) -> Result<PhaseVarianceResult> {
    if m < 100 {
        return Err(Error::invalid("M", "phase variance needs at least 100 realizations"));
    }
    grid.validate_for(dq)?;
    let per_loop = grid.index_of(dq.t_exp)?;
    let traj = SampledTrajectories::classical(dq, params, 1, per_loop);
    let kernel = GenericNoiseCoupling::interferometer(params, dq).phase_signal(&traj);
    let phases: Vec<f64> = (0..m as u64)
        .into_par_iter()
        .map(|i| {
            let r = synthesize_noise_indexed(spec, grid, i)?;
            Ok(loop_phase(&r.values, &kernel, grid.dt, params.hbar))
        })
        .collect::<Result<_>>()?;
    let n = m as f64;
    let mean = phases.iter().sum::<f64>() / n;
    let dev2: Vec<f64> = phases.iter().map(|p| (p - mean) * (p - mean)).collect();
    let variance = dev2.iter().sum::<f64>() / (n - 1.0);
    let m4 = dev2.iter().map(|d| d * d).sum::<f64>() / n;
    let m2 = dev2.iter().sum::<f64>() / n;
    let variance_se = ((m4 - m2 * m2).max(0.0) / n).sqrt();
    Ok(PhaseVarianceResult {
        variance,
        variance_se,
        gamma_equivalent: 2.0 * PI * variance,
        gamma_equivalent_se: 2.0 * PI * variance_se,
        variance_per_texp: variance / dq.t_exp,
        realizations: m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::derive_quantities;

    #[test]
    fn zero_noise_zero_variance() {
        let p = ExperimentParams::table1(1e-15);
        let dq = derive_quantities(&p).unwrap();
        let g = SimulationGrid::for_loops(&dq, 4, 256, 0).unwrap();
        let r = phase_variance_mc(&NoiseSpectrum::white(0.0), &dq, &p, 100, &g).unwrap();
        assert_eq!(r.variance, 0.0);
        assert!(phase_variance_mc(&NoiseSpectrum::white(1.0), &dq, &p, 10, &g).is_err());
    }

    #[test]
    fn variance_is_quadratic_in_amplitude() {
        let p = ExperimentParams::table1(1e-15);
        let dq = derive_quantities(&p).unwrap();
        let g = SimulationGrid::for_loops(&dq, 8, 256, 5).unwrap();
        let v: Vec<f64> = [1e-6, 2e-6, 4e-6]
            .iter()
            .map(|&a| phase_variance_mc(&NoiseSpectrum::white(a), &dq, &p, 200, &g).unwrap().variance)
            .collect();
        let slope = (v[2] / v[0]).log2() / 2.0;
        assert!((slope - 2.0).abs() < 0.1, "{slope}");
    }
}
