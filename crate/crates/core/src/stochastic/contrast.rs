//! Interferometric contrast from the arm mismatch at the end of the loop,
//! `C = exp(−½[(Δx/σx)² + (Δp/σp)²])` with `Δx = δx_R − δx_L` and
//! `Δp = δp_R − δp_L − (2ħγe η0/ω0) sin ω0t`.

use rayon::prelude::*;

use super::deviation::{Solver, TrajectoryDeviation};
use super::grid::SimulationGrid;
use super::synthesis::synthesize_noise_indexed;
use crate::error::{Error, Result};
use crate::physics::{DerivedQuantities, ExperimentParams};
use crate::spectra::NoiseSpectrum;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContrastResult {
    pub contrast: f64,
    /// `Δx(t)` [m]
    pub dx_final: f64,
    /// `Δp(t)` [kg m s⁻¹], deterministic term included.
    pub dp_final: f64,
}

/// `(C_R − C_L) η0/ω0 = 2ħγe η0/ω0`, the amplitude of the classical momentum
/// mismatch. Its value (≈5.25e-22 kg m s⁻¹ for the reference system) is what is
/// often quoted as `⟨Δp²(T)⟩`, although the term itself vanishes at `t = T_exp`.
pub fn deterministic_dp_amplitude(dq: &DerivedQuantities) -> f64 {
    (dq.c_right - dq.c_left) * dq.eta0 / dq.omega0
}

fn gaussian_overlap(dx: f64, dp: f64, dq: &DerivedQuantities) -> f64 {
    let a = dx / dq.sigma_x;
    let b = dp / dq.sigma_p;
    (-0.5 * (a * a + b * b)).exp()
}

/// Single-run contrast at grid time `t`.
pub fn contrast_single(dev: &TrajectoryDeviation, dq: &DerivedQuantities, t: f64) -> Result<ContrastResult> {
    let f = t / dev.dt;
    let k = f.round();
    if (f - k).abs() > 1e-6 || k < 0.0 || k as usize >= dev.len() {
        return Err(Error::Grid(format!("t = {t:e} s is not a grid time of this trace")));
    }
    let k = k as usize;
    let dx = dev.dx_right[k] - dev.dx_left[k];
    let dp = dev.dp_right[k] - dev.dp_left[k] - deterministic_dp_amplitude(dq) * (dq.omega0 * t).sin();
    Ok(ContrastResult {
        contrast: gaussian_overlap(dx, dp, dq),
        dx_final: dx,
        dp_final: dp,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleContrast {
    /// `exp(−½(⟨Δx²⟩/σx² + ⟨Δp²⟩/σp²))` from the Monte-Carlo moments.
    pub contrast: f64,
    pub mean_dx2: f64,
    pub mean_dx2_se: f64,
    pub mean_dp2: f64,
    pub mean_dp2_se: f64,
    /// `(2ħγe A/(mω0))²·t` for white noise, `None` otherwise.
    pub closed_form_dx2: Option<f64>,
    /// Contrast with `⟨Δx²⟩` from the closed form and `⟨Δp²⟩` from the deterministic term.
    pub closed_form_contrast: Option<f64>,
    pub deterministic_dp_amplitude: f64,
    pub realizations: usize,
}

fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Ensemble contrast from `m` realizations on `grid` (seeded streams `0..m`).
pub fn contrast_ensemble_on(
    spec: &NoiseSpectrum,
    dq: &DerivedQuantities,
    params: &ExperimentParams,
    m: usize,
    t: f64,
    grid: &SimulationGrid,
) -> Result<EnsembleContrast> {
    if m < 2 {
        return Err(Error::invalid("M", "need at least two realizations"));
    }
    grid.validate_for(dq)?;
    let runs: Vec<ContrastResult> = (0..m as u64)
        .into_par_iter()
        .map(|i| {
            let r = synthesize_noise_indexed(spec, grid, i)?;
            let dev = TrajectoryDeviation::compute(&r, dq, params, Solver::Frequency)?;
            contrast_single(&dev, dq, t)
        })
        .collect::<Result<_>>()?;
    let dx2: Vec<f64> = runs.iter().map(|r| r.dx_final * r.dx_final).collect();
    let dp2: Vec<f64> = runs.iter().map(|r| r.dp_final * r.dp_final).collect();
    let (mean_dx2, mean_dx2_se) = mean_and_se(&dx2);
    let (mean_dp2, mean_dp2_se) = mean_and_se(&dp2);
    let closed_form_dx2 = match spec {
        NoiseSpectrum::White { amplitude } => {
            let k = 2.0 * params.hbar * params.gamma_e * amplitude / (params.mass * dq.omega0);
            Some(k * k * t)
        }
        _ => None,
    };
    let det = deterministic_dp_amplitude(dq);
    let det_t = det * (dq.omega0 * t).sin();
    Ok(EnsembleContrast {
        contrast: (-0.5 * (mean_dx2 / (dq.sigma_x * dq.sigma_x) + mean_dp2 / (dq.sigma_p * dq.sigma_p))).exp(),
        mean_dx2,
        mean_dx2_se,
        mean_dp2,
        mean_dp2_se,
        closed_form_dx2,
        closed_form_contrast: closed_form_dx2.map(|x2| {
            (-0.5 * (x2 / (dq.sigma_x * dq.sigma_x) + det_t * det_t / (dq.sigma_p * dq.sigma_p))).exp()
        }),
        deterministic_dp_amplitude: det,
        realizations: m,
    })
}

/// Ensemble contrast on the default 16-loop, 512-samples-per-loop grid.
pub fn contrast_ensemble(
    spec: &NoiseSpectrum,
    dq: &DerivedQuantities,
    params: &ExperimentParams,
    m: usize,
    t: f64,
    seed: u64,
) -> Result<EnsembleContrast> {
    let grid = SimulationGrid::for_loops(dq, 16, 512, seed)?;
    contrast_ensemble_on(spec, dq, params, m, t, &grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::derive_quantities;
    use crate::stochastic::synthesis::NoiseRealization;

    fn setup() -> (ExperimentParams, DerivedQuantities) {
        let p = ExperimentParams::table1(1e-15);
        (p, derive_quantities(&p).unwrap())
    }

    #[test]
    fn closed_loop_without_noise() {
        let (p, dq) = setup();
        let g = SimulationGrid::for_loops(&dq, 2, 512, 0).unwrap();
        let dev = TrajectoryDeviation::compute(&NoiseRealization::zeros(g), &dq, &p, Solver::Frequency).unwrap();
        let c = contrast_single(&dev, &dq, 512.0 * g.dt).unwrap();
        assert_eq!(c.dx_final, 0.0);
        assert!((c.contrast - 1.0).abs() < 1e-15);
        // half-way round, the classical momentum mismatch alone destroys contrast
        let c = contrast_single(&dev, &dq, 128.0 * g.dt).unwrap();
        assert!(c.contrast < 1e-6);
    }

    #[test]
    fn deterministic_amplitude() {
        let (_, dq) = setup();
        let a = deterministic_dp_amplitude(&dq).abs();
        assert!(((a - 5.25e-22) / 5.25e-22).abs() < 0.01, "{a:e}");
    }

    #[test]
    fn zero_noise_ensemble() {
        let (p, dq) = setup();
        let e = contrast_ensemble(&NoiseSpectrum::white(0.0), &dq, &p, 4, dq.t_exp, 1).unwrap();
        assert_eq!(e.mean_dx2, 0.0);
        assert!((e.contrast - 1.0).abs() < 1e-15);
        assert!(contrast_ensemble(&NoiseSpectrum::white(0.0), &dq, &p, 1, dq.t_exp, 1).is_err());
    }

    #[test]
    fn off_grid_time_is_rejected() {
        let (p, dq) = setup();
        let g = SimulationGrid::for_loops(&dq, 2, 512, 0).unwrap();
        let dev = TrajectoryDeviation::compute(&NoiseRealization::zeros(g), &dq, &p, Solver::Frequency).unwrap();
        assert!(contrast_single(&dev, &dq, 0.3 * g.dt).is_err());
    }
}
