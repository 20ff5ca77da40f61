//! Gaussian noise paths with a prescribed spectrum, generated bin by bin in
//! the frequency domain.
//!
//! Bin `k` receives `sqrt(n·S(ω_k)/dt)·(g₁ + i g₂)/√2` with Hermitian mirroring
//! so the path is real; the inverse DFT divided by `n` gives a sample path
//! whose periodogram `(dt/n)|X_k|²` has expectation `S(ω_k)`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;

use super::grid::SimulationGrid;
use crate::error::{Error, Result};
use crate::spectra::{evaluate_psd, NoiseSpectrum};

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRealization {
    /// `δη(t_k)` [T m⁻¹]
    pub values: Vec<f64>,
    /// Unnormalized DFT of `values`.
    pub coefficients: Vec<Complex64>,
    pub grid: SimulationGrid,
    /// Stream index within the grid's seed.
    pub index: u64,
}

impl NoiseRealization {
    /// Wraps an explicit path (e.g. a constant or recorded trace).
    pub fn from_values(values: Vec<f64>, grid: SimulationGrid) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::Grid(format!(
                "{} samples for a grid of {}",
                values.len(),
                grid.n
            )));
        }
        let mut coefficients: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(grid.n).process(&mut coefficients);
        Ok(Self {
            values,
            coefficients,
            grid,
            index: 0,
        })
    }

    pub fn zeros(grid: SimulationGrid) -> Self {
        Self {
            values: vec![0.0; grid.n],
            coefficients: vec![Complex64::new(0.0, 0.0); grid.n],
            grid,
            index: 0,
        }
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Per-realization generator: stream `index` of the ChaCha sequence seeded by `seed`.
pub fn realization_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn bin_psd(spec: &NoiseSpectrum, omega: f64) -> Result<f64> {
    match (spec, evaluate_psd(spec, omega)) {
        (NoiseSpectrum::Custom(_), Err(Error::OutOfTableRange { .. })) => Ok(0.0),
        (_, r) => r,
    }
}

pub fn synthesize_noise(spec: &NoiseSpectrum, grid: &SimulationGrid) -> Result<NoiseRealization> {
    synthesize_noise_indexed(spec, grid, 0)
}

/// Realization number `index` of the ensemble defined by `grid.seed`.
/// The DC bin is always zero; tabulated spectra are zero outside their table.
pub fn synthesize_noise_indexed(spec: &NoiseSpectrum, grid: &SimulationGrid, index: u64) -> Result<NoiseRealization> {
    spec.validate()?;
    let n = grid.n;
    let mut rng = realization_rng(grid.seed, index);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    let scale = n as f64 / grid.dt;
    for k in 1..n / 2 {
        let w = grid.omega(k);
        let (g1, g2): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
        let weight = grid.band_weight(w);
        if weight == 0.0 {
            continue;
        }
        let amp = (scale * weight * bin_psd(spec, w)?).sqrt() * std::f64::consts::FRAC_1_SQRT_2;
        let c = Complex64::new(g1, g2) * amp;
        coeffs[k] = c;
        coeffs[n - k] = c.conj();
    }
    let g: f64 = rng.sample(StandardNormal);
    let w = grid.omega(n / 2).abs();
    let weight = grid.band_weight(w);
    if weight > 0.0 {
        coeffs[n / 2] = Complex64::new((scale * weight * bin_psd(spec, w)?).sqrt() * g, 0.0);
    }
    let mut buf = coeffs.clone();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let values = buf.iter().map(|c| c.re / n as f64).collect();
    Ok(NoiseRealization {
        values,
        coefficients: coeffs,
        grid: *grid,
        index,
    })
}
