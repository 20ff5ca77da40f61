use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::physics::DerivedQuantities;

/// Uniform time grid for noise synthesis and trajectory deviations.
///
/// Sampled paths are periodic over `n·dt`, so bins sit at `ω_k = 2πk/(n·dt)`.
/// The optional band restricts the synthesized spectrum to
/// `[omega_low, omega_high]`; bins falling exactly on an edge get half weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationGrid {
    pub n: usize,
    pub dt: f64,
    pub seed: u64,
    pub omega_low: Option<f64>,
    pub omega_high: Option<f64>,
}

impl SimulationGrid {
    pub fn new(n: usize, dt: f64, seed: u64) -> Result<Self> {
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::Grid(format!("n = {n} must be a power of two ≥ 4")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Grid(format!("dt = {dt} must be positive")));
        }
        Ok(Self {
            n,
            dt,
            seed,
            omega_low: None,
            omega_high: None,
        })
    }

    /// `loops` trap periods with `per_loop` samples each, band-limited to an
    /// eighth of the Nyquist frequency.
    pub fn for_loops(dq: &DerivedQuantities, loops: usize, per_loop: usize, seed: u64) -> Result<Self> {
        let g = Self::new(loops * per_loop, dq.t_exp / per_loop as f64, seed)?;
        let nyquist = g.nyquist();
        Ok(g.with_band(None, Some(nyquist / 8.0)))
    }

    pub fn with_band(mut self, omega_low: Option<f64>, omega_high: Option<f64>) -> Self {
        self.omega_low = omega_low;
        self.omega_high = omega_high;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn duration(&self) -> f64 {
        self.n as f64 * self.dt
    }

    pub fn nyquist(&self) -> f64 {
        PI / self.dt
    }

    pub fn bin_spacing(&self) -> f64 {
        2.0 * PI / self.duration()
    }

    /// Signed angular frequency of FFT bin `k` (negative above `n/2`).
    pub fn omega(&self, k: usize) -> f64 {
        let k = k as i64;
        let n = self.n as i64;
        let signed = if k <= n / 2 { k } else { k - n };
        signed as f64 * self.bin_spacing()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    /// Weight of a bin at `|ω|` inside the band: 1, ½ on an edge, 0 outside.
    pub fn band_weight(&self, omega: f64) -> f64 {
        let w = omega.abs();
        let tol = 1e-9 * self.bin_spacing();
        let mut weight = 1.0;
        if let Some(lo) = self.omega_low {
            if w < lo - tol {
                return 0.0;
            }
            if (w - lo).abs() <= tol {
                weight *= 0.5;
            }
        }
        if let Some(hi) = self.omega_high {
            if w > hi + tol {
                return 0.0;
            }
            if (w - hi).abs() <= tol {
                weight *= 0.5;
            }
        }
        weight
    }

    /// Requires ≥ 64 samples per trap period and at least one full loop.
    pub fn validate_for(&self, dq: &DerivedQuantities) -> Result<()> {
        if self.dt > 2.0 * PI / (64.0 * dq.omega0) * (1.0 + 1e-12) {
            return Err(Error::Grid(format!(
                "dt = {:e} s gives {:.1} samples per trap period; need ≥ 64",
                self.dt,
                dq.t_exp / self.dt
            )));
        }
        if self.duration() < dq.t_exp * (1.0 - 1e-12) {
            return Err(Error::Grid(format!(
                "grid spans {:e} s, shorter than one loop ({:e} s)",
                self.duration(),
                dq.t_exp
            )));
        }
        Ok(())
    }

    /// Index of the sample at time `t`, which must sit on the grid.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let f = t / self.dt;
        let k = f.round();
        if (f - k).abs() > 1e-6 || k < 0.0 || k as usize > self.n {
            return Err(Error::Grid(format!("t = {t:e} s is not a grid time")));
        }
        Ok(k as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{derive_quantities, ExperimentParams};

    #[test]
    fn bins_and_band() {
        let g = SimulationGrid::new(8, 0.5, 1).unwrap().with_band(Some(PI / 2.0), Some(PI));
        assert_eq!(g.omega(0), 0.0);
        assert!((g.omega(1) - PI / 2.0).abs() < 1e-15);
        assert!((g.omega(7) + PI / 2.0).abs() < 1e-15);
        assert!((g.omega(4) - g.nyquist()).abs() < 1e-15);
        assert_eq!(g.band_weight(g.omega(1)), 0.5);
        assert_eq!(g.band_weight(g.omega(2)), 0.5);
        assert_eq!(g.band_weight(g.omega(3)), 0.0);
        assert_eq!(g.band_weight(3.0), 1.0);
        assert_eq!(g.band_weight(0.0), 0.0);
        assert_eq!(g.band_weight(4.0), 0.0);
    }

    #[test]
    fn loop_grid_resolves_trap() {
        let p = ExperimentParams::table1(1e-15);
        let dq = derive_quantities(&p).unwrap();
        let g = SimulationGrid::for_loops(&dq, 16, 512, 3).unwrap();
        g.validate_for(&dq).unwrap();
        assert!((g.omega(16) - dq.omega0).abs() < 1e-9 * dq.omega0);
        assert_eq!(g.index_of(dq.t_exp).unwrap(), 512);
        let coarse = SimulationGrid::for_loops(&dq, 1, 32, 3).unwrap();
        assert!(coarse.validate_for(&dq).is_err());
        assert!(SimulationGrid::new(100, 1.0, 0).is_err());
    }
}
