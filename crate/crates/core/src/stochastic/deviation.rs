//! Noise-driven deviations from the classical arm trajectories.
//!
//! Each arm obeys `δẍ + ω0² δx = −(C_j/m) δη(t) (2cos ω0t − 1)` with
//! `δx(0) = δẋ(0) = 0`. Two independent solvers are provided: a spectral one
//! working on the DFT of the drive, and a direct quadrature of the Green's
//! function integral used as its oracle.

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::synthesis::NoiseRealization;
use crate::error::Result;
use crate::physics::{Arm, DerivedQuantities, ExperimentParams};

/// Deviation of one arm on the realization's grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmDeviation {
    /// `δx(t_k)` [m]
    pub dx: Vec<f64>,
    /// `δp(t_k) = m δẋ(t_k)` [kg m s⁻¹]
    pub dp: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryDeviation {
    pub dt: f64,
    pub dx_right: Vec<f64>,
    pub dx_left: Vec<f64>,
    pub dp_right: Vec<f64>,
    pub dp_left: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Frequency,
    GreensFunction,
}

impl TrajectoryDeviation {
    pub fn compute(
        real: &NoiseRealization,
        dq: &DerivedQuantities,
        params: &ExperimentParams,
        solver: Solver,
    ) -> Result<Self> {
        let solve = |arm| match solver {
            Solver::Frequency => deviation_freq(real, dq, params, arm),
            Solver::GreensFunction => deviation_time_oracle(real, dq, params, arm),
        };
        let (r, l) = (solve(Arm::Right)?, solve(Arm::Left)?);
        Ok(Self {
            dt: real.grid.dt,
            dx_right: r.dx,
            dx_left: l.dx,
            dp_right: r.dp,
            dp_left: l.dp,
        })
    }

    pub fn len(&self) -> usize {
        self.dx_right.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dx_right.is_empty()
    }

    /// `δx_R − δx_L`
    pub fn separation(&self) -> Vec<f64> {
        self.dx_right.iter().zip(&self.dx_left).map(|(r, l)| r - l).collect()
    }

    /// `max |δx_R − δx_L|` over the first `samples` points.
    pub fn max_separation(&self, samples: usize) -> f64 {
        self.dx_right
            .iter()
            .zip(&self.dx_left)
            .take(samples)
            .map(|(r, l)| (r - l).abs())
            .fold(0.0, f64::max)
    }
}

/// `δη(t)(2cos ω0t − 1)`
fn drive(real: &NoiseRealization, omega0: f64) -> Vec<f64> {
    real.values
        .iter()
        .enumerate()
        .map(|(k, &v)| v * (2.0 * (omega0 * real.grid.time(k)).cos() - 1.0))
        .collect()
}

/// Spectral solution. The periodic particular solution is read off bin by bin;
/// bins exactly at `±ω0` carry the secular response `t·e^{±iω0t}` in closed
/// form; a free oscillation then restores `δx(0) = δẋ(0) = 0`.
pub fn deviation_freq(
    real: &NoiseRealization,
    dq: &DerivedQuantities,
    params: &ExperimentParams,
    arm: Arm,
) -> Result<ArmDeviation> {
    let grid = &real.grid;
    grid.validate_for(dq)?;
    let n = grid.n;
    let w0 = dq.omega0;
    let gain = -dq.force_coefficient(arm) / params.mass;

    let mut f: Vec<Complex64> = drive(real, w0).into_iter().map(|v| Complex64::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut f);

    let mut x = vec![Complex64::new(0.0, 0.0); n];
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    // secular amplitudes a for t·e^{iωt} at the resonant bins
    let mut secular: Vec<(f64, Complex64)> = Vec::new();
    let tol = 1e-9 * w0;
    for k in 0..n {
        let w = grid.omega(k);
        if (w.abs() - w0).abs() < tol {
            secular.push((w, gain * f[k] / (n as f64) / (Complex64::i() * 2.0 * w)));
            continue;
        }
        x[k] = gain * f[k] / (w0 * w0 - w * w);
        if k != n / 2 {
            v[k] = Complex64::i() * w * x[k];
        }
    }
    let inverse = planner.plan_fft_inverse(n);
    inverse.process(&mut x);
    inverse.process(&mut v);
    let mut xp: Vec<f64> = x.iter().map(|c| c.re / n as f64).collect();
    let mut vp: Vec<f64> = v.iter().map(|c| c.re / n as f64).collect();
    for (k, (xk, vk)) in xp.iter_mut().zip(vp.iter_mut()).enumerate() {
        let t = grid.time(k);
        for &(w, a) in &secular {
            let e = Complex64::from_polar(1.0, w * t);
            *xk += (a * t * e).re;
            *vk += (a * e * (1.0 + Complex64::i() * w * t)).re;
        }
    }
    let (x0, v0) = (xp[0], vp[0]);
    let mut dx = Vec::with_capacity(n);
    let mut dp = Vec::with_capacity(n);
    for k in 0..n {
        let (s, c) = (w0 * grid.time(k)).sin_cos();
        dx.push(xp[k] - x0 * c - v0 / w0 * s);
        dp.push(params.mass * (vp[k] + x0 * w0 * s - v0 * c));
    }
    Ok(ArmDeviation { dx, dp })
}

/// Running integrals `∫₀^{t_k} y dt` on a uniform grid, third order per step.
fn cumulative(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let mut out = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let step = if i + 2 < n {
            h / 12.0 * (5.0 * y[i] + 8.0 * y[i + 1] - y[i + 2])
        } else if i >= 1 {
            h / 12.0 * (-y[i - 1] + 8.0 * y[i] + 5.0 * y[i + 1])
        } else {
            0.5 * h * (y[i] + y[i + 1])
        };
        out[i + 1] = out[i] + step;
    }
    out
}

/// Direct quadrature of
/// `δx(t) = −(C/(mω0)) ∫₀ᵗ (2cos ω0t' − 1) sin(ω0(t − t')) δη(t') dt'` and
/// `δp(t) = −C ∫₀ᵗ (2cos ω0t' − 1) cos(ω0(t − t')) δη(t') dt'`,
/// with the kernel split into `sin ω0t·∫cos − cos ω0t·∫sin`.
pub fn deviation_time_oracle(
    real: &NoiseRealization,
    dq: &DerivedQuantities,
    params: &ExperimentParams,
    arm: Arm,
) -> Result<ArmDeviation> {
    let grid = &real.grid;
    grid.validate_for(dq)?;
    let w0 = dq.omega0;
    let c = dq.force_coefficient(arm);
    let f = drive(real, w0);
    let phases: Vec<(f64, f64)> = (0..grid.n).map(|k| (w0 * grid.time(k)).sin_cos()).collect();
    let fc: Vec<f64> = f.iter().zip(&phases).map(|(v, (_, co))| v * co).collect();
    let fs: Vec<f64> = f.iter().zip(&phases).map(|(v, (si, _))| v * si).collect();
    let ic = cumulative(&fc, grid.dt);
    let is = cumulative(&fs, grid.dt);
    let mut dx = Vec::with_capacity(grid.n);
    let mut dp = Vec::with_capacity(grid.n);
    for k in 0..grid.n {
        let (s, co) = phases[k];
        dx.push(-c / (params.mass * w0) * (s * ic[k] - co * is[k]));
        dp.push(-c * (co * ic[k] + s * is[k]));
    }
    Ok(ArmDeviation { dx, dp })
}

/// Relative L² distance `‖a − b‖/‖b‖` over the first `samples` points.
pub fn relative_l2(a: &[f64], b: &[f64], samples: usize) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b).take(samples) {
        num += (x - y) * (x - y);
        den += y * y;
    }
    (num / den).sqrt()
}

/// Closed-form deviation for a constant gradient offset `c`,
/// `(C c/(mω0²))(1 − cos ω0t) − (C c/(mω0)) t sin ω0t`.
pub fn constant_offset_deviation(dq: &DerivedQuantities, params: &ExperimentParams, arm: Arm, c: f64, t: f64) -> f64 {
    let w0 = dq.omega0;
    let k = dq.force_coefficient(arm) * c / params.mass;
    k / (w0 * w0) * (1.0 - (w0 * t).cos()) - k / w0 * t * (w0 * t).sin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::derive_quantities;
    use crate::spectra::NoiseSpectrum;
    use crate::stochastic::grid::SimulationGrid;
    use crate::stochastic::synthesis::synthesize_noise_indexed;

    fn setup() -> (ExperimentParams, DerivedQuantities, SimulationGrid) {
        let p = ExperimentParams::table1(1e-15);
        let dq = derive_quantities(&p).unwrap();
        let g = SimulationGrid::for_loops(&dq, 16, 512, 77).unwrap();
        (p, dq, g)
    }

    #[test]
    fn zero_noise_zero_deviation() {
        let (p, dq, g) = setup();
        let r = NoiseRealization::zeros(g);
        for solver in [Solver::Frequency, Solver::GreensFunction] {
            let d = TrajectoryDeviation::compute(&r, &dq, &p, solver).unwrap();
            assert!(d.dx_right.iter().chain(&d.dp_left).all(|&v| v == 0.0));
        }
    }

    #[test]
    fn oracle_matches_constant_offset_solution() {
        let (p, dq, g) = setup();
        let c = 1e-6;
        let r = NoiseRealization::from_values(vec![c; g.n], g).unwrap();
        for arm in Arm::BOTH {
            let d = deviation_time_oracle(&r, &dq, &p, arm).unwrap();
            let exact: Vec<f64> = (0..512).map(|k| constant_offset_deviation(&dq, &p, arm, c, g.time(k))).collect();
            let err = relative_l2(&d.dx, &exact, 512);
            assert!(err < 1e-4, "{err:e}");
        }
    }

    #[test]
    fn oracle_satisfies_equation_of_motion() {
        let (p, dq, g) = setup();
        let r = synthesize_noise_indexed(&NoiseSpectrum::white(2.9e-6), &g, 1).unwrap();
        let d = deviation_time_oracle(&r, &dq, &p, Arm::Right).unwrap();
        let h = g.dt;
        let c = dq.force_coefficient(Arm::Right);
        let drive: Vec<f64> = (0..g.n)
            .map(|k| c * r.values[k] * (2.0 * (dq.omega0 * g.time(k)).cos() - 1.0))
            .collect();
        let scale = drive.iter().take(600).map(|v| v.abs()).fold(0.0, f64::max);
        let mut worst: f64 = 0.0;
        for k in 1..600 {
            let acc = (d.dx[k + 1] - 2.0 * d.dx[k] + d.dx[k - 1]) / (h * h);
            let res = p.mass * acc + p.mass * dq.omega0 * dq.omega0 * d.dx[k] + drive[k];
            worst = worst.max(res.abs() / scale);
        }
        // second difference at the band edge, (ω h)²/12 with ω h = 2π/16
        assert!(worst < 1.5e-2, "{worst:e}");
    }

    #[test]
    fn solvers_agree_for_both_families() {
        let (p, dq, g) = setup();
        let specs = [NoiseSpectrum::white(2.9e-6), NoiseSpectrum::flicker(0.7e-13, 1.0, &p)];
        for s in &specs {
            for seed in 0..3 {
                let r = synthesize_noise_indexed(s, &g, seed).unwrap();
                for arm in Arm::BOTH {
                    let a = deviation_freq(&r, &dq, &p, arm).unwrap();
                    let b = deviation_time_oracle(&r, &dq, &p, arm).unwrap();
                    assert!(relative_l2(&a.dx, &b.dx, 513) < 1e-3);
                    assert!(relative_l2(&a.dp, &b.dp, 513) < 1e-3);
                    assert_eq!(a.dx[0], 0.0);
                    assert!(a.dp[0].abs() < 1e-12 * a.dp.iter().map(|v| v.abs()).fold(0.0, f64::max));
                }
            }
        }
    }

    #[test]
    fn separation_depends_only_on_spin_part() {
        let (p, dq, g) = setup();
        let r = synthesize_noise_indexed(&NoiseSpectrum::white(2.9e-6), &g, 4).unwrap();
        let d1 = TrajectoryDeviation::compute(&r, &dq, &p, Solver::Frequency).unwrap();
        let mut q = p;
        q.b0 = 0.7;
        let dq2 = derive_quantities(&q).unwrap();
        let d2 = TrajectoryDeviation::compute(&r, &dq2, &q, Solver::Frequency).unwrap();
        let (s1, s2) = (d1.separation(), d2.separation());
        let scale = s1.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for (a, b) in s1.iter().zip(&s2) {
            assert!((a - b).abs() < 1e-6 * scale);
        }
        assert!((d1.dx_right[300] - d2.dx_right[300]).abs() > 1.0 * scale);
    }
}
