//! Transfer functions weighting the gradient-noise spectrum.
//!
//! `F_HO(ξ) = sin²(πξ) · [(ξ² + 2) / (ξ(ξ² − 4)(ξ² − 1))]²` is the response of the
//! accumulated phase to noise at `ξ = ω/ω0` along the closed one-loop path.
//! `F_dev` is the analogous weight of the trajectory-deviation terms.
//! Both are even in `ξ`; the apparent poles at `ξ = 2` are cancelled by the
//! zeros of `sin²(πξ)`.
//!
//! Numeric transfer functions are windowed Fourier intensities of sampled arm
//! trajectories, evaluated by direct trapezoid quadrature at any `ω`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::physics::{classical_trajectory, Arm, DerivedQuantities, ExperimentParams};

/// Radius around ξ = 1, 2 inside which `sin(πε)/ε` is taken from its series.
pub const PATCH_RADIUS: f64 = 1e-4;

/// Minimum samples per period of the highest requested frequency.
pub const MIN_SAMPLES_PER_PERIOD: usize = 16;

/// `sin(πε)/ε`, with a short series close to zero.
fn sinc_pi(eps: f64) -> f64 {
    if eps.abs() < PATCH_RADIUS {
        let e2 = PI * PI * eps * eps;
        PI * (1.0 - e2 / 6.0 + e2 * e2 / 120.0)
    } else {
        (PI * eps).sin() / eps
    }
}

/// Splits `x ≥ 0` into its nearest integer and a remainder in [-½, ½].
/// The subtraction is exact, so `sin(π·rem)` keeps full relative precision.
fn reduce(x: f64) -> (f64, f64) {
    let n = x.round();
    (n, x - n)
}

fn check_xi(xi: f64) -> Result<f64> {
    if !xi.is_finite() {
        return Err(Error::invalid("xi", format!("must be finite, got {xi}")));
    }
    let x = xi.abs();
    if x == 0.0 {
        return Err(Error::DivergentAtDc);
    }
    Ok(x)
}

/// One-loop harmonic-oscillator transfer function.
///
/// The removable points ξ = 1 and ξ = 2 return π²/4 and π²/16. At ξ = 0 the
/// function is reported as divergent even though its limit is finite; the
/// bare integrand `1/ξ²` of the unsimplified kernel is what diverges there.
pub fn f_ho(xi: f64) -> Result<f64> {
    let x = check_xi(xi)?;
    let (n, eps) = reduce(x);
    let x2 = x * x;
    let num = x2 + 2.0;
    let amp = if n == 1.0 {
        sinc_pi(eps) * num / (x * (x2 - 4.0) * (x + 1.0))
    } else if n == 2.0 {
        sinc_pi(eps) * num / (x * (x + 2.0) * (x2 - 1.0))
    } else {
        (PI * eps).sin() * num / (x * (x2 - 4.0) * (x2 - 1.0))
    };
    Ok(amp * amp)
}

/// `F_HO` with the bracket written in partial fractions,
/// `1/(2ξ) − 1/(2(ξ−1)) − 1/(2(ξ+1)) + 1/(4(ξ−2)) + 1/(4(ξ+2))`.
pub fn f_ho_partial_fraction_form(xi: f64) -> Result<f64> {
    let x = check_xi(xi)?;
    let (_, eps) = reduce(x);
    let b = 0.5 / x - 0.5 / (x - 1.0) - 0.5 / (x + 1.0) + 0.25 / (x - 2.0) + 0.25 / (x + 2.0);
    let s = (PI * eps).sin();
    Ok(s * s * b * b)
}

/// `F_HO` with `sin²(πξ)` written as `(1 − cos 2πξ)/2`.
pub fn f_ho_cosine_form(xi: f64) -> Result<f64> {
    let x = check_xi(xi)?;
    let (_, eps) = reduce(x);
    let b = (x * x + 2.0) / (x * (x * x - 4.0) * (x * x - 1.0));
    Ok(0.5 * one_minus_cos(2.0 * PI * eps) * b * b)
}

/// `1 − cos(y)` without cancellation for small `y`.
fn one_minus_cos(y: f64) -> f64 {
    if y.abs() < 1.0 {
        let y2 = y * y;
        let mut term = y2 / 2.0;
        let mut sum = term;
        let mut k = 2.0;
        while term.abs() > 1e-18 * sum {
            term *= -y2 / ((2.0 * k - 1.0) * (2.0 * k));
            sum += term;
            k += 1.0;
        }
        sum
    } else {
        1.0 - y.cos()
    }
}

/// Transfer function of the trajectory-deviation terms,
/// `sin²(πξ)(ξ⁴ − 2ξ² + 4)² / (ξ²(ξ² − 1)⁴(ξ² − 4)²)`.
///
/// The point ξ = 2 is removable (limit π²/36). At ξ = 1 the fourth-order
/// denominator zero beats the second-order zero of `sin²(πξ)`, leaving a
/// double pole `≈ π²/(16(ξ−1)²)`; exactly ξ = 1 is an error and values
/// nearby are large but accurate.
pub fn f_dev(xi: f64) -> Result<f64> {
    let x = check_xi(xi)?;
    let (n, eps) = reduce(x);
    let x2 = x * x;
    let num = x2 * x2 - 2.0 * x2 + 4.0;
    let amp = if n == 1.0 {
        if eps == 0.0 {
            return Err(Error::NonRemovableSingularity { xi: 1.0 });
        }
        let xp = x + 1.0;
        sinc_pi(eps) * num / (x * xp * xp * (x2 - 4.0)) / eps
    } else if n == 2.0 {
        let xm = x2 - 1.0;
        sinc_pi(eps) * num / (x * xm * xm * (x + 2.0))
    } else {
        let xm = x2 - 1.0;
        (PI * eps).sin() * num / (x * xm * xm * (x2 - 4.0))
    };
    Ok(amp * amp)
}

/// `sup_{ξ ≥ X} F(ξ)·ξ⁶` bounds for the large-ξ tail, valid for `X ≥ 3`,
/// where both envelopes are decreasing.
pub(crate) fn ho_envelope_coefficient(x: f64) -> f64 {
    let u = 1.0 / (x * x);
    (1.0 + 2.0 * u) / ((1.0 - 4.0 * u) * (1.0 - u))
}

pub(crate) fn dev_envelope_coefficient(x: f64) -> f64 {
    let u = 1.0 / (x * x);
    (1.0 - 2.0 * u + 4.0 * u * u) / ((1.0 - u) * (1.0 - u) * (1.0 - 4.0 * u))
}

/// Which pair of arm signals enters a numeric transfer function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArmCombination {
    /// `g_R − g_L`
    Difference,
    /// `g_R + g_L`
    Sum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryPower {
    /// `g = x`
    Linear,
    /// `g = x²`
    Quadratic,
}

/// Both arm positions on a shared uniform grid `t_k = t0 + k·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledTrajectories {
    pub t0: f64,
    pub dt: f64,
    pub right: Vec<f64>,
    pub left: Vec<f64>,
}

impl SampledTrajectories {
    pub fn new(t0: f64, dt: f64, right: Vec<f64>, left: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Grid(format!("dt must be positive, got {dt}")));
        }
        if right.len() != left.len() {
            return Err(Error::Grid(format!(
                "arm sample counts differ: {} vs {}",
                right.len(),
                left.len()
            )));
        }
        if right.len() < 2 {
            return Err(Error::Grid("need at least two samples".into()));
        }
        Ok(Self { t0, dt, right, left })
    }

    /// Closed-form trajectories over `loops` trap periods, `per_loop` intervals each.
    pub fn classical(dq: &DerivedQuantities, params: &ExperimentParams, loops: usize, per_loop: usize) -> Self {
        let n = loops * per_loop + 1;
        let dt = dq.t_exp / per_loop as f64;
        let sample = |arm| (0..n).map(|k| classical_trajectory(dq, params, arm, k as f64 * dt)).collect();
        Self {
            t0: 0.0,
            dt,
            right: sample(Arm::Right),
            left: sample(Arm::Left),
        }
    }

    pub fn len(&self) -> usize {
        self.right.len()
    }

    pub fn is_empty(&self) -> bool {
        self.right.is_empty()
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + (self.len() - 1) as f64 * self.dt
    }

    pub fn shifted(&self, dt: f64) -> Self {
        Self {
            t0: self.t0 + dt,
            ..self.clone()
        }
    }

    pub fn combine(&self, combination: ArmCombination, power: TrajectoryPower) -> Vec<f64> {
        let sign = match combination {
            ArmCombination::Difference => -1.0,
            ArmCombination::Sum => 1.0,
        };
        self.right
            .iter()
            .zip(&self.left)
            .map(|(&r, &l)| match power {
                TrajectoryPower::Linear => r + sign * l,
                TrajectoryPower::Quadratic => r * r + sign * l * l,
            })
            .collect()
    }

    /// Index range `[i, j]` of samples inside `window`, snapping ends that sit
    /// within a millionth of a step from a grid point.
    pub fn window_indices(&self, window: (f64, f64)) -> Result<(usize, usize)> {
        let (ti, tf) = window;
        if !(tf > ti) {
            return Err(Error::Grid(format!("window end {tf} must exceed start {ti}")));
        }
        let tol = 1e-6;
        let fi = (ti - self.t0) / self.dt;
        let ff = (tf - self.t0) / self.dt;
        let last = (self.len() - 1) as f64;
        if fi < -tol || ff > last + tol {
            return Err(Error::Grid(format!(
                "window [{ti:e}, {tf:e}] exceeds sampled span [{:e}, {:e}]",
                self.t0,
                self.t_end()
            )));
        }
        let i = (fi - tol).ceil().max(0.0) as usize;
        let j = ((ff + tol).floor().min(last)) as usize;
        if j <= i {
            return Err(Error::Grid("window contains fewer than two samples".into()));
        }
        Ok((i, j))
    }
}

/// Checks that `omega` has at least [`MIN_SAMPLES_PER_PERIOD`] samples per period.
pub fn check_resolution(omega: f64, dt: f64) -> Result<()> {
    let w = omega.abs();
    if w == 0.0 {
        return Ok(());
    }
    let spp = 2.0 * PI / (w * dt);
    if spp < MIN_SAMPLES_PER_PERIOD as f64 {
        return Err(Error::Aliasing {
            omega,
            samples_per_period: spp,
            required: MIN_SAMPLES_PER_PERIOD,
        });
    }
    Ok(())
}

/// Trapezoid estimate of `∫ g(t) e^{iωt} dt` over samples `i..=j` of a uniform grid.
pub fn windowed_fourier(signal: &[f64], t0: f64, dt: f64, (i, j): (usize, usize), omega: f64) -> Result<Complex64> {
    check_resolution(omega, dt)?;
    let step = Complex64::from_polar(1.0, omega * dt);
    let mut phase = Complex64::from_polar(1.0, omega * (t0 + i as f64 * dt));
    let mut acc = Complex64::new(0.0, 0.0);
    // The phasor is re-anchored periodically to keep rotation error at rounding level.
    for (k, &g) in signal[i..=j].iter().enumerate() {
        if k > 0 && k % 256 == 0 {
            phase = Complex64::from_polar(1.0, omega * (t0 + (i + k) as f64 * dt));
        }
        let w = if k == 0 || i + k == j { 0.5 } else { 1.0 };
        acc += phase * (w * g);
        phase *= step;
    }
    Ok(acc * dt)
}

/// A transfer function built from sampled trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericTransfer {
    pub trajectories: SampledTrajectories,
    pub combination: ArmCombination,
    pub power: TrajectoryPower,
    pub window: (f64, f64),
}

impl NumericTransfer {
    pub fn new(
        trajectories: SampledTrajectories,
        combination: ArmCombination,
        power: TrajectoryPower,
        window: (f64, f64),
    ) -> Result<Self> {
        trajectories.window_indices(window)?;
        Ok(Self {
            trajectories,
            combination,
            power,
            window,
        })
    }

    pub fn amplitude(&self, omega: f64) -> Result<Complex64> {
        let tr = &self.trajectories;
        let g = tr.combine(self.combination, self.power);
        windowed_fourier(&g, tr.t0, tr.dt, tr.window_indices(self.window)?, omega)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TransferKind {
    Ho,
    Dev,
    Numeric(NumericTransfer),
}

/// `|∫_{t_i}^{t_f} g(t) e^{iωt} dt|²` for the configured arm signal `g`.
/// Units are m² s² (linear) or m⁴ s² (quadratic).
pub fn numeric_transfer(nt: &NumericTransfer, omega: f64) -> Result<f64> {
    Ok(nt.amplitude(omega)?.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::derive_quantities;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    // Reference values from 50-digit arbitrary-precision evaluation.
    const HO_REF: [(f64, f64); 7] = [
        (0.5, 2.56),
        (0.25, 2.4974351221970269589),
        (1.5, 1.6776417233560090703),
        (2.5, 0.078044847568657092467),
        (3.7, 0.00077837150720768937223),
        (0.01, 2.467452942119342323),
        (7.3, 5.652073864761777132e-6),
    ];
    const DEV_REF: [(f64, f64); 7] = [
        (0.5, 11.409382716049382716),
        (0.25, 10.050376103692505809),
        (1.5, 1.2373913832199546485),
        (2.5, 0.038859345871547577627),
        (3.7, 0.00052831953472209799735),
        (0.01, 9.8698119165319498438),
        (7.3, 5.0664577107109220718e-6),
    ];

    #[test]
    fn ho_matches_high_precision_reference() {
        for (xi, v) in HO_REF {
            assert!(rel(f_ho(xi).unwrap(), v) < 1e-13, "ξ = {xi}");
        }
    }

    #[test]
    fn dev_matches_high_precision_reference() {
        for (xi, v) in DEV_REF {
            assert!(rel(f_dev(xi).unwrap(), v) < 1e-13, "ξ = {xi}");
        }
    }

    #[test]
    fn removable_points() {
        assert!(rel(f_ho(1.0).unwrap(), PI * PI / 4.0) < 1e-15);
        assert!(rel(f_ho(2.0).unwrap(), PI * PI / 16.0) < 1e-15);
        assert_eq!(f_ho(3.0).unwrap(), 0.0);
        assert_eq!(f_dev(3.0).unwrap(), 0.0);
        assert!(rel(f_dev(2.0).unwrap(), 0.27415567780803773941) < 1e-15);
        assert!(rel(PI * PI / 36.0, 0.27415567780803773941) < 1e-15);
    }

    #[test]
    fn limit_oracle_near_one() {
        // high-precision values at 1 ∓ 1e-6
        assert!(rel(f_ho(1.0 - 1e-6).unwrap(), 2.4674019227377668759) < 1e-12);
        assert!(rel(f_ho(1.0 + 1e-6).unwrap(), 2.4674002778037000710) < 1e-12);
        for xi in [1.0 - 1e-6, 1.0 + 1e-6, 2.0 - 1e-6, 2.0 + 1e-6] {
            assert!(rel(f_ho(xi).unwrap(), f_ho(xi.round()).unwrap()) < 1e-5);
        }
        for xi in [1.0 - 1e-8, 1.0 + 1e-8, 2.0 - 1e-8, 2.0 + 1e-8] {
            assert!(rel(f_ho(xi).unwrap(), f_ho(xi.round()).unwrap()) < 1e-4);
        }
    }

    #[test]
    fn patch_boundary_is_seamless() {
        for c in [1.0, 2.0] {
            let inside = f_ho(c + 0.999_999 * PATCH_RADIUS).unwrap();
            let outside = f_ho(c + 1.000_001 * PATCH_RADIUS).unwrap();
            assert!(rel(inside, outside) < 1e-9, "{inside} {outside}");
        }
    }

    #[test]
    fn dev_double_pole_at_one() {
        assert_eq!(f_dev(1.0), Err(Error::NonRemovableSingularity { xi: 1.0 }));
        assert!(rel(f_dev(1.0 - 1e-6).unwrap(), 616851919970.09532720) < 1e-11);
        assert!(rel(f_dev(1.0 + 1e-6).unwrap(), 616848630238.92981097) < 1e-11);
        for eps in [1e-3, 1e-5, 1e-7] {
            let v = f_dev(1.0 + eps).unwrap() * 16.0 * eps * eps / (PI * PI);
            assert!((v - 1.0).abs() < 3.0 * eps, "ε = {eps}: {v}");
        }
    }

    #[test]
    fn dc_is_an_error() {
        assert_eq!(f_ho(0.0), Err(Error::DivergentAtDc));
        assert_eq!(f_dev(0.0), Err(Error::DivergentAtDc));
    }

    #[test]
    fn algebraic_forms_agree() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        let mut n = 0;
        while n < 1000 {
            let xi: f64 = rng.random_range(0.01..20.0);
            if (xi - 1.0).abs() < 1e-3 || (xi - 2.0).abs() < 1e-3 {
                continue;
            }
            n += 1;
            let a = f_ho(xi).unwrap();
            let b = f_ho_partial_fraction_form(xi).unwrap();
            let c = f_ho_cosine_form(xi).unwrap();
            if a == 0.0 {
                continue;
            }
            assert!(rel(b, a) < 1e-12, "ξ = {xi}: {a:e} {b:e}");
            assert!(rel(c, a) < 1e-12, "ξ = {xi}: {a:e} {c:e}");
        }
    }

    #[test]
    fn tail_decay() {
        let mut sup: f64 = 0.0;
        for k in 0..=3000 {
            let xi = 10f64.powf(1.0 + 3.0 * k as f64 / 3000.0);
            sup = sup.max(f_ho(xi).unwrap() * xi.powi(4));
            let e = ho_envelope_coefficient(xi) / xi.powi(3);
            assert!(f_ho(xi).unwrap() <= e * e * (1.0 + 1e-12));
            let e = dev_envelope_coefficient(xi) / xi.powi(3);
            assert!(f_dev(xi).unwrap() <= e * e * (1.0 + 1e-12));
        }
        assert!(sup < 0.011, "{sup}");
    }

    proptest! {
        #[test]
        fn even_and_non_negative(xi in 1e-3f64..50.0) {
            prop_assume!((xi - 1.0).abs() > 1e-9);
            let (a, b) = (f_ho(xi).unwrap(), f_dev(xi).unwrap());
            prop_assert!(a >= 0.0 && b >= 0.0);
            prop_assert_eq!(a, f_ho(-xi).unwrap());
            prop_assert_eq!(b, f_dev(-xi).unwrap());
        }
    }

    fn loop_setup(per_loop: usize) -> (ExperimentParams, DerivedQuantities, SampledTrajectories) {
        let p = ExperimentParams::table1(1e-15);
        let dq = derive_quantities(&p).unwrap();
        let tr = SampledTrajectories::classical(&dq, &p, 1, per_loop);
        (p, dq, tr)
    }

    #[test]
    fn identical_arms_have_no_difference_transfer() {
        let (_, dq, tr) = loop_setup(1024);
        let same = SampledTrajectories::new(0.0, tr.dt, tr.right.clone(), tr.right.clone()).unwrap();
        for power in [TrajectoryPower::Linear, TrajectoryPower::Quadratic] {
            let nt = NumericTransfer::new(same.clone(), ArmCombination::Difference, power, (0.0, dq.t_exp)).unwrap();
            for xi in [0.3, 1.0, 2.7, 9.1] {
                assert_eq!(numeric_transfer(&nt, xi * dq.omega0).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn sum_linear_matches_closed_form() {
        // |∫₀ᵀ (cos ω0t − 1) e^{iωt} dt|² = 4 sin²(πξ) / (ω0² ξ² (ξ² − 1)²)
        let (p, dq, tr) = loop_setup(8192);
        let nt = NumericTransfer::new(tr, ArmCombination::Sum, TrajectoryPower::Linear, (0.0, dq.t_exp)).unwrap();
        let scale = (dq.c_right + dq.c_left) * dq.eta0 / (p.mass * dq.omega0 * dq.omega0);
        let mut xi: f64 = 0.1;
        while xi <= 10.0 {
            let frac = xi - xi.round();
            if frac.abs() > 0.1 {
                let s = (PI * xi).sin();
                let closed = scale * scale * 4.0 * s * s
                    / (dq.omega0 * dq.omega0 * xi * xi * (xi * xi - 1.0).powi(2));
                let v = numeric_transfer(&nt, xi * dq.omega0).unwrap();
                assert!(rel(v, closed) < 1e-3, "ξ = {xi}: {v:e} vs {closed:e}");
            }
            xi += 0.137;
        }
    }

    #[test]
    fn global_time_shift_is_invisible() {
        let (_, dq, tr) = loop_setup(2048);
        let shift = 0.37 * dq.t_exp;
        let a = NumericTransfer::new(tr.clone(), ArmCombination::Difference, TrajectoryPower::Quadratic, (0.0, dq.t_exp)).unwrap();
        let b = NumericTransfer::new(
            tr.shifted(shift),
            ArmCombination::Difference,
            TrajectoryPower::Quadratic,
            (shift, shift + dq.t_exp),
        )
        .unwrap();
        for xi in [0.4, 1.3, 5.5] {
            let (x, y) = (numeric_transfer(&a, xi * dq.omega0).unwrap(), numeric_transfer(&b, xi * dq.omega0).unwrap());
            assert!(rel(y, x) < 1e-10);
        }
    }

    #[test]
    fn under_resolved_grid_reports_frequency() {
        let (_, dq, tr) = loop_setup(64);
        let nt = NumericTransfer::new(tr, ArmCombination::Sum, TrajectoryPower::Linear, (0.0, dq.t_exp)).unwrap();
        assert!(numeric_transfer(&nt, 4.0 * dq.omega0).is_ok());
        match numeric_transfer(&nt, 5.0 * dq.omega0) {
            Err(Error::Aliasing { omega, required, .. }) => {
                assert_eq!(omega, 5.0 * dq.omega0);
                assert_eq!(required, 16);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_window_is_rejected() {
        let (_, dq, tr) = loop_setup(64);
        assert!(NumericTransfer::new(tr.clone(), ArmCombination::Sum, TrajectoryPower::Linear, (0.5, 0.5)).is_err());
        assert!(NumericTransfer::new(tr, ArmCombination::Sum, TrajectoryPower::Linear, (0.0, 2.0 * dq.t_exp)).is_err());
    }
}
