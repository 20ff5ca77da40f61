//! Welch spectral estimate, used to check synthesized paths against their
//! target spectrum. Normalized so that white noise of two-sided spectrum `S`
//! has expectation `S` in every bin.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct WelchEstimate {
    /// Angular frequency of each one-sided bin, `k = 0..=seg/2`.
    pub omega: Vec<f64>,
    pub psd: Vec<f64>,
    pub segments: usize,
}

/// Hann-windowed, 50 %-overlapping segments of length `seg` (a power of two).
pub fn welch(x: &[f64], dt: f64, seg: usize) -> Result<WelchEstimate> {
    if seg < 8 || !seg.is_power_of_two() || seg > x.len() {
        return Err(Error::Grid(format!(
            "segment length {seg} must be a power of two in [8, {}]",
            x.len()
        )));
    }
    let window: Vec<f64> = (0..seg)
        .map(|k| {
            let s = (std::f64::consts::PI * k as f64 / seg as f64).sin();
            s * s
        })
        .collect();
    let norm = dt / window.iter().map(|w| w * w).sum::<f64>();
    let fft = FftPlanner::new().plan_fft_forward(seg);
    let half = seg / 2;
    let mut psd = vec![0.0; half + 1];
    let mut segments = 0;
    let mut start = 0;
    let mut buf = vec![Complex64::new(0.0, 0.0); seg];
    while start + seg <= x.len() {
        for k in 0..seg {
            buf[k] = Complex64::new(x[start + k] * window[k], 0.0);
        }
        fft.process(&mut buf);
        for k in 0..=half {
            psd[k] += norm * buf[k].norm_sqr();
        }
        segments += 1;
        start += seg / 2;
    }
    for v in &mut psd {
        *v /= segments as f64;
    }
    let dw = 2.0 * std::f64::consts::PI / (seg as f64 * dt);
    Ok(WelchEstimate {
        omega: (0..=half).map(|k| k as f64 * dw).collect(),
        psd,
        segments,
    })
}

/// Element-wise mean of several estimates on the same bins.
pub fn average(estimates: &[WelchEstimate]) -> Result<WelchEstimate> {
    let first = estimates.first().ok_or_else(|| Error::Grid("no estimates to average".into()))?;
    let mut psd = vec![0.0; first.psd.len()];
    for e in estimates {
        if e.psd.len() != psd.len() {
            return Err(Error::Grid("estimates have different bin counts".into()));
        }
        for (a, b) in psd.iter_mut().zip(&e.psd) {
            *a += b;
        }
    }
    let n = estimates.len() as f64;
    psd.iter_mut().for_each(|v| *v /= n);
    Ok(WelchEstimate {
        omega: first.omega.clone(),
        psd,
        segments: estimates.iter().map(|e| e.segments).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;

    #[test]
    fn discrete_white_noise_level() {
        // i.i.d. samples of variance σ² have two-sided spectrum σ²·dt
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let dt = 1e-3;
        let x: Vec<f64> = (0..1 << 16).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();
        let e = welch(&x, dt, 256).unwrap();
        let mid: f64 = e.psd[10..118].iter().sum::<f64>() / 108.0;
        assert!((mid / (4.0 * dt) - 1.0).abs() < 0.03, "{mid}");
    }

    #[test]
    fn rejects_bad_segments() {
        assert!(welch(&[0.0; 64], 1.0, 48).is_err());
        assert!(welch(&[0.0; 64], 1.0, 128).is_err());
    }
}
