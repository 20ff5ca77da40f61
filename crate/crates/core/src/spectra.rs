//! Gradient-noise power spectral densities.
//!
//! `S(ω)` is two-sided in angular frequency and even: only `|ω|` matters.
//! Units are T² m⁻² s throughout. A white spectrum of amplitude `A` is
//! delta-correlated with `⟨δη(t)δη(t')⟩ = A² δ(t − t')`.

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::physics::DerivedQuantities;

/// Tabulated spectrum, sampled at strictly increasing angular frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdTable {
    omega: Vec<f64>,
    s: Vec<f64>,
}

impl PsdTable {
    pub fn new(omega: Vec<f64>, s: Vec<f64>) -> Result<Self> {
        if omega.len() != s.len() {
            return Err(Error::Table(format!(
                "column lengths differ: {} frequencies, {} values",
                omega.len(),
                s.len()
            )));
        }
        if omega.len() < 2 {
            return Err(Error::Table("need at least two rows".into()));
        }
        for (i, (&w, &v)) in omega.iter().zip(&s).enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::Table(format!("row {}: ω = {w} must be finite and ≥ 0", i + 1)));
            }
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Table(format!("row {}: S = {v} must be finite and ≥ 0", i + 1)));
            }
            if i > 0 && w <= omega[i - 1] {
                return Err(Error::Table(format!(
                    "row {}: ω must be strictly increasing ({} after {})",
                    i + 1,
                    w,
                    omega[i - 1]
                )));
            }
        }
        Ok(Self { omega, s })
    }

    /// Two-column CSV `(ω [rad/s], S [T² m⁻² s])` with a header row.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::Table(e.to_string()))?.clone();
        if headers.len() != 2 {
            return Err(Error::Table(format!(
                "expected 2 header columns (omega, S), found {}",
                headers.len()
            )));
        }
        if headers.iter().any(|h| h.parse::<f64>().is_ok()) {
            return Err(Error::Table("header row required; first row is numeric".into()));
        }
        let mut omega = Vec::new();
        let mut s = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Table(e.to_string()))?;
            let parse = |j: usize| -> Result<f64> {
                rec.get(j)
                    .ok_or_else(|| Error::Table(format!("row {}: missing column {}", i + 1, j + 1)))?
                    .parse::<f64>()
                    .map_err(|e| Error::Table(format!("row {}: {e}", i + 1)))
            };
            omega.push(parse(0)?);
            s.push(parse(1)?);
        }
        Self::new(omega, s)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path.as_ref())
            .map_err(|e| Error::Table(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_csv_reader(f)
    }

    pub fn omega_min(&self) -> f64 {
        self.omega[0]
    }

    pub fn omega_max(&self) -> f64 {
        *self.omega.last().unwrap()
    }

    pub fn max_value(&self) -> f64 {
        self.s.iter().cloned().fold(0.0, f64::max)
    }

    /// Log-log interpolation; falls back to linear on segments touching a zero.
    pub fn interpolate(&self, omega: f64) -> Result<f64> {
        let w = omega.abs();
        let (lo, hi) = (self.omega_min(), self.omega_max());
        if !(lo..=hi).contains(&w) {
            return Err(Error::OutOfTableRange { omega: w, min: lo, max: hi });
        }
        let j = self.omega.partition_point(|&x| x <= w).clamp(1, self.omega.len() - 1);
        let (w0, w1) = (self.omega[j - 1], self.omega[j]);
        let (s0, s1) = (self.s[j - 1], self.s[j]);
        if w == w0 {
            return Ok(s0);
        }
        if w == w1 {
            return Ok(s1);
        }
        if w0 > 0.0 && s0 > 0.0 && s1 > 0.0 {
            let t = (w / w0).ln() / (w1 / w0).ln();
            Ok((s0.ln() + t * (s1 / s0).ln()).exp())
        } else {
            let t = (w - w0) / (w1 - w0);
            Ok(s0 + t * (s1 - s0))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSpectrum {
    /// `S = A²`; `amplitude` in T m⁻¹ Hz^(-1/2).
    White { amplitude: f64 },
    /// Current noise of the wire mapped to the gradient:
    /// `S = μ0 K I² / (2π d² |ω|^α)`, ω in rad/s.
    Flicker {
        k: f64,
        alpha: f64,
        current: f64,
        distance: f64,
        mu0: f64,
    },
    Custom(PsdTable),
}

impl NoiseSpectrum {
    pub fn white(amplitude: f64) -> Self {
        NoiseSpectrum::White { amplitude }
    }

    /// Flicker spectrum of a wire taken from `params`.
    pub fn flicker(k: f64, alpha: f64, params: &crate::physics::ExperimentParams) -> Self {
        NoiseSpectrum::Flicker {
            k,
            alpha,
            current: params.current,
            distance: params.distance,
            mu0: params.mu0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseSpectrum::White { amplitude } => {
                if !(amplitude.is_finite() && amplitude >= 0.0) {
                    return Err(Error::invalid("A", "must be finite and ≥ 0"));
                }
            }
            NoiseSpectrum::Flicker {
                k,
                alpha,
                current,
                distance,
                mu0,
            } => {
                if !(k.is_finite() && k >= 0.0) {
                    return Err(Error::invalid("K", "must be finite and ≥ 0"));
                }
                if !(0.0..=2.0).contains(&alpha) {
                    return Err(Error::invalid("alpha", "must lie in [0, 2]"));
                }
                if !(current.is_finite() && current > 0.0) {
                    return Err(Error::invalid("I", "must be > 0"));
                }
                if !(distance.is_finite() && distance > 0.0) {
                    return Err(Error::invalid("d", "must be > 0"));
                }
                if !(mu0.is_finite() && mu0 > 0.0) {
                    return Err(Error::invalid("mu0", "must be > 0"));
                }
            }
            NoiseSpectrum::Custom(_) => {}
        }
        Ok(())
    }

    /// Same spectrum with its overall level multiplied by `c` (`c ≥ 0`).
    pub fn scaled(&self, c: f64) -> Self {
        match self {
            NoiseSpectrum::White { amplitude } => NoiseSpectrum::White {
                amplitude: amplitude * c.sqrt(),
            },
            NoiseSpectrum::Flicker {
                k,
                alpha,
                current,
                distance,
                mu0,
            } => NoiseSpectrum::Flicker {
                k: k * c,
                alpha: *alpha,
                current: *current,
                distance: *distance,
                mu0: *mu0,
            },
            NoiseSpectrum::Custom(t) => {
                NoiseSpectrum::Custom(PsdTable::new(t.omega.clone(), t.s.iter().map(|v| v * c).collect()).unwrap())
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            NoiseSpectrum::White { amplitude } => *amplitude == 0.0,
            NoiseSpectrum::Flicker { k, .. } => *k == 0.0,
            NoiseSpectrum::Custom(t) => t.s.iter().all(|&v| v == 0.0),
        }
    }
}

pub fn evaluate_psd(spec: &NoiseSpectrum, omega: f64) -> Result<f64> {
    match *spec {
        NoiseSpectrum::White { amplitude } => Ok(amplitude * amplitude),
        NoiseSpectrum::Flicker {
            k,
            alpha,
            current,
            distance,
            mu0,
        } => {
            let w = omega.abs();
            if w == 0.0 && alpha > 0.0 {
                return Err(Error::DivergentPsdAtDc);
            }
            Ok(mu0 * k * current * current / (2.0 * std::f64::consts::PI * distance * distance * w.powf(alpha)))
        }
        NoiseSpectrum::Custom(ref table) => table.interpolate(omega),
    }
}

/// A spectrum expressed in `ξ = ω/ω0`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSpectrum {
    pub spectrum: NoiseSpectrum,
    pub omega0: f64,
    /// `K̃` for flicker, `A` for white, `None` for tabulated spectra.
    pub ktilde: Option<f64>,
    pub alpha: f64,
}

impl NormalizedSpectrum {
    pub fn eval(&self, xi: f64) -> Result<f64> {
        match (&self.spectrum, self.ktilde) {
            (NoiseSpectrum::Custom(t), _) => t.interpolate(xi * self.omega0),
            (_, Some(kt)) => {
                let x = xi.abs();
                if x == 0.0 && self.alpha > 0.0 {
                    return Err(Error::DivergentPsdAtDc);
                }
                Ok(kt * kt / x.powf(self.alpha))
            }
            (spec, None) => evaluate_psd(spec, xi * self.omega0),
        }
    }

    /// Upper bound of `S(ξ)` over `[xi, ∞)`, used for tail estimates. For a
    /// table this is the largest tabulated value at or above `xi`.
    pub fn sup_from(&self, xi: f64) -> f64 {
        match (&self.spectrum, self.ktilde) {
            (NoiseSpectrum::Custom(t), _) => {
                let w = xi.abs() * self.omega0;
                t.omega
                    .iter()
                    .zip(&t.s)
                    .filter(|(&o, _)| o >= w)
                    .map(|(_, &v)| v)
                    .fold(t.interpolate(w).unwrap_or(0.0), f64::max)
            }
            (_, Some(kt)) => kt * kt / xi.abs().powf(self.alpha),
            (spec, None) => evaluate_psd(spec, xi * self.omega0).unwrap_or(f64::INFINITY),
        }
    }
}

pub fn normalize(spec: &NoiseSpectrum, dq: &DerivedQuantities) -> NormalizedSpectrum {
    let omega0 = dq.omega0;
    match *spec {
        NoiseSpectrum::White { amplitude } => NormalizedSpectrum {
            spectrum: spec.clone(),
            omega0,
            ktilde: Some(amplitude),
            alpha: 0.0,
        },
        NoiseSpectrum::Flicker {
            k,
            alpha,
            current,
            distance,
            mu0,
        } => {
            let kt2 = mu0 / (2.0 * std::f64::consts::PI * distance * distance) * k * current * current / omega0.powf(alpha);
            NormalizedSpectrum {
                spectrum: spec.clone(),
                omega0,
                ktilde: Some(kt2.sqrt()),
                alpha,
            }
        }
        NoiseSpectrum::Custom(_) => NormalizedSpectrum {
            spectrum: spec.clone(),
            omega0,
            ktilde: None,
            alpha: 0.0,
        },
    }
}
