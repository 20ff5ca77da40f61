use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sgnoise::dephasing::IntegrationConfig;
use sgnoise::physics::ExperimentParams;
use sgnoise::spectra::{NoiseSpectrum, PsdTable};

const PARAM_KEYS: [&str; 10] = ["gamma_e", "B0", "I", "d", "rho", "chi_rho", "m", "mu0", "hbar", "D_zfs"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    White,
    Flicker,
    Custom,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default)]
    pub kind: NoiseKind,
    /// White amplitude A [T m⁻¹ Hz^(-1/2)].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    /// Flicker constant K.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default = "one")]
    pub alpha: f64,
    /// Two-column CSV (omega [rad/s], S [T² m⁻² Hz⁻¹]) with a header row.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psd_csv: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            kind: NoiseKind::White,
            amplitude: None,
            k: None,
            alpha: 1.0,
            psd_csv: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    /// Loops covered by one realization.
    pub loops: usize,
    /// Samples per loop.
    pub per_loop: usize,
    pub seed: u64,
    /// Ensemble size for Monte-Carlo commands.
    pub realizations: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            loops: 16,
            per_loop: 512,
            seed: 0,
            realizations: 500,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: ExperimentParams,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub integration: IntegrationConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = Self::from_json(&text)?;
        if let Some(p) = &cfg.noise.psd_csv {
            if p.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                cfg.noise.psd_csv = Some(base.join(p));
            }
        }
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).context("config is not valid JSON")?;
        let params = v
            .get("params")
            .ok_or_else(|| anyhow!("params: required"))?
            .as_object()
            .ok_or_else(|| anyhow!("params: must be an object"))?;
        for key in PARAM_KEYS {
            if !params.contains_key(key) {
                bail!("{key}: required");
            }
        }
        let cfg: RunConfig = serde_json::from_value(v).map_err(|e| anyhow!("{e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.integration.validate()?;
        if self.simulation.loops == 0 || self.simulation.per_loop == 0 {
            bail!("simulation.loops/per_loop: must be ≥ 1");
        }
        Ok(())
    }

    pub fn spectrum(&self) -> Result<NoiseSpectrum> {
        let n = &self.noise;
        let s = match n.kind {
            NoiseKind::White => NoiseSpectrum::white(n.amplitude.ok_or_else(|| anyhow!("noise.amplitude: required"))?),
            NoiseKind::Flicker => {
                NoiseSpectrum::flicker(n.k.ok_or_else(|| anyhow!("noise.k: required"))?, n.alpha, &self.params)
            }
            NoiseKind::Custom => {
                let p = n.psd_csv.as_ref().ok_or_else(|| anyhow!("noise.psd_csv: required"))?;
                NoiseSpectrum::Custom(PsdTable::from_csv_path(p)?)
            }
            NoiseKind::None => NoiseSpectrum::white(0.0),
        };
        s.validate()?;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MIN: &str = r#"{"params": {"gamma_e": 1.761e11, "B0": 0.2, "I": 12, "d": 2e-5, "rho": 3500,
        "chi_rho": -6.286e-9, "m": 1e-15, "mu0": 1.25663706212e-6, "hbar": 1.054571817e-34, "D_zfs": 2.87e9}}"#;

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::from_json(MIN).unwrap();
        assert_eq!(c.simulation.loops, 16);
        assert_eq!(c.noise.kind, NoiseKind::White);
        assert!(c.spectrum().is_err());
    }

    #[test]
    fn missing_and_unknown_keys() {
        let e = RunConfig::from_json(&MIN.replace(r#""m": 1e-15, "#, "")).unwrap_err();
        assert_eq!(e.to_string(), "m: required");
        let e = RunConfig::from_json(&MIN.replace("}}", r#", "mass": 1}}"#)).unwrap_err();
        assert!(e.to_string().contains("unknown field"), "{e}");
    }

    #[test]
    fn round_trip() {
        let c = RunConfig::from_json(MIN).unwrap();
        let back = RunConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(c, back);
    }
}
