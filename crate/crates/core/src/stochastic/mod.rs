//! Sampled gradient noise, trajectory deviations, contrast and Monte-Carlo
//! phase statistics.
//!
//! Realization `i` of an ensemble is drawn from ChaCha stream `i` of the grid's
//! seed, so ensembles are reproducible and independent of evaluation order.

pub mod contrast;
pub mod deviation;
pub mod grid;
pub mod phase;
pub mod synthesis;
pub mod welch;

use std::io::Write;

pub use contrast::{
    contrast_ensemble, contrast_ensemble_on, contrast_single, deterministic_dp_amplitude, ContrastResult,
    EnsembleContrast,
};
pub use deviation::{deviation_freq, deviation_time_oracle, ArmDeviation, Solver, TrajectoryDeviation};
pub use grid::SimulationGrid;
pub use phase::{phase_variance_mc, PhaseVarianceResult};
pub use synthesis::{synthesize_noise, synthesize_noise_indexed, NoiseRealization};

use crate::error::{Error, Result};

/// Writes `t, delta_eta, dx_R, dx_L, dp_R, dp_L` rows in SI units.
pub fn write_trace_csv<W: Write>(out: W, real: &NoiseRealization, dev: &TrajectoryDeviation) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t_s", "delta_eta_T_per_m", "dx_R_m", "dx_L_m", "dp_R_kg_m_per_s", "dp_L_kg_m_per_s"])
        .map_err(|e| Error::Table(e.to_string()))?;
    for k in 0..dev.len() {
        let row = [
            real.grid.time(k),
            real.values[k],
            dev.dx_right[k],
            dev.dx_left[k],
            dev.dp_right[k],
            dev.dp_left[k],
        ];
        w.write_record(row.iter().map(|v| format!("{v:.9e}")))
            .map_err(|e| Error::Table(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Table(e.to_string()))
}

/// Writes `t, delta_eta` rows in SI units.
pub fn write_noise_csv<W: Write>(out: W, real: &NoiseRealization) -> Result<()> {
    let err = |e: csv::Error| Error::Table(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t_s", "delta_eta_T_per_m"]).map_err(err)?;
    for (k, v) in real.values.iter().enumerate() {
        w.write_record([format!("{:.9e}", real.grid.time(k)), format!("{v:.9e}")])
            .map_err(err)?;
    }
    w.flush().map_err(|e| Error::Table(e.to_string()))
}
