//! Parameter sweeps over distance, noise level, flicker exponent and target
//! rate, and least-squares power-law fits of their output.
//!
//! All fits work in log₁₀ space with `d` in metres.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dephasing::{
    bound_flicker, bound_white, current_noise_ratio, current_noise_ratio_from_level, gamma,
    ho_weight_integral, IntegrationConfig,
};
use crate::error::{Error, Result};
use crate::physics::{derive_quantities, ExperimentParams};
use crate::spectra::NoiseSpectrum;
use crate::transfer::TransferKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVar {
    /// Wire distance `d` [m].
    Distance,
    /// White amplitude `A` [T m⁻¹ Hz^(-1/2)].
    WhiteAmplitude,
    /// Flicker constant `K`.
    FlickerK,
    Alpha,
    /// Target dephasing rate [s⁻¹].
    GammaTarget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub var: SweepVar,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl Axis {
    pub fn log(var: SweepVar, start: f64, stop: f64, points: usize) -> Self {
        Self {
            var,
            start,
            stop,
            points,
            spacing: Spacing::Log,
        }
    }

    pub fn linear(var: SweepVar, start: f64, stop: f64, points: usize) -> Self {
        Self {
            var,
            start,
            stop,
            points,
            spacing: Spacing::Linear,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points == 0 {
            return Err(Error::invalid("points", "axis range must be non-empty"));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(Error::invalid("start/stop", "must be finite"));
        }
        if self.spacing == Spacing::Log && !(self.start > 0.0 && self.stop > 0.0) {
            return Err(Error::invalid("start/stop", "log spacing needs positive endpoints"));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let n = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let f = i as f64 / n;
                match self.spacing {
                    Spacing::Linear => self.start + f * (self.stop - self.start),
                    Spacing::Log => {
                        let (a, b) = (self.start.log10(), self.stop.log10());
                        10f64.powf(a + f * (b - a))
                    }
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub base: ExperimentParams,
    /// Cartesian product, first axis slowest.
    pub axes: Vec<Axis>,
    /// White amplitude when not swept; `None` skips the white columns.
    #[serde(default)]
    pub white_amplitude: Option<f64>,
    #[serde(default)]
    pub flicker_k: Option<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Target rate when not swept; `None` means `ln 10 / T_exp` at each point.
    #[serde(default)]
    pub gamma_target: Option<f64>,
    #[serde(default)]
    pub integration: IntegrationConfig,
}

fn default_alpha() -> f64 {
    1.0
}

impl SweepSpec {
    pub fn new(base: ExperimentParams) -> Self {
        Self {
            base,
            axes: Vec::new(),
            white_amplitude: None,
            flicker_k: None,
            alpha: 1.0,
            gamma_target: None,
            integration: IntegrationConfig::default(),
        }
    }

    pub fn axis(mut self, axis: Axis) -> Self {
        self.axes.push(axis);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        self.integration.validate()?;
        if self.axes.is_empty() {
            return Err(Error::invalid("axes", "at least one axis is required"));
        }
        for (i, a) in self.axes.iter().enumerate() {
            a.validate()?;
            if self.axes[..i].iter().any(|b| b.var == a.var) {
                return Err(Error::invalid("axes", "each variable may be swept once"));
            }
        }
        Ok(())
    }

    fn points(&self) -> Vec<Vec<(SweepVar, f64)>> {
        let mut out = vec![Vec::new()];
        for axis in &self.axes {
            let vals = axis.values();
            out = out
                .into_iter()
                .flat_map(|p| {
                    vals.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push((axis.var, v));
                        q
                    })
                })
                .collect();
        }
        out
    }
}

pub const SWEEP_COLUMNS: [&str; 13] = [
    "d_m",
    "A",
    "K",
    "alpha",
    "gamma_target",
    "omega0",
    "T_exp",
    "dx_max",
    "gamma_W",
    "coherence_W",
    "gamma_F",
    "coherence_F",
    "dI_over_I",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// One value per column; NaN where not applicable or where the row failed.
    pub values: Vec<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub columns: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r.values[i]).collect())
    }

    pub fn failed_rows(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }

    /// Header row, then `%.9e` values and a trailing `error` column.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let err = |e: csv::Error| Error::Table(e.to_string());
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.columns.iter().map(String::as_str).chain(["error"]))
            .map_err(err)?;
        for r in &self.rows {
            let mut rec: Vec<String> = r.values.iter().map(|v| format!("{v:.9e}")).collect();
            rec.push(r.error.clone().unwrap_or_default());
            w.write_record(&rec).map_err(err)?;
        }
        w.flush().map_err(|e| Error::Table(e.to_string()))
    }

    /// Reads a table in the format of [`SweepTable::write_csv`]. A trailing
    /// `error` column is optional; empty or `NaN` cells read as NaN.
    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let err = |e: csv::Error| Error::Table(e.to_string());
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut columns: Vec<String> = rdr.headers().map_err(err)?.iter().map(str::to_string).collect();
        let has_error = columns.last().is_some_and(|c| c == "error");
        if has_error {
            columns.pop();
        }
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(err)?;
            let values = (0..columns.len())
                .map(|j| {
                    let cell = rec.get(j).unwrap_or("");
                    if cell.is_empty() {
                        return Ok(f64::NAN);
                    }
                    cell.parse::<f64>()
                        .map_err(|_| Error::Table(format!("row {i}, column {}: cannot parse {cell:?}", columns[j])))
                })
                .collect::<Result<Vec<f64>>>()?;
            let error = if has_error {
                rec.get(columns.len()).filter(|e| !e.is_empty()).map(str::to_string)
            } else {
                None
            };
            rows.push(SweepRow { values, error });
        }
        Ok(Self { columns, rows })
    }
}

fn evaluate_point(spec: &SweepSpec, point: &[(SweepVar, f64)]) -> (Vec<f64>, Option<String>) {
    let mut params = spec.base;
    let mut a = spec.white_amplitude;
    let mut k = spec.flicker_k;
    let mut alpha = spec.alpha;
    let mut target = spec.gamma_target;
    for &(var, v) in point {
        match var {
            SweepVar::Distance => params.distance = v,
            SweepVar::WhiteAmplitude => a = Some(v),
            SweepVar::FlickerK => k = Some(v),
            SweepVar::Alpha => alpha = v,
            SweepVar::GammaTarget => target = Some(v),
        }
    }
    let mut row = vec![f64::NAN; SWEEP_COLUMNS.len()];
    row[0] = params.distance;
    row[1] = a.unwrap_or(f64::NAN);
    row[2] = k.unwrap_or(f64::NAN);
    row[3] = alpha;
    let res = (|| -> Result<()> {
        params.validate()?;
        let dq = derive_quantities(&params)?;
        let target = target.unwrap_or(std::f64::consts::LN_10 / dq.t_exp);
        row[4] = target;
        row[5] = dq.omega0;
        row[6] = dq.t_exp;
        row[7] = dq.dx_max;
        row[12] = current_noise_ratio(target, &dq);
        if let Some(a) = a {
            let r = gamma(&NoiseSpectrum::white(a), &dq, &TransferKind::Ho, &spec.integration)?;
            row[8] = r.gamma;
            row[9] = r.coherence;
        }
        if let Some(k) = k {
            let r = gamma(&NoiseSpectrum::flicker(k, alpha, &params), &dq, &TransferKind::Ho, &spec.integration)?;
            row[10] = r.gamma;
            row[11] = r.coherence;
        }
        Ok(())
    })();
    (row, res.err().map(|e| e.to_string()))
}

/// One row per grid point, in grid order. Points that fail validation or
/// integration are flagged in `error` and do not stop the sweep.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepTable> {
    spec.validate()?;
    let rows = spec
        .points()
        .par_iter()
        .map(|p| {
            let (values, error) = evaluate_point(spec, p);
            SweepRow { values, error }
        })
        .collect();
    Ok(SweepTable {
        columns: SWEEP_COLUMNS.iter().map(|s| s.to_string()).collect(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    pub n: usize,
}

/// Ordinary least squares `y = slope·x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<FitResult> {
    if x.len() != y.len() {
        return Err(Error::Fit(format!("{} x values but {} y values", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 points, got {}", x.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all x values are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    Ok(FitResult {
        slope,
        intercept,
        residual_rms: (ss / n).sqrt(),
        n: x.len(),
    })
}

fn log10_checked(v: &[f64], name: &str) -> Result<Vec<f64>> {
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            if x > 0.0 && x.is_finite() {
                Ok(x.log10())
            } else {
                Err(Error::Fit(format!("row {i}: {name} = {x:e} is not positive")))
            }
        })
        .collect()
}

/// `log₁₀ y = slope·log₁₀ x + intercept`.
pub fn loglog_fit_points(x: &[f64], y: &[f64]) -> Result<FitResult> {
    linear_fit(&log10_checked(x, "x")?, &log10_checked(y, "y")?)
}

pub fn loglog_fit(table: &SweepTable, x_col: &str, y_col: &str) -> Result<FitResult> {
    let get = |c: &str| table.column(c).ok_or_else(|| Error::Fit(format!("no column named {c}")));
    let (x, y) = (get(x_col)?, get(y_col)?);
    for (i, r) in table.rows.iter().enumerate() {
        if let Some(e) = &r.error {
            return Err(Error::Fit(format!("row {i} failed: {e}")));
        }
    }
    linear_fit(&log10_checked(&x, x_col)?, &log10_checked(&y, y_col)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamily {
    White,
    Flicker,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceFit {
    /// `(d, log₁₀ Γ intercept)` at each distance.
    pub intercepts: Vec<(f64, f64)>,
    /// Slopes of `log₁₀ Γ` against `log₁₀ A` or `log₁₀ K`.
    pub level_slopes: Vec<f64>,
    /// `intercept = slope·log₁₀ d + offset`.
    pub fit: FitResult,
}

/// Fits `log₁₀ Γ` against the noise level at each distance, then the
/// intercepts against `log₁₀ d`. `levels` are A (white) or K (flicker, α = 1).
pub fn intercept_vs_distance(
    base: &ExperimentParams,
    family: NoiseFamily,
    distances: &[f64],
    levels: &Axis,
    cfg: &IntegrationConfig,
) -> Result<DistanceFit> {
    let var = match family {
        NoiseFamily::White => SweepVar::WhiteAmplitude,
        NoiseFamily::Flicker => SweepVar::FlickerK,
    };
    let col = match family {
        NoiseFamily::White => "gamma_W",
        NoiseFamily::Flicker => "gamma_F",
    };
    let x_col = match family {
        NoiseFamily::White => "A",
        NoiseFamily::Flicker => "K",
    };
    let mut intercepts = Vec::new();
    let mut level_slopes = Vec::new();
    for &d in distances {
        let mut spec = SweepSpec::new(base.with_distance(d)).axis(Axis { var, ..levels.clone() });
        spec.integration = *cfg;
        let t = run_sweep(&spec)?;
        let f = loglog_fit(&t, x_col, col)?;
        intercepts.push((d, f.intercept));
        level_slopes.push(f.slope);
    }
    let x: Vec<f64> = distances.to_vec();
    let y: Vec<f64> = intercepts.iter().map(|p| p.1).collect();
    let fit = linear_fit(&log10_checked(&x, "d")?, &y)?;
    Ok(DistanceFit {
        intercepts,
        level_slopes,
        fit,
    })
}

pub const SNR_COLUMNS: [&str; 4] = ["d_m", "dI_over_I", "dI_over_I_white", "dI_over_I_flicker"];

/// Relative current noise tolerated at `gamma_target` against distance, from
/// the rate directly and through the white and flicker (α = 1) bounds.
pub fn snr_vs_distance(
    base: &ExperimentParams,
    gamma_target: f64,
    distances: &[f64],
    cfg: &IntegrationConfig,
) -> Result<SweepTable> {
    if !(gamma_target > 0.0) {
        return Err(Error::invalid("gamma_target", "target must be positive"));
    }
    let iw = ho_weight_integral(0.0, cfg)?;
    let ifl = ho_weight_integral(1.0, cfg)?;
    let rows = distances
        .par_iter()
        .map(|&d| {
            let params = base.with_distance(d);
            let r = (|| -> Result<Vec<f64>> {
                params.validate()?;
                let dq = derive_quantities(&params)?;
                let a = bound_white(gamma_target, &dq, iw)?;
                let fb = bound_flicker(gamma_target, &dq, &NoiseSpectrum::flicker(1.0, 1.0, &params), ifl)?;
                Ok(vec![
                    d,
                    current_noise_ratio(gamma_target, &dq),
                    current_noise_ratio_from_level(a, iw, &dq),
                    current_noise_ratio_from_level(fb.ktilde, ifl, &dq),
                ])
            })();
            match r {
                Ok(values) => SweepRow { values, error: None },
                Err(e) => SweepRow {
                    values: vec![d, f64::NAN, f64::NAN, f64::NAN],
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(SweepTable {
        columns: SNR_COLUMNS.iter().map(|s| s.to_string()).collect(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn base() -> ExperimentParams {
        ExperimentParams::table1(1e-15)
    }

    #[test]
    fn axis_values() {
        let v = Axis::log(SweepVar::Distance, 1e-5, 1e-3, 3).values();
        assert!((v[1] - 1e-4).abs() < 1e-18);
        assert_eq!(Axis::linear(SweepVar::Alpha, 0.5, 1.5, 3).values(), vec![0.5, 1.0, 1.5]);
        assert_eq!(Axis::linear(SweepVar::Alpha, 0.7, 2.0, 1).values(), vec![0.7]);
        assert!(Axis::log(SweepVar::Distance, 0.0, 1.0, 3).validate().is_err());
        assert!(Axis::linear(SweepVar::Alpha, 0.0, 1.0, 0).validate().is_err());
    }

    #[test]
    fn white_rate_grows_as_d_to_the_sixth() {
        let mut s = SweepSpec::new(base()).axis(Axis::log(SweepVar::Distance, 1e-5, 4e-5, 3));
        s.white_amplitude = Some(2.9e-6);
        let t = run_sweep(&s).unwrap();
        let g = t.column("gamma_W").unwrap();
        assert!(g[0] < g[1] && g[1] < g[2]);
        let f = loglog_fit(&t, "d_m", "gamma_W").unwrap();
        assert!((f.slope - 6.0).abs() < 0.01, "{}", f.slope);
    }

    #[test]
    fn smaller_alpha_dephases_more() {
        let mut s = SweepSpec::new(base()).axis(Axis::linear(SweepVar::Alpha, 0.5, 1.5, 5));
        s.flicker_k = Some(0.7e-13);
        let g = run_sweep(&s).unwrap().column("gamma_F").unwrap();
        assert!(g.windows(2).all(|w| w[0] > w[1]), "{g:?}");
        // at fixed K the ω0^-α factor alone spans 424^1; only at fixed K̃ is the spread small
        assert!(g[0] / g[4] > 100.0);
        let cfg = IntegrationConfig::default();
        let spread = ho_weight_integral(0.5, &cfg).unwrap() / ho_weight_integral(1.5, &cfg).unwrap();
        assert!(spread > 1.0 && spread < 10.0, "{spread}");
    }

    #[test]
    fn bad_rows_are_flagged_not_fatal() {
        let mut s = SweepSpec::new(base()).axis(Axis::linear(SweepVar::Distance, -1e-5, 2e-5, 4));
        s.white_amplitude = Some(1e-6);
        let t = run_sweep(&s).unwrap();
        assert_eq!(t.rows.len(), 4);
        assert!(t.rows[0].error.is_some());
        assert!(t.rows[3].error.is_none());
        assert!(loglog_fit(&t, "d_m", "gamma_W").is_err());
    }

    #[test]
    fn csv_is_deterministic() {
        let mut s = SweepSpec::new(base()).axis(Axis::log(SweepVar::WhiteAmplitude, 1e-7, 1e-5, 4));
        s.white_amplitude = Some(1e-6);
        let write = || {
            let mut b = Vec::new();
            run_sweep(&s).unwrap().write_csv(&mut b).unwrap();
            b
        };
        let a = write();
        assert_eq!(a, write());
        let back = SweepTable::from_csv_reader(a.as_slice()).unwrap();
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("d_m,A,K,alpha"));
        assert_eq!(text.lines().count(), 5);
        let orig = run_sweep(&s).unwrap();
        for (x, y) in back.column("gamma_W").unwrap().iter().zip(orig.column("gamma_W").unwrap()) {
            assert!(((x - y) / y).abs() < 1e-9);
        }
        assert!(back.column("gamma_F").unwrap().iter().all(|v| v.is_nan()));
    }

    #[test]
    fn rows_match_pointwise_evaluation() {
        let mut s = SweepSpec::new(base()).axis(Axis::log(SweepVar::FlickerK, 1e-14, 1e-12, 3));
        s.alpha = 0.8;
        let t = run_sweep(&s).unwrap();
        let dq = derive_quantities(&base()).unwrap();
        for (k, g) in t.column("K").unwrap().iter().zip(t.column("gamma_F").unwrap()) {
            let r = gamma(&NoiseSpectrum::flicker(*k, 0.8, &base()), &dq, &TransferKind::Ho, &s.integration).unwrap();
            assert!(((r.gamma - g) / g).abs() < 1e-6);
        }
    }

    #[test]
    fn fit_rejects_non_positive_with_row() {
        let e = loglog_fit_points(&[1.0, 2.0, 3.0], &[1.0, 0.0, 2.0]).unwrap_err();
        assert!(e.to_string().contains("row 1"), "{e}");
        assert!(loglog_fit_points(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn snr_routes_agree_and_scale() {
        let cfg = IntegrationConfig::default();
        let d = [1e-5, 2e-5, 4e-5, 8e-5];
        let t = snr_vs_distance(&base(), 155.0, &d, &cfg).unwrap();
        let direct = t.column("dI_over_I").unwrap();
        for c in ["dI_over_I_white", "dI_over_I_flicker"] {
            for (a, b) in t.column(c).unwrap().iter().zip(&direct) {
                assert!(((a - b) / b).abs() < 1e-9);
            }
        }
        let f = loglog_fit_points(&d, &direct).unwrap();
        assert!((f.slope + 2.0).abs() < 0.05, "{}", f.slope);
        let t2 = snr_vs_distance(&base(), 310.0, &d, &cfg).unwrap();
        let r = t2.column("dI_over_I").unwrap()[1] / direct[1];
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn exact_power_laws_fit_exactly(slope in -6.0f64..6.0, c in -20.0f64..20.0) {
            let x = [1e-3, 1e-2, 0.3, 4.0, 50.0];
            let y: Vec<f64> = x.iter().map(|v: &f64| 10f64.powf(c + slope * v.log10())).collect();
            let f = loglog_fit_points(&x, &y).unwrap();
            prop_assert!((f.slope - slope).abs() < 1e-9);
            prop_assert!((f.intercept - c).abs() < 1e-8);
            prop_assert!(f.residual_rms < 1e-9);
        }
    }
}
