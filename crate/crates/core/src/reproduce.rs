//! The reference checks: derived constants, transfer integrals, bounds,
//! power-law fits and the Monte-Carlo cross-checks, each reported as one line.

use std::f64::consts::PI;
use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use crate::dephasing::{
    bound_flicker, bound_white, current_noise_ratio, current_noise_ratio_from_level, gamma, ho_weight_integral,
    nb_material_constant, IntegrationConfig, MaterialParams,
};
use crate::error::Result;
use crate::physics::{derive_quantities, Arm, DerivedQuantities, ExperimentParams};
use crate::spectra::NoiseSpectrum;
use crate::stochastic::{
    contrast_ensemble_on, contrast_single, deviation::relative_l2, deviation_freq, deviation_time_oracle,
    phase_variance_mc, synthesize_noise_indexed, welch, Solver, SimulationGrid, TrajectoryDeviation,
};
use crate::sweeps::{intercept_vs_distance, linear_fit, loglog_fit, run_sweep, Axis, NoiseFamily, SweepSpec, SweepVar};
use crate::transfer::{f_ho, f_ho_cosine_form, f_ho_partial_fraction_form, TransferKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// Not reproducible from the stated inputs; replaced by formula-level checks.
    Excluded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Criterion {
    pub id: u8,
    pub title: &'static str,
    pub status: Status,
    pub detail: String,
    /// Names of the individual checks that missed their tolerance.
    pub failures: Vec<String>,
}

impl Criterion {
    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Excluded => "EXCLUDED",
        };
        write!(f, "criterion {:>2} [{s}] {}: {}", self.id, self.title, self.detail)
    }
}

/// Accumulates named comparisons for one criterion.
struct Checks {
    ok: bool,
    parts: Vec<String>,
    failures: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Self {
            ok: true,
            parts: Vec::new(),
            failures: Vec::new(),
        }
    }

    fn record(&mut self, name: &str, good: bool) {
        self.ok &= good;
        if !good {
            self.failures.push(name.to_string());
        }
    }

    fn within(&mut self, name: &str, value: f64, target: f64, tol: f64) {
        let good = (value - target).abs() <= tol;
        self.record(name, good);
        self.parts
            .push(format!("{name} = {value:.6e} (target {target:e} ± {tol:e}){}", mark(good)));
    }

    fn within_rel(&mut self, name: &str, value: f64, target: f64, rel: f64) {
        let good = ((value - target) / target).abs() <= rel;
        self.record(name, good);
        self.parts.push(format!(
            "{name} = {value:.6e} (target {target:e} ± {:.0}%){}",
            rel * 100.0,
            mark(good)
        ));
    }

    fn holds(&mut self, name: &str, good: bool, detail: String) {
        self.record(name, good);
        self.parts.push(format!("{name}: {detail}{}", mark(good)));
    }

    fn finish(self, id: u8, title: &'static str) -> Criterion {
        Criterion {
            id,
            title,
            status: if self.ok { Status::Pass } else { Status::Fail },
            detail: self.parts.join("; "),
            failures: self.failures,
        }
    }
}

fn mark(good: bool) -> &'static str {
    if good {
        ""
    } else {
        " <-- out of tolerance"
    }
}

fn failed(id: u8, title: &'static str, e: crate::Error) -> Criterion {
    Criterion {
        id,
        title,
        status: Status::Fail,
        detail: format!("error: {e}"),
        failures: vec!["error".to_string()],
    }
}

fn reference() -> (ExperimentParams, DerivedQuantities) {
    let p = ExperimentParams::table1(1e-15);
    let dq = derive_quantities(&p).expect("reference parameters are valid");
    (p, dq)
}

/// `ln 10 / T_exp`: the rate that leaves coherence 0.1 after one loop.
pub fn target_gamma(dq: &DerivedQuantities) -> f64 {
    -(0.1f64).ln() / dq.t_exp
}

/// White amplitude and flicker constant at the target rate, using the
/// computed transfer integrals.
pub fn reference_levels(p: &ExperimentParams, dq: &DerivedQuantities) -> Result<(f64, f64)> {
    let cfg = IntegrationConfig::default();
    let g = target_gamma(dq);
    let a = bound_white(g, dq, ho_weight_integral(0.0, &cfg)?)?;
    let k = bound_flicker(g, dq, &NoiseSpectrum::flicker(1.0, 1.0, p), ho_weight_integral(1.0, &cfg)?)?.k;
    Ok((a, k))
}

pub fn criterion_1() -> Criterion {
    const T: &str = "derived quantities";
    let (_, dq) = reference();
    let mut c = Checks::new();
    c.within("eta0", dq.eta0, -6.0e3, 0.05e3);
    c.within("omega0", dq.omega0, 424.0, 1.0);
    c.within_rel("H", dq.h, 4.23e12, 0.01);
    c.within_rel("T_exp", dq.t_exp, 1.48e-2, 0.01);
    c.within_rel("dx_max", dq.dx_max, 2.5e-9, 0.03);
    c.finish(1, T)
}

pub fn criterion_2() -> Criterion {
    const T: &str = "transfer integrals";
    let base = IntegrationConfig::default();
    let cases = [
        ("int_1 F", 1.0, 0.0, 1.8, 0.05),
        ("int_0 F", 0.0, 0.0, 4.3, 0.1),
        ("int_1 F/xi", 1.0, 1.0, 1.3, 0.05),
        ("int_1e-4 F/xi", 1e-4, 1.0, 24.0, 1.0),
        ("int_1e-6 F/xi", 1e-6, 1.0, 35.5, 1.0),
    ];
    let mut c = Checks::new();
    for (name, lo, alpha, target, tol) in cases {
        let start = Instant::now();
        match ho_weight_integral(alpha, &base.with_xi_min(lo)) {
            Ok(v) => c.within(name, v, target, tol),
            Err(e) => return failed(2, T, e),
        }
        let secs = start.elapsed().as_secs_f64();
        c.holds("runtime", secs < 1.0, format!("{secs:.3} s"));
    }
    c.finish(2, T)
}

pub fn criterion_3() -> Criterion {
    const T: &str = "removable singularities";
    let mut c = Checks::new();
    let (f1, f2) = match (f_ho(1.0), f_ho(2.0)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return failed(3, T, e),
    };
    c.within_rel("F(1)", f1, PI * PI / 4.0, 5e-7);
    c.within_rel("F(2)", f2, PI * PI / 16.0, 5e-7);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut n = 0;
    while n < 1000 {
        let xi: f64 = rng.random_range(0.01..20.0);
        if (xi - 1.0).abs() < 1e-3 || (xi - 2.0).abs() < 1e-3 {
            continue;
        }
        n += 1;
        let (Ok(a), Ok(b)) = (f_ho_partial_fraction_form(xi), f_ho_cosine_form(xi)) else {
            return failed(3, T, crate::Error::NonRemovableSingularity { xi });
        };
        if b != 0.0 {
            worst = worst.max(((a - b) / b).abs());
        }
    }
    c.holds("forms agree at 1000 points", worst < 1e-12, format!("max rel diff {worst:.2e}"));
    c.finish(3, T)
}

pub fn criterion_4() -> Criterion {
    const T: &str = "bounds";
    let (p, dq) = reference();
    let cfg = IntegrationConfig::default();
    let run = || -> Result<Checks> {
        let g = target_gamma(&dq);
        let iw = ho_weight_integral(0.0, &cfg)?;
        let ifl = ho_weight_integral(1.0, &cfg)?;
        let a = bound_white(g, &dq, iw)?;
        let fb = bound_flicker(g, &dq, &NoiseSpectrum::flicker(1.0, 1.0, &p), ifl)?;
        let routes = [
            current_noise_ratio(g, &dq),
            current_noise_ratio_from_level(a, iw, &dq),
            current_noise_ratio_from_level(fb.ktilde, ifl, &dq),
        ];
        let mut c = Checks::new();
        c.parts.push(format!("Gamma_target = {g:.4}"));
        c.within_rel("A", a, 2.9e-6, 0.05);
        c.within_rel("K", fb.k, 0.7e-13, 0.10);
        for (name, v) in ["dI/I rate", "dI/I white", "dI/I flicker"].iter().zip(routes) {
            c.within_rel(name, v, 1.3e-8, 0.10);
        }
        let hi = routes.iter().cloned().fold(f64::MIN, f64::max);
        let lo = routes.iter().cloned().fold(f64::MAX, f64::min);
        c.holds("routes within 5%", hi / lo - 1.0 < 0.05, format!("spread {:.2e}", hi / lo - 1.0));
        Ok(c)
    };
    match run() {
        Ok(c) => c.finish(4, T),
        Err(e) => failed(4, T, e),
    }
}

pub fn criterion_5() -> Criterion {
    const T: &str = "power-law fits";
    let (p, _) = reference();
    let cfg = IntegrationConfig::default();
    let run = || -> Result<Checks> {
        let mut c = Checks::new();
        let mut white = SweepSpec::new(p).axis(Axis::log(SweepVar::WhiteAmplitude, 1e-8, 1e-4, 9));
        white.integration = cfg;
        let fw = loglog_fit(&run_sweep(&white)?, "A", "gamma_W")?;
        c.within("white slope", fw.slope, 2.0, 0.01);
        c.within("white intercept", fw.intercept, 13.274, 0.02);
        let mut flicker = SweepSpec::new(p).axis(Axis::log(SweepVar::FlickerK, 1e-16, 1e-11, 11));
        flicker.integration = cfg;
        let ff = loglog_fit(&run_sweep(&flicker)?, "K", "gamma_F")?;
        c.within("flicker slope", ff.slope, 1.0, 0.01);
        c.within("flicker intercept", ff.intercept, 15.363, 0.02);
        let d = [5e-6, 1e-5, 2e-5, 4e-5, 8e-5];
        let dw = intercept_vs_distance(&p, NoiseFamily::White, &d, &Axis::log(SweepVar::WhiteAmplitude, 1e-8, 1e-4, 5), &cfg)?;
        let df = intercept_vs_distance(&p, NoiseFamily::Flicker, &d, &Axis::log(SweepVar::FlickerK, 1e-16, 1e-11, 6), &cfg)?;
        c.within("white d-slope", dw.fit.slope, 6.0, 0.05);
        c.within("white offset", dw.fit.intercept, 41.47, 0.05);
        c.within("flicker d-slope", df.fit.slope, 6.0, 0.05);
        c.within("flicker offset", df.fit.intercept, 43.56, 0.05);
        Ok(c)
    };
    match run() {
        Ok(c) => c.finish(5, T),
        Err(e) => failed(5, T, e),
    }
}

pub fn criterion_6() -> Criterion {
    const T: &str = "phase variance vs analytic rate";
    let (p, dq) = reference();
    let run = || -> Result<Checks> {
        let start = Instant::now();
        let (a, _) = reference_levels(&p, &dq)?;
        let spec = NoiseSpectrum::white(a);
        let base = SimulationGrid::for_loops(&dq, 16, 512, 6)?;
        let grid = base.with_band(Some(dq.omega0), base.omega_high);
        let mc = phase_variance_mc(&spec, &dq, &p, 1000, &grid)?;
        let xi_max = grid.omega_high.unwrap_or(grid.nyquist()) / dq.omega0;
        let analytic = gamma(&spec, &dq, &TransferKind::Ho, &IntegrationConfig::default().with_xi_max(xi_max))?.gamma;
        let secs = start.elapsed().as_secs_f64();
        let z = (mc.gamma_equivalent - analytic) / mc.gamma_equivalent_se;
        let mut c = Checks::new();
        c.holds(
            "2pi Var(dphi) vs Gamma",
            z.abs() <= 3.0,
            format!(
                "{:.4e} ± {:.2e} vs {analytic:.4e} ({z:+.2} SE)",
                mc.gamma_equivalent, mc.gamma_equivalent_se
            ),
        );
        c.holds("runtime", secs < 60.0, format!("{secs:.1} s"));
        Ok(c)
    };
    match run() {
        Ok(c) => c.finish(6, T),
        Err(e) => failed(6, T, e),
    }
}

pub fn criterion_7() -> Criterion {
    const T: &str = "solver equivalence";
    let (p, dq) = reference();
    let run = || -> Result<Checks> {
        let (a, k) = reference_levels(&p, &dq)?;
        let grid = SimulationGrid::for_loops(&dq, 16, 512, 7)?;
        let per_loop = grid.index_of(dq.t_exp)? + 1;
        let mut c = Checks::new();
        for (name, spec) in [("white", NoiseSpectrum::white(a)), ("flicker", NoiseSpectrum::flicker(k, 1.0, &p))] {
            let errs: Vec<f64> = (0..20u64)
                .into_par_iter()
                .map(|seed| -> Result<f64> {
                    let r = synthesize_noise_indexed(&spec, &grid, seed)?;
                    let mut worst: f64 = 0.0;
                    for arm in Arm::BOTH {
                        let f = deviation_freq(&r, &dq, &p, arm)?;
                        let o = deviation_time_oracle(&r, &dq, &p, arm)?;
                        worst = worst.max(relative_l2(&f.dx, &o.dx, per_loop));
                        worst = worst.max(relative_l2(&f.dp, &o.dp, per_loop));
                    }
                    Ok(worst)
                })
                .collect::<Result<_>>()?;
            let worst = errs.iter().cloned().fold(0.0, f64::max);
            c.holds(name, worst < 1e-3, format!("max rel L2 {worst:.2e} over 20 seeds"));
        }
        Ok(c)
    };
    match run() {
        Ok(c) => c.finish(7, T),
        Err(e) => failed(7, T, e),
    }
}

pub fn criterion_8() -> Criterion {
    const T: &str = "spectrum recovery";
    let (p, dq) = reference();
    let run = || -> Result<Checks> {
        let (a, k) = reference_levels(&p, &dq)?;
        let grid = SimulationGrid::new(8192, dq.t_exp / 512.0, 8)?;
        let seg = 1024;
        let estimate = |spec: &NoiseSpectrum| -> Result<welch::WelchEstimate> {
            let runs: Vec<welch::WelchEstimate> = (0..200u64)
                .into_par_iter()
                .map(|i| welch::welch(&synthesize_noise_indexed(spec, &grid, i)?.values, grid.dt, seg))
                .collect::<Result<_>>()?;
            welch::average(&runs)
        };
        let mut c = Checks::new();
        let fl = estimate(&NoiseSpectrum::flicker(k, 1.0, &p))?;
        let (lo, hi) = (4, 400);
        let x: Vec<f64> = fl.omega[lo..=hi].iter().map(|w| w.log10()).collect();
        let y: Vec<f64> = fl.psd[lo..=hi].iter().map(|s| s.log10()).collect();
        let fit = linear_fit(&x, &y)?;
        c.within("flicker slope over two decades", fit.slope, -1.0, 0.1);
        let wh = estimate(&NoiseSpectrum::white(a))?;
        let level = a * a;
        let worst = wh.psd[1..seg / 2]
            .iter()
            .map(|s| (s / level - 1.0).abs())
            .fold(0.0, f64::max);
        c.holds("white flat at A^2", worst < 0.10, format!("max per-bin deviation {:.1}%", worst * 100.0));
        Ok(c)
    };
    match run() {
        Ok(c) => c.finish(8, T),
        Err(e) => failed(8, T, e),
    }
}

pub fn criterion_9() -> Criterion {
    const T: &str = "closed loop contrast";
    let (p, dq) = reference();
    let run = || -> Result<Checks> {
        let (a, k) = reference_levels(&p, &dq)?;
        let grid = SimulationGrid::for_loops(&dq, 16, 512, 9)?;
        let per_loop = grid.index_of(dq.t_exp)?;
        let mut c = Checks::new();
        for (name, spec) in [("white", NoiseSpectrum::white(a)), ("flicker", NoiseSpectrum::flicker(k, 1.0, &p))] {
            let r = synthesize_noise_indexed(&spec, &grid, 0)?;
            let dev = TrajectoryDeviation::compute(&r, &dq, &p, Solver::Frequency)?;
            let single = contrast_single(&dev, &dq, dq.t_exp)?;
            let sep = dev.max_separation(per_loop + 1);
            let ens = contrast_ensemble_on(&spec, &dq, &p, 500, dq.t_exp, &grid)?;
            c.holds(&format!("{name} single contrast"), single.contrast >= 0.99, format!("{:.15}", single.contrast));
            c.holds(&format!("{name} max |dx_R - dx_L|"), sep <= 1e-16, format!("{sep:.3e} m"));
            c.holds(&format!("{name} ensemble contrast"), ens.contrast >= 0.99, format!("{:.15}", ens.contrast));
            let mut seps: Vec<f64> = (0..200u64)
                .into_par_iter()
                .map(|i| -> Result<f64> {
                    let r = synthesize_noise_indexed(&spec, &grid, 1000 + i)?;
                    Ok(TrajectoryDeviation::compute(&r, &dq, &p, Solver::Frequency)?.max_separation(per_loop + 1))
                })
                .collect::<Result<_>>()?;
            seps.sort_by(f64::total_cmp);
            let within = seps.iter().filter(|&&s| s <= 1e-16).count();
            c.parts.push(format!(
                "{name} separation over 200 runs: median {:.2e} m, p90 {:.2e} m, {within}/200 within 1e-16 m",
                seps[100], seps[180]
            ));
            c.holds(&format!("{name} separation far below dx_max"), seps[199] < 1e-6 * dq.dx_max, format!("max {:.2e} m vs dx_max {:.2e} m", seps[199], dq.dx_max));
        }
        Ok(c)
    };
    match run() {
        Ok(c) => c.finish(9, T),
        Err(e) => failed(9, T, e),
    }
}

/// The quoted `⟨Δx²(T)⟩ = 4e-70 m²` and material constant `0.3e-23 m² K⁻²`
/// do not follow from the reference inputs. The formulas behind them are
/// checked instead and the mismatch is reported.
pub fn criterion_10() -> Criterion {
    const T: &str = "excluded quoted values";
    let (p, dq) = reference();
    let run = || -> Result<Checks> {
        let (a, k) = reference_levels(&p, &dq)?;
        let mut c = Checks::new();
        let amp = 2.0 * p.hbar * p.gamma_e * a / (p.mass * dq.omega0);
        let closed = amp * amp * dq.t_exp;
        let doubled = 2.0 * p.hbar * p.gamma_e * (2.0 * a) / (p.mass * dq.omega0);
        c.holds(
            "<dx^2(T)> closed form scales as A^2",
            ((doubled * doubled * dq.t_exp) / closed - 4.0).abs() < 1e-12,
            format!("{closed:.3e} m^2 at the white bound, quoted 4e-70"),
        );
        let mat = MaterialParams {
            area: PI * 5e-6 * 5e-6,
            temperature: 4.2,
        };
        let cm = nb_material_constant(k, &mat)?;
        let twice = nb_material_constant(2.0 * k, &mat)?;
        c.holds(
            "material constant linear in K",
            (twice / cm - 2.0).abs() < 1e-12,
            format!("{cm:.3e} m^2 K^-2 at the flicker bound, quoted 0.3e-23"),
        );
        Ok(c)
    };
    match run() {
        Ok(c) => {
            let mut r = c.finish(10, T);
            if r.status == Status::Pass {
                r.status = Status::Excluded;
            }
            r
        }
        Err(e) => failed(10, T, e),
    }
}

pub fn run(id: u8) -> Option<Criterion> {
    Some(match id {
        1 => criterion_1(),
        2 => criterion_2(),
        3 => criterion_3(),
        4 => criterion_4(),
        5 => criterion_5(),
        6 => criterion_6(),
        7 => criterion_7(),
        8 => criterion_8(),
        9 => criterion_9(),
        10 => criterion_10(),
        _ => return None,
    })
}

pub fn run_all() -> Vec<Criterion> {
    (1..=10).filter_map(run).collect()
}
