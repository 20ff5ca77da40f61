mod config;
mod report;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use sgnoise::dephasing::{
    bound_flicker, bound_white, coherence, current_noise_ratio, current_noise_ratio_from_level, gamma, gamma_total,
    ho_weight_integral, DephasingResult,
};
use sgnoise::physics::derive_quantities;
use sgnoise::reproduce::{self, Status};
use sgnoise::spectra::NoiseSpectrum;
use sgnoise::stochastic::{
    contrast_ensemble_on, contrast_single, deterministic_dp_amplitude, synthesize_noise, write_noise_csv,
    write_trace_csv, SimulationGrid, Solver, TrajectoryDeviation,
};
use sgnoise::sweeps::{loglog_fit, run_sweep, SweepSpec, SweepTable};
use sgnoise::transfer::TransferKind;

use config::{NoiseKind, RunConfig};
use report::Report;

#[derive(Parser)]
#[command(name = "sgnoise", version, about = "Gradient-noise dephasing of a closed-loop Stern-Gerlach interferometer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args)]
struct Global {
    /// Directory for CSV/JSON output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// RNG seed for stochastic commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print the effective configuration as JSON and exit.
    #[arg(long, global = true)]
    emit_config: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Trap frequency, gradient curvature, loop time and wavepacket widths.
    Derive { config: PathBuf },
    /// Dephasing rate for the configured noise.
    Gamma {
        config: PathBuf,
        #[arg(long)]
        noise: Option<NoiseKind>,
        /// Lower cutoff ω_min/ω0.
        #[arg(long)]
        ximin: Option<f64>,
        #[arg(long)]
        ximax: Option<f64>,
        /// Also report the trajectory-deviation and combined rates.
        #[arg(long)]
        with_dev: bool,
    },
    /// Largest noise levels compatible with a target rate or coherence.
    Bound {
        config: PathBuf,
        #[arg(long, conflicts_with = "target_coherence", required_unless_present = "target_coherence")]
        target_gamma: Option<f64>,
        #[arg(long)]
        target_coherence: Option<f64>,
    },
    /// Simulated contrast at the end of one loop; `--mc M` adds an ensemble.
    Contrast {
        config: PathBuf,
        #[arg(long)]
        noise: Option<NoiseKind>,
        #[arg(long)]
        mc: Option<usize>,
    },
    /// Evaluate a sweep specification.
    Sweep {
        spec: PathBuf,
        /// Log-log fit `X:Y` of two columns, repeatable.
        #[arg(long)]
        fit: Vec<String>,
    },
    /// Log-log fit of two columns of a sweep CSV.
    Fit {
        table: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
    },
    /// Write one noise realization as CSV.
    NoiseGen {
        config: PathBuf,
        #[arg(long)]
        noise: Option<NoiseKind>,
    },
    /// Run the reference checks and print one line per criterion.
    ReproducePaper {
        /// Run a single criterion.
        #[arg(long)]
        only: Option<u8>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load(path: &Path, g: &Global, noise: Option<NoiseKind>) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(s) = g.seed {
        cfg.simulation.seed = s;
    }
    if let Some(o) = &g.out {
        cfg.output.dir = Some(o.clone());
    }
    if let Some(n) = noise {
        cfg.noise.kind = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// `Ok(true)` when the command should stop after emitting the config.
fn emit<T: serde::Serialize>(g: &Global, cfg: &T) -> Result<bool> {
    if g.emit_config {
        println!("{}", serde_json::to_string_pretty(cfg)?);
    }
    Ok(g.emit_config)
}

fn out_file(dir: &Option<PathBuf>, name: &str) -> Result<Option<BufWriter<File>>> {
    match dir {
        None => Ok(None),
        Some(d) => {
            std::fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
            let p = d.join(name);
            Ok(Some(BufWriter::new(
                File::create(&p).with_context(|| format!("creating {}", p.display()))?,
            )))
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let g = &cli.global;
    match cli.command {
        Command::Derive { config } => {
            let cfg = load(&config, g, None)?;
            if emit(g, &cfg)? {
                return Ok(ExitCode::SUCCESS);
            }
            let dq = derive_quantities(&cfg.params)?;
            let mut r = Report::new("derive");
            r.num("eta0", dq.eta0, "T/m");
            r.num("omega0", dq.omega0, "rad/s");
            r.num("H", dq.h, "T/m^2");
            r.num("T_exp", dq.t_exp, "s");
            r.num("dx_max", dq.dx_max, "m");
            r.num("sigma_x", dq.sigma_x, "m");
            r.num("sigma_p", dq.sigma_p, "kg m/s");
            r.num("C_R", dq.c_right, "J m/T");
            r.num("C_L", dq.c_left, "J m/T");
            r.finish(&cfg.output.dir)?;
        }
        Command::Gamma {
            config,
            noise,
            ximin,
            ximax,
            with_dev,
        } => {
            let mut cfg = load(&config, g, noise)?;
            if let Some(x) = ximin {
                cfg.integration.xi_min = x;
            }
            if let Some(x) = ximax {
                cfg.integration.xi_max = x;
            }
            cfg.validate()?;
            if emit(g, &cfg)? {
                return Ok(ExitCode::SUCCESS);
            }
            let dq = derive_quantities(&cfg.params)?;
            let spec = cfg.spectrum()?;
            let mut rows = vec![("ho", gamma(&spec, &dq, &TransferKind::Ho, &cfg.integration)?)];
            if with_dev {
                rows.push(("dev", gamma(&spec, &dq, &TransferKind::Dev, &cfg.integration)?));
                rows.push(("total", gamma_total(&spec, &dq, &cfg.integration)?));
            }
            let mut r = Report::new("gamma");
            for (name, res) in &rows {
                gamma_lines(&mut r, name, res);
            }
            let alpha = match cfg.noise.kind {
                NoiseKind::White | NoiseKind::None => Some(0.0),
                NoiseKind::Flicker => Some(cfg.noise.alpha),
                NoiseKind::Custom => None,
            };
            if let Some(alpha) = alpha {
                r.num("weight_integral", ho_weight_integral(alpha, &cfg.integration)?, "");
            }
            if let Some(mut w) = out_file(&cfg.output.dir, "gamma.csv")? {
                report::write_gamma_csv(&mut w, &rows)?;
            }
            r.finish(&cfg.output.dir)?;
        }
        Command::Bound {
            config,
            target_gamma,
            target_coherence,
        } => {
            let cfg = load(&config, g, None)?;
            if emit(g, &cfg)? {
                return Ok(ExitCode::SUCCESS);
            }
            let dq = derive_quantities(&cfg.params)?;
            let target = match (target_gamma, target_coherence) {
                (Some(t), _) => t,
                (None, Some(c)) => {
                    if !(c > 0.0 && c < 1.0) {
                        bail!("target: coherence must lie in (0, 1)");
                    }
                    -c.ln() / dq.t_exp
                }
                (None, None) => unreachable!("clap requires one target"),
            };
            let iw = ho_weight_integral(0.0, &cfg.integration)?;
            let ifl = ho_weight_integral(cfg.noise.alpha, &cfg.integration)?;
            let a = bound_white(target, &dq, iw)?;
            let fb = bound_flicker(target, &dq, &NoiseSpectrum::flicker(1.0, cfg.noise.alpha, &cfg.params), ifl)?;
            let mut r = Report::new("bound");
            r.num("gamma_target", target, "1/s");
            r.num("coherence_at_T_exp", coherence(target, dq.t_exp), "");
            r.num("integral_F", iw, "");
            r.num("integral_F_over_xi_alpha", ifl, "");
            r.num("A", a, "T m^-1 Hz^-1/2");
            r.num("K_tilde", fb.ktilde, "T m^-1 Hz^-1/2");
            r.num("K", fb.k, "");
            r.num("dI_over_I", current_noise_ratio(target, &dq), "");
            r.num("dI_over_I_white_route", current_noise_ratio_from_level(a, iw, &dq), "");
            r.num("dI_over_I_flicker_route", current_noise_ratio_from_level(fb.ktilde, ifl, &dq), "");
            r.finish(&cfg.output.dir)?;
        }
        Command::Contrast { config, noise, mc } => {
            let mut cfg = load(&config, g, noise)?;
            if let Some(m) = mc {
                cfg.simulation.realizations = m;
            }
            if emit(g, &cfg)? {
                return Ok(ExitCode::SUCCESS);
            }
            let dq = derive_quantities(&cfg.params)?;
            let spec = cfg.spectrum()?;
            let sim = &cfg.simulation;
            let grid = SimulationGrid::for_loops(&dq, sim.loops, sim.per_loop, sim.seed)?;
            let real = synthesize_noise(&spec, &grid)?;
            let dev = TrajectoryDeviation::compute(&real, &dq, &cfg.params, Solver::Frequency)?;
            let single = contrast_single(&dev, &dq, dq.t_exp)?;
            let mut r = Report::new("contrast");
            r.num("contrast", single.contrast, "");
            r.num("dx_at_T_exp", single.dx_final, "m");
            r.num("dp_at_T_exp", single.dp_final, "kg m/s");
            r.num("max_separation_first_loop", dev.max_separation(sim.per_loop + 1), "m");
            r.num("deterministic_dp_amplitude", deterministic_dp_amplitude(&dq), "kg m/s");
            if let Some(mut w) = out_file(&cfg.output.dir, "trace.csv")? {
                write_trace_csv(&mut w, &real, &dev)?;
            }
            if mc.is_some() {
                let e = contrast_ensemble_on(&spec, &dq, &cfg.params, sim.realizations, dq.t_exp, &grid)?;
                r.num("ensemble_contrast", e.contrast, "");
                r.num("ensemble_mean_dx2", e.mean_dx2, "m^2");
                r.num("ensemble_mean_dx2_se", e.mean_dx2_se, "m^2");
                r.num("ensemble_mean_dp2", e.mean_dp2, "kg^2 m^2/s^2");
                r.num("ensemble_mean_dp2_se", e.mean_dp2_se, "kg^2 m^2/s^2");
                if let (Some(x2), Some(c)) = (e.closed_form_dx2, e.closed_form_contrast) {
                    r.num("closed_form_dx2", x2, "m^2");
                    r.num("closed_form_contrast", c, "");
                }
                r.num("realizations", e.realizations as f64, "");
            }
            r.finish(&cfg.output.dir)?;
        }
        Command::Sweep { spec, fit } => {
            let text = std::fs::read_to_string(&spec).with_context(|| format!("reading {}", spec.display()))?;
            let s: SweepSpec = serde_json::from_str(&text).context("invalid sweep specification")?;
            if emit(g, &s)? {
                return Ok(ExitCode::SUCCESS);
            }
            let table = run_sweep(&s)?;
            match out_file(&g.out, "sweep.csv")? {
                Some(mut w) => table.write_csv(&mut w)?,
                None => table.write_csv(std::io::stdout().lock())?,
            }
            if table.failed_rows() > 0 {
                eprintln!("{} of {} rows flagged", table.failed_rows(), table.rows.len());
            }
            if !fit.is_empty() {
                let mut r = Report::new("fit");
                for f in &fit {
                    let (x, y) = f.split_once(':').context("--fit expects X:Y")?;
                    fit_lines(&mut r, &table, x, y)?;
                }
                if g.out.is_some() {
                    r.finish(&g.out)?;
                } else {
                    r.print_to_stderr();
                }
            }
        }
        Command::Fit { table, x, y } => {
            let f = File::open(&table).with_context(|| format!("opening {}", table.display()))?;
            let t = SweepTable::from_csv_reader(f)?;
            let mut r = Report::new("fit");
            fit_lines(&mut r, &t, &x, &y)?;
            r.finish(&g.out)?;
        }
        Command::NoiseGen { config, noise } => {
            let cfg = load(&config, g, noise)?;
            if emit(g, &cfg)? {
                return Ok(ExitCode::SUCCESS);
            }
            let dq = derive_quantities(&cfg.params)?;
            let sim = &cfg.simulation;
            let grid = SimulationGrid::for_loops(&dq, sim.loops, sim.per_loop, sim.seed)?;
            let real = synthesize_noise(&cfg.spectrum()?, &grid)?;
            match out_file(&cfg.output.dir, "noise.csv")? {
                Some(mut w) => write_noise_csv(&mut w, &real)?,
                None => write_noise_csv(std::io::stdout().lock(), &real)?,
            }
        }
        Command::ReproducePaper { only } => {
            let results = match only {
                Some(id) => vec![reproduce::run(id).with_context(|| format!("no criterion {id}"))?],
                None => reproduce::run_all(),
            };
            let mut failed = 0;
            for c in &results {
                println!("{c}");
                if c.status == Status::Fail {
                    failed += 1;
                }
            }
            println!("{} of {} criteria failed", failed, results.len());
            if failed > 0 {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn gamma_lines(r: &mut Report, name: &str, res: &DephasingResult) {
    r.num(&format!("{name}.gamma"), res.gamma, "1/s");
    r.num(&format!("{name}.coherence"), res.coherence, "");
    r.num(&format!("{name}.integral"), res.integral_value, "");
    r.num(&format!("{name}.abs_error"), res.diagnostics.abs_error, "");
    if let Some(t) = res.tail_estimate {
        r.num(&format!("{name}.tail_bound"), t, "");
    }
}

fn fit_lines(r: &mut Report, t: &SweepTable, x: &str, y: &str) -> Result<()> {
    let f = loglog_fit(t, x, y)?;
    r.num(&format!("{y}_vs_{x}.slope"), f.slope, "");
    r.num(&format!("{y}_vs_{x}.intercept"), f.intercept, "");
    r.num(&format!("{y}_vs_{x}.residual_rms"), f.residual_rms, "");
    r.num(&format!("{y}_vs_{x}.n"), f.n as f64, "");
    Ok(())
}
