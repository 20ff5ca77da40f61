use proptest::prelude::*;
use sgnoise::physics::{derive_quantities, DerivedQuantities, ExperimentParams};
use sgnoise::reproduce::reference_levels;
use sgnoise::spectra::NoiseSpectrum;
use sgnoise::stochastic::{
    contrast_ensemble, contrast_single, synthesize_noise_indexed, SimulationGrid, Solver, TrajectoryDeviation,
};

fn setup() -> (ExperimentParams, DerivedQuantities) {
    let p = ExperimentParams::table1(1e-15);
    let dq = derive_quantities(&p).unwrap();
    (p, dq)
}

#[test]
fn ensemble_dx2_matches_white_closed_form() {
    let (p, dq) = setup();
    let (a, _) = reference_levels(&p, &dq).unwrap();
    let e = contrast_ensemble(&NoiseSpectrum::white(a), &dq, &p, 500, dq.t_exp, 11).unwrap();
    let cf = e.closed_form_dx2.unwrap();
    let z = (e.mean_dx2 - cf) / e.mean_dx2_se;
    assert!(z.abs() < 3.0, "mc {:e} ± {:e} vs {cf:e}", e.mean_dx2, e.mean_dx2_se);
    assert!(e.closed_form_contrast.unwrap() > 0.99);
    assert!(e.contrast > 0.99);
}

#[test]
fn realizations_are_reproducible() {
    let (p, dq) = setup();
    let g = SimulationGrid::for_loops(&dq, 4, 256, 77).unwrap();
    let spec = NoiseSpectrum::flicker(1e-13, 1.0, &p);
    let a = synthesize_noise_indexed(&spec, &g, 5).unwrap();
    let b = synthesize_noise_indexed(&spec, &g, 5).unwrap();
    let c = synthesize_noise_indexed(&spec, &g, 6).unwrap();
    assert!(a.values.iter().zip(&b.values).all(|(x, y)| x.to_bits() == y.to_bits()));
    assert_ne!(a.values, c.values);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn contrast_stays_in_unit_interval(log_a in -8.0f64..-2.0, seed in 0u64..1000, k in 1usize..512) {
        let (p, dq) = setup();
        let g = SimulationGrid::for_loops(&dq, 2, 256, seed).unwrap();
        let r = synthesize_noise_indexed(&NoiseSpectrum::white(10f64.powf(log_a)), &g, 0).unwrap();
        let dev = TrajectoryDeviation::compute(&r, &dq, &p, Solver::Frequency).unwrap();
        let c = contrast_single(&dev, &dq, g.time(k)).unwrap();
        prop_assert!(c.contrast >= 0.0 && c.contrast <= 1.0);
    }

    #[test]
    fn separation_is_linear_in_noise(scale in 0.1f64..10.0, seed in 0u64..1000) {
        let (p, dq) = setup();
        let g = SimulationGrid::for_loops(&dq, 2, 256, seed).unwrap();
        let s1 = NoiseSpectrum::white(1e-6);
        let s2 = NoiseSpectrum::white(1e-6 * scale);
        let d1 = TrajectoryDeviation::compute(&synthesize_noise_indexed(&s1, &g, 0).unwrap(), &dq, &p, Solver::Frequency).unwrap();
        let d2 = TrajectoryDeviation::compute(&synthesize_noise_indexed(&s2, &g, 0).unwrap(), &dq, &p, Solver::Frequency).unwrap();
        let r = d2.max_separation(257) / d1.max_separation(257);
        prop_assert!((r / scale - 1.0).abs() < 1e-9);
    }
}
