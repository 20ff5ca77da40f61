//! Globally adaptive Gauss–Kronrod (7/15) quadrature over a list of forced
//! breakpoints. The panel with the largest error estimate is bisected until
//! the summed error meets the tolerance or the panel budget runs out.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub a: f64,
    pub b: f64,
    pub value: f64,
    pub error: f64,
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

pub fn gk15<F>(f: &F, a: f64, b: f64) -> Result<Panel>
where
    F: Fn(f64) -> Result<f64>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs = kron.abs();
    let mut fv = [(0.0, 0.0); 7];
    for j in 0..7 {
        let x = h * XGK[j];
        let (f1, f2) = (f(c - x)?, f(c + x)?);
        fv[j] = (f1, f2);
        kron += WGK[j] * (f1 + f2);
        abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kron;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((fv[j].0 - mean).abs() + (fv[j].1 - mean).abs());
    }
    let (value, abs, asc) = (kron * h, abs * h.abs(), asc * h.abs());
    let mut err = ((kron - gauss) * h).abs();
    if asc != 0.0 && err != 0.0 {
        err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
    }
    if abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * abs);
    }
    Ok(Panel { a, b, value, error: err })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 0.0,
            max_panels: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadOutcome {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
    pub evaluations: usize,
}

/// Integrates `f` over `[breaks[0], breaks.last()]`, never straddling an
/// interior break. Panel sums are taken in order of position, so the result
/// does not depend on refinement order.
pub fn integrate<F>(f: F, breaks: &[f64], opts: QuadOptions) -> Result<QuadOutcome>
where
    F: Fn(f64) -> Result<f64>,
{
    if breaks.len() < 2 || breaks.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Grid(format!("quadrature breaks must be increasing: {breaks:?}")));
    }
    let mut heap = BinaryHeap::new();
    for w in breaks.windows(2) {
        heap.push(gk15(&f, w[0], w[1])?);
    }
    let mut evaluations = 15 * heap.len();
    let ordered_total = |heap: &BinaryHeap<Panel>| {
        let mut v: Vec<&Panel> = heap.iter().collect();
        v.sort_by(|p, q| p.a.total_cmp(&q.a));
        v.iter().fold((0.0, 0.0), |(s, e), p| (s + p.value, e + p.error))
    };
    let (mut value, mut error) = ordered_total(&heap);
    loop {
        if error <= opts.abs_tol.max(opts.rel_tol * value.abs()) {
            let (value, error) = ordered_total(&heap);
            return Ok(QuadOutcome {
                value,
                error,
                panels: heap.len(),
                evaluations,
            });
        }
        let worst = *heap.peek().unwrap();
        let mid = 0.5 * (worst.a + worst.b);
        if heap.len() >= opts.max_panels || !(mid > worst.a && mid < worst.b) {
            let (value, error) = ordered_total(&heap);
            return Err(Error::QuadratureNotConverged {
                rel_tol: opts.rel_tol,
                estimate: value,
                error,
                worst_a: worst.a,
                worst_b: worst.b,
            });
        }
        heap.pop();
        let (l, r) = (gk15(&f, worst.a, mid)?, gk15(&f, mid, worst.b)?);
        value += l.value + r.value - worst.value;
        error += l.error + r.error - worst.error;
        heap.push(l);
        heap.push(r);
        evaluations += 30;
    }
}
