//! 7-point Gauss / 15-point Kronrod pair and a globally adaptive 1-D driver.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::IntegralResult;
use crate::error::{Error, Result};
use crate::sum::pairwise_sum;

/// Kronrod abscissae on [-1, 1], non-negative half, descending; odd indices
/// are the Gauss points.
pub(crate) const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

pub(crate) const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for `XGK[1], XGK[3], XGK[5], XGK[7]`.
pub(crate) const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// The 15 Kronrod nodes mapped to `[a, b]`, with Kronrod and Gauss weights
/// (Gauss weight zero at Kronrod-only nodes).
pub(crate) fn mapped_rule(a: f64, b: f64) -> [(f64, f64, f64); 15] {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut out = [(0.0, 0.0, 0.0); 15];
    for (i, (&x, &wk)) in XGK.iter().zip(&WGK).enumerate() {
        let wg = if i % 2 == 1 { WG[i / 2] } else { 0.0 };
        if i == 7 {
            out[14] = (center, wk * half, wg * half);
        } else {
            out[2 * i] = (center - half * x, wk * half, wg * half);
            out[2 * i + 1] = (center + half * x, wk * half, wg * half);
        }
    }
    out
}

/// One 15-point panel: (Kronrod value, error estimate).
///
/// Error follows QUADPACK's heuristic `resasc * min(1, (200 |K - G| / resasc)^1.5)`.
fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let rule = mapped_rule(a, b);
    let values: Vec<f64> = rule.iter().map(|&(x, _, _)| f(x)).collect();
    let kronrod: f64 = rule.iter().zip(&values).map(|(r, v)| r.1 * v).sum();
    let gauss: f64 = rule.iter().zip(&values).map(|(r, v)| r.2 * v).sum();
    let mean = kronrod / (b - a);
    let resasc: f64 = rule
        .iter()
        .zip(&values)
        .map(|(r, v)| r.1.abs() * (v - mean).abs())
        .sum();
    let resabs: f64 = rule.iter().zip(&values).map(|(r, v)| r.1.abs() * v.abs()).sum();
    let mut err = (kronrod - gauss).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (kronrod, err)
}

#[derive(Debug, Clone, Copy)]
struct Interval {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    id: u64,
}

impl PartialEq for Interval {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Interval {}
impl PartialOrd for Interval {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Interval {
    // Largest error first; older intervals win ties.
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// Settings for [`integrate_1d`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_evals: u64,
}

/// Globally adaptive G7/K15 integration of `f` over `[a, b]` starting from
/// the given breakpoints (which must lie inside `(a, b)` and be sorted).
pub fn integrate_1d<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: Tolerance,
) -> Result<IntegralResult> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::Config(format!("bad integration interval [{a}, {b}]")));
    }
    let mut edges = vec![a];
    edges.extend(breakpoints.iter().copied().filter(|&x| x > a && x < b));
    edges.push(b);

    let mut heap = BinaryHeap::new();
    let mut next_id = 0u64;
    let mut evaluations = 0u64;
    for w in edges.windows(2) {
        let (value, error) = panel(&f, w[0], w[1]);
        evaluations += 15;
        heap.push(Interval {
            a: w[0],
            b: w[1],
            value,
            error,
            id: next_id,
        });
        next_id += 1;
    }

    let totals = |heap: &BinaryHeap<Interval>| {
        let mut cells: Vec<&Interval> = heap.iter().collect();
        cells.sort_by_key(|c| c.id);
        let values: Vec<f64> = cells.iter().map(|c| c.value).collect();
        let errors: Vec<f64> = cells.iter().map(|c| c.error).collect();
        (pairwise_sum(&values), pairwise_sum(&errors))
    };

    loop {
        let (value, error) = totals(&heap);
        if error <= tol.abs_tol.max(tol.rel_tol * value.abs()) {
            return Ok(IntegralResult {
                value,
                error_estimate: error,
                evaluations,
                truncation_tail: 0.0,
            });
        }
        let worst = *heap.peek().expect("at least one interval");
        let mid = 0.5 * (worst.a + worst.b);
        if evaluations + 30 > tol.max_evals || !(mid > worst.a && mid < worst.b) {
            return Err(Error::BudgetExhausted {
                best: IntegralResult {
                    value,
                    error_estimate: error,
                    evaluations,
                    truncation_tail: 0.0,
                },
            });
        }
        heap.pop();
        for (lo, hi) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = panel(&f, lo, hi);
            heap.push(Interval {
                a: lo,
                b: hi,
                value,
                error,
                id: next_id,
            });
            next_id += 1;
        }
        evaluations += 30;
    }
}
