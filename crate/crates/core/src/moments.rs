//! Even moments `E[theta^{2n}]` from the series representation in terms of
//! the odd Taylor coefficients `s_r(u)` of the bracket `B(u, v)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_kronrod::integrate_1d;
use crate::quadrature::{s_tail_moment, IntegralResult, QuadratureSpec};
use crate::specialfun::{s_unchecked, t_unchecked};
use crate::sum::NeumaierSum;

/// Stop summing once a term falls below this fraction of the running sum.
pub const R_STOP_REL: f64 = 1e-6;
pub const DEFAULT_R_MAX: usize = 40;
/// Largest admissible `eps * v_radius^-(2 r_max - 1)`.
const CONDITION_LIMIT: f64 = 1e-4;
const RESIDUAL_LIMIT: f64 = 1e-9;
const RESIDUAL_POINTS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentMethod {
    Theorem3,
    Prop10,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentResult {
    /// Moment order is `2 n`.
    pub n: usize,
    pub value: f64,
    pub r_truncation: usize,
    pub tail_estimate: f64,
    pub error_estimate: f64,
    pub method: MomentMethod,
}

fn check_v(v: f64) -> Result<()> {
    if v.abs() < 1.0 {
        Ok(())
    } else {
        Err(Error::domain("v", v, "|v| < 1"))
    }
}

/// `u/(1+v) S(u sqrt((1-v)/(1+v))) - u/(1-v) S(u sqrt((1+v)/(1-v)))`.
pub fn bracket_b(u: f64, v: f64) -> Result<f64> {
    check_v(v)?;
    if !(u >= 0.0 && u.is_finite()) {
        return Err(Error::domain("u", u, "finite and >= 0"));
    }
    let (p, m) = (1.0 + v, 1.0 - v);
    Ok(u / p * s_unchecked(u * (m / p).sqrt()) - u / m * s_unchecked(u * (p / m).sqrt()))
}

/// `S` continued to `Re w > 0`.
fn s_complex(w: Complex64) -> Complex64 {
    if w.norm() < 1.0 {
        (w / w.sinh()).sqrt()
    } else {
        let one = Complex64::new(1.0, 0.0);
        (0.5 * (w.ln() - w - ((one - (-2.0 * w).exp()) * 0.5).ln())).exp()
    }
}

fn bracket_b_complex(u: f64, v: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    let (p, m) = (one + v, one - v);
    u / p * s_complex(u * (m / p).sqrt()) - u / m * s_complex(u * (p / m).sqrt())
}

/// Exponentially stretched grid on `[0, u_max]` with `points` nodes.
pub fn default_u_grid(u_max: f64, points: usize, alpha: f64) -> Vec<f64> {
    let k = (points - 1) as f64;
    let denom = alpha.exp_m1();
    (0..points)
        .map(|i| {
            if i + 1 == points {
                u_max
            } else {
                u_max * (alpha * i as f64 / k).exp_m1() / denom
            }
        })
        .collect()
}

/// Extraction settings for [`SeriesTable`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractionSpec {
    pub v_radius: f64,
    pub node_count: usize,
    pub r_max: usize,
    pub grid_points: usize,
    pub grid_alpha: f64,
}

impl Default for ExtractionSpec {
    fn default() -> Self {
        Self {
            v_radius: 0.9,
            node_count: 512,
            r_max: 120,
            grid_points: 401,
            grid_alpha: 6.0,
        }
    }
}

impl ExtractionSpec {
    pub fn build(&self, u_max: f64) -> Result<SeriesTable> {
        if self.grid_points < 4 {
            return Err(Error::Config("grid_points must be at least 4".into()));
        }
        let grid = default_u_grid(u_max, self.grid_points, self.grid_alpha);
        extract_sr(&grid, self.r_max, self.v_radius, self.node_count)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesTable {
    pub u_grid: Vec<f64>,
    pub r_max: usize,
    /// `coeffs[r - 1][k] = s_r(u_grid[k])`.
    pub coeffs: Vec<Vec<f64>>,
    pub v_radius: f64,
    pub node_count: usize,
    /// Largest reconstruction error on `[-v_radius, v_radius]` relative to `max |B|`.
    pub residual: f64,
    /// First `r` from which `v_radius^2 max_u |s_{r+1}| < max_u |s_r|` holds up to `r_max`.
    pub decay_onset: Option<usize>,
}

impl SeriesTable {
    pub fn s(&self, r: usize) -> Option<&[f64]> {
        self.coeffs.get(r.checked_sub(1)?).map(Vec::as_slice)
    }

    /// `int_0^u_max 2 S(u) T(u) s_r(u) du` for `r = 1..=r_max`, with `s_r`
    /// interpolated by a natural cubic spline. The truncation tail uses
    /// `|2 S T s_r| <= max|s_r| S / 3` beyond the grid.
    pub fn u_integrals(&self, r_max: usize, spec: &QuadratureSpec) -> Result<Vec<IntegralResult>> {
        spec.validate()?;
        if r_max > self.r_max {
            return Err(Error::Config(format!(
                "r_max {r_max} exceeds the {} extracted coefficients",
                self.r_max
            )));
        }
        let (lo, hi) = (self.u_grid[0], *self.u_grid.last().expect("non-empty grid"));
        let breaks = &self.u_grid[1..self.u_grid.len() - 1];
        let s_tail = s_tail_moment(hi, 0);
        self.coeffs[..r_max]
            .par_iter()
            .map(|row| {
                let spline = NaturalSpline::new(&self.u_grid, row);
                let f = |u: f64| 2.0 * s_unchecked(u) * t_unchecked(u) * spline.eval(u);
                let sup = row.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                integrate_1d(f, lo, hi, breaks, spec.tolerance_1d()).map(|r| IntegralResult {
                    truncation_tail: sup * s_tail / 3.0,
                    ..r
                })
            })
            .collect()
    }
}

/// Odd Taylor coefficients `s_1..s_{r_max}` of `v -> B(u, v)` at each grid
/// point, read off a discrete Cauchy integral on `|v| = v_radius`.
pub fn extract_sr(u_grid: &[f64], r_max: usize, v_radius: f64, node_count: usize) -> Result<SeriesTable> {
    if !(v_radius > 0.0 && v_radius < 1.0) {
        return Err(Error::domain("v_radius", v_radius, "in (0, 1)"));
    }
    if r_max == 0 || node_count < 4 * r_max {
        return Err(Error::Config(format!(
            "need r_max >= 1 and node_count >= 4 r_max, got r_max {r_max}, node_count {node_count}"
        )));
    }
    if u_grid.is_empty()
        || u_grid[0] < 0.0
        || u_grid.windows(2).any(|w| !(w[1] > w[0]))
        || !u_grid.iter().all(|u| u.is_finite())
    {
        return Err(Error::Config("u_grid must be finite, nonnegative and strictly increasing".into()));
    }
    let amplification = f64::EPSILON * v_radius.powi(-(2 * r_max as i32 - 1));
    if amplification > CONDITION_LIMIT {
        return Err(Error::IllConditioned(format!(
            "coefficient {r_max} at radius {v_radius} amplifies rounding by {amplification:.1e}; \
             use a larger v_radius or fewer coefficients"
        )));
    }

    let nodes: Vec<Complex64> = (0..node_count)
        .map(|k| Complex64::from_polar(v_radius, 2.0 * PI * k as f64 / node_count as f64))
        .collect();
    let rows: Vec<(Vec<f64>, f64)> = u_grid
        .par_iter()
        .map(|&u| coefficients_at(u, &nodes, r_max, v_radius))
        .collect();

    let residual = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    if !(residual <= RESIDUAL_LIMIT) {
        return Err(Error::IllConditioned(format!(
            "reconstruction residual {residual:.2e} exceeds {RESIDUAL_LIMIT:.0e}; \
             use more coefficients or a smaller v_radius"
        )));
    }
    let mut coeffs = vec![vec![0.0; u_grid.len()]; r_max];
    for (k, (row, _)) in rows.iter().enumerate() {
        for (r, c) in row.iter().enumerate() {
            coeffs[r][k] = *c;
        }
    }
    let sup: Vec<f64> = coeffs
        .iter()
        .map(|c| c.iter().fold(0.0f64, |m, x| m.max(x.abs())))
        .collect();
    let rho2 = v_radius * v_radius;
    let mut decay_onset = Some(1);
    for r in 1..r_max {
        if !(rho2 * sup[r] < sup[r - 1]) {
            decay_onset = (r + 1 < r_max).then_some(r + 1);
        }
    }
    Ok(SeriesTable {
        u_grid: u_grid.to_vec(),
        r_max,
        coeffs,
        v_radius,
        node_count,
        residual,
        decay_onset,
    })
}

fn coefficients_at(u: f64, nodes: &[Complex64], r_max: usize, rho: f64) -> (Vec<f64>, f64) {
    if u == 0.0 {
        return (vec![0.0; r_max], 0.0);
    }
    let n = nodes.len();
    let values: Vec<Complex64> = nodes.iter().map(|&v| bracket_b_complex(u, v)).collect();
    let coeffs: Vec<f64> = (1..=r_max)
        .map(|r| {
            let m = 2 * r - 1;
            let mut acc = NeumaierSum::new();
            for (k, b) in values.iter().enumerate() {
                // Re(b * exp(-2 pi i k m / n)), index reduced mod n for accuracy.
                let phase = 2.0 * PI * ((k * m) % n) as f64 / n as f64;
                acc.add(b.re * phase.cos() + b.im * phase.sin());
            }
            acc.value() / n as f64 / rho.powi(m as i32)
        })
        .collect();

    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for i in 1..=RESIDUAL_POINTS {
        let v = rho * i as f64 / RESIDUAL_POINTS as f64;
        let exact = bracket_b(u, v).unwrap_or(f64::NAN);
        let mut series = 0.0;
        for c in coeffs.iter().rev() {
            series = series * v * v + c;
        }
        series *= v;
        worst = worst.max((series - exact).abs());
        scale = scale.max(exact.abs());
    }
    let residual = if scale > 0.0 { worst / scale } else { worst };
    (coeffs, residual)
}

/// `C(r-1, n-1) int_0^1 (1 - v^2)^{n-1} v^{2(r-n)} dv = C(r-1, n-1) B(r - n + 1/2, n) / 2`.
pub fn weight_integral(n: usize, r: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("n", 0.0, ">= 1"));
    }
    if r < n {
        return Err(Error::domain("r", r as f64, ">= n"));
    }
    let base = (r - n) as f64;
    let mut w = 0.5 / (base + 0.5);
    for j in 1..n {
        w *= (base + j as f64) / (base + 0.5 + j as f64);
    }
    Ok(w)
}

/// `C(2n, n) n / 4^n`.
fn prefactor(n: usize) -> f64 {
    // C(2n, n) / 4^n as a running product keeps everything near 1.
    let mut c = 1.0;
    for j in 1..=n {
        c *= (2 * j - 1) as f64 / (2 * j) as f64;
    }
    c * n as f64
}

/// `E[theta^{2n}]` from a fresh default [`SeriesTable`].
pub fn even_moment(n: usize, r_max: usize, spec: &QuadratureSpec) -> Result<MomentResult> {
    let table = ExtractionSpec::default().build(spec.u_max)?;
    let integrals = table.u_integrals(r_max, spec)?;
    even_moment_from_integrals(n, &integrals)
}

/// `E[theta^{2n}]` for `n = 1..=max_n` sharing one table.
pub fn even_moments(max_n: usize, r_max: usize, spec: &QuadratureSpec) -> Result<Vec<MomentResult>> {
    let table = ExtractionSpec::default().build(spec.u_max)?;
    let integrals = table.u_integrals(r_max, spec)?;
    (1..=max_n)
        .map(|n| even_moment_from_integrals(n, &integrals))
        .collect()
}

/// Sums `r = n..` of `weight_integral(n, r) I_r`, where `integrals[r - 1] = I_r`.
pub fn even_moment_from_integrals(n: usize, integrals: &[IntegralResult]) -> Result<MomentResult> {
    let r_max = integrals.len();
    if n == 0 {
        return Err(Error::domain("n", 0.0, ">= 1"));
    }
    if r_max < n + 5 {
        return Err(Error::Config(format!("r_max must be at least n + 5 = {}", n + 5)));
    }
    let pre = prefactor(n);
    let mut sum = NeumaierSum::new();
    let mut error = 0.0;
    let mut terms: Vec<f64> = Vec::new();
    let mut r_used = n;
    for r in n..=r_max {
        let i_r = &integrals[r - 1];
        let w = weight_integral(n, r)?;
        let term = pre * w * i_r.value;
        sum.add(term);
        error += pre * w * (i_r.error_estimate + i_r.truncation_tail);
        terms.push(term);
        r_used = r;
        if r >= n + 2 && term.abs() < R_STOP_REL * sum.value().abs() {
            break;
        }
    }
    let (last, prev) = (terms[terms.len() - 1], terms[terms.len() - 2]);
    let ratio = (last / prev).abs();
    if !(ratio < 1.0) {
        return Err(Error::NonDecaying(format!(
            "r-terms for n = {n} stopped shrinking at r = {r_used} (ratio {ratio:.3}); \
             increase r_max within the extracted range"
        )));
    }
    let value = sum.value();
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::IllConditioned(format!(
            "moment of order {} evaluated to {value}, outside [0, 1]",
            2 * n
        )));
    }
    Ok(MomentResult {
        n,
        value,
        r_truncation: r_used,
        tail_estimate: last.abs() * ratio / (1.0 - ratio),
        error_estimate: error,
        method: MomentMethod::Theorem3,
    })
}

/// Natural cubic spline through `(x, y)`.
struct NaturalSpline<'a> {
    x: &'a [f64],
    y: &'a [f64],
    m: Vec<f64>,
}

impl<'a> NaturalSpline<'a> {
    fn new(x: &'a [f64], y: &'a [f64]) -> Self {
        let n = x.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm for the second derivatives.
            let mut c = vec![0.0; n];
            let mut d = vec![0.0; n];
            for i in 1..n - 1 {
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                let rhs = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
                let diag = 2.0 * (h0 + h1) - h0 * c[i - 1];
                c[i] = h1 / diag;
                d[i] = (rhs - h0 * d[i - 1]) / diag;
            }
            for i in (1..n - 1).rev() {
                m[i] = d[i] - c[i] * m[i + 1];
            }
        }
        Self { x, y, m }
    }

    fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let i = self.x.partition_point(|&v| v <= t).clamp(1, n - 1) - 1;
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}
