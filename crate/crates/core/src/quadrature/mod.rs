//! Adaptive integration of the explicit second-moment double integral and of
//! the right-hand side of the even-moment generating identity.

pub mod cubature;
pub mod gauss_kronrod;

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specialfun::{
    df_dz, s_unchecked, t_prime_unchecked, t_unchecked, MgfPoint, T_PRIME_MAX,
};
use cubature::{integrate_2d, CubatureTolerance, Rect};
use gauss_kronrod::{integrate_1d, Tolerance};

pub const DEFAULT_DIAG_EPS: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Truncation bound of the infinite domain.
    pub u_max: f64,
    /// Relative spacing below which the divided difference of `T` switches
    /// to the derivative branch.
    pub diag_eps: f64,
    pub max_evals: u64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            u_max: 60.0,
            diag_eps: DEFAULT_DIAG_EPS,
            max_evals: 20_000_000,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::Config("rel_tol and abs_tol must be positive".into()));
        }
        if !(self.u_max > 1.0 && self.u_max.is_finite()) {
            return Err(Error::Config(format!("u_max must exceed 1, got {}", self.u_max)));
        }
        if !(self.diag_eps > 0.0 && self.diag_eps < 0.1) {
            return Err(Error::Config(format!(
                "diag_eps must lie in (0, 0.1), got {}",
                self.diag_eps
            )));
        }
        if self.max_evals == 0 {
            return Err(Error::Config("max_evals must be positive".into()));
        }
        Ok(())
    }

    pub(crate) fn tolerance_1d(&self) -> Tolerance {
        Tolerance {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_evals: self.max_evals,
        }
    }

    fn tolerance_2d(&self) -> CubatureTolerance {
        CubatureTolerance {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_evals: self.max_evals,
        }
    }
}

/// Value, error estimate, evaluation count and the separately reported
/// bound on the part of the domain cut off at `u_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: u64,
    pub truncation_tail: f64,
}

impl IntegralResult {
    fn with_tail(self, truncation_tail: f64) -> Self {
        Self {
            truncation_tail,
            ..self
        }
    }
}

fn with_tail(result: Result<IntegralResult>, tail: f64) -> Result<IntegralResult> {
    match result {
        Ok(r) => Ok(r.with_tail(tail)),
        Err(Error::BudgetExhausted { best }) => Err(Error::BudgetExhausted {
            best: best.with_tail(tail),
        }),
        Err(e) => Err(e),
    }
}

/// `(T(u1) - T(u2)) / (u1 - u2)`, switching to `T'` at the midpoint when
/// `|u1 - u2| < diag_eps * max(1, u1, u2)`.
pub fn divided_diff_t(u1: f64, u2: f64, diag_eps: f64) -> Result<f64> {
    for (name, u) in [("u1", u1), ("u2", u2)] {
        if !(u.is_finite() && u >= 0.0) {
            return Err(Error::domain(name, u, "finite and >= 0"));
        }
    }
    Ok(divided_diff_unchecked(u1, u2, diag_eps))
}

fn divided_diff_unchecked(u1: f64, u2: f64, diag_eps: f64) -> f64 {
    let gap = u1 - u2;
    if gap.abs() < diag_eps * u1.max(u2).max(1.0) {
        t_prime_unchecked(0.5 * (u1 + u2))
    } else {
        (t_unchecked(u1) - t_unchecked(u2)) / gap
    }
}

/// `(2 u1 u2 / (u1 + u2)) S(u1) S(u2) (T(u1) - T(u2)) / (u1 - u2)` on `0 <= u2 <= u1`.
pub fn second_moment_integrand(u1: f64, u2: f64) -> Result<f64> {
    if !(u2 >= 0.0 && u2 <= u1 && u1.is_finite()) {
        return Err(Error::Domain {
            name: "u2",
            value: u2,
            expected: "0 <= u2 <= u1 < inf",
        });
    }
    Ok(integrand_unchecked(u1, u2, DEFAULT_DIAG_EPS))
}

fn integrand_unchecked(u1: f64, u2: f64, diag_eps: f64) -> f64 {
    let sum = u1 + u2;
    if sum == 0.0 {
        return 0.0;
    }
    2.0 * u1 * u2 / sum
        * s_unchecked(u1)
        * s_unchecked(u2)
        * divided_diff_unchecked(u1, u2, diag_eps)
}

fn tail_tolerance() -> Tolerance {
    Tolerance {
        rel_tol: 1e-10,
        abs_tol: 1e-300,
        max_evals: 1_000_000,
    }
}

/// `int_0^inf u S(u) du` (about 10.758).
fn first_moment_of_s() -> f64 {
    static VALUE: OnceLock<f64> = OnceLock::new();
    *VALUE.get_or_init(|| {
        integrate_1d(
            |u| u * s_unchecked(u),
            0.0,
            150.0,
            &[1.0, 5.0, 20.0, 50.0],
            tail_tolerance(),
        )
        .map(|r| r.value)
        .unwrap_or(10.76)
    })
}

/// `int_0^inf S(u) du` (about 3.8426).
fn zeroth_moment_of_s() -> f64 {
    static VALUE: OnceLock<f64> = OnceLock::new();
    *VALUE.get_or_init(|| {
        integrate_1d(
            s_unchecked,
            0.0,
            150.0,
            &[1.0, 5.0, 20.0, 50.0],
            tail_tolerance(),
        )
        .map(|r| r.value)
        .unwrap_or(3.85)
    })
}

/// `int_lower^inf u^power S(u) du` by quadrature over `[lower, lower + 150]`;
/// the remainder is below `e^-75` relative.
pub(crate) fn s_tail_moment(lower: f64, power: i32) -> f64 {
    integrate_1d(
        |u| u.powi(power) * s_unchecked(u),
        lower,
        lower + 150.0,
        &[lower + 10.0, lower + 40.0],
        tail_tolerance(),
    )
    .map(|r| r.value)
    .unwrap_or(f64::INFINITY)
}

/// Bound on the second-moment integral over `u1 > u_max`.
///
/// On the triangle `2 u1 u2 / (u1 + u2) <= 2 u2` and the divided difference
/// is at most `max T'`, so the tail is below
/// `2 max(T') int_0^inf u S(u) du * int_{u_max}^inf S(u) du`.
pub fn second_moment_tail(u_max: f64) -> f64 {
    2.0 * T_PRIME_MAX * first_moment_of_s() * s_tail_moment(u_max, 0)
}

fn second_moment_cells(u_max: f64) -> Vec<Rect> {
    let mut xs: Vec<f64> = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0]
        .into_iter()
        .filter(|&x| x < u_max)
        .collect();
    xs.push(u_max);
    Rect::grid(&xs, &[0.0, 0.5, 1.0])
}

/// `E[theta^2]` from the explicit double integral over `0 <= u2 <= u1 <= u_max`.
///
/// The triangle is mapped onto a rectangle with `u2 = t u1`, `t in [0, 1]`
/// (Jacobian `u1`), which puts the removable diagonal `u1 = u2` on the edge
/// `t = 1`, never sampled by the open Kronrod nodes.
pub fn second_moment(spec: &QuadratureSpec) -> Result<IntegralResult> {
    spec.validate()?;
    let diag_eps = spec.diag_eps;
    let mapped = move |u1: f64, t: f64| u1 * integrand_unchecked(u1, t * u1, diag_eps);
    let result = integrate_2d(mapped, &second_moment_cells(spec.u_max), spec.tolerance_2d());
    with_tail(result, second_moment_tail(spec.u_max))
}

/// Lower cut-off of the `beta` integrals in [`generating_rhs`].
pub const GENERATING_BETA_MIN: f64 = 1e-4;

/// Bound on the generating-identity integral outside
/// `[beta_min, sqrt(2) u_max]^2`.
///
/// Near zero, `T(c+) - T(c-) <= max(T') (c+ - c-)` gives
/// `z F' <= sqrt(2) max(T') z^2 min(beta)^2 max(beta) S(max(beta) / sqrt 2)`,
/// and for large betas `z F' <= z beta1 beta2 S(c+) / 12`, with `c+ >= max(beta) / sqrt 2`.
pub fn generating_tail(z: f64, u_max: f64) -> f64 {
    let eps = GENERATING_BETA_MIN;
    let low = 2.0 * T_PRIME_MAX * z * z * eps * eps * zeroth_moment_of_s();
    let high = z / 3.0 * s_tail_moment(u_max, 1);
    low + high
}

/// `int_0^inf int_0^inf (dbeta1 / beta1)(dbeta2 / beta2) z dF/dz(beta1, beta2, z)`,
/// integrated in `t = ln beta` over `[ln beta_min, ln(sqrt(2) u_max)]^2`.
pub fn generating_rhs(z: f64, spec: &QuadratureSpec) -> Result<IntegralResult> {
    spec.validate()?;
    if !(z > 0.0 && z < 1.0) {
        return Err(Error::domain("z", z, "in (0, 1)"));
    }
    let lo = GENERATING_BETA_MIN.ln();
    let hi = (std::f64::consts::SQRT_2 * spec.u_max).ln();
    let mut cuts: Vec<f64> = [-4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]
        .into_iter()
        .filter(|&t| t > lo && t < hi)
        .collect();
    cuts.insert(0, lo);
    cuts.push(hi);
    let cells = Rect::grid(&cuts, &cuts);
    let integrand = move |t1: f64, t2: f64| {
        let p = MgfPoint {
            beta1: t1.exp(),
            beta2: t2.exp(),
            a: z,
        };
        // z > 0 keeps the discriminant positive, so df_dz cannot fail here.
        z * df_dz(&p).unwrap_or(0.0)
    };
    let result = integrate_2d(integrand, &cells, spec.tolerance_2d());
    with_tail(result, generating_tail(z, spec.u_max))
}
