//! Scalar special functions of the correlation MGF.
//!
//! `S(u) = sqrt(u / sinh u)` and `T(c) = (1 - c coth c) / (2c^2)` both have a
//! removable singularity at the origin and overflow-prone naive forms for
//! large arguments; each is evaluated piecewise so that every branch keeps
//! close to full double precision.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this argument `S` uses its Taylor expansion.
pub const S_SERIES_THRESHOLD: f64 = 1e-3;
/// Above this argument `S` is evaluated in log space.
pub const S_LOG_THRESHOLD: f64 = 30.0;
/// Below this argument `T` uses its Bernoulli series.
pub const T_SERIES_THRESHOLD: f64 = 0.1;
/// Below this argument `T'` uses the differentiated Bernoulli series.
pub const T_PRIME_SERIES_THRESHOLD: f64 = 0.5;
/// Upper bound on `T'(c)` over `c >= 0` (the maximum is 0.0236912 near c = 1.93).
pub const T_PRIME_MAX: f64 = 0.0237;

/// Coefficients `t_j` of `T(c) = sum_j t_j c^(2j)`, i.e.
/// `t_j = -2^(2k) B_(2k) / (2 (2k)!)` with `k = j + 1`.
const T_SERIES: [f64; 12] = [
    -0.166_666_666_666_666_67,
    0.011_111_111_111_111_111,
    -0.001_058_201_058_201_058_2,
    0.000_105_820_105_820_105_82,
    -0.000_010_688_899_577_788_467,
    1.082_202_140_403_198_6e-6,
    -1.096_297_392_593_688_9e-7,
    1.110_730_439_498_984e-8,
    -1.125_392_325_840_449_6e-9,
    1.140_257_560_229_609_1e-10,
    -1.155_321_629_950_131_2e-11,
    1.170_585_340_991_244_2e-12,
];

fn check_nonnegative(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(name, x, "finite and >= 0"))
    }
}

/// `S(u) = sqrt(u / sinh u)`, with `S(0) = 1`.
pub fn eval_s(u: f64) -> Result<f64> {
    check_nonnegative("u", u)?;
    Ok(s_unchecked(u))
}

pub(crate) fn s_unchecked(u: f64) -> f64 {
    if u < S_SERIES_THRESHOLD {
        s_series(u)
    } else if u <= S_LOG_THRESHOLD {
        s_direct(u)
    } else {
        s_log_space(u)
    }
}

fn s_series(u: f64) -> f64 {
    // sqrt(u / sinh u) = 1 - u^2/12 + u^4/160 - ...
    let u2 = u * u;
    1.0 + u2 * (-1.0 / 12.0 + u2 / 160.0)
}

fn s_direct(u: f64) -> f64 {
    (u / u.sinh()).sqrt()
}

/// `S` via `exp((ln u - u - ln((1 - e^{-2u}) / 2)) / 2)`; never overflows.
pub(crate) fn s_log_space(u: f64) -> f64 {
    let log_sinh = u + (-(-2.0 * u).exp()).ln_1p() - std::f64::consts::LN_2;
    (0.5 * (u.ln() - log_sinh)).exp()
}

/// `T(c) = (1 - c coth c) / (2c^2)`, with `T(0) = -1/6`.
pub fn eval_t(c: f64) -> Result<f64> {
    check_nonnegative("c", c)?;
    Ok(t_unchecked(c))
}

pub(crate) fn t_unchecked(c: f64) -> f64 {
    if c < T_SERIES_THRESHOLD {
        t_series(c)
    } else {
        t_direct(c)
    }
}

fn t_series(c: f64) -> f64 {
    let c2 = c * c;
    T_SERIES.iter().rev().fold(0.0, |acc, &t| acc * c2 + t)
}

fn t_direct(c: f64) -> f64 {
    // coth saturates to 1 well before 1/tanh loses anything.
    let coth = 1.0 / c.tanh();
    (1.0 - c * coth) / (2.0 * c * c)
}

/// Derivative `T'(c) = -1/c^3 + coth(c)/(2c^2) + 1/(2c sinh^2 c)`, with `T'(0) = 0`.
pub fn eval_t_prime(c: f64) -> Result<f64> {
    check_nonnegative("c", c)?;
    Ok(t_prime_unchecked(c))
}

pub(crate) fn t_prime_unchecked(c: f64) -> f64 {
    if c < T_PRIME_SERIES_THRESHOLD {
        let c2 = c * c;
        let mut acc = 0.0;
        for (j, &t) in T_SERIES.iter().enumerate().skip(1).rev() {
            acc = acc * c2 + 2.0 * j as f64 * t;
        }
        acc * c
    } else {
        let coth = 1.0 / c.tanh();
        // 1/sinh^2 c = 4 e^{-2c} / (1 - e^{-2c})^2
        let e = (-2.0 * c).exp();
        let inv_sinh2 = 4.0 * e / ((1.0 - e) * (1.0 - e));
        -1.0 / (c * c * c) + coth / (2.0 * c * c) + inv_sinh2 / (2.0 * c)
    }
}

/// The individual evaluation branches of `S` and `T`, each usable at any
/// positive argument, for checking agreement at the switchover points.
pub mod branches {
    pub fn s_series(u: f64) -> f64 {
        super::s_series(u)
    }

    pub fn s_direct(u: f64) -> f64 {
        super::s_direct(u)
    }

    pub fn s_log_space(u: f64) -> f64 {
        super::s_log_space(u)
    }

    pub fn t_series(c: f64) -> f64 {
        super::t_series(c)
    }

    pub fn t_direct(c: f64) -> f64 {
        super::t_direct(c)
    }
}

/// An admissible argument `(beta1, beta2, a)` of the MGF `F`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MgfPoint {
    pub beta1: f64,
    pub beta2: f64,
    pub a: f64,
}

impl MgfPoint {
    pub fn new(beta1: f64, beta2: f64, a: f64) -> Result<Self> {
        check_nonnegative("beta1", beta1)?;
        check_nonnegative("beta2", beta2)?;
        if !(a.is_finite() && a.abs() <= 1.0) {
            return Err(Error::domain("a", a, "|a| <= 1"));
        }
        Ok(Self { beta1, beta2, a })
    }

    /// `beta1^2 + beta2^2`
    pub fn sum_sq(&self) -> f64 {
        self.beta1 * self.beta1 + self.beta2 * self.beta2
    }

    /// `beta1^2 beta2^2`, formed so it is bit-symmetric in the two betas.
    pub fn prod_sq(&self) -> f64 {
        (self.beta1 * self.beta1) * (self.beta2 * self.beta2)
    }

    /// `sqrt((beta1^2 - beta2^2)^2 + 4 a^2 beta1^2 beta2^2)`
    pub fn discriminant(&self) -> f64 {
        let diff = self.beta1 * self.beta1 - self.beta2 * self.beta2;
        (diff * diff + 4.0 * (self.a * self.a) * self.prod_sq()).sqrt()
    }
}

/// The spectral coordinates `c+ >= c- >= 0` through which `F` factorises.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CPair {
    pub c_plus: f64,
    pub c_minus: f64,
}

/// `c+- = sqrt((beta1^2 + beta2^2 +- discriminant) / 2)`.
///
/// `c-^2` is recovered from the product identity
/// `c+^2 c-^2 = beta1^2 beta2^2 (1 - a^2)` instead of the difference, which
/// cancels catastrophically when one beta is much smaller than the other.
pub fn cpair(p: &MgfPoint) -> CPair {
    let plus_sq = 0.5 * (p.sum_sq() + p.discriminant());
    if plus_sq == 0.0 {
        return CPair {
            c_plus: 0.0,
            c_minus: 0.0,
        };
    }
    let minus_sq = p.prod_sq() * ((1.0 - p.a) * (1.0 + p.a)) / plus_sq;
    CPair {
        c_plus: plus_sq.sqrt(),
        c_minus: minus_sq.max(0.0).sqrt(),
    }
}

/// The MGF `F(beta1, beta2, a) = S(c+) S(c-)`.
pub fn eval_f(p: &MgfPoint) -> f64 {
    let c = cpair(p);
    s_unchecked(c.c_plus) * s_unchecked(c.c_minus)
}

/// `dF/dz` at `z = p.a`, by the chain rule through `c+-(z)`.
///
/// With `S'(c) = c T(c) S(c)`, `dc+/dz = z b / (c+ D)` and
/// `dc-/dz = -z b / (c- D)` (where `b = beta1^2 beta2^2` and `D` is the
/// discriminant), the two terms combine to `F z b (T(c+) - T(c-)) / D`, which
/// stays finite as `c-` approaches zero.
pub fn df_dz(p: &MgfPoint) -> Result<f64> {
    if !(p.a.abs() < 1.0) {
        return Err(Error::domain("z", p.a, "|z| < 1"));
    }
    if !(p.beta1 > 0.0 && p.beta2 > 0.0) {
        return Err(Error::domain(
            "beta",
            p.beta1.min(p.beta2),
            "beta1 > 0 and beta2 > 0",
        ));
    }
    let disc = p.discriminant();
    if disc == 0.0 {
        return Err(Error::domain(
            "z",
            p.a,
            "z != 0 when beta1 == beta2 (discriminant vanishes)",
        ));
    }
    let c = cpair(p);
    let s_plus = s_unchecked(c.c_plus);
    let s_minus = s_unchecked(c.c_minus);
    let t_diff = t_unchecked(c.c_plus) - t_unchecked(c.c_minus);
    Ok(s_plus * s_minus * p.a * p.prod_sq() * t_diff / disc)
}
