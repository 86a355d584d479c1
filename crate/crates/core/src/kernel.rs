//! The pinned-Wiener covariance kernel `M(s, t) = min(s, t) - s t`, its
//! closed-form eigen-system, the spectrum of the coupled 2x2 operator `T_K`,
//! truncated Fredholm products, and the discrete quadratic forms `X_ij`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::montecarlo::PathPair;
use crate::specialfun::{cpair, MgfPoint};
use crate::sum::{compensated_sum, pairwise_sum, NeumaierSum};

/// `m` uniform subintervals of `[0, 1]` with nodes `s_k = k / m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    m: usize,
}

impl GridSpec {
    pub fn new(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::Config(format!("grid needs m >= 2 subintervals, got {m}")));
        }
        Ok(Self { m })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn step(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        k as f64 / self.m as f64
    }

    /// All `m + 1` nodes.
    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.m).map(|k| self.node(k)).collect()
    }

    /// Samples `f` at every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..=self.m).map(|k| f(self.node(k))).collect()
    }
}

/// `M(s1, s2) = min(s1, s2) - s1 s2` on the unit square.
pub fn kernel_m(s1: f64, s2: f64) -> Result<f64> {
    for (name, s) in [("s1", s1), ("s2", s2)] {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::domain(name, s, "in [0, 1]"));
        }
    }
    Ok(m_unchecked(s1, s2))
}

#[inline]
fn m_unchecked(s1: f64, s2: f64) -> f64 {
    s1.min(s2) - s1 * s2
}

/// Eigenpair `T_M psi_n = lambda_n psi_n` with `psi_n(t) = sqrt(2) sin(pi n t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenPair {
    pub n: usize,
    pub lambda: f64,
}

impl EigenPair {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "eigen-index starts at 1");
        let nf = n as f64;
        Self {
            n,
            lambda: 1.0 / (PI * PI * nf * nf),
        }
    }

    pub fn psi(&self, t: f64) -> f64 {
        std::f64::consts::SQRT_2 * (PI * self.n as f64 * t).sin()
    }
}

/// `sum_{n <= terms} lambda_n psi_n(s) psi_n(t)`, which converges to `M(s, t)`.
pub fn mercer_partial_sum(s: f64, t: f64, terms: usize) -> f64 {
    compensated_sum((1..=terms).map(|n| {
        let e = EigenPair::new(n);
        e.lambda * e.psi(s) * e.psi(t)
    }))
}

/// Composite Simpson discretisation of `T_M g (s) = int_0^1 M(s1, s) g(s1) ds1`
/// at every grid node. `g` holds samples at the `m + 1` nodes.
///
/// O(m^2); rows are independent and each is reduced in a fixed order.
pub fn apply_tm(g: &[f64], grid: &GridSpec) -> Result<Vec<f64>> {
    let m = grid.m();
    if m % 2 != 0 {
        return Err(Error::Config(format!(
            "composite Simpson needs an even number of subintervals, got {m}"
        )));
    }
    if g.len() != m + 1 {
        return Err(Error::Config(format!(
            "expected {} samples, got {}",
            m + 1,
            g.len()
        )));
    }
    let h = grid.step();
    let weights: Vec<f64> = (0..=m)
        .map(|k| {
            let w = if k == 0 || k == m {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        })
        .collect();
    let nodes = grid.nodes();
    Ok(nodes
        .par_iter()
        .map(|&s| {
            let row: Vec<f64> = nodes
                .iter()
                .zip(&weights)
                .zip(g)
                .map(|((&s1, &w), &gv)| w * m_unchecked(s1, s) * gv)
                .collect();
            pairwise_sum(&row)
        })
        .collect())
}

/// The first `N` eigenvalue pairs `(gamma_n+, gamma_n-)` of `T_K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TkSpectrum {
    pub point: MgfPoint,
    pub gammas: Vec<(f64, f64)>,
}

/// `gamma_n+- = lambda_n (-(beta1^2 + beta2^2) +- D) / 2`, written as
/// `gamma_n+ = -lambda_n c-^2` and `gamma_n- = -lambda_n c+^2` so that the
/// small root does not cancel.
pub fn tk_spectrum(p: &MgfPoint, terms: usize) -> TkSpectrum {
    let c = cpair(p);
    let plus_sq = c.c_plus * c.c_plus;
    let minus_sq = c.c_minus * c.c_minus;
    let gammas = (1..=terms)
        .map(|n| {
            let lambda = EigenPair::new(n).lambda;
            (-lambda * minus_sq, -lambda * plus_sq)
        })
        .collect();
    TkSpectrum { point: *p, gammas }
}

/// Truncated Fredholm product and its tail estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FredholmProduct {
    pub value: f64,
    pub log_value: f64,
    pub terms: usize,
    /// `sum_{n > N} |gamma_n+| + |gamma_n-|`, approximately `(beta1^2 + beta2^2) / (pi^2 N)`.
    pub tail_estimate: f64,
}

/// `prod_{n <= N} (1 - gamma_n+)(1 - gamma_n-)`, accumulated as a sum of logs.
pub fn fredholm_det_truncated(p: &MgfPoint, terms: usize) -> Result<FredholmProduct> {
    if terms == 0 {
        return Err(Error::Config("need at least one term".into()));
    }
    let spectrum = tk_spectrum(p, terms);
    // Smallest factors first.
    let log_value = compensated_sum(
        spectrum
            .gammas
            .iter()
            .rev()
            .map(|&(gp, gm)| (-gp).ln_1p() + (-gm).ln_1p()),
    );
    // sum_{n > N} 1/n^2 lies between 1/(N+1) and 1/N; use the latter.
    let tail_estimate = p.sum_sq() / (PI * PI * terms as f64);
    Ok(FredholmProduct {
        value: log_value.exp(),
        log_value,
        terms,
        tail_estimate,
    })
}

/// The closed form `(sinh c+ / c+)(sinh c- / c-)` of the infinite product.
pub fn fredholm_det_closed_form(p: &MgfPoint) -> f64 {
    let c = cpair(p);
    let sinhc = |x: f64| if x == 0.0 { 1.0 } else { x.sinh() / x };
    sinhc(c.c_plus) * sinhc(c.c_minus)
}

fn path_by_index(paths: &PathPair, i: usize) -> Result<&[f64]> {
    match i {
        1 => Ok(&paths.w1),
        2 => Ok(&paths.w2),
        _ => Err(Error::Config(format!("path index must be 1 or 2, got {i}"))),
    }
}

fn check_paths(paths: &PathPair) -> Result<()> {
    let expected = paths.grid.m() + 1;
    if paths.w1.len() != expected || paths.w2.len() != expected {
        return Err(Error::Config(format!(
            "paths of length {} and {} do not match a grid of {} nodes",
            paths.w1.len(),
            paths.w2.len(),
            expected
        )));
    }
    Ok(())
}

/// `X_ij = sum_{k,l} M(s_k, s_l) dW_i(k) dW_j(l)` with `dW(k) = W(s_{k+1}) - W(s_k)`.
///
/// O(m^2). Computed as `sum_k dW_i(k) (sum_l M(s_k, s_l) dW_j(l))`
/// when `i <= j` and transposed otherwise, so `X_12` and `X_21` are the same
/// floating point sum.
pub fn quadratic_form_x(paths: &PathPair, i: usize, j: usize) -> Result<f64> {
    check_paths(paths)?;
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    let wi = path_by_index(paths, i)?;
    let wj = path_by_index(paths, j)?;
    let di: Vec<f64> = wi.windows(2).map(|w| w[1] - w[0]).collect();
    let dj: Vec<f64> = wj.windows(2).map(|w| w[1] - w[0]).collect();
    let grid = paths.grid;
    let rows: Vec<f64> = (0..di.len())
        .into_par_iter()
        .map(|k| {
            let sk = grid.node(k);
            let inner: Vec<f64> = dj
                .iter()
                .enumerate()
                .map(|(l, &d)| m_unchecked(sk, grid.node(l)) * d)
                .collect();
            di[k] * pairwise_sum(&inner)
        })
        .collect();
    Ok(pairwise_sum(&rows))
}

/// `Y_ij = int W_i W_j - int W_i int W_j`, each integral by the trapezoid rule
/// on the path samples.
pub fn centered_cross_moment(paths: &PathPair, i: usize, j: usize) -> Result<f64> {
    check_paths(paths)?;
    let wi = path_by_index(paths, i)?;
    let wj = path_by_index(paths, j)?;
    let h = paths.grid.step();
    let trapezoid = |f: &dyn Fn(usize) -> f64| {
        let n = wi.len() - 1;
        let mut acc = NeumaierSum::new();
        acc.add(0.5 * f(0));
        for k in 1..n {
            acc.add(f(k));
        }
        acc.add(0.5 * f(n));
        acc.value() * h
    };
    let cross = trapezoid(&|k| wi[k] * wj[k]);
    let mean_i = trapezoid(&|k| wi[k]);
    let mean_j = trapezoid(&|k| wj[k]);
    Ok(cross - mean_i * mean_j)
}
