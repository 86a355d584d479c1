//! Globally adaptive tensor-product G7/K15 cubature on rectangles.
//!
//! Cells are refined in batches of fixed size so the sequence of
//! subdivisions, and therefore the result, is independent of how many rayon
//! threads evaluate the batch.

use std::collections::BinaryHeap;

use rayon::prelude::*;

use super::gauss_kronrod::mapped_rule;
use super::IntegralResult;
use crate::error::{Error, Result};
use crate::sum::{pairwise_sum, NeumaierSum};

const BATCH: usize = 8;
const EVALS_PER_CELL: u64 = 225;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x0, x1, y0, y1 }
    }

    /// The tensor grid of rectangles cut at the given sorted coordinates.
    pub fn grid(xs: &[f64], ys: &[f64]) -> Vec<Rect> {
        let mut out = Vec::new();
        for x in xs.windows(2) {
            for y in ys.windows(2) {
                out.push(Rect::new(x[0], x[1], y[0], y[1]));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
struct CellEstimate {
    value: f64,
    error: f64,
    // Change when only the x (resp. y) rule is dropped to Gauss.
    err_x: f64,
    err_y: f64,
}

fn estimate<F: Fn(f64, f64) -> f64>(f: &F, r: &Rect) -> CellEstimate {
    let rx = mapped_rule(r.x0, r.x1);
    let ry = mapped_rule(r.y0, r.y1);
    let (mut kk, mut gg, mut gk, mut kg) = (0.0, 0.0, 0.0, 0.0);
    for &(x, wkx, wgx) in &rx {
        let (mut k_row, mut g_row) = (0.0, 0.0);
        for &(y, wky, wgy) in &ry {
            let v = f(x, y);
            k_row += wky * v;
            g_row += wgy * v;
        }
        kk += wkx * k_row;
        kg += wkx * g_row;
        gk += wgx * k_row;
        gg += wgx * g_row;
    }
    CellEstimate {
        value: kk,
        error: (kk - gg).abs(),
        err_x: (kk - gk).abs(),
        err_y: (kk - kg).abs(),
    }
}

fn split(r: &Rect, e: &CellEstimate) -> [Rect; 2] {
    if e.err_x >= e.err_y {
        let mid = 0.5 * (r.x0 + r.x1);
        [Rect { x1: mid, ..*r }, Rect { x0: mid, ..*r }]
    } else {
        let mid = 0.5 * (r.y0 + r.y1);
        [Rect { y1: mid, ..*r }, Rect { y0: mid, ..*r }]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Queued {
    error: f64,
    id: usize,
}

impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Queued {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// Settings for [`integrate_2d`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubatureTolerance {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_evals: u64,
}

/// Integrates `f` over the union of `initial` (non-overlapping) rectangles.
///
/// The error estimate is the raw `|K15 x K15 - G7 x G7|` difference summed
/// over cells, with no rescaling.
pub fn integrate_2d<F>(f: F, initial: &[Rect], tol: CubatureTolerance) -> Result<IntegralResult>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    if initial.is_empty() {
        return Err(Error::Config("no integration cells".into()));
    }
    let mut rects: Vec<Rect> = initial.to_vec();
    let mut estimates: Vec<CellEstimate> = rects.par_iter().map(|r| estimate(&f, r)).collect();
    let mut active = vec![true; rects.len()];
    let mut evaluations = EVALS_PER_CELL * rects.len() as u64;

    let mut heap: BinaryHeap<Queued> = estimates
        .iter()
        .enumerate()
        .map(|(id, e)| Queued { error: e.error, id })
        .collect();
    let mut total_value: NeumaierSum = estimates.iter().map(|e| e.value).collect();
    let mut total_error: NeumaierSum = estimates.iter().map(|e| e.error).collect();

    let finish = |estimates: &[CellEstimate], active: &[bool], evaluations| {
        let values: Vec<f64> = estimates
            .iter()
            .zip(active)
            .filter(|(_, &a)| a)
            .map(|(e, _)| e.value)
            .collect();
        let errors: Vec<f64> = estimates
            .iter()
            .zip(active)
            .filter(|(_, &a)| a)
            .map(|(e, _)| e.error)
            .collect();
        IntegralResult {
            value: pairwise_sum(&values),
            error_estimate: pairwise_sum(&errors),
            evaluations,
            truncation_tail: 0.0,
        }
    };

    loop {
        let target = tol.abs_tol.max(tol.rel_tol * total_value.value().abs());
        if total_error.value() <= target {
            return Ok(finish(&estimates, &active, evaluations));
        }
        let mut batch = Vec::with_capacity(BATCH);
        while batch.len() < BATCH {
            match heap.pop() {
                Some(q) => batch.push(q.id),
                None => break,
            }
        }
        let cost = 2 * EVALS_PER_CELL * batch.len() as u64;
        if evaluations + cost > tol.max_evals {
            return Err(Error::BudgetExhausted {
                best: finish(&estimates, &active, evaluations),
            });
        }
        let children: Vec<Rect> = batch
            .iter()
            .flat_map(|&id| split(&rects[id], &estimates[id]))
            .collect();
        let child_estimates: Vec<CellEstimate> =
            children.par_iter().map(|r| estimate(&f, r)).collect();
        for &id in &batch {
            active[id] = false;
            total_value.add(-estimates[id].value);
            total_error.add(-estimates[id].error);
        }
        for (r, e) in children.into_iter().zip(child_estimates) {
            let id = rects.len();
            rects.push(r);
            estimates.push(e);
            active.push(true);
            total_value.add(e.value);
            total_error.add(e.error);
            heap.push(Queued { error: e.error, id });
        }
        evaluations += cost;
    }
}
