//! Reproducible simulation of the empirical correlation between independent
//! random walks / discretised Wiener paths.
//!
//! Every replication draws from its own counter-based stream keyed by
//! `(seed, stream id)`, and all aggregation happens in replication order, so
//! outputs are bit-identical for any worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::GridSpec;
use crate::sum::NeumaierSum;

/// Identity of the random stream construction. Changing any part of it
/// changes every simulated number, so it is written into run manifests.
pub const RNG_ALGORITHM: &str =
    "ChaCha8 (rand_chacha 0.9), key = seed_from_u64(seed), stream = 2*replication + path; \
     gaussian steps via rand_distr 0.5 StandardNormal (ziggurat)";

/// Stream ids at or above this value are reserved for resampling degenerate replications.
const RESERVED_STREAM_BASE: u64 = 1 << 62;
const MAX_RESAMPLES: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepDist {
    Gaussian,
    Rademacher,
}

impl std::str::FromStr for StepDist {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(StepDist::Gaussian),
            "rademacher" => Ok(StepDist::Rademacher),
            other => Err(Error::Config(format!(
                "unknown step distribution {other:?} (expected gaussian or rademacher)"
            ))),
        }
    }
}

impl std::fmt::Display for StepDist {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StepDist::Gaussian => "gaussian",
            StepDist::Rademacher => "rademacher",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Steps per path (grid size).
    pub n: usize,
    /// Number of replications.
    pub paths: usize,
    pub seed: u64,
    pub workers: usize,
    pub step_dist: StepDist,
    pub max_moment: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: 10_000,
            paths: 10_000,
            seed: 42,
            workers: 1,
            step_dist: StepDist::Gaussian,
            max_moment: 10,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("n must be >= 2, got {}", self.n)));
        }
        if self.paths < 1 {
            return Err(Error::Config("paths must be >= 1".into()));
        }
        if self.workers < 1 {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        if self.max_moment == 0 || self.max_moment % 2 != 0 {
            return Err(Error::Config(format!(
                "max_moment must be a positive even integer, got {}",
                self.max_moment
            )));
        }
        Ok(())
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", self.workers)))
    }
}

/// The reproducible generator for one stream.
pub fn stream_rng(seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Two sampled paths on a common grid, both starting at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPair {
    pub grid: GridSpec,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
}

impl PathPair {
    pub fn new(grid: GridSpec, w1: Vec<f64>, w2: Vec<f64>) -> Result<Self> {
        let expected = grid.m() + 1;
        if w1.len() != expected || w2.len() != expected {
            return Err(Error::Config(format!(
                "paths need {expected} samples, got {} and {}",
                w1.len(),
                w2.len()
            )));
        }
        if w1[0] != 0.0 || w2[0] != 0.0 {
            return Err(Error::Config("paths must start at 0".into()));
        }
        Ok(Self { grid, w1, w2 })
    }

    /// Empirical correlation of the partial sums `S_1..S_n` (the leading
    /// zero sample is excluded).
    pub fn theta(&self) -> Result<f64> {
        theta_n(&self.w1[1..], &self.w2[1..])
    }
}

fn partial_sums(steps: impl Iterator<Item = f64>, n: usize) -> Vec<f64> {
    let mut path = Vec::with_capacity(n + 1);
    path.push(0.0);
    let mut acc = 0.0;
    for s in steps {
        acc += s;
        path.push(acc);
    }
    path
}

fn draw_path(rng: &mut ChaCha8Rng, n: usize, dist: StepDist) -> Vec<f64> {
    let scale = (n as f64).recip().sqrt();
    match dist {
        StepDist::Gaussian => partial_sums(
            (0..n).map(|_| scale * rng.sample::<f64, _>(StandardNormal)),
            n,
        ),
        StepDist::Rademacher => partial_sums(
            (0..n).map(|_| if rng.random::<bool>() { scale } else { -scale }),
            n,
        ),
    }
}

/// Two independent walks of `cfg.n` steps with variance `1/n` each, so the
/// gaussian case is the Wiener process sampled at `k/n`.
pub fn gen_walk(cfg: &SimConfig, stream_id: u64) -> Result<PathPair> {
    cfg.validate()?;
    let grid = GridSpec::new(cfg.n)?;
    let w1 = draw_path(&mut stream_rng(cfg.seed, 2 * stream_id), cfg.n, cfg.step_dist);
    let w2 = draw_path(&mut stream_rng(cfg.seed, 2 * stream_id + 1), cfg.n, cfg.step_dist);
    PathPair::new(grid, w1, w2)
}

fn centered_moments(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let len = x.len() as f64;
    let mean_x = x.iter().copied().collect::<NeumaierSum>().value() / len;
    let mean_y = y.iter().copied().collect::<NeumaierSum>().value() / len;
    let (mut sxy, mut sxx, mut syy) = (NeumaierSum::new(), NeumaierSum::new(), NeumaierSum::new());
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mean_x, b - mean_y);
        sxy.add(dx * dy);
        sxx.add(dx * dx);
        syy.add(dy * dy);
    }
    (sxy.value(), sxx.value(), syy.value())
}

fn pearson(x: &[f64], y: &[f64], what: &str) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Config(format!(
            "sequences differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Degenerate(format!("{what}: need at least two samples")));
    }
    let (sxy, sxx, syy) = centered_moments(x, y);
    let denom = (sxx * syy).sqrt();
    if !(denom > 0.0 && denom.is_finite()) {
        return Err(Error::Degenerate(format!("{what}: zero sample variance")));
    }
    Ok(sxy / denom)
}

/// Empirical correlation of two partial-sum sequences.
///
/// Evaluated in centred two-pass form, algebraically equal to
/// `(sum S S' - sum S sum S' / n) / sqrt(...)`.
pub fn theta_n(s: &[f64], s_prime: &[f64]) -> Result<f64> {
    pearson(s, s_prime, "theta_n")
}

/// The same statistic on the raw steps rather than their partial sums; tends
/// to zero for independent i.i.d. streams.
pub fn theta_prime_n(steps1: &[f64], steps2: &[f64]) -> Result<f64> {
    pearson(steps1, steps2, "theta'_n")
}

/// Correlations from every replication of a run, in replication order.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaSample {
    pub thetas: Vec<f64>,
    /// Replications that were degenerate and redrawn from a reserved stream.
    pub resampled: u64,
}

fn replicate(cfg: &SimConfig, rep: u64) -> Result<(f64, u32)> {
    let mut stream = rep;
    for attempt in 0..=MAX_RESAMPLES {
        match gen_walk(cfg, stream)?.theta() {
            Ok(theta) => {
                assert!(
                    theta.abs() <= 1.0,
                    "replication {rep}: |theta| = {} exceeds 1",
                    theta.abs()
                );
                return Ok((theta, attempt));
            }
            Err(Error::Degenerate(_)) => {
                stream = RESERVED_STREAM_BASE + rep * (MAX_RESAMPLES as u64 + 1) + attempt as u64;
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::Degenerate(format!(
        "replication {rep} stayed degenerate after {MAX_RESAMPLES} resamples"
    )))
}

/// Runs `cfg.paths` replications on `cfg.workers` threads.
pub fn simulate_thetas(cfg: &SimConfig) -> Result<ThetaSample> {
    cfg.validate()?;
    let results: Vec<Result<(f64, u32)>> = cfg.pool()?.install(|| {
        (0..cfg.paths as u64)
            .into_par_iter()
            .map(|rep| replicate(cfg, rep))
            .collect()
    });
    let mut thetas = Vec::with_capacity(cfg.paths);
    let mut resampled = 0u64;
    for r in results {
        let (theta, attempts) = r?;
        thetas.push(theta);
        resampled += attempts as u64;
    }
    Ok(ThetaSample { thetas, resampled })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub order: usize,
    pub estimate: f64,
    pub std_error: f64,
}

/// `E[theta^k]` for `k = 0..=max_moment` with standard errors of the mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    pub moments: Vec<MomentEstimate>,
    pub paths: usize,
}

impl MomentTable {
    pub fn from_samples(thetas: &[f64], max_moment: usize) -> Result<Self> {
        if thetas.is_empty() {
            return Err(Error::Config("no samples".into()));
        }
        let count = thetas.len() as f64;
        let mut moments = Vec::with_capacity(max_moment + 1);
        moments.push(MomentEstimate {
            order: 0,
            estimate: 1.0,
            std_error: 0.0,
        });
        for k in 1..=max_moment {
            let powers: Vec<f64> = thetas.iter().map(|t| t.powi(k as i32)).collect();
            let mean = powers.iter().copied().collect::<NeumaierSum>().value() / count;
            let std_error = if thetas.len() > 1 {
                let ss = powers
                    .iter()
                    .map(|p| (p - mean) * (p - mean))
                    .collect::<NeumaierSum>()
                    .value();
                (ss / (count - 1.0) / count).sqrt()
            } else {
                0.0
            };
            moments.push(MomentEstimate {
                order: k,
                estimate: mean,
                std_error,
            });
        }
        Ok(Self {
            moments,
            paths: thetas.len(),
        })
    }

    pub fn get(&self, order: usize) -> Option<&MomentEstimate> {
        self.moments.get(order)
    }
}

/// Simulated moment table.
pub fn estimate_moments(cfg: &SimConfig) -> Result<MomentTable> {
    let sample = simulate_thetas(cfg)?;
    MomentTable::from_samples(&sample.thetas, cfg.max_moment)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl Histogram {
    /// Equal-width bins spanning exactly `[-1, 1]`; the value 1 falls in the last bin.
    pub fn from_samples(samples: &[f64], bins: usize) -> Result<Self> {
        if bins < 10 {
            return Err(Error::Config(format!("need at least 10 bins, got {bins}")));
        }
        let edges: Vec<f64> = (0..=bins)
            .map(|i| -1.0 + 2.0 * i as f64 / bins as f64)
            .collect();
        let mut counts = vec![0u64; bins];
        for &x in samples {
            if !(-1.0..=1.0).contains(&x) {
                return Err(Error::Config(format!("sample {x} outside [-1, 1]")));
            }
            let idx = (((x + 1.0) / 2.0) * bins as f64).floor() as usize;
            counts[idx.min(bins - 1)] += 1;
        }
        Ok(Self {
            edges,
            counts,
            total: samples.len() as u64,
        })
    }
}

/// Simulated histogram of theta over `[-1, 1]`.
pub fn histogram(cfg: &SimConfig, bins: usize) -> Result<Histogram> {
    let sample = simulate_thetas(cfg)?;
    Histogram::from_samples(&sample.thetas, bins)
}

/// Equal-tail interval holding `mass` of the empirical distribution, using
/// order statistics with linear interpolation between them.
pub fn quantile_interval(samples: &[f64], mass: f64) -> Result<(f64, f64)> {
    if samples.len() < 100 {
        return Err(Error::Config(format!(
            "need at least 100 samples for a quantile interval, got {}",
            samples.len()
        )));
    }
    if !(mass > 0.0 && mass < 1.0) {
        return Err(Error::domain("mass", mass, "in (0, 1)"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let quantile = |p: f64| {
        let pos = p * (sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = (lo + 1).min(sorted.len() - 1);
        let frac = pos - lo as f64;
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    };
    let tail = (1.0 - mass) / 2.0;
    Ok((quantile(tail), quantile(1.0 - tail)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize, paths: usize) -> SimConfig {
        SimConfig {
            n,
            paths,
            seed: 7,
            workers: 1,
            ..SimConfig::default()
        }
    }

    #[test]
    fn config_validation() {
        assert!(cfg(1, 10).validate().is_err());
        assert!(cfg(10, 0).validate().is_err());
        assert!(SimConfig { max_moment: 3, ..cfg(10, 10) }.validate().is_err());
        assert!(SimConfig { workers: 0, ..cfg(10, 10) }.validate().is_err());
        assert!(cfg(2, 1).validate().is_ok());
    }

    #[test]
    fn walk_shape_and_determinism() {
        let p = gen_walk(&cfg(2, 1), 0).unwrap();
        assert_eq!(p.w1.len(), 3);
        assert_eq!(p.w2.len(), 3);
        assert_eq!((p.w1[0], p.w2[0]), (0.0, 0.0));
        assert_eq!(gen_walk(&cfg(100, 1), 5).unwrap(), gen_walk(&cfg(100, 1), 5).unwrap());
        assert_ne!(gen_walk(&cfg(100, 1), 5).unwrap().w1, gen_walk(&cfg(100, 1), 6).unwrap().w1);
        let p = gen_walk(&cfg(100, 1), 5).unwrap();
        assert_ne!(p.w1, p.w2);
    }

    #[test]
    fn rademacher_steps_are_plus_minus_scale() {
        let c = SimConfig { step_dist: StepDist::Rademacher, ..cfg(16, 1) };
        let p = gen_walk(&c, 0).unwrap();
        for w in p.w1.windows(2) {
            assert!(((w[1] - w[0]).abs() - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn theta_examples() {
        assert_eq!(theta_n(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap(), 1.0);
        assert_eq!(theta_n(&[1.0, 2.0, 3.0], &[-1.0, -2.0, -3.0]).unwrap(), -1.0);
        assert!(matches!(
            theta_n(&[1.0, 2.0], &[5.0, 5.0]),
            Err(Error::Degenerate(_))
        ));
        assert!(theta_n(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn theta_prime_examples() {
        let steps = [0.3, -1.2, 0.5, 2.0, -0.7];
        assert!((theta_prime_n(&steps, &steps).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = steps.iter().map(|x| -x).collect();
        assert!((theta_prime_n(&steps, &neg).unwrap() + 1.0).abs() < 1e-15);
        assert!(matches!(
            theta_prime_n(&[1.0, 1.0, 1.0], &steps[..3]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn quantile_examples() {
        let grid: Vec<f64> = (0..=1000).map(|i| -1.0 + 2.0 * i as f64 / 1000.0).collect();
        let (lo, hi) = quantile_interval(&grid, 0.5).unwrap();
        assert!((lo + 0.5).abs() <= 0.002 && (hi - 0.5).abs() <= 0.002);
        let (lo, hi) = quantile_interval(&grid, 1.0 - 1e-12).unwrap();
        assert!((lo + 1.0).abs() < 1e-9 && (hi - 1.0).abs() < 1e-9);
        assert!(quantile_interval(&grid[..99], 0.5).is_err());
        assert!(quantile_interval(&grid, 1.0).is_err());
    }

    #[test]
    fn histogram_contracts() {
        let samples = [-1.0, -0.95, 0.0, 0.5, 1.0];
        let h = Histogram::from_samples(&samples, 10).unwrap();
        assert_eq!(h.edges.first(), Some(&-1.0));
        assert_eq!(h.edges.last(), Some(&1.0));
        assert_eq!(h.counts.iter().sum::<u64>(), h.total);
        assert_eq!(h.counts[0], 2);
        assert_eq!(h.counts[9], 1);
        assert!(Histogram::from_samples(&samples, 9).is_err());
        assert!(Histogram::from_samples(&[1.5], 10).is_err());
    }

    #[test]
    fn moment_table_order_zero_is_one() {
        let t = MomentTable::from_samples(&[0.5, -0.5, 0.25], 4).unwrap();
        assert_eq!(t.get(0).unwrap().estimate, 1.0);
        assert!((t.get(2).unwrap().estimate - (0.25 + 0.25 + 0.0625) / 3.0).abs() < 1e-16);
        assert_eq!(t.moments.len(), 5);
    }
}
