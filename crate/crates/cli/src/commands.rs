use std::time::Instant;

use serde_json::{json, Value};
use vcorr::kernel::{centered_cross_moment, fredholm_det_closed_form, fredholm_det_truncated, quadratic_form_x};
use vcorr::moments::{even_moment_from_integrals, ExtractionSpec};
use vcorr::montecarlo::{gen_walk, simulate_thetas, Histogram, MomentTable, RNG_ALGORITHM};
use vcorr::specialfun::{cpair, df_dz, eval_f};
use vcorr::{generating_rhs, second_moment, MgfPoint, QuadratureSpec, SimConfig};

use crate::args::{AnalyticCommand, Format, LhsSource, SimulateArgs, VerifyCommand};
use crate::config::{self, WORKERS_ENV};
use crate::error::CliError;
use crate::output::{emit, simulate_csv, to_json, Envelope, Manifest, SimulateResults, VERSION};

/// Share of resampled replications above which a run is rejected.
const DEGENERATE_LIMIT: f64 = 0.01;
const GENERATING_REL_TOL: f64 = 1e-3;
const PROP1_MEDIAN_TOL: f64 = 1e-2;
const FREDHOLM_REL_TOL: f64 = 1e-3;

pub struct Timer {
    start: Instant,
    record: bool,
}

impl Timer {
    pub fn new(record: bool) -> Self {
        Self { start: Instant::now(), record }
    }

    fn seconds(&self) -> Option<f64> {
        self.record.then(|| self.start.elapsed().as_secs_f64())
    }
}

fn manifest(command: &str, config: Value, rng: bool, outputs: &[&str], timer: &Timer) -> Manifest {
    Manifest {
        command: command.into(),
        version: VERSION.into(),
        config,
        rng: rng.then(|| RNG_ALGORITHM.to_string()),
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
        timing_seconds: timer.seconds(),
    }
}

fn print_envelope(command: &str, config: Value, rng: bool, results: Value, timer: &Timer) -> Result<(), CliError> {
    let outputs: Vec<String> = results
        .as_object()
        .map(|o| o.keys().cloned().collect())
        .unwrap_or_default();
    let outputs: Vec<&str> = outputs.iter().map(String::as_str).collect();
    let env = Envelope {
        manifest: manifest(command, config, rng, &outputs, timer),
        results,
    };
    emit(&to_json(&env)?, None)
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("plain data serializes")
}

pub fn simulate(args: &SimulateArgs, timer: &Timer) -> Result<(), CliError> {
    let settings = config::resolve(args)?;
    let cfg = settings.sim_config();
    let sample = simulate_thetas(&cfg)?;
    if sample.resampled as f64 > DEGENERATE_LIMIT * cfg.paths as f64 {
        return Err(CliError::numeric(format!(
            "{} of {} replications were degenerate and resampled (limit {}%); \
             increase --n or use gaussian steps",
            sample.resampled,
            cfg.paths,
            100.0 * DEGENERATE_LIMIT
        )));
    }
    let table = MomentTable::from_samples(&sample.thetas, cfg.max_moment)?;
    let histogram = Histogram::from_samples(&sample.thetas, settings.bins)?;
    let env = Envelope {
        manifest: manifest("simulate", to_value(&settings), true, &["moments", "histogram", "resampled"], timer),
        results: SimulateResults {
            moments: table.moments,
            histogram,
            resampled: sample.resampled,
        },
    };
    let text = match settings.format {
        Format::Json => to_json(&env)?,
        Format::Csv => simulate_csv(&env)?,
    };
    emit(&text, args.out.as_deref())
}

pub fn analytic(cmd: &AnalyticCommand, timer: &Timer) -> Result<(), CliError> {
    match *cmd {
        AnalyticCommand::SecondMoment(q) => {
            let spec = QuadratureSpec::from(q);
            let r = second_moment(&spec)?;
            print_envelope("analytic second-moment", to_value(&spec), false, json!({ "second_moment": r }), timer)
        }
        AnalyticCommand::Mgf { beta1, beta2, a } => {
            let p = MgfPoint::new(beta1, beta2, a)?;
            let c = cpair(&p);
            let results = json!({
                "mgf": {
                    "value": eval_f(&p),
                    "c_plus": c.c_plus,
                    "c_minus": c.c_minus,
                    "df_dz": df_dz(&p).ok(),
                }
            });
            print_envelope("analytic mgf", to_value(&p), false, results, timer)
        }
        AnalyticCommand::Moment { n, r_max, v_radius, node_count, quad } => {
            if n == 0 {
                return Err(CliError::Usage("--n must be at least 1".into()));
            }
            if n > 5 {
                eprintln!("warning: moments beyond order 10 are computed but not validated");
            }
            let spec = QuadratureSpec::from(quad);
            spec.validate()?;
            let extraction = ExtractionSpec {
                v_radius,
                node_count,
                ..ExtractionSpec::default()
            };
            let ints = extraction.build(spec.u_max)?.u_integrals(r_max, &spec)?;
            let m = even_moment_from_integrals(n, &ints)?;
            let config = json!({ "n": n, "r_max": r_max, "extraction": extraction, "quadrature": spec });
            print_envelope("analytic moment", config, false, json!({ "moment": m }), timer)
        }
    }
}

/// Coefficient of `mu_{2n}` in the generating series: `z^{2n} / (2n) * (n!)^2 4^n / (2n)!`.
fn generating_coefficient(z: f64, n: usize) -> f64 {
    let mut c = 1.0;
    for j in 1..=n {
        c *= 4.0 * (j * j) as f64 / ((2 * j - 1) * (2 * j)) as f64;
    }
    z.powi(2 * n as i32) / (2 * n) as f64 * c
}

fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(1)
}

/// Runs a check; prints both sides and reports whether it passed.
pub fn verify(cmd: &VerifyCommand, timer: &Timer) -> Result<bool, CliError> {
    match *cmd {
        VerifyCommand::Generating { z, lhs_source, n, paths, seed, workers } => {
            if !(z > 0.0 && z < 1.0) {
                return Err(CliError::Usage(format!("--z must lie in (0, 1), got {z}")));
            }
            let spec = QuadratureSpec::default();
            let rhs = generating_rhs(z, &spec)?;
            let mu2 = second_moment(&spec)?;
            let mut higher = Vec::new();
            let mut variance = 0.0;
            let mut config = json!({ "z": z, "lhs_source": lhs_source, "quadrature": spec });
            match lhs_source {
                LhsSource::Series => {
                    let ints = ExtractionSpec::default().build(spec.u_max)?.u_integrals(40, &spec)?;
                    for k in 2..=5 {
                        higher.push(even_moment_from_integrals(k, &ints)?.value);
                    }
                }
                LhsSource::Montecarlo => {
                    let cfg = SimConfig {
                        n,
                        paths,
                        seed,
                        workers: workers.unwrap_or_else(default_workers),
                        max_moment: 10,
                        ..SimConfig::default()
                    };
                    cfg.validate()?;
                    let table = MomentTable::from_samples(&simulate_thetas(&cfg)?.thetas, 10)?;
                    for k in 2..=5 {
                        let m = table.get(2 * k).expect("order present");
                        higher.push(m.estimate);
                        variance += (generating_coefficient(z, k) * m.std_error).powi(2);
                    }
                    config["simulation"] = to_value(&cfg);
                }
            }
            let lhs = generating_coefficient(z, 1) * mu2.value
                + (2..=5).zip(&higher).map(|(k, m)| generating_coefficient(z, k) * m).sum::<f64>();
            let discrepancy = (lhs - rhs.value).abs();
            let allowed = GENERATING_REL_TOL * rhs.value.abs()
                + 3.0 * variance.sqrt()
                + rhs.error_estimate
                + rhs.truncation_tail;
            let pass = discrepancy <= allowed;
            let results = json!({
                "generating": {
                    "lhs": lhs,
                    "rhs": rhs,
                    "moments": [mu2.value, higher[0], higher[1], higher[2], higher[3]],
                    "discrepancy": discrepancy,
                    "relative": discrepancy / rhs.value.abs(),
                    "allowed": allowed,
                    "pass": pass,
                }
            });
            print_envelope("verify generating", config, lhs_source == LhsSource::Montecarlo, results, timer)?;
            Ok(pass)
        }
        VerifyCommand::Prop1 { n, seed, pairs } => {
            let cfg = SimConfig { n, paths: pairs.max(1), seed, ..SimConfig::default() };
            cfg.validate()?;
            if pairs == 0 {
                return Err(CliError::Usage("--pairs must be at least 1".into()));
            }
            let mut rel = Vec::with_capacity(pairs);
            for rep in 0..pairs as u64 {
                let pair = gen_walk(&cfg, rep)?;
                let x = quadratic_form_x(&pair, 1, 2)?;
                let y = centered_cross_moment(&pair, 1, 2)?;
                rel.push((x - y).abs() / y.abs());
            }
            let mut sorted = rel.clone();
            sorted.sort_by(f64::total_cmp);
            let mid = sorted.len() / 2;
            let median = if sorted.len() % 2 == 0 {
                0.5 * (sorted[mid - 1] + sorted[mid])
            } else {
                sorted[mid]
            };
            let pass = median <= PROP1_MEDIAN_TOL;
            let results = json!({
                "prop1": {
                    "median_relative": median,
                    "max_relative": sorted[sorted.len() - 1],
                    "pairs": pairs,
                    "tolerance": PROP1_MEDIAN_TOL,
                    "pass": pass,
                }
            });
            let config = json!({ "n": n, "seed": seed, "pairs": pairs });
            print_envelope("verify prop1", config, true, results, timer)?;
            Ok(pass)
        }
        VerifyCommand::Fredholm { beta1, beta2, a, terms } => {
            let p = MgfPoint::new(beta1, beta2, a)?;
            let truncated = fredholm_det_truncated(&p, terms)?;
            let closed = fredholm_det_closed_form(&p);
            let relative = (truncated.value - closed).abs() / closed;
            let pass = relative <= FREDHOLM_REL_TOL;
            let results = json!({
                "fredholm": {
                    "truncated": truncated,
                    "closed_form": closed,
                    "relative": relative,
                    "tolerance": FREDHOLM_REL_TOL,
                    "pass": pass,
                }
            });
            let config = json!({ "point": p, "terms": terms });
            print_envelope("verify fredholm", config, false, results, timer)?;
            Ok(pass)
        }
    }
}
