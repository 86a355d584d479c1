//! The `{manifest, results}` envelope and its JSON / CSV encodings.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use vcorr::montecarlo::{Histogram, MomentEstimate};

use crate::error::CliError;

pub const VERSION: &str = concat!("vcorr ", env!("CARGO_PKG_VERSION"));
pub const CSV_HEADER: [&str; 6] = ["record", "index", "value", "std_error", "lower", "upper"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng: Option<String>,
    pub outputs: Vec<String>,
    /// Wall-clock seconds; null unless requested so reruns stay byte-identical.
    pub timing_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<R> {
    pub manifest: Manifest,
    pub results: R,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateResults {
    pub moments: Vec<MomentEstimate>,
    pub histogram: Histogram,
    /// Degenerate replications redrawn from reserved streams.
    pub resampled: u64,
}

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_json<R: Serialize>(env: &Envelope<R>) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(env).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// A `# manifest: {...}` comment line followed by one row per moment, per
/// histogram bin and a final `resampled` row.
pub fn simulate_csv(env: &Envelope<SimulateResults>) -> Result<String, CliError> {
    let manifest = serde_json::to_string(&env.manifest).map_err(|e| CliError::Io(e.to_string()))?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for m in &env.results.moments {
        w.write_record([
            "moment".into(),
            m.order.to_string(),
            sci(m.estimate),
            sci(m.std_error),
            String::new(),
            String::new(),
        ])
        .map_err(io)?;
    }
    let h = &env.results.histogram;
    for (i, c) in h.counts.iter().enumerate() {
        w.write_record([
            "bin".into(),
            i.to_string(),
            c.to_string(),
            String::new(),
            sci(h.edges[i]),
            sci(h.edges[i + 1]),
        ])
        .map_err(io)?;
    }
    w.write_record(["resampled", "0", &env.results.resampled.to_string(), "", "", ""])
        .map_err(io)?;
    let body = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(format!("# manifest: {manifest}\n{}", String::from_utf8_lossy(&body)))
}

pub fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}
