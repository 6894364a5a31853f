//! Seed aggregation of metric traces on a common query grid.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::trace::{format_real, read_trace, TraceRow};

#[derive(Clone, Debug, PartialEq)]
pub struct AggregatePoint {
    pub fq: u64,
    pub metric_mean: f64,
    pub metric_stderr: f64,
    pub n_seeds: usize,
}

/// Value of a step function given by `(fq, metric)` pairs sorted by `fq`.
fn step_value(points: &[(u64, f64)], fq: u64) -> Option<f64> {
    let idx = points.partition_point(|p| p.0 <= fq);
    (idx > 0).then(|| points[idx - 1].1)
}

/// Mean and standard error (sample deviation over `√n`) of the metric across
/// traces, evaluated on the union of their metric query counts. Each trace
/// holds its last value between checkpoints; traces with no checkpoint yet
/// at a grid point are left out of that point.
pub fn aggregate_traces(traces: &[Vec<TraceRow>]) -> Vec<AggregatePoint> {
    let series: Vec<Vec<(u64, f64)>> = traces
        .iter()
        .map(|rows| {
            rows.iter()
                .filter_map(|r| r.metric.map(|m| (r.function_queries, m)))
                .collect()
        })
        .collect();
    let mut grid: Vec<u64> = series.iter().flatten().map(|p| p.0).collect();
    grid.sort_unstable();
    grid.dedup();
    grid.into_iter()
        .map(|fq| {
            let vals: Vec<f64> = series.iter().filter_map(|s| step_value(s, fq)).collect();
            let n = vals.len();
            let mean = vals.iter().sum::<f64>() / n as f64;
            let stderr = if n > 1 {
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                (var / n as f64).sqrt()
            } else {
                0.0
            };
            AggregatePoint {
                fq,
                metric_mean: mean,
                metric_stderr: stderr,
                n_seeds: n,
            }
        })
        .collect()
}

/// Splits `<algo>_seed<k>.csv` into `(algo, k)`.
fn trace_name(file: &str) -> Option<(String, u64)> {
    let stem = file.strip_suffix(".csv")?;
    let (algo, seed) = stem.rsplit_once("_seed")?;
    Some((algo.to_string(), seed.parse().ok()?))
}

/// Reads every trace in `dir` and writes `aggregate_<algo>.csv` per algorithm.
pub fn aggregate_seeds(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut groups: BTreeMap<String, Vec<(u64, Vec<TraceRow>)>> = BTreeMap::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let Some((algo, seed)) = path.file_name().and_then(|f| f.to_str()).and_then(trace_name) else {
            continue;
        };
        let rows = read_trace(fs::File::open(&path)?)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        groups.entry(algo).or_default().push((seed, rows));
    }
    if groups.is_empty() {
        return Err(Error::config(format!("no traces found in {}", dir.display())));
    }
    let mut written = Vec::new();
    for (algo, mut traces) in groups {
        traces.sort_by_key(|t| t.0);
        let rows: Vec<Vec<TraceRow>> = traces.into_iter().map(|t| t.1).collect();
        let path = dir.join(format!("aggregate_{algo}.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["fq", "metric_mean", "metric_stderr", "n_seeds"])?;
        for p in aggregate_traces(&rows) {
            w.write_record([
                p.fq.to_string(),
                format_real(p.metric_mean),
                format_real(p.metric_stderr),
                p.n_seeds.to_string(),
            ])?;
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}
