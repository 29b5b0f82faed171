use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::csv_error;

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959963984540054;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub t: u64,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub running_avg: f64,
}

/// Per-round mean across runs with a normal-approximation 95% interval and
/// a trailing running average of the mean.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateStats {
    pub rows: Vec<StatsRow>,
    pub runs: usize,
    pub window: usize,
}

/// Trailing mean over at most `window` values ending at each index.
pub fn running_average(values: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    for (t, &v) in values.iter().enumerate() {
        sum += v;
        if t >= window {
            sum -= values[t - window];
        }
        out.push(sum / (t + 1).min(window) as f64);
    }
    out
}

impl AggregateStats {
    /// Aggregates equally long per-run series. With a single run the interval collapses to the mean.
    pub fn from_runs(series: &[&[f64]], window: usize) -> Result<Self> {
        let len = series.first().map_or(0, |s| s.len());
        if series.iter().any(|s| s.len() != len) {
            return Err(Error::Shape("runs have different lengths".into()));
        }
        let n = series.len();
        let mut means = Vec::with_capacity(len);
        let mut halves = Vec::with_capacity(len);
        for t in 0..len {
            let mean = series.iter().map(|s| s[t]).sum::<f64>() / n as f64;
            let half = if n > 1 {
                let var = series.iter().map(|s| (s[t] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                Z_95 * (var / n as f64).sqrt()
            } else {
                0.0
            };
            means.push(mean);
            halves.push(half);
        }
        let smooth = running_average(&means, window);
        let rows = (0..len)
            .map(|t| StatsRow {
                t: t as u64 + 1,
                mean: means[t],
                ci_low: means[t] - halves[t],
                ci_high: means[t] + halves[t],
                running_avg: smooth[t],
            })
            .collect();
        Ok(Self { rows, runs: n, window })
    }

    /// Mean of the running average over the last `rounds` rounds.
    pub fn tail_mean(&self, rounds: usize) -> f64 {
        let k = rounds.min(self.rows.len()).max(1);
        let tail = &self.rows[self.rows.len().saturating_sub(k)..];
        tail.iter().map(|r| r.running_avg).sum::<f64>() / tail.len().max(1) as f64
    }
}

/// Writes `t,mean,ci_low,ci_high,running_avg` with LF line endings and
/// shortest round-trip float formatting.
pub fn emit_csv(stats: &AggregateStats, path: &Path) -> Result<()> {
    write_rows(path, &["t", "mean", "ci_low", "ci_high", "running_avg"], &stats.rows)
}

pub(crate) fn write_rows<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a file written by [`emit_csv`].
pub fn read_csv(path: &Path) -> Result<Vec<StatsRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    r.deserialize()
        .enumerate()
        .map(|(k, row)| {
            row.map_err(|e| Error::Parse {
                line: k + 2,
                message: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn running_average_window() {
        let r = running_average(&[1.0, 2.0, 3.0, 4.0], 2);
        assert_eq!(r, vec![1.0, 1.5, 2.5, 3.5]);
    }

    #[test]
    fn single_run_has_zero_width_interval() {
        let s = AggregateStats::from_runs(&[&[3.0, 5.0]], 50).unwrap();
        assert_eq!(s.rows[1].ci_low, 5.0);
        assert_eq!(s.rows[1].ci_high, 5.0);
        assert_eq!(s.rows[1].running_avg, 4.0);
    }

    #[test]
    fn interval_uses_sample_deviation() {
        let s = AggregateStats::from_runs(&[&[1.0], &[3.0]], 1).unwrap();
        // sample sd = sqrt(2), half-width = z · sqrt(2) / sqrt(2)
        assert!((s.rows[0].ci_high - 2.0 - Z_95).abs() < 1e-12);
        assert!(AggregateStats::from_runs(&[&[1.0], &[]], 1).is_err());
    }

    #[test]
    fn csv_round_trip_and_shape() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let empty = AggregateStats::from_runs(&[], 50).unwrap();
        emit_csv(&empty, &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "t,mean,ci_low,ci_high,running_avg\n");

        let a = [0.1, 1.0 / 3.0, 2.0f64.sqrt()];
        let b = [0.7, 1e-17, 12345.678];
        let stats = AggregateStats::from_runs(&[&a, &b], 2).unwrap();
        emit_csv(&stats, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(!text.contains('\r'));
        assert_eq!(read_csv(&path).unwrap(), stats.rows);
    }

    #[test]
    fn io_errors_carry_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        let err = emit_csv(&AggregateStats::from_runs(&[], 1).unwrap(), &blocker.join("out.csv")).unwrap_err();
        assert!(err.to_string().contains("file"), "{err}");
    }
}
