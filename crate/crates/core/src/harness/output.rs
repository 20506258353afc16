use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::run::RunTrace;
use crate::{Error, Result};

/// One row of the aggregate trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub algorithm: String,
    pub seed: u64,
    pub t: usize,
    pub epoch: usize,
    pub loss_y: f64,
    pub loss_x: f64,
    pub cum_loss_y: f64,
    pub cum_loss_x: f64,
    pub round_ns: u64,
}

/// Mean average loss `Σ_{τ≤t} f_τ / t` over seeds, with runtime totals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algorithm: String,
    pub t: usize,
    pub runs: usize,
    pub mean_avg_loss_y: f64,
    pub mean_avg_loss_x: f64,
    pub se_avg_loss_y: f64,
    pub se_avg_loss_x: f64,
    /// Mean total wall-clock per run.
    pub total_ns: f64,
    /// `total_ns` divided by pfbco's; empty without a pfbco run.
    pub relative_time: Option<f64>,
}

/// Sample mean and standard error of the mean.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn algorithms_in_order(traces: &[RunTrace]) -> Vec<&str> {
    let mut names: Vec<&str> = Vec::new();
    for t in traces {
        if !names.contains(&t.algorithm.as_str()) {
            names.push(&t.algorithm);
        }
    }
    names
}

/// Mean total runtime per algorithm, in first-appearance order.
pub fn mean_runtimes(traces: &[RunTrace]) -> Vec<(String, f64)> {
    algorithms_in_order(traces)
        .into_iter()
        .map(|name| {
            let totals: Vec<f64> = traces
                .iter()
                .filter(|t| t.algorithm == name)
                .map(|t| t.total_ns as f64)
                .collect();
            (name.to_string(), mean_and_stderr(&totals).0)
        })
        .collect()
}

pub fn summarize(traces: &[RunTrace]) -> Result<Vec<SummaryRow>> {
    let runtimes = mean_runtimes(traces);
    let reference = runtimes.iter().find(|(n, _)| n == "pfbco").map(|(_, ns)| *ns);
    let mut rows = Vec::new();
    for (name, total_ns) in &runtimes {
        let runs: Vec<&RunTrace> = traces.iter().filter(|t| &t.algorithm == name).collect();
        let horizon = runs[0].len();
        if runs.iter().any(|r| r.len() != horizon) {
            return Err(Error::InvalidParameter(format!(
                "runs of {name} have different lengths"
            )));
        }
        for i in 0..horizon {
            let t = (i + 1) as f64;
            let ys: Vec<f64> = runs.iter().map(|r| r.rounds[i].cum_loss_y / t).collect();
            let xs: Vec<f64> = runs.iter().map(|r| r.rounds[i].cum_loss_x / t).collect();
            let (my, sy) = mean_and_stderr(&ys);
            let (mx, sx) = mean_and_stderr(&xs);
            rows.push(SummaryRow {
                algorithm: name.clone(),
                t: i + 1,
                runs: runs.len(),
                mean_avg_loss_y: my,
                mean_avg_loss_x: mx,
                se_avg_loss_y: sy,
                se_avg_loss_x: sx,
                total_ns: *total_ns,
                relative_time: reference.map(|r| total_ns / r),
            });
        }
    }
    Ok(rows)
}

/// Path of the summary written next to `path`: `<stem>_summary.csv`.
pub fn summary_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("traces");
    path.with_file_name(format!("{stem}_summary.csv"))
}

/// Writes every round of every trace to `path` and the per-(algorithm, t)
/// summary next to it. Returns the summary path.
pub fn emit_csv(traces: &[RunTrace], path: &Path) -> Result<PathBuf> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_writer(File::create(path)?);
    for trace in traces {
        for r in &trace.rounds {
            w.serialize(TraceRow {
                algorithm: trace.algorithm.clone(),
                seed: trace.seed,
                t: r.t,
                epoch: r.epoch,
                loss_y: r.loss_y,
                loss_x: r.loss_x,
                cum_loss_y: r.cum_loss_y,
                cum_loss_x: r.cum_loss_x,
                round_ns: r.round_ns,
            })?;
        }
    }
    w.flush()?;

    let summary = summary_path(path);
    let mut w = csv::Writer::from_writer(File::create(&summary)?);
    for row in summarize(traces)? {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(summary)
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::run::RoundRecord;
    use crate::learners::LearnerStats;
    use crate::losses::Bounds;

    fn trace(algorithm: &str, seed: u64, losses: &[f64], ns: u64) -> RunTrace {
        let mut cum = 0.0;
        let rounds = losses
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                cum += l;
                RoundRecord {
                    t: i + 1,
                    epoch: 0,
                    loss_y: l,
                    loss_x: l / 2.0,
                    cum_loss_y: cum,
                    cum_loss_x: cum / 2.0,
                    round_ns: ns,
                }
            })
            .collect();
        RunTrace {
            algorithm: algorithm.into(),
            seed,
            rounds,
            total_ns: ns * losses.len() as u64,
            loss_checksum: 0,
            bounds: Bounds {
                value: 1.0,
                gradient: 1.0,
            },
            observed: Bounds {
                value: 1.0,
                gradient: 1.0,
            },
            infeasible_plays: 0,
            infeasible_iterates: 0,
            stats: LearnerStats::default(),
        }
    }

    #[test]
    fn round_trip_and_summary() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out/quadratic.csv");
        let traces = vec![
            trace("pfbco", 0, &[1.0, 0.1 + 0.2, -3.5e-17], 10),
            trace("fkm", 0, &[2.0, 1.0, 0.0], 80),
            trace("pfbco", 1, &[3.0, 1.0, 2.0], 30),
            trace("fkm", 1, &[4.0, 1.0, 0.0], 120),
        ];
        let summary = emit_csv(&traces, &path).unwrap();
        assert_eq!(summary, dir.path().join("out/quadratic_summary.csv"));

        let header = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            header.lines().next().unwrap(),
            "algorithm,seed,t,epoch,loss_y,loss_x,cum_loss_y,cum_loss_x,round_ns"
        );
        let rows = read_trace_csv(&path).unwrap();
        assert_eq!(rows.len(), 12);
        assert_eq!(rows[1].loss_y, 0.1 + 0.2);
        assert_eq!(rows[2].loss_y, -3.5e-17);
        assert_eq!(rows[11].algorithm, "fkm");

        let rows = read_summary_csv(&summary).unwrap();
        let first = &rows[0];
        assert_eq!((first.algorithm.as_str(), first.t), ("pfbco", 1));
        assert_eq!(first.mean_avg_loss_y, 2.0);
        assert_eq!(first.relative_time, Some(1.0));
        let fkm = rows.iter().find(|r| r.algorithm == "fkm").unwrap();
        assert_eq!(fkm.total_ns, 300.0);
        assert_eq!(fkm.relative_time, Some(5.0));
    }

    #[test]
    fn unwritable_path_is_an_error() {
        let traces = vec![trace("pfbco", 0, &[1.0], 1)];
        let file = tempfile::NamedTempFile::new().unwrap();
        // a regular file cannot be used as a directory
        assert!(emit_csv(&traces, &file.path().join("x.csv")).is_err());
    }

    #[test]
    fn relative_time_needs_pfbco() {
        let rows = summarize(&[trace("fkm", 0, &[1.0], 5)]).unwrap();
        assert_eq!(rows[0].relative_time, None);
    }

    #[test]
    fn standard_error() {
        let (m, se) = mean_and_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }
}
