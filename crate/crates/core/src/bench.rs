//! Benchmark aggregation: shifted geometric means, solved counts and
//! absolute performance profiles.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::engine::Status;
use crate::error::{Error, Result};

/// Default shift of the shifted geometric mean.
pub const SGM_SHIFT: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub instance: String,
    pub solver: String,
    /// `None` when the run failed with an error.
    pub status: Option<Status>,
    pub iterations: usize,
    pub seconds: f64,
    pub tol: f64,
}

impl BenchRecord {
    pub fn solved(&self) -> bool {
        self.status == Some(Status::Optimal)
    }

    /// Time charged in aggregates: unsolved runs count as the time limit.
    pub fn charged_seconds(&self, time_limit: f64) -> f64 {
        if self.solved() {
            self.seconds.max(0.0)
        } else {
            time_limit
        }
    }
}

/// `(prod (t_i + shift))^(1/n) - shift`, accumulated in log space.
/// Returns NaN for an empty slice.
pub fn sgm(values: &[f64], shift: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mean_log = values.iter().map(|t| (t + shift).ln()).sum::<f64>() / values.len() as f64;
    mean_log.exp() - shift
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSummary {
    pub solver: String,
    pub tol: f64,
    pub instances: usize,
    pub solved: usize,
    pub sgm_seconds: f64,
    pub sgm_iterations: f64,
}

/// One summary per `(solver, tol)` pair, in sorted order.
pub fn summarize(records: &[BenchRecord], time_limit: f64) -> Vec<SolverSummary> {
    let mut groups: BTreeMap<(String, u64), Vec<&BenchRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.solver.clone(), r.tol.to_bits()))
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|((solver, tol), rs)| {
            let secs: Vec<f64> = rs.iter().map(|r| r.charged_seconds(time_limit)).collect();
            let iters: Vec<f64> = rs.iter().map(|r| r.iterations as f64).collect();
            SolverSummary {
                solver,
                tol: f64::from_bits(tol),
                instances: rs.len(),
                solved: rs.iter().filter(|r| r.solved()).count(),
                sgm_seconds: sgm(&secs, SGM_SHIFT),
                sgm_iterations: sgm(&iters, SGM_SHIFT),
            }
        })
        .collect()
}

/// `points` log-spaced values from 1 to `time_limit` (or from
/// `time_limit / 1000` when the limit is below one second).
pub fn default_tau_grid(time_limit: f64, points: usize) -> Vec<f64> {
    let hi = time_limit.max(f64::MIN_POSITIVE);
    let lo = if hi > 1.0 { 1.0 } else { hi / 1000.0 };
    match points {
        0 => Vec::new(),
        1 => vec![hi],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..points)
                .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceProfile {
    pub taus: Vec<f64>,
    /// Per solver, the fraction of instances solved within each `tau`.
    pub series: BTreeMap<String, Vec<f64>>,
}

impl PerformanceProfile {
    /// Columns `tau,<solver>...`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau");
        for s in self.series.keys() {
            let _ = write!(out, ",{s}");
        }
        out.push('\n');
        for (i, tau) in self.taus.iter().enumerate() {
            let _ = write!(out, "{tau}");
            for vals in self.series.values() {
                let _ = write!(out, ",{}", vals[i]);
            }
            out.push('\n');
        }
        out
    }
}

/// Absolute performance profile `f_s(tau) = |{solved with t <= tau}| / N`.
/// Every solver must cover the same instance set.
pub fn perf_profile(
    by_solver: &BTreeMap<String, Vec<BenchRecord>>,
    taus: &[f64],
) -> Result<PerformanceProfile> {
    let sets: Vec<(&String, BTreeSet<&str>)> = by_solver
        .iter()
        .map(|(s, rs)| (s, rs.iter().map(|r| r.instance.as_str()).collect()))
        .collect();
    if let Some((first, reference)) = sets.first() {
        for (solver, set) in &sets[1..] {
            if set != reference {
                let missing: Vec<_> = reference.difference(set).collect();
                let extra: Vec<_> = set.difference(reference).collect();
                return Err(Error::InstanceMismatch(format!(
                    "`{solver}` vs `{first}`: missing {missing:?}, extra {extra:?}"
                )));
            }
        }
    }
    let series = by_solver
        .iter()
        .map(|(s, rs)| {
            let n = rs.len().max(1) as f64;
            let vals = taus
                .iter()
                .map(|&tau| rs.iter().filter(|r| r.solved() && r.seconds <= tau).count() as f64 / n)
                .collect();
            (s.clone(), vals)
        })
        .collect();
    Ok(PerformanceProfile {
        taus: taus.to_vec(),
        series,
    })
}

pub fn write_records<W: std::io::Write>(records: &[BenchRecord], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in records {
        wr.serialize(r)?;
    }
    if records.is_empty() {
        wr.write_record([
            "instance",
            "solver",
            "status",
            "iterations",
            "seconds",
            "tol",
        ])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_records<R: std::io::Read>(r: R) -> Result<Vec<BenchRecord>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}
