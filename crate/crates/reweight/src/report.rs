//! Run reports: JSON, the flat RMSE table and the console summary.
//!
//! `report.json` and `rmse.csv` depend only on the configuration and seed.
//! Wall-clock timings go to `timing.csv` so the other two stay
//! byte-for-byte reproducible.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{EstimatorKind, ExperimentConfig};
use crate::dataset::{Dataset, Provenance};
use crate::error::{HarnessError, Result};
use crate::harness::BandwidthChoice;

pub const PREPROCESSING: &str = "features standardized to zero mean and unit variance using training-split statistics";
pub const BANDWIDTH_SELECTION: &str =
    "squared bandwidth selected once per (replication, N) by plain NW validation RMSE on unperturbed data";

/// RMSE of one estimator in one cell of one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub dataset: String,
    pub estimator: EstimatorKind,
    pub neighbors: usize,
    pub rho: f64,
    pub tau: usize,
    pub tau_frac: f64,
    pub kappa_min: f64,
    pub kappa_max: f64,
    pub replication: usize,
    pub h2: f64,
    pub rmse: f64,
    /// Test points excluded because the estimator failed.
    pub failures: usize,
    /// Robust fits that hit the iteration budget (their best iterate is used).
    pub unconverged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationInfo {
    pub replication: usize,
    pub split_seed: u64,
    pub point_seed: u64,
    pub bandwidths: Vec<BandwidthChoice>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub estimator: EstimatorKind,
    pub neighbors: usize,
    pub tau_frac: f64,
    pub rho: f64,
    pub replications: usize,
    pub mean_rmse: f64,
    /// Sample standard deviation over replications (0 for a single one).
    pub sd_rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub estimator: EstimatorKind,
    /// Summed over test points, so it exceeds wall-clock time when threads
    /// run in parallel.
    pub seconds: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub dataset: String,
    pub provenance: Provenance,
    pub samples: usize,
    pub dim: usize,
    pub dropped_rows: usize,
    pub preprocessing: String,
    pub bandwidth_selection: String,
    pub config: ExperimentConfig,
    pub replications: Vec<ReplicationInfo>,
    pub summary: Vec<Summary>,
    pub records: Vec<Record>,
    #[serde(skip)]
    pub timings: Vec<Timing>,
}

impl RunReport {
    pub(crate) fn assemble(
        cfg: &ExperimentConfig,
        data: &Dataset,
        replications: Vec<ReplicationInfo>,
        records: Vec<Record>,
        timings: Vec<Timing>,
    ) -> Self {
        Self {
            dataset: data.name.clone(),
            provenance: data.provenance.clone(),
            samples: data.len(),
            dim: data.dim(),
            dropped_rows: data.dropped_rows,
            preprocessing: PREPROCESSING.into(),
            bandwidth_selection: BANDWIDTH_SELECTION.into(),
            config: cfg.clone(),
            replications,
            summary: summarize(cfg, &records),
            records,
            timings,
        }
    }

    /// Mean RMSE of `estimator` in the given cell.
    pub fn mean_rmse(&self, estimator: EstimatorKind, neighbors: usize, tau_frac: f64, rho: f64) -> Option<f64> {
        self.summary
            .iter()
            .find(|s| s.estimator == estimator && s.neighbors == neighbors && s.tau_frac == tau_frac && s.rho == rho)
            .map(|s| s.mean_rmse)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| HarnessError::Serialize(e.to_string()))
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let ser = |e: csv::Error| HarnessError::Serialize(e.to_string());
        w.write_record([
            "dataset",
            "estimator",
            "neighbors",
            "rho",
            "tau",
            "tau_frac",
            "kappa_min",
            "kappa_max",
            "replication",
            "h2",
            "rmse",
            "failures",
            "unconverged",
        ])
        .map_err(ser)?;
        for r in &self.records {
            w.write_record([
                r.dataset.clone(),
                r.estimator.to_string(),
                r.neighbors.to_string(),
                r.rho.to_string(),
                r.tau.to_string(),
                r.tau_frac.to_string(),
                r.kappa_min.to_string(),
                r.kappa_max.to_string(),
                r.replication.to_string(),
                r.h2.to_string(),
                r.rmse.to_string(),
                r.failures.to_string(),
                r.unconverged.to_string(),
            ])
            .map_err(ser)?;
        }
        w.flush().map_err(|e| HarnessError::Serialize(e.to_string()))
    }

    pub fn write_timing_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let ser = |e: csv::Error| HarnessError::Serialize(e.to_string());
        w.write_record(["dataset", "estimator", "evaluations", "seconds"]).map_err(ser)?;
        for t in &self.timings {
            w.write_record([self.dataset.clone(), t.estimator.to_string(), t.evaluations.to_string(), t.seconds.to_string()])
                .map_err(ser)?;
        }
        w.flush().map_err(|e| HarnessError::Serialize(e.to_string()))
    }

    /// Writes `report.json`, `rmse.csv` and `timing.csv` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<OutputPaths> {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        let paths = OutputPaths {
            json: dir.join("report.json"),
            csv: dir.join("rmse.csv"),
            timing: dir.join("timing.csv"),
        };
        let create = |p: &PathBuf| std::fs::File::create(p).map_err(|e| HarnessError::io(p, e));
        std::fs::write(&paths.json, self.to_json()? + "\n").map_err(|e| HarnessError::io(&paths.json, e))?;
        self.write_csv(create(&paths.csv)?)?;
        self.write_timing_csv(create(&paths.timing)?)?;
        Ok(paths)
    }

    /// Mean ± sd RMSE with one row per (N, τ/N, ρ) cell and one column per
    /// estimator.
    pub fn render_table(&self, bold: bool) -> String {
        let estimators = &self.config.estimators;
        let mut cells: BTreeMap<(usize, usize, usize), Vec<Option<&Summary>>> = BTreeMap::new();
        for s in &self.summary {
            let key = (
                self.config.neighbors.iter().position(|&n| n == s.neighbors).unwrap_or(0),
                self.config.tau_fracs.iter().position(|&t| t == s.tau_frac).unwrap_or(0),
                self.config.rho_grid.iter().position(|&r| r == s.rho).unwrap_or(0),
            );
            let row = cells.entry(key).or_insert_with(|| vec![None; estimators.len()]);
            if let Some(j) = estimators.iter().position(|&e| e == s.estimator) {
                row[j] = Some(s);
            }
        }

        let mut out = String::new();
        let mut header = format!("{:>5} {:>6} {:>8}", "N", "tau/N", "rho");
        for e in estimators {
            let _ = write!(header, " {:>20}", e.name());
        }
        if bold {
            let _ = writeln!(out, "\x1b[1m{header}\x1b[0m");
        } else {
            let _ = writeln!(out, "{header}");
        }
        for ((ni, ti, ri), row) in &cells {
            let _ = write!(
                out,
                "{:>5} {:>6} {:>8}",
                self.config.neighbors[*ni], self.config.tau_fracs[*ti], self.config.rho_grid[*ri]
            );
            for s in row {
                match s {
                    Some(s) => {
                        let _ = write!(out, " {:>20}", format!("{:.4} ± {:.4}", s.mean_rmse, s.sd_rmse));
                    }
                    None => {
                        let _ = write!(out, " {:>20}", "-");
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputPaths {
    pub json: PathBuf,
    pub csv: PathBuf,
    pub timing: PathBuf,
}

fn summarize(cfg: &ExperimentConfig, records: &[Record]) -> Vec<Summary> {
    let mut out = Vec::new();
    for &n in &cfg.neighbors {
        for &t in &cfg.tau_fracs {
            for &rho in &cfg.rho_grid {
                for &e in &cfg.estimators {
                    let v: Vec<f64> = records
                        .iter()
                        .filter(|r| r.estimator == e && r.neighbors == n && r.tau_frac == t && r.rho == rho)
                        .map(|r| r.rmse)
                        .collect();
                    if v.is_empty() {
                        continue;
                    }
                    let k = v.len() as f64;
                    let mean = v.iter().sum::<f64>() / k;
                    let sd = if v.len() > 1 {
                        (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1.0)).sqrt()
                    } else {
                        0.0
                    };
                    out.push(Summary { estimator: e, neighbors: n, tau_frac: t, rho, replications: v.len(), mean_rmse: mean, sd_rmse: sd });
                }
            }
        }
    }
    out
}
