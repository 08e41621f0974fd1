//! Tabular datasets: CSV ingestion, synthetic generators and standardization.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    File { path: PathBuf, response_column: String },
    Synthetic { generator: Generator, samples: usize, dim: usize, noise_sd: f64, seed: u64 },
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::File { path, response_column } => {
                write!(f, "file {} (response `{response_column}`)", path.display())
            }
            Provenance::Synthetic { generator, samples, dim, noise_sd, seed } => {
                write!(f, "synthetic {generator} (M={samples}, d={dim}, noise_sd={noise_sd}, seed={seed})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub feature_names: Vec<String>,
    pub response_name: String,
    /// One row per sample.
    pub features: Vec<Vec<f64>>,
    pub responses: Vec<f64>,
    pub provenance: Provenance,
    /// Rows rejected during ingestion because of blank cells.
    pub dropped_rows: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    /// Writes the dataset as CSV with the response in the last column.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        let header: Vec<&str> = self.feature_names.iter().map(String::as_str).chain([self.response_name.as_str()]).collect();
        writeln!(out, "{}", header.join(","))?;
        for (x, y) in self.features.iter().zip(&self.responses) {
            let mut line = String::new();
            for v in x {
                line.push_str(&v.to_string());
                line.push(',');
            }
            line.push_str(&y.to_string());
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        self.write_csv(&mut out).and_then(|_| out.flush()).map_err(|e| HarnessError::io(path, e))
    }
}

/// Reads a CSV file with a header row.
///
/// `response_column` is a header name, or a zero-based column index if no
/// header matches. Every other column is a feature. Rows containing a blank
/// cell are dropped and counted in [`Dataset::dropped_rows`]; any other cell
/// that does not parse as a number is an error.
pub fn load_csv(path: impl AsRef<Path>, response_column: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let csv_err = |source| HarnessError::Csv { path: path.to_path_buf(), source };
    let file = std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file);
    let headers: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if headers.len() < 2 {
        return Err(HarnessError::InvalidData(format!(
            "{}: need at least one feature column and one response column",
            path.display()
        )));
    }
    let target = headers
        .iter()
        .position(|h| h == response_column)
        .or_else(|| response_column.parse::<usize>().ok().filter(|&i| i < headers.len()))
        .ok_or_else(|| {
            HarnessError::InvalidData(format!(
                "{}: no response column `{response_column}` (columns: {})",
                path.display(),
                headers.join(", ")
            ))
        })?;

    let mut features = Vec::new();
    let mut responses = Vec::new();
    let mut dropped_rows = 0;
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        if record.iter().any(str::is_empty) {
            dropped_rows += 1;
            continue;
        }
        let line = record.position().map_or(0, csv::Position::line);
        let mut row = Vec::with_capacity(headers.len() - 1);
        let mut response = 0.0;
        for (j, cell) in record.iter().enumerate() {
            let value: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| HarnessError::NonNumeric {
                path: path.to_path_buf(),
                line,
                column: headers[j].clone(),
                value: cell.to_string(),
            })?;
            if j == target {
                response = value;
            } else {
                row.push(value);
            }
        }
        features.push(row);
        responses.push(response);
    }
    if responses.is_empty() {
        return Err(HarnessError::InvalidData(format!("{}: no complete rows", path.display())));
    }

    let name = path.file_stem().map_or_else(|| "data".to_string(), |s| s.to_string_lossy().into_owned());
    let response_name = headers[target].clone();
    let feature_names = headers.into_iter().enumerate().filter(|&(j, _)| j != target).map(|(_, h)| h).collect();
    Ok(Dataset {
        name,
        feature_names,
        response_name: response_name.clone(),
        features,
        responses,
        provenance: Provenance::File { path: path.to_path_buf(), response_column: response_name },
        dropped_rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    /// `y = 1 + Σ|cⱼ| + Σ cⱼxⱼ` with `cⱼ = j`; strictly positive before noise.
    Linear,
    /// `y = 1 + √d + Σ sin(πxⱼ)/√d`.
    Sinusoid,
    /// `y = 1 + Σ j·[xⱼ > 0]`.
    Piecewise,
}

impl Generator {
    pub fn name(self) -> &'static str {
        match self {
            Generator::Linear => "linear",
            Generator::Sinusoid => "sinusoid",
            Generator::Piecewise => "piecewise",
        }
    }

    /// Noise-free response at `x`.
    pub fn response(self, x: &[f64]) -> f64 {
        let d = x.len() as f64;
        match self {
            Generator::Linear => {
                let coef = |j: usize| (j + 1) as f64;
                let offset: f64 = 1.0 + (0..x.len()).map(coef).sum::<f64>();
                offset + x.iter().enumerate().map(|(j, v)| coef(j) * v).sum::<f64>()
            }
            Generator::Sinusoid => {
                1.0 + d.sqrt() + x.iter().map(|v| (std::f64::consts::PI * v).sin()).sum::<f64>() / d.sqrt()
            }
            Generator::Piecewise => {
                1.0 + x.iter().enumerate().filter(|(_, v)| **v > 0.0).map(|(j, _)| (j + 1) as f64).sum::<f64>()
            }
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Generator {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(Generator::Linear),
            "sinusoid" | "sin" => Ok(Generator::Sinusoid),
            "piecewise" | "step" => Ok(Generator::Piecewise),
            other => Err(format!("unknown generator `{other}` (expected linear, sinusoid or piecewise)")),
        }
    }
}

/// Draws `samples` covariates uniformly from `[−1, 1]^dim` and adds
/// `N(0, noise_sd²)` noise to the generator's response.
pub fn synthetic_dataset(generator: Generator, samples: usize, dim: usize, noise_sd: f64, seed: u64) -> Result<Dataset> {
    if samples == 0 || dim == 0 {
        return Err(HarnessError::InvalidData("synthetic data needs positive sample count and dimension".into()));
    }
    let bad_noise = || HarnessError::InvalidData(format!("noise_sd must be finite and nonnegative, got {noise_sd}"));
    if !(noise_sd >= 0.0) {
        return Err(bad_noise());
    }
    let noise = Normal::new(0.0, noise_sd).map_err(|_| bad_noise())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(samples);
    let mut responses = Vec::with_capacity(samples);
    for _ in 0..samples {
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let eps = if noise_sd > 0.0 { noise.sample(&mut rng) } else { 0.0 };
        responses.push(generator.response(&x) + eps);
        features.push(x);
    }
    Ok(Dataset {
        name: format!("synthetic-{generator}"),
        feature_names: (1..=dim).map(|j| format!("x{j}")).collect(),
        response_name: "y".into(),
        features,
        responses,
        provenance: Provenance::Synthetic { generator, samples, dim, noise_sd, seed },
        dropped_rows: 0,
    })
}

/// Per-feature affine map to zero mean and unit variance, fitted on a subset
/// of rows. Constant features are centered only.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(features: &[Vec<f64>], rows: &[usize]) -> Result<Self> {
        let Some(&first) = rows.first() else {
            return Err(HarnessError::InvalidData("cannot standardize on an empty split".into()));
        };
        let d = features[first].len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for &i in rows {
            for (m, v) in mean.iter_mut().zip(&features[i]) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for &i in rows {
            for ((s, v), m) in var.iter_mut().zip(&features[i]).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var.into_iter().map(|s| (s / n).sqrt()).map(|s| if s > 0.0 { s } else { 1.0 }).collect();
        Ok(Self { mean, scale })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect()
    }
}
