//! Experiment configuration, readable from TOML.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use reweight_core::kernel::{KernelFamily, KernelSpec};
use reweight_core::reweight::Divergence;
use serde::{Deserialize, Serialize};

use crate::dataset::Generator;
use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EstimatorKind {
    #[serde(rename = "nw")]
    Nw,
    #[serde(rename = "llr")]
    Llr,
    #[serde(rename = "llr-i")]
    LlrI,
    #[serde(rename = "nw-logdet")]
    NwLogDet,
    #[serde(rename = "nw-buresw", alias = "nw-bures")]
    NwBures,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 5] =
        [EstimatorKind::Nw, EstimatorKind::Llr, EstimatorKind::LlrI, EstimatorKind::NwLogDet, EstimatorKind::NwBures];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Nw => "nw",
            EstimatorKind::Llr => "llr",
            EstimatorKind::LlrI => "llr-i",
            EstimatorKind::NwLogDet => "nw-logdet",
            EstimatorKind::NwBures => "nw-buresw",
        }
    }

    pub fn divergence(self) -> Option<Divergence> {
        match self {
            EstimatorKind::NwLogDet => Some(Divergence::LogDet),
            EstimatorKind::NwBures => Some(Divergence::BuresWasserstein),
            _ => None,
        }
    }

    pub fn is_robust(self) -> bool {
        self.divergence().is_some()
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "nw" => Ok(EstimatorKind::Nw),
            "llr" => Ok(EstimatorKind::Llr),
            "llr-i" | "llri" => Ok(EstimatorKind::LlrI),
            "nw-logdet" | "nw-kl" => Ok(EstimatorKind::NwLogDet),
            "nw-buresw" | "nw-bures" | "nw-wasserstein" => Ok(EstimatorKind::NwBures),
            other => Err(format!("unknown estimator `{other}` (expected nw, llr, llr-i, nw-logdet or nw-buresw)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    Gaussian,
    Laplacian,
    Cauchy,
    RationalQuadratic,
}

impl KernelKind {
    /// Kernel with squared bandwidth `h2`.
    pub fn spec(self, h2: f64, alpha: f64) -> Result<KernelSpec> {
        let family = match self {
            KernelKind::Gaussian => KernelFamily::Gaussian,
            KernelKind::Laplacian => KernelFamily::Laplacian,
            KernelKind::Cauchy => KernelFamily::Cauchy,
            KernelKind::RationalQuadratic => KernelFamily::RationalQuadratic { alpha },
        };
        Ok(KernelSpec::new(family, h2.sqrt())?)
    }
}

impl FromStr for KernelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "rbf" => Ok(KernelKind::Gaussian),
            "laplacian" => Ok(KernelKind::Laplacian),
            "cauchy" => Ok(KernelKind::Cauchy),
            "rational-quadratic" | "rq" => Ok(KernelKind::RationalQuadratic),
            other => Err(format!("unknown kernel `{other}` (expected gaussian, laplacian, cauchy or rq)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataSource {
    Csv { path: PathBuf, response_column: String },
    Synthetic { generator: Generator, samples: usize, dim: usize, noise_sd: f64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Split {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl Split {
    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }
}

impl Default for Split {
    fn default() -> Self {
        Self { train: 1200, val: 50, test: 800 }
    }
}

/// `{1, 2, 5} × 10^k` for `k = −2, …, 4`, ascending.
pub fn default_bandwidth_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (-2..=4).flat_map(|k| [1.0, 2.0, 5.0].map(|m| m * 10f64.powi(k))).collect();
    grid.sort_by(f64::total_cmp);
    grid
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub split: Split,
    pub neighbors: Vec<usize>,
    pub kernel: KernelKind,
    /// Shape parameter of the rational quadratic kernel.
    pub kernel_alpha: f64,
    /// Candidate squared bandwidths.
    pub bandwidth_grid: Vec<f64>,
    pub rho_grid: Vec<f64>,
    /// Perturbed neighbors as a fraction of `N`; `τ = round(fraction · N)`.
    pub tau_fracs: Vec<f64>,
    pub kappa_range: [f64; 2],
    pub replications: usize,
    pub seed: u64,
    pub estimators: Vec<EstimatorKind>,
    /// A run fails if any estimator fails on more than this fraction of the
    /// test points of a cell.
    pub max_failure_rate: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data: DataSource::Synthetic { generator: Generator::Linear, samples: 2050, dim: 4, noise_sd: 0.1, seed: 0 },
            split: Split::default(),
            neighbors: vec![10, 20, 30, 50],
            kernel: KernelKind::Gaussian,
            kernel_alpha: 1.0,
            bandwidth_grid: default_bandwidth_grid(),
            rho_grid: vec![0.01, 0.1, 1.0, 10.0],
            tau_fracs: vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
            kappa_range: [1.8, 2.2],
            replications: 10,
            seed: 0,
            estimators: EstimatorKind::ALL.to_vec(),
            max_failure_rate: 0.01,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        toml::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| HarnessError::Serialize(e.to_string()))
    }

    /// Checks everything that does not require the dataset.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.split.train == 0 || self.split.val == 0 || self.split.test == 0 {
            return bad(format!("split sizes must be positive, got {:?}", self.split));
        }
        if self.neighbors.is_empty() || self.neighbors.iter().any(|&n| n == 0 || n > self.split.train) {
            return bad(format!("neighbors must be in 1..={}, got {:?}", self.split.train, self.neighbors));
        }
        if self.bandwidth_grid.is_empty() || self.bandwidth_grid.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
            return bad(format!("bandwidth grid must be non-empty and positive, got {:?}", self.bandwidth_grid));
        }
        if self.rho_grid.is_empty() || self.rho_grid.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
            return bad(format!("rho grid must be non-empty and nonnegative, got {:?}", self.rho_grid));
        }
        if self.tau_fracs.is_empty() || self.tau_fracs.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return bad(format!("tau fractions must lie in [0, 1], got {:?}", self.tau_fracs));
        }
        let [lo, hi] = self.kappa_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return bad(format!("kappa range must satisfy low <= high, got [{lo}, {hi}]"));
        }
        if self.replications == 0 {
            return bad("replications must be positive".into());
        }
        if self.estimators.is_empty() {
            return bad("no estimators configured".into());
        }
        if !(self.kernel_alpha > 0.0) {
            return bad(format!("kernel_alpha must be positive, got {}", self.kernel_alpha));
        }
        if !(0.0..1.0).contains(&self.max_failure_rate) {
            return bad(format!("max_failure_rate must lie in [0, 1), got {}", self.max_failure_rate));
        }
        Ok(())
    }
}
