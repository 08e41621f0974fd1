//! The `reweight` command-line tool.
//!
//! Exit codes: 0 on success, 1 on numerical failure, 2 on usage errors
//! (bad flags, unreadable or malformed input).

use std::io::{IsTerminal, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use reweight_core::estimators::{llr_estimate, llr_intercept, nw_estimate, LocalSample};
use reweight_core::kernel::{default_jitter, eval_kernel, gram_nominal};
use reweight_core::linalg::{arrowhead_eigen, symmetric_eigenvalues, SymmetricMatrix};
use reweight_core::reweight::{bures_divergence, logdet_divergence, worst_case, Divergence, UncertaintySpec};
use reweight_core::solver::{robust_llr, robust_nw, OuterConfig, RobustFit};
use serde::Deserialize;
use serde_json::json;

use crate::config::{DataSource, EstimatorKind, ExperimentConfig, KernelKind, Split};
use crate::dataset::{load_csv, synthetic_dataset, Generator};
use crate::error::HarnessError;
use crate::harness::{knn_neighbors, run_experiment};

#[derive(Debug, Parser)]
#[command(name = "reweight", version, about = "Adversarially reweighted kernel regression")]
pub struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Predict the response at a single query point.
    Estimate(EstimateArgs),
    /// Solve the inner worst-case problem for a given matrix and loss vector.
    WorstCase(WorstCaseArgs),
    /// Run the benchmark protocol and write report.json, rmse.csv and timing.csv.
    Bench(Box<BenchArgs>),
    /// Write a synthetic dataset as CSV.
    GenData(GenDataArgs),
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Response column name (or zero-based index).
    #[arg(long, default_value = "y")]
    pub response_col: String,
    /// Query point, comma separated, in the units of the data file.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub query: Vec<f64>,
    /// nw, llr, llr-i, nw-logdet, nw-buresw, robust-nw or robust-llr.
    #[arg(long, default_value = "nw")]
    pub estimator: String,
    /// Divergence for robust-nw / robust-llr: logdet or bures.
    #[arg(long)]
    pub divergence: Option<String>,
    #[arg(long, default_value = "gaussian")]
    pub kernel: KernelKind,
    /// Squared bandwidth.
    #[arg(long, default_value_t = 1.0)]
    pub bandwidth2: f64,
    /// Restrict to this many nearest rows (default: all).
    #[arg(long)]
    pub neighbors: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    pub rho: f64,
}

#[derive(Debug, Args)]
pub struct WorstCaseArgs {
    /// JSON file with `omega_hat` (square matrix) and `losses`; may also set
    /// `rho` and `divergence`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub divergence: Option<String>,
    #[arg(long)]
    pub rho: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// TOML experiment configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// CSV dataset (replaces the synthetic default).
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value = "y")]
    pub response_col: String,
    /// Synthetic generator: linear, sinusoid or piecewise.
    #[arg(long, conflicts_with = "data")]
    pub generator: Option<Generator>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub noise_sd: Option<f64>,
    /// Seed of the synthetic generator.
    #[arg(long)]
    pub data_seed: Option<u64>,
    #[arg(long)]
    pub train: Option<usize>,
    #[arg(long)]
    pub val: Option<usize>,
    #[arg(long)]
    pub test: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub estimator: Option<Vec<EstimatorKind>>,
    #[arg(long)]
    pub kernel: Option<KernelKind>,
    /// Squared-bandwidth grid.
    #[arg(long, value_delimiter = ',')]
    pub bandwidth2: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub neighbors: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub rho: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub tau_frac: Option<Vec<f64>>,
    #[arg(long)]
    pub kappa_min: Option<f64>,
    #[arg(long)]
    pub kappa_max: Option<f64>,
    #[arg(long)]
    pub replications: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "reweight-out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long, default_value = "linear")]
    pub generator: Generator,
    #[arg(long, default_value_t = 2050)]
    pub samples: usize,
    #[arg(long, default_value_t = 4)]
    pub dim: usize,
    #[arg(long, default_value_t = 0.1)]
    pub noise_sd: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Harness(HarnessError),
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        CliError::Harness(e)
    }
}

impl From<reweight_core::Error> for CliError {
    fn from(e: reweight_core::Error) -> Self {
        CliError::Harness(e.into())
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Harness(e) if e.is_numerical() => 1,
            _ => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Harness(e) => write!(f, "{e}"),
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

/// Parses `args` (including the program name), runs the command and returns
/// the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Estimate(a) => cmd_estimate(a, cli.json, out),
        Command::WorstCase(a) => cmd_worst_case(a, cli.json, out),
        Command::Bench(a) => cmd_bench(a, cli.json, out),
        Command::GenData(a) => cmd_gen_data(a, cli.json, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn use_color() -> bool {
    std::env::var_os("NO_COLOR").is_none_or(|v| v.is_empty()) && std::io::stdout().is_terminal()
}

fn parse_divergence(s: &str) -> CliResult<Divergence> {
    s.parse().map_err(|e: reweight_core::Error| CliError::Usage(e.to_string()))
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Usage(format!("cannot write output: {e}"))
}

fn cmd_estimate(a: &EstimateArgs, json: bool, out: &mut dyn Write) -> CliResult {
    let robust = match a.estimator.to_ascii_lowercase().as_str() {
        "nw" | "llr" | "llr-i" => None,
        "nw-logdet" => Some((false, Divergence::LogDet)),
        "nw-buresw" | "nw-bures" => Some((false, Divergence::BuresWasserstein)),
        "llr-logdet" => Some((true, Divergence::LogDet)),
        "llr-buresw" | "llr-bures" => Some((true, Divergence::BuresWasserstein)),
        "robust-nw" | "robust-llr" => {
            let div = parse_divergence(a.divergence.as_deref().unwrap_or("logdet"))?;
            Some((a.estimator.eq_ignore_ascii_case("robust-llr"), div))
        }
        other => return Err(CliError::Usage(format!("unknown estimator `{other}`"))),
    };
    let data = load_csv(&a.data, &a.response_col)?;
    if a.query.len() != data.dim() {
        return Err(CliError::Usage(format!("query has {} coordinates, data has {} features", a.query.len(), data.dim())));
    }
    let n = a.neighbors.unwrap_or(data.len());
    let idx = knn_neighbors(&data.features, &a.query, n)?;
    let kernel = a.kernel.spec(a.bandwidth2, 1.0)?;
    let covariates: Vec<Vec<f64>> = idx.iter().map(|&i| data.features[i].clone()).collect();
    let responses: Vec<f64> = idx.iter().map(|&i| data.responses[i]).collect();
    let weights: Vec<f64> = covariates.iter().map(|x| eval_kernel(&kernel, &a.query, x)).collect::<Result<_, _>>()?;
    let sample = LocalSample::new(a.query.clone(), covariates, responses, weights)?;

    let name = a.estimator.to_ascii_lowercase();
    let (prediction, fit): (f64, Option<RobustFit>) = match robust {
        None if name == "nw" => (nw_estimate(&sample)?, None),
        None if name == "llr" => (llr_estimate(&sample)?.prediction, None),
        None => (llr_intercept(&sample)?, None),
        Some((linear, div)) => {
            let nominal = gram_nominal(&kernel, &a.query, &sample.covariates, default_jitter(n + 1))?;
            let spec = UncertaintySpec::new(div, a.rho)?;
            let cfg = OuterConfig::default();
            let fit = if linear { robust_llr(&sample, &nominal, &spec, &cfg)? } else { robust_nw(&sample, &nominal, &spec, &cfg)? };
            (fit.beta[0], Some(fit))
        }
    };

    if json {
        let mut doc = json!({
            "estimator": name,
            "prediction": prediction,
            "neighbors": idx,
            "nominal_weights": sample.weights,
        });
        if let Some(fit) = &fit {
            doc["rho"] = json!(a.rho);
            doc["robust"] = json!({
                "beta": fit.beta,
                "worst_case_value": fit.value,
                "gamma_star": finite_or_null(fit.solution.gamma_star),
                "inner_iterations": fit.solution.iterations,
                "outer_iterations": fit.trace.len().saturating_sub(1),
                "converged": fit.converged,
                "first_row_weights": fit.solution.first_row_weights,
            });
        }
        writeln!(out, "{doc:#}").map_err(io_err)?;
    } else {
        writeln!(out, "estimator   {name}").map_err(io_err)?;
        writeln!(out, "prediction  {prediction}").map_err(io_err)?;
        if let Some(fit) = &fit {
            writeln!(out, "gamma*      {}", fit.solution.gamma_star).map_err(io_err)?;
            writeln!(out, "inner iters {}", fit.solution.iterations).map_err(io_err)?;
            writeln!(out, "converged   {}", fit.converged).map_err(io_err)?;
            let w: Vec<String> = fit.solution.first_row_weights.iter().map(|w| format!("{w:.6}")).collect();
            writeln!(out, "weights     {}", w.join(" ")).map_err(io_err)?;
        }
    }
    Ok(())
}

fn finite_or_null(x: f64) -> serde_json::Value {
    if x.is_finite() {
        json!(x)
    } else {
        serde_json::Value::Null
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WorstCaseInput {
    omega_hat: Vec<Vec<f64>>,
    losses: Vec<f64>,
    #[serde(default)]
    rho: Option<f64>,
    #[serde(default)]
    divergence: Option<String>,
    /// Free-form provenance of the instance; ignored.
    #[serde(default)]
    #[allow(dead_code)]
    note: Option<String>,
}

fn cmd_worst_case(a: &WorstCaseArgs, json: bool, out: &mut dyn Write) -> CliResult {
    let text = std::fs::read_to_string(&a.input).map_err(|e| HarnessError::io(&a.input, e))?;
    let input: WorstCaseInput =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", a.input.display())))?;
    let rho = a.rho.or(input.rho).ok_or_else(|| CliError::Usage("--rho is required".into()))?;
    let divergence = parse_divergence(a.divergence.as_deref().or(input.divergence.as_deref()).unwrap_or("logdet"))?;
    let dim = input.omega_hat.len();
    if input.omega_hat.iter().any(|r| r.len() != dim) {
        return Err(CliError::Usage("omega_hat must be a square matrix".into()));
    }
    let flat: Vec<f64> = input.omega_hat.concat();
    let omega_hat = SymmetricMatrix::from_row_major(dim, &flat)?;
    let v = arrowhead_eigen(&input.losses)?;
    let spec = UncertaintySpec::new(divergence, rho)?;
    let sol = worst_case(&omega_hat, &v, &spec)?;

    let nominal = omega_hat.inner(&v.dense());
    let div = match divergence {
        Divergence::LogDet => logdet_divergence(&sol.omega_star, &omega_hat)?,
        Divergence::BuresWasserstein => bures_divergence(&sol.omega_star, &omega_hat)?,
    };
    let eig = symmetric_eigenvalues(&sol.omega_star)?;
    let min_eig = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let min_entry = sol.omega_star.min_entry();
    if json {
        let omega: Vec<&[f64]> = (0..dim).map(|i| sol.omega_star.row(i)).collect();
        let doc = json!({
            "divergence": divergence.name(),
            "rho": rho,
            "value": sol.value,
            "nominal_value": nominal,
            "gamma_star": finite_or_null(sol.gamma_star),
            "iterations": sol.iterations,
            "divergence_value": div,
            "feasibility_residual": div - rho,
            "min_entry": min_entry,
            "min_eigenvalue": min_eig,
            "first_row_weights": sol.first_row_weights,
            "omega_star": omega,
        });
        writeln!(out, "{doc:#}").map_err(io_err)?;
    } else {
        let lines = [
            format!("divergence      {}", divergence.name()),
            format!("rho             {rho}"),
            format!("F               {}", sol.value),
            format!("nominal         {nominal}"),
            format!("gamma*          {}", sol.gamma_star),
            format!("iterations      {}", sol.iterations),
            format!("phi - rho       {:e}", div - rho),
            format!("min entry       {min_entry:e}"),
            format!("min eigenvalue  {min_eig:e}"),
        ];
        for l in lines {
            writeln!(out, "{l}").map_err(io_err)?;
        }
    }
    Ok(())
}

fn bench_config(a: &BenchArgs) -> CliResult<ExperimentConfig> {
    let mut cfg = match &a.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(path) = &a.data {
        cfg.data = DataSource::Csv { path: path.clone(), response_column: a.response_col.clone() };
    } else if a.generator.is_some() || a.samples.is_some() || a.dim.is_some() || a.noise_sd.is_some() || a.data_seed.is_some()
    {
        let (mut g, mut m, mut d, mut sd, mut s) = match &cfg.data {
            DataSource::Synthetic { generator, samples, dim, noise_sd, seed } => (*generator, *samples, *dim, *noise_sd, *seed),
            DataSource::Csv { .. } => (Generator::Linear, 2050, 4, 0.1, 0),
        };
        g = a.generator.unwrap_or(g);
        m = a.samples.unwrap_or(m);
        d = a.dim.unwrap_or(d);
        sd = a.noise_sd.unwrap_or(sd);
        s = a.data_seed.unwrap_or(s);
        cfg.data = DataSource::Synthetic { generator: g, samples: m, dim: d, noise_sd: sd, seed: s };
    }
    let Split { train, val, test } = cfg.split;
    cfg.split = Split { train: a.train.unwrap_or(train), val: a.val.unwrap_or(val), test: a.test.unwrap_or(test) };
    if let Some(v) = &a.estimator {
        cfg.estimators = v.clone();
    }
    if let Some(k) = a.kernel {
        cfg.kernel = k;
    }
    if let Some(v) = &a.bandwidth2 {
        cfg.bandwidth_grid = v.clone();
    }
    if let Some(v) = &a.neighbors {
        cfg.neighbors = v.clone();
    }
    if let Some(v) = &a.rho {
        cfg.rho_grid = v.clone();
    }
    if let Some(v) = &a.tau_frac {
        cfg.tau_fracs = v.clone();
    }
    cfg.kappa_range = [a.kappa_min.unwrap_or(cfg.kappa_range[0]), a.kappa_max.unwrap_or(cfg.kappa_range[1])];
    cfg.replications = a.replications.unwrap_or(cfg.replications);
    cfg.seed = a.seed.unwrap_or(cfg.seed);
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

fn cmd_bench(a: &BenchArgs, json: bool, out: &mut dyn Write) -> CliResult {
    let cfg = bench_config(a)?;
    let report = run_experiment(&cfg)?;
    let paths = report.save(&a.out_dir)?;
    if json {
        let doc = json!({
            "dataset": report.dataset,
            "report": paths.json,
            "csv": paths.csv,
            "timing": paths.timing,
            "summary": report.summary,
        });
        writeln!(out, "{doc:#}").map_err(io_err)?;
    } else {
        writeln!(out, "dataset {} ({}), {} replications", report.dataset, report.provenance, cfg.replications).map_err(io_err)?;
        write!(out, "{}", report.render_table(use_color())).map_err(io_err)?;
        writeln!(out, "wrote {}, {} and {}", paths.json.display(), paths.csv.display(), paths.timing.display())
            .map_err(io_err)?;
    }
    Ok(())
}

fn cmd_gen_data(a: &GenDataArgs, json: bool, out: &mut dyn Write) -> CliResult {
    let data = synthetic_dataset(a.generator, a.samples, a.dim, a.noise_sd, a.seed)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    match &a.out {
        Some(path) => {
            data.save_csv(path)?;
            if json {
                let doc = json!({ "path": path, "samples": data.len(), "dim": data.dim(), "provenance": data.provenance });
                writeln!(out, "{doc:#}").map_err(io_err)?;
            } else {
                writeln!(out, "wrote {} rows to {}", data.len(), path.display()).map_err(io_err)?;
            }
        }
        None if json => {
            let doc = json!({ "features": data.feature_names, "x": data.features, "y": data.responses, "provenance": data.provenance });
            writeln!(out, "{doc}").map_err(io_err)?;
        }
        None => data.write_csv(out).map_err(io_err)?,
    }
    Ok(())
}
