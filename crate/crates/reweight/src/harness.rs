//! The benchmark protocol: split, restrict to nearest neighbors, select the
//! bandwidth on clean validation data, perturb the neighbors' responses and
//! score every estimator by test RMSE.
//!
//! Randomness comes from counter-derived ChaCha8 streams, one per
//! replication split and one per (replication, cell, test point), so results
//! do not depend on evaluation order or thread scheduling.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use reweight_core::estimators::{llr_estimate, llr_intercept, nw_estimate, LocalSample};
use reweight_core::kernel::{default_jitter, eval_kernel, gram_nominal, KernelSpec};
use reweight_core::reweight::UncertaintySpec;
use reweight_core::solver::{robust_nw, OuterConfig};
use serde::{Deserialize, Serialize};

use crate::config::{DataSource, EstimatorKind, ExperimentConfig, KernelKind};
use crate::dataset::{load_csv, synthetic_dataset, Dataset, Standardizer};
use crate::error::{HarnessError, Result};
use crate::report::{Record, ReplicationInfo, RunReport, Timing};

/// Indices of the `n` training points closest to `z0` in Euclidean distance,
/// nearest first. Ties go to the lower index.
pub fn knn_neighbors<P: AsRef<[f64]>>(train: &[P], z0: &[f64], n: usize) -> Result<Vec<usize>> {
    if n == 0 || n > train.len() {
        return Err(HarnessError::InvalidData(format!(
            "cannot select {n} neighbors from {} training points",
            train.len()
        )));
    }
    let mut dist: Vec<(f64, usize)> = train
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let p = p.as_ref();
            if p.len() != z0.len() {
                return Err(HarnessError::InvalidData(format!(
                    "training point {i} has dimension {}, query has {}",
                    p.len(),
                    z0.len()
                )));
            }
            Ok((p.iter().zip(z0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
        })
        .collect::<Result<_>>()?;
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if n < dist.len() {
        dist.select_nth_unstable_by(n - 1, cmp);
        dist.truncate(n);
    }
    dist.sort_unstable_by(cmp);
    Ok(dist.into_iter().map(|(_, i)| i).collect())
}

/// Multiplies the responses at `order[0..tau]` by independent draws of
/// `κ ~ U[kappa_range]`.
pub fn perturb_responses(y: &[f64], order: &[usize], tau: usize, kappa_range: [f64; 2], rng: &mut impl Rng) -> Result<Vec<f64>> {
    if tau > order.len() {
        return Err(HarnessError::InvalidData(format!("tau = {tau} exceeds the {} neighbors", order.len())));
    }
    let [lo, hi] = kappa_range;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(HarnessError::InvalidData(format!("invalid kappa range [{lo}, {hi}]")));
    }
    let mut out = y.to_vec();
    for &i in &order[..tau] {
        let slot = out
            .get_mut(i)
            .ok_or_else(|| HarnessError::InvalidData(format!("neighbor index {i} out of range for {} responses", y.len())))?;
        let kappa = if lo == hi { lo } else { rng.random_range(lo..=hi) };
        *slot *= kappa;
    }
    Ok(out)
}

pub fn rmse(predictions: &[f64], truths: &[f64]) -> Result<f64> {
    if predictions.len() != truths.len() || predictions.is_empty() {
        return Err(HarnessError::InvalidData(format!(
            "rmse needs equal non-zero lengths, got {} and {}",
            predictions.len(),
            truths.len()
        )));
    }
    let sse: f64 = predictions.iter().zip(truths).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((sse / predictions.len() as f64).sqrt())
}

/// Features and responses of one split.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Labeled {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

impl Labeled {
    fn gather(x: &[Vec<f64>], y: &[f64], rows: &[usize], scaler: &Standardizer) -> Self {
        Self { x: rows.iter().map(|&i| scaler.apply(&x[i])).collect(), y: rows.iter().map(|&i| y[i]).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthChoice {
    pub neighbors: usize,
    pub h2: f64,
    pub val_rmse: f64,
    /// Grid values skipped because some validation point got zero weight.
    pub skipped: usize,
}

/// Picks the squared bandwidth minimizing the validation RMSE of plain
/// Nadaraya-Watson on `n` nearest neighbors. Ties go to the smaller value.
pub fn select_bandwidth(
    train: &Labeled,
    val: &Labeled,
    n: usize,
    kernel: KernelKind,
    alpha: f64,
    grid: &[f64],
) -> Result<BandwidthChoice> {
    if grid.is_empty() {
        return Err(HarnessError::Config("empty bandwidth grid".into()));
    }
    let neighborhoods: Vec<Vec<usize>> = val.x.iter().map(|z| knn_neighbors(&train.x, z, n)).collect::<Result<_>>()?;
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();

    let mut best: Option<(f64, f64)> = None;
    let mut skipped = 0;
    for &h2 in &sorted {
        let spec = kernel.spec(h2, alpha)?;
        let preds: Option<Vec<f64>> = val
            .x
            .iter()
            .zip(&neighborhoods)
            .map(|(z, idx)| {
                let (mut num, mut den) = (0.0, 0.0);
                for &i in idx {
                    let w = eval_kernel(&spec, z, &train.x[i]).ok()?;
                    num += w * train.y[i];
                    den += w;
                }
                (den > 0.0).then(|| num / den)
            })
            .collect();
        let Some(preds) = preds else {
            skipped += 1;
            continue;
        };
        let err = rmse(&preds, &val.y)?;
        if best.is_none_or(|(_, e)| err < e) {
            best = Some((h2, err));
        }
    }
    let (h2, val_rmse) = best.ok_or_else(|| {
        HarnessError::InvalidData(format!("every bandwidth candidate left a validation point with zero weight (N = {n})"))
    })?;
    Ok(BandwidthChoice { neighbors: n, h2, val_rmse, skipped })
}

/// Mixes `parts` into `master` with the SplitMix64 finalizer.
pub fn stream_seed(master: u64, parts: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    parts.iter().fold(mix(master), |h, &p| mix(h ^ mix(p)))
}

pub fn load_dataset(source: &DataSource) -> Result<Dataset> {
    match source {
        DataSource::Csv { path, response_column } => load_csv(path, response_column),
        DataSource::Synthetic { generator, samples, dim, noise_sd, seed } => {
            synthetic_dataset(*generator, *samples, *dim, *noise_sd, *seed)
        }
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let data = load_dataset(&cfg.data)?;
    run_on_dataset(cfg, &data)
}

/// Runs the protocol on an already loaded dataset; `cfg.data` is only echoed.
pub fn run_on_dataset(cfg: &ExperimentConfig, data: &Dataset) -> Result<RunReport> {
    cfg.validate()?;
    if data.len() < cfg.split.total() {
        return Err(HarnessError::Config(format!(
            "dataset `{}` has {} rows but the split needs {}",
            data.name,
            data.len(),
            cfg.split.total()
        )));
    }
    let columns = Columns::new(cfg);
    let outcomes: Vec<ReplicationOutcome> =
        (0..cfg.replications).into_par_iter().map(|rep| run_replication(cfg, data, &columns, rep)).collect::<Result<_>>()?;

    let mut replications = Vec::with_capacity(outcomes.len());
    let mut records = Vec::new();
    let mut timings: Vec<Timing> =
        cfg.estimators.iter().map(|&e| Timing { estimator: e, seconds: 0.0, evaluations: 0 }).collect();
    for out in outcomes {
        replications.push(out.info);
        records.extend(out.records);
        for (t, (secs, evals)) in timings.iter_mut().zip(out.timings) {
            t.seconds += secs;
            t.evaluations += evals;
        }
    }
    Ok(RunReport::assemble(cfg, data, replications, records, timings))
}

/// Prediction slots evaluated per test point: every baseline once, every
/// robust estimator once per radius.
struct Columns {
    slots: Vec<(EstimatorKind, Option<usize>)>,
}

impl Columns {
    fn new(cfg: &ExperimentConfig) -> Self {
        let mut slots = Vec::new();
        for &e in &cfg.estimators {
            if e.is_robust() {
                slots.extend((0..cfg.rho_grid.len()).map(|r| (e, Some(r))));
            } else {
                slots.push((e, None));
            }
        }
        Self { slots }
    }

    fn find(&self, e: EstimatorKind, rho_index: usize) -> usize {
        let want = if e.is_robust() { Some(rho_index) } else { None };
        self.slots.iter().position(|&s| s == (e, want)).expect("column exists for every configured estimator")
    }
}

struct ReplicationOutcome {
    info: ReplicationInfo,
    records: Vec<Record>,
    /// Seconds and evaluation count per configured estimator.
    timings: Vec<(f64, usize)>,
}

struct PointOutcome {
    predictions: Vec<Option<f64>>,
    unconverged: Vec<bool>,
    seconds: Vec<f64>,
}

fn run_replication(cfg: &ExperimentConfig, data: &Dataset, columns: &Columns, rep: usize) -> Result<ReplicationOutcome> {
    let split_seed = stream_seed(cfg.seed, &[rep as u64, 0]);
    let point_seed = stream_seed(cfg.seed, &[rep as u64, 1]);
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(split_seed));
    let (train_rows, rest) = order.split_at(cfg.split.train);
    let (val_rows, rest) = rest.split_at(cfg.split.val);
    let test_rows = &rest[..cfg.split.test];

    let scaler = Standardizer::fit(&data.features, train_rows)?;
    let train = Labeled::gather(&data.features, &data.responses, train_rows, &scaler);
    let val = Labeled::gather(&data.features, &data.responses, val_rows, &scaler);
    let test = Labeled::gather(&data.features, &data.responses, test_rows, &scaler);

    let mut bandwidths = Vec::with_capacity(cfg.neighbors.len());
    let mut records = Vec::new();
    let mut timings = vec![(0.0, 0usize); cfg.estimators.len()];
    for (ni, &n) in cfg.neighbors.iter().enumerate() {
        let choice = select_bandwidth(&train, &val, n, cfg.kernel, cfg.kernel_alpha, &cfg.bandwidth_grid)?;
        bandwidths.push(choice);
        let kernel = cfg.kernel.spec(choice.h2, cfg.kernel_alpha)?;
        for (ti, &frac) in cfg.tau_fracs.iter().enumerate() {
            let tau = (frac * n as f64).round() as usize;
            let cell = (ni * cfg.tau_fracs.len() + ti) as u64;
            let points: Vec<PointOutcome> = (0..test.x.len())
                .into_par_iter()
                .map(|p| {
                    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(point_seed, &[cell, p as u64]));
                    evaluate_point(cfg, columns, &kernel, &train, &test.x[p], n, tau, &mut rng)
                })
                .collect::<Result<_>>()?;

            let total = points.len();
            let mut scores = Vec::with_capacity(columns.slots.len());
            for (c, &(estimator, _)) in columns.slots.iter().enumerate() {
                let (preds, truths): (Vec<f64>, Vec<f64>) =
                    points.iter().zip(&test.y).filter_map(|(pt, &t)| pt.predictions[c].map(|p| (p, t))).unzip();
                let failures = total - preds.len();
                if failures as f64 > cfg.max_failure_rate * total as f64 {
                    return Err(HarnessError::TooManyFailures {
                        estimator: estimator.to_string(),
                        failed: failures,
                        total,
                        limit: 100.0 * cfg.max_failure_rate,
                    });
                }
                let unconverged = points.iter().filter(|pt| pt.unconverged[c]).count();
                scores.push((rmse(&preds, &truths)?, failures, unconverged));
                let slot = cfg.estimators.iter().position(|&e| e == estimator).expect("configured estimator");
                timings[slot].0 += points.iter().map(|pt| pt.seconds[c]).sum::<f64>();
                timings[slot].1 += total;
            }
            for (ri, &rho) in cfg.rho_grid.iter().enumerate() {
                for &estimator in &cfg.estimators {
                    let (rmse, failures, unconverged) = scores[columns.find(estimator, ri)];
                    records.push(Record {
                        dataset: data.name.clone(),
                        estimator,
                        neighbors: n,
                        rho,
                        tau,
                        tau_frac: frac,
                        kappa_min: cfg.kappa_range[0],
                        kappa_max: cfg.kappa_range[1],
                        replication: rep,
                        h2: choice.h2,
                        rmse,
                        failures,
                        unconverged,
                    });
                }
            }
        }
    }
    Ok(ReplicationOutcome {
        info: ReplicationInfo { replication: rep, split_seed, point_seed, bandwidths },
        records,
        timings,
    })
}

#[allow(clippy::too_many_arguments)]
fn evaluate_point(
    cfg: &ExperimentConfig,
    columns: &Columns,
    kernel: &KernelSpec,
    train: &Labeled,
    z0: &[f64],
    n: usize,
    tau: usize,
    rng: &mut ChaCha8Rng,
) -> Result<PointOutcome> {
    let idx = knn_neighbors(&train.x, z0, n)?;
    let covariates: Vec<Vec<f64>> = idx.iter().map(|&i| train.x[i].clone()).collect();
    let clean: Vec<f64> = idx.iter().map(|&i| train.y[i]).collect();
    let nearest_first: Vec<usize> = (0..n).collect();
    let responses = perturb_responses(&clean, &nearest_first, tau, cfg.kappa_range, rng)?;
    let weights: Vec<f64> = covariates.iter().map(|x| eval_kernel(kernel, z0, x)).collect::<Result<_, _>>()?;
    let sample = LocalSample::new(z0.to_vec(), covariates, responses, weights);

    let mut out = PointOutcome {
        predictions: vec![None; columns.slots.len()],
        unconverged: vec![false; columns.slots.len()],
        seconds: vec![0.0; columns.slots.len()],
    };
    let Ok(sample) = sample else { return Ok(out) };
    let mut nominal = None;
    let outer = OuterConfig::default();
    for (c, &(estimator, rho_index)) in columns.slots.iter().enumerate() {
        let start = Instant::now();
        out.predictions[c] = match (estimator, rho_index) {
            (EstimatorKind::Nw, _) => nw_estimate(&sample).ok(),
            (EstimatorKind::Llr, _) => llr_estimate(&sample).ok().map(|f| f.prediction),
            (EstimatorKind::LlrI, _) => llr_intercept(&sample).ok(),
            (robust, Some(ri)) => {
                let nominal = nominal
                    .get_or_insert_with(|| gram_nominal(kernel, z0, &sample.covariates, default_jitter(n + 1)).ok());
                let spec = UncertaintySpec::new(robust.divergence().expect("robust estimator"), cfg.rho_grid[ri]);
                match (nominal.as_ref(), spec) {
                    (Some(nominal), Ok(spec)) => robust_nw(&sample, nominal, &spec, &outer).ok().map(|fit| {
                        out.unconverged[c] = !fit.converged;
                        fit.beta[0]
                    }),
                    _ => None,
                }
            }
            (_, None) => unreachable!("robust columns carry a radius"),
        }
        .filter(|p| p.is_finite());
        out.seconds[c] = start.elapsed().as_secs_f64();
    }
    Ok(out)
}
