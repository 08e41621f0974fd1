//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::Rng;
use reweight::config::{EstimatorKind, ExperimentConfig};
use reweight::dataset::Generator;
use reweight::harness::run_experiment;
use reweight::report::RunReport;
use reweight_core::estimators::{llr_estimate, nw_estimate, LocalSample};
use reweight_core::kernel::{default_jitter, gram_nominal, KernelSpec, NominalWeights};
use reweight_core::linalg::{arrowhead_eigen, psd_sqrt, woodbury_resolvent, woodbury_sandwich_resolvent, SymmetricMatrix};
use reweight_core::reweight::{
    bures_divergence, dual_objective_bures, dual_objective_logdet, logdet_divergence, robust_gradient, worst_case,
    Divergence, UncertaintySpec, WorstCaseSolution,
};
use reweight_core::solver::{robust_llr, robust_nw, LocalLinearLoss, LossFamily, OuterConfig};
use reweight_testkit::numeric::{central_diff5, golden_section, rel_err};
use reweight_testkit::{dense, gen, primal, Mat};

const DIVS: [Divergence; 2] = [Divergence::LogDet, Divergence::BuresWasserstein];
const RHOS: [f64; 4] = [0.01, 0.1, 1.0, 10.0];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn to_mat(m: &SymmetricMatrix) -> Mat {
    dense::from_row_major(m.dim(), m.as_slice())
}

fn from_mat(m: &Mat) -> SymmetricMatrix {
    SymmetricMatrix::from_row_major(m.nrows(), &dense::to_row_major(&((m + m.transpose()) * 0.5))).unwrap()
}

fn solve(om: &SymmetricMatrix, l: &[f64], div: Divergence, rho: f64) -> WorstCaseSolution {
    worst_case(om, &arrowhead_eigen(l).unwrap(), &UncertaintySpec::new(div, rho).unwrap()).unwrap()
}

fn oracle_div(div: Divergence) -> primal::Div {
    match div {
        Divergence::LogDet => primal::Div::LogDet,
        Divergence::BuresWasserstein => primal::Div::Bures,
    }
}

fn dense_phi(div: Divergence, a: &Mat, b: &Mat) -> f64 {
    match div {
        Divergence::LogDet => dense::logdet_divergence(a, b),
        Divergence::BuresWasserstein => dense::bures_divergence(a, b),
    }
}

fn local_instance(rng: &mut impl Rng, n: usize, d: usize) -> (LocalSample, NominalWeights) {
    let z0: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let y: Vec<f64> = pts.iter().map(|p| 1.0 + p.iter().sum::<f64>() + rng.random_range(-0.5..0.5)).collect();
    let k = KernelSpec::gaussian_h2(rng.random_range(0.3..2.0)).unwrap();
    let nom = gram_nominal(&k, &z0, &pts, default_jitter(n + 1)).unwrap();
    let s = LocalSample::new(z0, pts, y, nom.weights.clone()).unwrap();
    (s, nom)
}

/// Primal-dual equivalence against projected gradient on the primal problem.
fn c1_primal_dual() -> Verdict {
    let start = Instant::now();
    let mut rng = gen::rng(1001);
    let mut worst = 0.0f64;
    let mut worst_case_desc = String::new();
    for k in 0..50 {
        let n = 2 + k % 3;
        let om = if k % 2 == 0 { gen::dnn_pd(&mut rng, n, 0.1) } else { gen::gaussian_gram(&mut rng, n, 2, 1.0) };
        let l = gen::losses(&mut rng, n - 1, 2.0, 0.0);
        let rho = RHOS[(k / 3) % 4];
        for div in DIVS {
            let ours = solve(&from_mat(&om), &l, div, rho).value;
            let p = primal::worst_case(oracle_div(div), &om, &dense::arrowhead(&l), rho);
            let err = (ours - p.lagrangian).abs();
            if err > worst {
                worst = err;
                worst_case_desc = format!("{div} N+1={n} rho={rho}: {ours} vs {}", p.lagrangian);
            }
        }
    }
    let t = start.elapsed();
    verdict(
        worst <= 1e-4 && t <= Duration::from_secs(120),
        format!("100 solves, max |dual - primal| = {worst:.2e} ({worst_case_desc}), {:.1}s", t.as_secs_f64()),
    )
}

/// The optimum is doubly nonnegative and inside the ball.
fn c2_certificate() -> Verdict {
    let start = Instant::now();
    let mut rng = gen::rng(1002);
    let (mut worst_entry, mut worst_eig, mut worst_phi) = (f64::INFINITY, f64::INFINITY, 0.0f64);
    let mut pass = true;
    for k in 0..500 {
        let n = 2 + k % 29;
        let om = if k % 2 == 0 { gen::dnn_pd(&mut rng, n, 0.05) } else { gen::gaussian_gram(&mut rng, n, 2, 1.0) };
        let l = gen::losses(&mut rng, n - 1, 3.0, 0.1);
        let rho = RHOS[k % 4];
        for div in DIVS {
            let sol = solve(&from_mat(&om), &l, div, rho);
            let star = to_mat(&sol.omega_star);
            let ev = dense::eigenvalues(&star);
            let lmax = ev[0];
            let min_entry = dense::min_entry(&star) / lmax;
            let min_eig = ev[ev.len() - 1] / lmax;
            let phi = dense_phi(div, &star, &om);
            worst_entry = worst_entry.min(min_entry);
            worst_eig = worst_eig.min(min_eig);
            worst_phi = worst_phi.max(phi / rho - 1.0);
            pass &= min_entry >= -1e-8 && min_eig >= -1e-8 && phi <= rho * (1.0 + 1e-6);
        }
    }
    let t = start.elapsed();
    verdict(
        pass && t <= Duration::from_secs(60),
        format!(
            "1000 solves, min entry/lmax = {worst_entry:.2e}, min eig/lmax = {worst_eig:.2e}, max phi/rho - 1 = {worst_phi:.2e}, {:.1}s",
            t.as_secs_f64()
        ),
    )
}

/// Dual derivatives and the Danskin gradient against finite differences.
fn c3_gradients() -> Verdict {
    let mut rng = gen::rng(1003);
    let close = |a: f64, fd: f64| rel_err(a, fd) <= 1e-5 || (a - fd).abs() <= 1e-10;
    let (mut g_ok, mut h_ok, mut f_ok) = (0, 0, 0);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = rng.random_range(3..10);
        let om = gen::dnn_pd(&mut rng, n, 0.1);
        let l = gen::losses(&mut rng, n - 1, 2.0, 0.0);
        let v = arrowhead_eigen(&l).unwrap();
        let rho = rng.random_range(0.01..2.0);
        let s = psd_sqrt(&from_mat(&om)).unwrap();
        let lmax = dense::eigenvalues(&(dense::sqrt_psd(&om) * dense::arrowhead(&l) * dense::sqrt_psd(&om)))[0];
        let gamma = lmax * rng.random_range(1.2..4.0);
        let g = |x: f64| dual_objective_logdet(x, &s, &v, rho).unwrap();
        let fd = central_diff5(|x| g(x).value, gamma, 1e-4 * gamma);
        worst = worst.max(rel_err(g(gamma).derivative, fd));
        g_ok += usize::from(close(g(gamma).derivative, fd));

        let omh = from_mat(&om);
        let gamma = v.norm() * rng.random_range(1.2..4.0);
        let h = |x: f64| dual_objective_bures(x, &omh, &v, rho).unwrap();
        let fd = central_diff5(|x| h(x).value, gamma, 1e-4 * gamma);
        worst = worst.max(rel_err(h(gamma).derivative, fd));
        h_ok += usize::from(close(h(gamma).derivative, fd));
    }
    for k in 0..20 {
        let (s, nom) = local_instance(&mut rng, 6 + k % 8, 2);
        let div = DIVS[k % 2];
        let spec = UncertaintySpec::new(div, 0.2).unwrap();
        let loss = LocalLinearLoss { center: s.center.clone(), covariates: s.covariates.clone(), responses: s.responses.clone() };
        let beta: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = |b: &[f64]| worst_case(&nom.omega_hat, &arrowhead_eigen(&loss.losses(b)).unwrap(), &spec).unwrap();
        let grad = robust_gradient(&f(&beta), &loss.gradients(&beta)).unwrap();
        let mut ok = true;
        for j in 0..3 {
            let fd = central_diff5(
                |t| {
                    let mut b = beta.clone();
                    b[j] = t;
                    f(&b).value
                },
                beta[j],
                1e-4,
            );
            worst = worst.max(rel_err(grad[j], fd));
            ok &= close(grad[j], fd);
        }
        f_ok += usize::from(ok);
    }
    verdict(
        g_ok == 20 && h_ok == 20 && f_ok == 20,
        format!("g' {g_ok}/20, h' {h_ok}/20, grad F {f_ok}/20, max rel err {worst:.2e}"),
    )
}

/// Low-rank resolvents against dense inverses.
fn c4_woodbury() -> Verdict {
    let mut rng = gen::rng(1004);
    let mut worst = 0.0f64;
    for k in 0..200 {
        let n = 2 + k % 29;
        let l = gen::losses(&mut rng, n - 1, 3.0, 0.1);
        let v = arrowhead_eigen(&l).unwrap();
        let vd = dense::arrowhead(&l);
        let id = Mat::identity(n, n);
        let gamma = v.norm() * (1.0 + rng.random_range(0.01..3.0)) + 1e-3;
        let ours = to_mat(&woodbury_resolvent(gamma, &v).unwrap());
        worst = worst.max(dense::rel_frobenius(&ours, &dense::inverse(&(&id * gamma - &vd))));

        let om = gen::dnn_pd(&mut rng, n, 0.05);
        let s = dense::sqrt_psd(&om);
        let m = &s * &vd * &s;
        let gamma = dense::eigenvalues(&m)[0] * (1.0 + rng.random_range(0.01..3.0)) + 1e-3;
        let ours = to_mat(&woodbury_sandwich_resolvent(gamma, &from_mat(&s), &v).unwrap());
        worst = worst.max(dense::rel_frobenius(&ours, &dense::inverse(&(&id - m / gamma))));
    }
    verdict(worst <= 1e-9, format!("400 inverses (dims 2-30), max relative Frobenius error {worst:.2e}"))
}

/// Zero radius gives back the nominal estimators.
fn c5_nominal_recovery() -> Verdict {
    let mut rng = gen::rng(1005);
    let cfg = OuterConfig::default();
    let (mut worst_nw, mut worst_llr) = (0.0f64, 0.0f64);
    for k in 0..100 {
        let (s, nom) = local_instance(&mut rng, 4 + k % 20, 1 + k % 3);
        let nw = nw_estimate(&s).unwrap();
        let llr = llr_estimate(&s).unwrap().intercept;
        for div in DIVS {
            let spec = UncertaintySpec::new(div, 0.0).unwrap();
            worst_nw = worst_nw.max((robust_nw(&s, &nom, &spec, &cfg).unwrap().beta[0] - nw).abs());
            worst_llr = worst_llr.max((robust_llr(&s, &nom, &spec, &cfg).unwrap().beta[0] - llr).abs());
        }
    }
    verdict(
        worst_nw <= 1e-8 && worst_llr <= 1e-8,
        format!("100 samples x 2 divergences, max |robust - NW| = {worst_nw:.2e}, max |robust - LLR| = {worst_llr:.2e}"),
    )
}

/// Arrowhead spectrum from a dense eigensolver.
fn c6_arrowhead_spectrum() -> Verdict {
    let mut rng = gen::rng(1006);
    let mut worst = 0.0f64;
    for k in 0..100 {
        let n = 1 + k % 40;
        let l = gen::losses(&mut rng, n, 3.0, 0.1);
        let s = l.iter().map(|x| x * x).sum::<f64>().sqrt();
        let ev = dense::eigenvalues(&dense::arrowhead(&l));
        let (top, bottom) = (ev[0], ev[ev.len() - 1]);
        worst = worst.max((top - s).abs()).max((bottom + s).abs());
        for &e in &ev[1..ev.len() - 1] {
            worst = worst.max(e.abs());
        }
        let ours = arrowhead_eigen(&l).unwrap().eigvals();
        worst = worst.max((ours[0] - s).abs()).max((ours[1] + s).abs());
    }
    verdict(worst <= 1e-9, format!("100 loss vectors, max spectrum error {worst:.2e}"))
}

/// Dense dual on arbitrary `V`, minimized by golden section.
fn dense_dual_value(div: Divergence, om: &Mat, v: &Mat, rho: f64) -> f64 {
    let n = om.nrows();
    let id = Mat::identity(n, n);
    let s = dense::sqrt_psd(om);
    let (lower, f): (f64, Box<dyn Fn(f64) -> f64>) = match div {
        Divergence::LogDet => {
            let m = &s * v * &s;
            let lower = dense::eigenvalues(&m)[0];
            (lower, Box::new(move |g: f64| g * rho - g * dense::logdet(&(&id - &m / g))))
        }
        Divergence::BuresWasserstein => {
            let lower = dense::eigenvalues(v)[0];
            let (om, v) = (om.clone(), v.clone());
            (
                lower,
                Box::new(move |g: f64| {
                    let r = dense::inverse(&(&id * g - &v));
                    g * (rho - om.trace()) + g * g * dense::inner(&r, &om)
                }),
            )
        }
    };
    let mut hi = 2.0 * lower;
    while f(2.0 * hi) < f(hi) {
        hi *= 2.0;
    }
    let g = golden_section(&f, lower * (1.0 + 1e-9), 2.0 * hi, 1e-10 * hi);
    f(g)
}

/// Monotone in the radius and invariant under relabeling.
fn c7_monotone_and_permutation() -> Verdict {
    let mut rng = gen::rng(1007);
    let grid = [0.0, 0.01, 0.1, 1.0, 10.0];
    let mut monotone = 0;
    let mut worst_drop = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(2..20);
        let om = from_mat(&gen::dnn_pd(&mut rng, n, 0.05));
        let l = gen::losses(&mut rng, n - 1, 3.0, 0.1);
        let mut ok = true;
        for div in DIVS {
            let vals: Vec<f64> = grid.iter().map(|&r| solve(&om, &l, div, r).value).collect();
            for w in vals.windows(2) {
                worst_drop = worst_drop.max(w[0] - w[1]);
                ok &= w[1] >= w[0] - 1e-12 * w[0].abs();
            }
        }
        monotone += usize::from(ok);
    }

    let mut invariant = 0;
    let mut worst_perm = 0.0f64;
    for k in 0..50 {
        let n = 3 + k % 10;
        let om = gen::dnn_pd(&mut rng, n, 0.05);
        let l = gen::losses(&mut rng, n - 1, 3.0, 0.0);
        let rho = RHOS[k % 4];
        let mut tail = gen::permutation(&mut rng, n - 1);
        tail.iter_mut().for_each(|i| *i += 1);
        let perm: Vec<usize> = std::iter::once(0).chain(tail).collect();
        let pl: Vec<f64> = perm[1..].iter().map(|&i| l[i - 1]).collect();
        let pom = from_mat(&om).permuted(&perm).unwrap();
        let p = gen::permutation(&mut rng, n);
        let pm = Mat::from_fn(n, n, |i, j| if p[i] == j { 1.0 } else { 0.0 });
        let (om_p, v_p) = (&pm * &om * pm.transpose(), &pm * dense::arrowhead(&l) * pm.transpose());
        let mut ok = true;
        for div in DIVS {
            let a = solve(&from_mat(&om), &l, div, rho).value;
            let b = solve(&pom, &pl, div, rho).value;
            let c = dense_dual_value(div, &om_p, &v_p, rho);
            let err = (a - b).abs().max((a - c).abs());
            worst_perm = worst_perm.max(err);
            ok &= err <= 1e-8;
        }
        invariant += usize::from(ok);
    }
    verdict(
        monotone == 50 && invariant == 50,
        format!(
            "monotone {monotone}/50 (largest drop {worst_drop:.1e}), permutation-invariant {invariant}/50 (max diff {worst_perm:.2e})"
        ),
    )
}

fn protocol_config() -> ExperimentConfig {
    ExperimentConfig {
        data: reweight::config::DataSource::Synthetic {
            generator: Generator::Linear,
            samples: 2050,
            dim: 4,
            noise_sd: 0.1,
            seed: 2024,
        },
        neighbors: vec![50],
        rho_grid: vec![0.1],
        tau_fracs: vec![1.0],
        kappa_range: [1.8, 2.2],
        replications: 10,
        seed: 7,
        estimators: EstimatorKind::ALL.to_vec(),
        ..ExperimentConfig::default()
    }
}

/// Robust estimators beat NW and LLR when every neighbor is perturbed.
fn c8_perturbed_ordering(report: &RunReport, elapsed: Duration) -> Verdict {
    let m = |e| report.mean_rmse(e, 50, 1.0, 0.1).unwrap();
    let (nw, llr, ld, bw) = (m(EstimatorKind::Nw), m(EstimatorKind::Llr), m(EstimatorKind::NwLogDet), m(EstimatorKind::NwBures));
    let failures: usize = report.records.iter().map(|r| r.failures).sum();
    verdict(
        ld < nw && ld < llr && bw < nw && bw < llr && elapsed <= Duration::from_secs(600),
        format!(
            "mean RMSE over 10 replications: nw {nw:.4}, llr {llr:.4}, nw-logdet {ld:.4}, nw-buresw {bw:.4}; {failures} failed points; {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn c9_determinism(first: &RunReport) -> Verdict {
    let second = run_experiment(&protocol_config()).unwrap();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    first.write_csv(&mut a).unwrap();
    second.write_csv(&mut b).unwrap();
    let json_same = first.to_json().unwrap() == second.to_json().unwrap();
    verdict(a == b && json_same, format!("rmse.csv {} bytes, identical: {}; report.json identical: {json_same}", a.len(), a == b))
}

/// Closed forms for scalar multiples of the identity.
fn c10_divergence_closed_forms() -> Verdict {
    let mut worst = 0.0f64;
    for p in [1usize, 2, 5, 17] {
        let i = SymmetricMatrix::identity(p);
        let two = i.scaled(2.0);
        let pf = p as f64;
        worst = worst.max((logdet_divergence(&two, &i).unwrap() - pf * (1.0 - 2f64.ln())).abs());
        worst = worst.max((logdet_divergence(&i, &two).unwrap() - pf * (2f64.ln() - 0.5)).abs());
        for (a, b) in [(1.0, 4.0), (2.0, 2.0), (0.3, 7.5), (9.0, 0.25)] {
            let w = bures_divergence(&i.scaled(a), &i.scaled(b)).unwrap();
            worst = worst.max((w - pf * (f64::sqrt(a) - f64::sqrt(b)).powi(2)).abs());
        }
    }
    verdict(worst <= 1e-10, format!("max deviation from closed forms {worst:.2e}"))
}

fn guarded(f: impl FnOnce() -> Verdict) -> Verdict {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
        verdict(false, format!("panicked: {}", msg.unwrap_or_default()))
    })
}

fn main() {
    let mut results: Vec<(u32, &str, Verdict)> = Vec::new();
    let mut record = |id: u32, name: &'static str, v: Verdict| {
        println!("{} [{id:>2}] {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        results.push((id, name, v));
    };
    record(1, "primal-dual equivalence", guarded(c1_primal_dual));
    record(2, "doubly nonnegative certificate", guarded(c2_certificate));
    record(3, "gradient correctness", guarded(c3_gradients));
    record(4, "low-rank inverse identities", guarded(c4_woodbury));
    record(5, "nominal recovery at rho = 0", guarded(c5_nominal_recovery));
    record(6, "arrowhead spectrum", guarded(c6_arrowhead_spectrum));
    record(7, "monotonicity and permutation invariance", guarded(c7_monotone_and_permutation));

    let start = Instant::now();
    let report = catch_unwind(|| run_experiment(&protocol_config()));
    let elapsed = start.elapsed();
    match report {
        Ok(Ok(report)) => {
            record(8, "perturbed-neighbor ordering", guarded(|| c8_perturbed_ordering(&report, elapsed)));
            record(9, "determinism", guarded(|| c9_determinism(&report)));
        }
        Ok(Err(e)) => {
            record(8, "perturbed-neighbor ordering", verdict(false, format!("run failed: {e}")));
            record(9, "determinism", verdict(false, "no reference run"));
        }
        Err(_) => {
            record(8, "perturbed-neighbor ordering", verdict(false, "run panicked"));
            record(9, "determinism", verdict(false, "no reference run"));
        }
    }
    record(10, "divergence closed forms", guarded(c10_divergence_closed_forms));

    let failed: Vec<u32> = results.iter().filter(|(_, _, v)| !v.pass).map(|(id, _, _)| *id).collect();
    println!("acceptance: {}/{} criteria passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
