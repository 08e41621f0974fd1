//! Primal oracle for the worst-case problem
//! `max ⟨Ω, V⟩  s.t.  Ω ⪰ 0, Ω ≥ 0, φ(Ω, Ω̂) ≤ ρ`.
//!
//! For a multiplier `λ` the penalized problem `max ⟨Ω, V⟩ − λφ(Ω, Ω̂)` over
//! the doubly nonnegative cone is solved by projected gradient ascent
//! (Barzilai-Borwein steps, Armijo backtracking, Dykstra projection). The
//! multiplier is then bisected until `φ(Ω_λ, Ω̂) = ρ`. Only intended for
//! small dimensions.

use crate::dense::{
    bures_divergence, eigenvalues, inner, inverse, logdet_divergence, spectral_map, sqrt_psd, symmetrize, Mat,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Div {
    LogDet,
    Bures,
}

#[derive(Debug, Clone)]
pub struct PrimalResult {
    pub value: f64,
    pub omega: Mat,
    pub divergence: f64,
    pub lambda: f64,
    /// `⟨Ω, V⟩ + λ(ρ − φ(Ω, Ω̂))`: removes the first-order error left when the
    /// bisection on `λ` stops with `φ` slightly off `ρ`.
    pub lagrangian: f64,
    /// Projected-gradient stationarity residual of the last penalized solve.
    pub stationarity: f64,
}

fn divergence(div: Div, omega: &Mat, omega_hat: &Mat) -> Option<f64> {
    let ev = eigenvalues(omega);
    match div {
        Div::LogDet if ev[ev.len() - 1] <= 0.0 => None,
        Div::LogDet => Some(logdet_divergence(omega, omega_hat)),
        // The optimum is positive definite whenever Ω̂ is, and the gradient
        // needs (AΩA)^{-1/2}, so iterates are kept in the interior.
        Div::Bures if ev[ev.len() - 1] <= 1e-12 * ev[0].max(1.0) => None,
        Div::Bures => Some(bures_divergence(omega, omega_hat).max(0.0)),
    }
}

fn project_psd(m: &Mat) -> Mat {
    spectral_map(m, |l| l.max(0.0))
}

/// Dykstra's alternating projection onto `{Ω ⪰ 0} ∩ {Ω ≥ 0}`.
pub fn project_dnn(y: &Mat) -> Mat {
    let mut x = symmetrize(y);
    let mut p = Mat::zeros(x.nrows(), x.ncols());
    let mut q = p.clone();
    for _ in 0..500 {
        let a = project_psd(&(&x + &p));
        p = &x + &p - &a;
        let b = (&a + &q).map(|v| v.max(0.0));
        q = &a + &q - &b;
        let change = (&b - &x).norm();
        x = b;
        if change <= 1e-15 * (1.0 + x.norm()) {
            break;
        }
    }
    x
}

struct Penalized<'a> {
    div: Div,
    omega_hat: &'a Mat,
    v: &'a Mat,
    lambda: f64,
    hat_inv: Mat,
    hat_sqrt: Mat,
}

impl Penalized<'_> {
    fn objective(&self, omega: &Mat) -> Option<f64> {
        divergence(self.div, omega, self.omega_hat).map(|d| inner(omega, self.v) - self.lambda * d)
    }

    fn gradient(&self, omega: &Mat) -> Mat {
        let grad_phi = match self.div {
            Div::LogDet => &self.hat_inv - inverse(omega),
            Div::Bures => {
                let a = &self.hat_sqrt;
                let inner = spectral_map(&(a * omega * a), |l| 1.0 / l.max(1e-300).sqrt());
                Mat::identity(omega.nrows(), omega.ncols()) - a * inner * a
            }
        };
        symmetrize(&(self.v - grad_phi * self.lambda))
    }

    fn solve(&self, start: &Mat) -> (Mat, f64) {
        let mut x = start.clone();
        let mut fx = self.objective(&x).expect("start must be in the domain");
        let mut g = self.gradient(&x);
        let mut t = 1.0 / (self.lambda.max(1.0) * (1.0 + self.v.norm()));
        let mut resid = f64::INFINITY;
        for _ in 0..50_000 {
            resid = (project_dnn(&(&x + &g)) - &x).norm();
            if resid <= 1e-12 * (1.0 + x.norm()) {
                break;
            }
            let mut accepted = None;
            for _ in 0..100 {
                let cand = project_dnn(&(&x + &g * t));
                if let Some(fc) = self.objective(&cand) {
                    let step = &cand - &x;
                    if fc >= fx + 1e-4 * inner(&g, &step) {
                        accepted = Some((cand, fc));
                        break;
                    }
                }
                t *= 0.5;
            }
            let Some((nx, nf)) = accepted else { break };
            let ng = self.gradient(&nx);
            let s = &nx - &x;
            let y = &g - &ng;
            let sy = inner(&s, &y);
            t = if sy > 0.0 { inner(&s, &s) / sy } else { 2.0 * t };
            if (nf - fx).abs() <= 1e-16 * fx.abs() && s.norm() <= 1e-14 * (1.0 + x.norm()) {
                x = nx;
                break;
            }
            x = nx;
            fx = nf;
            g = ng;
        }
        (x, resid)
    }
}

/// Worst case of `⟨Ω, V⟩` over the divergence ball of radius `rho`.
pub fn worst_case(div: Div, omega_hat: &Mat, v: &Mat, rho: f64) -> PrimalResult {
    assert!(rho > 0.0);
    let hat_sqrt = sqrt_psd(omega_hat);
    let hat_inv = inverse(omega_hat);
    // The penalized problem is bounded only for λ above this threshold.
    let threshold = match div {
        Div::LogDet => eigenvalues(&(&hat_sqrt * v * &hat_sqrt))[0],
        Div::Bures => eigenvalues(v)[0],
    };
    let mut pen = Penalized { div, omega_hat, v, lambda: 0.0, hat_inv, hat_sqrt };

    let solve_at = |pen: &mut Penalized, lambda: f64, start: &Mat| {
        pen.lambda = lambda;
        let (omega, resid) = pen.solve(start);
        let d = divergence(div, &omega, omega_hat).unwrap_or(f64::INFINITY);
        (omega, d, resid)
    };

    let mut hi = 2.0 * threshold.max(1e-3);
    let (mut omega_hi, mut d_hi, mut r_hi) = solve_at(&mut pen, hi, omega_hat);
    while d_hi > rho {
        hi *= 2.0;
        (omega_hi, d_hi, r_hi) = solve_at(&mut pen, hi, omega_hat);
    }
    let mut lo = threshold;
    for _ in 0..200 {
        if (d_hi - rho).abs() <= 1e-11 * rho || hi - lo <= 1e-14 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let (omega, d, r) = solve_at(&mut pen, mid, &omega_hi);
        if d > rho {
            lo = mid;
        } else {
            hi = mid;
            omega_hi = omega;
            d_hi = d;
            r_hi = r;
        }
    }
    let value = inner(&omega_hi, v);
    PrimalResult {
        value,
        lagrangian: value + hi * (rho - d_hi),
        omega: omega_hi,
        divergence: d_hi,
        lambda: hi,
        stationarity: r_hi,
    }
}
