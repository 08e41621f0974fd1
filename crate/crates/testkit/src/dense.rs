use nalgebra::{DMatrix, SymmetricEigen};

pub type Mat = DMatrix<f64>;

pub fn from_row_major(n: usize, data: &[f64]) -> Mat {
    assert_eq!(data.len(), n * n);
    DMatrix::from_row_slice(n, n, data)
}

pub fn to_row_major(m: &Mat) -> Vec<f64> {
    let (r, c) = m.shape();
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            out.push(m[(i, j)]);
        }
    }
    out
}

pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

/// Descending eigenvalues.
pub fn eigenvalues(m: &Mat) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(symmetrize(m)).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// `Σ f(λ) vvᵀ`.
pub fn spectral_map(m: &Mat, f: impl Fn(f64) -> f64) -> Mat {
    let e = SymmetricEigen::new(symmetrize(m));
    let d = Mat::from_diagonal(&e.eigenvalues.map(f));
    symmetrize(&(&e.eigenvectors * d * e.eigenvectors.transpose()))
}

pub fn sqrt_psd(m: &Mat) -> Mat {
    spectral_map(m, |l| l.max(0.0).sqrt())
}

pub fn inverse(m: &Mat) -> Mat {
    m.clone().try_inverse().expect("oracle inverse of a singular matrix")
}

pub fn logdet(m: &Mat) -> f64 {
    eigenvalues(m).iter().map(|l| l.ln()).sum()
}

pub fn inner(a: &Mat, b: &Mat) -> f64 {
    a.component_mul(b).sum()
}

pub fn rel_frobenius(a: &Mat, b: &Mat) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// `Tr(AB⁻¹) − log det(AB⁻¹) − p` from the eigenvalues of `B^{-1/2}AB^{-1/2}`.
pub fn logdet_divergence(a: &Mat, b: &Mat) -> f64 {
    let bi = spectral_map(b, |l| 1.0 / l.sqrt());
    eigenvalues(&(&bi * a * &bi)).iter().map(|s| s - 1.0 - s.ln()).sum()
}

/// `Tr(A + B − 2(B^{1/2}AB^{1/2})^{1/2})`.
pub fn bures_divergence(a: &Mat, b: &Mat) -> f64 {
    let rb = sqrt_psd(b);
    let cross: f64 = eigenvalues(&(&rb * a * &rb)).iter().map(|l| l.max(0.0).sqrt()).sum();
    a.trace() + b.trace() - 2.0 * cross
}

/// The arrowhead matrix with first row `(0, ℓ)`.
pub fn arrowhead(losses: &[f64]) -> Mat {
    let n = losses.len() + 1;
    let mut m = Mat::zeros(n, n);
    for (i, &l) in losses.iter().enumerate() {
        m[(0, i + 1)] = l;
        m[(i + 1, 0)] = l;
    }
    m
}

pub fn min_entry(m: &Mat) -> f64 {
    m.iter().copied().fold(f64::INFINITY, f64::min)
}
