// Float intrinsics are not available in `core`; route them through libm.

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

#[inline]
pub fn pow(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

/// Euclidean norm without intermediate overflow or underflow.
pub fn norm2(xs: &[f64]) -> f64 {
    let scale = xs.iter().fold(0.0_f64, |m, &x| m.max(abs(x)));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let sum: f64 = xs
        .iter()
        .map(|&x| {
            let r = x / scale;
            r * r
        })
        .sum();
    scale * sqrt(sum)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
