//! Dense vector helpers. Vectors are plain `Vec<f64>` / `&[f64]`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::CsrMatrix;
use crate::error::{check_dim, Error, Result};

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: f64, x: &mut [f64]) {
    for v in x {
        *v *= alpha;
    }
}

pub fn sub(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

pub fn add(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a + b).collect()
}

pub fn ensure_finite(x: &[f64], op: &'static str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(op))
    }
}

/// `sqrt(x^T W x)`, or the Euclidean norm when `w` is `None`.
///
/// A quadratic form below `-1e-12 * |x|^2` is reported as a non-SPD weight.
pub fn weighted_norm(x: &[f64], w: Option<&CsrMatrix>) -> Result<f64> {
    let Some(w) = w else {
        return Ok(norm2(x));
    };
    check_dim("weighted_norm", w.ncols(), x.len())?;
    let wx = w.spmv(x)?;
    let q = dot(x, &wx);
    let xx = dot(x, x);
    if q < -1e-12 * xx {
        return Err(Error::NotPositiveDefinite(format!(
            "quadratic form x^T W x = {q:e} is negative"
        )));
    }
    Ok(q.max(0.0).sqrt())
}

/// Energy norm `sqrt(x^T A x)`; negative round-off is clamped to zero.
pub fn energy_norm(a: &CsrMatrix, x: &[f64]) -> f64 {
    let mut ax = vec![0.0; a.nrows()];
    a.spmv_into(x, &mut ax);
    dot(x, &ax).max(0.0).sqrt()
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn random_unit_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut v = random_vector(rng, n);
    let nv = norm2(&v);
    if nv > 0.0 {
        scale(1.0 / nv, &mut v);
    }
    v
}
