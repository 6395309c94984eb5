//! Approximate inverses `q(A_f) r` of the complement operator.

use crate::error::{Error, Result};
use crate::sparse::vector::{axpy, dot};
use crate::sparse::CsrMatrix;

/// Smoothed-aggregation polynomial: returns `q(A_f) r` where
/// `1 - t q(t) = (-1)^nu T_{2 nu + 1}(sqrt t) / ((2 nu + 1) sqrt t)`.
///
/// Three-term recurrence on the iterates `x_k = q_{k-1}(A_f) r`:
/// `x_{k+1} = a_k (x_k + 2 r_k) - b_k x_{k-1}` with `r_k = r - A_f x_k`,
/// `a_k = 2 (2k + 1) / (2k + 3)`, `b_k = (2k - 1) / (2k + 3)`.
pub fn sa_polynomial_apply(af: &CsrMatrix, nu: usize, r: &[f64]) -> Vec<f64> {
    let n = r.len();
    let mut prev = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut res = r.to_vec();
    let mut ax = vec![0.0; n];
    for k in 0..nu {
        let kf = k as f64;
        let a_k = 2.0 * (2.0 * kf + 1.0) / (2.0 * kf + 3.0);
        let b_k = (2.0 * kf - 1.0) / (2.0 * kf + 3.0);
        let next: Vec<f64> = (0..n)
            .map(|i| a_k * (x[i] + 2.0 * res[i]) - b_k * prev[i])
            .collect();
        prev = std::mem::replace(&mut x, next);
        if k + 1 < nu {
            af.spmv_into(&x, &mut ax);
            for i in 0..n {
                res[i] = r[i] - ax[i];
            }
        }
    }
    x
}

/// `nu` steps of Chebyshev semi-iteration for `A_f x = r` on `[alpha, beta]`
/// from a zero start; Richardson with step `1 / alpha` when the interval
/// degenerates to a point.
pub fn chebyshev_apply(af: &CsrMatrix, nu: usize, alpha: f64, beta: f64, r: &[f64]) -> Result<Vec<f64>> {
    if !(alpha > 0.0) || !(alpha <= beta) {
        return Err(Error::InvalidArgument(format!(
            "chebyshev bounds need 0 < alpha <= beta, got [{alpha}, {beta}]"
        )));
    }
    let n = r.len();
    let mut x = vec![0.0; n];
    let mut res = r.to_vec();
    let mut ad = vec![0.0; n];
    let theta = 0.5 * (beta + alpha);
    let delta = 0.5 * (beta - alpha);
    if delta <= f64::EPSILON * theta {
        for k in 0..nu {
            axpy(1.0 / alpha, &res, &mut x);
            if k + 1 < nu {
                af.spmv_into(&x, &mut ad);
                for i in 0..n {
                    res[i] = r[i] - ad[i];
                }
            }
        }
        return Ok(x);
    }
    let sigma = theta / delta;
    let mut rho = 1.0 / sigma;
    let mut d: Vec<f64> = res.iter().map(|v| v / theta).collect();
    for k in 0..nu {
        axpy(1.0, &d, &mut x);
        if k + 1 == nu {
            break;
        }
        af.spmv_into(&d, &mut ad);
        axpy(-1.0, &ad, &mut res);
        let rho_next = 1.0 / (2.0 * sigma - rho);
        for i in 0..n {
            d[i] = rho_next * rho * d[i] + 2.0 * rho_next / delta * res[i];
        }
        rho = rho_next;
    }
    Ok(x)
}

/// `nu` unpreconditioned CG steps for `A_f x = r` from a zero start. Stops
/// early once the residual vanishes to round-off.
pub fn cg_apply(af: &CsrMatrix, nu: usize, r: &[f64]) -> Result<Vec<f64>> {
    let n = r.len();
    let mut x = vec![0.0; n];
    let r0 = dot(r, r);
    if r0 == 0.0 {
        return Ok(x);
    }
    let mut res = r.to_vec();
    let mut p = r.to_vec();
    let mut rr = r0;
    let mut ap = vec![0.0; n];
    for _ in 0..nu {
        af.spmv_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Breakdown(format!("cg on A_f: p^T A_f p = {pap:e}, A_f not SPD")));
        }
        let alpha = rr / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut res);
        let rr_new = dot(&res, &res);
        if rr_new <= 1e-30 * r0 {
            break;
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for (pi, ri) in p.iter_mut().zip(&res) {
            *pi = ri + beta * *pi;
        }
    }
    Ok(x)
}

/// `(-1)^nu T_{2 nu + 1}(sqrt t) / ((2 nu + 1) sqrt t)` for `t` in `(0, 1]`.
pub fn sa_error_polynomial(nu: usize, t: f64) -> f64 {
    let s = t.sqrt();
    let m = (2 * nu + 1) as f64;
    let sign = if nu % 2 == 0 { 1.0 } else { -1.0 };
    sign * (m * s.acos()).cos() / (m * s)
}
