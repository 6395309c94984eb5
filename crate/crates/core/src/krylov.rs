//! Extreme-eigenvalue estimators for symmetric operators: power iteration
//! and Lanczos with full reorthogonalization, both in an optional weighted
//! inner product `<x, y>_W = x^T W y`.

use crate::error::{Error, Result};
use crate::sparse::vector::{axpy, dot, scale};

/// Which end of the spectrum must converge before Lanczos stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Max,
    Min,
    Both,
}

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    pub max_steps: usize,
    /// Relative Ritz residual at which an extreme value counts as converged.
    pub tol: f64,
    pub target: Target,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            max_steps: 200,
            tol: 1e-8,
            target: Target::Both,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremes {
    pub min: f64,
    pub max: f64,
    pub min_residual: f64,
    pub max_residual: f64,
    pub steps: usize,
    pub converged: bool,
}

type Apply<'a> = dyn FnMut(&[f64]) -> Result<Vec<f64>> + 'a;
type Weight<'a> = dyn Fn(&[f64]) -> Vec<f64> + 'a;

/// Lanczos on an operator self-adjoint in the `weight` inner product
/// (Euclidean when `None`).
pub fn lanczos_extremes(
    apply: &mut Apply<'_>,
    weight: Option<&Weight<'_>>,
    start: &[f64],
    opts: LanczosOptions,
) -> Result<Extremes> {
    let n = start.len();
    if n == 0 {
        return Err(Error::InvalidArgument("lanczos on an empty space".into()));
    }
    let wmul = |x: &[f64]| -> Vec<f64> {
        match weight {
            Some(w) => w(x),
            None => x.to_vec(),
        }
    };
    let max_steps = opts.max_steps.min(n).max(1);

    let mut v = start.to_vec();
    let mut wv = wmul(&v);
    let nv = dot(&v, &wv).max(0.0).sqrt();
    if nv == 0.0 {
        return Err(Error::InvalidArgument("lanczos start vector has zero norm".into()));
    }
    scale(1.0 / nv, &mut v);
    scale(1.0 / nv, &mut wv);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_steps);
    let mut wbasis: Vec<Vec<f64>> = Vec::with_capacity(max_steps);
    let mut alpha: Vec<f64> = Vec::with_capacity(max_steps);
    let mut beta: Vec<f64> = Vec::with_capacity(max_steps);
    let mut result = None;

    for step in 0..max_steps {
        let mut w = apply(&v)?;
        let a = dot(&w, &wv);
        alpha.push(a);
        basis.push(v.clone());
        wbasis.push(wv.clone());

        // w -= a v + b v_prev, then two passes of full reorthogonalization
        axpy(-a, &v, &mut w);
        if step > 0 {
            axpy(-beta[step - 1], &basis[step - 1], &mut w);
        }
        for _ in 0..2 {
            for (q, wq) in basis.iter().zip(&wbasis) {
                let c = dot(&w, wq);
                axpy(-c, q, &mut w);
            }
        }
        let mut ww = wmul(&w);
        let b = dot(&w, &ww).max(0.0).sqrt();

        let (vals, last) = tridiagonal_eigen(&alpha, &beta)?;
        let k = vals.len();
        let ext = Extremes {
            min: vals[0],
            max: vals[k - 1],
            min_residual: b * last[0].abs(),
            max_residual: b * last[k - 1].abs(),
            steps: step + 1,
            converged: false,
        };
        let scale_ref = ext.max.abs().max(ext.min.abs()).max(f64::MIN_POSITIVE);
        let ok_max = ext.max_residual <= opts.tol * ext.max.abs().max(1e-300);
        let ok_min = ext.min_residual <= opts.tol * ext.min.abs().max(1e-300);
        let done = match opts.target {
            Target::Max => ok_max,
            Target::Min => ok_min,
            Target::Both => ok_max && ok_min,
        };
        let exhausted = b <= 1e-13 * scale_ref || step + 1 == n;
        if done || exhausted {
            result = Some(Extremes {
                converged: true,
                ..ext
            });
            break;
        }
        result = Some(ext);
        if step + 1 == max_steps {
            break;
        }
        beta.push(b);
        scale(1.0 / b, &mut w);
        scale(1.0 / b, &mut ww);
        v = w;
        wv = ww;
    }
    Ok(result.expect("at least one lanczos step"))
}

/// Eigenvalues (ascending) of the symmetric tridiagonal matrix with
/// diagonal `diag` and off-diagonal `off`, plus the last component of each
/// normalized eigenvector. Implicit QL with Wilkinson shifts.
pub fn tridiagonal_eigen(diag: &[f64], off: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    debug_assert!(off.len() + 1 >= n);
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n.saturating_sub(1)].copy_from_slice(&off[..n.saturating_sub(1)]);
    let mut z = vec![0.0; n];
    z[n - 1] = 1.0;

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 100 {
                return Err(Error::NoConvergence {
                    method: "tridiagonal QL",
                    iterations: iter,
                    last: e[l].abs(),
                    history: Vec::new(),
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0f64, 1.0f64, 0.0f64);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let f2 = z[i + 1];
                z[i + 1] = s * z[i] + c * f2;
                z[i] = c * z[i] - s * f2;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    Ok((order.iter().map(|&i| d[i]).collect(), order.iter().map(|&i| z[i]).collect()))
}

/// Power iteration estimate of the dominant eigenvalue (Rayleigh quotient
/// in the `weight` inner product). Stops after `max_iter` steps or when the
/// estimate changes by less than `tol` relatively.
pub fn power_iteration(
    apply: &mut Apply<'_>,
    weight: Option<&Weight<'_>>,
    start: &[f64],
    max_iter: usize,
    tol: f64,
) -> Result<(f64, usize)> {
    let wmul = |x: &[f64]| -> Vec<f64> {
        match weight {
            Some(w) => w(x),
            None => x.to_vec(),
        }
    };
    let mut v = start.to_vec();
    let nv = dot(&v, &wmul(&v)).max(0.0).sqrt();
    if nv == 0.0 {
        return Err(Error::InvalidArgument("power iteration start has zero norm".into()));
    }
    scale(1.0 / nv, &mut v);
    let mut estimate = 0.0;
    for it in 1..=max_iter {
        let mut w = apply(&v)?;
        let ww = wmul(&w);
        let rq = dot(&w, &wmul(&v));
        let nw = dot(&w, &ww).max(0.0).sqrt();
        let prev = estimate;
        estimate = rq;
        if nw == 0.0 {
            return Ok((0.0, it));
        }
        if it > 1 && (estimate - prev).abs() <= tol * estimate.abs() {
            return Ok((estimate, it));
        }
        scale(1.0 / nw, &mut w);
        v = w;
    }
    Ok((estimate, max_iter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::CsrMatrix;

    #[test]
    fn tridiagonal_matches_known_spectrum() {
        // tridiag(-1, 2, -1) of order 6: 2 - 2 cos(k pi / 7)
        let n = 6;
        let (vals, last) = tridiagonal_eigen(&vec![2.0; n], &vec![-1.0; n - 1]).unwrap();
        for (k, v) in vals.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / 7.0).cos();
            assert!((v - exact).abs() < 1e-13);
        }
        let norm: f64 = last.iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lanczos_finds_diagonal_extremes() {
        let d: Vec<f64> = (1..=50).map(|i| i as f64 / 10.0).collect();
        let a = CsrMatrix::from_diagonal(&d);
        let mut op = |x: &[f64]| a.spmv(x);
        let start = vec![1.0; 50];
        let ext = lanczos_extremes(&mut op, None, &start, LanczosOptions::default()).unwrap();
        assert!((ext.min - 0.1).abs() < 1e-8);
        assert!((ext.max - 5.0).abs() < 1e-8);
        assert!(ext.converged);
    }

    #[test]
    fn lanczos_in_weighted_inner_product() {
        // generalized problem A x = lambda W x via the W-self-adjoint W^{-1} A
        let a = CsrMatrix::from_diagonal(&[2.0, 6.0, 12.0]);
        let w = CsrMatrix::from_diagonal(&[1.0, 2.0, 3.0]);
        let mut op = |x: &[f64]| Ok(vec![2.0 * x[0], 3.0 * x[1], 4.0 * x[2]]);
        let weight = |x: &[f64]| w.spmv(x).unwrap();
        let ext = lanczos_extremes(&mut op, Some(&weight), &[1.0, 1.0, 1.0], LanczosOptions::default()).unwrap();
        assert!((ext.min - 2.0).abs() < 1e-12 && (ext.max - 4.0).abs() < 1e-12);
        let _ = a;
    }

    #[test]
    fn power_iteration_dominant() {
        let a = CsrMatrix::from_diagonal(&[1.0, 3.0, 0.5]);
        let mut op = |x: &[f64]| a.spmv(x);
        let (est, _) = power_iteration(&mut op, None, &[1.0, 1.0, 1.0], 500, 1e-14).unwrap();
        assert!((est - 3.0).abs() < 1e-10);
    }
}
