//! Matrix-free conjugate gradients for the symmetric positive definite systems of the
//! initial-data construction.

use crate::error::{Error, Result};

/// Solves `A x = b` in place from the initial guess in `x`. Stops once
/// `|r| ≤ tol · max(|b|, tiny)`; returns the iteration count.
pub(crate) fn conjugate_gradient(
    apply: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
    what: &'static str,
) -> Result<usize> {
    let n = b.len();
    let dotp = |a: &[f64], c: &[f64]| a.iter().zip(c).map(|(p, q)| p * q).sum::<f64>();
    let bnorm = dotp(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(0);
    }
    let mut ax = vec![0.0; n];
    apply(x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut p = r.clone();
    let mut rr = dotp(&r, &r);
    let target = tol * bnorm;
    let mut ap = vec![0.0; n];
    for it in 0..max_iter {
        if rr.sqrt() <= target {
            return Ok(it);
        }
        apply(&p, &mut ap);
        let pap = dotp(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::IterationLimit { what, iterations: it, residual: rr.sqrt() / bnorm });
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dotp(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    if rr.sqrt() <= target {
        return Ok(max_iter);
    }
    Err(Error::IterationLimit { what, iterations: max_iter, residual: rr.sqrt() / bnorm })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal() {
        let n = 50;
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                y[i] = 2.0 * x[i] - if i > 0 { x[i - 1] } else { 0.0 } - if i + 1 < n { x[i + 1] } else { 0.0 };
            }
        };
        let b = vec![1.0; n];
        let mut x = vec![0.0; n];
        conjugate_gradient(apply, &b, &mut x, 1e-13, 500, "test").unwrap();
        let mut y = vec![0.0; n];
        apply(&x, &mut y);
        assert!(y.iter().zip(&b).all(|(a, c)| (a - c).abs() < 1e-10));
    }
}
