//! Jacobi-preconditioned conjugate gradients on flat vectors.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    /// `‖b − A x‖ / ‖b‖`, recomputed from the final iterate.
    pub residual: f64,
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` for symmetric positive definite `A`, starting from `x`.
///
/// `diag` holds the diagonal of `A`; zero entries are treated as 1.
pub fn pcg<F>(apply: F, diag: &[f64], b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<CgOutcome>
where
    F: Fn(&[f64], &mut [f64]),
{
    let len = b.len();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgOutcome {
            iterations: 0,
            residual: 0.0,
        });
    }
    let inv: Vec<f64> = diag.iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut ax = vec![0.0; len];
    apply(x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut z: Vec<f64> = r.iter().zip(&inv).map(|(r, m)| r * m).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; len];
    let mut it = 0;
    let mut rel = dot(&r, &r).sqrt() / bnorm;
    while rel > tol {
        if it >= max_iter {
            return Err(Error::Iteration {
                iterations: it,
                residual: rel,
            });
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Iteration {
                iterations: it,
                residual: rel,
            });
        }
        let alpha = rz / pap;
        for i in 0..len {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..len {
            z[i] = r[i] * inv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..len {
            p[i] = z[i] + beta * p[i];
        }
        it += 1;
        rel = dot(&r, &r).sqrt() / bnorm;
    }
    apply(x, &mut ax);
    let true_res = b.iter().zip(&ax).map(|(b, a)| (b - a) * (b - a)).sum::<f64>().sqrt() / bnorm;
    Ok(CgOutcome {
        iterations: it,
        residual: true_res,
    })
}
