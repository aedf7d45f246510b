//! Moore-Penrose pseudoinverse and the kernel/row-space split of a direction.

use super::matrix::{Mat, MAX_DIM};

/// Singular values below this fraction of the largest one are treated as zero.
pub const RANK_CUTOFF: f64 = 1e-12;

/// Thin SVD `M = U Σ Vᵀ` of a matrix with at most three rows and columns.
#[derive(Debug, Clone, Copy)]
pub struct Svd {
    /// Columns `u_j` (length `rows`), stored as `u[j]`. Zero for null singular values.
    pub u: [[f64; MAX_DIM]; MAX_DIM],
    pub sigma: [f64; MAX_DIM],
    /// `v` is n×n orthogonal.
    pub v: Mat,
    rows: usize,
    cols: usize,
}

/// One-sided (Hestenes) Jacobi SVD. Columns of `M` are rotated until mutually
/// orthogonal; the accumulated rotations form `V`.
pub fn svd(m: &Mat) -> Svd {
    let (rows, cols) = (m.rows(), m.cols());
    // work[j] holds column j of M·V
    let mut work = [[0.0; MAX_DIM]; MAX_DIM];
    for (j, col) in work.iter_mut().enumerate().take(cols) {
        for (i, c) in col.iter_mut().enumerate().take(rows) {
            *c = m[(i, j)];
        }
    }
    let mut v = Mat::identity(cols);

    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..rows {
                    alpha += work[p][i] * work[p][i];
                    beta += work[q][i] * work[q][i];
                    gamma += work[p][i] * work[q][i];
                }
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let (a, b) = (work[p][i], work[q][i]);
                    work[p][i] = c * a - s * b;
                    work[q][i] = s * a + c * b;
                }
                for i in 0..cols {
                    let (a, b) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * a - s * b;
                    v[(i, q)] = s * a + c * b;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sigma = [0.0; MAX_DIM];
    let mut u = [[0.0; MAX_DIM]; MAX_DIM];
    for j in 0..cols {
        let norm = work[j][..rows].iter().map(|x| x * x).sum::<f64>().sqrt();
        sigma[j] = norm;
        if norm > 0.0 {
            for i in 0..rows {
                u[j][i] = work[j][i] / norm;
            }
        }
    }
    Svd {
        u,
        sigma,
        v,
        rows,
        cols,
    }
}

impl Svd {
    pub fn max_singular_value(&self) -> f64 {
        self.sigma[..self.cols].iter().copied().fold(0.0, f64::max)
    }

    /// Number of singular values above the relative cutoff.
    pub fn rank(&self) -> usize {
        let cut = RANK_CUTOFF * self.max_singular_value();
        self.sigma[..self.cols].iter().filter(|&&s| s > cut && s > 0.0).count()
    }
}

/// Moore-Penrose pseudoinverse `C_P` of an m×n matrix, returned as n×m.
///
/// The zero matrix maps to the zero matrix.
pub fn pseudoinverse(m: &Mat) -> Mat {
    let d = svd(m);
    let cut = RANK_CUTOFF * d.max_singular_value();
    let mut out = Mat::zeros(d.cols, d.rows);
    for j in 0..d.cols {
        let s = d.sigma[j];
        if s <= cut || s == 0.0 {
            continue;
        }
        for i in 0..d.cols {
            let vij = d.v[(i, j)] / s;
            for k in 0..d.rows {
                out[(i, k)] += vij * d.u[j][k];
            }
        }
    }
    out
}

/// Residuals of the four Penrose identities, in max-norm:
/// `P M P − P`, `M P M − M`, `P M − (P M)ᵀ`, `M P − (M P)ᵀ`.
pub fn penrose_residuals(m: &Mat, p: &Mat) -> [f64; 4] {
    let pm = *p * *m;
    let mp = *m * *p;
    [
        (pm * *p - *p).max_abs(),
        (mp * *m - *m).max_abs(),
        (pm - pm.transpose()).max_abs(),
        (mp - mp.transpose()).max_abs(),
    ]
}

/// Splits `xi ∈ Rⁿ` into its component in the row space `V = {Cᵀη}` and its
/// component in `N = ker C`. Returns `(xi_v, xi_n)` with `xi_v = C_P C xi`.
pub fn decompose(xi: &[f64], c: &Mat) -> (Vec<f64>, Vec<f64>) {
    let n = c.cols();
    assert_eq!(xi.len(), n, "direction length must match the matrix width");
    let projector = pseudoinverse(c) * *c;
    let xv = projector.mul_vec(xi);
    let xi_v: Vec<f64> = xv[..n].to_vec();
    let xi_n: Vec<f64> = xi.iter().zip(&xi_v).map(|(a, b)| a - b).collect();
    (xi_v, xi_n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_diagonal() {
        let p = pseudoinverse(&Mat::identity(2));
        assert!((p - Mat::identity(2)).max_abs() < 1e-15);

        let p = pseudoinverse(&Mat::from_rows(&[[2.0, 0.0], [0.0, 0.0]]));
        let want = Mat::from_rows(&[[0.5, 0.0], [0.0, 0.0]]);
        assert!((p - want).max_abs() < 1e-15, "{p:?}");
    }

    #[test]
    fn zero_matrix_maps_to_zero() {
        let p = pseudoinverse(&Mat::zeros(2, 3));
        assert_eq!(p.rows(), 3);
        assert_eq!(p.cols(), 2);
        assert_eq!(p.max_abs(), 0.0);
    }

    #[test]
    fn wide_matrix_identities() {
        let m = Mat::from_rows(&[[0.3, -0.7, 0.2], [0.9, 0.1, -0.4]]);
        let p = pseudoinverse(&m);
        for r in penrose_residuals(&m, &p) {
            assert!(r < 1e-12, "{r}");
        }
    }

    #[test]
    fn rank_deficient_square() {
        // rank one: rows are parallel
        let m = Mat::from_rows(&[[1.0, 2.0], [2.0, 4.0]]);
        let d = svd(&m);
        assert_eq!(d.rank(), 1);
        let p = pseudoinverse(&m);
        // pinv of a rank-one u vᵀ s is v uᵀ / s; here M = 5 · (1,2)ᵀ(1,2)/5
        let want = m.scale(1.0 / 25.0);
        assert!((p - want).max_abs() < 1e-14, "{p:?}");
    }

    #[test]
    fn axis_projection_split() {
        let c = Mat::from_rows(&[[1.0, 0.0]]);
        let (v, n) = decompose(&[3.0, 4.0], &c);
        assert!((v[0] - 3.0).abs() < 1e-15 && v[1].abs() < 1e-15);
        assert!(n[0].abs() < 1e-15 && (n[1] - 4.0).abs() < 1e-15);
    }

    #[test]
    fn zero_matrix_split_is_all_kernel() {
        let (v, n) = decompose(&[1.0, 1.0], &Mat::zeros(2, 2));
        assert_eq!(v, vec![0.0, 0.0]);
        assert_eq!(n, vec![1.0, 1.0]);
    }
}
