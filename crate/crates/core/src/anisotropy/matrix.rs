//! Small dense matrices (at most 3x3) stored inline.
//!
//! Every coefficient matrix, Gram matrix and pseudoinverse in the crate fits in
//! this type, so node loops never allocate.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use serde::{Deserialize, Serialize};

pub const MAX_DIM: usize = 3;

#[derive(Clone, Copy, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: [f64; MAX_DIM * MAX_DIM],
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(
            rows <= MAX_DIM && cols <= MAX_DIM && rows > 0 && cols > 0,
            "matrix shape {rows}x{cols} outside 1..=3"
        );
        Mat {
            rows,
            cols,
            data: [0.0; MAX_DIM * MAX_DIM],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diag(entries: &[f64]) -> Self {
        let mut m = Mat::zeros(entries.len(), entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    /// Builds a matrix from row slices; all rows must have the same length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut m = Mat::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            assert_eq!(r.len(), cols, "ragged rows");
            for (j, &v) in r.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * MAX_DIM..i * MAX_DIM + self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scale(&self, s: f64) -> Mat {
        let mut out = *self;
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] *= s;
            }
        }
        out
    }

    /// `self * x`; only the first `rows` entries of the result are meaningful.
    #[inline]
    pub fn mul_vec(&self, x: &[f64]) -> [f64; MAX_DIM] {
        debug_assert!(x.len() >= self.cols);
        let mut y = [0.0; MAX_DIM];
        for (i, yi) in y.iter_mut().enumerate().take(self.rows) {
            let r = &self.data[i * MAX_DIM..];
            let mut acc = 0.0;
            for j in 0..self.cols {
                acc += r[j] * x[j];
            }
            *yi = acc;
        }
        y
    }

    /// `selfᵀ * y`.
    #[inline]
    pub fn tr_mul_vec(&self, y: &[f64]) -> [f64; MAX_DIM] {
        debug_assert!(y.len() >= self.rows);
        let mut x = [0.0; MAX_DIM];
        for i in 0..self.rows {
            let r = &self.data[i * MAX_DIM..];
            for j in 0..self.cols {
                x[j] += r[j] * y[i];
            }
        }
        x
    }

    /// `selfᵀ * self`, an n×n symmetric matrix.
    pub fn gram(&self) -> Mat {
        self.transpose() * *self
    }

    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.rows {
            for j in 0..self.cols {
                m = m.max(self[(i, j)].abs());
            }
        }
        m
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }

    /// Largest singular value, from the closed-form eigenvalues of the Gram matrix.
    pub fn op_norm(&self) -> f64 {
        let g = self.gram();
        let ev = sym_eigenvalues(&g);
        ev[0].max(0.0).sqrt()
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * MAX_DIM + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * MAX_DIM + j]
    }
}

impl Mul for Mat {
    type Output = Mat;
    fn mul(self, rhs: Mat) -> Mat {
        assert_eq!(self.cols, rhs.rows, "shape mismatch in product");
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for j in 0..rhs.cols {
                let mut acc = 0.0;
                for k in 0..self.cols {
                    acc += self[(i, k)] * rhs[(k, j)];
                }
                out[(i, j)] = acc;
            }
        }
        out
    }
}

impl Add for Mat {
    type Output = Mat;
    fn add(self, rhs: Mat) -> Mat {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols);
        let mut out = self;
        for k in 0..self.data.len() {
            out.data[k] += rhs.data[k];
        }
        out
    }
}

impl Sub for Mat {
    type Output = Mat;
    fn sub(self, rhs: Mat) -> Mat {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols);
        let mut out = self;
        for k in 0..self.data.len() {
            out.data[k] -= rhs.data[k];
        }
        out
    }
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries((0..self.rows).map(|i| self.row(i)))
            .finish()
    }
}

impl Serialize for Mat {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Mat {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        let cols = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || rows.len() > MAX_DIM || cols == 0 || cols > MAX_DIM {
            return Err(serde::de::Error::custom("matrix must be between 1x1 and 3x3"));
        }
        if rows.iter().any(|r| r.len() != cols) {
            return Err(serde::de::Error::custom("ragged matrix rows"));
        }
        Ok(Mat::from_rows(&rows))
    }
}

/// Eigenvalues of a symmetric matrix of size 1, 2 or 3, in decreasing order.
///
/// Closed forms only: the quadratic formula for 2x2 and the trigonometric
/// solution of the characteristic cubic for 3x3. Unused trailing slots are 0.
pub fn sym_eigenvalues(a: &Mat) -> [f64; MAX_DIM] {
    assert_eq!(a.rows(), a.cols(), "eigenvalues need a square matrix");
    match a.rows() {
        1 => [a[(0, 0)], 0.0, 0.0],
        2 => {
            let (p, q, r) = (a[(0, 0)], a[(0, 1)], a[(1, 1)]);
            let mean = 0.5 * (p + r);
            let rad = (0.25 * (p - r) * (p - r) + q * q).sqrt();
            [mean + rad, mean - rad, 0.0]
        }
        3 => {
            let p1 = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
            let tr = a[(0, 0)] + a[(1, 1)] + a[(2, 2)];
            let q = tr / 3.0;
            if p1 == 0.0 {
                let mut ev = [a[(0, 0)], a[(1, 1)], a[(2, 2)]];
                ev.sort_by(|x, y| y.total_cmp(x));
                return ev;
            }
            let p2 = (a[(0, 0)] - q).powi(2)
                + (a[(1, 1)] - q).powi(2)
                + (a[(2, 2)] - q).powi(2)
                + 2.0 * p1;
            let p = (p2 / 6.0).sqrt();
            let b = (*a - Mat::identity(3).scale(q)).scale(1.0 / p);
            let det_b = b[(0, 0)] * (b[(1, 1)] * b[(2, 2)] - b[(1, 2)] * b[(2, 1)])
                - b[(0, 1)] * (b[(1, 0)] * b[(2, 2)] - b[(1, 2)] * b[(2, 0)])
                + b[(0, 2)] * (b[(1, 0)] * b[(2, 1)] - b[(1, 1)] * b[(2, 0)]);
            let r = (0.5 * det_b).clamp(-1.0, 1.0);
            let phi = r.acos() / 3.0;
            let e1 = q + 2.0 * p * phi.cos();
            let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
            let e2 = 3.0 * q - e1 - e3;
            [e1, e2, e3]
        }
        _ => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_2x2_and_3x3() {
        let a = Mat::from_rows(&[[2.0, 1.0], [1.0, 2.0]]);
        let ev = sym_eigenvalues(&a);
        assert!((ev[0] - 3.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);

        let b = Mat::from_rows(&[[2.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 2.0]]);
        let ev = sym_eigenvalues(&b);
        let s = 2f64.sqrt();
        for (got, want) in ev.iter().zip([2.0 + s, 2.0, 2.0 - s]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn op_norm_of_rank_one() {
        // [[3,4]] has singular value 5
        let a = Mat::from_rows(&[[3.0, 4.0]]);
        assert!((a.op_norm() - 5.0).abs() < 1e-14);
        assert_eq!(Mat::zeros(2, 3).op_norm(), 0.0);
    }

    #[test]
    fn product_and_transpose() {
        let a = Mat::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]);
        let g = a.gram();
        assert_eq!(g.rows(), 3);
        assert_eq!(g[(0, 2)], 1.0 * 3.0 + 4.0 * 6.0);
        assert!(g.is_symmetric(0.0));
        let y = a.mul_vec(&[1.0, 0.0, -1.0]);
        assert_eq!(&y[..2], &[-2.0, -2.0]);
        let x = a.tr_mul_vec(&[1.0, 1.0]);
        assert_eq!(x, [5.0, 7.0, 9.0]);
    }
}
