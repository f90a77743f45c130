//! Minimal dense linear algebra for the small parameter dimensions this
//! library works with (D = groups + cutoff + 1, typically well under 200).
//!
//! Nothing here is tuned for large matrices; the point is a dependency-free
//! Cholesky/solve/eigenvalue kit that stays generic over the scalar type.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, S::one())
    }

    pub fn scaled_identity(dim: usize, scale: S) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = scale;
        }
        m
    }

    /// Builds from row-major data; `data.len()` must equal `rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<S>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data length mismatch");
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[S] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [S] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn mat_vec(&self, x: &[S]) -> Vec<S> {
        assert_eq!(x.len(), self.cols, "mat_vec dimension mismatch");
        (0..self.rows).map(|r| dot(self.row(r), x)).collect()
    }

    /// `A^T x`.
    pub fn t_mat_vec(&self, x: &[S]) -> Vec<S> {
        assert_eq!(x.len(), self.rows, "t_mat_vec dimension mismatch");
        let mut out = vec![S::zero(); self.cols];
        for r in 0..self.rows {
            let xr = x[r];
            if xr != S::zero() {
                for (o, &a) in out.iter_mut().zip(self.row(r)) {
                    *o += xr * a;
                }
            }
        }
        out
    }

    pub fn add_assign(&mut self, other: &Matrix<S>) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn scale(&mut self, c: S) {
        for a in &mut self.data {
            *a *= c;
        }
    }

    pub fn add_diagonal(&mut self, c: S) {
        assert_eq!(self.rows, self.cols);
        for i in 0..self.rows {
            self[(i, i)] += c;
        }
    }

    /// Replaces the matrix with `(M + M^T) / 2`.
    pub fn symmetrize(&mut self) {
        assert_eq!(self.rows, self.cols);
        let half = S::from_f64_lossy(0.5);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let v = (self[(i, j)] + self[(j, i)]) * half;
                self[(i, j)] = v;
                self[(j, i)] = v;
            }
        }
    }

    pub fn max_abs_asymmetry(&self) -> S {
        assert_eq!(self.rows, self.cols);
        let mut worst = S::zero();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// `x^T A x` for square `A`.
    pub fn quadratic_form(&self, x: &[S]) -> S {
        assert_eq!(self.rows, self.cols);
        dot(&self.mat_vec(x), x)
    }

    /// Elementwise difference `self - other`.
    pub fn minus(&self, other: &Matrix<S>) -> Matrix<S> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a - b)
            .collect();
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }
}

impl<S> std::ops::Index<(usize, usize)> for Matrix<S> {
    type Output = S;

    fn index(&self, (r, c): (usize, usize)) -> &S {
        &self.data[r * self.cols + c]
    }
}

impl<S> std::ops::IndexMut<(usize, usize)> for Matrix<S> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut S {
        &mut self.data[r * self.cols + c]
    }
}

pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn axpy<S: Scalar>(alpha: S, x: &[S], y: &mut [S]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
///
/// Fails with a numerical error when a pivot is not strictly positive.
pub fn cholesky<S: Scalar>(a: &Matrix<S>) -> Result<Matrix<S>> {
    assert_eq!(a.rows(), a.cols(), "cholesky requires a square matrix");
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[(i, j)];
            for k in 0..j {
                sum -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if sum <= S::zero() || !sum.is_finite() {
                    return Err(Error::Numerical(format!(
                        "cholesky pivot {i} is non-positive ({sum:?})"
                    )));
                }
                l[(i, j)] = sum.sqrt();
            } else {
                l[(i, j)] = sum / l[(j, j)];
            }
        }
    }
    Ok(l)
}

/// Cholesky with the escalating-jitter recovery policy: on failure add
/// `1e-10 * I` and retry, escalating by a factor of 10 up to `1e-6 * I`
/// before giving up.
pub fn cholesky_jittered<S: Scalar>(a: &Matrix<S>) -> Result<Matrix<S>> {
    match cholesky(a) {
        Ok(l) => Ok(l),
        Err(_) => {
            let mut jitter = 1e-10;
            while jitter <= 1e-6 {
                let mut shifted = a.clone();
                shifted.add_diagonal(S::from_f64_lossy(jitter));
                if let Ok(l) = cholesky(&shifted) {
                    return Ok(l);
                }
                jitter *= 10.0;
            }
            Err(Error::Numerical(
                "matrix not positive definite after 1e-6 jitter".into(),
            ))
        }
    }
}

/// Solves `L y = b` for lower-triangular `L`.
pub fn solve_lower<S: Scalar>(l: &Matrix<S>, b: &[S]) -> Vec<S> {
    let n = l.rows();
    debug_assert_eq!(b.len(), n);
    let mut y = vec![S::zero(); n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[(i, k)] * y[k];
        }
        y[i] = sum / l[(i, i)];
    }
    y
}

/// Solves `L^T x = b` for lower-triangular `L`.
pub fn solve_lower_transpose<S: Scalar>(l: &Matrix<S>, b: &[S]) -> Vec<S> {
    let n = l.rows();
    debug_assert_eq!(b.len(), n);
    let mut x = vec![S::zero(); n];
    for i in (0..n).rev() {
        let mut sum = b[i];
        for k in (i + 1)..n {
            sum -= l[(k, i)] * x[k];
        }
        x[i] = sum / l[(i, i)];
    }
    x
}

/// Solves `A x = b` given the Cholesky factor `L` of `A`.
pub fn spd_solve<S: Scalar>(l: &Matrix<S>, b: &[S]) -> Vec<S> {
    solve_lower_transpose(l, &solve_lower(l, b))
}

/// Inverse of an SPD matrix given its Cholesky factor.
pub fn spd_inverse<S: Scalar>(l: &Matrix<S>) -> Matrix<S> {
    let n = l.rows();
    let mut inv = Matrix::zeros(n, n);
    let mut e = vec![S::zero(); n];
    for j in 0..n {
        e[j] = S::one();
        let col = spd_solve(l, &e);
        e[j] = S::zero();
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }
    inv.symmetrize();
    inv
}

/// Eigenvalues of a symmetric matrix by the cyclic Jacobi method,
/// sorted ascending. Used by tests that check semidefinite orderings.
pub fn sym_eigenvalues<S: Scalar>(a: &Matrix<S>) -> Vec<S> {
    assert_eq!(a.rows(), a.cols());
    let n = a.rows();
    let mut m = a.clone();
    m.symmetrize();
    let tol = S::from_f64_lossy(1e-14);
    for _sweep in 0..100 {
        let mut off = S::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(m[(i, j)].abs());
            }
        }
        let scale = (0..n).fold(S::zero(), |acc, i| acc.max(m[(i, i)].abs()));
        if off <= tol * scale.max(S::one()) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= tol {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (S::from_f64_lossy(2.0) * apq);
                let t = {
                    let sign = if theta >= S::zero() { S::one() } else { -S::one() };
                    sign / (theta.abs() + (theta * theta + S::one()).sqrt())
                };
                let c = S::one() / (t * t + S::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut eig: Vec<S> = (0..n).map(|i| m[(i, i)]).collect();
    eig.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    eig
}
