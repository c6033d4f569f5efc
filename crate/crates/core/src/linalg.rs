//! Dense and tridiagonal linear algebra used by the chain computations.
//!
//! Everything here is desk-scale (a few hundred states), so the
//! implementations favor clarity and predictable accuracy over asymptotics:
//! LU with partial pivoting plus one refinement pass, the Thomas algorithm
//! for tridiagonal systems, implicit-shift QL for symmetric tridiagonal
//! eigenvalues and cyclic Jacobi for dense symmetric eigenpairs.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
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

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn matmul(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                let orow = other.row(k);
                let out_row = out.row_mut(i);
                for j in 0..orow.len() {
                    out_row[j] = out_row[j] + a * orow[j];
                }
            }
        }
        out
    }

    /// `self += s * other`
    pub fn add_scaled(&mut self, s: T, other: &Mat<T>) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a = *a + s * *b;
        }
    }

    pub fn scale(&mut self, s: T) {
        for a in self.data.iter_mut() {
            *a = *a * s;
        }
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, &x| acc.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Mat<T>) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(other.data.iter())
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
    }

    /// y = A x
    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x.iter())
                    .map(|(&a, &b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// y = x^T A
    pub fn vecmat(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.rows, x.len());
        let mut out = vec![T::zero(); self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o = *o + xi * a;
            }
        }
        out
    }
}

impl<T: Real> std::ops::Index<(usize, usize)> for Mat<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T: Real> std::ops::IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization with partial pivoting.
pub struct Lu<T> {
    lu: Mat<T>,
    pivots: Vec<usize>,
}

impl<T: Real> Lu<T> {
    pub fn factor(a: &Mat<T>) -> Result<Self> {
        assert_eq!(a.rows(), a.cols());
        let n = a.rows();
        let mut lu = a.clone();
        let mut pivots = vec![0usize; n];
        for k in 0..n {
            let mut piv = k;
            let mut best = lu[(k, k)].abs();
            for i in k + 1..n {
                let v = lu[(i, k)].abs();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if best == T::zero() {
                return Err(Error::Reducible { state: k });
            }
            pivots[k] = piv;
            if piv != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(piv, j)];
                    lu[(piv, j)] = tmp;
                }
            }
            let d = lu[(k, k)];
            for i in k + 1..n {
                let m = lu[(i, k)] / d;
                lu[(i, k)] = m;
                if m == T::zero() {
                    continue;
                }
                for j in k + 1..n {
                    let v = lu[(k, j)];
                    lu[(i, j)] = lu[(i, j)] - m * v;
                }
            }
        }
        Ok(Lu { lu, pivots })
    }

    pub fn solve_vec(&self, b: &[T]) -> Vec<T> {
        let n = self.lu.rows();
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        // apply all row interchanges first: stored multipliers refer to the
        // fully pivoted row order, not the order at each elimination step
        for k in 0..n {
            x.swap(k, self.pivots[k]);
        }
        for k in 0..n {
            let xk = x[k];
            if xk == T::zero() {
                continue;
            }
            for i in k + 1..n {
                x[i] = x[i] - self.lu[(i, k)] * xk;
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in k + 1..n {
                s = s - self.lu[(k, j)] * x[j];
            }
            x[k] = s / self.lu[(k, k)];
        }
        x
    }
}

/// Solve `A x = b` with one step of iterative refinement.
pub fn solve_dense<T: Real>(a: &Mat<T>, b: &[T]) -> Result<Vec<T>> {
    let lu = Lu::factor(a)?;
    let mut x = lu.solve_vec(b);
    let ax = a.matvec(&x);
    let r: Vec<T> = b.iter().zip(ax.iter()).map(|(&bi, &ai)| bi - ai).collect();
    let dx = lu.solve_vec(&r);
    for (xi, di) in x.iter_mut().zip(dx.iter()) {
        *xi = *xi + *di;
    }
    Ok(x)
}

pub fn inverse<T: Real>(a: &Mat<T>) -> Result<Mat<T>> {
    let n = a.rows();
    let lu = Lu::factor(a)?;
    let mut inv = Mat::zeros(n, n);
    for j in 0..n {
        let mut e = vec![T::zero(); n];
        e[j] = T::one();
        let col = lu.solve_vec(&e);
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }
    Ok(inv)
}

/// Thomas algorithm for `A x = b` with `A` tridiagonal, plus one refinement
/// pass. `lower[i]` couples row `i+1` to column `i`; `upper[i]` couples row
/// `i` to column `i+1`.
pub fn solve_tridiagonal<T: Real>(
    lower: &[T],
    diag: &[T],
    upper: &[T],
    b: &[T],
) -> Result<Vec<T>> {
    let n = diag.len();
    assert!(lower.len() + 1 == n && upper.len() + 1 == n && b.len() == n);
    let pass = |rhs: &[T]| -> Result<Vec<T>> {
        let mut c = vec![T::zero(); n];
        let mut d = vec![T::zero(); n];
        if diag[0] == T::zero() {
            return Err(Error::Reducible { state: 0 });
        }
        c[0] = upper.first().copied().unwrap_or_else(T::zero) / diag[0];
        d[0] = rhs[0] / diag[0];
        for i in 1..n {
            let denom = diag[i] - lower[i - 1] * c[i - 1];
            if denom == T::zero() {
                return Err(Error::Reducible { state: i });
            }
            if i < n - 1 {
                c[i] = upper[i] / denom;
            }
            d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / denom;
        }
        let mut x = d;
        for i in (0..n - 1).rev() {
            let next = x[i + 1];
            x[i] = x[i] - c[i] * next;
        }
        Ok(x)
    };
    if n == 1 {
        if diag[0] == T::zero() {
            return Err(Error::Reducible { state: 0 });
        }
        return Ok(vec![b[0] / diag[0]]);
    }
    let mut x = pass(b)?;
    // residual refinement
    let mut r = vec![T::zero(); n];
    for i in 0..n {
        let mut ax = diag[i] * x[i];
        if i > 0 {
            ax = ax + lower[i - 1] * x[i - 1];
        }
        if i < n - 1 {
            ax = ax + upper[i] * x[i + 1];
        }
        r[i] = b[i] - ax;
    }
    let dx = pass(&r)?;
    for (xi, di) in x.iter_mut().zip(dx.iter()) {
        *xi = *xi + *di;
    }
    Ok(x)
}

/// Eigenvalues of a symmetric tridiagonal matrix by the implicit-shift QL
/// iteration, returned in ascending order. `off` has length `diag.len() - 1`.
pub fn symmetric_tridiagonal_eigenvalues<T: Real>(diag: &[T], off: &[T]) -> Result<Vec<T>> {
    let n = diag.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    assert_eq!(off.len(), n - 1);
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(T::zero());
    let eps = T::epsilon();
    for l in 0..n {
        let mut iter = 0usize;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::EigenFailure);
            }
            let mut g = (d[l + 1] - d[l]) / (T::two() * e[l]);
            let mut r = g.hypot(T::one());
            let denom = g + if g >= T::zero() { r } else { -r };
            g = d[m] - d[l] + e[l] / denom;
            let mut s = T::one();
            let mut c = T::one();
            let mut p = T::zero();
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] = d[i + 1] - p;
                    e[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + T::two() * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] = d[l] - p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    d.sort_by(|a, b| a.partial_cmp(b).expect("NaN eigenvalue"));
    Ok(d)
}

/// Eigenpairs of a dense symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in ascending order with matching eigenvector columns.
pub fn jacobi_symmetric_eigen<T: Real>(a: &Mat<T>) -> Result<(Vec<T>, Mat<T>)> {
    assert_eq!(a.rows(), a.cols());
    let n = a.rows();
    let mut a = a.clone();
    let mut v = Mat::identity(n);
    let eps = T::epsilon();
    let scale = a.max_abs().max(T::one());
    let mut converged = false;
    for _sweep in 0..100 {
        let mut off = T::zero();
        for i in 0..n {
            for j in i + 1..n {
                off = off.max(a[(i, j)].abs());
            }
        }
        if off <= eps * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() <= eps * eps * scale {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (T::two() * apq);
                let t = {
                    let sign = if theta >= T::zero() { T::one() } else { -T::one() };
                    sign / (theta.abs() + theta.hypot(T::one()))
                };
                let c = T::one() / t.hypot(T::one());
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        // final check after the sweep budget
        let mut off = T::zero();
        for i in 0..n {
            for j in i + 1..n {
                off = off.max(a[(i, j)].abs());
            }
        }
        if off > T::of(1e3) * eps * scale {
            return Err(Error::EigenFailure);
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).expect("NaN eigenvalue"));
    let vals: Vec<T> = order.iter().map(|&i| a[(i, i)]).collect();
    let vecs = Mat::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok((vals, vecs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_small_system() {
        let a = Mat::from_fn(3, 3, |i, j| {
            [[4.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 2.0]][i][j]
        });
        let x = solve_dense(&a, &[1.0, 2.0, 3.0]).unwrap();
        let b = a.matvec(&x);
        for (bi, want) in b.iter().zip([1.0f64, 2.0, 3.0]) {
            assert!((bi - want).abs() < 1e-14);
        }
    }

    #[test]
    fn tridiagonal_matches_dense() {
        let lower = [1.0f64, 2.0, -0.5];
        let diag = [4.0, 5.0, 6.0, 3.0];
        let upper = [-1.0, 0.5, 1.0];
        let b = [1.0, -2.0, 0.25, 4.0];
        let a = Mat::from_fn(4, 4, |i, j| {
            if i == j {
                diag[i]
            } else if j == i + 1 {
                upper[i]
            } else if i == j + 1 {
                lower[j]
            } else {
                0.0
            }
        });
        let x_tri = solve_tridiagonal(&lower, &diag, &upper, &b).unwrap();
        let x_lu = solve_dense(&a, &b).unwrap();
        for (a, b) in x_tri.iter().zip(x_lu.iter()) {
            assert!((*a - *b).abs() < 1e-13);
        }
    }

    #[test]
    fn ql_eigenvalues_of_known_tridiagonal() {
        // 1D Laplacian [2,-1] on n points: eigenvalues 2 - 2 cos(k pi / (n+1))
        let n = 12;
        let diag = vec![2.0f64; n];
        let off = vec![-1.0f64; n - 1];
        let vals = symmetric_tridiagonal_eigenvalues(&diag, &off).unwrap();
        for (k, v) in vals.iter().enumerate() {
            let want = 2.0 - 2.0 * (std::f64::consts::PI * (k + 1) as f64 / (n as f64 + 1.0)).cos();
            assert!((v - want).abs() < 1e-12, "k={k} got {v} want {want}");
        }
    }

    #[test]
    fn jacobi_matches_ql_on_tridiagonal() {
        let n = 8;
        let diag: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let off: Vec<f64> = (0..n - 1).map(|i| 0.3 + 0.05 * i as f64).collect();
        let a = Mat::from_fn(n, n, |i, j| {
            if i == j {
                diag[i]
            } else if i.abs_diff(j) == 1 {
                off[i.min(j)]
            } else {
                0.0
            }
        });
        let ql = symmetric_tridiagonal_eigenvalues(&diag, &off).unwrap();
        let (jac, vecs) = jacobi_symmetric_eigen(&a).unwrap();
        for (x, y) in ql.iter().zip(jac.iter()) {
            assert!((x - y).abs() < 1e-11);
        }
        // residual check A v = lambda v
        for k in 0..n {
            let v: Vec<f64> = (0..n).map(|i| vecs[(i, k)]).collect();
            let av = a.matvec(&v);
            for i in 0..n {
                assert!((av[i] - jac[k] * v[i]).abs() < 1e-10);
            }
        }
    }
}
