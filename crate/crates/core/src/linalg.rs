//! Dense real matrices, symmetric eigendecomposition, singular values and the
//! operator / Hilbert–Schmidt / nuclear norms.
//!
//! Two independent symmetric eigensolvers are provided:
//!
//! * [`sym_eigen`]: Householder reduction to tridiagonal form followed by the
//!   implicit QL iteration. O(n³) with a small constant; the workhorse.
//! * [`jacobi_eigen`]: cyclic Jacobi rotations. Slower, but shares no code with
//!   the QL route, so the two are used to cross-check each other.

use std::fmt;
use std::ops::{Index, IndexMut};

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Row-major dense matrix of `f64`.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            write!(f, "  ")?;
            for j in 0..self.cols.min(8) {
                write!(f, "{:>12.5e} ", self[(i, j)])?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Matrix::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data: rows.concat(),
        })
    }

    pub(crate) fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Matrix { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Matrix product; output rows are computed in parallel, each with a fixed
    /// summation order, so results are bit-reproducible.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let n = other.cols;
        let mut out = vec![0.0; self.rows * n];
        if n > 0 {
            out.par_chunks_mut(n).enumerate().for_each(|(i, out_row)| {
                for (k, &a) in self.row(i).iter().enumerate() {
                    if a == 0.0 {
                        continue;
                    }
                    for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                        *o += a * b;
                    }
                }
            });
        }
        Ok(Matrix::from_vec(self.rows, n, out))
    }

    fn zip_with(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Matrix::from_vec(self.rows, self.cols, data))
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, factor: f64) -> Matrix {
        Matrix::from_vec(self.rows, self.cols, self.data.iter().map(|v| v * factor).collect())
    }

    /// `diag(left) · self · diag(right)`.
    pub fn scale_rows_cols(&self, left: &[f64], right: &[f64]) -> Result<Matrix> {
        if left.len() != self.rows || right.len() != self.cols {
            return Err(Error::Shape("diagonal scaling length mismatch".into()));
        }
        Ok(Matrix::from_fn(self.rows, self.cols, |i, j| left[i] * self[(i, j)] * right[j]))
    }

    /// Sub-matrix with the given row and column index lists.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Matrix {
        Matrix::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// max |a_ij − a_ji| / max |a_ij| (0 for the zero matrix).
    pub fn asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst / scale
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigenvalues in ascending order, optionally with orthonormal eigenvectors
/// stored as the columns of `eigenvectors`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Option<Matrix>,
    /// max_k ‖M v_k − λ_k v_k‖₂ / ‖M‖_F when vectors were computed; otherwise
    /// the a-priori backward-error estimate n·ε.
    pub residual_bound: f64,
}

const SYMMETRY_TOL: f64 = 1e-12;
const QL_MAX_ITER_PER_VALUE: usize = 60;

fn check_symmetric(m: &Matrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Shape(format!("expected square matrix, got {}x{}", m.rows, m.cols)));
    }
    let asym = m.asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

/// `(M + Mᵀ)/2`; exactly symmetric in floating point.
pub fn symmetrised(m: &Matrix) -> Matrix {
    Matrix::from_fn(m.rows, m.cols, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
}

/// Householder tridiagonalisation. On entry `w` holds the symmetric matrix; on
/// exit `d`, `e` hold the diagonal and sub-diagonal (e[0] = 0) and, when
/// `accumulate` is set, row i of `w` holds the i-th column of the orthogonal
/// transform.
fn tridiagonalize(w: &mut Matrix, d: &mut [f64], e: &mut [f64], accumulate: bool) {
    let n = w.rows;
    for j in 0..n {
        d[j] = w[(j, n - 1)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = w[(j, i - 1)];
                w[(j, i)] = 0.0;
                w[(i, j)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                w[(i, j)] = f;
                g = e[j] + w[(j, j)] * f;
                let row = w.row(j);
                for k in (j + 1)..i {
                    g += row[k] * d[k];
                    e[k] += row[k] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let fj = d[j];
                let gj = e[j];
                let cols = w.cols;
                let row = &mut w.data[j * cols..(j + 1) * cols];
                for k in j..i {
                    row[k] -= fj * e[k] + gj * d[k];
                }
                d[j] = row[i - 1];
                row[i] = 0.0;
            }
        }
        d[i] = h;
    }

    if accumulate {
        for i in 0..(n - 1) {
            w[(i, n - 1)] = w[(i, i)];
            w[(i, i)] = 1.0;
            let h = d[i + 1];
            if h != 0.0 {
                for k in 0..=i {
                    d[k] = w[(i + 1, k)] / h;
                }
                for j in 0..=i {
                    let mut g = 0.0;
                    for k in 0..=i {
                        g += w[(i + 1, k)] * w[(j, k)];
                    }
                    for k in 0..=i {
                        w[(j, k)] -= g * d[k];
                    }
                }
            }
            for k in 0..=i {
                w[(i + 1, k)] = 0.0;
            }
        }
        for j in 0..n {
            d[j] = w[(j, n - 1)];
            w[(j, n - 1)] = 0.0;
        }
        w[(n - 1, n - 1)] = 1.0;
    } else {
        for j in 0..n {
            d[j] = w[(j, j)];
        }
    }
    e[0] = 0.0;
}

/// Implicit QL on the tridiagonal (d, e). Rotations are applied to the rows
/// of `z` when given.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], mut z: Option<&mut Matrix>) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > QL_MAX_ITER_PER_VALUE {
                    let off = e.iter().map(|v| v * v).sum::<f64>().sqrt();
                    return Err(Error::NoConvergence { off_norm: off });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(z) = z.as_deref_mut() {
                        let cols = z.cols;
                        let (head, tail) = z.data.split_at_mut((i + 1) * cols);
                        let zi = &mut head[i * cols..];
                        let zi1 = &mut tail[..cols];
                        for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                            let hk = *b;
                            *b = s * *a + c * hk;
                            *a = c * *a - s * hk;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

fn frobenius_entrywise(m: &Matrix) -> f64 {
    m.data.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn max_residual(m: &Matrix, values: &[f64], vectors: &Matrix) -> f64 {
    let fro = frobenius_entrywise(m);
    if fro == 0.0 {
        return 0.0;
    }
    let n = m.rows;
    (0..n)
        .map(|k| {
            let v: Vec<f64> = (0..n).map(|i| vectors[(i, k)]).collect();
            let mv = m.matvec(&v);
            mv.iter()
                .zip(&v)
                .map(|(a, b)| (a - values[k] * b).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
        / fro
}

/// Eigen-decomposition of a real symmetric matrix via Householder
/// tridiagonalisation and implicit QL.
pub fn sym_eigen(m: &Matrix, want_vectors: bool) -> Result<EigenDecomposition> {
    check_symmetric(m)?;
    let n = m.rows;
    if n == 0 {
        return Ok(EigenDecomposition {
            eigenvalues: vec![],
            eigenvectors: want_vectors.then(|| Matrix::zeros(0, 0)),
            residual_bound: 0.0,
        });
    }
    let mut w = symmetrised(m);
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut w, &mut d, &mut e, want_vectors);
    tridiagonal_ql(&mut d, &mut e, want_vectors.then_some(&mut w))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| d[i]).collect();

    if want_vectors {
        // row order[k] of w is the k-th eigenvector
        let vectors = Matrix::from_fn(n, n, |i, k| w[(order[k], i)]);
        let residual_bound = max_residual(m, &eigenvalues, &vectors);
        Ok(EigenDecomposition {
            eigenvalues,
            eigenvectors: Some(vectors),
            residual_bound,
        })
    } else {
        Ok(EigenDecomposition {
            eigenvalues,
            eigenvectors: None,
            residual_bound: n as f64 * f64::EPSILON,
        })
    }
}

/// Eigenvalues only, ascending.
pub fn sym_eigenvalues(m: &Matrix) -> Result<Vec<f64>> {
    Ok(sym_eigen(m, false)?.eigenvalues)
}

const JACOBI_MAX_SWEEPS: usize = 30;
const JACOBI_TOL: f64 = 1e-13;

/// Cyclic Jacobi eigen-decomposition. Iterates until the off-diagonal
/// Frobenius norm is at most 1e-13·‖M‖_F, with a cap of 30 sweeps.
pub fn jacobi_eigen(m: &Matrix, want_vectors: bool) -> Result<EigenDecomposition> {
    check_symmetric(m)?;
    let n = m.rows;
    let mut a = symmetrised(m);
    let mut v = Matrix::identity(n);
    let fro = frobenius_entrywise(&a);
    let off_norm = |a: &Matrix| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)] * a[(i, j)];
                }
            }
        }
        s.sqrt()
    };

    let mut converged = fro == 0.0;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if converged || off_norm(&a) <= JACOBI_TOL * fro {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
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
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                if want_vectors {
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
    if !converged && off_norm(&a) > JACOBI_TOL * fro {
        return Err(Error::NoConvergence {
            off_norm: off_norm(&a),
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(x, x)].total_cmp(&a[(y, y)]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    if want_vectors {
        let vectors = Matrix::from_fn(n, n, |i, k| v[(i, order[k])]);
        let residual_bound = max_residual(m, &eigenvalues, &vectors);
        Ok(EigenDecomposition {
            eigenvalues,
            eigenvectors: Some(vectors),
            residual_bound,
        })
    } else {
        Ok(EigenDecomposition {
            eigenvalues,
            eigenvectors: None,
            residual_bound: JACOBI_TOL,
        })
    }
}

/// Relative level below which singular values obtained through the Gram
/// matrix are not trusted.
pub const RELIABLE_FLOOR: f64 = 1e-9;

/// Singular values in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularValues {
    pub values: Vec<f64>,
    /// Absolute threshold `RELIABLE_FLOOR · σ₁`; values below it are reported
    /// but should not be used for decay fits.
    pub floor: f64,
}

impl SingularValues {
    pub fn largest(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// The prefix of values at or above the reliability floor.
    pub fn reliable(&self) -> &[f64] {
        let k = self.values.iter().take_while(|&&s| s >= self.floor && s > 0.0).count();
        &self.values[..k]
    }
}

/// Singular values of an arbitrary rectangular matrix; `min(rows, cols)` of
/// them. Symmetric square matrices use |eigenvalues| directly; everything else
/// goes through the eigenvalues of the smaller Gram matrix.
pub fn singular_values(m: &Matrix) -> Result<SingularValues> {
    let count = m.rows.min(m.cols);
    let mut values = if count == 0 {
        vec![]
    } else if m.is_square() && m.asymmetry() == 0.0 {
        sym_eigenvalues(m)?.into_iter().map(f64::abs).collect()
    } else {
        let gram = if m.rows >= m.cols {
            m.transpose().matmul(m)?
        } else {
            m.matmul(&m.transpose())?
        };
        sym_eigenvalues(&symmetrised(&gram))?
            .into_iter()
            .map(|l| l.max(0.0).sqrt())
            .collect()
    };
    values.sort_by(|a, b| b.total_cmp(a));
    let floor = RELIABLE_FLOOR * values.first().copied().unwrap_or(0.0);
    Ok(SingularValues { values, floor })
}

/// Operator (spectral) norm σ₁.
pub fn op_norm(m: &Matrix) -> Result<f64> {
    Ok(singular_values(m)?.largest())
}

/// Hilbert–Schmidt norm from the entries, sqrt(Σ a_ij²).
pub fn frobenius_norm(m: &Matrix) -> f64 {
    frobenius_entrywise(m)
}

/// Hilbert–Schmidt norm from the singular values, sqrt(Σ σ_k²).
pub fn frobenius_norm_spectral(m: &Matrix) -> Result<f64> {
    Ok(singular_values(m)?.values.iter().map(|s| s * s).sum::<f64>().sqrt())
}

/// Trace-class norm Σ σ_k.
pub fn nuclear_norm(m: &Matrix) -> Result<f64> {
    Ok(singular_values(m)?.values.iter().sum())
}
