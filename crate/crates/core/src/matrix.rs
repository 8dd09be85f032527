//! Dense row-major matrices over `f64` with the spectral toolbox the rest of
//! the crate is built on: products, Hadamard products, Frobenius/spectral
//! norms, a full SVD, and condition numbers.
//!
//! The SVD is a one-sided Jacobi iteration (Hestenes). Rotations are applied
//! to column pairs until every off-diagonal Gram entry `|a_p . a_q|` falls
//! below `1e-14 * ||A||_F^2`, with a hard cap of 60 sweeps. Left singular
//! vectors are re-orthonormalised by modified Gram-Schmidt afterwards so that
//! rank-deficient inputs still yield an orthonormal `U`.

use thiserror::Error;

/// Hard cap on Jacobi sweeps before giving up.
const MAX_JACOBI_SWEEPS: usize = 60;
/// Off-diagonal Gram entries below `JACOBI_TOL * ||A||_F^2` count as zero.
const JACOBI_TOL: f64 = 1e-14;

#[derive(Debug, Error, PartialEq)]
pub enum MatrixError {
    #[error(
        "dimension mismatch in {op}: left is {lhs_rows}x{lhs_cols}, right is {rhs_rows}x{rhs_cols}"
    )]
    DimMismatch { op: &'static str, lhs_rows: usize, lhs_cols: usize, rhs_rows: usize, rhs_cols: usize },
    #[error("matrix must have at least one row and one column, got {rows}x{cols}")]
    EmptyShape { rows: usize, cols: usize },
    #[error("data length {len} does not match shape {rows}x{cols}")]
    DataLength { rows: usize, cols: usize, len: usize },
    #[error("non-finite entry {value} at ({row}, {col})")]
    NonFinite { row: usize, col: usize, value: f64 },
    #[error("Jacobi SVD did not converge within {sweeps} sweeps; relative off-diagonal residual {residual:e}")]
    SvdNonConvergence { sweeps: usize, residual: f64 },
    #[error("matrix is singular to working precision (sigma_min = {sigma_min:e})")]
    Singular { sigma_min: f64 },
}

/// Dense matrix, row-major, 64-bit entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major data. Rejects empty shapes, length
    /// mismatches and non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, MatrixError> {
        if rows == 0 || cols == 0 {
            return Err(MatrixError::EmptyShape { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(MatrixError::DataLength { rows, cols, len: data.len() });
        }
        for (k, &v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(MatrixError::NonFinite { row: k / cols, col: k % cols, value: v });
            }
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "zero-sized matrix");
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MatrixError> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(MatrixError::EmptyShape { rows: rows.len(), cols: 0 });
        }
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(MatrixError::DataLength { rows: rows.len(), cols, len: r.len() });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    pub fn diag(entries: &[f64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in entries.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    /// Row `i` as a contiguous slice.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    /// Standard matrix product.
    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix, MatrixError> {
        if self.cols != rhs.rows {
            return Err(MatrixError::DimMismatch {
                op: "matmul",
                lhs_rows: self.rows,
                lhs_cols: self.cols,
                rhs_rows: rhs.rows,
                rhs_cols: rhs.cols,
            });
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        // i-k-j order keeps both operands streaming over contiguous rows.
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let rrow = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for j in 0..rhs.cols {
                    orow[j] += a * rrow[j];
                }
            }
        }
        Ok(out)
    }

    /// Element-wise product.
    pub fn hadamard(&self, rhs: &Matrix) -> Result<Matrix, MatrixError> {
        self.same_shape("hadamard", rhs)?;
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a * b).collect();
        Ok(Matrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn add(&self, rhs: &Matrix) -> Result<Matrix, MatrixError> {
        self.same_shape("add", rhs)?;
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        Ok(Matrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn sub(&self, rhs: &Matrix) -> Result<Matrix, MatrixError> {
        self.same_shape("sub", rhs)?;
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        Ok(Matrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn scale(&self, c: f64) -> Matrix {
        let data = self.data.iter().map(|a| a * c).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    /// Horizontal concatenation; all blocks must share the row count.
    pub fn hstack(blocks: &[&Matrix]) -> Result<Matrix, MatrixError> {
        assert!(!blocks.is_empty(), "hstack of nothing");
        let rows = blocks[0].rows;
        for b in blocks {
            if b.rows != rows {
                return Err(MatrixError::DimMismatch {
                    op: "hstack",
                    lhs_rows: rows,
                    lhs_cols: blocks[0].cols,
                    rhs_rows: b.rows,
                    rhs_cols: b.cols,
                });
            }
        }
        let cols: usize = blocks.iter().map(|b| b.cols).sum();
        let mut out = Matrix::zeros(rows, cols);
        for i in 0..rows {
            let mut off = 0;
            for b in blocks {
                out.data[i * cols + off..i * cols + off + b.cols].copy_from_slice(b.row(i));
                off += b.cols;
            }
        }
        Ok(out)
    }

    /// Vertical concatenation; all blocks must share the column count.
    pub fn vstack(blocks: &[&Matrix]) -> Result<Matrix, MatrixError> {
        assert!(!blocks.is_empty(), "vstack of nothing");
        let cols = blocks[0].cols;
        for b in blocks {
            if b.cols != cols {
                return Err(MatrixError::DimMismatch {
                    op: "vstack",
                    lhs_rows: blocks[0].rows,
                    lhs_cols: cols,
                    rhs_rows: b.rows,
                    rhs_cols: b.cols,
                });
            }
        }
        let rows: usize = blocks.iter().map(|b| b.rows).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for b in blocks {
            data.extend_from_slice(&b.data);
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Euclidean norm of row `i`.
    pub fn row_norm(&self, i: usize) -> f64 {
        self.row(i).iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Full singular value decomposition, `A = U diag(s) V^T`.
    pub fn svd(&self) -> Result<SvdResult, MatrixError> {
        if self.rows >= self.cols {
            jacobi_svd_tall(self)
        } else {
            let t = self.transpose();
            let SvdResult { u, s, v } = jacobi_svd_tall(&t)?;
            Ok(SvdResult { u: v, s, v: u })
        }
    }

    /// Singular values only, sorted non-increasing.
    pub fn singular_values(&self) -> Result<Vec<f64>, MatrixError> {
        Ok(self.svd()?.s)
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> Result<f64, MatrixError> {
        Ok(self.singular_values()?[0])
    }

    /// Smallest of the `min(rows, cols)` singular values.
    pub fn min_singular_value(&self) -> Result<f64, MatrixError> {
        Ok(*self.singular_values()?.last().unwrap())
    }

    /// `sigma_max / sigma_min`. A matrix whose smallest singular value is
    /// below `eps * max(rows, cols) * sigma_max` is reported as singular.
    pub fn condition_number(&self) -> Result<f64, MatrixError> {
        let s = self.singular_values()?;
        let smax = s[0];
        let smin = *s.last().unwrap();
        let floor = f64::EPSILON * self.rows.max(self.cols) as f64 * smax;
        if smax == 0.0 || smin <= floor {
            return Err(MatrixError::Singular { sigma_min: smin });
        }
        Ok(smax / smin)
    }

    fn same_shape(&self, op: &'static str, rhs: &Matrix) -> Result<(), MatrixError> {
        if self.shape() != rhs.shape() {
            return Err(MatrixError::DimMismatch {
                op,
                lhs_rows: self.rows,
                lhs_cols: self.cols,
                rhs_rows: rhs.rows,
                rhs_cols: rhs.cols,
            });
        }
        Ok(())
    }
}

/// Thin SVD of a matrix. `u` is `rows x k`, `v` is `cols x k`, `s` has
/// length `k = min(rows, cols)` and is sorted non-increasing.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

impl SvdResult {
    /// `U diag(s) V^T`, for reconstruction checks.
    pub fn reconstruct(&self) -> Matrix {
        let k = self.s.len();
        let mut scaled = self.u.clone();
        for j in 0..k {
            for i in 0..scaled.rows() {
                let v = scaled.get(i, j) * self.s[j];
                scaled.set(i, j, v);
            }
        }
        scaled.matmul(&self.v.transpose()).expect("shape")
    }
}

/// One-sided Jacobi on a tall (rows >= cols) matrix, stored column-major
/// during the iteration so rotations touch contiguous memory.
fn jacobi_svd_tall(a: &Matrix) -> Result<SvdResult, MatrixError> {
    let m = a.rows();
    let n = a.cols();
    debug_assert!(m >= n);

    let mut w = vec![0.0f64; m * n]; // column-major working copy
    for i in 0..m {
        for j in 0..n {
            w[j * m + i] = a.get(i, j);
        }
    }
    let mut v = vec![0.0f64; n * n]; // column-major accumulator
    for j in 0..n {
        v[j * n + j] = 1.0;
    }

    let fro2: f64 = w.iter().map(|x| x * x).sum();
    if fro2 == 0.0 {
        let u = Matrix::from_fn(m, n, |i, j| if i == j { 1.0 } else { 0.0 });
        return Ok(SvdResult { u, s: vec![0.0; n], v: Matrix::identity(n) });
    }
    let tol = JACOBI_TOL * fro2;

    let mut converged = n == 1;
    let mut residual = 0.0f64;
    for _ in 0..MAX_JACOBI_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        let mut off = 0.0f64;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let (cp, cq) = column_pair(&mut w, m, p, q);
                let mut apq = 0.0;
                for i in 0..m {
                    apq += cp[i] * cq[i];
                }
                off = off.max(apq.abs());
                if apq.abs() <= tol {
                    continue;
                }
                let mut app = 0.0;
                let mut aqq = 0.0;
                for i in 0..m {
                    app += cp[i] * cp[i];
                    aqq += cq[i] * cq[i];
                }
                let tau = (aqq - app) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let xp = cp[i];
                    let xq = cq[i];
                    cp[i] = c * xp - s * xq;
                    cq[i] = s * xp + c * xq;
                }
                let (vp, vq) = column_pair(&mut v, n, p, q);
                for i in 0..n {
                    let xp = vp[i];
                    let xq = vq[i];
                    vp[i] = c * xp - s * xq;
                    vq[i] = s * xp + c * xq;
                }
                rotated = true;
            }
        }
        residual = off;
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        return Err(MatrixError::SvdNonConvergence {
            sweeps: MAX_JACOBI_SWEEPS,
            residual: residual / fro2,
        });
    }

    // Column norms are the singular values.
    let mut order: Vec<usize> = (0..n).collect();
    let sigmas: Vec<f64> =
        (0..n).map(|j| w[j * m..(j + 1) * m].iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    order.sort_by(|&i, &j| sigmas[j].partial_cmp(&sigmas[i]).unwrap());

    let s: Vec<f64> = order.iter().map(|&j| sigmas[j]).collect();
    let mut u_cols: Vec<Vec<f64>> = order
        .iter()
        .map(|&j| {
            let col = &w[j * m..(j + 1) * m];
            if sigmas[j] > 0.0 {
                col.iter().map(|x| x / sigmas[j]).collect()
            } else {
                vec![0.0; m]
            }
        })
        .collect();

    // Modified Gram-Schmidt pass: healthy columns get corrections at
    // round-off scale, columns belonging to (near-)zero singular values are
    // replaced with an orthonormal completion.
    for j in 0..n {
        for i in 0..j {
            let mut r = 0.0;
            for k in 0..m {
                r += u_cols[i][k] * u_cols[j][k];
            }
            for k in 0..m {
                u_cols[j][k] -= r * u_cols[i][k];
            }
        }
        let nrm: f64 = u_cols[j].iter().map(|x| x * x).sum::<f64>().sqrt();
        if nrm > 0.5 {
            for x in u_cols[j].iter_mut() {
                *x /= nrm;
            }
        } else {
            u_cols[j] = orthonormal_fill(&u_cols[..j], m);
        }
    }

    let u = Matrix::from_fn(m, n, |i, j| u_cols[j][i]);
    let vmat = Matrix::from_fn(n, n, |i, j| v[order[j] * n + i]);
    Ok(SvdResult { u, s, v: vmat })
}

/// Two disjoint mutable column slices out of a column-major buffer.
fn column_pair(buf: &mut [f64], m: usize, p: usize, q: usize) -> (&mut [f64], &mut [f64]) {
    debug_assert!(p < q);
    let (left, right) = buf.split_at_mut(q * m);
    (&mut left[p * m..(p + 1) * m], &mut right[..m])
}

/// Best standard-basis vector orthogonalised against `existing`.
fn orthonormal_fill(existing: &[Vec<f64>], m: usize) -> Vec<f64> {
    let mut best: Vec<f64> = Vec::new();
    let mut best_norm = -1.0f64;
    for e in 0..m {
        let mut cand = vec![0.0; m];
        cand[e] = 1.0;
        for col in existing {
            let r: f64 = col[e]; // <e_e, col>
            for k in 0..m {
                cand[k] -= r * col[k];
            }
        }
        let nrm: f64 = cand.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nrm > best_norm {
            best_norm = nrm;
            best = cand;
        }
        if nrm > 0.9 {
            break;
        }
    }
    for x in best.iter_mut() {
        *x /= best_norm;
    }
    // One refinement pass keeps the completion orthogonal to round-off.
    let mut out = best;
    for col in existing {
        let mut r = 0.0;
        for k in 0..m {
            r += col[k] * out[k];
        }
        for k in 0..m {
            out[k] -= r * col[k];
        }
    }
    let nrm: f64 = out.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in out.iter_mut() {
        *x /= nrm;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
        assert_eq!(a.shape(), b.shape());
        a.data().iter().zip(b.data()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn rejects_empty_shapes_and_bad_lengths() {
        assert!(matches!(Matrix::new(0, 3, vec![]), Err(MatrixError::EmptyShape { .. })));
        assert!(matches!(Matrix::new(2, 2, vec![1.0; 3]), Err(MatrixError::DataLength { .. })));
        assert!(matches!(
            Matrix::new(1, 2, vec![1.0, f64::NAN]),
            Err(MatrixError::NonFinite { row: 0, col: 1, .. })
        ));
    }

    #[test]
    fn identity_matmul_is_identity_map() {
        let a = Matrix::new(3, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]).unwrap();
        let out = Matrix::identity(3).matmul(&a).unwrap();
        assert_eq!(out, a);
    }

    #[test]
    fn matmul_hand_example() {
        let a = Matrix::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = Matrix::new(2, 1, vec![0.0, 1.0]).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.data(), &[2.0, 4.0]);
    }

    #[test]
    fn matmul_shape_error_names_both_shapes() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(4, 2);
        let err = a.matmul(&b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("2x3") && msg.contains("4x2"), "{msg}");
    }

    #[test]
    fn matmul_matches_triple_loop_oracle() {
        let mut rng = Rng::new(42);
        let a = rng.gaussian_matrix(5, 4, 1.0);
        let b = rng.gaussian_matrix(4, 3, 1.0);
        let c = a.matmul(&b).unwrap();
        for i in 0..5 {
            for j in 0..3 {
                let mut acc = 0.0;
                for k in 0..4 {
                    acc += a.get(i, k) * b.get(k, j);
                }
                assert!((c.get(i, j) - acc).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn hadamard_identities() {
        let a = Matrix::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let ones = Matrix::from_fn(2, 2, |_, _| 1.0);
        let zeros = Matrix::zeros(2, 2);
        assert_eq!(a.hadamard(&ones).unwrap(), a);
        assert_eq!(a.hadamard(&zeros).unwrap(), zeros);
        let d = Matrix::new(2, 2, vec![2.0, 0.0, 0.0, 2.0]).unwrap();
        assert_eq!(a.hadamard(&d).unwrap().data(), &[2.0, 0.0, 0.0, 8.0]);
    }

    #[test]
    fn svd_of_identity_and_diagonal() {
        let s = Matrix::identity(4).singular_values().unwrap();
        for v in s {
            assert!((v - 1.0).abs() < 1e-12);
        }
        let d = Matrix::diag(&[3.0, 2.0, 1.0]);
        let s = d.singular_values().unwrap();
        assert!((s[0] - 3.0).abs() < 1e-12);
        assert!((s[1] - 2.0).abs() < 1e-12);
        assert!((s[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn svd_reconstruction_and_orthonormality() {
        let mut rng = Rng::new(7);
        for &(m, n) in &[(8usize, 5usize), (5, 8), (6, 6), (12, 3)] {
            let a = rng.gaussian_matrix(m, n, 1.0);
            let svd = a.svd().unwrap();
            let tol = 1e-10 * a.frobenius_norm().max(1.0);
            assert!(max_abs_diff(&svd.reconstruct(), &a) <= tol);
            let k = svd.s.len();
            let gram_u = svd.u.transpose().matmul(&svd.u).unwrap();
            let gram_v = svd.v.transpose().matmul(&svd.v).unwrap();
            assert!(max_abs_diff(&gram_u, &Matrix::identity(k)) <= 1e-10);
            assert!(max_abs_diff(&gram_v, &Matrix::identity(k)) <= 1e-10);
            for w in svd.s.windows(2) {
                assert!(w[0] >= w[1]);
            }
        }
    }

    #[test]
    fn rank_deficient_svd_keeps_u_orthonormal() {
        // Rank-one all-ones matrix: sigma_min must vanish and U must still be
        // an orthonormal basis thanks to the completion pass.
        let ones = Matrix::from_fn(3, 3, |_, _| 1.0);
        let svd = ones.svd().unwrap();
        assert!((svd.s[0] - 3.0).abs() < 1e-12);
        assert!(svd.s[2].abs() <= 1e-12);
        let gram = svd.u.transpose().matmul(&svd.u).unwrap();
        let id = Matrix::identity(3);
        assert!(max_abs_diff(&gram, &id) <= 1e-10);
        assert!(max_abs_diff(&svd.reconstruct(), &ones) <= 1e-10 * 3.0f64.max(1.0));
    }

    #[test]
    fn norms_and_condition_numbers() {
        assert!((Matrix::identity(5).condition_number().unwrap() - 1.0).abs() < 1e-12);
        let d = Matrix::diag(&[3.0, 4.0]);
        assert!((d.frobenius_norm() - 5.0).abs() < 1e-12);
        assert!((d.spectral_norm().unwrap() - 4.0).abs() < 1e-12);
        assert!((d.min_singular_value().unwrap() - 3.0).abs() < 1e-12);
        let ones = Matrix::from_fn(3, 3, |_, _| 1.0);
        assert!(matches!(ones.condition_number(), Err(MatrixError::Singular { .. })));
    }

    #[test]
    fn spectral_norm_bounded_by_frobenius() {
        let mut rng = Rng::new(11);
        for _ in 0..1000 {
            let m = 1 + (rng.next_u64() % 8) as usize;
            let n = 1 + (rng.next_u64() % 8) as usize;
            let a = rng.gaussian_matrix(m, n, 1.0);
            let spec = a.spectral_norm().unwrap();
            let fro = a.frobenius_norm();
            let k = m.min(n) as f64;
            assert!(spec <= fro + 1e-10);
            assert!(fro <= k.sqrt() * spec + 1e-10);
        }
    }

    #[test]
    fn weyl_inequality_on_random_perturbations() {
        let mut rng = Rng::new(13);
        for _ in 0..100 {
            let a = rng.gaussian_matrix(6, 4, 1.0);
            let e = rng.gaussian_matrix(6, 4, 0.05);
            let sa = a.singular_values().unwrap();
            let spert = a.add(&e).unwrap().singular_values().unwrap();
            let enorm = e.spectral_norm().unwrap();
            for (x, y) in sa.iter().zip(&spert) {
                assert!((x - y).abs() <= enorm + 1e-10);
            }
        }
    }

    #[test]
    fn hstack_vstack_layout() {
        let a = Matrix::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = Matrix::new(2, 1, vec![5.0, 6.0]).unwrap();
        let h = Matrix::hstack(&[&a, &b]).unwrap();
        assert_eq!(h.shape(), (2, 3));
        assert_eq!(h.row(0), &[1.0, 2.0, 5.0]);
        let c = Matrix::new(1, 2, vec![7.0, 8.0]).unwrap();
        let v = Matrix::vstack(&[&a, &c]).unwrap();
        assert_eq!(v.shape(), (3, 2));
        assert_eq!(v.row(2), &[7.0, 8.0]);
    }
}
