//! Dense matrix/vector kernels and the two least-squares solves everything
//! else is built on.
//!
//! Storage is plain row-major `f64`. The factorization workhorse is a
//! column-pivoted Householder QR; [`min_norm_least_squares`] extends it to a
//! complete orthogonal decomposition so the pseudoinverse (minimum-norm)
//! solution comes out even when the matrix is rank deficient.

use crate::error::{Error, Result};

/// Pivots below this fraction of the largest pivot are treated as zero when
/// determining numerical rank.
pub const RANK_REL_TOL: f64 = 1e-10;

/// Iteration cap for the power iteration in [`spectral_norm`].
const POWER_ITER_CAP: usize = 10_000;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major entries, checking the element count
    /// and that every entry is finite.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidValue(
                "matrix dimensions must be positive".into(),
            ));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for a {}x{} matrix, got {}",
                rows * cols,
                rows,
                cols,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidValue("matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::InvalidValue(
                "matrix dimensions must be positive".into(),
            ));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
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
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Submatrix formed by the listed columns, in the listed order. An empty
    /// list yields a matrix with zero columns, which the least-squares
    /// entry points accept.
    pub fn columns(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for i in 0..self.rows {
            for &j in idx {
                data.push(self.get(i, j));
            }
        }
        Matrix {
            rows: self.rows,
            cols: idx.len(),
            data,
        }
    }

    pub fn col_norm_sq(&self, j: usize) -> f64 {
        (0..self.rows).map(|i| self.get(i, j).powi(2)).sum()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }
}

#[inline]
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[inline]
pub fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

#[inline]
pub fn norm2(x: &[f64]) -> f64 {
    norm_sq(x).sqrt()
}

#[inline]
pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

#[inline]
pub fn norm1(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

/// `A v` with a dimension check.
pub fn mat_vec(a: &Matrix, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != a.cols {
        return Err(Error::DimensionMismatch(format!(
            "mat_vec: matrix has {} columns, vector has length {}",
            a.cols,
            v.len()
        )));
    }
    Ok((0..a.rows).map(|i| dot(a.row(i), v)).collect())
}

/// `Aᵀ v` without forming the transpose.
pub fn mat_t_vec(a: &Matrix, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != a.rows {
        return Err(Error::DimensionMismatch(format!(
            "mat_t_vec: matrix has {} rows, vector has length {}",
            a.rows,
            v.len()
        )));
    }
    let mut out = vec![0.0; a.cols];
    for i in 0..a.rows {
        let row = a.row(i);
        let vi = v[i];
        for (o, &r) in out.iter_mut().zip(row) {
            *o += vi * r;
        }
    }
    Ok(out)
}

/// Column-pivoted Householder QR. Reflectors are stored below the diagonal
/// (unit leading entry implicit), R in the upper triangle; column `j` of the
/// factored matrix is input column `perm[j]`.
pub(crate) struct PivotedQr {
    pub f: Matrix,
    pub tau: Vec<f64>,
    pub perm: Vec<usize>,
    pub rank: usize,
}

pub(crate) fn pivoted_qr(b: &Matrix) -> PivotedQr {
    let m = b.rows;
    let k = b.cols;
    let mut f = b.clone();
    let steps = m.min(k);
    let mut tau = vec![0.0; steps];
    let mut perm: Vec<usize> = (0..k).collect();
    let mut rank = 0;
    let mut first_norm = 0.0;
    for s in 0..steps {
        // Trailing column norms are recomputed each step rather than
        // downdated; drift in the downdate formula is a classic source of
        // misdetected rank.
        let mut best = s;
        let mut best_sq = 0.0;
        for j in s..k {
            let mut t = 0.0;
            for i in s..m {
                let v = f.get(i, j);
                t += v * v;
            }
            if t > best_sq {
                best_sq = t;
                best = j;
            }
        }
        let col_norm = best_sq.sqrt();
        if s == 0 {
            first_norm = col_norm;
        }
        if col_norm <= RANK_REL_TOL * first_norm {
            break;
        }
        if best != s {
            for i in 0..m {
                let t = f.get(i, s);
                f.set(i, s, f.get(i, best));
                f.set(i, best, t);
            }
            perm.swap(s, best);
        }
        let alpha = f.get(s, s);
        let sign = if alpha >= 0.0 { 1.0 } else { -1.0 };
        let beta = -sign * col_norm;
        let v0 = alpha - beta;
        for i in s + 1..m {
            f.set(i, s, f.get(i, s) / v0);
        }
        let mut wsq = 1.0;
        for i in s + 1..m {
            wsq += f.get(i, s).powi(2);
        }
        let t = 2.0 / wsq;
        tau[s] = t;
        f.set(s, s, beta);
        for j in s + 1..k {
            let mut c = f.get(s, j);
            for i in s + 1..m {
                c += f.get(i, s) * f.get(i, j);
            }
            c *= t;
            f.set(s, j, f.get(s, j) - c);
            for i in s + 1..m {
                f.set(i, j, f.get(i, j) - c * f.get(i, s));
            }
        }
        rank = s + 1;
    }
    PivotedQr { f, tau, perm, rank }
}

/// Applies `Qᵀ` to `v` in place.
fn apply_qt(qr: &PivotedQr, v: &mut [f64]) {
    let m = qr.f.rows;
    for s in 0..qr.rank {
        let mut c = v[s];
        for i in s + 1..m {
            c += qr.f.get(i, s) * v[i];
        }
        c *= qr.tau[s];
        v[s] -= c;
        for i in s + 1..m {
            v[i] -= c * qr.f.get(i, s);
        }
    }
}

/// Applies `Q` to `v` in place (reflectors in reverse order).
fn apply_q(qr: &PivotedQr, v: &mut [f64]) {
    let m = qr.f.rows;
    for s in (0..qr.rank).rev() {
        let mut c = v[s];
        for i in s + 1..m {
            c += qr.f.get(i, s) * v[i];
        }
        c *= qr.tau[s];
        v[s] -= c;
        for i in s + 1..m {
            v[i] -= c * qr.f.get(i, s);
        }
    }
}

/// Numerical rank with the crate-wide pivot tolerance [`RANK_REL_TOL`].
pub fn rank(a: &Matrix) -> usize {
    pivoted_qr(a).rank
}

/// Returns a kernel vector when the null space of `a` is exactly
/// one-dimensional, `None` otherwise.
pub(crate) fn one_dim_kernel(a: &Matrix) -> Option<Vec<f64>> {
    let k = a.cols;
    let qr = pivoted_qr(a);
    if qr.rank + 1 != k {
        return None;
    }
    let r = qr.rank;
    // Dependent column is pivot column r; express it against the leading
    // r x r triangle.
    let mut y = vec![0.0; r];
    for i in (0..r).rev() {
        let mut s = -qr.f.get(i, r);
        for j in i + 1..r {
            s -= qr.f.get(i, j) * y[j];
        }
        y[i] = s / qr.f.get(i, i);
    }
    let mut v = vec![0.0; k];
    for (j, &yj) in y.iter().enumerate() {
        v[qr.perm[j]] = yj;
    }
    v[qr.perm[r]] = 1.0;
    Some(v)
}

/// Minimum-Euclidean-norm `w` minimizing `‖B w − rhs‖` (the pseudoinverse
/// solution), via column-pivoted QR extended to a complete orthogonal
/// decomposition when the rank is deficient. `k = 0` returns the empty
/// vector; rank deficiency is handled, not an error.
pub fn min_norm_least_squares(b: &Matrix, rhs: &[f64]) -> Result<Vec<f64>> {
    if rhs.len() != b.rows {
        return Err(Error::DimensionMismatch(format!(
            "least squares: matrix has {} rows, rhs has length {}",
            b.rows,
            rhs.len()
        )));
    }
    let k = b.cols;
    let qr = pivoted_qr(b);
    let r = qr.rank;
    if r == 0 {
        return Ok(vec![0.0; k]);
    }
    let mut c = rhs.to_vec();
    apply_qt(&qr, &mut c);
    let y = if r == k {
        let mut y = vec![0.0; r];
        for i in (0..r).rev() {
            let mut s = c[i];
            for j in i + 1..r {
                s -= qr.f.get(i, j) * y[j];
            }
            y[i] = s / qr.f.get(i, i);
        }
        y
    } else {
        // R1 = [R11 R12] has full row rank r; factor R1ᵀ = Z [T; 0] so the
        // minimum-norm solution of R1 y = c is y = Z1 T^{-ᵀ} c.
        let mut r1t = Matrix::zeros(k, r);
        for i in 0..r {
            for j in i..k {
                r1t.set(j, i, qr.f.get(i, j));
            }
        }
        let z = pivoted_qr(&r1t);
        debug_assert_eq!(z.rank, r);
        let mut s = vec![0.0; r];
        for i in 0..r {
            let mut acc = c[z.perm[i]];
            for j in 0..i {
                acc -= z.f.get(j, i) * s[j];
            }
            s[i] = acc / z.f.get(i, i);
        }
        let mut y = vec![0.0; k];
        y[..r].copy_from_slice(&s);
        apply_q(&z, &mut y);
        y
    };
    let mut w = vec![0.0; k];
    for (j, &yj) in y.iter().enumerate() {
        w[qr.perm[j]] = yj;
    }
    Ok(w)
}

/// Among all `w` minimizing `‖B w − rhs‖`, returns the one minimizing
/// `‖diag(weights) (w − anchor)‖`. Weights must be strictly positive and
/// finite.
///
/// Substituting `v = diag(weights) (w − anchor)` turns the problem into a
/// minimum-norm solve of the consistent system
/// `B diag(weights)^{-1} v = B (w0 − anchor)` with `w0` any least-squares
/// solution; this is algebraically the stationarity system of the weighted
/// objective over the least-squares solution set, in a form that stays
/// well conditioned when individual weights are very large.
pub fn weighted_constrained_ls(
    b: &Matrix,
    rhs: &[f64],
    anchor: &[f64],
    weights: &[f64],
) -> Result<Vec<f64>> {
    let k = b.cols;
    if anchor.len() != k || weights.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "weighted ls: matrix has {} columns, anchor has {}, weights has {}",
            k,
            anchor.len(),
            weights.len()
        )));
    }
    if rhs.len() != b.rows {
        return Err(Error::DimensionMismatch(format!(
            "weighted ls: matrix has {} rows, rhs has length {}",
            b.rows,
            rhs.len()
        )));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::InvalidValue(
            "weights must be strictly positive and finite".into(),
        ));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let w0 = min_norm_least_squares(b, rhs)?;
    let diff: Vec<f64> = w0.iter().zip(anchor).map(|(a, b)| a - b).collect();
    let target = mat_vec(b, &diff)?;
    let mut scaled = b.clone();
    for i in 0..b.rows {
        for j in 0..k {
            scaled.set(i, j, scaled.get(i, j) / weights[j]);
        }
    }
    let v = min_norm_least_squares(&scaled, &target)?;
    Ok(anchor
        .iter()
        .zip(v.iter().zip(weights))
        .map(|(a, (vj, wj))| a + vj / wj)
        .collect())
}

/// Largest singular value via power iteration on `AᵀA`, relative tolerance
/// about 1e-8, iteration cap 10_000. Returns 0 for the zero matrix.
pub fn spectral_norm(a: &Matrix) -> f64 {
    let n = a.cols;
    // Deterministic start with uneven entries so it is not orthogonal to the
    // top singular subspace for the structured matrices around here.
    let mut v: Vec<f64> = (0..n)
        .map(|i| 1.0 + ((i.wrapping_mul(2654435761) % 97) as f64) / 97.0)
        .collect();
    let nv = norm2(&v);
    for x in &mut v {
        *x /= nv;
    }
    let mut last = 0.0f64;
    for _ in 0..POWER_ITER_CAP {
        let av = mat_vec(a, &v).expect("dimensions fixed");
        let s = norm_sq(&av);
        if s == 0.0 {
            return 0.0;
        }
        let atav = mat_t_vec(a, &av).expect("dimensions fixed");
        let nrm = norm2(&atav);
        if nrm == 0.0 {
            return s.sqrt();
        }
        for (x, t) in v.iter_mut().zip(&atav) {
            *x = t / nrm;
        }
        if (s - last).abs() <= 1e-12 * s {
            return s.sqrt();
        }
        last = s;
    }
    last.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (i, (x, y)) in a.iter().zip(b).enumerate() {
            assert!((x - y).abs() <= tol, "entry {i}: {x} vs {y}");
        }
    }

    #[test]
    fn mat_vec_identity() {
        let a = Matrix::identity(2);
        assert_eq!(mat_vec(&a, &[3.0, -1.0]).unwrap(), vec![3.0, -1.0]);
    }

    #[test]
    fn mat_vec_row_sum() {
        let a = Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        assert_eq!(mat_vec(&a, &[2.0, 5.0]).unwrap(), vec![7.0]);
    }

    #[test]
    fn mat_vec_lower_triangular() {
        let a = Matrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(mat_vec(&a, &[1.0, 2.0]).unwrap(), vec![1.0, 3.0]);
    }

    #[test]
    fn mat_vec_dimension_mismatch() {
        let a = Matrix::identity(2);
        assert!(mat_vec(&a, &[1.0]).is_err());
    }

    #[test]
    fn min_norm_identity() {
        let b = Matrix::identity(2);
        assert_close(
            &min_norm_least_squares(&b, &[1.0, 2.0]).unwrap(),
            &[1.0, 2.0],
            1e-14,
        );
    }

    #[test]
    fn min_norm_underdetermined_line() {
        // Minimum-norm point on w1 + w2 = 2 is (1, 1).
        let b = Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        assert_close(
            &min_norm_least_squares(&b, &[2.0]).unwrap(),
            &[1.0, 1.0],
            1e-14,
        );
    }

    #[test]
    fn min_norm_overdetermined() {
        // Normal equation 2w = 2.
        let b = Matrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        assert_close(
            &min_norm_least_squares(&b, &[0.0, 2.0]).unwrap(),
            &[1.0],
            1e-14,
        );
    }

    #[test]
    fn min_norm_zero_columns() {
        let b = Matrix::from_rows(&[vec![0.0, 0.0]]).unwrap();
        assert_close(
            &min_norm_least_squares(&b, &[3.0]).unwrap(),
            &[0.0, 0.0],
            1e-14,
        );
    }

    #[test]
    fn min_norm_empty() {
        let b = Matrix::identity(3).columns(&[]);
        assert!(min_norm_least_squares(&b, &[1.0, 2.0, 3.0])
            .unwrap()
            .is_empty());
    }

    #[test]
    fn min_norm_duplicated_columns_orthogonal_to_kernel() {
        // B = [c | c | d]: kernel contains (1, -1, 0); the pseudoinverse
        // solution must be orthogonal to it.
        let b = Matrix::from_rows(&[
            vec![1.0, 1.0, 0.5],
            vec![2.0, 2.0, -1.0],
            vec![0.0, 0.0, 3.0],
        ])
        .unwrap();
        let w = min_norm_least_squares(&b, &[1.0, 1.0, 1.0]).unwrap();
        assert!((w[0] - w[1]).abs() <= 1e-12, "{w:?}");
    }

    #[test]
    fn weighted_ls_full_rank_ignores_anchor() {
        let b = Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let rhs = [1.0, -2.0, 0.5];
        let base = min_norm_least_squares(&b, &rhs).unwrap();
        let w = weighted_constrained_ls(&b, &rhs, &[9.0, -9.0], &[0.3, 7.0]).unwrap();
        assert_close(&w, &base, 1e-12);
    }

    #[test]
    fn weighted_ls_anchor_already_optimal() {
        let b = Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let w = weighted_constrained_ls(&b, &[2.0], &[0.5, 1.5], &[2.0, 2.0 / 3.0]).unwrap();
        assert_close(&w, &[0.5, 1.5], 1e-12);
    }

    #[test]
    fn weighted_ls_reduces_to_min_norm() {
        let b = Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let w = weighted_constrained_ls(&b, &[2.0], &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert_close(&w, &[1.0, 1.0], 1e-12);
    }

    #[test]
    fn weighted_ls_weighted_line() {
        // min d1² y1² + d2² y2²  s.t. y1 + y2 = 2  has solution
        // y1 = 2 d2²/(d1²+d2²), y2 = 2 d1²/(d1²+d2²).
        let b = Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let (d1, d2) = (2.0, 0.5);
        let w = weighted_constrained_ls(&b, &[2.0], &[0.0, 0.0], &[d1, d2]).unwrap();
        let den = d1 * d1 + d2 * d2;
        assert_close(&w, &[2.0 * d2 * d2 / den, 2.0 * d1 * d1 / den], 1e-12);
    }

    #[test]
    fn weighted_ls_rejects_bad_weights() {
        let b = Matrix::identity(2);
        assert!(weighted_constrained_ls(&b, &[1.0, 1.0], &[0.0, 0.0], &[1.0, 0.0]).is_err());
        assert!(
            weighted_constrained_ls(&b, &[1.0, 1.0], &[0.0, 0.0], &[1.0, f64::INFINITY]).is_err()
        );
    }

    #[test]
    fn spectral_norm_identity() {
        assert!((spectral_norm(&Matrix::identity(3)) - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn spectral_norm_diagonal() {
        let a = Matrix::from_rows(&[vec![3.0, 0.0], vec![0.0, 4.0]]).unwrap();
        assert!((spectral_norm(&a) - 4.0).abs() <= 1e-8);
    }

    #[test]
    fn spectral_norm_rank_one() {
        // AᵀA has eigenvalues 0 and 4.
        let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!((spectral_norm(&a) - 2.0).abs() <= 1e-8);
    }

    #[test]
    fn spectral_norm_zero_matrix() {
        assert_eq!(spectral_norm(&Matrix::zeros(2, 3)), 0.0);
    }

    #[test]
    fn one_dim_kernel_basic() {
        // [1 2 | -1] has a 2-dimensional kernel; each 2-subset of columns a
        // 1-dimensional one.
        let a = Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let v = one_dim_kernel(&a).unwrap();
        assert!((v[0] * 1.0 + v[1] * 2.0).abs() <= 1e-12);
        let full = Matrix::from_rows(&[vec![1.0, 2.0, -1.0]]).unwrap();
        assert!(one_dim_kernel(&full).is_none());
    }

    type LsCase = (Matrix, Vec<f64>, Vec<f64>, Vec<f64>);

    /// Matrix with matching rhs, anchor, and weights.
    fn ls_case() -> impl Strategy<Value = LsCase> {
        (1usize..5, 1usize..5).prop_flat_map(|(m, k)| {
            (
                proptest::collection::vec(-5.0f64..5.0, m * k),
                proptest::collection::vec(-5.0f64..5.0, m),
                proptest::collection::vec(-3.0f64..3.0, k),
                proptest::collection::vec(0.1f64..10.0, k),
            )
                .prop_map(move |(data, rhs, anchor, weights)| {
                    (Matrix::new(m, k, data).unwrap(), rhs, anchor, weights)
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn least_squares_residual_is_orthogonal((b, rhs, _, _) in ls_case()) {
            let w = min_norm_least_squares(&b, &rhs).unwrap();
            let res: Vec<f64> = mat_vec(&b, &w).unwrap().iter().zip(&rhs).map(|(a, r)| a - r).collect();
            let g = mat_t_vec(&b, &res).unwrap();
            prop_assert!(norm_inf(&g) <= 1e-8 * (1.0 + norm2(&rhs)));
        }

        #[test]
        fn weighted_ls_matches_best_residual((b, rhs, anchor, weights) in ls_case()) {
            let w0 = min_norm_least_squares(&b, &rhs).unwrap();
            let w = weighted_constrained_ls(&b, &rhs, &anchor, &weights).unwrap();
            let r0: Vec<f64> = mat_vec(&b, &w0).unwrap().iter().zip(&rhs).map(|(a, r)| a - r).collect();
            let r1: Vec<f64> = mat_vec(&b, &w).unwrap().iter().zip(&rhs).map(|(a, r)| a - r).collect();
            prop_assert!(norm2(&r1) <= norm2(&r0) + 1e-8 * (1.0 + norm2(&rhs)));
        }

        #[test]
        fn spectral_norm_dominates_random_directions((a, _, _, _) in ls_case(),
                                                     seed in 0u64..1000) {
            let s = spectral_norm(&a);
            // Cheap deterministic pseudo-random directions.
            let n = a.cols();
            let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            for _ in 0..100 {
                let mut v = vec![0.0; n];
                for x in v.iter_mut() {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    *x = ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
                }
                let nv = norm2(&v);
                if nv == 0.0 { continue; }
                let av = mat_vec(&a, &v).unwrap();
                prop_assert!(s >= norm2(&av) / nv - 1e-8 * (1.0 + s));
            }
        }
    }
}
