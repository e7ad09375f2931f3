//! Small dense linear algebra: row-major matrices, population covariance,
//! Cholesky factorization and a cyclic Jacobi symmetric eigen-solver.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix of finite reals.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::invalid(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite entry at ({}, {})",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Matrix { rows, cols, values })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Matrix::zeros(diag.len(), diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::invalid(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            values.extend_from_slice(r);
        }
        Matrix::new(rows.len(), cols, values)
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
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        // `chunks_exact(0)` panics, and a 0-column matrix still has rows.
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::invalid(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// Largest absolute entrywise difference; `INFINITY` on shape mismatch.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Per-column arithmetic means.
    pub fn column_means(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for row in self.row_iter() {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        let n = self.rows.max(1) as f64;
        sums.iter().map(|s| s / n).collect()
    }

    /// Copy with `center` subtracted from every row.
    pub fn centered(&self, center: &[f64]) -> Matrix {
        let mut out = self.clone();
        for i in 0..out.rows {
            for (v, c) in out.row_mut(i).iter_mut().zip(center) {
                *v -= c;
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.values[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.values[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let t = x - y;
            t * t
        })
        .sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Population covariance `XᵀX / n` of an already column-centered matrix.
pub fn covariance(x: &Matrix) -> Result<Matrix> {
    let n = x.rows();
    if n < 2 {
        return Err(Error::invalid(format!(
            "covariance needs at least 2 rows, got {n}"
        )));
    }
    let d = x.cols();
    let mut s = Matrix::zeros(d, d);
    for row in x.row_iter() {
        for a in 0..d {
            let ra = row[a];
            for b in a..d {
                s[(a, b)] += ra * row[b];
            }
        }
    }
    let inv_n = 1.0 / n as f64;
    for a in 0..d {
        for b in a..d {
            let v = s[(a, b)] * inv_n;
            s[(a, b)] = v;
            s[(b, a)] = v;
        }
    }
    Ok(s)
}

const PIVOT_EPS: f64 = 1e-12;

/// Lower-triangular `L` with `L Lᵀ = s`.
///
/// Fails with [`Error::NotPositiveDefinite`] naming the first pivot whose
/// Schur complement is not strictly positive.
pub fn cholesky(s: &Matrix) -> Result<Matrix> {
    if !s.is_square() {
        return Err(Error::invalid(format!(
            "cholesky needs a square matrix, got {}x{}",
            s.rows(),
            s.cols()
        )));
    }
    let n = s.rows();
    let scale = s.as_slice().iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if s.asymmetry() > 1e-9 * scale {
        return Err(Error::invalid("cholesky needs a symmetric matrix"));
    }
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut diag = s[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        // Relative test: a Schur complement lost to rounding is singular, not PD.
        if !(diag > PIVOT_EPS * s[(j, j)].abs()) || !diag.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        let ljj = diag.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut v = s[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / ljj;
        }
    }
    Ok(l)
}

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Column `j` is the unit eigenvector for `values[j]`.
    pub vectors: Matrix,
}

/// Off-diagonal Frobenius norm, relative to the matrix norm, at which the
/// Jacobi sweeps stop.
pub const JACOBI_TOLERANCE: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Symmetric eigen-decomposition by cyclic Jacobi rotations.
///
/// Each eigenvector is sign-normalized so that its largest-magnitude entry
/// is positive (ties go to the lowest index), which keeps projections and
/// plots stable across platforms.
pub fn sym_eigen(s: &Matrix) -> Result<SymEigen> {
    if !s.is_square() {
        return Err(Error::invalid(format!(
            "sym_eigen needs a square matrix, got {}x{}",
            s.rows(),
            s.cols()
        )));
    }
    if s.asymmetry() > 1e-9 {
        return Err(Error::invalid(format!(
            "sym_eigen needs a symmetric matrix (asymmetry {:e})",
            s.asymmetry()
        )));
    }
    let n = s.rows();
    let mut a = s.clone();
    // Symmetrize exactly so rotations act on a truly symmetric matrix.
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = m;
            a[(j, i)] = m;
        }
    }
    let mut v = Matrix::identity(n);
    let total = a.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt();
    let threshold = JACOBI_TOLERANCE * total.max(f64::MIN_POSITIVE);

    let off_norm = |a: &Matrix| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                acc += 2.0 * a[(i, j)] * a[(i, j)];
            }
        }
        acc.sqrt()
    };

    let mut converged = off_norm(&a) <= threshold;
    let mut sweeps = 0;
    while !converged && sweeps < JACOBI_MAX_SWEEPS {
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                rotate(&mut a, &mut v, p, q, c, sn);
            }
        }
        sweeps += 1;
        converged = off_norm(&a) <= threshold;
    }
    if !converged {
        return Err(Error::Numeric(format!(
            "Jacobi eigen-solver did not converge in {JACOBI_MAX_SWEEPS} sweeps"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]).then(i.cmp(&j)));
    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.column(src);
        orient(&mut col);
        for (i, x) in col.into_iter().enumerate() {
            vectors[(i, dst)] = x;
        }
    }
    Ok(SymEigen { values, vectors })
}

/// Applies the Jacobi rotation in the (p, q) plane to `a` (both sides) and
/// accumulates it into `v`.
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let n = a.rows();
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
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// Flips `col` so its largest-magnitude entry (lowest index on ties) is positive.
fn orient(col: &mut [f64]) {
    let mut best = 0;
    for (i, x) in col.iter().enumerate() {
        if x.abs() > col[best].abs() {
            best = i;
        }
    }
    if col.get(best).is_some_and(|&x| x < 0.0) {
        col.iter_mut().for_each(|x| *x = -*x);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn equicorrelation(d: usize, rho: f64) -> Matrix {
        let mut s = Matrix::identity(d);
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    s[(i, j)] = rho;
                }
            }
        }
        s
    }

    #[test]
    fn covariance_hand_case() {
        let x = Matrix::new(2, 1, vec![-1.0, 1.0]).unwrap();
        let s = covariance(&x).unwrap();
        assert_eq!(s.as_slice(), &[1.0]);
    }

    #[test]
    fn covariance_of_duplicate_columns() {
        let x = Matrix::from_rows(&[[-1.5, -1.5], [0.5, 0.5], [1.0, 1.0]]).unwrap();
        let centered = x.centered(&x.column_means());
        let s = covariance(&centered).unwrap();
        let r = s[(0, 1)] / (s[(0, 0)] * s[(1, 1)]).sqrt();
        assert!((r - 1.0).abs() < 1e-10);
    }

    #[test]
    fn covariance_needs_two_rows() {
        let x = Matrix::new(1, 3, vec![0.0; 3]).unwrap();
        assert!(matches!(covariance(&x), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn cholesky_closed_forms() {
        assert_eq!(cholesky(&Matrix::identity(4)).unwrap(), Matrix::identity(4));
        let l = cholesky(&equicorrelation(2, 0.6)).unwrap();
        let expected = Matrix::from_rows(&[[1.0, 0.0], [0.6, 0.8]]).unwrap();
        assert!(l.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn cholesky_rejects_indefinite_equicorrelation() {
        // Eigenvalues of the d=3, rho=-0.5 matrix are {0, 1.5, 1.5}.
        let s = equicorrelation(3, -0.5);
        let e = sym_eigen(&s).unwrap();
        assert!(e.values[2].abs() < 1e-12);
        match cholesky(&s) {
            Err(Error::NotPositiveDefinite { pivot }) => assert_eq!(pivot, 2),
            other => panic!("expected failure, got {other:?}"),
        }
        let s = equicorrelation(3, -0.7);
        assert!(matches!(
            cholesky(&s),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn eigen_of_diagonal() {
        let e = sym_eigen(&Matrix::from_diagonal(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.values, vec![3.0, 2.0, 1.0]);
        let expected =
            Matrix::from_rows(&[[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]]).unwrap();
        assert_eq!(e.vectors, expected);
    }

    #[test]
    fn eigen_two_by_two() {
        let s = Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let e = sym_eigen(&s).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-12);
        assert!((e.values[1] - 1.0).abs() < 1e-12);
        // Sign rule: largest entry positive, lowest index on ties.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((e.vectors[(0, 0)] - h).abs() < 1e-12);
        assert!((e.vectors[(1, 0)] - h).abs() < 1e-12);
        assert!((e.vectors[(0, 1)] - h).abs() < 1e-12);
        assert!((e.vectors[(1, 1)] + h).abs() < 1e-12);
    }

    #[test]
    fn eigen_rejects_asymmetric() {
        let s = Matrix::from_rows(&[[1.0, 2.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(sym_eigen(&s), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn new_rejects_nan() {
        assert!(Matrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(Matrix::new(2, 2, vec![1.0; 3]).is_err());
    }
}
