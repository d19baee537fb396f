//! Small dense linear algebra for the problem generator.
//!
//! Everything here works on little row-major matrices (d up to a few
//! hundred). The generalized symmetric-definite eigenproblem is reduced to
//! an ordinary symmetric one through the Cholesky factor of the second
//! matrix; the symmetric solver is a cyclic Jacobi iteration, which keeps
//! the crate dependency-free and bit-deterministic.

use crate::rng::RandomStream;
use crate::{Error, Result};
use std::ops::{Index, IndexMut};

/// Dense row-major matrix of f64.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
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

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Validation(format!(
                "matrix data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix { rows: r, cols: c, data }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Matrix::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
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

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
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
        out
    }

    /// A * v.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut s = 0.0;
                for j in 0..self.cols {
                    s += self[(i, j)] * v[j];
                }
                s
            })
            .collect()
    }

    /// A^T * v.
    pub fn matvec_transpose(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, v.len());
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let vi = v[i];
            for j in 0..self.cols {
                out[j] += self[(i, j)] * vi;
            }
        }
        out
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_col(&mut self, j: usize, v: &[f64]) {
        assert_eq!(v.len(), self.rows);
        for i in 0..self.rows {
            self[(i, j)] = v[i];
        }
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0f64, |m, (&a, &b)| m.max((a - b).abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// max |a_ij - a_ji|.
    pub fn symmetry_defect(&self) -> f64 {
        let mut d = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                d = d.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        d
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

const GS_DEGENERACY_THRESHOLD: f64 = 1e-10;

/// Modified Gram-Schmidt over the columns in index order.
///
/// Column 0 is only normalized, never altered in direction; the
/// `fix_first_column` flag states that a caller relies on this (the
/// axis-realignment construction seeds column 0 with the Pareto-set
/// direction). The orthogonalization itself is identical either way.
pub fn gram_schmidt(m: &Matrix, fix_first_column: bool) -> Result<Matrix> {
    assert!(m.is_square(), "Gram-Schmidt input must be square");
    let n = m.rows();
    let _ = fix_first_column;
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| m.col(j)).collect();
    for j in 0..n {
        for k in 0..j {
            let proj = dot(&cols[k], &cols[j]);
            for i in 0..n {
                cols[j][i] -= proj * cols[k][i];
            }
        }
        let len = norm(&cols[j]);
        if len < GS_DEGENERACY_THRESHOLD {
            return Err(Error::DegenerateColumns { norm: len });
        }
        for x in &mut cols[j] {
            *x /= len;
        }
    }
    let mut q = Matrix::zeros(n, n);
    for (j, c) in cols.iter().enumerate() {
        q.set_col(j, c);
    }
    Ok(q)
}

/// Orthogonal matrix sampled Haar-uniformly up to column signs:
/// d*d i.i.d. standard normal entries (filled row-major), then Gram-Schmidt.
pub fn sample_orthogonal(stream: &mut RandomStream, d: usize) -> Result<Matrix> {
    let mut last = Error::DegenerateColumns { norm: 0.0 };
    for _ in 0..3 {
        let raw = Matrix::from_row_major(d, d, stream.sample_gaussian_vector(d * d))?;
        match gram_schmidt(&raw, false) {
            Ok(q) => return Ok(q),
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// Lower Cholesky factor A with A * A^T = H.
pub fn cholesky(h: &Matrix) -> Result<Matrix> {
    assert!(h.is_square());
    let n = h.rows();
    let trace: f64 = (0..n).map(|i| h[(i, i)]).sum();
    let pivot_floor = 1e-14 * trace;
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = h[(i, j)];
            for k in 0..j {
                s -= a[(i, k)] * a[(j, k)];
            }
            if i == j {
                if s <= pivot_floor {
                    return Err(Error::NotPositiveDefinite { pivot: s, index: i });
                }
                a[(i, i)] = s.sqrt();
            } else {
                a[(i, j)] = s / a[(j, j)];
            }
        }
    }
    Ok(a)
}

/// Solve L x = b for lower-triangular L.
pub fn solve_lower(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut x = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            let coeff = l[(i, k)];
            x[i] -= coeff * x[k];
        }
        x[i] /= l[(i, i)];
    }
    x
}

/// Solve L^T x = b for lower-triangular L.
pub fn solve_lower_transpose(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            let coeff = l[(k, i)];
            x[i] -= coeff * x[k];
        }
        x[i] /= l[(i, i)];
    }
    x
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns (U, lambda) with eigenvalues ascending and the k-th column of U
/// the eigenvector of lambda_k. Iterates until every off-diagonal magnitude
/// is at most 1e-12 * ||H||_F.
pub fn symmetric_eigen(h: &Matrix) -> Result<(Matrix, Vec<f64>)> {
    assert!(h.is_square());
    let n = h.rows();
    let mut a = h.clone();
    let mut u = Matrix::identity(n);
    let threshold = 1e-12 * h.frobenius();

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut max_off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                max_off = max_off.max(a[(p, q)].abs());
            }
        }
        if max_off <= threshold {
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

                let app = a[(p, p)];
                let aqq = a[(q, q)];
                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for i in 0..n {
                    if i != p && i != q {
                        let aip = a[(i, p)];
                        let aiq = a[(i, q)];
                        a[(i, p)] = c * aip - s * aiq;
                        a[(p, i)] = a[(i, p)];
                        a[(i, q)] = s * aip + c * aiq;
                        a[(q, i)] = a[(i, q)];
                    }
                }
                for i in 0..n {
                    let uip = u[(i, p)];
                    let uiq = u[(i, q)];
                    u[(i, p)] = c * uip - s * uiq;
                    u[(i, q)] = s * uip + c * uiq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence(JACOBI_MAX_SWEEPS));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap());
    let lambda: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let mut u_sorted = Matrix::zeros(n, n);
    for (new_j, &old_j) in order.iter().enumerate() {
        u_sorted.set_col(new_j, &u.col(old_j));
    }
    Ok((u_sorted, lambda))
}

/// Generalized eigenpairs of the symmetric positive definite pencil
/// (H1, H2): H1 v = lambda * H2 v.
///
/// Reduction: L = chol(H2), ordinary eigenproblem of L^-1 H1 L^-T, then
/// v = L^-T w scaled to unit Euclidean length. Eigenvalues ascending.
pub fn generalized_eigenpairs(h1: &Matrix, h2: &Matrix) -> Result<Vec<(f64, Vec<f64>)>> {
    assert_eq!(h1.rows(), h2.rows());
    let n = h1.rows();
    let l = cholesky(h2)?;
    // y = L^-1 H1 (column by column), then m = L^-1 y^T transposed back.
    let mut y = Matrix::zeros(n, n);
    for j in 0..n {
        y.set_col(j, &solve_lower(&l, &h1.col(j)));
    }
    let mut m = Matrix::zeros(n, n);
    for j in 0..n {
        // column j of m^T is L^-1 times row j of y
        let row: Vec<f64> = (0..n).map(|k| y[(j, k)]).collect();
        let solved = solve_lower(&l, &row);
        for k in 0..n {
            m[(j, k)] = solved[k];
        }
    }
    // round-off symmetrization before the Jacobi sweep
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
    let (w, lambda) = symmetric_eigen(&m)?;
    let mut pairs = Vec::with_capacity(n);
    for k in 0..n {
        let mut v = solve_lower_transpose(&l, &w.col(k));
        let len = norm(&v);
        for x in &mut v {
            *x /= len;
        }
        pairs.push((lambda[k], v));
    }
    Ok(pairs)
}

/// Ratio of largest to smallest eigenvalue of a symmetric positive definite matrix.
pub fn condition_number(h: &Matrix) -> Result<f64> {
    let (_, lambda) = symmetric_eigen(h)?;
    let min = lambda[0];
    let max = lambda[lambda.len() - 1];
    if min <= 0.0 {
        return Err(Error::NotPositiveDefinite { pivot: min, index: 0 });
    }
    Ok(max / min)
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant(m: &Matrix) -> f64 {
    assert!(m.is_square());
    let n = m.rows();
    let mut a = m.clone();
    let mut det = 1.0;
    for col in 0..n {
        let mut pivot = col;
        for r in (col + 1)..n {
            if a[(r, col)].abs() > a[(pivot, col)].abs() {
                pivot = r;
            }
        }
        if a[(pivot, col)] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for j in 0..n {
                let tmp = a[(col, j)];
                a[(col, j)] = a[(pivot, j)];
                a[(pivot, j)] = tmp;
            }
            det = -det;
        }
        det *= a[(col, col)];
        for r in (col + 1)..n {
            let factor = a[(r, col)] / a[(col, col)];
            for j in col..n {
                let sub = factor * a[(col, j)];
                a[(r, j)] -= sub;
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_spd(stream: &mut RandomStream, d: usize, spread: f64) -> Matrix {
        let u = sample_orthogonal(stream, d).unwrap();
        let values: Vec<f64> = (0..d)
            .map(|_| 1.0 + spread * stream.next_uniform())
            .collect();
        u.matmul(&Matrix::diagonal(&values)).matmul(&u.transpose())
    }

    #[test]
    fn gram_schmidt_identity_is_identity() {
        let q = gram_schmidt(&Matrix::identity(4), false).unwrap();
        assert_eq!(q.max_abs_diff(&Matrix::identity(4)), 0.0);
    }

    #[test]
    fn gram_schmidt_hand_example() {
        // columns (1,1) and (1,0)
        let m = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 0.0]]);
        let q = gram_schmidt(&m, false).unwrap();
        let r = 1.0 / 2.0f64.sqrt();
        let expected = Matrix::from_rows(&[vec![r, r], vec![r, -r]]);
        assert!(q.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn gram_schmidt_orthogonality_contract() {
        let mut s = RandomStream::from_seed(11);
        for _ in 0..20 {
            let raw = Matrix::from_row_major(10, 10, s.sample_gaussian_vector(100)).unwrap();
            let q = gram_schmidt(&raw, false).unwrap();
            let qtq = q.transpose().matmul(&q);
            assert!(qtq.max_abs_diff(&Matrix::identity(10)) <= 1e-12);
        }
    }

    #[test]
    fn gram_schmidt_rejects_dependent_columns() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0]]);
        assert!(matches!(
            gram_schmidt(&m, false),
            Err(Error::DegenerateColumns { .. })
        ));
    }

    #[test]
    fn sampled_orthogonal_has_unit_determinant() {
        let mut s = RandomStream::from_seed(5);
        for d in [2usize, 5, 10] {
            let q = sample_orthogonal(&mut s, d).unwrap();
            let qtq = q.transpose().matmul(&q);
            assert!(qtq.max_abs_diff(&Matrix::identity(d)) <= 1e-12);
            assert!((determinant(&q).abs() - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn sampled_rotation_angle_is_uniform() {
        // chi-square goodness of fit for the first-column angle of 2x2
        // samples; critical value for df=35 at p=0.01 is 57.342.
        let mut s = RandomStream::from_seed(123);
        let bins = 36;
        let mut counts = vec![0usize; bins];
        let n = 100_000;
        for _ in 0..n {
            let q = sample_orthogonal(&mut s, 2).unwrap();
            let angle = q[(1, 0)].atan2(q[(0, 0)]);
            let frac = (angle + std::f64::consts::PI) / (2.0 * std::f64::consts::PI);
            let bin = ((frac * bins as f64) as usize).min(bins - 1);
            counts[bin] += 1;
        }
        let expected = n as f64 / bins as f64;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        assert!(chi2 < 57.342, "chi2 = {chi2}");
    }

    #[test]
    fn cholesky_identity_and_diagonal() {
        let a = cholesky(&Matrix::identity(3)).unwrap();
        assert_eq!(a.max_abs_diff(&Matrix::identity(3)), 0.0);
        let h = Matrix::diagonal(&[4.0, 9.0]);
        let a = cholesky(&h).unwrap();
        assert!(a.max_abs_diff(&Matrix::diagonal(&[2.0, 3.0])) < 1e-15);
    }

    #[test]
    fn cholesky_reconstructs_random_spd() {
        let mut s = RandomStream::from_seed(17);
        for _ in 0..10 {
            let h = random_spd(&mut s, 8, 100.0);
            let a = cholesky(&h).unwrap();
            let back = a.matmul(&a.transpose());
            assert!(back.max_abs_diff(&h) <= 1e-10 * h.max_abs());
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let h = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(matches!(
            cholesky(&h),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn eigen_diagonal_permutation() {
        let (u, lambda) = symmetric_eigen(&Matrix::diagonal(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(lambda, vec![1.0, 2.0, 3.0]);
        // each column is a signed standard basis vector
        for j in 0..3 {
            let col = u.col(j);
            let big: Vec<usize> = (0..3).filter(|&i| col[i].abs() > 0.5).collect();
            assert_eq!(big.len(), 1);
            assert!((col[big[0]].abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn eigen_hand_2x2() {
        let h = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let (_, lambda) = symmetric_eigen(&h).unwrap();
        assert!((lambda[0] - 1.0).abs() < 1e-12);
        assert!((lambda[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn eigen_reconstructs_random_symmetric() {
        let mut s = RandomStream::from_seed(23);
        for _ in 0..10 {
            let mut h = Matrix::zeros(7, 7);
            for i in 0..7 {
                for j in 0..=i {
                    let v = s.next_gaussian();
                    h[(i, j)] = v;
                    h[(j, i)] = v;
                }
            }
            let (u, lambda) = symmetric_eigen(&h).unwrap();
            let back = u
                .matmul(&Matrix::diagonal(&lambda))
                .matmul(&u.transpose());
            assert!(back.max_abs_diff(&h) <= 1e-9 * h.max_abs().max(1.0));
            assert!(
                u.transpose()
                    .matmul(&u)
                    .max_abs_diff(&Matrix::identity(7))
                    <= 1e-12
            );
        }
    }

    #[test]
    fn generalized_diagonal_pencil() {
        let pairs =
            generalized_eigenpairs(&Matrix::identity(2), &Matrix::diagonal(&[1.0, 4.0])).unwrap();
        assert!((pairs[0].0 - 0.25).abs() < 1e-12);
        assert!((pairs[1].0 - 1.0).abs() < 1e-12);
        // ascending eigenvalues: 1/4 belongs to axis 1, 1 to axis 0
        assert!(pairs[0].1[1].abs() > 1.0 - 1e-12);
        assert!(pairs[1].1[0].abs() > 1.0 - 1e-12);
    }

    #[test]
    fn generalized_degenerate_pencil_is_all_ones() {
        let mut s = RandomStream::from_seed(31);
        let h = random_spd(&mut s, 5, 10.0);
        for (lambda, _) in generalized_eigenpairs(&h, &h).unwrap() {
            assert!((lambda - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn generalized_residual_and_h2_orthogonality() {
        let mut s = RandomStream::from_seed(37);
        for _ in 0..10 {
            let h1 = random_spd(&mut s, 6, 50.0);
            let h2 = random_spd(&mut s, 6, 50.0);
            let pairs = generalized_eigenpairs(&h1, &h2).unwrap();
            for (lambda, v) in &pairs {
                let h1v = h1.matvec(v);
                let h2v = h2.matvec(v);
                let resid: f64 = h1v
                    .iter()
                    .zip(&h2v)
                    .map(|(a, b)| (a - lambda * b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                assert!(resid <= 1e-8 * (norm(&h1v) + norm(&h2v)));
            }
            for j in 0..pairs.len() {
                for k in (j + 1)..pairs.len() {
                    if (pairs[j].0 - pairs[k].0).abs() > 1e-6 {
                        let h2vk = h2.matvec(&pairs[k].1);
                        assert!(dot(&pairs[j].1, &h2vk).abs() <= 1e-8 * h2.max_abs());
                    }
                }
            }
        }
    }

    #[test]
    fn condition_number_examples() {
        assert!((condition_number(&Matrix::identity(4)).unwrap() - 1.0).abs() < 1e-12);
        let c = condition_number(&Matrix::diagonal(&[1.0, 1000.0])).unwrap();
        assert!((c - 1000.0).abs() < 1e-9 * 1000.0);
    }
}
