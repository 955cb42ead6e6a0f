//! Dense small-n linear algebra.
//!
//! Everything here works on a row-major [`Matrix`] of `f64` and plain slices
//! for vectors. Solves and determinants go through a partial-pivoting LU;
//! singular values come from a one-sided Jacobi sweep.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Relative pivot threshold below which a factorization is declared singular.
pub const SINGULAR_PIVOT_TOL: f64 = 1e-13;

/// Magnitude of `1 + v'A^-1 u` at or below which a rank-one update is rejected.
pub const RANK_ONE_DENOM_TOL: f64 = 1e-12;

const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major entries. Every entry must be finite.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                row: k / cols.max(1),
                col: k % cols.max(1),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != n_cols {
                return Err(Error::DimensionMismatch(format!(
                    "row {} has {} entries, expected {}",
                    i,
                    r.len(),
                    n_cols
                )));
            }
            data.extend_from_slice(r);
        }
        Matrix::new(n_rows, n_cols, data)
    }

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

    pub fn diag(d: &[f64]) -> Self {
        let mut m = Matrix::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    /// Column vector `u` times row vector `v'`.
    pub fn outer(u: &[f64], v: &[f64]) -> Self {
        let mut m = Matrix::zeros(u.len(), v.len());
        for (i, &ui) in u.iter().enumerate() {
            for (j, &vj) in v.iter().enumerate() {
                m[(i, j)] = ui * vj;
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

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
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
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
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

    /// `A x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "mul_vec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `x' A`, returned as a plain vector.
    pub fn vec_mul(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, x.len(), "vec_mul dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += xi * a;
            }
        }
        out
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    /// Multiplies row `i` by `d[i]`, i.e. `diag(d) * self`.
    pub fn scale_rows(&self, d: &[f64]) -> Matrix {
        assert_eq!(self.rows, d.len());
        let mut out = self.clone();
        for (i, &di) in d.iter().enumerate() {
            for x in &mut out.data[i * self.cols..(i + 1) * self.cols] {
                *x *= di;
            }
        }
        out
    }

    /// Multiplies column `j` by `d[j]`, i.e. `self * diag(d)`.
    pub fn scale_cols(&self, d: &[f64]) -> Matrix {
        assert_eq!(self.cols, d.len());
        let mut out = self.clone();
        for i in 0..self.rows {
            for (j, &dj) in d.iter().enumerate() {
                out[(i, j)] *= dj;
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).iter().sum()).collect()
    }

    fn zip_with(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "elementwise dimension mismatch"
        );
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
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

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// LU factorization with partial pivoting, `P A = L U` stored in place.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
    swaps: usize,
    scale: f64,
}

impl Lu {
    /// Factors a square matrix. Never fails on singular input; a zero pivot
    /// column is skipped and the singularity is reported by [`Lu::solve`].
    pub fn factor(a: &Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "LU needs a square matrix, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut swaps = 0;
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| lu[(i, k)].abs().total_cmp(&lu[(j, k)].abs()))
                .unwrap_or(k);
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                swaps += 1;
            }
            let pivot = lu[(k, k)];
            if pivot == 0.0 {
                continue;
            }
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        lu[(i, j)] -= f * lu[(k, j)];
                    }
                }
            }
        }
        Ok(Lu {
            lu,
            perm,
            swaps,
            scale: a.max_abs(),
        })
    }

    pub fn determinant(&self) -> f64 {
        let n = self.lu.rows();
        let sign = if self.swaps % 2 == 0 { 1.0 } else { -1.0 };
        (0..n).fold(sign, |d, i| d * self.lu[(i, i)])
    }

    fn check_pivots(&self) -> Result<()> {
        let tol = SINGULAR_PIVOT_TOL * self.scale;
        for k in 0..self.lu.rows() {
            let pivot = self.lu[(k, k)];
            if !(pivot.abs() > tol) {
                return Err(Error::SingularMatrix { column: k, pivot });
            }
        }
        Ok(())
    }

    pub fn solve_vec(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.check_pivots()?;
        let n = self.lu.rows();
        if b.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side has length {}, expected {}",
                b.len(),
                n
            )));
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[(i, i)];
        }
        Ok(x)
    }

    pub fn solve(&self, b: &Matrix) -> Result<Matrix> {
        if b.rows() != self.lu.rows() {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side has {} rows, expected {}",
                b.rows(),
                self.lu.rows()
            )));
        }
        let bt = b.transpose();
        let mut xt = Matrix::zeros(b.cols(), b.rows());
        for j in 0..b.cols() {
            let col = self.solve_vec(bt.row(j))?;
            xt.data[j * b.rows()..(j + 1) * b.rows()].copy_from_slice(&col);
        }
        Ok(xt.transpose())
    }
}

/// Solves `A X = B` for square `A`.
pub fn solve_linear(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    Lu::factor(a)?.solve(b)
}

pub fn solve_vec(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    Lu::factor(a)?.solve_vec(b)
}

pub fn inverse(a: &Matrix) -> Result<Matrix> {
    solve_linear(a, &Matrix::identity(a.rows()))
}

/// Determinant via LU; exactly zero when elimination meets a zero pivot.
pub fn determinant(a: &Matrix) -> Result<f64> {
    Ok(Lu::factor(a)?.determinant())
}

/// All singular values in decreasing order (one-sided Jacobi on the columns).
///
/// Orthogonalizing the columns of `A` is the implicit form of diagonalizing
/// `A'A`; it keeps full relative accuracy on tiny singular values, which an
/// explicit eigen-decomposition of `A'A` loses to squaring.
pub fn singular_values(a: &Matrix) -> Vec<f64> {
    let m = a.rows();
    let n = a.cols();
    // columns stored contiguously
    let mut cols: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..m).map(|i| a[(i, j)]).collect())
        .collect();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let sign = if zeta >= 0.0 { 1.0 } else { -1.0 };
                let t = sign / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = cols.split_at_mut(q);
                for (x, y) in left[p].iter_mut().zip(right[0].iter_mut()) {
                    let (xp, yq) = (*x, *y);
                    *x = c * xp - s * yq;
                    *y = s * xp + c * yq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = cols.iter().map(|c| norm2(c)).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Largest singular value, the operator 2-norm.
pub fn spectral_norm(a: &Matrix) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

pub fn min_singular_value(a: &Matrix) -> f64 {
    singular_values(a).last().copied().unwrap_or(0.0)
}

/// `(A + u v')^-1` from `A^-1` by the Sherman-Morrison formula.
pub fn rank_one_update_inverse(a_inv: &Matrix, u: &[f64], v: &[f64]) -> Result<Matrix> {
    let n = a_inv.rows();
    if !a_inv.is_square() || u.len() != n || v.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "rank-one update needs n x n inverse and length-n vectors (n = {})",
            n
        )));
    }
    let ainv_u = a_inv.mul_vec(u);
    let vt_ainv = a_inv.vec_mul(v);
    let denom = 1.0 + dot(v, &ainv_u);
    if denom.abs() <= RANK_ONE_DENOM_TOL {
        return Err(Error::DenominatorZero(denom.abs()));
    }
    Ok(a_inv.sub(&Matrix::outer(&ainv_u, &vt_ainv).scale(1.0 / denom)))
}

/// `A^-1 - eps A^-1 X A^-1`, the first-order expansion of `(A + eps X)^-1`.
pub fn first_order_inverse(a: &Matrix, x: &Matrix, eps: f64) -> Result<Matrix> {
    let a_inv = inverse(a)?;
    let correction = a_inv.matmul(x).matmul(&a_inv).scale(eps);
    Ok(a_inv.sub(&correction))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
        let data = (0..r * c).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Matrix::new(r, c, data).unwrap()
    }

    fn well_conditioned(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
        random_matrix(rng, n, n).add(&Matrix::identity(n).scale(n as f64))
    }

    // Laplace expansion along the first row.
    fn cofactor_det(a: &Matrix) -> f64 {
        let n = a.rows();
        if n == 1 {
            return a[(0, 0)];
        }
        (0..n)
            .map(|j| {
                let minor: Vec<Vec<f64>> = (1..n)
                    .map(|i| (0..n).filter(|&c| c != j).map(|c| a[(i, c)]).collect())
                    .collect();
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * a[(0, j)] * cofactor_det(&Matrix::from_rows(&minor).unwrap())
            })
            .sum()
    }

    fn cramer_solve(a: &Matrix, b: &[f64]) -> Vec<f64> {
        let d = cofactor_det(a);
        (0..a.cols())
            .map(|j| {
                let mut aj = a.clone();
                for i in 0..a.rows() {
                    aj[(i, j)] = b[i];
                }
                cofactor_det(&aj) / d
            })
            .collect()
    }

    fn power_iteration_norm(a: &Matrix) -> f64 {
        let ata = a.transpose().matmul(a);
        let mut x = vec![1.0; a.cols()];
        let mut lambda = 0.0;
        for _ in 0..20_000 {
            let y = ata.mul_vec(&x);
            let ny = norm2(&y);
            if ny == 0.0 {
                return 0.0;
            }
            lambda = ny / norm2(&x);
            x = y.iter().map(|v| v / ny).collect();
        }
        lambda.sqrt()
    }

    // Classical cyclic Jacobi for symmetric matrices; returns eigenvalues.
    fn symmetric_eigenvalues(s: &Matrix) -> Vec<f64> {
        let n = s.rows();
        let mut a = s.clone();
        for _ in 0..200 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)].powi(2))
                .sum();
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[(p, q)].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (akp, akq) = (a[(k, p)], a[(k, q)]);
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
        a.sub(b).max_abs()
    }

    #[test]
    fn rejects_non_finite_and_bad_shapes() {
        assert_eq!(
            Matrix::new(1, 2, vec![1.0, f64::NAN]),
            Err(Error::NonFinite { row: 0, col: 1 })
        );
        assert!(Matrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn solve_identity_returns_rhs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = random_matrix(&mut rng, 3, 2);
        let x = solve_linear(&Matrix::identity(3), &b).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn solve_diagonal() {
        let a = Matrix::diag(&[2.0, 4.0]);
        let x = solve_linear(&a, &Matrix::identity(2)).unwrap();
        assert_eq!(x, Matrix::diag(&[0.5, 0.25]));
    }

    #[test]
    fn solve_matches_cramer_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let a = well_conditioned(&mut rng, 4);
            let b: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x = solve_vec(&a, &b).unwrap();
            let oracle = cramer_solve(&a, &b);
            for (xi, oi) in x.iter().zip(&oracle) {
                assert!((xi - oi).abs() < 1e-12, "{} vs {}", xi, oi);
            }
            let r: Vec<f64> = a.mul_vec(&x).iter().zip(&b).map(|(p, q)| p - q).collect();
            assert!(norm_inf(&r) <= 1e-10 * norm_inf(&b).max(1.0));
        }
    }

    #[test]
    fn singular_solve_is_reported() {
        let a = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert!(matches!(
            solve_linear(&a, &Matrix::identity(2)),
            Err(Error::SingularMatrix { .. })
        ));
        assert!(matches!(
            solve_linear(&Matrix::zeros(2, 2), &Matrix::identity(2)),
            Err(Error::SingularMatrix { .. })
        ));
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..8 {
            let a = well_conditioned(&mut rng, n);
            let inv = inverse(&a).unwrap();
            assert!(max_abs_diff(&a.matmul(&inv), &Matrix::identity(n)) <= 1e-9);
        }
    }

    #[test]
    fn determinant_cases() {
        assert_eq!(determinant(&Matrix::identity(3)).unwrap(), 1.0);
        assert_eq!(determinant(&Matrix::diag(&[2.0, 3.0, 4.0])).unwrap(), 24.0);
        let sing = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert_eq!(determinant(&sing).unwrap(), 0.0);
        let swap = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert_eq!(determinant(&swap).unwrap(), -1.0);
    }

    #[test]
    fn determinant_matches_cofactor_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let a = random_matrix(&mut rng, 3, 3);
            let d = determinant(&a).unwrap();
            let oracle = cofactor_det(&a);
            assert!((d - oracle).abs() <= 1e-10 * oracle.abs().max(1e-3), "{} {}", d, oracle);
        }
    }

    #[test]
    fn spectral_norm_cases() {
        assert!((spectral_norm(&Matrix::identity(4)) - 1.0).abs() < 1e-15);
        assert!((spectral_norm(&Matrix::diag(&[3.0, -5.0])) - 5.0).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let a = random_matrix(&mut rng, 3, 3);
            let oracle = power_iteration_norm(&a);
            assert!((spectral_norm(&a) - oracle).abs() < 1e-8);
        }
    }

    #[test]
    fn min_singular_value_cases() {
        assert!((min_singular_value(&Matrix::identity(3)) - 1.0).abs() < 1e-15);
        let sing = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert!(min_singular_value(&sing) <= 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let a = well_conditioned(&mut rng, 4);
            let ata = a.transpose().matmul(&a);
            let oracle = symmetric_eigenvalues(&ata)[0].sqrt();
            assert!((min_singular_value(&a) - oracle).abs() < 1e-10);
            assert!(spectral_norm(&a) >= min_singular_value(&a));
        }
    }

    #[test]
    fn sherman_morrison_cases() {
        let inv = Matrix::identity(3);
        assert_eq!(rank_one_update_inverse(&inv, &[0.0; 3], &[1.0, 2.0, 3.0]).unwrap(), inv);

        let e1 = [1.0, 0.0, 0.0];
        let r = rank_one_update_inverse(&inv, &e1, &e1).unwrap();
        assert_eq!(r, Matrix::diag(&[0.5, 1.0, 1.0]));

        // A = I, u = -e1, v = e1 makes A + uv' singular.
        assert!(matches!(
            rank_one_update_inverse(&inv, &[-1.0, 0.0, 0.0], &e1),
            Err(Error::DenominatorZero(_))
        ));
    }

    #[test]
    fn sherman_morrison_product_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let a = well_conditioned(&mut rng, 4);
            let u: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let upd = rank_one_update_inverse(&inverse(&a).unwrap(), &u, &v).unwrap();
            let a_uv = a.add(&Matrix::outer(&u, &v));
            assert!(max_abs_diff(&a_uv.matmul(&upd), &Matrix::identity(4)) <= 1e-9);
        }
    }

    #[test]
    fn first_order_inverse_scalar_case() {
        let a = Matrix::identity(2);
        assert_eq!(first_order_inverse(&a, &a, 0.0).unwrap(), a);
        let approx = first_order_inverse(&a, &a, 0.1).unwrap();
        assert!((approx[(0, 0)] - 0.9).abs() < 1e-15);
        let err = (approx[(0, 0)] - 1.0 / 1.1).abs();
        assert!((err - 0.1f64.powi(2) / 1.1).abs() < 1e-15);
    }

    #[test]
    fn first_order_inverse_error_is_quadratic() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = well_conditioned(&mut rng, 3);
        let x = random_matrix(&mut rng, 3, 3);
        let eps = [1e-1, 1e-2, 1e-3];
        let errs: Vec<f64> = eps
            .iter()
            .map(|&e| {
                let exact = inverse(&a.add(&x.scale(e))).unwrap();
                spectral_norm(&first_order_inverse(&a, &x, e).unwrap().sub(&exact))
            })
            .collect();
        let slope = (errs[0].ln() - errs[2].ln()) / (eps[0].ln() - eps[2].ln());
        assert!(slope >= 1.9, "slope {}", slope);
    }
}
