//! Dense symmetric matrices for small dimensions.
//!
//! Everything here assumes `d` is at most a few hundred. The eigen-solver is
//! cyclic Jacobi, which is slow for large matrices but unconditionally stable
//! for symmetric input and gives orthonormal eigenvectors without extra work.

use thiserror::Error;

/// Largest `|a_ij - a_ji|` accepted when building a [`SymmetricMatrix`].
pub const ASYMMETRY_LIMIT: f64 = 1e-9;

/// Jacobi stops once the off-diagonal Frobenius norm drops below this
/// fraction of the input's Frobenius norm.
pub const JACOBI_RELATIVE_TOLERANCE: f64 = 1e-14;

/// Hard cap on full Jacobi sweeps.
pub const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatrixError {
    #[error("matrix dimension must be at least 1")]
    EmptyDimension,
    #[error("expected {expected} entries for a {dim}x{dim} matrix, got {got}")]
    WrongLength {
        dim: usize,
        expected: usize,
        got: usize,
    },
    #[error("entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("entries ({row}, {col}) and ({col}, {row}) differ by {gap:e}")]
    Asymmetric { row: usize, col: usize, gap: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("matrix is not positive-definite (pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("Jacobi iteration did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
}

/// A real symmetric `d x d` matrix stored in full row-major form.
///
/// Symmetry is enforced at construction: inputs are averaged with their
/// transpose, so `get(i, j) == get(j, i)` holds bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    /// Builds a matrix from `dim * dim` row-major entries.
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self, MatrixError> {
        if dim == 0 {
            return Err(MatrixError::EmptyDimension);
        }
        if data.len() != dim * dim {
            return Err(MatrixError::WrongLength {
                dim,
                expected: dim * dim,
                got: data.len(),
            });
        }
        for (k, v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(MatrixError::NonFinite {
                    row: k / dim,
                    col: k % dim,
                });
            }
        }
        let mut data = data;
        for i in 0..dim {
            for j in (i + 1)..dim {
                let upper = data[i * dim + j];
                let lower = data[j * dim + i];
                let gap = (upper - lower).abs();
                if gap > ASYMMETRY_LIMIT {
                    return Err(MatrixError::Asymmetric { row: i, col: j, gap });
                }
                let avg = 0.5 * (upper + lower);
                data[i * dim + j] = avg;
                data[j * dim + i] = avg;
            }
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MatrixError> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(MatrixError::WrongLength {
                    dim,
                    expected: dim * dim,
                    got: rows.iter().map(Vec::len).sum(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(dim, data)
    }

    /// Builds a matrix from the upper triangle of `f`; `f(i, j)` is only
    /// called with `i <= j`.
    pub fn from_upper_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(dim > 0, "matrix dimension must be at least 1");
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                data[i * dim + j] = v;
                data[j * dim + i] = v;
            }
        }
        Self { dim, data }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_upper_fn(dim, |_, _| 0.0)
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_upper_fn(dim, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self::from_upper_fn(diag.len(), |i, j| if i == j { diag[i] } else { 0.0 })
    }

    /// `scale * v vᵗ`.
    pub fn outer(v: &[f64], scale: f64) -> Self {
        Self::from_upper_fn(v.len(), |i, j| scale * v[i] * v[j])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn as_row_major(&self) -> &[f64] {
        &self.data
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    /// `a * self + b * other`.
    pub fn linear_combination(&self, a: f64, other: &Self, b: f64) -> Result<Self, MatrixError> {
        self.check_dim(other.dim)?;
        Ok(Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, MatrixError> {
        self.linear_combination(1.0, other, -1.0)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>, MatrixError> {
        self.check_dim(v.len())?;
        Ok((0..self.dim).map(|i| dot(self.row(i), v)).collect())
    }

    /// `vᵗ S v`.
    pub fn quadratic_form(&self, v: &[f64]) -> Result<f64, MatrixError> {
        Ok(dot(v, &self.mul_vec(v)?))
    }

    fn check_dim(&self, other: usize) -> Result<(), MatrixError> {
        if self.dim == other {
            Ok(())
        } else {
            Err(MatrixError::DimensionMismatch {
                left: self.dim,
                right: other,
            })
        }
    }

    /// Default positive-definiteness floor, `1e-12 * (1 + max|entry|)`.
    pub fn pd_tolerance(&self) -> f64 {
        1e-12 * (1.0 + self.max_abs())
    }

    /// Eigen-decomposition by cyclic Jacobi rotations.
    pub fn spectral(&self) -> Result<SpectralDecomposition, MatrixError> {
        let n = self.dim;
        let mut a = self.data.clone();
        let mut v = Self::identity(n).data;
        let scale = self.frobenius_norm();
        let threshold = JACOBI_RELATIVE_TOLERANCE * scale;

        let mut converged = false;
        for _ in 0..=JACOBI_MAX_SWEEPS {
            let off = off_diagonal_norm(&a, n);
            if off <= threshold {
                converged = true;
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[p * n + q];
                    if apq == 0.0 {
                        continue;
                    }
                    let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                    let t = if theta.abs() > 1e150 {
                        0.5 / theta
                    } else {
                        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                    };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    rotate(&mut a, n, p, q, c, s);
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
        if !converged {
            return Err(MatrixError::NoConvergence {
                sweeps: JACOBI_MAX_SWEEPS,
            });
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]).then(i.cmp(&j)));
        let eigenvalues = order.iter().map(|&i| a[i * n + i]).collect();
        let eigenvectors = order
            .iter()
            .map(|&col| (0..n).map(|k| v[k * n + col]).collect())
            .collect();
        Ok(SpectralDecomposition {
            eigenvalues,
            eigenvectors,
        })
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>, MatrixError> {
        Ok(self.spectral()?.eigenvalues)
    }

    pub fn min_eigenvalue(&self) -> Result<f64, MatrixError> {
        Ok(self.spectral()?.min_eigenvalue())
    }

    /// True iff the smallest eigenvalue exceeds `tol`. A failed
    /// decomposition counts as not positive-definite.
    pub fn is_positive_definite(&self, tol: f64) -> bool {
        debug_assert!(tol >= 0.0);
        matches!(self.min_eigenvalue(), Ok(m) if m > tol)
    }

    /// Determinant. Positive-definite matrices go through the log-space
    /// path; anything else is the signed product of eigenvalues.
    pub fn determinant(&self) -> Result<f64, MatrixError> {
        let eig = self.spectral()?;
        if eig.min_eigenvalue() > 0.0 {
            Ok(eig.log_determinant().exp())
        } else {
            Ok(eig.eigenvalues.iter().product())
        }
    }

    /// `log |S|` for a positive-definite matrix.
    pub fn log_determinant(&self) -> Result<f64, MatrixError> {
        let eig = self.spectral()?;
        let index = eig.eigenvalues.len() - 1;
        let min = eig.eigenvalues[index];
        if min <= 0.0 {
            return Err(MatrixError::NotPositiveDefinite { index, pivot: min });
        }
        Ok(eig.log_determinant())
    }

    pub fn cholesky(&self) -> Result<CholeskyFactor, MatrixError> {
        let n = self.dim;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut pivot = self.get(j, j);
            for k in 0..j {
                pivot -= l[j * n + k] * l[j * n + k];
            }
            if pivot <= 0.0 || !pivot.is_finite() {
                return Err(MatrixError::NotPositiveDefinite { index: j, pivot });
            }
            let ljj = pivot.sqrt();
            l[j * n + j] = ljj;
            for i in (j + 1)..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / ljj;
            }
        }
        Ok(CholeskyFactor { dim: n, data: l })
    }

    /// Solves `S w = v` for positive-definite `S`.
    pub fn solve(&self, v: &[f64]) -> Result<Vec<f64>, MatrixError> {
        self.check_dim(v.len())?;
        self.cholesky()?.solve(v)
    }

    /// Inverse of a positive-definite matrix.
    pub fn inverse(&self) -> Result<Self, MatrixError> {
        let chol = self.cholesky()?;
        let n = self.dim;
        let mut data = vec![0.0; n * n];
        let mut e = vec![0.0; n];
        for col in 0..n {
            e.iter_mut().for_each(|x| *x = 0.0);
            e[col] = 1.0;
            let w = chol.solve(&e)?;
            for row in 0..n {
                data[row * n + col] = w[row];
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (data[i * n + j] + data[j * n + i]);
                data[i * n + j] = avg;
                data[j * n + i] = avg;
            }
        }
        Ok(Self { dim: n, data })
    }
}

fn rotate(a: &mut [f64], n: usize, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..n {
        let akp = a[k * n + p];
        let akq = a[k * n + q];
        a[k * n + p] = c * akp - s * akq;
        a[k * n + q] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[p * n + k];
        let aqk = a[q * n + k];
        a[p * n + k] = c * apk - s * aqk;
        a[q * n + k] = s * apk + c * aqk;
    }
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[i * n + j] * a[i * n + j];
            }
        }
    }
    sum.sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Eigenpairs of a symmetric matrix, eigenvalues sorted descending.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Unit eigenvectors; `eigenvectors[i]` pairs with `eigenvalues[i]`.
    pub eigenvectors: Vec<Vec<f64>>,
}

impl SpectralDecomposition {
    pub fn min_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().expect("dim >= 1")
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn log_determinant(&self) -> f64 {
        self.eigenvalues.iter().map(|v| v.ln()).sum()
    }

    /// Coefficients of `v` in the eigenbasis.
    pub fn coordinates(&self, v: &[f64]) -> Vec<f64> {
        self.eigenvectors.iter().map(|p| dot(p, v)).collect()
    }

    /// `Σ λ_i p_i p_iᵗ`.
    pub fn reconstruct(&self) -> SymmetricMatrix {
        let n = self.eigenvalues.len();
        SymmetricMatrix::from_upper_fn(n, |i, j| {
            self.eigenvalues
                .iter()
                .zip(&self.eigenvectors)
                .map(|(l, p)| l * p[i] * p[j])
                .sum()
        })
    }
}

/// Lower-triangular `L` with `L Lᵗ = S`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    dim: usize,
    data: Vec<f64>,
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    /// `L z`.
    pub fn mul_vec(&self, z: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n)
            .map(|i| dot(&self.data[i * n..i * n + i + 1], &z[..=i]))
            .collect()
    }

    pub fn solve(&self, v: &[f64]) -> Result<Vec<f64>, MatrixError> {
        let n = self.dim;
        if v.len() != n {
            return Err(MatrixError::DimensionMismatch {
                left: n,
                right: v.len(),
            });
        }
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = v[i];
            for k in 0..i {
                s -= self.get(i, k) * y[k];
            }
            y[i] = s / self.get(i, i);
        }
        let mut w = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.get(k, i) * w[k];
            }
            w[i] = s / self.get(i, i);
        }
        Ok(w)
    }

    /// `L Lᵗ`.
    pub fn reconstruct(&self) -> SymmetricMatrix {
        let n = self.dim;
        SymmetricMatrix::from_upper_fn(n, |i, j| {
            (0..=i.min(j)).map(|k| self.get(i, k) * self.get(j, k)).sum()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn max_diff(a: &SymmetricMatrix, b: &SymmetricMatrix) -> f64 {
        a.as_row_major()
            .iter()
            .zip(b.as_row_major())
            .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    /// Small deterministic generator so the oracle tests do not depend on
    /// the crate's own sampling code.
    struct Lcg(u64);
    impl Lcg {
        fn next(&mut self) -> f64 {
            self.0 = self
                .0
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((self.0 >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        }
    }

    fn random_symmetric(dim: usize, rng: &mut Lcg) -> SymmetricMatrix {
        SymmetricMatrix::from_upper_fn(dim, |_, _| rng.next())
    }

    fn random_spd(dim: usize, rng: &mut Lcg) -> SymmetricMatrix {
        let m: Vec<f64> = (0..dim * dim).map(|_| rng.next()).collect();
        SymmetricMatrix::from_upper_fn(dim, |i, j| {
            let g: f64 = (0..dim).map(|k| m[k * dim + i] * m[k * dim + j]).sum();
            g + if i == j { 0.1 } else { 0.0 }
        })
    }

    fn dense_det(mut m: Vec<f64>, n: usize) -> f64 {
        // Gaussian elimination with partial pivoting.
        let mut det = 1.0;
        for c in 0..n {
            let p = (c..n)
                .max_by(|&a, &b| m[a * n + c].abs().total_cmp(&m[b * n + c].abs()))
                .unwrap();
            if m[p * n + c] == 0.0 {
                return 0.0;
            }
            if p != c {
                for k in 0..n {
                    m.swap(p * n + k, c * n + k);
                }
                det = -det;
            }
            det *= m[c * n + c];
            for r in (c + 1)..n {
                let f = m[r * n + c] / m[c * n + c];
                for k in c..n {
                    m[r * n + k] -= f * m[c * n + k];
                }
            }
        }
        det
    }

    fn char_poly(s: &SymmetricMatrix, lambda: f64) -> f64 {
        let n = s.dim();
        let mut m = s.as_row_major().to_vec();
        for i in 0..n {
            m[i * n + i] -= lambda;
        }
        dense_det(m, n)
    }

    /// Roots of det(S - λI) by sign-change scan plus bisection.
    fn bisection_eigenvalues(s: &SymmetricMatrix) -> Vec<f64> {
        let bound = s.frobenius_norm() + 1.0;
        let steps = 200_000;
        let h = 2.0 * bound / steps as f64;
        let mut roots = Vec::new();
        let mut lo = -bound;
        let mut f_lo = char_poly(s, lo);
        for k in 1..=steps {
            let hi = -bound + k as f64 * h;
            let f_hi = char_poly(s, hi);
            if f_lo.signum() != f_hi.signum() {
                let (mut a, mut b, mut fa) = (lo, hi, f_lo);
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    let fm = char_poly(s, mid);
                    if fm.signum() == fa.signum() {
                        a = mid;
                        fa = fm;
                    } else {
                        b = mid;
                    }
                    if b - a < 1e-15 {
                        break;
                    }
                }
                roots.push(0.5 * (a + b));
            }
            lo = hi;
            f_lo = f_hi;
        }
        roots.sort_by(|a, b| b.total_cmp(a));
        roots
    }

    fn cofactor_det(m: &[Vec<f64>]) -> f64 {
        let n = m.len();
        if n == 1 {
            return m[0][0];
        }
        (0..n)
            .map(|col| {
                let minor: Vec<Vec<f64>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|&(j, _)| j != col)
                            .map(|(_, v)| *v)
                            .collect()
                    })
                    .collect();
                let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
                sign * m[0][col] * cofactor_det(&minor)
            })
            .sum()
    }

    #[test]
    fn rejects_asymmetric_input() {
        let err = SymmetricMatrix::from_rows(&[vec![1.0, 2.0], vec![2.1, 1.0]]).unwrap_err();
        assert!(matches!(err, MatrixError::Asymmetric { row: 0, col: 1, .. }));
        let ok = SymmetricMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0 + 1e-12, 1.0]]).unwrap();
        assert_eq!(ok.get(0, 1), ok.get(1, 0));
        assert!(SymmetricMatrix::from_row_major(0, vec![]).is_err());
        assert!(SymmetricMatrix::from_row_major(2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn spectral_identity() {
        let eig = SymmetricMatrix::identity(3).spectral().unwrap();
        assert_eq!(eig.eigenvalues, vec![1.0, 1.0, 1.0]);
        for (i, p) in eig.eigenvectors.iter().enumerate() {
            assert!((dot(p, p) - 1.0).abs() < 1e-12);
            for q in &eig.eigenvectors[i + 1..] {
                assert!(dot(p, q).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn spectral_two_by_two() {
        let s = SymmetricMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let eig = s.spectral().unwrap();
        assert!((eig.eigenvalues[0] - 3.0).abs() < 1e-14);
        assert!((eig.eigenvalues[1] - 1.0).abs() < 1e-14);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let p0 = &eig.eigenvectors[0];
        let p1 = &eig.eigenvectors[1];
        assert!((p0[0].abs() - r).abs() < 1e-12 && (p0[0] - p0[1]).abs() < 1e-12);
        assert!((p1[0].abs() - r).abs() < 1e-12 && (p1[0] + p1[1]).abs() < 1e-12);
    }

    #[test]
    fn spectral_matches_characteristic_polynomial_roots() {
        for seed in [3u64, 17, 2024] {
            let mut rng = Lcg(seed);
            let s = random_symmetric(6, &mut rng);
            let expected = bisection_eigenvalues(&s);
            assert_eq!(expected.len(), 6, "seed {seed}: oracle lost a root");
            let eig = s.spectral().unwrap();
            for (got, want) in eig.eigenvalues.iter().zip(&expected) {
                assert!((got - want).abs() < 1e-9, "seed {seed}: {got} vs {want}");
            }
            let err = max_diff(&eig.reconstruct(), &s);
            assert!(err <= 1e-10 * (1.0 + s.max_abs()));
        }
    }

    #[test]
    fn min_eigenvalue_examples() {
        assert_eq!(SymmetricMatrix::identity(2).min_eigenvalue().unwrap(), 1.0);
        let d = SymmetricMatrix::from_diagonal(&[0.01, 3.0]);
        assert_eq!(d.min_eigenvalue().unwrap(), 0.01);
    }

    #[test]
    fn positive_definiteness_examples() {
        assert!(SymmetricMatrix::identity(4).is_positive_definite(0.0));
        assert!(!SymmetricMatrix::from_diagonal(&[1.0, -1e-3]).is_positive_definite(0.0));
        assert!(!SymmetricMatrix::from_diagonal(&[1e-13, 1.0]).is_positive_definite(1e-12));
        assert!(!SymmetricMatrix::zeros(3).is_positive_definite(0.0));
    }

    #[test]
    fn determinant_examples() {
        assert!((SymmetricMatrix::identity(5).determinant().unwrap() - 1.0).abs() < 1e-15);
        let d = SymmetricMatrix::from_diagonal(&[2.0, 3.0]);
        assert!((d.determinant().unwrap() - 6.0).abs() < 1e-14);
        let signed = SymmetricMatrix::from_diagonal(&[2.0, -3.0]);
        assert!((signed.determinant().unwrap() + 6.0).abs() < 1e-14);
        assert!(signed.log_determinant().is_err());
    }

    #[test]
    fn determinant_matches_cofactor_expansion() {
        for seed in [1u64, 9, 77] {
            let mut rng = Lcg(seed);
            for dim in 1..=6 {
                let s = random_spd(dim, &mut rng);
                let want = cofactor_det(&s.to_rows());
                let got = s.determinant().unwrap();
                assert!(((got - want) / want).abs() < 1e-9, "{got} vs {want}");
            }
        }
    }

    #[test]
    fn log_determinant_avoids_underflow() {
        let s = SymmetricMatrix::from_diagonal(&[1e-200; 6]);
        let ld = s.log_determinant().unwrap();
        assert!((ld - 6.0 * (1e-200f64).ln()).abs() < 1e-9);
    }

    #[test]
    fn cholesky_examples() {
        let l = SymmetricMatrix::identity(3).cholesky().unwrap();
        assert_eq!(l.reconstruct(), SymmetricMatrix::identity(3));
        let l = SymmetricMatrix::from_diagonal(&[4.0, 9.0]).cholesky().unwrap();
        assert_eq!((l.get(0, 0), l.get(1, 1), l.get(1, 0)), (2.0, 3.0, 0.0));
        let err = SymmetricMatrix::from_diagonal(&[1.0, -1.0]).cholesky().unwrap_err();
        assert!(matches!(err, MatrixError::NotPositiveDefinite { index: 1, .. }));
    }

    #[test]
    fn cholesky_reconstructs_random_spd() {
        let mut rng = Lcg(5);
        for dim in 1..=8 {
            let s = random_spd(dim, &mut rng);
            let l = s.cholesky().unwrap();
            assert!(max_diff(&l.reconstruct(), &s) <= 1e-10);
        }
    }

    #[test]
    fn solve_examples() {
        let v = vec![0.3, -1.2, 4.0];
        assert_eq!(SymmetricMatrix::identity(3).solve(&v).unwrap(), v);
        let w = SymmetricMatrix::from_diagonal(&[2.0, 4.0])
            .solve(&[2.0, 4.0])
            .unwrap();
        assert!(w.iter().all(|x| (x - 1.0).abs() < 1e-15));
        assert!(SymmetricMatrix::from_diagonal(&[1.0, 0.0])
            .solve(&[1.0, 1.0])
            .is_err());
    }

    #[test]
    fn solve_residual_random_spd() {
        let mut rng = Lcg(11);
        for dim in 1..=8 {
            let s = random_spd(dim, &mut rng);
            let v: Vec<f64> = (0..dim).map(|_| rng.next()).collect();
            let w = s.solve(&v).unwrap();
            let r = s.mul_vec(&w).unwrap();
            let res: f64 = r.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let norm: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            assert!(res <= 1e-9 * norm);
        }
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let mut rng = Lcg(21);
        let s = random_spd(5, &mut rng);
        let inv = s.inverse().unwrap();
        for j in 0..5 {
            let col: Vec<f64> = (0..5).map(|i| inv.get(i, j)).collect();
            let e = s.mul_vec(&col).unwrap();
            for (i, v) in e.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-10);
            }
        }
    }

    fn spd_strategy(dim: usize) -> impl Strategy<Value = SymmetricMatrix> {
        prop::collection::vec(-1.0f64..1.0, dim * dim).prop_map(move |m| {
            SymmetricMatrix::from_upper_fn(dim, |i, j| {
                let g: f64 = (0..dim).map(|k| m[k * dim + i] * m[k * dim + j]).sum();
                g + if i == j { 0.05 } else { 0.0 }
            })
        })
    }

    fn product(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = a.len();
        (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect())
            .collect()
    }

    proptest! {
        #[test]
        fn spectral_invariants_hold(
            dim in 1usize..=7,
            entries in prop::collection::vec(-2.0f64..2.0, 49),
        ) {
            let s = SymmetricMatrix::from_upper_fn(dim, |i, j| entries[i * 7 + j]);
            let eig = s.spectral().unwrap();
            prop_assert!(max_diff(&eig.reconstruct(), &s) <= 1e-10 * (1.0 + s.max_abs()));
            for w in eig.eigenvalues.windows(2) {
                prop_assert!(w[0] >= w[1]);
            }
            for (i, p) in eig.eigenvectors.iter().enumerate() {
                prop_assert!((dot(p, p).sqrt() - 1.0).abs() <= 1e-12);
                for q in &eig.eigenvectors[i + 1..] {
                    prop_assert!(dot(p, q).abs() <= 1e-10);
                }
            }
        }

        #[test]
        fn determinant_equals_exp_log_eigenvalues(s in (1usize..=6).prop_flat_map(spd_strategy)) {
            let det = s.determinant().unwrap();
            let prod: f64 = s.eigenvalues().unwrap().iter().product();
            prop_assert!(((det - prod) / prod).abs() <= 1e-9);
        }

        #[test]
        fn symmetric_triple_product_is_positive_definite(
            (a, b) in (1usize..=6).prop_flat_map(|d| (spd_strategy(d), spd_strategy(d)))
        ) {
            // C = A makes ABC = ABA symmetric.
            let ra = a.to_rows();
            let abc = product(&product(&ra, &b.to_rows()), &ra);
            let m = SymmetricMatrix::from_rows(&abc).unwrap();
            prop_assert!(m.min_eigenvalue().unwrap() > 0.0);
        }

        #[test]
        fn eigenvalues_are_orthogonally_invariant(
            dim in 2usize..=6,
            entries in prop::collection::vec(-1.0f64..1.0, 36),
            angles in prop::collection::vec(0.0f64..std::f64::consts::TAU, 15),
        ) {
            let s = SymmetricMatrix::from_upper_fn(dim, |i, j| entries[i * 6 + j]);
            // Q as a product of Givens rotations.
            let mut q: Vec<Vec<f64>> = SymmetricMatrix::identity(dim).to_rows();
            let mut k = 0;
            for p in 0..dim {
                for r in (p + 1)..dim {
                    let (sn, cs) = angles[k % angles.len()].sin_cos();
                    k += 1;
                    for row in q.iter_mut() {
                        let (a, b) = (row[p], row[r]);
                        row[p] = cs * a - sn * b;
                        row[r] = sn * a + cs * b;
                    }
                }
            }
            let qt: Vec<Vec<f64>> = (0..dim).map(|i| (0..dim).map(|j| q[j][i]).collect()).collect();
            let rotated = product(&product(&qt, &s.to_rows()), &q);
            let rotated = SymmetricMatrix::from_rows(&rotated).unwrap();
            let e1 = s.eigenvalues().unwrap();
            let e2 = rotated.eigenvalues().unwrap();
            for (x, y) in e1.iter().zip(&e2) {
                prop_assert!((x - y).abs() <= 1e-9);
            }
        }
    }
}
