//! Dense linear algebra used by the likelihood hot path and the validity
//! checks.

use nalgebra::DMatrix;

/// Lower Cholesky factor stored row-major (row `i` holds `i + 1` used entries).
#[derive(Clone, Debug)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// Factors the symmetric matrix `a` (only the lower triangle is read),
    /// with `jitter` added to the diagonal. Returns `None` when a pivot is not
    /// strictly positive and finite.
    pub fn factor(a: &DMatrix<f64>, jitter: f64) -> Option<Self> {
        let n = a.nrows();
        debug_assert_eq!(n, a.ncols());
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let (ri, rj) = (&l[i * n..i * n + j], &l[j * n..j * n + j]);
                let dot: f64 = ri.iter().zip(rj).map(|(x, y)| x * y).sum();
                if i == j {
                    let d = a[(i, i)] + jitter - dot;
                    if !(d > 0.0) || !d.is_finite() {
                        return None;
                    }
                    l[i * n + i] = d.sqrt();
                } else {
                    l[i * n + j] = (a[(i, j)] - dot) / l[j * n + j];
                }
            }
        }
        Some(Self { n, l })
    }

    /// Tries `jitters` in order and returns the first successful factor with
    /// the jitter that was used.
    pub fn factor_escalating(a: &DMatrix<f64>, jitters: &[f64]) -> Option<(Self, f64)> {
        jitters
            .iter()
            .find_map(|&j| Self::factor(a, j).map(|c| (c, j)))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.l[i * self.n + j]
        }
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Solves `L x = b` in place.
    pub fn forward(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            let dot: f64 = row.iter().zip(&b[..i]).map(|(x, y)| x * y).sum();
            b[i] = (b[i] - dot) / self.l[i * n + i];
        }
    }

    /// Solves `Lᵀ x = b` in place.
    pub fn backward(&self, b: &mut [f64]) {
        let n = self.n;
        for i in (0..n).rev() {
            b[i] /= self.l[i * n + i];
            let bi = b[i];
            let row = &self.l[i * n..i * n + i];
            for (bk, lk) in b[..i].iter_mut().zip(row) {
                *bk -= lk * bi;
            }
        }
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.forward(&mut x);
        self.backward(&mut x);
        x
    }

    /// `log det A = 2 Σ log L_ii`.
    pub fn log_det(&self) -> f64 {
        (0..self.n).map(|i| self.l[i * self.n + i].ln()).sum::<f64>() * 2.0
    }
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return f64::INFINITY;
    }
    let sym = (a + a.transpose()) * 0.5;
    sym.symmetric_eigenvalues().min()
}

pub fn is_symmetric(a: &DMatrix<f64>, tol: f64) -> bool {
    a.nrows() == a.ncols()
        && (0..a.nrows()).all(|i| (0..i).all(|j| (a[(i, j)] - a[(j, i)]).abs() <= tol))
}

/// Helmert sub-matrix: an `n × (n-1)` matrix whose orthonormal columns span
/// the complement of the ones vector. Column `k` (0-based) is
/// `(1, …, 1, -(k+1), 0, …) / sqrt((k+1)(k+2))`.
pub fn helmert_basis(n: usize) -> DMatrix<f64> {
    let cols = n.saturating_sub(1);
    let mut a = DMatrix::zeros(n, cols);
    for k in 0..cols {
        let m = (k + 1) as f64;
        let norm = (m * (m + 1.0)).sqrt();
        for i in 0..=k {
            a[(i, k)] = 1.0 / norm;
        }
        a[(k + 1, k)] = -m / norm;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cholesky_reconstructs() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 2.0, 0.4, 2.0, 5.0, 1.0, 0.4, 1.0, 3.0]);
        let c = Cholesky::factor(&a, 0.0).unwrap();
        let l = c.to_matrix();
        assert_relative_eq!(&l * l.transpose(), a, epsilon = 1e-12);
        let x = c.solve(&[1.0, 2.0, 3.0]);
        let ax = &a * DMatrix::from_column_slice(3, 1, &x);
        assert_relative_eq!(ax[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(ax[2], 3.0, epsilon = 1e-12);
        assert_relative_eq!(c.log_det(), a.determinant().ln(), epsilon = 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite_and_jitter_rescues_singular() {
        let a = DMatrix::from_element(2, 2, 1.0);
        assert!(Cholesky::factor(&a, 0.0).is_none());
        let (_, j) = Cholesky::factor_escalating(&a, &[0.0, 1e-10, 1e-8]).unwrap();
        assert_eq!(j, 1e-10);
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(Cholesky::factor_escalating(&b, &[0.0, 1e-10, 1e-8, 1e-6]).is_none());
    }

    #[test]
    fn helmert_is_orthonormal_complement() {
        for n in 1..7 {
            let a = helmert_basis(n);
            let g = a.transpose() * &a;
            assert_relative_eq!(g, DMatrix::identity(n - 1, n - 1), epsilon = 1e-14);
            let ones = DMatrix::from_element(1, n, 1.0);
            assert!((ones * &a).iter().all(|v| v.abs() < 1e-14));
        }
    }
}
