//! Small dense symmetric matrices.
//!
//! The quadratic-form objectives and the dual-set projections need a handful
//! of operations on symmetric positive-definite matrices of tiny dimension:
//! matrix-vector products, linear solves, and the operator norm. A dedicated
//! linear-algebra dependency would be overkill, so this module carries a
//! direct implementation: Cholesky factorization for solves (which doubles as
//! the positive-definiteness test) and power iteration for the largest
//! eigenvalue, with a closed-form fallback for dimension <= 3.

use serde::{Deserialize, Serialize};

use crate::oracle::CoreError;
use crate::vector::Vector;

/// Relative tolerance for the symmetry check on construction.
const SYMMETRY_TOL: f64 = 1e-12;

/// A symmetric matrix stored densely in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Builds a matrix from rows, requiring it to be square, finite, and
    /// symmetric up to `1e-12` relative to its largest entry.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, CoreError> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(CoreError::NotSquare);
        }
        let mut data = Vec::with_capacity(n * n);
        for row in &rows {
            for &v in row {
                if !v.is_finite() {
                    return Err(CoreError::NonFinite { value: v });
                }
                data.push(v);
            }
        }
        let scale = data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            for j in (i + 1)..n {
                let gap = (data[i * n + j] - data[j * n + i]).abs();
                if gap > SYMMETRY_TOL * (1.0 + scale) {
                    return Err(CoreError::NotSymmetric { gap });
                }
            }
        }
        // Average the two triangles so downstream arithmetic sees an exactly
        // symmetric matrix even when the input had tolerated round-off skew.
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (data[i * n + j] + data[j * n + i]);
                data[i * n + j] = avg;
                data[j * n + i] = avg;
            }
        }
        Ok(SymMatrix { n, data })
    }

    /// Identity matrix of dimension `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = SymMatrix {
            n,
            data: vec![0.0; n * n],
        };
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn matvec(&self, x: &Vector) -> Vector {
        assert_eq!(x.len(), self.n, "matrix-vector dimension mismatch");
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            out[i] = row.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
        }
        Vector::new(out).expect("finite matvec")
    }

    /// `self + mu * I`.
    pub fn shifted(&self, mu: f64) -> SymMatrix {
        let mut out = self.clone();
        for i in 0..self.n {
            out.data[i * self.n + i] += mu;
        }
        out
    }

    /// Cholesky factor `L` with `self = L L^T`; fails iff the matrix is not
    /// positive definite.
    pub fn cholesky(&self) -> Result<Cholesky, CoreError> {
        let n = self.n;
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = self.data[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(CoreError::NotPositiveDefinite);
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Ok(Cholesky { n, l })
    }

    /// Solves `self * x = rhs` (positive-definite matrices only).
    pub fn solve(&self, rhs: &Vector) -> Result<Vector, CoreError> {
        Ok(self.cholesky()?.solve(rhs))
    }

    /// The quadratic form `<v, self^{-1} v>`.
    pub fn inverse_quad(&self, v: &Vector) -> Result<f64, CoreError> {
        Ok(v.dot(&self.solve(v)?))
    }

    /// Operator (spectral) norm.
    ///
    /// Power iteration with a deterministic start vector; for dimension <= 3
    /// the eigenvalues are also available in closed form and take over when
    /// the iteration stalls (clustered leading eigenvalues).
    pub fn op_norm(&self) -> f64 {
        let n = self.n;
        if let Some(exact) = self.max_abs_eig_small() {
            return exact;
        }
        let mut u: Vec<f64> = (0..n).map(|i| 1.0 + 1e-3 * i as f64).collect();
        let norm0 = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        u.iter_mut().for_each(|v| *v /= norm0);
        let mut lambda = 0.0f64;
        for _ in 0..20_000 {
            let v = self.matvec(&Vector::new(u.clone()).expect("finite"));
            let vn = v.norm();
            if vn == 0.0 {
                return self.max_abs_eig_small().unwrap_or(0.0);
            }
            let next: Vec<f64> = v.iter().map(|x| x / vn).collect();
            let new_lambda = vn;
            let done = (new_lambda - lambda).abs() <= 1e-13 * new_lambda.max(1.0);
            u = next;
            lambda = new_lambda;
            if done {
                return lambda;
            }
        }
        self.max_abs_eig_small().unwrap_or(lambda)
    }

    /// Largest absolute eigenvalue in closed form, dimension <= 3 only.
    fn max_abs_eig_small(&self) -> Option<f64> {
        let n = self.n;
        let d = &self.data;
        match n {
            1 => Some(d[0].abs()),
            2 => {
                let (a, b, c) = (d[0], d[1], d[3]);
                let half_tr = 0.5 * (a + c);
                let disc = (0.25 * (a - c) * (a - c) + b * b).sqrt();
                Some((half_tr + disc).abs().max((half_tr - disc).abs()))
            }
            3 => {
                // Symmetric 3x3 eigenvalues via the trigonometric form of the
                // characteristic cubic.
                let (a11, a12, a13) = (d[0], d[1], d[2]);
                let (a22, a23, a33) = (d[4], d[5], d[8]);
                let q = (a11 + a22 + a33) / 3.0;
                let p2 = (a11 - q).powi(2)
                    + (a22 - q).powi(2)
                    + (a33 - q).powi(2)
                    + 2.0 * (a12 * a12 + a13 * a13 + a23 * a23);
                if p2 <= 0.0 {
                    return Some(q.abs());
                }
                let p = (p2 / 6.0).sqrt();
                let b11 = (a11 - q) / p;
                let b22 = (a22 - q) / p;
                let b33 = (a33 - q) / p;
                let (b12, b13, b23) = (a12 / p, a13 / p, a23 / p);
                let det_b = b11 * (b22 * b33 - b23 * b23) - b12 * (b12 * b33 - b23 * b13)
                    + b13 * (b12 * b23 - b22 * b13);
                let r = (det_b / 2.0).clamp(-1.0, 1.0);
                let phi = r.acos() / 3.0;
                let eig1 = q + 2.0 * p * phi.cos();
                let eig3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
                Some(eig1.abs().max(eig3.abs()))
            }
            _ => None,
        }
    }
}

impl TryFrom<Vec<Vec<f64>>> for SymMatrix {
    type Error = CoreError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, CoreError> {
        SymMatrix::from_rows(rows)
    }
}

impl From<SymMatrix> for Vec<Vec<f64>> {
    fn from(m: SymMatrix) -> Vec<Vec<f64>> {
        (0..m.n)
            .map(|i| m.data[i * m.n..(i + 1) * m.n].to_vec())
            .collect()
    }
}

/// Lower-triangular Cholesky factor.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// Solves `L L^T x = rhs` by forward then backward substitution.
    pub fn solve(&self, rhs: &Vector) -> Vector {
        assert_eq!(rhs.len(), self.n, "solve dimension mismatch");
        let n = self.n;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = rhs[i];
            for k in 0..i {
                s -= self.l[i * n + k] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l[k * n + i] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
        Vector::new(x).expect("finite solve")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(entries: &[f64]) -> SymMatrix {
        let n = entries.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { entries[i] } else { 0.0 })
                    .collect()
            })
            .collect();
        SymMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn rejects_asymmetry_and_non_square() {
        assert!(SymMatrix::from_rows(vec![vec![1.0, 2.0], vec![0.0, 1.0]]).is_err());
        assert!(SymMatrix::from_rows(vec![vec![1.0, 2.0]]).is_err());
        assert!(SymMatrix::from_rows(vec![]).is_err());
    }

    #[test]
    fn cholesky_solve_recovers_solution() {
        let a = SymMatrix::from_rows(vec![vec![4.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let x = Vector::from_slice(&[2.0, -1.0]);
        let rhs = a.matvec(&x);
        let sol = a.solve(&rhs).unwrap();
        assert!(crate::vector::max_abs_diff(&sol, &x) < 1e-12);
    }

    #[test]
    fn cholesky_detects_indefinite() {
        let a = SymMatrix::from_rows(vec![vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(
            a.cholesky(),
            Err(CoreError::NotPositiveDefinite)
        ));
    }

    #[test]
    fn op_norm_matches_diagonal() {
        assert!((diag(&[8.0, 2.0]).op_norm() - 8.0).abs() < 1e-10);
        assert!((diag(&[3.0]).op_norm() - 3.0).abs() < 1e-12);
        assert!((diag(&[2.0, 7.0, 5.0]).op_norm() - 7.0).abs() < 1e-9);
    }

    #[test]
    fn op_norm_handles_clustered_eigenvalues() {
        // Equal eigenvalues stall plain power iteration ratios; the closed
        // form must take over for small dimensions.
        assert!((diag(&[4.0, 4.0]).op_norm() - 4.0).abs() < 1e-10);
        let a = SymMatrix::from_rows(vec![
            vec![2.0, 1.0, 0.0],
            vec![1.0, 2.0, 1.0],
            vec![0.0, 1.0, 2.0],
        ])
        .unwrap();
        let expected = 2.0 + std::f64::consts::SQRT_2;
        assert!((a.op_norm() - expected).abs() < 1e-9);
    }

    #[test]
    fn inverse_quad_diagonal() {
        let a = diag(&[8.0, 2.0]);
        let v = Vector::from_slice(&[2.0, 1.0]);
        assert!((a.inverse_quad(&v).unwrap() - (4.0 / 8.0 + 1.0 / 2.0)).abs() < 1e-14);
    }
}
