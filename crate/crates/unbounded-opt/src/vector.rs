//! Dense vector arithmetic.
//!
//! Every algorithm in this crate runs in low dimension (the bundled problems
//! are 1-D to 3-D), so [`Vector`] is a thin wrapper over `Vec<f64>` with
//! exactly the operations the solvers need. Two rules hold throughout:
//!
//! * entries are finite `f64` — validated on construction from external data,
//!   and re-checked by the iterative solvers once per step;
//! * operand dimensions must agree — a mismatch is a programming error, not
//!   bad input, so the arithmetic panics instead of returning `Result`.

use serde::{Deserialize, Serialize};

use crate::oracle::CoreError;

/// A dense vector in `R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector(Vec<f64>);

impl Vector {
    /// Builds a vector, rejecting NaN and infinite entries.
    pub fn new(entries: Vec<f64>) -> Result<Self, CoreError> {
        if let Some(&bad) = entries.iter().find(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite { value: bad });
        }
        Ok(Vector(entries))
    }

    /// Builds a vector from a slice; panics on non-finite entries.
    ///
    /// Intended for literals and internal constants where a non-finite entry
    /// is unreachable.
    pub fn from_slice(entries: &[f64]) -> Self {
        Vector::new(entries.to_vec()).expect("finite entries")
    }

    /// The zero vector of dimension `n`.
    pub fn zeros(n: usize) -> Self {
        Vector(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    /// True iff every entry is finite.
    pub fn all_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    fn check_dim(&self, other: &Vector) {
        assert_eq!(
            self.len(),
            other.len(),
            "vector dimension mismatch: {} vs {}",
            self.len(),
            other.len()
        );
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        self.check_dim(other);
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Squared Euclidean distance to `other`.
    pub fn dist_sq(&self, other: &Vector) -> f64 {
        self.check_dim(other);
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn add(&self, other: &Vector) -> Vector {
        self.check_dim(other);
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        self.check_dim(other);
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, c: f64) -> Vector {
        Vector(self.0.iter().map(|a| c * a).collect())
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: f64, other: &Vector) -> Vector {
        self.check_dim(other);
        Vector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + c * b)
                .collect(),
        )
    }

    /// The explicit first-order update `self - eta * dir`.
    ///
    /// Gradient descent and mirror descent both step through this method so
    /// that their agreement in the Euclidean case is exact, not merely up to
    /// rounding differences from separately written expressions.
    pub fn step(&self, eta: f64, dir: &Vector) -> Vector {
        self.check_dim(dir);
        Vector(
            self.0
                .iter()
                .zip(&dir.0)
                .map(|(a, g)| a - eta * g)
                .collect(),
        )
    }

    /// `c1 * a + c2 * b`.
    pub fn combine(c1: f64, a: &Vector, c2: f64, b: &Vector) -> Vector {
        a.check_dim(b);
        Vector(
            a.0.iter()
                .zip(&b.0)
                .map(|(x, y)| c1 * x + c2 * y)
                .collect(),
        )
    }
}

impl std::ops::Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = CoreError;

    fn try_from(entries: Vec<f64>) -> Result<Self, CoreError> {
        Vector::new(entries)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Vec<f64> {
        v.0
    }
}

/// Largest entrywise absolute difference between two vectors.
pub fn max_abs_diff(a: &Vector, b: &Vector) -> f64 {
    a.check_dim(b);
    a.0.iter()
        .zip(&b.0)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_rejects_non_finite() {
        assert!(Vector::new(vec![1.0, f64::NAN]).is_err());
        assert!(Vector::new(vec![f64::INFINITY]).is_err());
        assert!(Vector::new(vec![1.0, -2.5]).is_ok());
    }

    #[test]
    fn arithmetic_basics() {
        let a = Vector::from_slice(&[1.0, 2.0]);
        let b = Vector::from_slice(&[3.0, -1.0]);
        assert_eq!(a.dot(&b), 1.0);
        assert_eq!(a.norm_sq(), 5.0);
        assert_eq!(a.add(&b).as_slice(), &[4.0, 1.0]);
        assert_eq!(a.sub(&b).as_slice(), &[-2.0, 3.0]);
        assert_eq!(a.add_scaled(2.0, &b).as_slice(), &[7.0, 0.0]);
        assert_eq!(Vector::combine(2.0, &a, -1.0, &b).as_slice(), &[-1.0, 5.0]);
        assert_eq!(a.dist_sq(&b), 13.0);
    }

    #[test]
    fn step_matches_manual_update() {
        let x = Vector::from_slice(&[1.0, -0.5]);
        let g = Vector::from_slice(&[0.25, 4.0]);
        let eta = 0.125;
        let stepped = x.step(eta, &g);
        assert_eq!(stepped.as_slice(), &[1.0 - eta * 0.25, -0.5 - eta * 4.0]);
    }

    #[test]
    #[should_panic(expected = "dimension mismatch")]
    fn dimension_mismatch_panics() {
        let a = Vector::from_slice(&[1.0]);
        let b = Vector::from_slice(&[1.0, 2.0]);
        let _ = a.dot(&b);
    }

    #[test]
    fn serde_round_trip_validates() {
        let v: Vector = serde_json::from_str("[1.5, 2.5]").unwrap();
        assert_eq!(v.as_slice(), &[1.5, 2.5]);
        assert!(serde_json::from_str::<Vector>("[1.0, null]").is_err());
        assert_eq!(serde_json::to_string(&v).unwrap(), "[1.5,2.5]");
    }
}
