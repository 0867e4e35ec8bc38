//! First-order oracles for smooth convex functions, and the dual divergence.
//!
//! An [`ObjectiveOracle`] exposes `f` through evaluations and gradients,
//! together with the structural constants the solvers consume: the smoothness
//! constant `L` (the gradient is `L`-Lipschitz), an optional uniform upper
//! bound `M` on the convex conjugate `f*`, and an optional closed-form
//! description of `cl(dom f*)` — the closure of the set of slopes `f` attains.
//!
//! The central scalar quantity is the dual divergence
//!
//! ```text
//! D_f(x, p) = f(x) + f*(p) - <p, x>,
//! ```
//!
//! which is nonnegative and, for `p = grad f(y)`, collapses to the Bregman
//! form `f(x) - f(y) - <grad f(y), x - y>` — computable from two oracle calls
//! without knowing `f*`. When `f` is unbounded below, `D_f(x0, p*)` at the
//! minimum-norm point `p*` of `cl(dom f*)` is exactly the gap
//! `g(x0) - inf g` of the shifted function `g = f - <p*, .>`, and it is the
//! constant every convergence bound in this crate is expressed in.

use thiserror::Error;

use crate::dualgeom::DualSetDescription;
use crate::vector::Vector;

/// Errors from vector/matrix construction and divergence evaluation.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("non-finite value {value} where a finite number is required")]
    NonFinite { value: f64 },
    #[error("matrix is not square")]
    NotSquare,
    #[error("matrix is not symmetric (gap {gap:.3e})")]
    NotSymmetric { gap: f64 },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("Bregman divergence is negative ({value:.3e}): oracle is not convex at the sampled pair")]
    NegativeDivergence { value: f64 },
    #[error("oracle declares no upper bound on its conjugate")]
    MissingConjugateBound,
}

/// First-order access to an `L`-smooth convex function on `R^n`.
pub trait ObjectiveOracle: Send + Sync {
    /// Ambient dimension `n`.
    fn dim(&self) -> usize;

    /// Smoothness constant: `grad f` is Lipschitz with this constant.
    fn smoothness(&self) -> f64;

    /// Evaluates `f(x)`.
    fn eval(&self, x: &Vector) -> f64;

    /// Evaluates the exact analytic gradient `grad f(x)`.
    fn grad(&self, x: &Vector) -> Vector;

    /// Uniform upper bound `M` with `f*(p) <= M` for all `p` in `dom f*`,
    /// when one is known. This is the constant the unboundedness detectors
    /// need.
    fn conjugate_bound(&self) -> Option<f64> {
        None
    }

    /// Closed-form description of `cl(dom f*)`, when available.
    fn dual_set(&self) -> Option<DualSetDescription> {
        None
    }
}

/// A validated nonnegative divergence value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceValue(f64);

impl DivergenceValue {
    pub fn value(&self) -> f64 {
        self.0
    }
}

/// The Bregman form of the dual divergence:
/// `D_f(x, grad f(y)) = f(x) - f(y) - <grad f(y), x - y>`.
///
/// Convexity makes this nonnegative; a value below `-1e-12` (relative to the
/// magnitudes involved) is rejected as evidence the oracle is not convex.
/// Round-off-sized negatives are clamped to zero.
pub fn bregman_divergence(
    f: &dyn ObjectiveOracle,
    x: &Vector,
    y: &Vector,
) -> Result<DivergenceValue, CoreError> {
    let fx = f.eval(x);
    let fy = f.eval(y);
    let gy = f.grad(y);
    let cross = gy.dot(&x.sub(y));
    let d = fx - fy - cross;
    let tol = 1e-12 * (1.0 + fx.abs() + fy.abs() + cross.abs());
    if d < -tol {
        return Err(CoreError::NegativeDivergence { value: d });
    }
    Ok(DivergenceValue(d.max(0.0)))
}

/// Computable upper bound on `D_f(x0, p*)` without knowing `p*`:
///
/// ```text
/// D_f(x0, p*) <= M + f(x0) + |x0| * |grad f(x0)|,
/// ```
///
/// valid whenever `f* <= M` on its domain, because `f*(p*) <= M`,
/// `-<p*, x0> <= |p*| |x0|`, and `|p*| <= |grad f(x0)|` (the gradient lies in
/// `dom f*`, and `p*` has minimum norm there).
pub fn divergence_upper_bound(f: &dyn ObjectiveOracle, x0: &Vector) -> Result<f64, CoreError> {
    let m = f.conjugate_bound().ok_or(CoreError::MissingConjugateBound)?;
    Ok(m + f.eval(x0) + x0.norm() * f.grad(x0).norm())
}

/// Worst observed violations of the smoothness/convexity inequalities over a
/// set of sample pairs. All four quantities are `<= 0` for an exact
/// `L`-smooth convex function; positive values measure violation.
#[derive(Debug, Clone)]
pub struct SmoothConvexReport {
    /// `f(x) + <grad f(x), y-x> - f(y)`: positive means convexity fails.
    pub convexity: f64,
    /// `|grad f(y) - grad f(x)| - L |y-x|`: gradient Lipschitz violation.
    pub lipschitz: f64,
    /// `f(y) - f(x) - <grad f(x), y-x> - (L/2)|y-x|^2`: descent-lemma
    /// (upper quadratic) violation.
    pub upper_quadratic: f64,
    /// `f(x) + <grad f(x), y-x> + |grad f(y)-grad f(x)|^2/(2L) - f(y)`:
    /// cocoercivity (lower bound) violation.
    pub cocoercivity: f64,
    /// `1 + max |f|` over the samples; violations are judged against
    /// `1e-9 * scale`.
    pub scale: f64,
    pub pass: bool,
}

/// Checks `L`-smoothness and convexity of an oracle on sampled pairs.
pub fn check_smooth_convex(
    f: &dyn ObjectiveOracle,
    pairs: &[(Vector, Vector)],
) -> SmoothConvexReport {
    let l = f.smoothness();
    let mut report = SmoothConvexReport {
        convexity: f64::NEG_INFINITY,
        lipschitz: f64::NEG_INFINITY,
        upper_quadratic: f64::NEG_INFINITY,
        cocoercivity: f64::NEG_INFINITY,
        scale: 1.0,
        pass: false,
    };
    for (x, y) in pairs {
        let fx = f.eval(x);
        let fy = f.eval(y);
        let gx = f.grad(x);
        let gy = f.grad(y);
        let diff = y.sub(x);
        let linear = fx + gx.dot(&diff);
        let grad_gap = gy.sub(&gx).norm();
        report.convexity = report.convexity.max(linear - fy);
        report.lipschitz = report.lipschitz.max(grad_gap - l * diff.norm());
        report.upper_quadratic = report
            .upper_quadratic
            .max(fy - linear - 0.5 * l * diff.norm_sq());
        report.cocoercivity = report
            .cocoercivity
            .max(linear + grad_gap * grad_gap / (2.0 * l) - fy);
        report.scale = report.scale.max(1.0 + fx.abs().max(fy.abs()));
    }
    let tol = 1e-9 * report.scale;
    report.pass = report.convexity <= tol
        && report.lipschitz <= tol
        && report.upper_quadratic <= tol
        && report.cocoercivity <= tol;
    report
}

/// Central-difference gradient, for validating analytic gradients in tests.
pub fn finite_difference_grad(f: &dyn ObjectiveOracle, x: &Vector, h: f64) -> Vector {
    assert!(h > 0.0, "step size must be positive");
    let n = x.len();
    let mut out = vec![0.0; n];
    let mut xp = Vec::from(x.as_slice());
    for i in 0..n {
        let xi = xp[i];
        xp[i] = xi + h;
        let up = f.eval(&Vector::new(xp.clone()).expect("finite probe"));
        xp[i] = xi - h;
        let down = f.eval(&Vector::new(xp.clone()).expect("finite probe"));
        xp[i] = xi;
        out[i] = (up - down) / (2.0 * h);
    }
    Vector::new(out).expect("finite gradient estimate")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{GeometricProgram, SquaredNorm};
    use crate::vector::max_abs_diff;

    fn section6_geometric() -> GeometricProgram {
        GeometricProgram::new(
            vec![1.0, 1.0, 1.0, 1.0],
            vec![
                Vector::from_slice(&[3.0, 0.0]),
                Vector::from_slice(&[0.0, 1.0]),
                Vector::from_slice(&[1.0, 2.0]),
                Vector::from_slice(&[3.0, 3.0]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn bregman_on_quadratic_is_half_distance() {
        // f = |x|^2 / 2 has D_f(x, grad f(y)) = |x - y|^2 / 2.
        let f = SquaredNorm::new(2);
        let x = Vector::from_slice(&[3.0, 0.0]);
        let y = Vector::from_slice(&[1.0, 0.0]);
        let d = bregman_divergence(&f, &x, &y).unwrap();
        assert_eq!(d.value(), 2.0);
    }

    #[test]
    fn bregman_vanishes_at_equal_points() {
        let f = section6_geometric();
        let x = Vector::from_slice(&[0.7, -1.3]);
        let d = bregman_divergence(&f, &x, &x).unwrap();
        assert_eq!(d.value(), 0.0);
    }

    #[test]
    fn bregman_matches_high_precision_reference() {
        // Reference value computed with 50-digit arithmetic for the bundled
        // four-term log-sum-exp objective at x = (0,0), y = (1,1).
        let f = section6_geometric();
        let x = Vector::zeros(2);
        let y = Vector::from_slice(&[1.0, 1.0]);
        let d = bregman_divergence(&f, &x, &y).unwrap();
        assert!((d.value() - 0.9847936320494725).abs() < 1e-10);
    }

    #[test]
    fn divergence_upper_bound_at_origin_is_m_plus_f0() {
        let f = section6_geometric();
        let bound = divergence_upper_bound(&f, &Vector::zeros(2)).unwrap();
        assert!((bound - 4.0f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn divergence_upper_bound_requires_conjugate_bound() {
        let f = SquaredNorm::new(2);
        assert!(matches!(
            divergence_upper_bound(&f, &Vector::zeros(2)),
            Err(CoreError::MissingConjugateBound)
        ));
    }

    #[test]
    fn divergence_upper_bound_dominates_bregman_divergences() {
        // D_f(x0, grad f(y)) <= D_f(x0, p*) + ... is not generally true, but
        // the bound must dominate the divergence at the minimum-norm point;
        // spot-check via points y far out, whose gradients approach p*.
        let f = section6_geometric();
        let x0 = Vector::from_slice(&[0.5, -0.5]);
        let bound = divergence_upper_bound(&f, &x0).unwrap();
        let y = Vector::from_slice(&[-300.0 * 0.3, -300.0 * 0.9]);
        let d = bregman_divergence(&f, &x0, &y).unwrap();
        assert!(d.value() <= bound + 1e-9);
    }

    #[test]
    fn smooth_convex_check_passes_for_true_oracle() {
        let f = section6_geometric();
        let pairs: Vec<(Vector, Vector)> = (0..40)
            .map(|i| {
                let s = i as f64 / 10.0 - 2.0;
                (
                    Vector::from_slice(&[s, -s * 0.5]),
                    Vector::from_slice(&[0.3 * s - 1.0, s]),
                )
            })
            .collect();
        let report = check_smooth_convex(&f, &pairs);
        assert!(report.pass, "violations: {report:?}");
    }

    #[test]
    fn smooth_convex_check_rejects_understated_l() {
        struct Understated(GeometricProgram);
        impl ObjectiveOracle for Understated {
            fn dim(&self) -> usize {
                self.0.dim()
            }
            fn smoothness(&self) -> f64 {
                self.0.smoothness() / 64.0
            }
            fn eval(&self, x: &Vector) -> f64 {
                self.0.eval(x)
            }
            fn grad(&self, x: &Vector) -> Vector {
                self.0.grad(x)
            }
        }
        let f = Understated(section6_geometric());
        let pairs = vec![(Vector::zeros(2), Vector::from_slice(&[0.4, 0.1]))];
        let report = check_smooth_convex(&f, &pairs);
        assert!(!report.pass);
        assert!(report.upper_quadratic > 0.0);
    }

    #[test]
    fn finite_difference_matches_analytic_gradient() {
        let f = section6_geometric();
        let x = Vector::from_slice(&[0.3, -0.7]);
        let fd = finite_difference_grad(&f, &x, 1e-6);
        let exact = f.grad(&x);
        assert!(max_abs_diff(&fd, &exact) < 1e-8);
    }
}
