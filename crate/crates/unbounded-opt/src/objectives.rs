//! Built-in objective families.
//!
//! Each family implements [`ObjectiveOracle`] with an analytic gradient, a
//! sharp smoothness constant, and — where available in closed form — a bound
//! on the conjugate and a description of `cl(dom f*)`:
//!
//! * [`GeometricProgram`]: `f(x) = log sum_l c_l exp(<w_l, x>)`. The gradient
//!   is the softmax average of the exponent vectors, `cl(dom f*)` is their
//!   convex hull (the Newton polytope), `L = max_l |w_l|^2`, and
//!   `f* <= -log(min_l c_l)`.
//! * [`EllipsoidObjective`]: `f(x) = sqrt(1 + <x, A x>) + <b, x>` with `A`
//!   positive definite. `cl(dom f*)` is the ellipsoid
//!   `{ p : <p - b, A^{-1}(p - b)> <= 1 }`, `L = |A|`, and `f* <= 0`.
//! * [`OneDimTight`]: a one-dimensional piecewise objective whose slopes fill
//!   `[-(1+alpha), -1]`; its drift toward the minimum-norm slope is as slow
//!   as the general theory allows, which makes it the stress instance for
//!   certificate decay rates. Optionally embedded into `R^n` through its
//!   first coordinate.
//! * [`ShiftedObjective`]: `f(x) - <p, x>` for a fixed shift `p`, the
//!   "tilted" view under which an unbounded problem becomes a bounded one.
//!
//! [`SquaredNorm`] and [`LinearObjective`] round out the set as the trivial
//! bounded and maximally-unbounded references used by tests and by mirror
//! descent (whose outer objective is `|.|^2 / 2`).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dualgeom::DualSetDescription;
use crate::matrix::SymMatrix;
use crate::oracle::{CoreError, ObjectiveOracle};
use crate::vector::Vector;

#[derive(Debug, Error)]
pub enum ObjectiveError {
    #[error("geometric program needs at least one term")]
    EmptyProgram,
    #[error("coefficient c[{index}] = {value} must be positive and finite")]
    BadCoefficient { index: usize, value: f64 },
    #[error("exponent vectors must share one dimension")]
    MixedDimensions,
    #[error("alpha = {0} must be positive and finite")]
    BadAlpha(f64),
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("shift dimension {shift} does not match base dimension {base}")]
    ShiftDimension { shift: usize, base: usize },
    #[error(transparent)]
    Core(#[from] CoreError),
}

/// `f(x) = log sum_l c_l exp(<w_l, x>)`, evaluated with max-shifting so that
/// arguments far along a descent ray neither overflow nor underflow.
#[derive(Debug, Clone)]
pub struct GeometricProgram {
    c: Vec<f64>,
    omega: Vec<Vector>,
    log_c: Vec<f64>,
    dim: usize,
    smoothness: f64,
    conjugate_bound: f64,
}

impl GeometricProgram {
    pub fn new(c: Vec<f64>, omega: Vec<Vector>) -> Result<Self, ObjectiveError> {
        if c.is_empty() || c.len() != omega.len() {
            return Err(ObjectiveError::EmptyProgram);
        }
        for (index, &value) in c.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(ObjectiveError::BadCoefficient { index, value });
            }
        }
        let dim = omega[0].len();
        if dim == 0 {
            return Err(ObjectiveError::ZeroDimension);
        }
        if omega.iter().any(|w| w.len() != dim) {
            return Err(ObjectiveError::MixedDimensions);
        }
        let smoothness = omega.iter().map(|w| w.norm_sq()).fold(0.0, f64::max);
        let c_min = c.iter().cloned().fold(f64::INFINITY, f64::min);
        let log_c = c.iter().map(|v| v.ln()).collect();
        Ok(GeometricProgram {
            c,
            omega,
            log_c,
            dim,
            smoothness,
            conjugate_bound: -c_min.ln(),
        })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.c
    }

    pub fn exponents(&self) -> &[Vector] {
        &self.omega
    }

    /// Shifted exponents `s_l = <w_l, x> + log c_l` and their maximum.
    fn scores(&self, x: &Vector) -> (Vec<f64>, f64) {
        let s: Vec<f64> = self
            .omega
            .iter()
            .zip(&self.log_c)
            .map(|(w, lc)| w.dot(x) + lc)
            .collect();
        let max = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (s, max)
    }

    /// Softmax weights at `x`; they are the convex coefficients expressing
    /// `grad f(x)` over the exponent vectors.
    pub fn softmax(&self, x: &Vector) -> Vec<f64> {
        let (s, max) = self.scores(x);
        let expd: Vec<f64> = s.iter().map(|v| (v - max).exp()).collect();
        let total: f64 = expd.iter().sum();
        expd.into_iter().map(|v| v / total).collect()
    }
}

impl ObjectiveOracle for GeometricProgram {
    fn dim(&self) -> usize {
        self.dim
    }

    fn smoothness(&self) -> f64 {
        self.smoothness
    }

    fn eval(&self, x: &Vector) -> f64 {
        let (s, max) = self.scores(x);
        let sum: f64 = s.iter().map(|v| (v - max).exp()).sum();
        max + sum.ln()
    }

    fn grad(&self, x: &Vector) -> Vector {
        let weights = self.softmax(x);
        let mut out = Vector::zeros(self.dim);
        for (w, coeff) in self.omega.iter().zip(weights) {
            out = out.add_scaled(coeff, w);
        }
        out
    }

    fn conjugate_bound(&self) -> Option<f64> {
        Some(self.conjugate_bound)
    }

    fn dual_set(&self) -> Option<DualSetDescription> {
        Some(DualSetDescription::Polytope {
            vertices: self.omega.clone(),
        })
    }
}

/// `f(x) = sqrt(1 + <x, A x>) + <b, x>` with `A` symmetric positive definite.
#[derive(Debug, Clone)]
pub struct EllipsoidObjective {
    a: SymMatrix,
    b: Vector,
    smoothness: f64,
}

impl EllipsoidObjective {
    pub fn new(a: SymMatrix, b: Vector) -> Result<Self, ObjectiveError> {
        if a.dim() != b.len() {
            return Err(ObjectiveError::ShiftDimension {
                shift: b.len(),
                base: a.dim(),
            });
        }
        a.cholesky()?; // positive definiteness
        let smoothness = a.op_norm();
        Ok(EllipsoidObjective { a, b, smoothness })
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.a
    }

    pub fn linear_term(&self) -> &Vector {
        &self.b
    }

    /// Closed-form conjugate `f*(p) = -sqrt(1 - <p-b, A^{-1}(p-b)>)`,
    /// `None` outside `dom f*`.
    pub fn conjugate(&self, p: &Vector) -> Option<f64> {
        let q = self
            .a
            .inverse_quad(&p.sub(&self.b))
            .expect("matrix validated positive definite");
        if q > 1.0 {
            None
        } else {
            Some(-(1.0 - q).max(0.0).sqrt())
        }
    }
}

impl ObjectiveOracle for EllipsoidObjective {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn smoothness(&self) -> f64 {
        self.smoothness
    }

    fn eval(&self, x: &Vector) -> f64 {
        (1.0 + x.dot(&self.a.matvec(x))).sqrt() + self.b.dot(x)
    }

    fn grad(&self, x: &Vector) -> Vector {
        let ax = self.a.matvec(x);
        let root = (1.0 + x.dot(&ax)).sqrt();
        self.b.add_scaled(1.0 / root, &ax)
    }

    fn conjugate_bound(&self) -> Option<f64> {
        // f*(p) = -sqrt(1 - <p-b, A^{-1}(p-b)>) <= 0 on all of dom f*.
        Some(0.0)
    }

    fn dual_set(&self) -> Option<DualSetDescription> {
        Some(DualSetDescription::Ellipsoid {
            shape: self.a.clone(),
            center: self.b.clone(),
        })
    }
}

/// One-dimensional objective whose slope range is exactly `[-(1+alpha), -1]`:
///
/// ```text
/// f(u) = (u+1)^(-alpha) - u - 1   for u >= 0,
/// f(u) = -(1+alpha) u             for u < 0,
/// ```
///
/// with `f'(u) = -alpha (u+1)^(-alpha-1) - 1` on the right branch. The
/// derivative is continuous at 0 and the curvature peaks there, giving
/// `L = alpha (alpha + 1)`. The slope approaches the minimum-norm value `-1`
/// only at the rate `u^(-(1+alpha))`, which translates into certificate decay
/// `|p(t)| - 1 ~ t^(-2(1+alpha))` along the accelerated flow — the tightness
/// stress case.
///
/// `dim > 1` embeds the function through the first coordinate, turning the
/// slope interval into a segment in `R^n` so the polytope projection code
/// also gets exercised.
#[derive(Debug, Clone)]
pub struct OneDimTight {
    alpha: f64,
    dim: usize,
}

impl OneDimTight {
    pub fn new(alpha: f64, dim: usize) -> Result<Self, ObjectiveError> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(ObjectiveError::BadAlpha(alpha));
        }
        if dim == 0 {
            return Err(ObjectiveError::ZeroDimension);
        }
        Ok(OneDimTight { alpha, dim })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn scalar_eval(&self, u: f64) -> f64 {
        if u >= 0.0 {
            (u + 1.0).powf(-self.alpha) - u - 1.0
        } else {
            -(1.0 + self.alpha) * u
        }
    }

    fn scalar_slope(&self, u: f64) -> f64 {
        if u >= 0.0 {
            -self.alpha * (u + 1.0).powf(-self.alpha - 1.0) - 1.0
        } else {
            -(1.0 + self.alpha)
        }
    }
}

impl ObjectiveOracle for OneDimTight {
    fn dim(&self) -> usize {
        self.dim
    }

    fn smoothness(&self) -> f64 {
        self.alpha * (self.alpha + 1.0)
    }

    fn eval(&self, x: &Vector) -> f64 {
        self.scalar_eval(x[0])
    }

    fn grad(&self, x: &Vector) -> Vector {
        let mut out = vec![0.0; self.dim];
        out[0] = self.scalar_slope(x[0]);
        Vector::new(out).expect("finite slope")
    }

    fn dual_set(&self) -> Option<DualSetDescription> {
        let lo = -(1.0 + self.alpha);
        let hi = -1.0;
        if self.dim == 1 {
            Some(DualSetDescription::Interval { lo, hi })
        } else {
            let mut a = vec![0.0; self.dim];
            let mut b = vec![0.0; self.dim];
            a[0] = lo;
            b[0] = hi;
            Some(DualSetDescription::Polytope {
                vertices: vec![Vector::from_slice(&a), Vector::from_slice(&b)],
            })
        }
    }
}

/// The tilted objective `x -> f(x) - <p, x>`.
///
/// Tilting translates `dom f*` by `-p` and leaves both the smoothness
/// constant and the conjugate's value range unchanged
/// (`(f - <p,.>)*(q) = f*(q + p)`).
pub struct ShiftedObjective {
    base: Box<dyn ObjectiveOracle>,
    shift: Vector,
}

impl ShiftedObjective {
    pub fn new(base: Box<dyn ObjectiveOracle>, shift: Vector) -> Result<Self, ObjectiveError> {
        if base.dim() != shift.len() {
            return Err(ObjectiveError::ShiftDimension {
                shift: shift.len(),
                base: base.dim(),
            });
        }
        Ok(ShiftedObjective { base, shift })
    }

    pub fn shift(&self) -> &Vector {
        &self.shift
    }
}

impl ObjectiveOracle for ShiftedObjective {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn smoothness(&self) -> f64 {
        self.base.smoothness()
    }

    fn eval(&self, x: &Vector) -> f64 {
        self.base.eval(x) - self.shift.dot(x)
    }

    fn grad(&self, x: &Vector) -> Vector {
        self.base.grad(x).sub(&self.shift)
    }

    fn conjugate_bound(&self) -> Option<f64> {
        self.base.conjugate_bound()
    }

    fn dual_set(&self) -> Option<DualSetDescription> {
        Some(self.base.dual_set()?.translated(&self.shift.scale(-1.0)))
    }
}

/// `f(x) = |x|^2 / 2`: the bounded reference objective, and the outer
/// objective of the norm-minimization form of mirror descent.
#[derive(Debug, Clone)]
pub struct SquaredNorm {
    dim: usize,
}

impl SquaredNorm {
    pub fn new(dim: usize) -> Self {
        SquaredNorm { dim }
    }
}

impl ObjectiveOracle for SquaredNorm {
    fn dim(&self) -> usize {
        self.dim
    }

    fn smoothness(&self) -> f64 {
        1.0
    }

    fn eval(&self, x: &Vector) -> f64 {
        0.5 * x.norm_sq()
    }

    fn grad(&self, x: &Vector) -> Vector {
        x.clone()
    }
}

/// `f(x) = <c, x>`:`dom f*` degenerates to the single point `{c}`, so every
/// certificate must equal `c` and the gradient field is constant.
#[derive(Debug, Clone)]
pub struct LinearObjective {
    c: Vector,
}

impl LinearObjective {
    pub fn new(c: Vector) -> Self {
        LinearObjective { c }
    }
}

impl ObjectiveOracle for LinearObjective {
    fn dim(&self) -> usize {
        self.c.len()
    }

    fn smoothness(&self) -> f64 {
        0.0
    }

    fn eval(&self, x: &Vector) -> f64 {
        self.c.dot(x)
    }

    fn grad(&self, _x: &Vector) -> Vector {
        self.c.clone()
    }

    fn conjugate_bound(&self) -> Option<f64> {
        // f*(c) = 0 is the only finite conjugate value.
        Some(0.0)
    }

    fn dual_set(&self) -> Option<DualSetDescription> {
        Some(DualSetDescription::Polytope {
            vertices: vec![self.c.clone()],
        })
    }
}

fn default_dim() -> usize {
    1
}

/// Serializable description of a problem instance.
///
/// ```json
/// {"type": "geometric", "c": [1,1], "omega": [[3,0],[0,1]]}
/// {"type": "ellipsoid", "A": [[8,0],[0,2]], "b": [3,3]}
/// {"type": "onedim_tight", "alpha": 0.5}
/// {"type": "shifted", "base": {...}, "p": [0.3, 0.9]}
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    Geometric {
        c: Vec<f64>,
        omega: Vec<Vec<f64>>,
    },
    Ellipsoid {
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
    },
    OnedimTight {
        alpha: f64,
        #[serde(default = "default_dim")]
        dim: usize,
    },
    Shifted {
        base: Box<ProblemSpec>,
        p: Vec<f64>,
    },
}

impl ProblemSpec {
    /// Instantiates the described oracle.
    pub fn build(&self) -> Result<Box<dyn ObjectiveOracle>, ObjectiveError> {
        match self {
            ProblemSpec::Geometric { c, omega } => {
                let rows = omega
                    .iter()
                    .map(|r| Vector::new(r.clone()))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Box::new(GeometricProgram::new(c.clone(), rows)?))
            }
            ProblemSpec::Ellipsoid { a, b } => {
                let a = SymMatrix::from_rows(a.clone())?;
                let b = Vector::new(b.clone())?;
                Ok(Box::new(EllipsoidObjective::new(a, b)?))
            }
            ProblemSpec::OnedimTight { alpha, dim } => {
                Ok(Box::new(OneDimTight::new(*alpha, *dim)?))
            }
            ProblemSpec::Shifted { base, p } => {
                let base = base.build()?;
                let shift = Vector::new(p.clone())?;
                Ok(Box::new(ShiftedObjective::new(base, shift)?))
            }
        }
    }
}
