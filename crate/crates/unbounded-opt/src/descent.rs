//! Gradient descent and mirror descent with certificate extraction.
//!
//! On an unbounded instance gradient descent diverges, but two derived
//! sequences still converge to the minimum-norm dual point `p*`:
//!
//! * the gradients `p_k = grad f(x_k)` themselves (in norm-gap), and
//! * the normalized displacements `q_k = -(x_k - x_0) / a_k`, where
//!   `a_k = sum_{i<k} eta_i`, which are convex combinations of past
//!   gradients and converge in distance.
//!
//! [`gd_bounds`] evaluates the quantified decay rates for both, and
//! [`detect_unbounded_gd`] implements the resulting unboundedness test:
//! once `|grad f(x_k)|^2` exceeds a threshold that any lower-bounded
//! objective must respect, unboundedness is proven and the gradient is the
//! certificate.
//!
//! [`run_mirror`] runs dual-averaging mirror descent `X_k = grad Psi*(th_k)`,
//! `th_{k+1} = th_k - eta_k grad F(X_k)`. With `Psi* = f` and
//! `F = |.|^2 / 2` its dual iterates reproduce gradient descent on `f`
//! bit for bit (both paths funnel through [`Vector::step`]), which is how
//! the trajectory-level equivalence is asserted in tests.

use thiserror::Error;

use crate::dualgeom::BoundsContext;
use crate::oracle::{bregman_divergence, CoreError, ObjectiveOracle};
use crate::vector::Vector;

#[derive(Debug, Error)]
pub enum DescentError {
    #[error("step size eta[{index}] = {value} must be positive and finite")]
    BadStep { index: usize, value: f64 },
    #[error("step schedule provides {got} sizes, {needed} needed")]
    ScheduleTooShort { needed: usize, got: usize },
    #[error("dimension mismatch: objective has dim {expected}, start has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("iteration budget must be at least 1")]
    EmptyBudget,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

/// Step-size schedule for (mirror) descent.
#[derive(Debug, Clone)]
pub enum StepSchedule {
    Constant { eta: f64 },
    Sequence { etas: Vec<f64> },
}

impl StepSchedule {
    fn eta(&self, k: usize, needed: usize) -> Result<f64, DescentError> {
        let eta = match self {
            StepSchedule::Constant { eta } => *eta,
            StepSchedule::Sequence { etas } => {
                if etas.len() < needed {
                    return Err(DescentError::ScheduleTooShort {
                        needed,
                        got: etas.len(),
                    });
                }
                etas[k]
            }
        };
        if !(eta.is_finite() && eta > 0.0) {
            return Err(DescentError::BadStep {
                index: k,
                value: eta,
            });
        }
        Ok(eta)
    }
}

/// Trajectory of `x_{k+1} = x_k - eta_k grad f(x_k)`.
#[derive(Debug, Clone)]
pub struct GdTrajectory {
    /// Iterates `x_0 ..= x_K`.
    pub xs: Vec<Vector>,
    /// Gradients at each iterate.
    pub grads: Vec<Vector>,
    /// Objective values at each iterate.
    pub values: Vec<f64>,
    /// Partial step sums `a_k = sum_{i<k} eta_i` (so `a[0] = 0`).
    pub a: Vec<f64>,
    /// The step sizes actually used.
    pub etas: Vec<f64>,
    /// Smoothness constant of the objective at run time.
    pub smoothness: f64,
}

impl GdTrajectory {
    /// Number of completed steps `K`.
    pub fn steps(&self) -> usize {
        self.etas.len()
    }

    /// Averaged-gradient certificate `q_k = -(x_k - x_0) / a_k`, `k >= 1`.
    pub fn q(&self, k: usize) -> Vector {
        assert!(k >= 1 && k < self.xs.len(), "q_k defined for 1 <= k <= K");
        self.xs[k].sub(&self.xs[0]).scale(-1.0 / self.a[k])
    }

    /// Whether every step equals `1/L` for the recorded smoothness.
    pub fn is_classic_step(&self) -> bool {
        let target = 1.0 / self.smoothness;
        self.etas
            .iter()
            .all(|&e| (e - target).abs() <= 1e-12 * target)
    }

    /// Whether every step is at most `1/L` (the regime in which the decay
    /// bounds are valid).
    pub fn steps_within_smoothness(&self) -> bool {
        let cap = 1.0 / self.smoothness;
        self.etas.iter().all(|&e| e <= cap * (1.0 + 1e-12))
    }
}

/// Runs gradient descent for `k_max` steps.
pub fn run_gd(
    f: &dyn ObjectiveOracle,
    x0: &Vector,
    schedule: &StepSchedule,
    k_max: usize,
) -> Result<GdTrajectory, DescentError> {
    if k_max == 0 {
        return Err(DescentError::EmptyBudget);
    }
    if f.dim() != x0.len() {
        return Err(DescentError::DimensionMismatch {
            expected: f.dim(),
            got: x0.len(),
        });
    }
    let mut xs = Vec::with_capacity(k_max + 1);
    let mut grads = Vec::with_capacity(k_max + 1);
    let mut values = Vec::with_capacity(k_max + 1);
    let mut a = Vec::with_capacity(k_max + 1);
    let mut etas = Vec::with_capacity(k_max);

    let mut x = x0.clone();
    a.push(0.0);
    for k in 0..k_max {
        let grad = f.grad(&x);
        let eta = schedule.eta(k, k_max)?;
        values.push(f.eval(&x));
        let next = x.step(eta, &grad);
        xs.push(x);
        grads.push(grad);
        a.push(a[k] + eta);
        etas.push(eta);
        x = next;
    }
    values.push(f.eval(&x));
    grads.push(f.grad(&x));
    xs.push(x);

    Ok(GdTrajectory {
        xs,
        grads,
        values,
        a,
        etas,
        smoothness: f.smoothness(),
    })
}

/// Decay bounds along a gradient-descent run, indexed so that entry `k - 1`
/// bounds the quantity at iterate `k` (`k = 1 ..= K`).
#[derive(Debug, Clone)]
pub struct GdBoundSeries {
    /// Bound on `|grad f(x_k)|^2 - |p*|^2`, namely `2 D / a_k`; valid
    /// whenever every step is at most `1/L`.
    pub grad_gap: Vec<f64>,
    /// Bound on `|q_k - p*|^2`, namely `8 L D / k`; classic step only.
    pub q_err: Option<Vec<f64>>,
    /// Bound on `|q_k|^2 - |p*|^2`, namely `2 L D (C0 + log k) / k` with
    /// `C0 = 1 + (|grad f(x_0)|^2 - |p*|^2) / (2 L D)`; classic step only.
    pub q_gap: Option<Vec<f64>>,
}

/// Evaluates the decay bounds for a run. Requires steps at most `1/L`.
pub fn gd_bounds(traj: &GdTrajectory, ctx: &BoundsContext) -> Result<GdBoundSeries, DescentError> {
    if !traj.steps_within_smoothness() {
        return Err(DescentError::Precondition(
            "decay bounds require steps at most 1/L".into(),
        ));
    }
    let k_max = traj.steps();
    let d = ctx.divergence;
    let grad_gap = (1..=k_max).map(|k| 2.0 * d / traj.a[k]).collect();
    let (q_err, q_gap) = if traj.is_classic_step() {
        let l = ctx.l;
        let c0 = 1.0 + (traj.grads[0].norm_sq() - ctx.p_star_norm_sq()) / (2.0 * l * d);
        let q_err = (1..=k_max).map(|k| 8.0 * l * d / k as f64).collect();
        let q_gap = (1..=k_max)
            .map(|k| 2.0 * l * d * (c0 + (k as f64).ln()) / k as f64)
            .collect();
        (Some(q_err), Some(q_gap))
    } else {
        (None, None)
    };
    Ok(GdBoundSeries {
        grad_gap,
        q_err,
        q_gap,
    })
}

/// A positive unboundedness finding.
#[derive(Debug, Clone)]
pub struct Trigger {
    /// First iteration at which the test fired.
    pub index: usize,
    /// The certificate vector whose norm crossed the threshold.
    pub witness: Vector,
    /// `|witness|^2` at the trigger.
    pub witness_norm_sq: f64,
    /// The threshold value it exceeded.
    pub threshold: f64,
}

/// Unboundedness test along a gradient-descent run started at the origin
/// with the classic step `1/L`.
///
/// If `f* <= conj_bound` everywhere on `dom f*`, then any objective bounded
/// below satisfies `|grad f(x_k)|^2 <= 2 L (conj_bound + f(0)) / k`; the
/// first `k` violating this proves `inf f = -inf` with `grad f(x_k)` as the
/// certificate. Returns the first trigger, or `None` if the budget runs out.
pub fn detect_unbounded_gd(
    traj: &GdTrajectory,
    conj_bound: f64,
) -> Result<Option<Trigger>, DescentError> {
    if traj.xs[0].norm_sq() != 0.0 {
        return Err(DescentError::Precondition(
            "detection threshold assumes the run starts at the origin".into(),
        ));
    }
    if !traj.is_classic_step() {
        return Err(DescentError::Precondition(
            "detection threshold assumes the classic step 1/L".into(),
        ));
    }
    let l = traj.smoothness;
    let f0 = traj.values[0];
    for k in 1..=traj.steps() {
        let threshold = 2.0 * l * (conj_bound + f0) / k as f64;
        let norm_sq = traj.grads[k].norm_sq();
        if norm_sq > threshold {
            return Ok(Some(Trigger {
                index: k,
                witness: traj.grads[k].clone(),
                witness_norm_sq: norm_sq,
                threshold,
            }));
        }
    }
    Ok(None)
}

/// Smallest iteration count at which [`detect_unbounded_gd`] is guaranteed
/// to have fired on an unbounded instance with `|p*|^2 = p_star_norm_sq`:
/// the first `k` with `2 L (conj_bound + f0) / k < |p*|^2`.
pub fn gd_detection_guarantee(l: f64, conj_bound: f64, f0: f64, p_star_norm_sq: f64) -> usize {
    let ratio = 2.0 * l * (conj_bound + f0) / p_star_norm_sq;
    ratio.floor() as usize + 1
}

/// Trajectory of dual-averaging mirror descent.
#[derive(Debug, Clone)]
pub struct MirrorTrajectory {
    /// Dual iterates `th_0 ..= th_K`.
    pub thetas: Vec<Vector>,
    /// Primal images `X_k = grad Psi*(th_k)`.
    pub xs: Vec<Vector>,
    /// Outer objective values `F(X_k)`.
    pub outer_values: Vec<f64>,
    /// Partial step sums `a_k = sum_{i<k} eta_i`.
    pub a: Vec<f64>,
    pub etas: Vec<f64>,
    /// Whether every step is at most `1 / (L_F * L_{Psi*})`, the regime in
    /// which the mirror energy is nonincreasing.
    pub rate_applies: bool,
}

/// Runs mirror descent `X_k = grad Psi*(th_k)`,
/// `th_{k+1} = th_k - eta_k grad F(X_k)` for `k_max` steps.
pub fn run_mirror(
    psi_star: &dyn ObjectiveOracle,
    f_outer: &dyn ObjectiveOracle,
    theta0: &Vector,
    schedule: &StepSchedule,
    k_max: usize,
) -> Result<MirrorTrajectory, DescentError> {
    if k_max == 0 {
        return Err(DescentError::EmptyBudget);
    }
    if psi_star.dim() != theta0.len() || f_outer.dim() != theta0.len() {
        return Err(DescentError::DimensionMismatch {
            expected: psi_star.dim(),
            got: theta0.len(),
        });
    }
    let step_cap = 1.0 / (f_outer.smoothness() * psi_star.smoothness());

    let mut thetas = Vec::with_capacity(k_max + 1);
    let mut xs = Vec::with_capacity(k_max + 1);
    let mut outer_values = Vec::with_capacity(k_max + 1);
    let mut a = vec![0.0];
    let mut etas = Vec::with_capacity(k_max);
    let mut rate_applies = true;

    let mut theta = theta0.clone();
    for k in 0..k_max {
        let x = psi_star.grad(&theta);
        let outer_grad = f_outer.grad(&x);
        let eta = schedule.eta(k, k_max)?;
        rate_applies &= eta <= step_cap * (1.0 + 1e-12);
        outer_values.push(f_outer.eval(&x));
        let next = theta.step(eta, &outer_grad);
        thetas.push(theta);
        xs.push(x);
        a.push(a[k] + eta);
        etas.push(eta);
        theta = next;
    }
    let x = psi_star.grad(&theta);
    outer_values.push(f_outer.eval(&x));
    xs.push(x);
    thetas.push(theta);

    Ok(MirrorTrajectory {
        thetas,
        xs,
        outer_values,
        a,
        etas,
        rate_applies,
    })
}

/// Mirror-descent energy `V_k = a_k (F(X_k) - F(X')) + D_{Psi*}(th_k, th')`
/// for a dual anchor `th'` with primal image `X' = grad Psi*(th')`.
/// Nonincreasing in `k` whenever `eta <= 1 / (L_F * L_{Psi*})`.
pub fn mirror_energy(
    traj: &MirrorTrajectory,
    psi_star: &dyn ObjectiveOracle,
    f_outer: &dyn ObjectiveOracle,
    anchor: &Vector,
) -> Result<Vec<f64>, DescentError> {
    let anchor_value = f_outer.eval(&psi_star.grad(anchor));
    let mut energies = Vec::with_capacity(traj.thetas.len());
    for (k, theta) in traj.thetas.iter().enumerate() {
        let gap = traj.outer_values[k] - anchor_value;
        let div = bregman_divergence(psi_star, theta, anchor)?;
        energies.push(traj.a[k] * gap + div.value());
    }
    Ok(energies)
}
