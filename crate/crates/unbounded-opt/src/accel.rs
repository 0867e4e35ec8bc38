//! Accelerated (momentum) first-order methods with certificate extraction.
//!
//! The method is parameterized by an increasing weight sequence `A_k` with
//! `A_0 = 0` and increments `dA_k = A_{k+1} - A_k` satisfying the step
//! condition `dA_k <= 2 sqrt(A_{k+1} / L)`. One update reads
//!
//! ```text
//! y_k     = x_k + (dA_k / A_{k+1}) (z_k - x_k)
//! z_{k+1} = z_k - (dA_k / 4) grad f(y_k)
//! x_{k+1} = (A_k x_k + dA_k z_{k+1}) / A_{k+1}
//! ```
//!
//! Two built-in schedules are provided: the classical maximal recursion
//! (`alpha_{k+1} = (1 + sqrt(1 + 4 alpha_k^2)) / 2`, which makes the update
//! exactly the textbook momentum method with step `1/L`), and the polynomial
//! schedule `A_k = k (k+1) / L`, whose certificate coefficients and decay
//! bounds all have closed forms.
//!
//! On an unbounded objective the iterates diverge, but two weighted averages
//! of the gradients converge to the minimum-norm dual point `p*`:
//!
//! * `p_k = -P_k (x_{k+1} - x_k)` with `P_k = 4 A_k A_{k+1} / (dA_k S1_k)`,
//! * `q_k = -Q_k (x_k - x_0)` with `Q_k = 4 A_k / S0_k`,
//!
//! where `S1_k = sum_{i<=k} A_i dA_i` and `S0_k = sum_{i<=k} A_i dA_{i-1}`
//! (so `S1_k + S0_k = A_k A_{k+1}`). [`bound_series`] evaluates the
//! quantified decay rates of both, [`energy_series`] the dissipated energy
//! functional behind them, and [`detect_unbounded_nag`] the resulting
//! unboundedness test, which fires in `O(sqrt(L / |p*|^2))` iterations —
//! quadratically faster than the plain-descent test.

use thiserror::Error;

use crate::descent::Trigger;
use crate::dualgeom::{BoundsContext, NewtonPolytopeStats};
use crate::oracle::ObjectiveOracle;
use crate::vector::Vector;

#[derive(Debug, Error)]
pub enum AccelError {
    #[error("smoothness constant {0} must be positive and finite")]
    BadSmoothness(f64),
    #[error("weight schedule invalid at index {index}: {detail}")]
    ScheduleViolation { index: usize, detail: String },
    #[error("schedule supports {capacity} steps, {needed} requested")]
    ScheduleTooShort { capacity: usize, needed: usize },
    #[error("dimension mismatch: objective has dim {expected}, start has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("iteration budget must be at least 1")]
    EmptyBudget,
    #[error("precondition violated: {0}")]
    Precondition(String),
}

/// How to build the weight sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleSpec {
    /// `A_k = k (k+1) / L`.
    Polynomial,
    /// The maximal classical recursion (`step 1/L` + momentum).
    NesterovMax,
    /// User-supplied increments `dA_0, dA_1, ...`.
    Custom { deltas: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    Polynomial,
    NesterovMax,
    Custom,
}

/// A validated weight sequence together with the prefix sums that certificate
/// coefficients and decay bounds are built from.
#[derive(Debug, Clone)]
pub struct ScheduleA {
    kind: ScheduleKind,
    l: f64,
    /// `A_0 ..= A_{cap+1}`.
    a: Vec<f64>,
    /// `dA_0 ..= dA_cap`.
    delta: Vec<f64>,
    /// Momentum multipliers for the maximal recursion (empty otherwise).
    alpha: Vec<f64>,
    /// `S1_k = sum_{i=1..k} A_i dA_i`.
    s1: Vec<f64>,
    /// `S0_k = sum_{i=1..k} A_i dA_{i-1}`.
    s0: Vec<f64>,
    /// `sum_{i=1..k} sqrt(A_i) dA_{i-1}`.
    sqrt0: Vec<f64>,
    /// `sum_{i=1..k} dA_i / A_i`.
    dsum: Vec<f64>,
}

/// Builds and validates a schedule usable for `k_max` steps.
pub fn make_schedule(
    spec: &ScheduleSpec,
    l: f64,
    k_max: usize,
) -> Result<ScheduleA, AccelError> {
    if !(l.is_finite() && l > 0.0) {
        return Err(AccelError::BadSmoothness(l));
    }
    if k_max == 0 {
        return Err(AccelError::EmptyBudget);
    }
    let cap = k_max;
    let (kind, a, delta, alpha) = match spec {
        ScheduleSpec::Polynomial => {
            let a: Vec<f64> = (0..=cap + 1)
                .map(|k| (k as f64) * (k as f64 + 1.0) / l)
                .collect();
            let delta: Vec<f64> = (0..=cap).map(|k| 2.0 * (k as f64 + 1.0) / l).collect();
            (ScheduleKind::Polynomial, a, delta, Vec::new())
        }
        ScheduleSpec::NesterovMax => {
            let mut alpha = Vec::with_capacity(cap + 2);
            alpha.push(1.0f64);
            for k in 0..=cap {
                let prev = alpha[k];
                alpha.push(0.5 * (1.0 + (1.0 + 4.0 * prev * prev).sqrt()));
            }
            let delta: Vec<f64> = (0..=cap).map(|k| 4.0 * alpha[k] / l).collect();
            let mut a = Vec::with_capacity(cap + 2);
            a.push(0.0);
            for (k, &d) in delta.iter().enumerate() {
                a.push(a[k] + d);
            }
            (ScheduleKind::NesterovMax, a, delta, alpha)
        }
        ScheduleSpec::Custom { deltas } => {
            if deltas.len() < cap + 1 {
                return Err(AccelError::ScheduleTooShort {
                    capacity: deltas.len().saturating_sub(1),
                    needed: cap,
                });
            }
            let delta = deltas[..=cap].to_vec();
            let mut a = Vec::with_capacity(cap + 2);
            a.push(0.0);
            for (k, &d) in delta.iter().enumerate() {
                a.push(a[k] + d);
            }
            (ScheduleKind::Custom, a, delta, Vec::new())
        }
    };

    // Step condition: dA_k^2 L <= 4 A_{k+1}, up to f64 roundoff (the maximal
    // recursion sits exactly on the equality).
    for (k, &d) in delta.iter().enumerate() {
        if !(d.is_finite() && d > 0.0) {
            return Err(AccelError::ScheduleViolation {
                index: k,
                detail: format!("increment {d} must be positive and finite"),
            });
        }
        let lhs = d * d * l;
        let rhs = 4.0 * a[k + 1];
        if lhs > rhs * (1.0 + 1e-9) {
            return Err(AccelError::ScheduleViolation {
                index: k,
                detail: format!(
                    "increment too large: dA^2 L = {lhs} exceeds 4 A_next = {rhs}"
                ),
            });
        }
    }

    let mut s1 = vec![0.0];
    let mut s0 = vec![0.0];
    let mut sqrt0 = vec![0.0];
    let mut dsum = vec![0.0];
    for k in 1..=cap {
        s1.push(s1[k - 1] + a[k] * delta[k]);
        s0.push(s0[k - 1] + a[k] * delta[k - 1]);
        sqrt0.push(sqrt0[k - 1] + a[k].sqrt() * delta[k - 1]);
        dsum.push(dsum[k - 1] + delta[k] / a[k]);
    }

    Ok(ScheduleA {
        kind,
        l,
        a,
        delta,
        alpha,
        s1,
        s0,
        sqrt0,
        dsum,
    })
}

impl ScheduleA {
    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn smoothness(&self) -> f64 {
        self.l
    }

    /// Largest step count this schedule supports.
    pub fn capacity(&self) -> usize {
        self.delta.len() - 1
    }

    pub fn a(&self, k: usize) -> f64 {
        self.a[k]
    }

    pub fn delta(&self, k: usize) -> f64 {
        self.delta[k]
    }

    pub fn s1(&self, k: usize) -> f64 {
        self.s1[k]
    }

    pub fn s0(&self, k: usize) -> f64 {
        self.s0[k]
    }

    /// Gradient coefficient of the two-sequence form,
    /// `dA_k^2 / (4 A_{k+1})`; exactly `1/L` for the maximal recursion.
    pub fn step_coeff(&self, k: usize) -> f64 {
        match self.kind {
            ScheduleKind::Polynomial => (k as f64 + 1.0) / ((k as f64 + 2.0) * self.l),
            ScheduleKind::NesterovMax => 1.0 / self.l,
            ScheduleKind::Custom => self.delta[k] * self.delta[k] / (4.0 * self.a[k + 1]),
        }
    }

    /// Momentum coefficient of the two-sequence form: `y_{k+1} = x_{k+1} +
    /// momentum(k) (x_{k+1} - x_k)`, namely
    /// `A_k dA_{k+1} / (A_{k+2} dA_k)`; `(alpha_k - 1) / alpha_{k+1}` for the
    /// maximal recursion and `k / (k+3)` for the polynomial schedule.
    pub fn momentum(&self, k: usize) -> f64 {
        match self.kind {
            ScheduleKind::Polynomial => k as f64 / (k as f64 + 3.0),
            ScheduleKind::NesterovMax => (self.alpha[k] - 1.0) / self.alpha[k + 1],
            ScheduleKind::Custom => {
                self.a[k] * self.delta[k + 1] / (self.a[k + 2] * self.delta[k])
            }
        }
    }

    /// Scaling of the difference certificate: `4 A_k A_{k+1} / (dA_k S1_k)`,
    /// `k >= 1`.
    pub fn p_coeff(&self, k: usize) -> f64 {
        4.0 * self.a[k] * self.a[k + 1] / (self.delta[k] * self.s1[k])
    }

    /// Scaling of the displacement certificate: `4 A_k / S0_k`, `k >= 1`.
    pub fn q_coeff(&self, k: usize) -> f64 {
        4.0 * self.a[k] / self.s0[k]
    }

    /// Decay coefficient for `|p_k - p*|^2 <= b(k) D`.
    pub fn b(&self, k: usize) -> f64 {
        let r = (self.a[k] * self.a[k + 1].sqrt() + self.sqrt0[k]) / self.s1[k];
        8.0 * r * r
    }

    /// Decay coefficient for the cross term in the norm-gap bound of `p_k`:
    /// `4 A_{k+1} / S1_k`.
    pub fn c(&self, k: usize) -> f64 {
        4.0 * self.a[k + 1] / self.s1[k]
    }

    /// `b(k) + 2 c(k)`, the leading coefficient in
    /// `|p_k|^2 - |p*|^2 <= c_prime(k) D + c(k)^2 D^2 / |p*|^2`.
    pub fn c_prime(&self, k: usize) -> f64 {
        self.b(k) + 2.0 * self.c(k)
    }

    /// Decay coefficient for `|q_k - p*|^2 <= b_tilde(k) D`.
    pub fn b_tilde(&self, k: usize) -> f64 {
        let r = self.sqrt0[k] / self.s0[k];
        8.0 * r * r
    }

    /// Start-dependent analogue of [`ScheduleA::c`] for the displacement
    /// certificate; `c_remark` is the constant from
    /// [`BoundsContext::with_grad0`].
    pub fn c_tilde(&self, k: usize, c_remark: f64) -> f64 {
        let inner = 4.0 * self.a[1] * self.l * c_remark + 4.0 * self.dsum[k - 1];
        self.a[k] / self.s0[k] * inner
    }

    pub fn c_tilde_prime(&self, k: usize, c_remark: f64) -> f64 {
        self.b_tilde(k) + 2.0 * self.c_tilde(k, c_remark)
    }
}

/// Closed-form ceilings for the polynomial schedule's bound coefficients.
/// All are `O(L / k^2)` up to the logarithmic factor in the `q` norm-gap.
pub struct PolynomialCaps {
    l: f64,
}

impl PolynomialCaps {
    pub fn new(schedule: &ScheduleA) -> Option<PolynomialCaps> {
        (schedule.kind == ScheduleKind::Polynomial).then(|| PolynomialCaps { l: schedule.l })
    }

    pub fn p_coeff(&self, k: usize) -> f64 {
        12.0 * self.l / (3.0 * k as f64 + 5.0)
    }

    pub fn q_coeff(&self, k: usize) -> f64 {
        24.0 * self.l / ((k as f64 + 2.0) * (3.0 * k as f64 + 1.0))
    }

    pub fn b(&self, k: usize) -> f64 {
        let d = 3.0 * k as f64 + 5.0;
        800.0 * self.l / (d * d)
    }

    /// The `c` coefficient itself is exactly `24 L / (k (3k+5))`.
    pub fn c(&self, k: usize) -> f64 {
        24.0 * self.l / (k as f64 * (3.0 * k as f64 + 5.0))
    }

    pub fn c_prime(&self, k: usize) -> f64 {
        944.0 * self.l / (3.0 * k as f64 * (3.0 * k as f64 + 5.0))
    }

    pub fn b_tilde(&self, k: usize) -> f64 {
        let d = 3.0 * k as f64 + 1.0;
        128.0 * self.l / (d * d)
    }

    pub fn c_tilde(&self, k: usize, c_remark: f64) -> f64 {
        48.0 * self.l * (c_remark + 1.0 + (k as f64).ln())
            / ((k as f64 + 2.0) * (3.0 * k as f64 + 1.0))
    }

    pub fn c_tilde_prime(&self, k: usize, c_remark: f64) -> f64 {
        96.0 * self.l * (c_remark + 2.0 + (k as f64).ln())
            / ((k as f64 + 2.0) * (3.0 * k as f64 + 1.0))
    }
}

/// Trajectory of the momentum method.
#[derive(Debug, Clone)]
pub struct NagTrajectory {
    /// `x_0 ..= x_K`.
    pub xs: Vec<Vector>,
    /// `y_0 ..= y_{K-1}` (the gradient evaluation points).
    pub ys: Vec<Vector>,
    /// `z_0 ..= z_K`.
    pub zs: Vec<Vector>,
    /// `grad f(y_k)` for each `y`.
    pub grads_y: Vec<Vector>,
    /// `f(x_k)` for each iterate.
    pub values_x: Vec<f64>,
}

impl NagTrajectory {
    pub fn steps(&self) -> usize {
        self.ys.len()
    }
}

/// Runs the three-sequence form for `k_max` steps.
pub fn run_nag(
    f: &dyn ObjectiveOracle,
    x0: &Vector,
    schedule: &ScheduleA,
    k_max: usize,
) -> Result<NagTrajectory, AccelError> {
    check_run_inputs(f, x0, schedule, k_max)?;
    let mut xs = Vec::with_capacity(k_max + 1);
    let mut ys = Vec::with_capacity(k_max);
    let mut zs = Vec::with_capacity(k_max + 1);
    let mut grads_y = Vec::with_capacity(k_max);
    let mut values_x = Vec::with_capacity(k_max + 1);

    let mut x = x0.clone();
    let mut z = x0.clone();
    for k in 0..k_max {
        values_x.push(f.eval(&x));
        let mix = schedule.delta(k) / schedule.a(k + 1);
        let y = Vector::combine(1.0 - mix, &x, mix, &z);
        let g = f.grad(&y);
        let z_next = z.step(schedule.delta(k) / 4.0, &g);
        let wx = schedule.a(k) / schedule.a(k + 1);
        let wz = schedule.delta(k) / schedule.a(k + 1);
        let x_next = Vector::combine(wx, &x, wz, &z_next);
        xs.push(x);
        ys.push(y);
        zs.push(z);
        grads_y.push(g);
        x = x_next;
        z = z_next;
    }
    values_x.push(f.eval(&x));
    xs.push(x);
    zs.push(z);

    Ok(NagTrajectory {
        xs,
        ys,
        zs,
        grads_y,
        values_x,
    })
}

/// Runs the equivalent two-sequence (gradient step + momentum) form; `z` is
/// reconstructed as `z_{k+1} = (A_{k+1} x_{k+1} - A_k x_k) / dA_k`.
pub fn run_nag_two_sequence(
    f: &dyn ObjectiveOracle,
    x0: &Vector,
    schedule: &ScheduleA,
    k_max: usize,
) -> Result<NagTrajectory, AccelError> {
    check_run_inputs(f, x0, schedule, k_max)?;
    let mut xs = Vec::with_capacity(k_max + 1);
    let mut ys = Vec::with_capacity(k_max);
    let mut zs = Vec::with_capacity(k_max + 1);
    let mut grads_y = Vec::with_capacity(k_max);
    let mut values_x = Vec::with_capacity(k_max + 1);

    let mut x = x0.clone();
    let mut y = x0.clone();
    zs.push(x0.clone());
    for k in 0..k_max {
        values_x.push(f.eval(&x));
        let g = f.grad(&y);
        let x_next = y.step(schedule.step_coeff(k), &g);
        let z_next = Vector::combine(
            schedule.a(k + 1) / schedule.delta(k),
            &x_next,
            -schedule.a(k) / schedule.delta(k),
            &x,
        );
        let y_next = Vector::combine(
            1.0 + schedule.momentum(k),
            &x_next,
            -schedule.momentum(k),
            &x,
        );
        xs.push(x);
        ys.push(y);
        zs.push(z_next);
        grads_y.push(g);
        x = x_next;
        y = y_next;
    }
    values_x.push(f.eval(&x));
    xs.push(x);

    Ok(NagTrajectory {
        xs,
        ys,
        zs,
        grads_y,
        values_x,
    })
}

fn check_run_inputs(
    f: &dyn ObjectiveOracle,
    x0: &Vector,
    schedule: &ScheduleA,
    k_max: usize,
) -> Result<(), AccelError> {
    if k_max == 0 {
        return Err(AccelError::EmptyBudget);
    }
    if k_max > schedule.capacity() {
        return Err(AccelError::ScheduleTooShort {
            capacity: schedule.capacity(),
            needed: k_max,
        });
    }
    if f.dim() != x0.len() {
        return Err(AccelError::DimensionMismatch {
            expected: f.dim(),
            got: x0.len(),
        });
    }
    Ok(())
}

/// Certificate sequences extracted from a trajectory.
#[derive(Debug, Clone)]
pub struct CertificateSeries {
    /// `p_k` for `k = 1 ..= K-1` (entry `k - 1`).
    pub p: Vec<Vector>,
    /// `q_k` for `k = 1 ..= K` (entry `k - 1`).
    pub q: Vec<Vector>,
}

/// Extracts both certificate families.
pub fn certificates(traj: &NagTrajectory, schedule: &ScheduleA) -> CertificateSeries {
    let k_max = traj.steps();
    let x0 = &traj.xs[0];
    let p = (1..k_max)
        .map(|k| {
            traj.xs[k + 1]
                .sub(&traj.xs[k])
                .scale(-schedule.p_coeff(k))
        })
        .collect();
    let q = (1..=k_max)
        .map(|k| traj.xs[k].sub(x0).scale(-schedule.q_coeff(k)))
        .collect();
    CertificateSeries { p, q }
}

/// Evaluated decay bounds for a run, entry `k - 1` for iteration `k`.
#[derive(Debug, Clone)]
pub struct BoundSeries {
    /// Bound on `|p_k - p*|^2`: `b(k) D`.
    pub p_err: Vec<f64>,
    /// Bound on `|p_k|^2 - |p*|^2`: `c_prime(k) D + c(k)^2 D^2 / |p*|^2`.
    pub p_gap: Vec<f64>,
    /// Bound on `|q_k - p*|^2`: `b_tilde(k) D`.
    pub q_err: Vec<f64>,
    /// Bound on `|q_k|^2 - |p*|^2`; requires the start constant.
    pub q_gap: Option<Vec<f64>>,
}

/// Evaluates the decay bounds for iterations `1 ..= k_hi`.
pub fn bound_series(schedule: &ScheduleA, ctx: &BoundsContext, k_hi: usize) -> BoundSeries {
    let d = ctx.divergence;
    let p_sq = ctx.p_star_norm_sq();
    let p_err = (1..=k_hi).map(|k| schedule.b(k) * d).collect();
    let p_gap = (1..=k_hi)
        .map(|k| {
            let c = schedule.c(k);
            schedule.c_prime(k) * d + c * c * d * d / p_sq
        })
        .collect();
    let q_err = (1..=k_hi).map(|k| schedule.b_tilde(k) * d).collect();
    let q_gap = ctx.c_remark.map(|c_remark| {
        (1..=k_hi)
            .map(|k| {
                let ct = schedule.c_tilde(k, c_remark);
                schedule.c_tilde_prime(k, c_remark) * d + ct * ct * d * d / p_sq
            })
            .collect()
    });
    BoundSeries {
        p_err,
        p_gap,
        q_err,
        q_gap,
    }
}

/// Worst relative violation over all certificate-bound inequalities of a run
/// (positive means an inequality failed by that relative margin).
pub fn max_bound_violation(
    traj: &NagTrajectory,
    certs: &CertificateSeries,
    bounds: &BoundSeries,
    ctx: &BoundsContext,
) -> f64 {
    let _ = traj;
    let p_sq = ctx.p_star_norm_sq();
    let mut worst = f64::NEG_INFINITY;
    let mut check = |lhs: f64, rhs: f64| {
        let scale = 1.0 + rhs.abs();
        worst = worst.max((lhs - rhs) / scale);
    };
    for (i, p) in certs.p.iter().enumerate() {
        check(p.dist_sq(&ctx.p_star), bounds.p_err[i]);
        check(p.norm_sq() - p_sq, bounds.p_gap[i]);
    }
    for (i, q) in certs.q.iter().enumerate() {
        check(q.dist_sq(&ctx.p_star), bounds.q_err[i]);
        if let Some(q_gap) = &bounds.q_gap {
            check(q.norm_sq() - p_sq, q_gap[i]);
        }
    }
    worst
}

/// The dissipated energy along a run, anchored at a point `w`:
/// `V_k = (A_k / 2)(g(x_k) - g(w)) + |z_k + (A_k / 4) p* - w|^2`
/// where `g = f - <p*, .>` is the tilted objective. Nonincreasing, with the
/// per-step decrease at least the (nonnegative) dissipation term
/// `(A_k dA_k / 8) <grad g(y_k), p*>`.
#[derive(Debug, Clone)]
pub struct EnergySeries {
    /// `V_0 ..= V_K`.
    pub values: Vec<f64>,
    /// Upper bound on `V_{k+1} - V_k` for each step: the negated dissipation
    /// term (always <= 0 since gradients satisfy `<p - p*, p*> >= 0`).
    pub decrement_caps: Vec<f64>,
    /// Magnitude scale of each `V_k`, for tolerance-aware comparisons.
    pub scales: Vec<f64>,
}

/// Evaluates the energy along a trajectory.
pub fn energy_series(
    traj: &NagTrajectory,
    schedule: &ScheduleA,
    f: &dyn ObjectiveOracle,
    ctx: &BoundsContext,
    w: &Vector,
) -> EnergySeries {
    let p_star = &ctx.p_star;
    let g = |x: &Vector, fx: f64| fx - p_star.dot(x);
    let gw = g(w, f.eval(w));
    let k_max = traj.steps();
    let mut values = Vec::with_capacity(k_max + 1);
    let mut scales = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let gap_term = schedule.a(k) / 2.0 * (g(&traj.xs[k], traj.values_x[k]) - gw);
        let dist_term = traj.zs[k]
            .add_scaled(schedule.a(k) / 4.0, p_star)
            .sub(w)
            .norm_sq();
        values.push(gap_term + dist_term);
        scales.push(1.0 + gap_term.abs() + dist_term);
    }
    let decrement_caps = (0..k_max)
        .map(|k| {
            let grad_g = traj.grads_y[k].sub(p_star);
            -schedule.a(k) * schedule.delta(k) / 8.0 * grad_g.dot(p_star)
        })
        .collect();
    EnergySeries {
        values,
        decrement_caps,
        scales,
    }
}

/// Value bound implied by the dissipated energy: for every anchor `w`,
/// `g(x_k) <= g(w) + 2 |w - x_0|^2 / A_k`.
pub fn value_upper_bound(schedule: &ScheduleA, x0: &Vector, w: &Vector, k: usize) -> f64 {
    2.0 * w.sub(x0).norm_sq() / schedule.a(k)
}

/// Value bound specific to log-sum-exp objectives, in terms of their
/// exponent-hull statistics: once `A_k > m^2 / (beta phi^2)`,
/// `g(x_k) - inf g <= (2 m^2 / (phi^2 A_k)) (1 + log^2(beta phi^2 A_k / m^2))`.
pub fn geometric_value_bound(stats: &NewtonPolytopeStats, a_k: f64) -> Option<f64> {
    let m_sq = (stats.affine_dim * stats.affine_dim) as f64;
    let phi_sq = stats.phi * stats.phi;
    if a_k * stats.beta * phi_sq <= m_sq {
        return None;
    }
    let log_term = (stats.beta * phi_sq * a_k / m_sq).ln();
    Some(2.0 * m_sq / (phi_sq * a_k) * (1.0 + log_term * log_term))
}

/// Outcome of the accelerated unboundedness test.
#[derive(Debug, Clone)]
pub struct NagDetection {
    /// First firing of the difference-certificate rule
    /// `|p_k|^2 > b(k) (conj_bound + f(0))`.
    pub p_trigger: Option<Trigger>,
    /// First firing of the displacement-certificate rule
    /// `|q_k|^2 > b_tilde(k) (conj_bound + f(0))`.
    pub q_trigger: Option<Trigger>,
}

/// Runs both detection rules along a trajectory started at the origin.
///
/// If `f` were bounded below with `f* <= conj_bound` on its dual set, then
/// `0` would lie in the dual set and the certificate decay bounds (with
/// `D <= conj_bound + f(0)`) would cap both certificate norms; exceeding a
/// cap therefore proves `inf f = -inf`, with the certificate itself as the
/// witness.
pub fn detect_unbounded_nag(
    traj: &NagTrajectory,
    schedule: &ScheduleA,
    certs: &CertificateSeries,
    conj_bound: f64,
) -> Result<NagDetection, AccelError> {
    if traj.xs[0].norm_sq() != 0.0 {
        return Err(AccelError::Precondition(
            "detection thresholds assume the run starts at the origin".into(),
        ));
    }
    let budget = conj_bound + traj.values_x[0];
    let find = |series: &[Vector], coeff: &dyn Fn(usize) -> f64| -> Option<Trigger> {
        for (i, cert) in series.iter().enumerate() {
            let k = i + 1;
            let threshold = coeff(k) * budget;
            let norm_sq = cert.norm_sq();
            if norm_sq > threshold {
                return Some(Trigger {
                    index: k,
                    witness: cert.clone(),
                    witness_norm_sq: norm_sq,
                    threshold,
                });
            }
        }
        None
    };
    Ok(NagDetection {
        p_trigger: find(&certs.p, &|k| schedule.b(k)),
        q_trigger: find(&certs.q, &|k| schedule.b_tilde(k)),
    })
}

/// Iteration at which each detection rule is guaranteed to have fired on an
/// unbounded instance with `|p*|^2 = p_star_norm_sq` (certificates always
/// have norm at least `|p*|`, so the rule fires once its threshold drops
/// below `|p*|^2`). `None` if the schedule never gets there within `k_hi`.
pub fn detection_guarantee(
    schedule: &ScheduleA,
    conj_bound: f64,
    f0: f64,
    p_star_norm_sq: f64,
    k_hi: usize,
) -> NagDetectionGuarantee {
    let budget = conj_bound + f0;
    let first = |coeff: &dyn Fn(usize) -> f64| {
        (1..=k_hi).find(|&k| coeff(k) * budget < p_star_norm_sq)
    };
    NagDetectionGuarantee {
        p_index: first(&|k| schedule.b(k)),
        q_index: first(&|k| schedule.b_tilde(k)),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NagDetectionGuarantee {
    pub p_index: Option<usize>,
    pub q_index: Option<usize>,
}
