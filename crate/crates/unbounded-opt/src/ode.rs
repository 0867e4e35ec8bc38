//! Continuous-time limits of the momentum method.
//!
//! Rescaling iteration count to time turns the momentum method into the
//! damped flow
//!
//! ```text
//! x'(t) = (r / t) (z(t) - x(t)),      z'(t) = -(t / r) grad f(x(t)),
//! ```
//!
//! with `x(0) = z(0) = x_0` and damping `r >= 2`. The continuous
//! certificates are
//!
//! * `p(t) = r (r+2) / t^2 (x - z)` (equal to a weighted gradient average:
//!   for `r = 2`, `p(t) = (4 / t^4) int_0^t s^3 grad f(x(s)) ds`), and
//! * `q(t) = -2 (r+2) / t^2 (x - x_0) = (2 / t^2) int_0^t s p(s) ds`,
//!
//! which converge to the minimum-norm dual point `p*` at the same `1/t^2`
//! rates as their discrete counterparts. The same flow in mirror form —
//! [`integrate_amd_ode`], the accelerated mirror flow for the squared norm
//! composed with `grad Psi*` — reproduces it exactly under the change of
//! variables `X = r (r+2) / t^2 (x - z)`, `Z = x`, `R = r + 2`,
//! `Psi* = f`; [`correspondence_check`] verifies that identity numerically.
//!
//! Integration is classical fixed-step RK4. The `1/t` singularity at the
//! start is handled by beginning at `t_0 = dt` from the series expansion
//! `x(t_0) = x_0 - t_0^2 / (2 (r+2)) grad f(x_0)`,
//! `z(t_0) = x_0 - t_0^2 / (2 r) grad f(x_0)`, whose error is `O(t_0^4)`.

use thiserror::Error;

use crate::dualgeom::BoundsContext;
use crate::oracle::ObjectiveOracle;
use crate::vector::Vector;

#[derive(Debug, Error)]
pub enum OdeError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("trajectories are not on a shared grid: {0}")]
    GridMismatch(String),
    #[error("this quantity is defined for damping r = 2, got r = {0}")]
    RequiresDampingTwo(f64),
}

/// One sample of the flow.
#[derive(Debug, Clone)]
pub struct OdeState {
    pub t: f64,
    pub x: Vector,
    pub z: Vector,
}

/// Fixed-step trajectory of the damped flow; `states[i]` is at
/// `t = (i + 1) dt`.
#[derive(Debug, Clone)]
pub struct NagOdeTrajectory {
    pub r: f64,
    pub dt: f64,
    pub x0: Vector,
    pub states: Vec<OdeState>,
}

impl NagOdeTrajectory {
    /// Gradient-average certificate `p(t) = r (r+2) / t^2 (x - z)`.
    pub fn p(&self, i: usize) -> Vector {
        let s = &self.states[i];
        s.x.sub(&s.z).scale(self.r * (self.r + 2.0) / (s.t * s.t))
    }

    /// Displacement certificate `q(t) = -2 (r+2) / t^2 (x - x_0)`.
    pub fn q(&self, i: usize) -> Vector {
        let s = &self.states[i];
        s.x.sub(&self.x0).scale(-2.0 * (self.r + 2.0) / (s.t * s.t))
    }

    /// Indices of approximately log-spaced samples, `per_decade` per factor
    /// of ten, always including the final state.
    pub fn sample_indices(&self, per_decade: usize) -> Vec<usize> {
        log_sample_indices(self.states.len(), per_decade)
    }
}

/// Approximately log-spaced indices into a grid `t_i = (i + 1) dt`,
/// `per_decade` per factor of ten, always including the final index.
pub fn log_sample_indices(n: usize, per_decade: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut j = 0usize;
    loop {
        let steps = 10f64.powf(j as f64 / per_decade as f64);
        let i = steps.round() as usize;
        if i >= n {
            break;
        }
        let i = i.saturating_sub(1);
        if out.last() != Some(&i) {
            out.push(i);
        }
        j += 1;
    }
    if n > 0 && out.last() != Some(&(n - 1)) {
        out.push(n - 1);
    }
    out
}

fn check_grid(t_end: f64, dt: f64) -> Result<usize, OdeError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(OdeError::InvalidParameter(format!(
            "time step {dt} must be positive"
        )));
    }
    if !(t_end.is_finite() && t_end >= 2.0 * dt) {
        return Err(OdeError::InvalidParameter(format!(
            "horizon {t_end} must allow at least two steps of {dt}"
        )));
    }
    Ok((t_end / dt).round() as usize)
}

/// Number of internal RK4 substeps for the grid step starting at `t`: the
/// damping term `coeff / t` is stiff near the start, and RK4 needs
/// `(coeff / t) h` well inside its stability region. Only the first
/// `O(coeff)` grid steps ever substep.
fn substeps(coeff: f64, dt: f64, t: f64) -> usize {
    ((24.0 * coeff * dt / t).ceil() as usize).clamp(1, 2048)
}

/// One classical RK4 step of a two-block system.
fn rk4_step(
    t: f64,
    x: &Vector,
    z: &Vector,
    dt: f64,
    deriv: &impl Fn(f64, &Vector, &Vector) -> (Vector, Vector),
) -> (Vector, Vector) {
    let (kx1, kz1) = deriv(t, x, z);
    let (kx2, kz2) = deriv(
        t + 0.5 * dt,
        &x.add_scaled(0.5 * dt, &kx1),
        &z.add_scaled(0.5 * dt, &kz1),
    );
    let (kx3, kz3) = deriv(
        t + 0.5 * dt,
        &x.add_scaled(0.5 * dt, &kx2),
        &z.add_scaled(0.5 * dt, &kz2),
    );
    let (kx4, kz4) = deriv(t + dt, &x.add_scaled(dt, &kx3), &z.add_scaled(dt, &kz3));
    let sixth = dt / 6.0;
    let x_next = x
        .add_scaled(sixth, &kx1)
        .add_scaled(2.0 * sixth, &kx2)
        .add_scaled(2.0 * sixth, &kx3)
        .add_scaled(sixth, &kx4);
    let z_next = z
        .add_scaled(sixth, &kz1)
        .add_scaled(2.0 * sixth, &kz2)
        .add_scaled(2.0 * sixth, &kz3)
        .add_scaled(sixth, &kz4);
    (x_next, z_next)
}

/// Integrates the damped flow on `[dt, t_end]`.
pub fn integrate_nag_ode(
    f: &dyn ObjectiveOracle,
    x0: &Vector,
    r: f64,
    t_end: f64,
    dt: f64,
) -> Result<NagOdeTrajectory, OdeError> {
    if !(r.is_finite() && r > 0.0) {
        return Err(OdeError::InvalidParameter(format!(
            "damping {r} must be positive"
        )));
    }
    if f.dim() != x0.len() {
        return Err(OdeError::InvalidParameter(format!(
            "objective has dim {}, start has {}",
            f.dim(),
            x0.len()
        )));
    }
    let n = check_grid(t_end, dt)?;
    let g0 = f.grad(x0);
    let t0 = dt;
    let mut x = x0.add_scaled(-t0 * t0 / (2.0 * (r + 2.0)), &g0);
    let mut z = x0.add_scaled(-t0 * t0 / (2.0 * r), &g0);
    let deriv = |t: f64, x: &Vector, z: &Vector| -> (Vector, Vector) {
        (z.sub(x).scale(r / t), f.grad(x).scale(-t / r))
    };
    let mut states = Vec::with_capacity(n);
    states.push(OdeState {
        t: t0,
        x: x.clone(),
        z: z.clone(),
    });
    for i in 1..n {
        let t = i as f64 * dt;
        let m = substeps(r, dt, t);
        let h = dt / m as f64;
        for j in 0..m {
            let (xn, zn) = rk4_step(t + j as f64 * h, &x, &z, h, &deriv);
            x = xn;
            z = zn;
        }
        states.push(OdeState {
            t: (i + 1) as f64 * dt,
            x: x.clone(),
            z: z.clone(),
        });
    }
    Ok(NagOdeTrajectory {
        r,
        dt,
        x0: x0.clone(),
        states,
    })
}

/// Trajectory of the accelerated mirror flow
/// `X'(t) = (R / t) (grad Psi*(Z) - X)`, `Z'(t) = -(t / R) X`
/// (outer objective `|.|^2 / 2`, so `grad F(X) = X`).
#[derive(Debug, Clone)]
pub struct AmdOdeTrajectory {
    pub r_cap: f64,
    pub dt: f64,
    /// `x` holds the primal average `X`, `z` the dual variable `Z`.
    pub states: Vec<OdeState>,
}

impl AmdOdeTrajectory {
    /// Log-spaced sample indices; see [`log_sample_indices`].
    pub fn sample_indices(&self, per_decade: usize) -> Vec<usize> {
        log_sample_indices(self.states.len(), per_decade)
    }
}

/// Integrates the mirror flow on `[dt, t_end]` starting from the dual point
/// `z0`, with the matching series start
/// `X(t_0) = grad Psi*(z0)`, `Z(t_0) = z0 - t_0^2 / (2 R) grad Psi*(z0)`.
pub fn integrate_amd_ode(
    psi_star: &dyn ObjectiveOracle,
    z0: &Vector,
    r_cap: f64,
    t_end: f64,
    dt: f64,
) -> Result<AmdOdeTrajectory, OdeError> {
    if !(r_cap.is_finite() && r_cap > 2.0) {
        return Err(OdeError::InvalidParameter(format!(
            "mirror damping {r_cap} must exceed 2"
        )));
    }
    if psi_star.dim() != z0.len() {
        return Err(OdeError::InvalidParameter(format!(
            "mirror map has dim {}, start has {}",
            psi_star.dim(),
            z0.len()
        )));
    }
    let n = check_grid(t_end, dt)?;
    let image0 = psi_star.grad(z0);
    let t0 = dt;
    let mut x = image0.clone();
    let mut z = z0.add_scaled(-t0 * t0 / (2.0 * r_cap), &image0);
    let deriv = |t: f64, x: &Vector, z: &Vector| -> (Vector, Vector) {
        (
            psi_star.grad(z).sub(x).scale(r_cap / t),
            x.scale(-t / r_cap),
        )
    };
    let mut states = Vec::with_capacity(n);
    states.push(OdeState {
        t: t0,
        x: x.clone(),
        z: z.clone(),
    });
    for i in 1..n {
        let t = i as f64 * dt;
        let m = substeps(r_cap, dt, t);
        let h = dt / m as f64;
        for j in 0..m {
            let (xn, zn) = rk4_step(t + j as f64 * h, &x, &z, h, &deriv);
            x = xn;
            z = zn;
        }
        states.push(OdeState {
            t: (i + 1) as f64 * dt,
            x: x.clone(),
            z: z.clone(),
        });
    }
    Ok(AmdOdeTrajectory {
        r_cap,
        dt,
        states,
    })
}

/// Worst absolute discrepancies of the change of variables relating the two
/// flows: `X` against `r (r+2) / t^2 (x - z)` and `Z` against `x`.
#[derive(Debug, Clone, Copy)]
pub struct CorrespondenceReport {
    pub max_x_gap: f64,
    pub max_z_gap: f64,
}

pub fn correspondence_check(
    nag: &NagOdeTrajectory,
    amd: &AmdOdeTrajectory,
) -> Result<CorrespondenceReport, OdeError> {
    if (nag.dt - amd.dt).abs() > 1e-15 * nag.dt || nag.states.len() != amd.states.len() {
        return Err(OdeError::GridMismatch(format!(
            "dt {} vs {}, {} vs {} states",
            nag.dt,
            amd.dt,
            nag.states.len(),
            amd.states.len()
        )));
    }
    if (amd.r_cap - (nag.r + 2.0)).abs() > 1e-12 {
        return Err(OdeError::GridMismatch(format!(
            "mirror damping {} does not match r + 2 = {}",
            amd.r_cap,
            nag.r + 2.0
        )));
    }
    let mut max_x_gap = 0.0f64;
    let mut max_z_gap = 0.0f64;
    for (i, (n, a)) in nag.states.iter().zip(&amd.states).enumerate() {
        let x_gap = crate::vector::max_abs_diff(&nag.p(i), &a.x);
        let z_gap = crate::vector::max_abs_diff(&n.x, &a.z);
        max_x_gap = max_x_gap.max(x_gap);
        max_z_gap = max_z_gap.max(z_gap);
    }
    Ok(CorrespondenceReport {
        max_x_gap,
        max_z_gap,
    })
}

/// Worst ratios of measured quantity to its decay bound, per bound family
/// (1.0 means the bound is met exactly; above 1.0 means violated).
#[derive(Debug, Clone, Copy)]
pub struct ContinuousBoundsReport {
    /// `|p(t)|^2 - |p*|^2` against `2 (r+2)^2 D / t^2`.
    pub p_gap_general: f64,
    /// `|q(t) - p*|^2` against `8 (r+2)^2 D / t^2`.
    pub q_err_general: f64,
    /// `|p(t) - p*|^2` against `800 D / (9 t^2)`; `r = 2` only.
    pub p_err_sharp: Option<f64>,
    /// `|p(t)|^2 - |p*|^2` against `944 D / (9 t^2) + 64 D^2 / (|p*|^2 t^4)`;
    /// `r = 2` only.
    pub p_gap_sharp: Option<f64>,
    /// `|q(t) - p*|^2` against `128 D / (9 t^2)`; `r = 2` only.
    pub q_err_sharp: Option<f64>,
}

/// Evaluates the continuous-time decay bounds on every `stride`-th state.
pub fn continuous_bounds(
    traj: &NagOdeTrajectory,
    ctx: &BoundsContext,
    stride: usize,
) -> ContinuousBoundsReport {
    let d = ctx.divergence;
    let p_sq = ctx.p_star_norm_sq();
    let r = traj.r;
    let is_r2 = (r - 2.0).abs() < 1e-12;
    let mut p_gap_general = 0.0f64;
    let mut q_err_general = 0.0f64;
    let mut p_err_sharp = 0.0f64;
    let mut p_gap_sharp = 0.0f64;
    let mut q_err_sharp = 0.0f64;
    for i in (0..traj.states.len()).step_by(stride.max(1)) {
        let t_sq = traj.states[i].t * traj.states[i].t;
        let p = traj.p(i);
        let q = traj.q(i);
        let p_gap = p.norm_sq() - p_sq;
        let q_err = q.dist_sq(&ctx.p_star);
        p_gap_general = p_gap_general.max(p_gap * t_sq / (2.0 * (r + 2.0) * (r + 2.0) * d));
        q_err_general = q_err_general.max(q_err * t_sq / (8.0 * (r + 2.0) * (r + 2.0) * d));
        if is_r2 {
            let p_err = p.dist_sq(&ctx.p_star);
            p_err_sharp = p_err_sharp.max(p_err * t_sq / (800.0 * d / 9.0));
            let gap_bound = 944.0 * d / (9.0 * t_sq) + 64.0 * d * d / (p_sq * t_sq * t_sq);
            p_gap_sharp = p_gap_sharp.max(p_gap / gap_bound);
            q_err_sharp = q_err_sharp.max(q_err * t_sq / (128.0 * d / 9.0));
        }
    }
    ContinuousBoundsReport {
        p_gap_general,
        q_err_general,
        p_err_sharp: is_r2.then_some(p_err_sharp),
        p_gap_sharp: is_r2.then_some(p_gap_sharp),
        q_err_sharp: is_r2.then_some(q_err_sharp),
    }
}

/// Continuous energy at damping 2:
/// `V_w(t) = (t^2 / 2)(g(x) - g(w)) + |z + (t^2 / 4) p* - w|^2` with
/// `g = f - <p*, .>`; nonincreasing along the flow.
pub fn continuous_energy(
    traj: &NagOdeTrajectory,
    f: &dyn ObjectiveOracle,
    ctx: &BoundsContext,
    w: &Vector,
) -> Result<Vec<f64>, OdeError> {
    if (traj.r - 2.0).abs() > 1e-12 {
        return Err(OdeError::RequiresDampingTwo(traj.r));
    }
    let p_star = &ctx.p_star;
    let gw = f.eval(w) - p_star.dot(w);
    Ok(traj
        .states
        .iter()
        .map(|s| {
            let g = f.eval(&s.x) - p_star.dot(&s.x);
            let t_sq = s.t * s.t;
            t_sq / 2.0 * (g - gw) + s.z.add_scaled(t_sq / 4.0, p_star).sub(w).norm_sq()
        })
        .collect())
}

/// Checks the quadrature identity `p(t) = (4 / t^4) int_0^t s^3 grad f(x(s))
/// ds` (damping 2): trapezoid rule on the stored grid plus the analytic
/// head `int_0^{t_0} s^3 grad f(x_0) ds = (t_0^4 / 4) grad f(x_0)`.
/// Returns the worst relative deviation over states with `t >= t_min`.
pub fn p_integral_identity(
    traj: &NagOdeTrajectory,
    f: &dyn ObjectiveOracle,
    t_min: f64,
) -> Result<f64, OdeError> {
    if (traj.r - 2.0).abs() > 1e-12 {
        return Err(OdeError::RequiresDampingTwo(traj.r));
    }
    let t0 = traj.states[0].t;
    let mut accum = f.grad(&traj.states[0].x).scale(t0.powi(4) / 4.0);
    let mut prev = f.grad(&traj.states[0].x).scale(t0.powi(3));
    let mut worst = 0.0f64;
    for i in 1..traj.states.len() {
        let s = &traj.states[i];
        let integrand = f.grad(&s.x).scale(s.t.powi(3));
        accum = accum.add_scaled(traj.dt / 2.0, &prev.add(&integrand));
        prev = integrand;
        if s.t >= t_min {
            let reconstructed = accum.scale(4.0 / s.t.powi(4));
            let p = traj.p(i);
            worst = worst.max(crate::vector::max_abs_diff(&reconstructed, &p) / (1.0 + p.norm()));
        }
    }
    Ok(worst)
}

/// Checks the quadrature identity `q(t) = (2 / t^2) int_0^t s p(s) ds`
/// (any damping), with analytic head `(t_0^2 / 2) grad f(x_0)`.
/// Returns the worst relative deviation over states with `t >= t_min`.
pub fn q_integral_identity(
    traj: &NagOdeTrajectory,
    f: &dyn ObjectiveOracle,
    t_min: f64,
) -> Result<f64, OdeError> {
    let t0 = traj.states[0].t;
    let mut accum = f.grad(&traj.x0).scale(t0 * t0 / 2.0);
    let mut prev = traj.p(0).scale(t0);
    let mut worst = 0.0f64;
    for i in 1..traj.states.len() {
        let s = &traj.states[i];
        let integrand = traj.p(i).scale(s.t);
        accum = accum.add_scaled(traj.dt / 2.0, &prev.add(&integrand));
        prev = integrand;
        if s.t >= t_min {
            let reconstructed = accum.scale(2.0 / (s.t * s.t));
            let q = traj.q(i);
            worst = worst.max(crate::vector::max_abs_diff(&reconstructed, &q) / (1.0 + q.norm()));
        }
    }
    Ok(worst)
}

/// Least-squares slope of `log v` against `log t`.
pub fn fit_log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(t, v) in points {
        let lx = t.ln();
        let ly = v.ln();
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}
