//! Experiment orchestration: JSON configs, runs, CSV/summary emission, and
//! the three CLI verbs (`run`, `certify`, `sweep`).
//!
//! A config names a problem (in the [`ProblemSpec`] JSON format), an
//! algorithm, its horizon, and optional exact knowledge (`inf_g`, the
//! infimum of the tilted objective `g = f - <p*, .>`) that upgrades the
//! divergence constant in bound checks from an upper bound to the exact
//! value. Every run is deterministic: identical configs produce
//! byte-identical CSV. The only randomness anywhere is the seeded sampling
//! of anchor points for value-bound spot checks.
//!
//! Exit-code contract (surfaced through [`HarnessError::exit_code`]):
//! `0` success, `1` config or runtime error, `2` a bound assertion failed
//! while `assert_bounds` was set.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::accel::{
    bound_series, certificates, detect_unbounded_nag, energy_series, make_schedule,
    max_bound_violation, run_nag, value_upper_bound, ScheduleSpec,
};
use crate::descent::{
    detect_unbounded_gd, gd_bounds, mirror_energy, run_gd, run_mirror, StepSchedule, Trigger,
};
use crate::dualgeom::{min_norm_point, BoundsContext};
use crate::objectives::{ProblemSpec, SquaredNorm};
use crate::ode::{
    continuous_bounds, continuous_energy, integrate_amd_ode, integrate_nag_ode,
};
use crate::oracle::{divergence_upper_bound, ObjectiveOracle};
use crate::vector::Vector;

/// Relative slack allowed when asserting discrete-iteration bounds.
const ASSERT_TOL_DISCRETE: f64 = 1e-8;
/// Multiplicative slack allowed when asserting integrated-trajectory bounds
/// (covers the global truncation error of the fixed-step integrator).
const ASSERT_TOL_CONTINUOUS: f64 = 1.5e-3;
/// Log-spaced CSV samples per decade for trajectory outputs.
const SAMPLES_PER_DECADE: usize = 32;
/// Anchor points drawn for the value-bound spot check.
const VALUE_ANCHORS: usize = 8;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("run failed: {0}")]
    Run(String),
    #[error("the problem does not provide a conjugate bound, so the detection thresholds are undefined")]
    MissingConjugateBound,
    #[error("bound assertion failed: worst relative slack {slack:.3e} exceeds tolerance {tolerance:.1e}")]
    BoundViolation { slack: f64, tolerance: f64 },
}

impl HarnessError {
    fn run(e: impl std::fmt::Display) -> Self {
        HarnessError::Run(e.to_string())
    }

    /// Process exit code this error maps to.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::BoundViolation { .. } => 2,
            _ => 1,
        }
    }
}

/// Which iteration to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Plain gradient descent.
    Gd,
    /// The momentum method with certificate extraction.
    Nag,
    /// Mirror descent on `F = |.|^2 / 2` with the problem as mirror map.
    Mirror,
    /// The damped primal flow, integrated.
    NagOde,
    /// The mirror (norm-minimization) flow, integrated.
    AmdOde,
}

/// Step-size or weight-sequence choice for the discrete algorithms.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleConfig {
    /// Fixed step; defaults to `1/L` when `eta` is omitted.
    ConstantEta {
        #[serde(default)]
        eta: Option<f64>,
    },
    /// Weight sequence `A_k = k (k+1) / L` (closed-form bounds).
    Polynomial,
    /// The maximal classical recursion (textbook momentum).
    Nesterov,
    /// Explicit weight increments.
    Custom { deltas: Vec<f64> },
}

/// Output file paths; relative paths resolve against the working directory
/// (or the `--out` directory when given).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputsConfig {
    pub csv: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

/// A complete experiment description, read from JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub algorithm: Algorithm,
    /// Discrete algorithms only; defaults to `constant_eta` for `gd` /
    /// `mirror` and `polynomial` for `nag`.
    #[serde(default)]
    pub schedule: Option<ScheduleConfig>,
    pub x0: Vec<f64>,
    /// Iteration budget (discrete algorithms).
    #[serde(default)]
    pub k_max: Option<usize>,
    /// Integration horizon (ODE algorithms).
    #[serde(default)]
    pub t_end: Option<f64>,
    /// Integration grid step (ODE algorithms).
    #[serde(default)]
    pub dt: Option<f64>,
    /// Damping of the flow; defaults to 2 for `nag_ode` and 4 for `amd_ode`.
    #[serde(default)]
    pub r: Option<f64>,
    /// Exact infimum of the tilted objective `g = f - <p*, .>`, when known.
    /// Makes the divergence constant in bound checks exact.
    #[serde(default)]
    pub inf_g: Option<f64>,
    /// Overrides the oracle's smoothness constant (for deliberately
    /// mis-specified runs; bounds are then expected to fail).
    #[serde(default)]
    pub l_override: Option<f64>,
    #[serde(default)]
    pub outputs: OutputsConfig,
    /// Fail the run (exit 2) if any applicable bound is violated.
    #[serde(default)]
    pub assert_bounds: bool,
    /// Seed for the value-bound anchor sampling; all algorithms themselves
    /// are deterministic.
    #[serde(default)]
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    /// Parses a config from JSON text.
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Cross-field consistency checks.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        let discrete = matches!(
            self.algorithm,
            Algorithm::Gd | Algorithm::Nag | Algorithm::Mirror
        );
        if discrete {
            match self.k_max {
                None => return bad("discrete algorithms require k_max".into()),
                Some(0) => return bad("k_max must be at least 1".into()),
                _ => {}
            }
            if self.t_end.is_some() || self.dt.is_some() || self.r.is_some() {
                return bad("t_end/dt/r apply only to the ODE algorithms".into());
            }
        } else {
            if self.t_end.is_none() || self.dt.is_none() {
                return bad("ODE algorithms require t_end and dt".into());
            }
            if self.k_max.is_some() {
                return bad("k_max applies only to the discrete algorithms".into());
            }
            if self.schedule.is_some() {
                return bad("schedules apply only to the discrete algorithms".into());
            }
        }
        match (&self.algorithm, &self.schedule) {
            (Algorithm::Gd | Algorithm::Mirror, Some(s))
                if !matches!(s, ScheduleConfig::ConstantEta { .. }) =>
            {
                return bad("gd and mirror take a constant_eta schedule".into());
            }
            (Algorithm::Nag, Some(ScheduleConfig::ConstantEta { .. })) => {
                return bad("nag takes a weight-sequence schedule (polynomial, nesterov, or custom)".into());
            }
            _ => {}
        }
        if let Some(l) = self.l_override {
            if !(l.is_finite() && l > 0.0) {
                return bad(format!("l_override {l} must be positive and finite"));
            }
        }
        if let Some(v) = self.inf_g {
            if !v.is_finite() {
                return bad(format!("inf_g {v} must be finite"));
            }
        }
        Ok(())
    }
}

/// Final state of a run, written as the summary JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    /// `UNBOUNDED` when a detection rule fired, else `INCONCLUSIVE`.
    pub verdict: String,
    pub trigger_index: Option<usize>,
    /// The certificate vector that crossed its threshold, if any.
    pub witness: Option<Vec<f64>>,
    /// Worst relative slack over every bound family checked on this run;
    /// nonpositive means all bounds held. Absent when no bound was checkable.
    pub max_bound_slack: Option<f64>,
    pub runtime_ms: u64,
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: RunSummary,
    /// Per-iteration (or per-sample) series; header depends on the
    /// algorithm family and on which ingredients were available.
    pub csv: String,
}

/// Boundedness decision, printed by `certify`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateReport {
    /// `UNBOUNDED` or `INCONCLUSIVE`.
    pub verdict: String,
    pub witness: Option<Vec<f64>>,
    /// Which certificate crossed: `p` (difference) or `q` (displacement).
    pub witness_kind: Option<String>,
    pub trigger_index: Option<usize>,
    pub threshold_used: Option<f64>,
    /// Human-readable statement of the fired rule.
    pub bound_formula: Option<String>,
}

/// One entry of a sweep report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepEntry {
    pub config: String,
    /// `pass`, `bound_violation`, or `error`.
    pub status: String,
    pub verdict: Option<String>,
    pub max_bound_slack: Option<f64>,
    pub error: Option<String>,
}

/// Aggregate outcome of running a directory of configs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub runs: Vec<SweepEntry>,
}

impl SweepReport {
    /// `0` all passed; `1` some config/runtime error; `2` bound violations
    /// only.
    pub fn exit_code(&self) -> i32 {
        if self.runs.iter().any(|r| r.status == "error") {
            1
        } else if self.failed > 0 {
            2
        } else {
            0
        }
    }
}

/// Presents a wrapped oracle with a replacement smoothness constant, so a
/// mis-specified `L` flows consistently into schedules, bounds, and
/// detection thresholds.
struct SmoothnessOverride<'a> {
    inner: &'a dyn ObjectiveOracle,
    l: f64,
}

impl ObjectiveOracle for SmoothnessOverride<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn smoothness(&self) -> f64 {
        self.l
    }
    fn eval(&self, x: &Vector) -> f64 {
        self.inner.eval(x)
    }
    fn grad(&self, x: &Vector) -> Vector {
        self.inner.grad(x)
    }
    fn conjugate_bound(&self) -> Option<f64> {
        self.inner.conjugate_bound()
    }
    fn dual_set(&self) -> Option<crate::dualgeom::DualSetDescription> {
        self.inner.dual_set()
    }
}

/// What the run managed to learn about the dual geometry.
struct DualInfo {
    p_star: Option<Vector>,
    /// Present when both `p_star` and a divergence value are available.
    ctx: Option<BoundsContext>,
}

fn resolve_dual(
    f: &dyn ObjectiveOracle,
    x0: &Vector,
    inf_g: Option<f64>,
) -> Result<DualInfo, HarnessError> {
    let Some(set) = f.dual_set() else {
        return Ok(DualInfo {
            p_star: None,
            ctx: None,
        });
    };
    let p_star = min_norm_point(&set).map_err(HarnessError::run)?.point;
    let divergence = match inf_g {
        Some(inf) => Some((f.eval(x0) - p_star.dot(x0) - inf, true)),
        None => divergence_upper_bound(f, x0).ok().map(|d| (d, false)),
    };
    let ctx = divergence.map(|(d, exact)| {
        BoundsContext::new(f.smoothness(), d, exact, p_star.clone()).with_grad0(&f.grad(x0))
    });
    Ok(DualInfo {
        p_star: Some(p_star),
        ctx,
    })
}

/// Deterministic CSV cell for a float (shortest round-trip formatting).
fn cell(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v}")
    }
}

fn flag(b: bool) -> String {
    if b { "1" } else { "0" }.into()
}

/// Column-wise CSV assembly with a fixed header.
struct CsvBuilder {
    text: String,
    columns: usize,
}

impl CsvBuilder {
    fn new(header: &[&str]) -> Self {
        CsvBuilder {
            text: format!("{}\n", header.join(",")),
            columns: header.len(),
        }
    }

    fn push_row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.columns);
        let _ = writeln!(self.text, "{}", cells.join(","));
    }

    fn finish(self) -> String {
        self.text
    }
}

/// Relative excess of `lhs` over its bound `rhs`; positive means violated.
/// Non-finite measurements count as outright violations.
fn rel_excess(lhs: f64, rhs: f64) -> f64 {
    if !lhs.is_finite() {
        return f64::INFINITY;
    }
    (lhs - rhs) / (1.0 + rhs.abs())
}

/// Seeded anchor points for the value-bound spot check, drawn around `x0`.
fn sample_anchors(x0: &Vector, seed: u64) -> Vec<Vector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..VALUE_ANCHORS)
        .map(|_| {
            let entries: Vec<f64> = x0.iter().map(|v| v + rng.gen_range(-2.0..2.0)).collect();
            Vector::from_slice(&entries)
        })
        .collect()
}

struct NagRun {
    csv: String,
    trigger: Option<Trigger>,
    slack: Option<f64>,
}

fn run_nag_experiment(
    f: &dyn ObjectiveOracle,
    config: &ExperimentConfig,
    x0: &Vector,
    dual: &DualInfo,
) -> Result<NagRun, HarnessError> {
    let k_max = config.k_max.unwrap();
    let spec = match config.schedule.as_ref().unwrap_or(&ScheduleConfig::Polynomial) {
        ScheduleConfig::Polynomial => ScheduleSpec::Polynomial,
        ScheduleConfig::Nesterov => ScheduleSpec::NesterovMax,
        ScheduleConfig::Custom { deltas } => ScheduleSpec::Custom {
            deltas: deltas.clone(),
        },
        ScheduleConfig::ConstantEta { .. } => unreachable!("rejected by validate"),
    };
    let schedule = make_schedule(&spec, f.smoothness(), k_max).map_err(HarnessError::run)?;
    let traj = run_nag(f, x0, &schedule, k_max).map_err(HarnessError::run)?;
    let certs = certificates(&traj, &schedule);

    let at_origin = x0.norm_sq() == 0.0;
    let detection = match (f.conjugate_bound(), at_origin) {
        (Some(m), true) => {
            let d = detect_unbounded_nag(&traj, &schedule, &certs, m).map_err(HarnessError::run)?;
            Some((m, d))
        }
        _ => None,
    };
    let trigger = detection.as_ref().and_then(|(_, d)| {
        match (&d.p_trigger, &d.q_trigger) {
            (Some(p), Some(q)) => Some(if q.index <= p.index { q } else { p }),
            (Some(p), None) => Some(p),
            (None, Some(q)) => Some(q),
            (None, None) => None,
        }
        .cloned()
    });

    let energy = dual
        .ctx
        .as_ref()
        .map(|ctx| energy_series(&traj, &schedule, f, ctx, x0));

    // Bound assertions: every certificate inequality, plus the value bound
    // at the final iterate against seeded anchors.
    let slack = dual.ctx.as_ref().map(|ctx| {
        let bounds = bound_series(&schedule, ctx, k_max);
        let mut worst = max_bound_violation(&traj, &certs, &bounds, ctx);
        if !traj.values_x.iter().all(|v| v.is_finite()) {
            worst = f64::INFINITY;
        }
        let p_star = &ctx.p_star;
        let g = |x: &Vector, fx: f64| fx - p_star.dot(x);
        let g_end = g(&traj.xs[k_max], traj.values_x[k_max]);
        for w in sample_anchors(x0, config.seed.unwrap_or(0)) {
            let bound = g(&w, f.eval(&w)) + value_upper_bound(&schedule, x0, &w, k_max);
            worst = worst.max(rel_excess(g_end, bound));
        }
        worst
    });

    // Columns in fixed order, dropped only when their ingredients are
    // unavailable for the whole run.
    let has_inf = config.inf_g.is_some() && dual.p_star.is_some();
    let has_dual = dual.p_star.is_some();
    let has_energy = energy.is_some();
    let has_detect = detection.is_some();
    let mut header = vec!["k", "f"];
    if has_inf {
        header.push("g_minus_inf");
    }
    header.push("grad_norm_sq");
    if has_dual {
        header.extend(["p_err_sq", "p_gap", "q_err_sq", "q_gap"]);
    }
    header.extend(["B_k", "Btilde_k"]);
    if has_energy {
        header.push("energy");
    }
    if has_detect {
        header.extend(["detected_p", "detected_q"]);
    }
    let mut csv = CsvBuilder::new(&header);
    let p_sq = dual.p_star.as_ref().map(|p| p.norm_sq());
    for k in 1..k_max {
        let mut row = vec![format!("{k}"), cell(traj.values_x[k])];
        if has_inf {
            let p_star = dual.p_star.as_ref().unwrap();
            row.push(cell(
                traj.values_x[k] - p_star.dot(&traj.xs[k]) - config.inf_g.unwrap(),
            ));
        }
        row.push(cell(traj.grads_y[k].norm_sq()));
        if let Some(p_star) = &dual.p_star {
            let p_sq = p_sq.unwrap();
            row.push(cell(certs.p[k - 1].dist_sq(p_star)));
            row.push(cell(certs.p[k - 1].norm_sq() - p_sq));
            row.push(cell(certs.q[k - 1].dist_sq(p_star)));
            row.push(cell(certs.q[k - 1].norm_sq() - p_sq));
        }
        row.push(cell(schedule.b(k)));
        row.push(cell(schedule.b_tilde(k)));
        if let Some(energy) = &energy {
            row.push(cell(energy.values[k]));
        }
        if let Some((m, _)) = &detection {
            let budget = m + traj.values_x[0];
            row.push(flag(certs.p[k - 1].norm_sq() > schedule.b(k) * budget));
            row.push(flag(certs.q[k - 1].norm_sq() > schedule.b_tilde(k) * budget));
        }
        csv.push_row(&row);
    }
    Ok(NagRun {
        csv: csv.finish(),
        trigger,
        slack,
    })
}

fn run_gd_experiment(
    f: &dyn ObjectiveOracle,
    config: &ExperimentConfig,
    x0: &Vector,
    dual: &DualInfo,
) -> Result<NagRun, HarnessError> {
    let k_max = config.k_max.unwrap();
    let eta = match config.schedule.as_ref() {
        Some(ScheduleConfig::ConstantEta { eta: Some(e) }) => *e,
        _ => 1.0 / f.smoothness(),
    };
    let schedule = StepSchedule::Constant { eta };
    let traj = run_gd(f, x0, &schedule, k_max).map_err(HarnessError::run)?;

    let at_origin = x0.norm_sq() == 0.0;
    let detection = match (f.conjugate_bound(), at_origin && traj.is_classic_step()) {
        (Some(m), true) => Some((
            m,
            detect_unbounded_gd(&traj, m).map_err(HarnessError::run)?,
        )),
        _ => None,
    };
    let trigger = detection.as_ref().and_then(|(_, t)| t.clone());

    let slack = dual.ctx.as_ref().and_then(|ctx| {
        let bounds = gd_bounds(&traj, ctx).ok()?;
        let p_sq = ctx.p_star_norm_sq();
        let mut worst = f64::NEG_INFINITY;
        for k in 1..=k_max {
            worst = worst.max(rel_excess(
                traj.grads[k].norm_sq() - p_sq,
                bounds.grad_gap[k - 1],
            ));
            if let (Some(q_err), Some(q_gap)) = (&bounds.q_err, &bounds.q_gap) {
                let q = traj.q(k);
                worst = worst.max(rel_excess(q.dist_sq(&ctx.p_star), q_err[k - 1]));
                worst = worst.max(rel_excess(q.norm_sq() - p_sq, q_gap[k - 1]));
            }
        }
        Some(worst)
    });

    let has_inf = config.inf_g.is_some() && dual.p_star.is_some();
    let has_dual = dual.p_star.is_some();
    let has_detect = detection.is_some();
    let mut header = vec!["k", "f"];
    if has_inf {
        header.push("g_minus_inf");
    }
    header.push("grad_norm_sq");
    if has_dual {
        header.extend(["q_err_sq", "q_gap"]);
    }
    if has_detect {
        header.push("detected");
    }
    let mut csv = CsvBuilder::new(&header);
    let p_sq = dual.p_star.as_ref().map(|p| p.norm_sq());
    let f0 = traj.values[0];
    for k in 1..=k_max {
        let mut row = vec![format!("{k}"), cell(traj.values[k])];
        if has_inf {
            let p_star = dual.p_star.as_ref().unwrap();
            row.push(cell(
                traj.values[k] - p_star.dot(&traj.xs[k]) - config.inf_g.unwrap(),
            ));
        }
        let grad_sq = traj.grads[k].norm_sq();
        row.push(cell(grad_sq));
        if let Some(p_star) = &dual.p_star {
            let q = traj.q(k);
            row.push(cell(q.dist_sq(p_star)));
            row.push(cell(q.norm_sq() - p_sq.unwrap()));
        }
        if let Some((m, _)) = &detection {
            let threshold = 2.0 * traj.smoothness * (m + f0) / k as f64;
            row.push(flag(grad_sq > threshold));
        }
        csv.push_row(&row);
    }
    Ok(NagRun {
        csv: csv.finish(),
        trigger,
        slack,
    })
}

fn run_mirror_experiment(
    psi_star: &dyn ObjectiveOracle,
    config: &ExperimentConfig,
    theta0: &Vector,
) -> Result<NagRun, HarnessError> {
    let k_max = config.k_max.unwrap();
    let outer = SquaredNorm::new(psi_star.dim());
    let eta = match config.schedule.as_ref() {
        Some(ScheduleConfig::ConstantEta { eta: Some(e) }) => *e,
        _ => 1.0 / (psi_star.smoothness() * outer.smoothness()),
    };
    let schedule = StepSchedule::Constant { eta };
    let traj =
        run_mirror(psi_star, &outer, theta0, &schedule, k_max).map_err(HarnessError::run)?;

    // The checkable invariant is the dissipated energy against a dual
    // anchor; the final iterate is the natural one.
    let slack = if traj.rate_applies {
        let anchor = traj.thetas[k_max].clone();
        let energy =
            mirror_energy(&traj, psi_star, &outer, &anchor).map_err(HarnessError::run)?;
        let mut worst = f64::NEG_INFINITY;
        for k in 1..energy.len() {
            let scale = 1.0 + energy[k - 1].abs();
            worst = worst.max((energy[k] - energy[k - 1]) / scale);
        }
        Some(worst)
    } else {
        None
    };

    let mut csv = CsvBuilder::new(&["k", "f_outer"]);
    for k in 0..=k_max {
        csv.push_row(&[format!("{k}"), cell(traj.outer_values[k])]);
    }
    Ok(NagRun {
        csv: csv.finish(),
        trigger: None,
        slack,
    })
}

fn run_nag_ode_experiment(
    f: &dyn ObjectiveOracle,
    config: &ExperimentConfig,
    x0: &Vector,
    dual: &DualInfo,
) -> Result<NagRun, HarnessError> {
    let r = config.r.unwrap_or(2.0);
    let traj = integrate_nag_ode(f, x0, r, config.t_end.unwrap(), config.dt.unwrap())
        .map_err(HarnessError::run)?;

    let slack = dual.ctx.as_ref().map(|ctx| {
        let report = continuous_bounds(&traj, ctx, 1);
        let mut worst = f64::NEG_INFINITY;
        let mut push = |ratio: Option<f64>| {
            if let Some(v) = ratio {
                worst = worst.max(if v.is_finite() { v - 1.0 } else { f64::INFINITY });
            }
        };
        push(Some(report.p_gap_general));
        push(Some(report.q_err_general));
        push(report.p_err_sharp);
        push(report.p_gap_sharp);
        push(report.q_err_sharp);
        worst
    });

    let energy = match (&dual.ctx, r == 2.0) {
        (Some(ctx), true) => Some(continuous_energy(&traj, f, ctx, x0).map_err(HarnessError::run)?),
        _ => None,
    };

    let has_inf = config.inf_g.is_some() && dual.p_star.is_some();
    let has_dual = dual.p_star.is_some();
    let mut header = vec!["t", "f"];
    if has_inf {
        header.push("g_minus_inf");
    }
    if has_dual {
        header.extend(["p_err_sq", "p_gap", "q_err_sq", "q_gap"]);
    }
    if energy.is_some() {
        header.push("energy");
    }
    let mut csv = CsvBuilder::new(&header);
    let p_sq = dual.p_star.as_ref().map(|p| p.norm_sq());
    for i in traj.sample_indices(SAMPLES_PER_DECADE) {
        let s = &traj.states[i];
        let fx = f.eval(&s.x);
        let mut row = vec![cell(s.t), cell(fx)];
        if has_inf {
            let p_star = dual.p_star.as_ref().unwrap();
            row.push(cell(fx - p_star.dot(&s.x) - config.inf_g.unwrap()));
        }
        if let Some(p_star) = &dual.p_star {
            let p_sq = p_sq.unwrap();
            let p = traj.p(i);
            let q = traj.q(i);
            row.push(cell(p.dist_sq(p_star)));
            row.push(cell(p.norm_sq() - p_sq));
            row.push(cell(q.dist_sq(p_star)));
            row.push(cell(q.norm_sq() - p_sq));
        }
        if let Some(energy) = &energy {
            row.push(cell(energy[i]));
        }
        csv.push_row(&row);
    }
    Ok(NagRun {
        csv: csv.finish(),
        trigger: None,
        slack,
    })
}

fn run_amd_ode_experiment(
    psi_star: &dyn ObjectiveOracle,
    config: &ExperimentConfig,
    z0: &Vector,
    dual: &DualInfo,
) -> Result<NagRun, HarnessError> {
    let r_cap = config.r.unwrap_or(4.0);
    let traj = integrate_amd_ode(psi_star, z0, r_cap, config.t_end.unwrap(), config.dt.unwrap())
        .map_err(HarnessError::run)?;

    // Norm-minimization rate: |X(t)|^2/2 - |p*|^2/2 <= R^2 D / t^2.
    let slack = dual.ctx.as_ref().map(|ctx| {
        let p_sq = ctx.p_star_norm_sq();
        let mut worst = f64::NEG_INFINITY;
        for s in &traj.states {
            let gap = 0.5 * s.x.norm_sq() - 0.5 * p_sq;
            let bound = r_cap * r_cap * ctx.divergence / (s.t * s.t);
            let piece = if !gap.is_finite() {
                f64::INFINITY
            } else if bound > 0.0 {
                (gap - bound) / bound
            } else {
                rel_excess(gap, bound)
            };
            worst = worst.max(piece);
        }
        worst
    });

    let has_dual = dual.p_star.is_some();
    let mut header = vec!["t", "f"];
    if has_dual {
        header.push("p_gap");
    }
    let mut csv = CsvBuilder::new(&header);
    let p_sq = dual.p_star.as_ref().map(|p| p.norm_sq());
    for i in traj.sample_indices(SAMPLES_PER_DECADE) {
        let s = &traj.states[i];
        let mut row = vec![cell(s.t), cell(0.5 * s.x.norm_sq())];
        if has_dual {
            row.push(cell(s.x.norm_sq() - p_sq.unwrap()));
        }
        csv.push_row(&row);
    }
    Ok(NagRun {
        csv: csv.finish(),
        trigger: None,
        slack,
    })
}

/// Runs a validated config and returns its outputs (no file IO).
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutcome, HarnessError> {
    config.validate()?;
    let start = Instant::now();
    let base = config.problem.build().map_err(HarnessError::run)?;
    let override_oracle;
    let f: &dyn ObjectiveOracle = match config.l_override {
        Some(l) => {
            override_oracle = SmoothnessOverride { inner: &*base, l };
            &override_oracle
        }
        None => &*base,
    };
    let x0 = Vector::new(config.x0.clone()).map_err(HarnessError::run)?;
    if x0.len() != f.dim() {
        return Err(HarnessError::Config(format!(
            "x0 has dimension {}, problem has {}",
            x0.len(),
            f.dim()
        )));
    }
    let dual = resolve_dual(f, &x0, config.inf_g)?;
    if config.assert_bounds && dual.ctx.is_none() && config.algorithm != Algorithm::Mirror {
        return Err(HarnessError::Config(
            "assert_bounds needs a computable divergence: provide inf_g or a problem with a conjugate bound".into(),
        ));
    }

    let run = match config.algorithm {
        Algorithm::Nag => run_nag_experiment(f, config, &x0, &dual)?,
        Algorithm::Gd => run_gd_experiment(f, config, &x0, &dual)?,
        Algorithm::Mirror => run_mirror_experiment(f, config, &x0)?,
        Algorithm::NagOde => run_nag_ode_experiment(f, config, &x0, &dual)?,
        Algorithm::AmdOde => run_amd_ode_experiment(f, config, &x0, &dual)?,
    };

    let verdict = if run.trigger.is_some() {
        "UNBOUNDED"
    } else {
        "INCONCLUSIVE"
    };
    let summary = RunSummary {
        verdict: verdict.into(),
        trigger_index: run.trigger.as_ref().map(|t| t.index),
        witness: run
            .trigger
            .as_ref()
            .map(|t| t.witness.as_slice().to_vec()),
        max_bound_slack: run.slack,
        runtime_ms: start.elapsed().as_millis() as u64,
    };

    if config.assert_bounds {
        let tolerance = match config.algorithm {
            Algorithm::NagOde | Algorithm::AmdOde => ASSERT_TOL_CONTINUOUS,
            _ => ASSERT_TOL_DISCRETE,
        };
        if let Some(slack) = run.slack {
            if slack > tolerance {
                // Outputs are still returned (and written by the caller)
                // so the failure can be inspected.
                return Err(HarnessError::BoundViolation { slack, tolerance });
            }
        }
    }

    Ok(RunOutcome {
        summary,
        csv: run.csv,
    })
}

fn resolve_out(path: &Path, out_dir: Option<&Path>) -> PathBuf {
    match (out_dir, path.file_name()) {
        (Some(dir), Some(name)) => dir.join(name),
        _ => path.to_path_buf(),
    }
}

fn write_output(path: &Path, out_dir: Option<&Path>, text: &str) -> Result<(), HarnessError> {
    let target = resolve_out(path, out_dir);
    if let Some(parent) = target.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(&target, text)?;
    Ok(())
}

/// `run` verb: load a config, run it, write the configured outputs.
///
/// `force_assert` turns on `assert_bounds` regardless of the config. Output
/// files are written even when the run ends in a bound violation, so the
/// series stay inspectable; nothing is written on config errors.
pub fn cli_run(
    config_path: &Path,
    out_dir: Option<&Path>,
    force_assert: bool,
) -> Result<RunSummary, HarnessError> {
    let text = fs::read_to_string(config_path)
        .map_err(|e| HarnessError::Config(format!("{}: {e}", config_path.display())))?;
    let mut config = ExperimentConfig::from_json(&text)
        .map_err(|e| HarnessError::Config(format!("{}: {e}", config_path.display())))?;
    if force_assert {
        config.assert_bounds = true;
    }

    // Run without the assertion first so outputs always exist for
    // inspection, then re-apply the assertion verdict.
    let assert_requested = config.assert_bounds;
    config.assert_bounds = false;
    let outcome = run_experiment(&config)?;
    if let Some(csv_path) = &config.outputs.csv {
        write_output(csv_path, out_dir, &outcome.csv)?;
    }
    if let Some(summary_path) = &config.outputs.summary {
        let mut text = serde_json::to_string_pretty(&outcome.summary)
            .map_err(|e| HarnessError::Run(e.to_string()))?;
        text.push('\n');
        write_output(summary_path, out_dir, &text)?;
    }
    if assert_requested {
        let tolerance = match config.algorithm {
            Algorithm::NagOde | Algorithm::AmdOde => ASSERT_TOL_CONTINUOUS,
            _ => ASSERT_TOL_DISCRETE,
        };
        if let Some(slack) = outcome.summary.max_bound_slack {
            if slack > tolerance {
                return Err(HarnessError::BoundViolation { slack, tolerance });
            }
        }
    }
    Ok(outcome.summary)
}

/// Decision core of the `certify` verb: momentum run from the origin with
/// the polynomial schedule, both certificate detectors armed.
pub fn certify_problem(
    problem: &ProblemSpec,
    budget: usize,
) -> Result<CertificateReport, HarnessError> {
    if budget < 2 {
        return Err(HarnessError::Config(
            "certification budget must be at least 2 iterations".into(),
        ));
    }
    let f = problem.build().map_err(HarnessError::run)?;
    let m = f
        .conjugate_bound()
        .ok_or(HarnessError::MissingConjugateBound)?;
    let x0 = Vector::zeros(f.dim());
    let schedule =
        make_schedule(&ScheduleSpec::Polynomial, f.smoothness(), budget).map_err(HarnessError::run)?;
    let traj = run_nag(&*f, &x0, &schedule, budget).map_err(HarnessError::run)?;
    let certs = certificates(&traj, &schedule);
    let detection =
        detect_unbounded_nag(&traj, &schedule, &certs, m).map_err(HarnessError::run)?;

    let (kind, trigger) = match (detection.p_trigger, detection.q_trigger) {
        (Some(p), Some(q)) => {
            if q.index <= p.index {
                ("q", Some(q))
            } else {
                ("p", Some(p))
            }
        }
        (Some(p), None) => ("p", Some(p)),
        (None, Some(q)) => ("q", Some(q)),
        (None, None) => ("", None),
    };
    let report = match trigger {
        Some(t) => CertificateReport {
            verdict: "UNBOUNDED".into(),
            witness: Some(t.witness.as_slice().to_vec()),
            witness_kind: Some(kind.into()),
            trigger_index: Some(t.index),
            threshold_used: Some(t.threshold),
            bound_formula: Some(match kind {
                "q" => "norm_sq(q_k) > Btilde_k * (M + f(0))".into(),
                _ => "norm_sq(p_k) > B_k * (M + f(0))".into(),
            }),
        },
        None => CertificateReport {
            verdict: "INCONCLUSIVE".into(),
            witness: None,
            witness_kind: None,
            trigger_index: None,
            threshold_used: None,
            bound_formula: None,
        },
    };
    Ok(report)
}

/// `certify` verb: like [`certify_problem`], reading the problem JSON from
/// a file.
pub fn cli_certify(problem_path: &Path, budget: usize) -> Result<CertificateReport, HarnessError> {
    let text = fs::read_to_string(problem_path)
        .map_err(|e| HarnessError::Config(format!("{}: {e}", problem_path.display())))?;
    let problem: ProblemSpec = serde_json::from_str(&text)
        .map_err(|e| HarnessError::Config(format!("{}: {e}", problem_path.display())))?;
    certify_problem(&problem, budget)
}

/// `sweep` verb: run every `.json` config in a directory (concurrently;
/// runs share nothing) and aggregate pass/fail.
pub fn cli_sweep(dir: &Path, out_dir: Option<&Path>) -> Result<SweepReport, HarnessError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| HarnessError::Config(format!("{}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    paths.sort();

    let results: Vec<(String, Result<RunSummary, HarnessError>)> = std::thread::scope(|scope| {
        let handles: Vec<_> = paths
            .iter()
            .map(|path| {
                scope.spawn(move || {
                    let name = path
                        .file_name()
                        .map(|n| n.to_string_lossy().into_owned())
                        .unwrap_or_else(|| path.display().to_string());
                    (name, cli_run(path, out_dir, false))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });

    let runs: Vec<SweepEntry> = results
        .into_iter()
        .map(|(config, result)| match result {
            Ok(summary) => SweepEntry {
                config,
                status: "pass".into(),
                verdict: Some(summary.verdict),
                max_bound_slack: summary.max_bound_slack,
                error: None,
            },
            Err(e @ HarnessError::BoundViolation { .. }) => SweepEntry {
                config,
                status: "bound_violation".into(),
                verdict: None,
                max_bound_slack: None,
                error: Some(e.to_string()),
            },
            Err(e) => SweepEntry {
                config,
                status: "error".into(),
                verdict: None,
                max_bound_slack: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let total = runs.len();
    let passed = runs.iter().filter(|r| r.status == "pass").count();
    Ok(SweepReport {
        total,
        passed,
        failed: total - passed,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geometric_spec() -> ProblemSpec {
        ProblemSpec::Geometric {
            c: vec![1.0, 1.0, 1.0, 1.0],
            omega: vec![
                vec![3.0, 0.0],
                vec![0.0, 1.0],
                vec![1.0, 2.0],
                vec![3.0, 3.0],
            ],
        }
    }

    /// LSE over a square centered at the origin: bounded below.
    fn bounded_spec() -> ProblemSpec {
        ProblemSpec::Geometric {
            c: vec![1.0, 1.0, 1.0, 1.0],
            omega: vec![
                vec![1.0, 1.0],
                vec![1.0, -1.0],
                vec![-1.0, 1.0],
                vec![-1.0, -1.0],
            ],
        }
    }

    const GEO_INF_G: f64 = 0.325_082_973_391_448_26;

    fn nag_config(k_max: usize) -> ExperimentConfig {
        ExperimentConfig {
            problem: geometric_spec(),
            algorithm: Algorithm::Nag,
            schedule: None,
            x0: vec![0.0, 0.0],
            k_max: Some(k_max),
            t_end: None,
            dt: None,
            r: None,
            inf_g: Some(GEO_INF_G),
            l_override: None,
            outputs: OutputsConfig::default(),
            assert_bounds: false,
            seed: Some(7),
        }
    }

    #[test]
    fn config_validation_rejects_inconsistent_fields() {
        let mut bad = nag_config(10);
        bad.dt = Some(1e-3);
        assert!(matches!(bad.validate(), Err(HarnessError::Config(_))));

        let mut bad = nag_config(10);
        bad.k_max = None;
        assert!(matches!(bad.validate(), Err(HarnessError::Config(_))));

        let mut bad = nag_config(10);
        bad.schedule = Some(ScheduleConfig::ConstantEta { eta: None });
        assert!(matches!(bad.validate(), Err(HarnessError::Config(_))));

        // Unknown fields are rejected at parse time.
        let err = ExperimentConfig::from_json(
            r#"{"problem": {"type": "onedim_tight", "alpha": 0.5}, "algorithm": "gd",
                "x0": [0], "k_max": 5, "surprise": 1}"#,
        );
        assert!(matches!(err, Err(HarnessError::Config(_))));
    }

    #[test]
    fn nag_run_detects_and_satisfies_bounds() {
        let config = nag_config(64);
        let outcome = run_experiment(&config).unwrap();
        assert_eq!(outcome.summary.verdict, "UNBOUNDED");
        assert!(outcome.summary.trigger_index.unwrap() <= 20);
        assert!(outcome.summary.max_bound_slack.unwrap() <= 1e-9);
        let header = outcome.csv.lines().next().unwrap();
        assert_eq!(
            header,
            "k,f,g_minus_inf,grad_norm_sq,p_err_sq,p_gap,q_err_sq,q_gap,B_k,Btilde_k,energy,detected_p,detected_q"
        );
        assert_eq!(outcome.csv.lines().count(), 64); // header + k = 1..=63
        // Determinism: identical config, identical bytes.
        let again = run_experiment(&config).unwrap();
        assert_eq!(outcome.csv, again.csv);
    }

    #[test]
    fn gd_run_detects_more_slowly() {
        let mut config = nag_config(100);
        config.algorithm = Algorithm::Gd;
        let outcome = run_experiment(&config).unwrap();
        assert_eq!(outcome.summary.verdict, "UNBOUNDED");
        let k = outcome.summary.trigger_index.unwrap();
        assert!(k <= 56, "gd trigger {k}");
        assert!(outcome.summary.max_bound_slack.unwrap() <= 1e-9);
        assert!(outcome
            .csv
            .lines()
            .next()
            .unwrap()
            .starts_with("k,f,g_minus_inf,grad_norm_sq,q_err_sq,q_gap,detected"));
    }

    #[test]
    fn mirror_run_reports_energy_slack() {
        let mut config = nag_config(50);
        config.algorithm = Algorithm::Mirror;
        config.inf_g = None;
        let outcome = run_experiment(&config).unwrap();
        assert_eq!(outcome.summary.verdict, "INCONCLUSIVE");
        assert!(outcome.summary.max_bound_slack.unwrap() <= 1e-9);
        assert_eq!(outcome.csv.lines().next().unwrap(), "k,f_outer");
        assert_eq!(outcome.csv.lines().count(), 52); // header + k = 0..=50
    }

    #[test]
    fn ode_runs_emit_sampled_series() {
        let mut config = nag_config(1);
        config.algorithm = Algorithm::NagOde;
        config.k_max = None;
        config.t_end = Some(5.0);
        config.dt = Some(1e-2);
        let outcome = run_experiment(&config).unwrap();
        assert_eq!(
            outcome.csv.lines().next().unwrap(),
            "t,f,g_minus_inf,p_err_sq,p_gap,q_err_sq,q_gap,energy"
        );
        assert!(outcome.summary.max_bound_slack.unwrap() <= ASSERT_TOL_CONTINUOUS);
        // Log sampling keeps the series short.
        assert!(outcome.csv.lines().count() < 120);

        config.algorithm = Algorithm::AmdOde;
        let outcome = run_experiment(&config).unwrap();
        assert_eq!(outcome.csv.lines().next().unwrap(), "t,f,p_gap");
        assert!(outcome.summary.max_bound_slack.unwrap() <= ASSERT_TOL_CONTINUOUS);
    }

    #[test]
    fn wrong_smoothness_fails_the_assertion() {
        // Understating L tightens every bound; at k = 1 the displacement
        // certificate equals grad f(0) exactly, so its error bound 4 L D
        // is provably violated once L is small enough.
        let mut config = nag_config(200);
        config.l_override = Some(0.3);
        config.assert_bounds = true;
        let err = run_experiment(&config).unwrap_err();
        assert!(matches!(err, HarnessError::BoundViolation { .. }));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn certify_distinguishes_the_instances() {
        let report = certify_problem(&geometric_spec(), 1000).unwrap();
        assert_eq!(report.verdict, "UNBOUNDED");
        assert!(report.trigger_index.unwrap() <= 20);
        assert_eq!(report.witness_kind.as_deref(), Some("q"));
        let w = report.witness.unwrap();
        let threshold = report.threshold_used.unwrap();
        // The witness crossed its threshold, and the same constant bounds
        // its distance to the dual optimum (0.3, 0.9).
        let norm_sq = w[0] * w[0] + w[1] * w[1];
        assert!(norm_sq > threshold);
        let err_sq = (w[0] - 0.3).powi(2) + (w[1] - 0.9).powi(2);
        assert!(err_sq <= threshold, "witness {w:?} outside its own error bound");

        let report = certify_problem(&bounded_spec(), 300).unwrap();
        assert_eq!(report.verdict, "INCONCLUSIVE");
        assert!(report.trigger_index.is_none());
    }

    #[test]
    fn cli_run_writes_outputs_and_rejects_bad_configs() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = nag_config(32);
        config.outputs = OutputsConfig {
            csv: Some(dir.path().join("series.csv")),
            summary: Some(dir.path().join("summary.json")),
        };
        let config_path = dir.path().join("config.json");
        fs::write(&config_path, serde_json::to_string(&config).unwrap()).unwrap();
        let summary = cli_run(&config_path, None, false).unwrap();
        assert_eq!(summary.verdict, "UNBOUNDED");
        assert!(dir.path().join("series.csv").exists());
        let read_back: RunSummary =
            serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap())
                .unwrap();
        assert_eq!(read_back.trigger_index, summary.trigger_index);

        // Malformed config: error out before writing anything.
        let bad_path = dir.path().join("bad.json");
        fs::write(&bad_path, "{\"problem\": 3}").unwrap();
        let out_dir = dir.path().join("fresh");
        let err = cli_run(&bad_path, Some(&out_dir), false).unwrap_err();
        assert!(matches!(err, HarnessError::Config(_)));
        assert_eq!(err.exit_code(), 1);
        assert!(!out_dir.exists());
    }

    #[test]
    fn sweep_aggregates_mixed_results() {
        let dir = tempfile::tempdir().unwrap();
        let good = nag_config(64);
        fs::write(
            dir.path().join("a_good.json"),
            serde_json::to_string(&good).unwrap(),
        )
        .unwrap();
        let mut wrong_l = nag_config(200);
        wrong_l.l_override = Some(0.3);
        wrong_l.assert_bounds = true;
        fs::write(
            dir.path().join("b_wrong_l.json"),
            serde_json::to_string(&wrong_l).unwrap(),
        )
        .unwrap();
        fs::write(dir.path().join("notes.txt"), "ignored").unwrap();

        let report = cli_sweep(dir.path(), None).unwrap();
        assert_eq!(report.total, 2);
        assert_eq!(report.passed, 1);
        assert_eq!(report.runs[0].config, "a_good.json");
        assert_eq!(report.runs[0].status, "pass");
        assert_eq!(report.runs[1].status, "bound_violation");
        assert_eq!(report.exit_code(), 2);

        let empty = tempfile::tempdir().unwrap();
        let report = cli_sweep(empty.path(), None).unwrap();
        assert_eq!(report.total, 0);
        assert_eq!(report.exit_code(), 0);
    }
}
