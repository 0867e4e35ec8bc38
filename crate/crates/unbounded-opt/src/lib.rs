//! Detection and certification of unboundedness for smooth convex
//! minimization.
//!
//! For a smooth convex `f` with `inf f = -inf`, the gradient trajectories of
//! first-order methods cannot converge — but their gradients (and suitable
//! running averages) converge to the minimum-norm point `p*` of the closure
//! of the domain of the convex conjugate `f*`. A nonzero `p*` is a
//! certificate of unboundedness, and the distance of gradient averages from
//! `p*` decays at quantified rates. This crate implements:
//!
//! * objective families whose dual sets are known in closed form
//!   ([`objectives`]);
//! * exact minimum-norm solvers for those dual geometries ([`dualgeom`]);
//! * gradient descent and mirror descent with certificate extraction and
//!   unboundedness detection ([`descent`]);
//! * accelerated (momentum) methods with general step-size schedules,
//!   certificate series, non-asymptotic bounds, and detection rules
//!   ([`accel`]);
//! * their continuous-time limits as ODE flows, with the matching
//!   continuous-time certificates and bounds ([`ode`]);
//! * an experiment harness and CLI that runs bound-checked experiments
//!   from JSON configs and certifies problem files ([`harness`]).

pub mod accel;
pub mod descent;
pub mod dualgeom;
pub mod harness;
pub mod matrix;
pub mod objectives;
pub mod ode;
pub mod oracle;
pub mod vector;

pub use dualgeom::{
    membership_gap, min_norm_point, BoundsContext, DualGeomError, DualSetDescription,
    MinNormResult, NewtonPolytopeStats,
};
pub use matrix::SymMatrix;
pub use objectives::{
    EllipsoidObjective, GeometricProgram, LinearObjective, ObjectiveError, OneDimTight,
    ProblemSpec, ShiftedObjective, SquaredNorm,
};
pub use oracle::{
    bregman_divergence, check_smooth_convex, divergence_upper_bound, finite_difference_grad,
    CoreError, DivergenceValue, ObjectiveOracle, SmoothConvexReport,
};
pub use vector::Vector;
