//! Geometry of the dual set `cl(dom f*)`.
//!
//! The sign of unboundedness of a smooth convex `f` is carried entirely by
//! the minimum-norm point `p*` of `cl(dom f*)`: `f` is unbounded below iff
//! `p* != 0`, and every certificate sequence in this crate converges to `p*`.
//! This module computes `p*` (and distances to the dual set) for the three
//! closed-form dual geometries the objective families produce:
//!
//! * polytopes (convex hulls of finitely many points) — via the classical
//!   corral-maintaining minimum-norm-point algorithm, which terminates with
//!   the optimality certificate `<p*, v - p*> >= 0` for every vertex `v`;
//! * ellipsoids `{q : <q-c, A^{-1}(q-c)> <= 1}` — via the one-parameter
//!   stationarity family `q(mu) = mu (A + mu I)^{-1} c` and a monotone
//!   bisection on the boundary constraint;
//! * intervals in one dimension — by clamping.
//!
//! A deliberately naive 2-D enumeration (`min_norm_bruteforce_2d`) serves as
//! an independent oracle against which the corral algorithm is validated on
//! randomized inputs.

use thiserror::Error;

use crate::matrix::SymMatrix;
use crate::vector::Vector;

/// Optimality tolerance for the polytope minimum-norm solve: we stop once
/// `<x, v> >= |x|^2 - WOLFE_TOL * scale` for every vertex `v`.
const WOLFE_TOL: f64 = 1e-12;

/// Coefficients at or below this value are dropped from the corral during
/// line-search steps.
const DROP_TOL: f64 = 1e-12;

/// Convergence target for the ellipsoid boundary bisection.
const BISECTION_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum DualGeomError {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("minimum-norm solve did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    WrongDimension { expected: usize, got: usize },
    #[error("unsupported input: {0}")]
    Unsupported(String),
}

/// Closed-form description of `cl(dom f*)`.
#[derive(Debug, Clone)]
pub enum DualSetDescription {
    /// Convex hull of finitely many points.
    Polytope { vertices: Vec<Vector> },
    /// `{q : <q - center, shape^{-1} (q - center)> <= 1}`.
    Ellipsoid { shape: SymMatrix, center: Vector },
    /// `[lo, hi]` in one dimension.
    Interval { lo: f64, hi: f64 },
}

impl DualSetDescription {
    pub fn dim(&self) -> usize {
        match self {
            DualSetDescription::Polytope { vertices } => {
                vertices.first().map_or(0, Vector::len)
            }
            DualSetDescription::Ellipsoid { center, .. } => center.len(),
            DualSetDescription::Interval { .. } => 1,
        }
    }

    /// The set translated by `shift` (the dual set of `f - <p, .>` is the
    /// dual set of `f` translated by `-p`).
    pub fn translated(&self, shift: &Vector) -> DualSetDescription {
        match self {
            DualSetDescription::Polytope { vertices } => DualSetDescription::Polytope {
                vertices: vertices.iter().map(|v| v.add(shift)).collect(),
            },
            DualSetDescription::Ellipsoid { shape, center } => DualSetDescription::Ellipsoid {
                shape: shape.clone(),
                center: center.add(shift),
            },
            DualSetDescription::Interval { lo, hi } => DualSetDescription::Interval {
                lo: lo + shift[0],
                hi: hi + shift[0],
            },
        }
    }
}

/// Result of a minimum-norm computation.
#[derive(Debug, Clone)]
pub struct MinNormResult {
    /// The minimum-norm point `p*`.
    pub point: Vector,
    /// `|p*|`.
    pub norm: f64,
    /// For polytopes: convex weights over the input vertices with
    /// `sum_i w_i v_i = p*`. `None` for the other geometries.
    pub convex_weights: Option<Vec<f64>>,
}

/// Affine-geometry statistics of a finite exponent set `Omega`:
/// the affine dimension `m` of its hull, the coefficient mass ratio
/// `beta = sum(c) / min(c)`, and the smallest distance `phi` from a point of
/// `Omega` to the affine span of a hull facet not containing it. These are
/// the constants in the value-convergence guarantee for log-sum-exp
/// objectives.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonPolytopeStats {
    pub affine_dim: usize,
    pub beta: f64,
    pub phi: f64,
}

/// Constants consumed by certificate bound evaluation: the smoothness `L`,
/// the divergence `D = D_f(x0, p*)` (exact or an upper bound), and `p*`.
#[derive(Debug, Clone)]
pub struct BoundsContext {
    pub l: f64,
    pub divergence: f64,
    /// Whether `divergence` is the exact `g(x0) - inf g` or only an upper
    /// bound (bounds stay valid either way; they are monotone in `D`).
    pub divergence_exact: bool,
    pub p_star: Vector,
    /// `<grad f(x0) - p*, p*> / (4 L D)`, the start-dependent constant in the
    /// logarithmic gap bounds; set via [`BoundsContext::with_grad0`].
    pub c_remark: Option<f64>,
}

impl BoundsContext {
    pub fn new(l: f64, divergence: f64, divergence_exact: bool, p_star: Vector) -> Self {
        BoundsContext {
            l,
            divergence,
            divergence_exact,
            p_star,
            c_remark: None,
        }
    }

    /// Derives the start constant from `grad f(x0)`.
    pub fn with_grad0(mut self, grad_f_x0: &Vector) -> Self {
        let inner = grad_f_x0.sub(&self.p_star).dot(&self.p_star);
        self.c_remark = Some(inner / (4.0 * self.l * self.divergence));
        self
    }

    pub fn p_star_norm_sq(&self) -> f64 {
        self.p_star.norm_sq()
    }
}

/// Minimum-norm point of a dual set.
pub fn min_norm_point(set: &DualSetDescription) -> Result<MinNormResult, DualGeomError> {
    match set {
        DualSetDescription::Polytope { vertices } => wolfe_min_norm(vertices),
        DualSetDescription::Ellipsoid { shape, center } => ellipsoid_min_norm(shape, center),
        DualSetDescription::Interval { lo, hi } => {
            if lo > hi {
                return Err(DualGeomError::DegenerateInput(format!(
                    "empty interval [{lo}, {hi}]"
                )));
            }
            let p = if *lo > 0.0 {
                *lo
            } else if *hi < 0.0 {
                *hi
            } else {
                0.0
            };
            Ok(MinNormResult {
                point: Vector::from_slice(&[p]),
                norm: p.abs(),
                convex_weights: None,
            })
        }
    }
}

/// Euclidean distance from `p` to the dual set (0 when `p` is a member).
pub fn membership_gap(set: &DualSetDescription, p: &Vector) -> Result<f64, DualGeomError> {
    if set.dim() != p.len() {
        return Err(DualGeomError::WrongDimension {
            expected: set.dim(),
            got: p.len(),
        });
    }
    match set {
        DualSetDescription::Polytope { vertices } => {
            let translated: Vec<Vector> = vertices.iter().map(|v| v.sub(p)).collect();
            Ok(wolfe_min_norm(&translated)?.norm)
        }
        DualSetDescription::Ellipsoid { shape, center } => {
            ellipsoid_projection_gap(shape, center, p)
        }
        DualSetDescription::Interval { lo, hi } => {
            let u = p[0];
            Ok((lo - u).max(u - hi).max(0.0))
        }
    }
}

// ---------------------------------------------------------------------------
// Polytopes: corral-maintaining minimum-norm-point algorithm.
// ---------------------------------------------------------------------------

/// Minimum-norm point of `conv(vertices)`.
///
/// Maintains a "corral": an affinely independent subset of vertices whose
/// affine minimum-norm point has strictly positive convex coefficients.
/// Major cycles add the vertex most violating the optimality inequality
/// `<x, v> >= |x|^2`; minor cycles restore the corral property by
/// line-searching toward the affine minimizer and dropping vertices whose
/// coefficient hits zero.
pub fn wolfe_min_norm(vertices: &[Vector]) -> Result<MinNormResult, DualGeomError> {
    if vertices.is_empty() {
        return Err(DualGeomError::DegenerateInput(
            "polytope needs at least one vertex".into(),
        ));
    }
    let dim = vertices[0].len();
    if vertices.iter().any(|v| v.len() != dim) {
        return Err(DualGeomError::DegenerateInput(
            "polytope vertices have mixed dimensions".into(),
        ));
    }

    // Deduplicate exactly coincident vertices; duplicates would make the
    // corral system singular without enlarging the hull.
    let mut pts: Vec<usize> = Vec::new(); // indices into `vertices`
    for (i, v) in vertices.iter().enumerate() {
        if !pts.iter().any(|&j| vertices[j] == *v) {
            pts.push(i);
        }
    }

    let max_v_norm = vertices.iter().map(Vector::norm).fold(0.0, f64::max);

    // Start from the vertex of smallest norm.
    let start = *pts
        .iter()
        .min_by(|&&a, &&b| {
            vertices[a]
                .norm_sq()
                .total_cmp(&vertices[b].norm_sq())
        })
        .expect("nonempty");
    let mut corral: Vec<usize> = vec![start];
    let mut lambda: Vec<f64> = vec![1.0];
    let mut x = vertices[start].clone();

    let iteration_cap = 16 * (pts.len() + 1) * (pts.len() + 1) + 256;
    let mut iterations = 0usize;

    loop {
        iterations += 1;
        if iterations > iteration_cap {
            return Err(DualGeomError::NonConvergence {
                iterations: iteration_cap,
            });
        }

        // Optimality test over all vertices.
        let scale = 1.0 + x.norm() * max_v_norm;
        let (&j, inner) = pts
            .iter()
            .map(|j| (j, x.dot(&vertices[*j])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        if inner >= x.norm_sq() - WOLFE_TOL * scale || corral.contains(&j) {
            // Either optimal, or no vertex outside the corral can improve —
            // the corral minimizer is the best point representable here.
            break;
        }
        corral.push(j);
        lambda.push(0.0);

        // Minor cycles: move to the affine minimizer of the corral, dropping
        // zero-coefficient vertices until it is a convex minimizer.
        loop {
            iterations += 1;
            if iterations > iteration_cap {
                return Err(DualGeomError::NonConvergence {
                    iterations: iteration_cap,
                });
            }
            let mu = match affine_min_coefficients(vertices, &corral) {
                Some(mu) => mu,
                None => {
                    // Singular corral system: the newest vertex is affinely
                    // dependent on the corral at working precision. Drop it
                    // and accept the current point.
                    corral.pop();
                    lambda.pop();
                    break;
                }
            };
            if mu.iter().all(|&m| m >= -DROP_TOL) {
                lambda = mu.iter().map(|&m| m.max(0.0)).collect();
                break;
            }
            // Line search from lambda toward mu, stopping at the first
            // coefficient to reach zero.
            let mut theta = 1.0f64;
            let mut drop_idx = usize::MAX;
            for (i, (&lo, &mn)) in lambda.iter().zip(&mu).enumerate() {
                if mn < DROP_TOL && lo > mn {
                    let t = lo / (lo - mn);
                    if t < theta {
                        theta = t;
                        drop_idx = i;
                    }
                }
            }
            for (l, &m) in lambda.iter_mut().zip(&mu) {
                *l = (1.0 - theta) * *l + theta * m;
            }
            if drop_idx != usize::MAX {
                lambda[drop_idx] = 0.0;
            }
            let keep: Vec<bool> = lambda.iter().map(|&l| l > DROP_TOL).collect();
            let mut ci = 0;
            corral.retain(|_| {
                ci += 1;
                keep[ci - 1]
            });
            let mut li = 0;
            lambda.retain(|_| {
                li += 1;
                keep[li - 1]
            });
            if corral.is_empty() {
                return Err(DualGeomError::NonConvergence { iterations });
            }
            let total: f64 = lambda.iter().sum();
            lambda.iter_mut().for_each(|l| *l /= total);
        }
        x = convex_combination(vertices, &corral, &lambda);
    }

    let mut weights = vec![0.0; vertices.len()];
    for (&idx, &l) in corral.iter().zip(&lambda) {
        weights[idx] += l;
    }
    Ok(MinNormResult {
        norm: x.norm(),
        point: x,
        convex_weights: Some(weights),
    })
}

fn convex_combination(vertices: &[Vector], idx: &[usize], w: &[f64]) -> Vector {
    let mut x = Vector::zeros(vertices[idx[0]].len());
    for (&i, &wi) in idx.iter().zip(w) {
        x = x.add_scaled(wi, &vertices[i]);
    }
    x
}

/// Coefficients of the minimum-norm point of the affine hull of the corral:
/// solves `min |sum_i mu_i s_i|^2` subject to `sum_i mu_i = 1` through its
/// KKT system. Returns `None` when the system is numerically singular.
fn affine_min_coefficients(vertices: &[Vector], corral: &[usize]) -> Option<Vec<f64>> {
    let m = corral.len();
    let n = m + 1;
    // Bordered Gram system: [[0, 1^T], [1, G]] [nu; mu] = [1; 0].
    let mut a = vec![0.0; n * n];
    let mut rhs = vec![0.0; n];
    rhs[0] = 1.0;
    for i in 0..m {
        a[i + 1] = 1.0;
        a[(i + 1) * n] = 1.0;
        for j in 0..m {
            a[(i + 1) * n + (j + 1)] = vertices[corral[i]].dot(&vertices[corral[j]]);
        }
    }
    let pivot_floor = {
        let scale = a.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        1e-13 * (1.0 + scale)
    };
    // Gaussian elimination with partial pivoting.
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let (best_row, best_val) = (col..n)
            .map(|r| (r, a[perm[r] * n + col].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .expect("nonempty");
        if best_val < pivot_floor {
            return None;
        }
        perm.swap(col, best_row);
        let p = perm[col];
        for r in (col + 1)..n {
            let q = perm[r];
            let factor = a[q * n + col] / a[p * n + col];
            a[q * n + col] = 0.0;
            for c in (col + 1)..n {
                a[q * n + c] -= factor * a[p * n + c];
            }
            rhs[q] -= factor * rhs[p];
        }
    }
    let mut sol = vec![0.0; n];
    for col in (0..n).rev() {
        let p = perm[col];
        let mut s = rhs[p];
        for c in (col + 1)..n {
            s -= a[p * n + c] * sol[c];
        }
        sol[col] = s / a[p * n + col];
    }
    Some(sol[1..].to_vec())
}

// ---------------------------------------------------------------------------
// Brute-force 2-D oracle.
// ---------------------------------------------------------------------------

/// Independent minimum-norm oracle for 2-D polytopes: tests whether the
/// origin lies inside the hull (in which case the answer is 0), otherwise
/// minimizes the norm in closed form on every vertex and vertex-pair segment.
pub fn min_norm_bruteforce_2d(vertices: &[Vector]) -> Result<MinNormResult, DualGeomError> {
    if vertices.is_empty() {
        return Err(DualGeomError::DegenerateInput(
            "polytope needs at least one vertex".into(),
        ));
    }
    if vertices.iter().any(|v| v.len() != 2) {
        return Err(DualGeomError::WrongDimension {
            expected: 2,
            got: vertices.iter().map(Vector::len).find(|&l| l != 2).unwrap_or(2),
        });
    }

    if origin_in_hull_2d(vertices) {
        return Ok(MinNormResult {
            point: Vector::zeros(2),
            norm: 0.0,
            convex_weights: None,
        });
    }

    let mut best: Option<(f64, Vector, Vec<f64>)> = None;
    let mut consider = |norm_sq: f64, point: Vector, weights: Vec<f64>| {
        if best.as_ref().map_or(true, |(b, _, _)| norm_sq < *b) {
            best = Some((norm_sq, point, weights));
        }
    };

    for (i, v) in vertices.iter().enumerate() {
        let mut w = vec![0.0; vertices.len()];
        w[i] = 1.0;
        consider(v.norm_sq(), v.clone(), w);
    }
    for i in 0..vertices.len() {
        for j in (i + 1)..vertices.len() {
            let a = &vertices[i];
            let d = vertices[j].sub(a);
            let dd = d.norm_sq();
            if dd == 0.0 {
                continue;
            }
            let t = (-a.dot(&d) / dd).clamp(0.0, 1.0);
            let p = a.add_scaled(t, &d);
            let mut w = vec![0.0; vertices.len()];
            w[i] = 1.0 - t;
            w[j] = t;
            consider(p.norm_sq(), p, w);
        }
    }

    let (norm_sq, point, weights) = best.expect("at least one candidate");
    Ok(MinNormResult {
        point,
        norm: norm_sq.sqrt(),
        convex_weights: Some(weights),
    })
}

/// Convex-hull membership test for the origin (2-D): monotone-chain hull,
/// then half-plane checks with a small tolerance.
fn origin_in_hull_2d(vertices: &[Vector]) -> bool {
    let mut pts: Vec<(f64, f64)> = vertices.iter().map(|v| (v[0], v[1])).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() == 1 {
        let (x, y) = pts[0];
        return x == 0.0 && y == 0.0;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    let scale = pts
        .iter()
        .map(|p| p.0.abs().max(p.1.abs()))
        .fold(1.0, f64::max);
    let tol = 1e-12 * scale * scale;
    if hull.len() < 3 {
        // Degenerate hull (segment): the origin is inside iff it lies on it.
        let a = hull[0];
        let b = *hull.last().unwrap();
        let along = cross(a, b, (0.0, 0.0)).abs() <= tol;
        let within = (0.0 - a.0) * (0.0 - b.0) + (0.0 - a.1) * (0.0 - b.1) <= tol;
        return along && within;
    }
    (0..hull.len()).all(|i| {
        let a = hull[i];
        let b = hull[(i + 1) % hull.len()];
        cross(a, b, (0.0, 0.0)) >= -tol
    })
}

// ---------------------------------------------------------------------------
// Ellipsoids.
// ---------------------------------------------------------------------------

/// Minimum-norm point of `{q : <q-c, A^{-1}(q-c)> <= 1}`.
///
/// When the origin is outside, the minimizer satisfies the stationarity
/// equation `q + mu A^{-1}(q - c) = 0` for some `mu > 0`, i.e.
/// `q(mu) = mu (A + mu I)^{-1} c`; the boundary constraint in `mu` is
/// monotone, so a doubling-then-bisection search pins it down.
fn ellipsoid_min_norm(shape: &SymMatrix, center: &Vector) -> Result<MinNormResult, DualGeomError> {
    let inside = shape
        .inverse_quad(center)
        .map_err(|e| DualGeomError::DegenerateInput(e.to_string()))?;
    if inside <= 1.0 {
        return Ok(MinNormResult {
            point: Vector::zeros(center.len()),
            norm: 0.0,
            convex_weights: None,
        });
    }
    let boundary_excess = |mu: f64| -> Result<f64, DualGeomError> {
        let q = point_on_family(shape, center, mu)?;
        let diff = q.sub(center);
        Ok(shape
            .inverse_quad(&diff)
            .map_err(|e| DualGeomError::DegenerateInput(e.to_string()))?
            - 1.0)
    };
    let mu = bisect_decreasing(boundary_excess)?;
    let point = point_on_family(shape, center, mu)?;
    Ok(MinNormResult {
        norm: point.norm(),
        point,
        convex_weights: None,
    })
}

fn point_on_family(
    shape: &SymMatrix,
    center: &Vector,
    mu: f64,
) -> Result<Vector, DualGeomError> {
    shape
        .shifted(mu)
        .solve(&center.scale(mu))
        .map_err(|e| DualGeomError::DegenerateInput(e.to_string()))
}

/// Distance from `p` to the ellipsoid; 0 when inside. The projection solves
/// `x(mu) = (A + mu I)^{-1}(A p + mu c)` with the boundary constraint again
/// monotone in `mu`.
fn ellipsoid_projection_gap(
    shape: &SymMatrix,
    center: &Vector,
    p: &Vector,
) -> Result<f64, DualGeomError> {
    let diff = p.sub(center);
    let level = shape
        .inverse_quad(&diff)
        .map_err(|e| DualGeomError::DegenerateInput(e.to_string()))?;
    if level <= 1.0 {
        return Ok(0.0);
    }
    let ap = shape.matvec(p);
    let project = |mu: f64| -> Result<Vector, DualGeomError> {
        shape
            .shifted(mu)
            .solve(&ap.add_scaled(mu, center))
            .map_err(|e| DualGeomError::DegenerateInput(e.to_string()))
    };
    let boundary_excess = |mu: f64| -> Result<f64, DualGeomError> {
        let x = project(mu)?;
        let d = x.sub(center);
        Ok(shape
            .inverse_quad(&d)
            .map_err(|e| DualGeomError::DegenerateInput(e.to_string()))?
            - 1.0)
    };
    let mu = bisect_decreasing(boundary_excess)?;
    Ok(project(mu)?.sub(p).norm())
}

/// Root of a continuous function of `mu >= 0` that is positive at 0 and
/// decreases below 0; doubles an upper bracket, then bisects to relative
/// precision `BISECTION_TOL`.
fn bisect_decreasing(
    f: impl Fn(f64) -> Result<f64, DualGeomError>,
) -> Result<f64, DualGeomError> {
    let mut hi = 1.0f64;
    let mut doublings = 0;
    while f(hi)? > 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > 200 {
            return Err(DualGeomError::NonConvergence { iterations: 200 });
        }
    }
    let mut lo = 0.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= BISECTION_TOL * hi.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

// ---------------------------------------------------------------------------
// Newton-polytope statistics.
// ---------------------------------------------------------------------------

/// Computes [`NewtonPolytopeStats`] for a coefficient/exponent family.
///
/// Facets are enumerated exhaustively over size-`m` point subsets; this is
/// exact and cheap for the affine dimensions used here (`m <= 3`).
pub fn newton_polytope_stats(
    c: &[f64],
    omega: &[Vector],
) -> Result<NewtonPolytopeStats, DualGeomError> {
    if c.len() != omega.len() || omega.is_empty() {
        return Err(DualGeomError::DegenerateInput(
            "coefficients and exponents must be nonempty and aligned".into(),
        ));
    }
    if c.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
        return Err(DualGeomError::DegenerateInput(
            "coefficients must be positive".into(),
        ));
    }
    let c_min = c.iter().cloned().fold(f64::INFINITY, f64::min);
    let beta = c.iter().sum::<f64>() / c_min;

    let coord_scale = omega
        .iter()
        .flat_map(|w| w.iter().map(|v| v.abs()))
        .fold(1.0, f64::max);
    let dedup_tol = 1e-12 * coord_scale;

    let mut pts: Vec<&Vector> = Vec::new();
    for w in omega {
        if !pts
            .iter()
            .any(|p| crate::vector::max_abs_diff(p, w) <= dedup_tol)
        {
            pts.push(w);
        }
    }

    // Orthonormal basis of the affine hull direction space.
    let origin = pts[0];
    let mut basis: Vec<Vector> = Vec::new();
    for p in &pts[1..] {
        let mut d = p.sub(origin);
        for b in &basis {
            d = d.add_scaled(-d.dot(b), b);
        }
        let norm = d.norm();
        if norm > 1e-9 * coord_scale {
            basis.push(d.scale(1.0 / norm));
        }
    }
    let m = basis.len();
    if m == 0 {
        return Err(DualGeomError::DegenerateInput(
            "all exponents coincide; the hull has no facets".into(),
        ));
    }
    if m > 3 {
        return Err(DualGeomError::Unsupported(format!(
            "facet enumeration implemented for affine dimension <= 3, got {m}"
        )));
    }

    // Coordinates in the (isometric) hull frame.
    let coords: Vec<Vec<f64>> = pts
        .iter()
        .map(|p| {
            let d = p.sub(origin);
            basis.iter().map(|b| d.dot(b)).collect()
        })
        .collect();

    let side_tol = 1e-9 * coord_scale;
    let mut phi = f64::INFINITY;
    let mut facets = 0usize;
    let k = pts.len();
    let mut subset = vec![0usize; m];
    enumerate_subsets(k, m, &mut subset, 0, 0, &mut |s: &[usize]| {
        if let Some(normal) = facet_normal(&coords, s) {
            let base = &coords[s[0]];
            let sides: Vec<f64> = coords
                .iter()
                .map(|p| {
                    p.iter()
                        .zip(&normal)
                        .zip(base)
                        .map(|((pi, ni), bi)| ni * (pi - bi))
                        .sum::<f64>()
                })
                .collect();
            let max = sides.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = sides.iter().cloned().fold(f64::INFINITY, f64::min);
            if max <= side_tol || min >= -side_tol {
                facets += 1;
                for &s_i in &sides {
                    if s_i.abs() > side_tol {
                        phi = phi.min(s_i.abs());
                    }
                }
            }
        }
    });
    if facets == 0 || !phi.is_finite() {
        return Err(DualGeomError::DegenerateInput(
            "no supporting facet found".into(),
        ));
    }
    Ok(NewtonPolytopeStats {
        affine_dim: m,
        beta,
        phi,
    })
}

fn enumerate_subsets(
    k: usize,
    m: usize,
    subset: &mut Vec<usize>,
    depth: usize,
    start: usize,
    visit: &mut impl FnMut(&[usize]),
) {
    if depth == m {
        visit(subset);
        return;
    }
    for i in start..k {
        subset[depth] = i;
        enumerate_subsets(k, m, subset, depth + 1, i + 1, visit);
    }
}

/// Unit normal of the hyperplane through the given points in `m`-dimensional
/// hull coordinates, or `None` when they are affinely dependent.
fn facet_normal(coords: &[Vec<f64>], subset: &[usize]) -> Option<Vec<f64>> {
    let m = subset.len();
    match m {
        1 => Some(vec![1.0]),
        2 => {
            let a = &coords[subset[0]];
            let b = &coords[subset[1]];
            let d = [b[0] - a[0], b[1] - a[1]];
            let norm = (d[0] * d[0] + d[1] * d[1]).sqrt();
            if norm < 1e-12 {
                return None;
            }
            Some(vec![-d[1] / norm, d[0] / norm])
        }
        3 => {
            let a = &coords[subset[0]];
            let b = &coords[subset[1]];
            let c = &coords[subset[2]];
            let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
            let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
            let n = [
                u[1] * v[2] - u[2] * v[1],
                u[2] * v[0] - u[0] * v[2],
                u[0] * v[1] - u[1] * v[0],
            ];
            let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
            let scale = u.iter().chain(&v).fold(1.0f64, |s, x| s.max(x.abs()));
            if norm < 1e-12 * scale * scale {
                return None;
            }
            Some(vec![n[0] / norm, n[1] / norm, n[2] / norm])
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::max_abs_diff;

    fn section6_polytope() -> Vec<Vector> {
        vec![
            Vector::from_slice(&[3.0, 0.0]),
            Vector::from_slice(&[0.0, 1.0]),
            Vector::from_slice(&[1.0, 2.0]),
            Vector::from_slice(&[3.0, 3.0]),
        ]
    }

    fn section6_ellipsoid() -> DualSetDescription {
        DualSetDescription::Ellipsoid {
            shape: SymMatrix::from_rows(vec![vec![8.0, 0.0], vec![0.0, 2.0]]).unwrap(),
            center: Vector::from_slice(&[3.0, 3.0]),
        }
    }

    #[test]
    fn polytope_min_norm_on_edge() {
        let set = DualSetDescription::Polytope {
            vertices: section6_polytope(),
        };
        let r = min_norm_point(&set).unwrap();
        assert!(max_abs_diff(&r.point, &Vector::from_slice(&[0.3, 0.9])) < 1e-12);
        assert!((r.norm * r.norm - 0.9).abs() < 1e-12);
        let w = r.convex_weights.unwrap();
        assert!((w[0] - 0.1).abs() < 1e-12);
        assert!((w[1] - 0.9).abs() < 1e-12);
        assert_eq!(w[2], 0.0);
        assert_eq!(w[3], 0.0);
    }

    #[test]
    fn polytope_min_norm_optimality_certificate() {
        let vertices = section6_polytope();
        let r = wolfe_min_norm(&vertices).unwrap();
        for v in &vertices {
            assert!(r.point.dot(&v.sub(&r.point)) >= -1e-9);
        }
    }

    #[test]
    fn polytope_containing_origin() {
        let set = DualSetDescription::Polytope {
            vertices: vec![
                Vector::from_slice(&[1.0, 1.0]),
                Vector::from_slice(&[-1.0, 1.0]),
                Vector::from_slice(&[1.0, -1.0]),
                Vector::from_slice(&[-1.0, -1.0]),
            ],
        };
        let r = min_norm_point(&set).unwrap();
        assert!(r.norm < 1e-9);
    }

    #[test]
    fn ellipsoid_min_norm_ground_truth() {
        let r = min_norm_point(&section6_ellipsoid()).unwrap();
        assert!(max_abs_diff(&r.point, &Vector::from_slice(&[1.0, 2.0])) < 1e-10);
        // Stationarity: p* + mu A^{-1}(p* - b) = 0 at mu = 4.
        let shape = SymMatrix::from_rows(vec![vec![8.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let residual = r
            .point
            .add_scaled(
                4.0,
                &shape
                    .solve(&r.point.sub(&Vector::from_slice(&[3.0, 3.0])))
                    .unwrap(),
            )
            .norm();
        assert!(residual < 1e-9);
    }

    #[test]
    fn ellipsoid_containing_origin() {
        let set = DualSetDescription::Ellipsoid {
            shape: SymMatrix::from_rows(vec![vec![8.0, 0.0], vec![0.0, 2.0]]).unwrap(),
            center: Vector::from_slice(&[0.5, 0.5]),
        };
        let r = min_norm_point(&set).unwrap();
        assert_eq!(r.norm, 0.0);
    }

    #[test]
    fn interval_min_norm_cases() {
        let cases = [
            (-2.0, -1.0, -1.0),
            (1.5, 4.0, 1.5),
            (-0.5, 0.5, 0.0),
        ];
        for (lo, hi, expected) in cases {
            let r = min_norm_point(&DualSetDescription::Interval { lo, hi }).unwrap();
            assert_eq!(r.point[0], expected);
        }
        assert!(min_norm_point(&DualSetDescription::Interval { lo: 1.0, hi: 0.0 }).is_err());
    }

    #[test]
    fn bruteforce_handles_interior_origin_without_chord() {
        // A triangle strictly containing the origin with no vertex-pair
        // segment near it: enumeration alone would report a positive norm.
        let vertices = vec![
            Vector::from_slice(&[-1.0, -1.0]),
            Vector::from_slice(&[3.0, -1.0]),
            Vector::from_slice(&[-1.0, 3.0]),
        ];
        let r = min_norm_bruteforce_2d(&vertices).unwrap();
        assert_eq!(r.norm, 0.0);
    }

    #[test]
    fn bruteforce_segment_and_vertex_cases() {
        let r = min_norm_bruteforce_2d(&section6_polytope()).unwrap();
        assert!(max_abs_diff(&r.point, &Vector::from_slice(&[0.3, 0.9])) < 1e-12);
        let far = vec![
            Vector::from_slice(&[2.0, 1.0]),
            Vector::from_slice(&[5.0, 1.0]),
            Vector::from_slice(&[4.0, 6.0]),
        ];
        let r = min_norm_bruteforce_2d(&far).unwrap();
        assert!(max_abs_diff(&r.point, &Vector::from_slice(&[2.0, 1.0])) < 1e-12);
    }

    #[test]
    fn membership_gap_cases() {
        let set = DualSetDescription::Polytope {
            vertices: section6_polytope(),
        };
        assert!(membership_gap(&set, &Vector::from_slice(&[3.0, 0.0])).unwrap() < 1e-12);
        let gap = membership_gap(&set, &Vector::zeros(2)).unwrap();
        assert!((gap - 0.9f64.sqrt()).abs() < 1e-12);

        // One grid unit outside an axis point of the ellipsoid boundary.
        let eps = 1e-3;
        let outside = Vector::from_slice(&[3.0 + 8.0f64.sqrt() + eps, 3.0]);
        let gap = membership_gap(&section6_ellipsoid(), &outside).unwrap();
        assert!((gap - eps).abs() < 1e-10);

        let interval = DualSetDescription::Interval { lo: -2.0, hi: -1.0 };
        assert_eq!(membership_gap(&interval, &Vector::from_slice(&[-1.5])).unwrap(), 0.0);
        assert_eq!(membership_gap(&interval, &Vector::from_slice(&[0.0])).unwrap(), 1.0);
    }

    #[test]
    fn newton_stats_section6() {
        let stats = newton_polytope_stats(&[1.0, 1.0, 1.0, 1.0], &section6_polytope()).unwrap();
        assert_eq!(stats.affine_dim, 2);
        assert_eq!(stats.beta, 4.0);
        // Minimum vertex-to-facet-span distance: from (0,1) to the span of
        // the edge {(3,3), (1,2)}, i.e. the line x - 2y + 3 = 0.
        assert!((stats.phi - 1.0 / 5.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn newton_stats_segment() {
        let stats = newton_polytope_stats(
            &[1.0, 1.0],
            &[Vector::from_slice(&[0.0, 0.0]), Vector::from_slice(&[1.0, 0.0])],
        )
        .unwrap();
        assert_eq!(stats.affine_dim, 1);
        assert_eq!(stats.phi, 1.0);
        assert_eq!(stats.beta, 2.0);
    }

    #[test]
    fn newton_stats_dedupes_and_rejects_degenerate() {
        let stats = newton_polytope_stats(
            &[1.0, 2.0, 1.0],
            &[
                Vector::from_slice(&[0.0, 0.0]),
                Vector::from_slice(&[0.0, 0.0]),
                Vector::from_slice(&[2.0, 0.0]),
            ],
        )
        .unwrap();
        assert_eq!(stats.affine_dim, 1);
        assert_eq!(stats.phi, 2.0);

        assert!(newton_polytope_stats(
            &[1.0, 1.0],
            &[Vector::from_slice(&[1.0]), Vector::from_slice(&[1.0])],
        )
        .is_err());
    }

    #[test]
    fn translation_moves_min_norm_point() {
        let set = DualSetDescription::Polytope {
            vertices: section6_polytope(),
        };
        let shifted = set.translated(&Vector::from_slice(&[-0.3, -0.9]));
        let r = min_norm_point(&shifted).unwrap();
        assert!(r.norm < 1e-9);
    }

    #[test]
    fn wolfe_matches_bruteforce_on_small_random_family() {
        // A quick deterministic sample; the full randomized comparison runs
        // in the integration suite.
        let mut seed = 0x1234_5678u64;
        let mut next = move || {
            // xorshift64*
            seed ^= seed >> 12;
            seed ^= seed << 25;
            seed ^= seed >> 27;
            (seed.wrapping_mul(0x2545_F491_4F6C_DD1D) >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..50 {
            let count = 1 + (next() * 9.0) as usize;
            let vertices: Vec<Vector> = (0..count)
                .map(|_| Vector::from_slice(&[next() * 10.0 - 5.0, next() * 10.0 - 5.0]))
                .collect();
            let fast = wolfe_min_norm(&vertices).unwrap();
            let slow = min_norm_bruteforce_2d(&vertices).unwrap();
            assert!(
                (fast.norm - slow.norm).abs() <= 1e-9,
                "norm mismatch: {} vs {} on {:?}",
                fast.norm,
                slow.norm,
                vertices
            );
        }
    }
}
