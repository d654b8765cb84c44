//! Cone-preserving damped Newton solver for the Dirichlet problem
//! `σ₂(D²u) = f(x, u, Du)` on a cube.
//!
//! Boundary nodes are unknowns with the equation `u = g`, so a change of
//! boundary data enters the interior through a smooth Newton correction
//! instead of a jump in the first layer of second differences.

mod linear;
mod stencil;

pub use linear::{bicgstab, Csr, LinearSolveInfo};
pub use stencil::{evaluate, jacobian, Evaluation};

use serde::{Deserialize, Serialize};

use crate::calculus::{hessian_at, make_manufactured, ManufacturedSpec, RhsModel};
use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::linalg::Vec3;
use crate::symfun::{eigen_sorted, in_gamma2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveParams {
    /// Target for `max |σ₂(D²_h u) − f|` and for the boundary mismatch.
    pub tol: f64,
    pub max_iter: usize,
    /// Relative cone margin required of every accepted iterate.
    pub tau: f64,
    /// Stages of the boundary-data homotopy; 0 solves directly.
    pub homotopy_steps: usize,
    pub linear_tol: f64,
    pub linear_max_iter: usize,
    /// Curvature of the initial quadratic; `None` matches `3A² = f` at the centre.
    pub init_a: Option<f64>,
    /// Deepest stage bisection before giving up.
    pub max_subdivisions: usize,
}

impl Default for SolveParams {
    fn default() -> Self {
        SolveParams {
            tol: 1e-10,
            max_iter: 40,
            tau: 1e-8,
            homotopy_steps: 0,
            linear_tol: 1e-10,
            linear_max_iter: 20_000,
            init_a: None,
            max_subdivisions: 6,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    /// Accepted Newton steps over all stages.
    pub iterations: usize,
    /// Merit (max residual) before the first step and after each accepted step.
    pub residuals: Vec<f64>,
    pub damping: Vec<f64>,
    /// Worst interior relative cone margin (`τ` added back) of each accepted iterate.
    pub cone_margins: Vec<f64>,
    pub linear_iterations: Vec<usize>,
    pub converged: bool,
    /// Homotopy parameter reached at the end of each completed stage.
    pub stages: Vec<f64>,
    /// Rows of the last Jacobian breaking the M-matrix sign pattern.
    pub mp_violations: usize,
    /// Nodes where `max|λ(D²_h u)| > Δ_h u + 1e-8(1 + Δ_h u)` on the result.
    pub lap_bound_violations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitReport {
    pub admissible: bool,
    pub min_margin: f64,
    pub min_sigma2: f64,
}

fn boundary_values(lo: f64, hi: f64, n: usize, g: &(dyn Fn(&Vec3) -> f64 + Sync)) -> Result<GridField> {
    GridField::from_fn(lo, hi, n, g)
}

fn interior_cone(u: &GridField, tau: f64) -> (f64, f64) {
    let n = u.n;
    let mut margin = f64::INFINITY;
    let mut s2 = f64::INFINITY;
    for k in 1..n - 1 {
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                let rep = in_gamma2(&hessian_at(u, [i, j, k]), tau);
                margin = margin.min(rep.margin);
                s2 = s2.min(rep.sigma2);
            }
        }
    }
    (margin, s2)
}

/// `½A|x|²` on interior nodes, `g` on the boundary.
pub fn admissible_init(
    lo: f64,
    hi: f64,
    n: usize,
    g: &(dyn Fn(&Vec3) -> f64 + Sync),
    a: f64,
    tau: f64,
) -> Result<(GridField, InitReport)> {
    if !(a > 0.0) {
        return Err(Error::domain(format!("initial curvature must be positive, got {a}")));
    }
    let mut u = GridField::from_fn(lo, hi, n, |x| 0.5 * a * crate::linalg::dot(x, x))?;
    let gb = boundary_values(lo, hi, n, g)?;
    for idx in 0..u.values.len() {
        let [i, j, k] = u.coords(idx);
        if u.is_boundary(i, j, k) {
            u.values[idx] = gb.values[idx];
        }
    }
    let (m, s2) = interior_cone(&u, tau);
    Ok((
        u,
        InitReport {
            admissible: m > 0.0,
            min_margin: m,
            min_sigma2: s2,
        },
    ))
}

fn auto_curvature(rhs: &dyn RhsModel, lo: f64, hi: f64) -> f64 {
    let c = 0.5 * (lo + hi);
    let x = [c, c, c];
    let mut a: f64 = 1.0;
    for _ in 0..4 {
        let f = rhs.eval(&x, 0.5 * a * 3.0 * c * c, &[a * c; 3]).f;
        if f > 0.0 && f.is_finite() {
            a = (f / 3.0).sqrt();
        }
    }
    a
}

/// Damped Newton on one fixed boundary target; `u` is updated in place.
fn newton(u: &mut GridField, g: &[f64], rhs: &dyn RhsModel, p: &SolveParams, stats: &mut SolveStats) -> Result<()> {
    let mut ev = evaluate(u, g, rhs, p.tau);
    if ev.min_margin <= 0.0 {
        return Err(Error::ConeExit {
            node: ev.worst_node,
            margin: ev.min_margin,
        });
    }
    if stats.residuals.is_empty() {
        stats.residuals.push(ev.merit());
    }
    let mut local = 0;
    while ev.merit() > p.tol {
        if local >= p.max_iter {
            stats.converged = false;
            return Err(Error::NonConvergence {
                stats: Box::new(stats.clone()),
            });
        }
        let (jm, mp) = jacobian(u, rhs);
        stats.mp_violations = mp;
        let b: Vec<f64> = ev.residual.iter().map(|r| -r).collect();
        let (delta, info) = bicgstab(&jm, &b, p.linear_tol, p.linear_max_iter)?;
        stats.linear_iterations.push(info.iterations);

        let mut accepted = None;
        let mut worst = (ev.worst_node, ev.min_margin);
        let mut alpha = 1.0;
        for _ in 0..=10 {
            let mut trial = u.clone();
            for (t, d) in trial.values.iter_mut().zip(&delta) {
                *t += alpha * d;
            }
            let tev = evaluate(&trial, g, rhs, p.tau);
            if tev.min_margin > 0.0 && tev.merit() < ev.merit() {
                accepted = Some((trial, tev));
                break;
            }
            if tev.min_margin <= 0.0 {
                worst = (tev.worst_node, tev.min_margin);
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((trial, tev)) => {
                *u = trial;
                ev = tev;
                stats.iterations += 1;
                stats.residuals.push(ev.merit());
                stats.damping.push(alpha);
                stats.cone_margins.push(ev.min_margin + p.tau);
                local += 1;
            }
            None if worst.1 <= 0.0 => {
                return Err(Error::ConeExit {
                    node: worst.0,
                    margin: worst.1,
                });
            }
            None => {
                stats.converged = false;
                return Err(Error::NonConvergence {
                    stats: Box::new(stats.clone()),
                });
            }
        }
    }
    assert!(
        ev.min_margin > 0.0,
        "accepted iterate left the cone at {:?}",
        ev.worst_node
    );
    Ok(())
}

/// Solves `σ₂(D²_h u) = f(x, u, D_h u)` with `u = g` on the faces of
/// `[lo, hi]³`.
pub fn solve_dirichlet(
    rhs: &dyn RhsModel,
    g: &(dyn Fn(&Vec3) -> f64 + Sync),
    lo: f64,
    hi: f64,
    n: usize,
    params: &SolveParams,
) -> Result<(GridField, SolveStats)> {
    if n < 9 {
        return Err(Error::domain(format!("solve_dirichlet needs n >= 9, got {n}")));
    }
    if !(rhs.positivity_floor() > 0.0) {
        return Err(Error::domain(format!(
            "right-hand side floor {} is not positive",
            rhs.positivity_floor()
        )));
    }
    let a = params.init_a.unwrap_or_else(|| auto_curvature(rhs, lo, hi));
    let q = move |x: &Vec3| 0.5 * a * crate::linalg::dot(x, x);
    let gq = boundary_values(lo, hi, n, &q)?;
    let gg = boundary_values(lo, hi, n, g)?;
    let blend = |s: f64| -> Vec<f64> {
        gq.values
            .iter()
            .zip(&gg.values)
            .map(|(a, b)| if s == 1.0 { *b } else { (1.0 - s) * a + s * b })
            .collect()
    };

    let (mut u, init) = admissible_init(lo, hi, n, g, a, params.tau)?;
    let mut stats = SolveStats::default();
    let direct = params.homotopy_steps == 0 && init.admissible;
    if direct {
        newton(&mut u, &gg.values, rhs, params, &mut stats)?;
        stats.stages.push(1.0);
    } else {
        // start from the quadratic itself, which is admissible
        u = gq.clone();
        let steps = params.homotopy_steps.max(1);
        let mut s = 0.0;
        let mut ds = 1.0 / steps as f64;
        let mut depth = 0;
        while s < 1.0 {
            let target = (s + ds).min(1.0);
            let target = if 1.0 - target < 1e-12 { 1.0 } else { target };
            let mut trial = u.clone();
            let mut trial_stats = stats.clone();
            match newton(&mut trial, &blend(target), rhs, params, &mut trial_stats) {
                Ok(()) => {
                    u = trial;
                    stats = trial_stats;
                    stats.stages.push(target);
                    s = target;
                }
                Err(e @ (Error::ConeExit { .. } | Error::NonConvergence { .. })) => {
                    depth += 1;
                    if depth > params.max_subdivisions {
                        return Err(e);
                    }
                    ds *= 0.5;
                }
                Err(e) => return Err(e),
            }
        }
    }
    // boundary rows are converged to tolerance; pin them exactly
    for idx in 0..u.values.len() {
        let [i, j, k] = u.coords(idx);
        if u.is_boundary(i, j, k) {
            u.values[idx] = gg.values[idx];
        }
    }
    stats.converged = true;
    stats.lap_bound_violations = lap_bound_violations(&u);
    Ok((u, stats))
}

/// Interior nodes where `max|λ(D²_h u)| ≤ Δ_h u + 1e-8(1 + Δ_h u)` fails.
pub fn lap_bound_violations(u: &GridField) -> usize {
    let n = u.n;
    let mut bad = 0;
    for k in 1..n - 1 {
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                let d2 = hessian_at(u, [i, j, k]);
                let lap = d2.trace();
                if let Ok(e) = eigen_sorted(&d2) {
                    let m = e.lambda1.abs().max(e.lambda3.abs());
                    if m > lap + 1e-8 * (1.0 + lap.abs()) {
                        bad += 1;
                    }
                }
            }
        }
    }
    bad
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub max_error: f64,
    /// Order against the previous row; `None` on the first row or when both
    /// errors are at round-off.
    pub order: Option<f64>,
    pub iterations: usize,
    /// Smallest cone margin over accepted iterates.
    pub min_margin: f64,
    pub runtime: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub id: String,
    pub rows: Vec<ConvergenceRow>,
    /// Every error is at round-off: the discrete solution is the exact one.
    pub exact: bool,
}

/// Error level treated as round-off in convergence tables.
pub const EXACT_LEVEL: f64 = 1e-11;

/// Manufactured-solution study on `[lo, hi]³` over the given grids.
pub fn convergence_study(
    spec: ManufacturedSpec,
    lo: f64,
    hi: f64,
    grids: &[usize],
    params: &SolveParams,
) -> Result<ConvergenceTable> {
    if grids.len() < 3 {
        return Err(Error::domain("convergence_study needs at least three grids"));
    }
    let m = make_manufactured(spec, lo, hi)?;
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for &n in grids {
        let t = std::time::Instant::now();
        let exact = |x: &Vec3| m.u(x);
        let (u, st) = solve_dirichlet(&m, &exact, lo, hi, n, params)?;
        let ue = GridField::from_fn(lo, hi, n, exact)?;
        let err = u.max_diff(&ue)?;
        let h = u.h();
        let order = rows.last().and_then(|prev| {
            if prev.max_error <= EXACT_LEVEL && err <= EXACT_LEVEL {
                None
            } else {
                Some((prev.max_error / err).ln() / (prev.h / h).ln())
            }
        });
        rows.push(ConvergenceRow {
            n,
            h,
            max_error: err,
            order,
            iterations: st.iterations,
            min_margin: st.cone_margins.iter().copied().fold(f64::INFINITY, f64::min),
            runtime: t.elapsed().as_secs_f64(),
        });
    }
    let exact = rows.iter().all(|r| r.max_error <= EXACT_LEVEL);
    Ok(ConvergenceTable {
        id: spec.id(),
        rows,
        exact,
    })
}
