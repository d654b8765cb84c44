//! Discrete operator `σ₂(D²_h u) − f(x, u, D_h u)` and its Newton Jacobian.

use rayon::prelude::*;

use crate::calculus::{gradient_at, hessian_at, RhsModel};
use crate::grid::GridField;
use crate::symfun::{in_gamma2, sigma2_gradient, sigma_of_matrix};

use super::linear::Csr;

/// Nodewise state of an iterate: residuals on every node (boundary rows
/// carry `u − g`) and the worst interior cone margin.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub residual: Vec<f64>,
    pub interior_max: f64,
    pub boundary_max: f64,
    pub min_margin: f64,
    pub worst_node: [usize; 3],
}

impl Evaluation {
    pub fn merit(&self) -> f64 {
        self.interior_max.max(self.boundary_max)
    }
}

pub fn evaluate(u: &GridField, g: &[f64], rhs: &dyn RhsModel, tau: f64) -> Evaluation {
    let n = u.n;
    let parts: Vec<(f64, f64, f64, usize)> = (0..n * n * n)
        .into_par_iter()
        .with_min_len(2048)
        .map(|idx| {
            let [i, j, k] = u.coords(idx);
            if u.is_boundary(i, j, k) {
                let r = u.values[idx] - g[idx];
                return (r, 0.0, f64::INFINITY, idx);
            }
            let node = [i, j, k];
            let d2 = hessian_at(u, node);
            let du = gradient_at(u, node);
            let f = rhs.eval(&u.point(i, j, k), u.values[idx], &du).f;
            let (_, s2, _) = sigma_of_matrix(&d2);
            let rep = in_gamma2(&d2, tau);
            (s2 - f, 1.0, rep.margin, idx)
        })
        .collect();
    let mut ev = Evaluation {
        residual: Vec::with_capacity(parts.len()),
        interior_max: 0.0,
        boundary_max: 0.0,
        min_margin: f64::INFINITY,
        worst_node: [0; 3],
    };
    for (r, interior, margin, idx) in parts {
        ev.residual.push(r);
        let a = if r.is_nan() { f64::INFINITY } else { r.abs() };
        if interior > 0.0 {
            ev.interior_max = ev.interior_max.max(a);
            if margin < ev.min_margin || margin.is_nan() {
                ev.min_margin = if margin.is_nan() { f64::NEG_INFINITY } else { margin };
                ev.worst_node = u.coords(idx);
            }
        } else {
            ev.boundary_max = ev.boundary_max.max(a);
        }
    }
    ev
}

/// Jacobian of [`evaluate`]'s residual: `σ₂^{ij}D_ij − f_p·D − f_u` on
/// interior rows, identity on boundary rows. Also returns the number of
/// rows whose off-diagonal entries break the M-matrix sign pattern.
pub fn jacobian(u: &GridField, rhs: &dyn RhsModel) -> (Csr, usize) {
    let n = u.n;
    let total = n * n * n;
    let h = u.h();
    let h2 = h * h;
    let rows: Vec<(Vec<(usize, f64)>, bool)> = (0..total)
        .into_par_iter()
        .with_min_len(2048)
        .map(|idx| {
            let [i, j, k] = u.coords(idx);
            if u.is_boundary(i, j, k) {
                return (vec![(idx, 1.0)], false);
            }
            let node = [i, j, k];
            let d2 = hessian_at(u, node);
            let du = gradient_at(u, node);
            let e = rhs.eval(&u.point(i, j, k), u.values[idx], &du);
            let s = sigma2_gradient(&d2);
            let at = |off: [i64; 3]| -> usize {
                u.index(
                    (i as i64 + off[0]) as usize,
                    (j as i64 + off[1]) as usize,
                    (k as i64 + off[2]) as usize,
                )
            };
            let mut row = Vec::with_capacity(19);
            let mut center = -e.f_u;
            for a in 0..3 {
                let mut plus = [0i64; 3];
                plus[a] = 1;
                let minus = plus.map(|v| -v);
                center -= 2.0 * s.get(a, a) / h2;
                row.push((at(plus), s.get(a, a) / h2 - e.f_p[a] / (2.0 * h)));
                row.push((at(minus), s.get(a, a) / h2 + e.f_p[a] / (2.0 * h)));
                for b in a + 1..3 {
                    let c = s.get(a, b) / (2.0 * h2);
                    for (sa, sb) in [(1i64, 1i64), (1, -1), (-1, 1), (-1, -1)] {
                        let mut off = [0i64; 3];
                        off[a] = sa;
                        off[b] = sb;
                        row.push((at(off), (sa * sb) as f64 * c));
                    }
                }
            }
            row.push((idx, center));
            let tol = 1e-12 * center.abs();
            let bad = row.iter().any(|&(c, v)| c != idx && v < -tol);
            (row, bad)
        })
        .collect();
    let mut m = Csr::with_capacity(total, 19 * total);
    let mut violations = 0;
    for (mut row, bad) in rows {
        violations += bad as usize;
        m.push_row(&mut row);
    }
    (m, violations)
}
