//! Geometry of the gradient graph `x ↦ (x, Du(x))`: the gauge
//! `r² = f|x−y₀|² + |Du(x)−Du(y₀)|²`, the weighted measure
//! `σ₁(σ₁f−σ₃)dx`, ball masses, mass/δ³ profiles and the gradient bound
//! for `r`.
//!
//! Masses use a subcell midpoint rule: every grid cell is split into
//! `m³` subcells and `Du`, `f` and the density are interpolated
//! trilinearly from the nodes. With a sharp indicator the quadrature
//! error is `O(h/m)` near the ball surface.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::{eval_along, gradient_at, hessian_at, total_first, Jet3, RhsModel};
use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::linalg::{dot, norm, sub, Vec3};
use crate::rng::{random_gamma2_triple, stream};
use crate::symfun::{sigma2_gradient, sigma_of_matrix, EigenTriple};

/// Subcells per axis in the ball quadrature.
pub const SUBCELLS: usize = 8;

/// Indicator of the ball `{r ≤ δ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Indicator {
    Sharp,
    /// Linear ramp of total width `width` centred on `r = δ`.
    Smoothed {
        width: f64,
    },
}

impl Indicator {
    fn weight(&self, r: f64, delta: f64) -> f64 {
        match *self {
            Indicator::Sharp => {
                if r <= delta {
                    1.0
                } else {
                    0.0
                }
            }
            Indicator::Smoothed { width } => (0.5 + (delta - r) / width).clamp(0.0, 1.0),
        }
    }

    fn reach(&self, delta: f64) -> f64 {
        match *self {
            Indicator::Sharp => delta,
            Indicator::Smoothed { width } => delta + 0.5 * width,
        }
    }
}

/// `σ₁(σ₁f − σ₃)` at a jet.
pub fn weighted_density(jet: &Jet3, rhs: &dyn RhsModel) -> Result<f64> {
    let f = eval_along(rhs, jet).f;
    density(&jet.d2u, f, &jet.x)
}

fn density(d2u: &crate::linalg::SymMat3, f: f64, x: &Vec3) -> Result<f64> {
    let (s1, s2, s3) = sigma_of_matrix(d2u);
    if !(s1 > 0.0 && s2 > 0.0) {
        return Err(Error::domain(format!(
            "Hessian outside the cone at {x:?} (σ₁ = {s1:.3e}, σ₂ = {s2:.3e})"
        )));
    }
    if !(f > 0.0) {
        return Err(Error::domain(format!("f = {f:.3e} is not positive at {x:?}")));
    }
    let w = s1 * (s1 * f - s3);
    if !(w > 0.0) {
        return Err(Error::domain(format!(
            "weighted density {w:.3e} is not positive at {x:?}"
        )));
    }
    Ok(w)
}

/// Nodal quantities shared by every ball computation on one field.
/// Only nodes at depth ≥ 1 carry data.
pub struct GraphData<'a> {
    pub field: &'a GridField,
    pub du: Vec<Vec3>,
    pub f: Vec<f64>,
    pub sigma1: Vec<f64>,
    pub density: Vec<f64>,
}

impl<'a> GraphData<'a> {
    pub fn new(field: &'a GridField, rhs: &dyn RhsModel) -> Result<Self> {
        let len = field.values.len();
        let nodal: Vec<Result<(Vec3, f64, f64, f64)>> = (0..len)
            .into_par_iter()
            .map(|idx| {
                let node = field.coords(idx);
                if field.depth(node) < 1 {
                    return Ok(([f64::NAN; 3], f64::NAN, f64::NAN, f64::NAN));
                }
                let x = field.point(node[0], node[1], node[2]);
                let p = gradient_at(field, node);
                let d2 = hessian_at(field, node);
                let f = rhs.eval(&x, field.values[idx], &p).f;
                let w = density(&d2, f, &x)?;
                Ok((p, f, d2.trace(), w))
            })
            .collect();
        let mut g = GraphData {
            field,
            du: Vec::with_capacity(len),
            f: Vec::with_capacity(len),
            sigma1: Vec::with_capacity(len),
            density: Vec::with_capacity(len),
        };
        for r in nodal {
            let (p, f, s1, w) = r?;
            g.du.push(p);
            g.f.push(f);
            g.sigma1.push(s1);
            g.density.push(w);
        }
        Ok(g)
    }

    /// Centre at an interior node, with `Du(y₀)` from the same stencil.
    pub fn center(&self, node: [usize; 3]) -> Result<GraphCenter> {
        if self.field.depth(node) < 1 || node.iter().any(|&c| c >= self.field.n) {
            return Err(Error::domain(format!("centre {node:?} is not an interior node")));
        }
        let idx = self.field.index(node[0], node[1], node[2]);
        Ok(GraphCenter {
            node,
            y0: self.field.point(node[0], node[1], node[2]),
            p0: self.du[idx],
        })
    }

    /// `r(x; y₀)` at a node.
    pub fn radius_at(&self, c: &GraphCenter, node: [usize; 3]) -> Result<f64> {
        if self.field.depth(node) < 1 {
            return Err(Error::domain(format!("node {node:?} is on the boundary layer")));
        }
        let idx = self.field.index(node[0], node[1], node[2]);
        let x = self.field.point(node[0], node[1], node[2]);
        Ok(gauge(self.f[idx], &sub(&x, &c.y0), &sub(&self.du[idx], &c.p0)))
    }

    /// Subcell samples `(gauge, density)` with gauge ≤ `cutoff`, and the
    /// smallest gauge met in cells touching the depth-1 layer.
    fn samples(&self, cutoff: f64, gauge_of: &(dyn Fn(&Vec3, &Vec3, f64) -> f64 + Sync)) -> (Vec<(f64, f64)>, f64) {
        let g = self.field;
        let n = g.n;
        let h = g.h();
        let m = SUBCELLS;
        let t: Vec<f64> = (0..m).map(|a| (a as f64 + 0.5) / m as f64).collect();
        let cells = n - 3;
        let per = (0..cells * cells * cells)
            .into_par_iter()
            .map(|c| {
                let i = 1 + c % cells;
                let j = 1 + (c / cells) % cells;
                let k = 1 + c / (cells * cells);
                let outer = [i, j, k].iter().any(|&a| a == 1 || a == n - 3);
                let corner = |di: usize, dj: usize, dk: usize| g.index(i + di, j + dj, k + dk);
                let ids = [
                    corner(0, 0, 0),
                    corner(1, 0, 0),
                    corner(0, 1, 0),
                    corner(1, 1, 0),
                    corner(0, 0, 1),
                    corner(1, 0, 1),
                    corner(0, 1, 1),
                    corner(1, 1, 1),
                ];
                let base = g.point(i, j, k);
                let mut out = Vec::new();
                let mut edge = f64::INFINITY;
                for &tz in &t {
                    for &ty in &t {
                        for &tx in &t {
                            let wts = [
                                (1.0 - tx) * (1.0 - ty) * (1.0 - tz),
                                tx * (1.0 - ty) * (1.0 - tz),
                                (1.0 - tx) * ty * (1.0 - tz),
                                tx * ty * (1.0 - tz),
                                (1.0 - tx) * (1.0 - ty) * tz,
                                tx * (1.0 - ty) * tz,
                                (1.0 - tx) * ty * tz,
                                tx * ty * tz,
                            ];
                            let mut p = [0.0; 3];
                            let mut f = 0.0;
                            let mut w = 0.0;
                            for (q, &id) in ids.iter().enumerate() {
                                for a in 0..3 {
                                    p[a] += wts[q] * self.du[id][a];
                                }
                                f += wts[q] * self.f[id];
                                w += wts[q] * self.density[id];
                            }
                            let x = [base[0] + tx * h, base[1] + ty * h, base[2] + tz * h];
                            let r = gauge_of(&x, &p, f);
                            if outer {
                                edge = edge.min(r);
                            }
                            if r <= cutoff {
                                out.push((r, w));
                            }
                        }
                    }
                }
                (out, edge)
            })
            .collect::<Vec<_>>();
        let edge = per.iter().fold(f64::INFINITY, |a, (_, e)| a.min(*e));
        let mut all: Vec<(f64, f64)> = per.into_iter().flat_map(|(v, _)| v).collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        (all, edge)
    }

    fn subcell_volume(&self) -> f64 {
        (self.field.h() / SUBCELLS as f64).powi(3)
    }
}

fn gauge(f: f64, dx: &Vec3, dp: &Vec3) -> f64 {
    (f * dot(dx, dx) + dot(dp, dp)).max(0.0).sqrt()
}

/// Centre `y₀` of the graph balls together with `Du(y₀)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphCenter {
    pub node: [usize; 3],
    pub y0: Vec3,
    pub p0: Vec3,
}

/// `r(x; y₀)` between two interior nodes of a field.
pub fn graph_radius(field: &GridField, rhs: &dyn RhsModel, y0: [usize; 3], x: [usize; 3]) -> Result<f64> {
    for node in [y0, x] {
        if field.depth(node) < 1 {
            return Err(Error::domain(format!("node {node:?} is not an interior node")));
        }
    }
    let px = field.point(x[0], x[1], x[2]);
    let duy = gradient_at(field, y0);
    let dux = gradient_at(field, x);
    let f = rhs.eval(&px, field.get(x[0], x[1], x[2]), &dux).f;
    if !(f > 0.0) {
        return Err(Error::domain(format!("f = {f:.3e} is not positive at {px:?}")));
    }
    let py = field.point(y0[0], y0[1], y0[2]);
    Ok(gauge(f, &sub(&px, &py), &sub(&dux, &duy)))
}

fn check_reach(reach: f64, edge: f64) -> Result<()> {
    if reach >= edge {
        return Err(Error::domain(format!(
            "ball of reach {reach:.4} touches the boundary layer (available up to {edge:.4})"
        )));
    }
    Ok(())
}

/// `∫_{r ≤ δ} σ₁(σ₁f − σ₃) dx`.
pub fn ball_mass(data: &GraphData, c: &GraphCenter, delta: f64, ind: Indicator) -> Result<f64> {
    if !(delta >= 0.0) {
        return Err(Error::domain(format!("radius must be nonnegative, got {delta}")));
    }
    let reach = ind.reach(delta);
    let (s, edge) = data.samples(reach, &|x, p, f| gauge(f, &sub(x, &c.y0), &sub(p, &c.p0)));
    check_reach(reach, edge)?;
    if delta == 0.0 {
        return Ok(0.0);
    }
    Ok(data.subcell_volume() * s.iter().map(|&(r, w)| ind.weight(r, delta) * w).sum::<f64>())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassProfile {
    pub radii: Vec<f64>,
    pub masses: Vec<f64>,
    pub ratios: Vec<f64>,
    /// `max_{δ<R} ratio(δ)/ratio(R)`.
    pub c_emp: f64,
}

impl MassProfile {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("delta,mass,ratio\n");
        for i in 0..self.radii.len() {
            s.push_str(&format!(
                "{:e},{:e},{:e}\n",
                self.radii[i], self.masses[i], self.ratios[i]
            ));
        }
        s
    }
}

/// Sharp-indicator masses for increasing radii from one sorted pass.
pub fn monotonicity_profile(data: &GraphData, c: &GraphCenter, radii: &[f64]) -> Result<MassProfile> {
    if radii.is_empty() || radii.windows(2).any(|w| !(w[1] > w[0])) || !(radii[0] > 0.0) {
        return Err(Error::domain("radii must be positive and strictly increasing"));
    }
    let top = *radii.last().unwrap();
    let (s, edge) = data.samples(top, &|x, p, f| gauge(f, &sub(x, &c.y0), &sub(p, &c.p0)));
    check_reach(top, edge)?;
    let dv = data.subcell_volume();
    let mut masses = Vec::with_capacity(radii.len());
    let mut acc = 0.0;
    let mut it = s.iter().peekable();
    for &d in radii {
        while let Some(&&(r, w)) = it.peek() {
            if r > d {
                break;
            }
            acc += w;
            it.next();
        }
        masses.push(acc * dv);
    }
    let ratios: Vec<f64> = masses.iter().zip(radii).map(|(m, d)| m / d.powi(3)).collect();
    let mut c_emp: f64 = 0.0;
    for i in 0..ratios.len() {
        for j in i + 1..ratios.len() {
            c_emp = c_emp.max(ratios[i] / ratios[j]);
        }
    }
    Ok(MassProfile {
        radii: radii.to_vec(),
        masses,
        ratios,
        c_emp,
    })
}

/// `σ₁(y₀) / ∫_{|x−y₀| ≤ radius} σ₁(σ₁f − σ₃) dx`.
pub fn mean_value_ratio(data: &GraphData, c: &GraphCenter, radius: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::domain(format!("radius must be positive, got {radius}")));
    }
    let (s, edge) = data.samples(radius, &|x, _, _| norm(&sub(x, &c.y0)));
    check_reach(radius, edge)?;
    let mass = data.subcell_volume() * s.iter().map(|&(_, w)| w).sum::<f64>();
    let [i, j, k] = c.node;
    Ok(data.sigma1[data.field.index(i, j, k)] / mass)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClaReport {
    /// `σ₂^{ij} r_i r_j / (fσ₁ − σ₃)`.
    pub ratio: f64,
    pub r: f64,
    /// `max(0, ratio − 1) / r`.
    pub excess_per_r: f64,
}

/// Gradient bound for the gauge at a jet, with `r_i` from
/// `2r r_i = f_i|x−y₀|² + 2f(x−y₀)_i + 2(u_k − u_k(y₀)) u_{ki}`.
pub fn cla_ratio(jet: &Jet3, rhs: &dyn RhsModel, c: &GraphCenter) -> Result<ClaReport> {
    let e = eval_along(rhs, jet);
    let f = e.f;
    let dx = sub(&jet.x, &c.y0);
    let dp = sub(&jet.du, &c.p0);
    let r = gauge(f, &dx, &dp);
    if !(r > 0.0) {
        return Err(Error::domain("r = 0 at the jet's base point"));
    }
    let fi = total_first(&e, jet);
    let dpa = jet.d2u.mul_vec(&dp);
    let ri: Vec3 = [0, 1, 2].map(|i| (fi[i] * dot(&dx, &dx) + 2.0 * f * dx[i] + 2.0 * dpa[i]) / (2.0 * r));
    let (s1, _, s3) = sigma_of_matrix(&jet.d2u);
    let w = f * s1 - s3;
    if !(w > 0.0) {
        return Err(Error::domain(format!("fσ₁ − σ₃ = {w:.3e} is not positive")));
    }
    let ratio = sigma2_gradient(&jet.d2u).quad_form(&ri) / w;
    Ok(ClaReport {
        ratio,
        r,
        excess_per_r: (ratio - 1.0).max(0.0) / r,
    })
}

/// Empirical constants of the eigenvalue surrogates on triples with
/// `σ₂ = f = 1` and `λ₃ < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurrogateReport {
    pub samples: u64,
    /// `min (fσ₁ − σ₃) − (fλ₁ + λ₁λ₃²)`; nonnegative on the cone.
    pub first_link_margin: f64,
    /// `inf (fσ₁ − σ₃)/(−λ₂λ₃)`.
    pub c_lower: f64,
    pub argmin_lower: EigenTriple,
    /// `sup λ₁λ₂/(fσ₁ − σ₃)`.
    pub c_upper: f64,
    pub argmax_upper: EigenTriple,
}

pub fn lambda_surrogates(budget: u64, seed: u64) -> Result<SurrogateReport> {
    if budget == 0 {
        return Err(Error::domain("budget must be at least 1"));
    }
    let eval = |idx: u64| {
        let mut rng = stream(seed, idx);
        loop {
            let spread = rng.random_range(0.5..20.0);
            let l = random_gamma2_triple(&mut rng, spread);
            if l.lambda3 < 0.0 {
                return l.scale(1.0 / l.sigma2.sqrt());
            }
        }
    };
    let init = || {
        (
            f64::INFINITY,
            (f64::INFINITY, None::<EigenTriple>),
            (f64::NEG_INFINITY, None::<EigenTriple>),
        )
    };
    let (first, lower, upper) = (0..budget)
        .into_par_iter()
        .map(|i| {
            let l = eval(i);
            let f = l.sigma2;
            let w = f * l.sigma1 - l.sigma3;
            let first = w - (f * l.lambda1 + l.lambda1 * l.lambda3 * l.lambda3);
            (
                first,
                (w / (-l.lambda2 * l.lambda3), Some(l)),
                (l.lambda1 * l.lambda2 / w, Some(l)),
            )
        })
        .fold(init, |a, b| {
            (
                a.0.min(b.0),
                if b.1 .0 < a.1 .0 { b.1 } else { a.1 },
                if b.2 .0 > a.2 .0 { b.2 } else { a.2 },
            )
        })
        .reduce(init, |a, b| {
            (
                a.0.min(b.0),
                if b.1 .0 < a.1 .0 || (b.1 .0 == a.1 .0 && key(&b.1 .1) < key(&a.1 .1)) {
                    b.1
                } else {
                    a.1
                },
                if b.2 .0 > a.2 .0 || (b.2 .0 == a.2 .0 && key(&b.2 .1) < key(&a.2 .1)) {
                    b.2
                } else {
                    a.2
                },
            )
        });
    Ok(SurrogateReport {
        samples: budget,
        first_link_margin: first,
        c_lower: lower.0,
        argmin_lower: lower.1.expect("nonempty"),
        c_upper: upper.0,
        argmax_upper: upper.1.expect("nonempty"),
    })
}

fn key(l: &Option<EigenTriple>) -> [u64; 3] {
    l.map(|l| l.lambdas().map(|v| v.to_bits())).unwrap_or([u64::MAX; 3])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{make_manufactured, ConstantRhs, ManufacturedSpec};
    use crate::linalg::SymMat3;
    use std::f64::consts::PI;

    fn quad_field(a: f64, lo: f64, hi: f64, n: usize) -> GridField {
        GridField::from_fn(lo, hi, n, |x| 0.5 * a * dot(x, x)).unwrap()
    }

    #[test]
    fn radius_of_quadratics() {
        let g = quad_field(1.0, -1.0, 1.0, 17);
        let c = [8, 8, 8];
        assert_eq!(graph_radius(&g, &ConstantRhs(3.0), c, c).unwrap(), 0.0);
        let x = [11, 6, 9];
        let px = g.point(11, 6, 9);
        let r = graph_radius(&g, &ConstantRhs(3.0), c, x).unwrap();
        assert!((r - 2.0 * norm(&px)).abs() < 1e-12);
        let g2 = quad_field(2.0, -1.0, 1.0, 17);
        let r2 = graph_radius(&g2, &ConstantRhs(12.0), c, x).unwrap();
        assert!((r2 - 4.0 * norm(&px)).abs() < 1e-12);
        assert!(graph_radius(&g, &ConstantRhs(0.0), c, x).is_err());
    }

    #[test]
    fn density_examples() {
        let m = make_manufactured(ManufacturedSpec::quad_identity(), -1.0, 1.0).unwrap();
        assert!((weighted_density(&m.jet(&[0.1, 0.2, 0.3]), &m).unwrap() - 24.0).abs() < 1e-12);
        let jet = Jet3 {
            x: [0.0; 3],
            u: 0.0,
            du: [0.0; 3],
            d2u: SymMat3::diag(2.0, 1.0, 0.0),
            d3u: Default::default(),
            d4u: None,
        };
        assert!((weighted_density(&jet, &ConstantRhs(2.0)).unwrap() - 18.0).abs() < 1e-12);
        let bad = Jet3 {
            d2u: SymMat3::diag(-1.0, -1.0, 0.5),
            ..jet
        };
        assert!(weighted_density(&bad, &ConstantRhs(2.0)).is_err());
    }

    #[test]
    fn quad_masses() {
        let g = quad_field(1.0, -1.0, 1.0, 33);
        let d = GraphData::new(&g, &ConstantRhs(3.0)).unwrap();
        let c = d.center([16, 16, 16]).unwrap();
        assert_eq!(ball_mass(&d, &c, 0.0, Indicator::Sharp).unwrap(), 0.0);
        let h = g.h();
        let radii: Vec<f64> = (4..=14).map(|k| k as f64 * h).collect();
        let p = monotonicity_profile(&d, &c, &radii).unwrap();
        for r in &p.ratios {
            assert!((r / (4.0 * PI) - 1.0).abs() < 0.02, "ratio {r}");
        }
        assert!(p.c_emp <= 1.05);
        assert!(p.masses.windows(2).all(|w| w[0] <= w[1]));
        let single = ball_mass(&d, &c, radii[3], Indicator::Sharp).unwrap();
        assert!((single - p.masses[3]).abs() <= 1e-12 * single);
        let smooth = ball_mass(&d, &c, radii[3], Indicator::Smoothed { width: 2.0 * h }).unwrap();
        assert!((smooth / single - 1.0).abs() < 0.02);
        assert!(ball_mass(&d, &c, 1.9, Indicator::Sharp).is_err());
        assert_eq!(p.to_csv().lines().count(), radii.len() + 1);
    }

    #[test]
    fn quad_mean_value() {
        let g = quad_field(1.0, -2.0, 2.0, 33);
        let d = GraphData::new(&g, &ConstantRhs(3.0)).unwrap();
        let c = d.center([16, 16, 16]).unwrap();
        let v = mean_value_ratio(&d, &c, 1.0).unwrap();
        assert!((v / (3.0 / (32.0 * PI)) - 1.0).abs() < 0.02, "{v}");
        // adding a linear function changes nothing
        let g2 = GridField::from_fn(-2.0, 2.0, 33, |x| 0.5 * dot(x, x) + 0.3 * x[0] - x[2]).unwrap();
        let d2 = GraphData::new(&g2, &ConstantRhs(3.0)).unwrap();
        let c2 = d2.center([16, 16, 16]).unwrap();
        assert!((mean_value_ratio(&d2, &c2, 1.0).unwrap() - v).abs() < 1e-12 * v);
    }

    #[test]
    fn cla_quadratic_is_one() {
        let m = make_manufactured(ManufacturedSpec::quad_identity(), -1.0, 1.0).unwrap();
        let c = GraphCenter {
            node: [0; 3],
            y0: [0.0; 3],
            p0: [0.0; 3],
        };
        for x in [[0.3, -0.2, 0.1], [0.0, 0.5, 0.0], [-0.7, 0.7, 0.2]] {
            let rep = cla_ratio(&m.jet(&x), &m, &c).unwrap();
            assert!((rep.ratio - 1.0).abs() < 1e-12);
        }
        assert!(cla_ratio(&m.jet(&[0.0; 3]), &m, &c).is_err());
    }

    #[test]
    fn cla_diagonal_quadratic_at_most_one() {
        let spec = ManufacturedSpec::Quad {
            a: SymMat3::diag(3.0, 1.0, -0.5),
            b: [0.0; 3],
            c: 0.0,
        };
        let m = make_manufactured(spec, -1.0, 1.0).unwrap();
        let c = GraphCenter {
            node: [0; 3],
            y0: [0.0; 3],
            p0: [0.0; 3],
        };
        let mut rng = stream(3, 0);
        for _ in 0..2000 {
            let x = [0, 1, 2].map(|_| rng.random_range(-1.0..1.0));
            let rep = cla_ratio(&m.jet(&x), &m, &c).unwrap();
            assert!(rep.ratio <= 1.0 + 1e-12, "{x:?} {}", rep.ratio);
        }
    }

    #[test]
    fn surrogates() {
        let rep = lambda_surrogates(20_000, 1).unwrap();
        assert!(rep.first_link_margin >= -1e-12);
        assert!(rep.c_lower >= 1.0);
        assert!(rep.c_upper <= 3.0);
        assert_eq!(rep, lambda_surrogates(20_000, 1).unwrap());
    }
}
