//! A priori estimate harness on discrete solutions: the test quantities
//! `P` and `φ`, the doubling ratio, the `V`-bound check and an audit of
//! the integral chain behind the `log M₁` bound.
//!
//! Geometry: concentric boxes `Bₖ` of half-width `k·unit` around a common
//! centre, `k = 1..5`. Balls `Bₖ(x₀)` in the audit are Euclidean with
//! radius `k·unit`. Integrals are node sums with weight `h³`.

use serde::{Deserialize, Serialize};

use crate::calculus::{gradient_at, hessian_at, RhsModel, LOGB_EPS};
use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::linalg::{dot, norm, sub, SymMat3, Vec3};
use crate::symfun::{eigen_sorted, sigma2_gradient, sigma_of_matrix};

/// `log log 20`, the floor value of the last term of `P` and `φ`.
pub fn loglog20() -> f64 {
    20f64.ln().ln()
}

/// Axis-aligned box `|x − centre|_∞ ≤ half_width`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub center: Vec3,
    pub half_width: f64,
}

impl Region {
    pub fn contains(&self, x: &Vec3) -> bool {
        let tol = 1e-12 * (1.0 + self.half_width);
        (0..3).all(|a| (x[a] - self.center[a]).abs() <= self.half_width + tol)
    }
}

/// `B₁ ⊂ … ⊂ B₅` with half-widths in ratio 1:2:3:4:5.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regions {
    pub center: Vec3,
    pub unit: f64,
}

impl Regions {
    /// Largest geometry whose `B₅` keeps two nodes clear of the faces.
    pub fn for_field(field: &GridField) -> Result<Self> {
        let half = 0.5 * (field.hi - field.lo);
        let unit = (half - 2.0 * field.h()) / 5.0;
        if !(unit > 0.0) {
            return Err(Error::domain(format!(
                "grid n = {} too coarse for the region geometry",
                field.n
            )));
        }
        Ok(Regions {
            center: field.center(),
            unit,
        })
    }

    pub fn b(&self, k: usize) -> Region {
        Region {
            center: self.center,
            half_width: k as f64 * self.unit,
        }
    }

    pub fn inner(&self) -> Region {
        self.b(1)
    }

    pub fn outer(&self) -> Region {
        self.b(5)
    }
}

/// Nodes of `field` inside `region`; each must sit at depth ≥ `min_depth`.
fn region_nodes(field: &GridField, region: &Region, min_depth: usize) -> Result<Vec<[usize; 3]>> {
    let n = field.n;
    let mut out = Vec::new();
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                if region.contains(&field.point(i, j, k)) {
                    if field.depth([i, j, k]) < min_depth {
                        return Err(Error::domain(format!(
                            "region of half-width {} reaches node {:?} at depth {}",
                            region.half_width,
                            [i, j, k],
                            field.depth([i, j, k])
                        )));
                    }
                    out.push([i, j, k]);
                }
            }
        }
    }
    if out.is_empty() {
        return Err(Error::domain(format!(
            "region of half-width {} holds no nodes",
            region.half_width
        )));
    }
    Ok(out)
}

fn sigma1_at(field: &GridField, node: [usize; 3]) -> f64 {
    hessian_at(field, node).trace()
}

fn sup_sigma1(field: &GridField, region: &Region) -> Result<(f64, [usize; 3])> {
    let nodes = region_nodes(field, region, 1)?;
    let mut best = (f64::NEG_INFINITY, nodes[0]);
    for node in nodes {
        let s = sigma1_at(field, node);
        if s > best.0 {
            best = (s, node);
        }
    }
    Ok(best)
}

/// `sup_outer Δ_h u / sup_inner Δ_h u`.
pub fn doubling_ratio(field: &GridField, inner: &Region, outer: &Region) -> Result<f64> {
    let (si, _) = sup_sigma1(field, inner)?;
    let (so, _) = sup_sigma1(field, outer)?;
    if !(si > 0.0) {
        return Err(Error::domain(format!("sup of σ₁ on the inner region is {si:.3e}")));
    }
    Ok(so / si)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestQuantityParams {
    pub beta: f64,
    pub c2: f64,
    pub du_max: f64,
    pub u_max: f64,
    /// `sup_{B₁} σ₁`.
    pub m1: f64,
    /// `sup_{B₅} σ₁`.
    pub m5: f64,
    pub floor20: f64,
    /// Radius of the ball on which `P` and `φ` live; `ρ = r_out² − |x − c|²`.
    pub r_out: f64,
}

impl TestQuantityParams {
    /// Parameters measured on the field. `beta = 1200/c₂ + 3`.
    pub fn from_field(field: &GridField, regions: &Regions, c2: f64) -> Result<Self> {
        if !(c2 > 0.0) {
            return Err(Error::domain(format!("c₂ must be positive, got {c2}")));
        }
        let r_out = 5.0 * regions.unit;
        let mut du_max: f64 = 0.0;
        let mut u_max: f64 = 0.0;
        for node in ball_nodes(field, regions.center, r_out, 1)? {
            du_max = du_max.max(norm(&gradient_at(field, node)));
            u_max = u_max.max(field.get(node[0], node[1], node[2]).abs());
        }
        Ok(TestQuantityParams {
            beta: 1200.0 / c2 + 3.0,
            c2,
            du_max,
            u_max,
            m1: sup_sigma1(field, &regions.inner())?.0,
            m5: sup_sigma1(field, &regions.outer())?.0,
            floor20: 20.0,
            r_out,
        })
    }
}

/// Nodes with `|x − c| < r` (strictly, so `ρ > 0`).
fn ball_nodes(field: &GridField, c: Vec3, r: f64, min_depth: usize) -> Result<Vec<[usize; 3]>> {
    let region = Region {
        center: c,
        half_width: r,
    };
    let nodes: Vec<_> = region_nodes(field, &region, min_depth)?
        .into_iter()
        .filter(|&[i, j, k]| norm(&sub(&field.point(i, j, k), &c)) < r)
        .collect();
    if nodes.is_empty() {
        return Err(Error::domain(format!("ball of radius {r} holds no nodes")));
    }
    Ok(nodes)
}

/// A test quantity on the nodes of its ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestField {
    pub nodes: Vec<[usize; 3]>,
    pub values: Vec<f64>,
    pub argmax: [usize; 3],
    pub max: f64,
    /// The `log log max{…, 20}` term per node.
    pub last: Vec<f64>,
    /// Nodes where the last term sits at `log log 20`.
    pub floored: usize,
}

impl TestField {
    /// Grid export; nodes outside the ball carry the minimum value.
    pub fn to_grid(&self, like: &GridField) -> Result<GridField> {
        let lowest = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        let mut v = vec![lowest; like.values.len()];
        for (node, val) in self.nodes.iter().zip(&self.values) {
            v[like.index(node[0], node[1], node[2])] = *val;
        }
        GridField::new(like.lo, like.hi, like.n, v)
    }

    fn build(nodes: Vec<[usize; 3]>, values: Vec<f64>, last: Vec<f64>) -> Self {
        let floored = last.iter().filter(|v| v.to_bits() == loglog20().to_bits()).count();
        let mut best = 0;
        for (i, v) in values.iter().enumerate() {
            if *v > values[best] {
                best = i;
            }
        }
        TestField {
            argmax: nodes[best],
            max: values[best],
            nodes,
            values,
            last,
            floored,
        }
    }
}

/// `P = 2 log ρ + g(x·Du − u) + log log max{σ₁/M₁, 20}` with
/// `g(t) = −(1/2β) log(1 − t/(20 max|Du| + 2 max|u| + 1))`, `x` measured
/// from the region centre.
pub fn eval_p(field: &GridField, regions: &Regions, params: &TestQuantityParams) -> Result<TestField> {
    let nodes = ball_nodes(field, regions.center, params.r_out, 1)?;
    let denom = 20.0 * params.du_max + 2.0 * params.u_max + 1.0;
    let floor = loglog20();
    let mut values = Vec::with_capacity(nodes.len());
    let mut lasts = Vec::with_capacity(nodes.len());
    for &[i, j, k] in &nodes {
        let x = sub(&field.point(i, j, k), &regions.center);
        let rho = params.r_out * params.r_out - dot(&x, &x);
        let t = dot(&x, &gradient_at(field, [i, j, k])) - field.get(i, j, k);
        let arg = 1.0 - t / denom;
        if !(arg > 0.0) {
            return Err(Error::domain(format!(
                "g undefined at node {:?}: 1 − t/D = {arg:.3e}; du_max/u_max are too small for this field",
                [i, j, k]
            )));
        }
        let g = -arg.ln() / (2.0 * params.beta);
        let q = sigma1_at(field, [i, j, k]) / params.m1;
        let last = if q > params.floor20 { q.ln().ln() } else { floor };
        lasts.push(last);
        values.push(2.0 * rho.ln() + g + last);
    }
    Ok(TestField::build(nodes, values, lasts))
}

/// `φ = 4 log ρ + h(|Du|²/2) + log log max{W log^{1/2} M₅ / (M₅ log W), 20}`
/// with `W = fσ₁ − σ₃` and `h(t) = −½ log(1 − t/(2 max|Du|² + 1))`. Where
/// `log W ≤ 0` or `log M₅ ≤ 0` the inner expression counts as below the floor.
pub fn eval_phi(
    field: &GridField,
    rhs: &dyn RhsModel,
    regions: &Regions,
    params: &TestQuantityParams,
) -> Result<TestField> {
    let nodes = ball_nodes(field, regions.center, params.r_out, 1)?;
    let denom = 2.0 * params.du_max * params.du_max + 1.0;
    let floor = loglog20();
    let lm5 = params.m5.ln();
    let mut values = Vec::with_capacity(nodes.len());
    let mut lasts = Vec::with_capacity(nodes.len());
    for &[i, j, k] in &nodes {
        let p = field.point(i, j, k);
        let x = sub(&p, &regions.center);
        let rho = params.r_out * params.r_out - dot(&x, &x);
        let du = gradient_at(field, [i, j, k]);
        let arg = 1.0 - 0.5 * dot(&du, &du) / denom;
        if !(arg > 0.0) {
            return Err(Error::domain(format!(
                "h undefined at node {:?}: 1 − t/D = {arg:.3e}; du_max is too small for this field",
                [i, j, k]
            )));
        }
        let w = bigw(field, rhs, [i, j, k], &p, &du)?;
        let lw = w.ln();
        let inner = if lw > 0.0 && lm5 > 0.0 {
            w * lm5.sqrt() / (params.m5 * lw)
        } else {
            f64::NEG_INFINITY
        };
        let last = if inner > params.floor20 { inner.ln().ln() } else { floor };
        lasts.push(last);
        values.push(4.0 * rho.ln() - 0.5 * arg.ln() + last);
    }
    Ok(TestField::build(nodes, values, lasts))
}

fn bigw(field: &GridField, rhs: &dyn RhsModel, node: [usize; 3], x: &Vec3, du: &Vec3) -> Result<f64> {
    let d2 = hessian_at(field, node);
    let (s1, _, s3) = sigma_of_matrix(&d2);
    let f = rhs.eval(x, field.get(node[0], node[1], node[2]), du).f;
    let w = f * s1 - s3;
    if !(w > 0.0) {
        return Err(Error::domain(format!("fσ₁ − σ₃ = {w:.3e} at node {node:?}")));
    }
    Ok(w)
}

/// `(M₅ / log^{1/2} M₅) · log W`.
pub fn v1_rhs(m5: f64, w: f64) -> f64 {
    m5 / m5.ln().sqrt() * w.ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum V1Status {
    Checked,
    /// No node reaches the `W ≥ 20` regime.
    NoEligibleNodes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct V1Report {
    pub status: V1Status,
    pub m5: f64,
    pub eligible: usize,
    pub skipped: usize,
    pub holds: usize,
    /// `RHS − LHS` per node of `B₅`; `None` where skipped.
    pub margins: Vec<Option<f64>>,
    pub nodes: Vec<[usize; 3]>,
    pub min_margin: Option<f64>,
}

/// `W ≤ (M₅ / log^{1/2} M₅) log W` on the nodes of `B₅` with `W ≥ 20`.
/// `M₅ ≥ e²` is required only once some node is eligible.
pub fn v1_check(field: &GridField, rhs: &dyn RhsModel, regions: &Regions) -> Result<V1Report> {
    let outer = regions.outer();
    let (m5, _) = sup_sigma1(field, &outer)?;
    let nodes = region_nodes(field, &outer, 1)?;
    let mut ws = Vec::with_capacity(nodes.len());
    for &node in &nodes {
        let x = field.point(node[0], node[1], node[2]);
        ws.push(bigw(field, rhs, node, &x, &gradient_at(field, node))?);
    }
    let eligible = ws.iter().filter(|w| **w >= 20.0).count();
    if eligible > 0 && !(m5 >= std::f64::consts::E * std::f64::consts::E) {
        return Err(Error::domain(format!("M₅ = {m5:.4} is below e²")));
    }
    let margins: Vec<Option<f64>> = ws.iter().map(|&w| (w >= 20.0).then(|| v1_rhs(m5, w) - w)).collect();
    let holds = margins.iter().flatten().filter(|m| **m >= 0.0).count();
    let min_margin = margins.iter().flatten().copied().reduce(f64::min);
    Ok(V1Report {
        status: if eligible == 0 {
            V1Status::NoEligibleNodes
        } else {
            V1Status::Checked
        },
        m5,
        eligible,
        skipped: nodes.len() - eligible,
        holds,
        margins,
        nodes,
        min_margin,
    })
}

/// Radial quintic step: 1 on `|x − x₀| ≤ inner`, 0 beyond `outer`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub inner: f64,
    pub outer: f64,
    /// Declared bounds for `|∇φ|` and `|∇²φ|`.
    pub grad_bound: f64,
    pub hess_bound: f64,
}

impl Cutoff {
    pub fn new(inner: f64, outer: f64) -> Self {
        let w = outer - inner;
        Cutoff {
            inner,
            outer,
            grad_bound: 15.0 / (8.0 * w),
            hess_bound: (10.0 / 3f64.sqrt() / (w * w)).max(15.0 / (8.0 * w * inner)),
        }
    }

    /// Value and gradient at offset `d = x − x₀`.
    pub fn eval(&self, d: &Vec3) -> (f64, Vec3) {
        let r = norm(d);
        let w = self.outer - self.inner;
        if r <= self.inner {
            return (1.0, [0.0; 3]);
        }
        if r >= self.outer {
            return (0.0, [0.0; 3]);
        }
        let t = (r - self.inner) / w;
        let v = 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
        let dv = -30.0 * t * t * (1.0 - t) * (1.0 - t) / w;
        (v, d.map(|c| dv * c / r))
    }
}

/// Measured terms of the energy absorption step:
/// `E ≤ (2/c₀)(2Φ/c₀ + |X − Y| + |F| + C·S)` with `X = ∫φ²σ₂^{ij}b_ij`,
/// `Y = −2∫φσ₂^{ij}φ_j b_i`, `Φ = ∫σ₂^{ij}φ_iφ_j`, `F = ∫φ² f_p·∇b`,
/// `S = ∫φ²σ₁` and `C` the least constant making
/// `σ₂^{ij}b_ij ≥ c₀σ₂^{ij}b_ib_j − Cσ₁ + f_p·∇b` at every node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Absorption {
    pub c0: f64,
    pub c_logb: f64,
    pub x_term: f64,
    pub y_term: f64,
    pub phi_energy: f64,
    pub drift: f64,
    pub mass: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainAudit {
    pub x0: [usize; 3],
    pub x0_point: Vec3,
    pub unit: f64,
    /// `σ₁(x₀) = sup_{B₁} σ₁`.
    pub m1: f64,
    /// `∫_{B₁(x₀)} σ₁(σ₁f − σ₃)`.
    pub t_meanvalue: f64,
    /// `∫_{B₁(x₀)} σ₁ log σ₁`.
    pub t_entropy: f64,
    /// `∫_{B₂(x₀)} |∇b|`, `b = log σ₁`.
    pub t_gradb: f64,
    /// `∫_{B₃(x₀)} φ²σ₂^{ij}b_ib_j`.
    pub t_energy: f64,
    pub sigma1_mass: f64,
    /// `M₁ / T_meanvalue`.
    pub c_meanvalue: f64,
    /// `T_gradb² / (T_energy ∫_{B₂}σ₁)`; 0 when `T_gradb = 0`.
    pub c_holder: f64,
    /// `min_{B₂} λ_min(σ₁σ₂^{ij})`.
    pub c_min: f64,
    /// `T_entropy / (1 + T_gradb)`.
    pub c_entropy: f64,
    pub holder_holds: bool,
    pub absorption: Absorption,
    /// `c_entropy (1 + (T_bound ∫_{B₂}σ₁ / c_min)^{1/2})`, an upper bound
    /// for `T_entropy` through the measured links.
    pub implied_bound: f64,
    pub cutoff: Cutoff,
}

struct Nodal {
    s1: f64,
    d2: SymMat3,
    w: f64,
    fp: Vec3,
}

/// Audit of the chain `M₁ ≲ ∫σ₁W`, `∫bσ₁ ≲ 1 + ∫|∇b|`,
/// `∫|∇b| ≤ (∫σ₂^{ij}b_ib_j)^{1/2}(∫σ₁/c)^{1/2}` and the absorption bound
/// for `∫φ²σ₂^{ij}b_ib_j`, centred at the maximiser of σ₁ on `B₁`.
pub fn integral_chain_audit(field: &GridField, rhs: &dyn RhsModel, regions: &Regions) -> Result<ChainAudit> {
    let (m1, x0) = sup_sigma1(field, &regions.inner())?;
    let p0 = field.point(x0[0], x0[1], x0[2]);
    let unit = regions.unit;
    let h3 = field.h().powi(3);
    let c0 = LOGB_EPS;
    let cutoff = Cutoff::new(2.0 * unit, 3.0 * unit);

    let b3 = ball_nodes(field, p0, 3.0 * unit + 1e-12 * unit, 2)?;
    let mut bvals = vec![0.0; field.values.len()];
    let mut nodal = std::collections::HashMap::new();
    // b is needed one node beyond B₃ for its derivatives
    for &node in &b3 {
        for di in -1i64..=1 {
            for dj in -1i64..=1 {
                for dk in -1i64..=1 {
                    let nb = [node[0] as i64 + di, node[1] as i64 + dj, node[2] as i64 + dk].map(|c| c as usize);
                    let idx = field.index(nb[0], nb[1], nb[2]);
                    if nodal.contains_key(&idx) {
                        continue;
                    }
                    let x = field.point(nb[0], nb[1], nb[2]);
                    let du = gradient_at(field, nb);
                    let d2 = hessian_at(field, nb);
                    let (s1, _, s3) = sigma_of_matrix(&d2);
                    let e = rhs.eval(&x, field.values[idx], &du);
                    if !(s1 > 0.0) {
                        return Err(Error::domain(format!("σ₁ = {s1:.3e} at node {nb:?}")));
                    }
                    bvals[idx] = s1.ln();
                    nodal.insert(
                        idx,
                        Nodal {
                            s1,
                            d2,
                            w: e.f * s1 - s3,
                            fp: e.f_p,
                        },
                    );
                }
            }
        }
    }
    let bfield = GridField::new(field.lo, field.hi, field.n, bvals)?;

    let mut t = ChainSums::default();
    let mut c_min = f64::INFINITY;
    let mut c_logb: f64 = 0.0;
    for &node in &b3 {
        let idx = field.index(node[0], node[1], node[2]);
        let nd = &nodal[&idx];
        let x = field.point(node[0], node[1], node[2]);
        let d = sub(&x, &p0);
        let r = norm(&d);
        let s2ij = sigma2_gradient(&nd.d2);
        let db = gradient_at(&bfield, node);
        let d2b = hessian_at(&bfield, node);
        let (phi, dphi) = cutoff.eval(&d);
        let energy = s2ij.quad_form(&db);
        if r <= unit * (1.0 + 1e-12) {
            t.meanvalue += h3 * nd.s1 * nd.w;
            t.entropy += h3 * nd.s1 * bfield.values[idx];
        }
        if r <= 2.0 * unit * (1.0 + 1e-12) {
            t.gradb += h3 * norm(&db);
            t.s1 += h3 * nd.s1;
            let lam = eigen_sorted(&nd.d2)?;
            c_min = c_min.min(nd.s1 * (nd.s1 - lam.lambda1));
        }
        t.energy += h3 * phi * phi * energy;
        t.x += h3 * phi * phi * s2ij.contract(&d2b);
        t.y -= h3 * 2.0 * phi * dot(&s2ij.mul_vec(&dphi), &db);
        t.phi += h3 * s2ij.quad_form(&dphi);
        t.drift += h3 * phi * phi * dot(&nd.fp, &db);
        t.mass += h3 * phi * phi * nd.s1;
        if phi > 0.0 {
            let res = s2ij.contract(&d2b) - c0 * energy - dot(&nd.fp, &db);
            c_logb = c_logb.max(-res / nd.s1);
        }
    }
    let bound = 2.0 / c0 * (2.0 * t.phi / c0 + (t.x - t.y).abs() + t.drift.abs() + c_logb * t.mass);
    let absorption = Absorption {
        c0,
        c_logb,
        x_term: t.x,
        y_term: t.y,
        phi_energy: t.phi,
        drift: t.drift,
        mass: t.mass,
        bound,
        holds: t.energy <= bound * (1.0 + 1e-12),
    };
    let c_holder = if t.gradb == 0.0 {
        0.0
    } else {
        t.gradb * t.gradb / (t.energy * t.s1)
    };
    let c_entropy = t.entropy / (1.0 + t.gradb);
    Ok(ChainAudit {
        x0,
        x0_point: p0,
        unit,
        m1,
        t_meanvalue: t.meanvalue,
        t_entropy: t.entropy,
        t_gradb: t.gradb,
        t_energy: t.energy,
        sigma1_mass: t.s1,
        c_meanvalue: m1 / t.meanvalue,
        c_holder,
        c_min,
        c_entropy,
        holder_holds: c_holder <= (1.0 / c_min) * (1.0 + 1e-9),
        absorption,
        implied_bound: c_entropy * (1.0 + (bound * t.s1 / c_min).sqrt()),
        cutoff,
    })
}

#[derive(Default)]
struct ChainSums {
    meanvalue: f64,
    entropy: f64,
    gradb: f64,
    energy: f64,
    s1: f64,
    x: f64,
    y: f64,
    phi: f64,
    drift: f64,
    mass: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{make_manufactured, ConstantRhs, ManufacturedSpec};

    fn quad(a: f64, n: usize) -> GridField {
        GridField::from_fn(-1.0, 1.0, n, |x| 0.5 * a * dot(x, x)).unwrap()
    }

    #[test]
    fn doubling_on_quadratics() {
        let g = quad(1.0, 33);
        let r = Regions::for_field(&g).unwrap();
        assert_eq!(doubling_ratio(&g, &r.inner(), &r.outer()).unwrap(), 1.0);
        let lin = GridField::from_fn(-1.0, 1.0, 33, |x| 0.5 * dot(x, x) + 0.25 * x[1]).unwrap();
        assert_eq!(doubling_ratio(&lin, &r.inner(), &r.outer()).unwrap(), 1.0);
        let c = GridField::from_fn(-1.0, 1.0, 33, |x| 0.5 * dot(x, x) + 0.1 * x[0] * x[1] * x[2]).unwrap();
        assert!(doubling_ratio(&c, &r.inner(), &r.outer()).unwrap() >= 1.0);
        let empty = Region {
            center: [0.01, 0.01, 0.01],
            half_width: 0.001,
        };
        assert!(doubling_ratio(&g, &empty, &r.outer()).is_err());
    }

    #[test]
    fn p_floor_and_symmetry() {
        let g = quad(1.0, 33);
        let r = Regions::for_field(&g).unwrap();
        let p = TestQuantityParams::from_field(&g, &r, 1.0 / 3.0).unwrap();
        assert_eq!(p.beta, 3603.0);
        let t = eval_p(&g, &r, &p).unwrap();
        assert_eq!(t.floored, t.nodes.len());
        assert_eq!(t.argmax, [16, 16, 16]);
        assert!(t.last.iter().all(|v| v.to_bits() == loglog20().to_bits()));
    }

    #[test]
    fn p_range_error() {
        let g = quad(10.0, 17);
        let r = Regions::for_field(&g).unwrap();
        let mut p = TestQuantityParams::from_field(&g, &r, 1.0 / 3.0).unwrap();
        assert!(eval_p(&g, &r, &p).is_ok());
        p.du_max = 0.0;
        p.u_max = 0.0;
        p.r_out = 0.9;
        assert!(matches!(eval_p(&g, &r, &p), Err(Error::Domain(_))));
    }

    #[test]
    fn phi_floor() {
        let g = quad(1.0, 33);
        let r = Regions::for_field(&g).unwrap();
        let p = TestQuantityParams::from_field(&g, &r, 1.0 / 3.0).unwrap();
        let t = eval_phi(&g, &ConstantRhs(3.0), &r, &p).unwrap();
        assert_eq!(t.floored, t.nodes.len());
        assert_eq!(t.argmax, [16, 16, 16]);
    }

    #[test]
    fn v1_examples() {
        let g = quad(1.0, 17);
        let r = Regions::for_field(&g).unwrap();
        // W = 8 < 20 everywhere
        let rep = v1_check(&g, &ConstantRhs(3.0), &r).unwrap();
        assert_eq!(rep.status, V1Status::NoEligibleNodes);
        // eligible nodes but M₅ = 3 < e²
        assert!(v1_check(&g, &ConstantRhs(30.0), &r).is_err());
        let g = quad(10.0, 17);
        let rep = v1_check(&g, &ConstantRhs(300.0), &r).unwrap();
        assert_eq!(rep.status, V1Status::Checked);
        assert_eq!(rep.eligible, rep.nodes.len());
        // W = 8000 against (30/log^{1/2}30)·log 8000
        let m = rep.min_margin.unwrap();
        assert!((m - (v1_rhs(30.0, 8000.0) - 8000.0)).abs() < 1e-6 * 8000.0);
        let g = quad(2.5, 17);
        let rep = v1_check(&g, &ConstantRhs(18.75), &r).unwrap();
        // W = 8·2.5³ = 125 ≥ 20 while M₅ = 7.5 ≥ e²
        assert_eq!(rep.status, V1Status::Checked);
        let mut prev = f64::NEG_INFINITY;
        for m5 in [8.0, 20.0, 100.0, 1e4] {
            let v = v1_rhs(m5, 50.0);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn v1_no_eligible_nodes() {
        // D²u = diag(8, 0.1, 0.1): M₅ = 8.2 ≥ e² but W = 8.2 − 0.08 < 20
        let g = GridField::from_fn(-1.0, 1.0, 17, |x| {
            4.0 * x[0] * x[0] + 0.05 * (x[1] * x[1] + x[2] * x[2])
        })
        .unwrap();
        let r = Regions::for_field(&g).unwrap();
        let rep = v1_check(&g, &ConstantRhs(1.0), &r).unwrap();
        assert_eq!(rep.status, V1Status::NoEligibleNodes);
        assert_eq!(rep.skipped, rep.nodes.len());
    }

    #[test]
    fn audit_trivial_on_quadratic() {
        let g = quad(1.0, 33);
        let r = Regions::for_field(&g).unwrap();
        let a = integral_chain_audit(&g, &ConstantRhs(3.0), &r).unwrap();
        assert!(a.t_energy.abs() < 1e-20 && a.t_gradb.abs() < 1e-8);
        let vol = a.t_meanvalue / 24.0;
        assert!((a.t_entropy - 3f64.ln() * 3.0 * vol).abs() < 1e-9 * a.t_entropy);
        assert!(a.absorption.holds && a.holder_holds);
        assert!(a.c_min > 0.0);
    }

    #[test]
    fn audit_cubic_finite() {
        let m = make_manufactured(ManufacturedSpec::CubicPert { a: 1.0, eps: 0.1 }, -1.0, 1.0).unwrap();
        let g = GridField::from_fn(-1.0, 1.0, 33, |x| m.u(x)).unwrap();
        let r = Regions::for_field(&g).unwrap();
        let a = integral_chain_audit(&g, &m, &r).unwrap();
        for v in [a.t_meanvalue, a.t_entropy, a.t_gradb, a.t_energy] {
            assert!(v.is_finite() && v >= 0.0);
        }
        // Δu ≡ 3 here, so b is constant up to round-off
        assert!(a.t_gradb < 1e-9);
        assert!(a.absorption.holds && a.holder_holds);
    }

    #[test]
    fn audit_trig_nontrivial() {
        let m = make_manufactured(
            ManufacturedSpec::TrigPert {
                a: 1.0,
                eps: 0.05,
                k: 1.0,
            },
            -1.0,
            1.0,
        )
        .unwrap();
        let g = GridField::from_fn(-1.0, 1.0, 33, |x| m.u(x)).unwrap();
        let r = Regions::for_field(&g).unwrap();
        let a = integral_chain_audit(&g, &m, &r).unwrap();
        assert!(a.t_energy > 0.0 && a.t_gradb > 0.0);
        assert!(a.absorption.holds && a.holder_holds);
        assert!(a.t_entropy <= a.implied_bound);
        // linear additions leave D²u and the energy unchanged
        let g2 = GridField::from_fn(-1.0, 1.0, 33, |x| m.u(x) + 0.2 * x[0] - 0.1 * x[2]).unwrap();
        let a2 = integral_chain_audit(&g2, &ConstantRhs(1.0), &r).unwrap();
        assert_eq!(a2.x0, a.x0);
        assert!((a2.t_energy - a.t_energy).abs() <= 1e-8 * a.t_energy);
    }

    #[test]
    fn cutoff_shape() {
        let c = Cutoff::new(2.0, 3.0);
        assert_eq!(c.eval(&[1.0, 1.0, 0.0]).0, 1.0);
        assert_eq!(c.eval(&[3.0, 0.5, 0.0]).0, 0.0);
        let (v, g) = c.eval(&[2.5, 0.0, 0.0]);
        assert!((v - 0.5).abs() < 1e-12);
        assert!((norm(&g) - c.grad_bound).abs() < 1e-12);
    }
}
