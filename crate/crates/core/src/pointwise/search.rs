use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{cla_pointwise, claim1_min_eig, claim2_gap, lemma2_ratios};
use crate::error::{Error, Result};
use crate::rng::stream;
use crate::symfun::EigenTriple;

const GRID_TAG: u64 = 0x6772_6964;
const RANDOM_TAG: u64 = 0x7261_6e64;
const CHUNK: u64 = 1 << 16;
const MAX_EMPTY_CHUNKS: usize = 256;
const PILOT_AXIS: usize = 64;
const MAX_REFINE_EVALS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Coordinates are `(λ₂, λ₃)` and `λ₁ = 1 − λ₂ − λ₃`.
    Sigma1EqOne,
    /// Coordinates are `(λ₁, λ₂, λ₃)`.
    Raw,
}

/// Search domain: a box for the eigenvalues plus ordering and `σ₂ > 0`;
/// with `sigma2_target` each decoded point is rescaled onto `σ₂ = f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRegion {
    pub normalization: Normalization,
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    pub sigma2_target: Option<f64>,
}

impl SampleRegion {
    /// The ordered, σ₁-normalised part of Γ₂. On that set `λ₃ > −1/3` and
    /// `0 < λ₂ < 2/3`, so the box below loses no feasible point.
    pub fn normalized() -> Self {
        SampleRegion {
            normalization: Normalization::Sigma1EqOne,
            lo: [1.0 / 3.0, 0.0, -1.0 / 3.0],
            hi: [5.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0],
            sigma2_target: None,
        }
    }

    pub fn raw_box(lo: [f64; 3], hi: [f64; 3]) -> Self {
        SampleRegion {
            normalization: Normalization::Raw,
            lo,
            hi,
            sigma2_target: None,
        }
    }

    fn dims(&self) -> usize {
        match self.normalization {
            Normalization::Sigma1EqOne => 2,
            Normalization::Raw => 3,
        }
    }

    fn coord_bounds(&self) -> Vec<(f64, f64)> {
        match self.normalization {
            Normalization::Sigma1EqOne => vec![(self.lo[1], self.hi[1]), (self.lo[2], self.hi[2])],
            Normalization::Raw => (0..3).map(|i| (self.lo[i], self.hi[i])).collect(),
        }
    }

    fn validate(&self) -> Result<()> {
        for i in 0..3 {
            if !self.lo[i].is_finite() || !self.hi[i].is_finite() || self.lo[i] > self.hi[i] {
                return Err(Error::domain(format!(
                    "sample region bound {i} is not a finite interval: [{}, {}]",
                    self.lo[i], self.hi[i]
                )));
            }
        }
        if let Some(f) = self.sigma2_target {
            if !(f > 0.0 && f.is_finite()) {
                return Err(Error::domain(format!("σ₂ target must be positive, got {f}")));
            }
        }
        Ok(())
    }

    /// Eigenvalues for a coordinate vector, or `None` when infeasible.
    pub fn decode(&self, c: &[f64]) -> Option<EigenTriple> {
        let l = match self.normalization {
            Normalization::Sigma1EqOne => [1.0 - c[0] - c[1], c[0], c[1]],
            Normalization::Raw => [c[0], c[1], c[2]],
        };
        for i in 0..3 {
            if l[i] < self.lo[i] || l[i] > self.hi[i] {
                return None;
            }
        }
        if l[0] < l[1] || l[1] < l[2] {
            return None;
        }
        let lam = EigenTriple::new(l[0], l[1], l[2]);
        if !(lam.sigma1 > 0.0 && lam.sigma2 > 0.0) {
            return None;
        }
        match self.sigma2_target {
            Some(f) => Some(lam.scale((f / lam.sigma2).sqrt())),
            None => Some(lam),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Quantity {
    Claim1 {
        eps: f64,
    },
    Claim2 {
        delta: f64,
    },
    Lemma2R1,
    Lemma2R23,
    /// `1 − gauge ratio` with base-point and gradient offsets as six extra
    /// parameters in `[−1, 1]`.
    ClaRatio,
}

impl Quantity {
    pub fn id(&self) -> String {
        match self {
            Quantity::Claim1 { eps } => format!("claim1(eps={eps})"),
            Quantity::Claim2 { delta } => format!("claim2(delta={delta})"),
            Quantity::Lemma2R1 => "lemma2_r1".into(),
            Quantity::Lemma2R23 => "lemma2_r23".into(),
            Quantity::ClaRatio => "cla_ratio".into(),
        }
    }

    fn extra_dims(&self) -> usize {
        match self {
            Quantity::ClaRatio => 6,
            _ => 0,
        }
    }

    pub fn eval(&self, lam: &EigenTriple, extra: &[f64]) -> Option<f64> {
        let v = match self {
            Quantity::Claim1 { eps } => claim1_min_eig(lam, *eps).ok()?,
            Quantity::Claim2 { delta } => claim2_gap(lam, *delta).ok()?,
            Quantity::Lemma2R1 => lemma2_ratios(lam).ok()?.0,
            Quantity::Lemma2R23 => {
                let r = lemma2_ratios(lam).ok()?;
                r.1.min(r.2)
            }
            Quantity::ClaRatio => {
                let x = [extra[0], extra[1], extra[2]];
                let p = [extra[3], extra[4], extra[5]];
                cla_pointwise(lam, &x, &p).ok()?
            }
        };
        v.is_finite().then_some(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub tolerance: f64,
    pub top_k: usize,
    pub min_step: f64,
    /// Share of the budget spent on the regular grid.
    pub grid_fraction: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            tolerance: 1e-10,
            top_k: 16,
            min_step: 1e-8,
            grid_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfimumReport {
    pub quantity_id: String,
    pub min_value: f64,
    pub argmin: EigenTriple,
    pub parameters: Vec<f64>,
    pub samples: usize,
    pub refinement_steps: usize,
    pub evaluations: usize,
    pub grid_spacing: f64,
    pub tolerance: f64,
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeConstants {
    pub c1: f64,
    pub c2: f64,
    pub argmin1: EigenTriple,
    pub argmin2: EigenTriple,
    pub samples: usize,
}

#[derive(Debug, Clone)]
struct Cand {
    value: f64,
    key: (u8, u64),
    coords: Vec<f64>,
}

fn better(a: &Cand, b: &Cand) -> bool {
    match a.value.total_cmp(&b.value) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => a.key < b.key,
    }
}

fn push_top(top: &mut Vec<Cand>, c: Cand, k: usize) {
    if top.len() == k && !better(&c, top.last().unwrap()) {
        return;
    }
    let pos = top.iter().position(|t| better(&c, t)).unwrap_or(top.len());
    top.insert(pos, c);
    top.truncate(k);
}

fn merge_top(mut a: Vec<Cand>, b: Vec<Cand>, k: usize) -> Vec<Cand> {
    for c in b {
        push_top(&mut a, c, k);
    }
    a
}

struct Problem<'a> {
    q: &'a Quantity,
    region: &'a SampleRegion,
    bounds: Vec<(f64, f64)>,
    dl: usize,
}

impl Problem<'_> {
    fn eval(&self, c: &[f64]) -> Option<f64> {
        for (x, (lo, hi)) in c.iter().zip(&self.bounds) {
            if x < lo || x > hi {
                return None;
            }
        }
        let lam = self.region.decode(&c[..self.dl])?;
        self.q.eval(&lam, &c[self.dl..])
    }

    fn random_extras<R: Rng>(&self, rng: &mut R, c: &mut Vec<f64>) {
        for (lo, hi) in &self.bounds[self.dl..] {
            c.push(rng.random_range(*lo..=*hi));
        }
    }
}

fn grid_point(idx: u64, g: usize, bounds: &[(f64, f64)], dl: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(bounds.len());
    let mut r = idx as usize;
    for (lo, hi) in bounds.iter().take(dl) {
        let k = r % g;
        r /= g;
        let t = if g > 1 { k as f64 / (g - 1) as f64 } else { 0.5 };
        c.push(lo + t * (hi - lo));
    }
    c
}

/// Minimises `q` over `region`: a regular grid and counter-based random
/// samples share the budget (counted in feasible samples), then the
/// `top_k` best candidates are refined by compass search down to `min_step`.
pub fn infimum_search(
    q: &Quantity,
    region: &SampleRegion,
    budget: usize,
    seed: u64,
    config: &SearchConfig,
) -> Result<InfimumReport> {
    region.validate()?;
    if budget == 0 {
        return Err(Error::domain("infimum_search needs a positive budget"));
    }
    let dl = region.dims();
    let mut bounds = region.coord_bounds();
    bounds.extend(std::iter::repeat_n((-1.0, 1.0), q.extra_dims()));
    let pb = Problem { q, region, bounds, dl };
    let k = config.top_k.max(1);

    // pilot grid: feasibility and feasible fraction
    let pilot_total = PILOT_AXIS.pow(dl as u32) as u64;
    let pilot_feasible = (0..pilot_total)
        .into_par_iter()
        .filter(|&i| region.decode(&grid_point(i, PILOT_AXIS, &pb.bounds, dl)).is_some())
        .count();
    if pilot_feasible == 0 {
        let any = (0..4096u64).any(|i| {
            let mut rng = stream(seed ^ RANDOM_TAG, i);
            let c: Vec<f64> = pb.bounds[..dl]
                .iter()
                .map(|(lo, hi)| rng.random_range(*lo..=*hi))
                .collect();
            region.decode(&c).is_some()
        });
        if !any {
            return Err(Error::domain(format!(
                "sample region has no feasible point: {region:?}"
            )));
        }
    }
    let frac = (pilot_feasible.max(1) as f64 / pilot_total as f64).min(1.0);

    // grid phase
    let grid_target = (budget as f64 * config.grid_fraction.clamp(0.0, 1.0)).floor();
    let g = if grid_target >= 1.0 {
        ((grid_target / frac).powf(1.0 / dl as f64).floor() as usize).max(1)
    } else {
        0
    };
    let grid_total = if g > 0 { g.pow(dl as u32) as u64 } else { 0 };
    let spacing = pb.bounds[..dl]
        .iter()
        .map(|(lo, hi)| if g > 1 { (hi - lo) / (g - 1) as f64 } else { hi - lo })
        .fold(f64::INFINITY, f64::min);

    let (grid_top, grid_feasible) = (0..grid_total)
        .into_par_iter()
        .fold(
            || (Vec::new(), 0usize),
            |(mut top, n), i| {
                let mut c = grid_point(i, g, &pb.bounds, dl);
                if q.extra_dims() > 0 {
                    pb.random_extras(&mut stream(seed ^ GRID_TAG, i), &mut c);
                }
                match pb.eval(&c) {
                    Some(value) => {
                        push_top(
                            &mut top,
                            Cand {
                                value,
                                key: (0, i),
                                coords: c,
                            },
                            k,
                        );
                        (top, n + 1)
                    }
                    None => (top, n),
                }
            },
        )
        .reduce(|| (Vec::new(), 0), |a, b| (merge_top(a.0, b.0, k), a.1 + b.1));

    // random phase, chunked so the feasible count stops exactly at the target
    let random_target = budget.saturating_sub(grid_feasible);
    let mut top = grid_top;
    let mut random_feasible = 0usize;
    let mut chunk = 0u64;
    let mut empty = 0usize;
    while random_feasible < random_target && empty < MAX_EMPTY_CHUNKS {
        let start = chunk * CHUNK;
        let mut found: Vec<Cand> = (start..start + CHUNK)
            .into_par_iter()
            .filter_map(|i| {
                let mut rng = stream(seed ^ RANDOM_TAG, i);
                let mut c: Vec<f64> = pb.bounds[..dl]
                    .iter()
                    .map(|(lo, hi)| rng.random_range(*lo..=*hi))
                    .collect();
                pb.random_extras(&mut rng, &mut c);
                pb.eval(&c).map(|value| Cand {
                    value,
                    key: (1, i),
                    coords: c,
                })
            })
            .collect();
        found.truncate(random_target - random_feasible);
        if found.is_empty() {
            empty += 1;
        } else {
            empty = 0;
        }
        random_feasible += found.len();
        for c in found {
            push_top(&mut top, c, k);
        }
        chunk += 1;
    }

    if top.is_empty() {
        return Err(Error::domain(format!(
            "{} is undefined on every sampled point of the region",
            q.id()
        )));
    }

    // refinement
    let refined: Vec<(Cand, usize, usize)> = top
        .par_iter()
        .map(|c| refine(&pb, c, spacing, config.min_step))
        .collect();
    let mut best = top[0].clone();
    let mut steps = 0;
    let mut evals = grid_total as usize + (chunk * CHUNK) as usize;
    for (c, s, e) in refined {
        steps += s;
        evals += e;
        if better(&c, &best) {
            best = c;
        }
    }
    let argmin = region.decode(&best.coords[..dl]).expect("feasible argmin");
    Ok(InfimumReport {
        quantity_id: q.id(),
        min_value: best.value,
        argmin,
        parameters: best.coords[dl..].to_vec(),
        samples: grid_feasible + random_feasible,
        refinement_steps: steps,
        evaluations: evals,
        grid_spacing: spacing,
        tolerance: config.tolerance,
        violation: best.value < -config.tolerance,
    })
}

fn refine(pb: &Problem, start: &Cand, spacing: f64, min_step: f64) -> (Cand, usize, usize) {
    let n = start.coords.len();
    let mut x = start.coords.clone();
    let mut fx = start.value;
    let mut step: Vec<f64> = (0..n)
        .map(|j| {
            if j < pb.dl {
                spacing.max(min_step)
            } else {
                0.125 * (pb.bounds[j].1 - pb.bounds[j].0)
            }
        })
        .collect();
    // axes and pairwise diagonals, so narrow wedges between two active
    // constraints can still be entered
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut d = vec![0.0; n];
            d[i] = s;
            dirs.push(d);
        }
        for j in i + 1..n {
            for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let mut d = vec![0.0; n];
                d[i] = si;
                d[j] = sj;
                dirs.push(d);
            }
        }
    }
    let mut steps = 0;
    let mut evals = 0;
    while step.iter().cloned().fold(0.0, f64::max) >= min_step && evals < MAX_REFINE_EVALS {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for d in &dirs {
            let y: Vec<f64> = x.iter().zip(d).zip(&step).map(|((xi, di), hi)| xi + di * hi).collect();
            evals += 1;
            if let Some(fy) = pb.eval(&y) {
                if fy < fx && best.as_ref().is_none_or(|b| fy < b.0) {
                    best = Some((fy, y));
                }
            }
        }
        match best {
            Some((fy, y)) => {
                x = y;
                fx = fy;
            }
            None => step.iter_mut().for_each(|h| *h *= 0.5),
        }
        steps += 1;
    }
    (
        Cand {
            value: fx,
            key: start.key,
            coords: x,
        },
        steps,
        evals,
    )
}

/// `c₁ = inf r₁` and `c₂ = inf min(r₂, r₃)` over the normalised cone.
pub fn estimate_cone_constants(budget: usize, seed: u64) -> Result<ConeConstants> {
    let region = SampleRegion::normalized();
    let cfg = SearchConfig::default();
    let r1 = infimum_search(&Quantity::Lemma2R1, &region, budget, seed, &cfg)?;
    let r23 = infimum_search(&Quantity::Lemma2R23, &region, budget, seed, &cfg)?;
    Ok(ConeConstants {
        c1: r1.min_value,
        c2: r23.min_value,
        argmin1: r1.argmin,
        argmin2: r23.argmin,
        samples: r1.samples + r23.samples,
    })
}

/// The two infima over an explicit point set.
pub fn cone_constants_over(points: &[EigenTriple]) -> Result<ConeConstants> {
    let mut out: Option<ConeConstants> = None;
    for p in points {
        let (r1, r2, r3) = lemma2_ratios(p)?;
        let r23 = r2.min(r3);
        let o = out.get_or_insert(ConeConstants {
            c1: r1,
            c2: r23,
            argmin1: *p,
            argmin2: *p,
            samples: 0,
        });
        if r1 < o.c1 {
            o.c1 = r1;
            o.argmin1 = *p;
        }
        if r23 < o.c2 {
            o.c2 = r23;
            o.argmin2 = *p;
        }
        o.samples += 1;
    }
    out.ok_or_else(|| Error::domain("cone_constants_over needs at least one point"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_point_infimum() {
        let c = cone_constants_over(&[EigenTriple::new(1., 1., 1.)]).unwrap();
        assert!((c.c1 - 2.0 / 3.0).abs() < 1e-15);
        assert!((c.c2 - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn family_forces_c2_to_one_third() {
        let pts: Vec<_> = (1..=1000)
            .map(|i| EigenTriple::new(1., 1., -0.5 + 1e-6 * i as f64))
            .collect();
        let c = cone_constants_over(&pts).unwrap();
        assert!(c.c2 <= 1.0 / 3.0 + 1e-3);
    }

    #[test]
    fn infeasible_region_is_rejected() {
        let r = SampleRegion::raw_box([-3.0, -3.0, -3.0], [-1.0, -1.0, -1.0]);
        let e = infimum_search(&Quantity::Lemma2R1, &r, 1000, 0, &SearchConfig::default());
        assert!(matches!(e, Err(Error::Domain(_))));
    }

    #[test]
    fn search_is_deterministic() {
        let r = SampleRegion::normalized();
        let cfg = SearchConfig::default();
        let a = infimum_search(&Quantity::Claim2 { delta: 0.05 }, &r, 20_000, 5, &cfg).unwrap();
        let b = infimum_search(&Quantity::Claim2 { delta: 0.05 }, &r, 20_000, 5, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(!a.violation);
        assert!(a.samples >= 19_000 && a.samples <= 20_000);
    }

    #[test]
    fn violation_probe_near_symmetric_point() {
        let r = SampleRegion::raw_box([0.9; 3], [1.1; 3]);
        let rep = infimum_search(&Quantity::Claim1 { eps: 0.9 }, &r, 1000, 1, &SearchConfig::default()).unwrap();
        assert!(rep.violation);
        assert!(rep.min_value <= -0.3);
        for l in rep.argmin.lambdas() {
            assert!((l - 1.0).abs() <= 0.1 + 1e-12);
        }
    }

    #[test]
    fn cone_constants_small_budget() {
        let c = estimate_cone_constants(20_000, 3).unwrap();
        assert!((c.c1 - 2.0 / 3.0).abs() < 1e-6, "c1 = {}", c.c1);
        assert!((c.c2 - 1.0 / 3.0).abs() < 1e-6, "c2 = {}", c.c2);
    }

    #[test]
    fn sigma2_target_rescales() {
        let mut r = SampleRegion::normalized();
        r.sigma2_target = Some(3.0);
        let lam = r.decode(&[0.3, 0.2]).unwrap();
        assert!((lam.sigma2 - 3.0).abs() < 1e-12);
    }
}
