use std::f64::consts::PI;

use serde_json::json;

use sigma2_core::calculus::{make_manufactured, ConstantRhs, ManufacturedSpec};
use sigma2_core::graphgeom::{
    ball_mass, cla_ratio, graph_radius, lambda_surrogates, mean_value_ratio, monotonicity_profile, GraphCenter,
    GraphData, Indicator, MassProfile, SurrogateReport,
};
use sigma2_core::grid::GridField;
use sigma2_core::linalg::{norm, SymMat3};
use sigma2_core::rng::{stream, uniform_point};

use super::{quad_field, stem, task, CaseResult, Ctx, Outcome, Task};

const RATIO_TOL: f64 = 0.02;
const C_EMP_MAX: f64 = 1.05;
const CLA_TOL: f64 = 1e-6;
const REFINE_TOL: f64 = 0.1;

fn center_node(g: &GridField) -> [usize; 3] {
    let c = g.n / 2;
    [c, c, c]
}

/// QUAD(I) profile on the configured box for radii `4h, 5h, …` inside
/// seven eighths of the half-width.
fn quad_profile(cx: &Ctx) -> Result<std::sync::Arc<MassProfile>, String> {
    cx.memo("graph:quad_profile", || -> sigma2_core::Result<MassProfile> {
        let (lo, hi) = cx.bounds();
        let g = quad_field(1.0, lo, hi, cx.config.solver.n)?;
        let d = GraphData::new(&g, &ConstantRhs(3.0))?;
        let c = d.center(center_node(&g))?;
        let h = g.h();
        let top = (0.875 * 0.5 * (hi - lo) / h + 1e-9).floor() as usize;
        let radii: Vec<f64> = (4..=top.max(5)).map(|k| k as f64 * h).collect();
        monotonicity_profile(&d, &c, &radii)
    })
}

fn refinement(cx: &Ctx, spec: ManufacturedSpec) -> CaseResult {
    let nf = cx.config.solver.n;
    let nc = nf.div_ceil(2);
    if nc < 9 || nc.is_multiple_of(2) {
        return Ok(Outcome::skip(format!("no odd coarse grid below n = {nf}")));
    }
    let mut profiles = Vec::new();
    let mut hc = 0.0;
    for n in [nc, nf] {
        let s = cx.solve(spec, n)?;
        if n == nc {
            hc = s.field.h();
        }
        let d = GraphData::new(&s.field, &s.m)?;
        let c = d.center(center_node(&s.field))?;
        let radii: Vec<f64> = (4..=7).map(|k| k as f64 * hc).collect();
        let p = monotonicity_profile(&d, &c, &radii)?;
        cx.artifact(&format!("graph/{}_n{n}.csv", stem(&spec.id())), p.to_csv().as_bytes())?;
        profiles.push(p);
    }
    let (a, b) = (profiles[0].c_emp, profiles[1].c_emp);
    let rc = sigma2_core::calculus::relative_change(a, b);
    Ok(Outcome::check(rc <= REFINE_TOL, rc, Some(REFINE_TOL))
        .with(json!({ "c_emp_h": a, "c_emp_h2": b, "n": [nc, nf] })))
}

fn surrogates(cx: &Ctx) -> Result<std::sync::Arc<SurrogateReport>, String> {
    cx.memo("graph:surrogates", || {
        lambda_surrogates(cx.config.budgets.surrogates as u64, cx.seed())
    })
}

pub fn tasks() -> Vec<Task> {
    let mut v = vec![
        task("quad_radius", |cx| {
            let (lo, hi) = cx.bounds();
            let n = cx.config.solver.n;
            let g = quad_field(1.0, lo, hi, n)?;
            let c = center_node(&g);
            let y0 = g.point(c[0], c[1], c[2]);
            let mut worst = 0.0f64;
            for node in [[1, 2, 3], [n - 2, n / 3, n / 2 + 1], [n / 4, n - 3, 2]] {
                let x = g.point(node[0], node[1], node[2]);
                let r = graph_radius(&g, &ConstantRhs(3.0), c, node)?;
                let d = [x[0] - y0[0], x[1] - y0[1], x[2] - y0[2]];
                worst = worst.max((r - 2.0 * norm(&d)).abs());
            }
            Ok(Outcome::at_most(worst, 1e-12))
        }),
        task("quad_monotonicity_ratio", |cx| {
            let p = quad_profile(cx)?;
            cx.artifact("graph/quad_profile.csv", p.to_csv().as_bytes())?;
            let dev = p
                .ratios
                .iter()
                .map(|r| (r / (4.0 * PI) - 1.0).abs())
                .fold(0.0, f64::max);
            Ok(Outcome::at_most(dev, RATIO_TOL).with(json!({ "radii": p.radii, "ratios": p.ratios })))
        }),
        task("quad_c_emp", |cx| {
            let p = quad_profile(cx)?;
            Ok(Outcome::at_most(p.c_emp, C_EMP_MAX))
        }),
        task("quad_smoothed_indicator", |cx| {
            let (lo, hi) = cx.bounds();
            let g = quad_field(1.0, lo, hi, cx.config.solver.n)?;
            let d = GraphData::new(&g, &ConstantRhs(3.0))?;
            let c = d.center(center_node(&g))?;
            let delta = 7.0 * g.h();
            let sharp = ball_mass(&d, &c, delta, Indicator::Sharp)?;
            let smooth = ball_mass(&d, &c, delta, Indicator::Smoothed { width: 2.0 * g.h() })?;
            Ok(Outcome::at_most((smooth / sharp - 1.0).abs(), RATIO_TOL))
        }),
        task("quad_mean_value", |cx| {
            let (lo, hi) = cx.bounds();
            let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            let g = GridField::from_fn(mid - 2.0 * half, mid + 2.0 * half, cx.config.solver.n, |x| {
                0.5 * sigma2_core::linalg::dot(x, x)
            })?;
            let d = GraphData::new(&g, &ConstantRhs(3.0))?;
            let c = d.center(center_node(&g))?;
            let v = mean_value_ratio(&d, &c, half)?;
            let target = 3.0 / (32.0 * PI * half.powi(3));
            Ok(Outcome::at_most((v / target - 1.0).abs(), RATIO_TOL).with(json!({ "ratio": v, "target": target })))
        }),
        task("quad_cla", |cx| {
            let (lo, hi) = cx.bounds();
            let m = make_manufactured(ManufacturedSpec::quad_identity(), lo, hi)?;
            let c = GraphCenter {
                node: [0; 3],
                y0: [0.0; 3],
                p0: [0.0; 3],
            };
            let mut worst = 0.0f64;
            for i in 0..cx.config.budgets.catalog_points as u64 {
                let x = uniform_point(&mut stream(cx.seed() ^ 0xc1a, i), lo, hi);
                if norm(&x) < 1e-3 {
                    continue;
                }
                worst = worst.max((cla_ratio(&m.jet(&x), &m, &c)?.ratio - 1.0).abs());
            }
            Ok(Outcome::at_most(worst, CLA_TOL))
        }),
        task("cla_diagonal_quad", |cx| {
            let (lo, hi) = cx.bounds();
            let spec = ManufacturedSpec::Quad {
                a: SymMat3::diag(3.0, 1.0, -0.5),
                b: [0.0; 3],
                c: 0.0,
            };
            let m = make_manufactured(spec, lo, hi)?;
            let c = GraphCenter {
                node: [0; 3],
                y0: [0.0; 3],
                p0: [0.0; 3],
            };
            let mut worst = f64::NEG_INFINITY;
            for i in 0..cx.config.budgets.catalog_points as u64 {
                let x = uniform_point(&mut stream(cx.seed() ^ 0xc1b, i), lo, hi);
                if norm(&x) < 1e-3 {
                    continue;
                }
                worst = worst.max(cla_ratio(&m.jet(&x), &m, &c)?.ratio);
            }
            Ok(Outcome::at_most(worst, 1.0 + 1e-12))
        }),
        task("surrogates", |cx| {
            let r = surrogates(cx)?;
            let ok = r.first_link_margin >= -1e-12 && r.c_lower >= 1.0 && r.c_upper <= 3.0;
            Ok(Outcome::check(ok, r.first_link_margin, Some(-1e-12)).with(json!({
                "c_lower": r.c_lower,
                "argmin_lower": r.argmin_lower.lambdas(),
                "c_upper": r.c_upper,
                "argmax_upper": r.argmax_upper.lambdas(),
            })))
        }),
        task("surrogate_c_lower", |cx| {
            let r = surrogates(cx)?;
            Ok(Outcome::at_least(r.c_lower, 1.0).tracked())
        }),
    ];
    for spec in [super::cubic_pert(), super::trig_pert()] {
        v.push(task(format!("c_emp_refinement/{}", spec.id()), move |cx| {
            refinement(cx, spec)
        }));
    }
    v
}
