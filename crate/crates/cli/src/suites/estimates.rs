use serde_json::json;

use sigma2_core::calculus::ConstantRhs;
use sigma2_core::estimates::{
    doubling_ratio, eval_p, eval_phi, loglog20, v1_check, v1_rhs, Regions, TestField, TestQuantityParams, V1Status,
};
use sigma2_core::grid::GridField;

use super::{quad_field, task, CaseResult, Ctx, Outcome, Task};

/// `c₂ = inf min(σ₂^{22}, σ₂^{33})/σ₁` over the normalised cone.
const C2: f64 = 1.0 / 3.0;

fn floor_exact(t: &TestField, center: [usize; 3]) -> Outcome {
    let bits = loglog20().to_bits();
    let all = t.last.iter().all(|v| v.to_bits() == bits);
    let ok = all && t.floored == t.nodes.len() && t.argmax == center;
    Outcome::check(ok, t.floored as f64, Some(t.nodes.len() as f64)).with(json!({ "argmax": t.argmax, "max": t.max }))
}

fn quad(cx: &Ctx, a: f64, n: usize) -> sigma2_core::Result<GridField> {
    let (lo, hi) = cx.bounds();
    quad_field(a, lo, hi, n)
}

fn export(cx: &Ctx, name: &str, t: &TestField, like: &GridField) -> CaseResult {
    cx.artifact(&format!("estimates/{name}.s2gf"), &t.to_grid(like)?.to_bytes())?;
    Ok(Outcome::check(t.max.is_finite(), t.max, None)
        .with(json!({ "argmax": t.argmax, "floored": t.floored, "nodes": t.nodes.len() }))
        .tracked())
}

pub fn tasks() -> Vec<Task> {
    vec![
        task("doubling_quad", |cx| {
            let g = quad(cx, 1.0, cx.config.solver.n)?;
            let r = Regions::for_field(&g)?;
            let d = doubling_ratio(&g, &r.inner(), &r.outer())?;
            Ok(Outcome::check(d == 1.0, d, Some(0.0)))
        }),
        task("doubling_cubic", |cx| {
            let s = cx.solve(super::cubic_pert(), cx.config.solver.n)?;
            let r = Regions::for_field(&s.field)?;
            let d = doubling_ratio(&s.field, &r.inner(), &r.outer())?;
            Ok(Outcome::at_least(d, 1.0).tracked())
        }),
        task("doubling_linear_invariance", |cx| {
            let s = cx.solve(super::cubic_pert(), cx.config.solver.n)?;
            let r = Regions::for_field(&s.field)?;
            let d = doubling_ratio(&s.field, &r.inner(), &r.outer())?;
            let mut g = s.field.clone();
            for idx in 0..g.values.len() {
                let [i, j, k] = g.coords(idx);
                let x = g.point(i, j, k);
                g.values[idx] += 0.3 * x[0] - 0.2 * x[1] + 0.1 * x[2];
            }
            let d2 = doubling_ratio(&g, &r.inner(), &r.outer())?;
            Ok(Outcome::at_most((d2 - d).abs() / d, 1e-9))
        }),
        task("p_floor_quad", |cx| {
            let g = quad(cx, 1.0, cx.config.solver.n)?;
            let r = Regions::for_field(&g)?;
            let p = TestQuantityParams::from_field(&g, &r, C2)?;
            let c = g.n / 2;
            Ok(floor_exact(&eval_p(&g, &r, &p)?, [c, c, c]).with(json!({ "beta": p.beta })))
        }),
        task("phi_floor_quad", |cx| {
            let g = quad(cx, 1.0, cx.config.solver.n)?;
            let r = Regions::for_field(&g)?;
            let p = TestQuantityParams::from_field(&g, &r, C2)?;
            let c = g.n / 2;
            Ok(floor_exact(&eval_phi(&g, &ConstantRhs(3.0), &r, &p)?, [c, c, c]))
        }),
        task("p_cubic", |cx| {
            let s = cx.solve(super::cubic_pert(), cx.config.solver.n)?;
            let r = Regions::for_field(&s.field)?;
            let p = TestQuantityParams::from_field(&s.field, &r, C2)?;
            export(cx, "p_cubic_pert", &eval_p(&s.field, &r, &p)?, &s.field)
        }),
        task("phi_cubic", |cx| {
            let s = cx.solve(super::cubic_pert(), cx.config.solver.n)?;
            let r = Regions::for_field(&s.field)?;
            let p = TestQuantityParams::from_field(&s.field, &r, C2)?;
            export(cx, "phi_cubic_pert", &eval_phi(&s.field, &s.m, &r, &p)?, &s.field)
        }),
        task("v1_quad_no_eligible", |_| {
            let g = quad_field(1.0, -1.0, 1.0, 17)?;
            let rep = v1_check(&g, &ConstantRhs(3.0), &Regions::for_field(&g)?)?;
            let ok = rep.status == V1Status::NoEligibleNodes && rep.skipped == rep.nodes.len();
            Ok(Outcome::check(ok, rep.eligible as f64, Some(0.0)).with(json!({ "m5": rep.m5 })))
        }),
        task("v1_quad10_margin", |_| {
            let g = quad_field(10.0, -1.0, 1.0, 17)?;
            let rep = v1_check(&g, &ConstantRhs(300.0), &Regions::for_field(&g)?)?;
            let m = rep.min_margin.ok_or("no margin on an eligible field")?;
            let expect = v1_rhs(30.0, 8000.0) - 8000.0;
            let dev = (m - expect).abs() / 8000.0;
            let ok = rep.status == V1Status::Checked && rep.eligible == rep.nodes.len() && dev <= 1e-6;
            Ok(Outcome::check(ok, dev, Some(1e-6))
                .with(json!({ "margin": m, "holds": rep.holds, "eligible": rep.eligible })))
        }),
        task("v1_monotone_in_m5", |_| {
            let v: Vec<f64> = [8.0, 20.0, 100.0, 1e4].iter().map(|m| v1_rhs(*m, 50.0)).collect();
            Ok(Outcome::flag(v.windows(2).all(|w| w[1] > w[0])).with(json!({ "values": v })))
        }),
        task("v1_cubic", |cx| {
            let s = cx.solve(super::cubic_pert(), cx.config.solver.n)?;
            let rep = v1_check(&s.field, &s.m, &Regions::for_field(&s.field)?)?;
            Ok(Outcome::check(true, rep.eligible as f64, None)
                .with(json!({ "status": format!("{:?}", rep.status), "m5": rep.m5, "holds": rep.holds }))
                .tracked())
        }),
    ]
}
