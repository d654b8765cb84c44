use serde_json::json;

use sigma2_core::calculus::ConstantRhs;
use sigma2_core::estimates::{integral_chain_audit, ChainAudit, Regions};

use super::{quad_field, task, CaseResult, Ctx, Outcome, Task};

fn t_values(a: &ChainAudit) -> [f64; 4] {
    [a.t_meanvalue, a.t_entropy, a.t_gradb, a.t_energy]
}

fn summary(a: &ChainAudit) -> serde_json::Value {
    json!({
        "x0": a.x0,
        "t_meanvalue": a.t_meanvalue,
        "t_entropy": a.t_entropy,
        "t_gradb": a.t_gradb,
        "t_energy": a.t_energy,
        "c_min": a.c_min,
        "absorption_holds": a.absorption.holds,
        "holder_holds": a.holder_holds,
        "implied_bound": a.implied_bound,
    })
}

fn solved_audit(
    cx: &Ctx,
    spec: sigma2_core::calculus::ManufacturedSpec,
    file: &str,
) -> Result<ChainAudit, Box<dyn std::error::Error + Send + Sync>> {
    let s = cx.solve(spec, cx.config.solver.n)?;
    let a = integral_chain_audit(&s.field, &s.m, &Regions::for_field(&s.field)?)?;
    let body = serde_json::to_string_pretty(&a)? + "\n";
    cx.artifact(&format!("audit/{file}.json"), body.as_bytes())?;
    Ok(a)
}

fn finite_chain(a: &ChainAudit) -> bool {
    t_values(a).iter().all(|v| v.is_finite() && *v >= 0.0) && a.c_min > 0.0 && a.absorption.holds && a.holder_holds
}

pub fn tasks() -> Vec<Task> {
    vec![
        task("quad_trivial_chain", |cx| -> CaseResult {
            let (lo, hi) = cx.bounds();
            let g = quad_field(1.0, lo, hi, cx.config.solver.n)?;
            let a = integral_chain_audit(&g, &ConstantRhs(3.0), &Regions::for_field(&g)?)?;
            let trivial = a.t_energy.abs() < 1e-20 && a.t_gradb.abs() < 1e-8;
            let ok = trivial && finite_chain(&a);
            Ok(Outcome::check(ok, a.t_gradb.abs().max(a.t_energy.abs()), Some(1e-8)).with(summary(&a)))
        }),
        task("cubic_solve_chain", |cx| {
            let a = solved_audit(cx, super::cubic_pert(), "cubic_pert")?;
            Ok(Outcome::check(finite_chain(&a), a.t_entropy, None)
                .with(summary(&a))
                .tracked())
        }),
        task("trig_solve_chain", |cx| {
            let a = solved_audit(cx, super::trig_pert(), "trig_pert")?;
            let ok = finite_chain(&a) && a.t_energy > 0.0 && a.t_gradb > 0.0 && a.t_entropy <= a.implied_bound;
            Ok(Outcome::check(ok, a.t_energy, None).with(summary(&a)).tracked())
        }),
        task("trig_linear_invariance", |cx| {
            let s = cx.solve(super::trig_pert(), cx.config.solver.n)?;
            let r = Regions::for_field(&s.field)?;
            let a = integral_chain_audit(&s.field, &s.m, &r)?;
            let mut g = s.field.clone();
            for idx in 0..g.values.len() {
                let [i, j, k] = g.coords(idx);
                let x = g.point(i, j, k);
                g.values[idx] += 0.2 * x[0] - 0.1 * x[2];
            }
            let b = integral_chain_audit(&g, &s.m, &r)?;
            let dev = t_values(&a)
                .iter()
                .zip(t_values(&b))
                .chain([(&a.m1, b.m1)])
                .map(|(x, y)| (x - y).abs() / x.abs().max(1e-300))
                .fold(0.0, f64::max);
            Ok(Outcome::at_most(dev, 1e-8).with(json!({ "x0": a.x0, "x0_shifted": b.x0 })))
        }),
    ]
}
