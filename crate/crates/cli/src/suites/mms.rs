use std::fmt::Write as _;
use std::sync::Arc;

use serde_json::json;

use sigma2_core::calculus::{ConstantRhs, ManufacturedSpec};
use sigma2_core::grid::GridField;
use sigma2_core::linalg::dot;
use sigma2_core::solver::{convergence_study, solve_dirichlet, ConvergenceTable, SolveParams};

use super::{stem, task, CaseResult, Ctx, Outcome, Task};

const ORDER_TOL: f64 = 0.3;
const RECOVERY_TOL: f64 = 1e-10;

fn table_csv(t: &ConvergenceTable, timings: bool) -> String {
    let mut s = String::from("n,h,max_error,order,iterations,min_margin,runtime\n");
    for r in &t.rows {
        let order = r.order.map(|o| format!("{o:e}")).unwrap_or_default();
        let rt = if timings {
            format!("{:e}", r.runtime)
        } else {
            String::new()
        };
        writeln!(
            s,
            "{},{:e},{:e},{order},{},{:e},{rt}",
            r.n, r.h, r.max_error, r.iterations, r.min_margin
        )
        .unwrap();
    }
    s
}

fn table(cx: &Ctx, spec: ManufacturedSpec) -> Result<Arc<ConvergenceTable>, String> {
    let (lo, hi) = cx.bounds();
    cx.memo(&format!("mms:{}", spec.id()), || {
        convergence_study(spec, lo, hi, &cx.config.solver.mms_grids, &cx.params())
    })
}

fn study(cx: &Ctx, spec: ManufacturedSpec) -> CaseResult {
    let params = cx.params();
    let t = table(cx, spec)?;
    cx.artifact(
        &format!("mms/{}.csv", stem(&t.id)),
        table_csv(&t, cx.config.timings).as_bytes(),
    )?;
    let min_margin = t.rows.iter().map(|r| r.min_margin).fold(f64::INFINITY, f64::min);
    let w = json!({
        "errors": t.rows.iter().map(|r| r.max_error).collect::<Vec<_>>(),
        "orders": t.rows.iter().map(|r| r.order).collect::<Vec<_>>(),
        "iterations": t.rows.iter().map(|r| r.iterations).collect::<Vec<_>>(),
        "min_margin": min_margin,
        "exact": t.exact,
    });
    if min_margin < params.tau {
        return Ok(Outcome::check(false, min_margin, Some(params.tau)).with(w));
    }
    if t.exact {
        let e = t.rows.iter().map(|r| r.max_error).fold(0.0, f64::max);
        return Ok(Outcome::check(true, e, Some(sigma2_core::solver::EXACT_LEVEL)).with(w));
    }
    let worst = t
        .rows
        .iter()
        .skip(1)
        .map(|r| r.order.map_or(f64::INFINITY, |o| (o - 2.0).abs()))
        .fold(0.0, f64::max);
    Ok(Outcome::check(worst <= ORDER_TOL, worst, Some(ORDER_TOL)).with(w))
}

pub fn tasks() -> Vec<Task> {
    let mut v = vec![task("quadratic_recovery_n17", |cx| {
        let half_sq = |x: &sigma2_core::Vec3| 0.5 * dot(x, x);
        let params = SolveParams {
            tau: cx.config.solver.tau,
            ..SolveParams::default()
        };
        let (u, st) = solve_dirichlet(&ConstantRhs(3.0), &half_sq, -1.0, 1.0, 17, &params)?;
        let err = u.max_diff(&GridField::from_fn(-1.0, 1.0, 17, half_sq)?)?;
        let ok = err <= RECOVERY_TOL && st.iterations <= 3;
        Ok(Outcome::check(ok, err, Some(RECOVERY_TOL)).with(json!({ "iterations": st.iterations })))
    })];
    for spec in [
        ManufacturedSpec::quad_identity(),
        super::cubic_pert(),
        super::trig_pert(),
    ] {
        v.push(task(format!("order/{}", spec.id()), move |cx| study(cx, spec)));
    }
    v.push(task(format!("finest_error/{}", super::trig_pert().id()), |cx| {
        let t = table(cx, super::trig_pert())?;
        let last = t.rows.last().ok_or("empty convergence table")?;
        Ok(Outcome::check(last.max_error.is_finite(), last.max_error, None)
            .with(json!({ "n": last.n }))
            .tracked())
    }));
    v
}
