use std::sync::Arc;

use serde_json::json;

use sigma2_core::calculus::LOGB_EPS;
use sigma2_core::pointwise::{
    claim1_epsilon_boundary, cone_constants_over, epsilon_link_holds, estimate_cone_constants, infimum_search,
    ConeConstants, InfimumReport, Quantity, SampleRegion, SearchConfig,
};
use sigma2_core::EigenTriple;

use super::{task, Ctx, Outcome, Task};

const CLAIM1_TOL: f64 = 1e-10;
const CLAIM2_TOL: f64 = 1e-8;

fn witness(rep: &InfimumReport) -> serde_json::Value {
    json!({
        "argmin": rep.argmin.lambdas(),
        "parameters": rep.parameters,
        "samples": rep.samples,
        "refinement_steps": rep.refinement_steps,
        "grid_spacing": rep.grid_spacing,
    })
}

fn search(q: Quantity, region: &SampleRegion, budget: usize, seed: u64) -> sigma2_core::Result<InfimumReport> {
    infimum_search(&q, region, budget, seed, &SearchConfig::default())
}

fn constants(cx: &Ctx, seed: u64) -> Result<Arc<ConeConstants>, String> {
    cx.memo(&format!("cone_constants:{seed}"), || {
        estimate_cone_constants(cx.config.budgets.constants, seed)
    })
}

pub fn tasks() -> Vec<Task> {
    vec![
        task("claim1_eps_0.4", |cx| {
            let rep = search(
                Quantity::Claim1 { eps: 0.4 },
                &SampleRegion::normalized(),
                cx.config.budgets.pointwise,
                cx.seed(),
            )?;
            Ok(Outcome::at_least(rep.min_value, -CLAIM1_TOL).with(witness(&rep)))
        }),
        task("claim2_delta_0.05", |cx| {
            let rep = search(
                Quantity::Claim2 { delta: 0.05 },
                &SampleRegion::normalized(),
                cx.config.budgets.pointwise,
                cx.seed(),
            )?;
            Ok(Outcome::at_least(rep.min_value, -CLAIM2_TOL).with(witness(&rep)))
        }),
        task("claim1_eps_0.9_probe", |cx| {
            let region = SampleRegion::raw_box([0.9; 3], [1.1; 3]);
            let budget = cx.config.budgets.pointwise.min(100_000);
            let rep = search(Quantity::Claim1 { eps: 0.9 }, &region, budget, cx.seed())?;
            let dist = rep.argmin.lambdas().iter().fold(0.0f64, |a, l| a.max((l - 1.0).abs()));
            let ok = rep.violation && rep.min_value <= -0.3 && dist <= 0.1 + 1e-12;
            Ok(Outcome::check(ok, rep.min_value, Some(-0.3))
                .with(witness(&rep))
                .with(json!({ "distance_to_111": dist })))
        }),
        task("claim1_eps_0.9_normalized", |cx| {
            let rep = search(
                Quantity::Claim1 { eps: 0.9 },
                &SampleRegion::normalized(),
                cx.config.budgets.pointwise,
                cx.seed(),
            )?;
            Ok(Outcome::check(rep.violation, rep.min_value, Some(-CLAIM1_TOL))
                .with(witness(&rep))
                .tracked())
        }),
        task("claim1_epsilon_boundary", |cx| {
            let budget = (cx.config.budgets.pointwise / 20).max(1000);
            let cfg = SearchConfig::default();
            let e = claim1_epsilon_boundary(0.4, 0.9, 1e-3, budget, cx.seed(), &cfg)?;
            Ok(Outcome::check((0.4..0.9).contains(&e), e, Some(1e-3))
                .with(json!({ "budget_per_search": budget }))
                .tracked())
        }),
        task("epsilon_link", |_| {
            let ok = epsilon_link_holds(LOGB_EPS, 0.05) && !epsilon_link_holds(0.05, 0.05);
            Ok(Outcome::flag(ok).with(json!({ "eps": LOGB_EPS, "delta": 0.05 })))
        }),
        task("lemma2_constants", |cx| {
            let a = constants(cx, cx.seed())?;
            let b = constants(cx, cx.seed() + 1)?;
            let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs());
            let spread = rel(a.c1, b.c1).max(rel(a.c2, b.c2));
            let ok = a.c1 > 0.0 && a.c2 > 0.0 && b.c1 > 0.0 && b.c2 > 0.0 && spread <= 0.01;
            Ok(Outcome::check(ok, spread, Some(0.01)).with(json!({
                "c1": [a.c1, b.c1],
                "c2": [a.c2, b.c2],
                "seeds": [cx.seed(), cx.seed() + 1],
            })))
        }),
        task("lemma2_c1", |cx| {
            let c = constants(cx, cx.seed())?;
            Ok(Outcome::check(c.c1 > 0.0, c.c1, None)
                .with(json!({ "argmin": c.argmin1.lambdas() }))
                .tracked())
        }),
        task("lemma2_c2", |cx| {
            let c = constants(cx, cx.seed())?;
            Ok(Outcome::check(c.c2 > 0.0, c.c2, None)
                .with(json!({ "argmin": c.argmin2.lambdas() }))
                .tracked())
        }),
        task("lemma2_c2_family", |_| {
            let pts: Vec<EigenTriple> = (1..=1000)
                .map(|i| EigenTriple::new(1.0, 1.0, -0.5 + 1e-6 * i as f64))
                .collect();
            let c = cone_constants_over(&pts)?;
            Ok(Outcome::at_most(c.c2, 1.0 / 3.0 + 1e-3).with(json!({ "argmin": c.argmin2.lambdas() })))
        }),
        task("cla_pointwise", |cx| {
            let rep = search(
                Quantity::ClaRatio,
                &SampleRegion::normalized(),
                cx.config.budgets.pointwise,
                cx.seed(),
            )?;
            Ok(Outcome::at_least(rep.min_value, -CLAIM1_TOL).with(witness(&rep)))
        }),
    ]
}
