use serde_json::json;

use sigma2_core::calculus::{hessian_at, ConstantRhs, ManufacturedSpec};
use sigma2_core::grid::GridField;
use sigma2_core::linalg::dot;
use sigma2_core::solver::{admissible_init, solve_dirichlet, SolveParams, EXACT_LEVEL};
use sigma2_core::symfun::sigma_of_matrix;
use sigma2_core::{Error, Vec3};

use super::{task, CaseResult, Ctx, Outcome, Task};

fn solve_case(cx: &Ctx, spec: ManufacturedSpec) -> CaseResult {
    let n = cx.config.solver.n;
    let s = cx.solve(spec, n)?;
    let err = s.field.max_diff(&s.exact)?;
    let margin = s.stats.cone_margins.iter().copied().fold(f64::INFINITY, f64::min);
    let w = json!({
        "n": n,
        "iterations": s.stats.iterations,
        "residuals": s.stats.residuals,
        "damping": s.stats.damping,
        "stages": s.stats.stages,
        "min_margin": margin,
        "mp_violations": s.stats.mp_violations,
    });
    let exact = matches!(spec, ManufacturedSpec::CubicPert { .. });
    let ok = s.stats.converged && margin >= cx.config.solver.tau && err.is_finite() && (!exact || err <= EXACT_LEVEL);
    let out = Outcome::check(ok, err, exact.then_some(EXACT_LEVEL)).with(w);
    Ok(if exact { out } else { out.tracked() })
}

pub fn tasks() -> Vec<Task> {
    let mut v = vec![task("homotopy_xy", |cx| {
        // D²u = I + 0.2(e₁e₂ᵀ + e₂e₁ᵀ), σ₂ = 3 − 0.04
        let g = |x: &Vec3| 0.5 * dot(x, x) + 0.2 * x[0] * x[1];
        let params = SolveParams {
            homotopy_steps: 4,
            ..cx.params()
        };
        let n = cx.config.solver.n.min(17);
        let (u, st) = solve_dirichlet(&ConstantRhs(2.96), &g, -1.0, 1.0, n, &params)?;
        let err = u.max_diff(&GridField::from_fn(-1.0, 1.0, n, g)?)?;
        let ok = st.converged && st.stages.last() == Some(&1.0) && err <= 1e-9;
        Ok(Outcome::check(ok, err, Some(1e-9)).with(json!({ "stages": st.stages, "iterations": st.iterations })))
    })];
    for spec in [super::cubic_pert(), super::trig_pert()] {
        v.push(task(format!("solve/{}", spec.id()), move |cx| solve_case(cx, spec)));
        v.push(task(format!("lap_bound/{}", spec.id()), move |cx| {
            let s = cx.solve(spec, cx.config.solver.n)?;
            let c = s.stats.lap_bound_violations as f64;
            Ok(Outcome::at_most(c, 0.0))
        }));
    }
    v.extend([
        task("admissible_init", |_| {
            let (_, flat) = admissible_init(-1.0, 1.0, 9, &|_| 0.0, 1.0, 1e-8)?;
            let (u, steep) = admissible_init(-1.0, 1.0, 9, &|x| 5.0 * dot(x, x), 10.0, 1e-8)?;
            let s2 = sigma_of_matrix(&hessian_at(&u, [4, 4, 4])).1;
            let ok = !flat.admissible && steep.admissible && (s2 - 300.0).abs() < 1e-9;
            Ok(Outcome::check(ok, s2, None)
                .with(json!({ "flat_margin": flat.min_margin, "steep_margin": steep.min_margin })))
        }),
        task("rejects_small_grid", |_| {
            let r = solve_dirichlet(&ConstantRhs(3.0), &|_| 0.0, -1.0, 1.0, 7, &SolveParams::default());
            Ok(Outcome::flag(matches!(r, Err(Error::Domain(_)))))
        }),
        task("gridfield_roundtrip", |cx| {
            let spec = super::cubic_pert();
            let s = cx.solve(spec, cx.config.solver.n)?;
            let path = cx.artifact("solver/cubic_pert.s2gf", &s.field.to_bytes())?;
            let back = GridField::read(&path)?;
            let ok = back.values.len() == s.field.values.len()
                && back
                    .values
                    .iter()
                    .zip(&s.field.values)
                    .all(|(a, b)| a.to_bits() == b.to_bits())
                && (back.lo, back.hi, back.n) == (s.field.lo, s.field.hi, s.field.n);
            Ok(Outcome::flag(ok))
        }),
    ]);
    v
}
