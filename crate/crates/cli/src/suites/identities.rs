use serde_json::json;

use sigma2_core::calculus::{
    concavity_margin, fd_jet_pairs, gradient_bound_ratios, lemma1_r1, lemma1_r2, logb_residual, make_manufactured,
    observed_order, relative_change, subv_residual, v_decomposition, Jet3, ManufacturedSolution, ManufacturedSpec,
    ROUNDOFF_LEVEL,
};
use sigma2_core::pointwise::{gram_identity_residual, product_identity_residual};
use sigma2_core::rng::{random_gamma2_matrix, random_gamma2_triple, stream, uniform_point};
use sigma2_core::symfun::{eigen_sorted, sigma_of_matrix};

use super::{max_abs, task, CaseResult, Ctx, Outcome, Task};

const IDENTITY_TOL: f64 = 1e-12;
const LEMMA1_TOL: f64 = 1e-10;
const VDEC_TOL: f64 = 1e-9;
const VDEC_SEPARATION: f64 = 1e-6;
const ORDER_TOL: f64 = 0.3;
const CREQ_TOL: f64 = 0.1;
const CONCAVITY_TOL: f64 = 1e-9;
/// Coarse grid of the derivative-identity order study and of the `C_required` study.
const ORDER_GRID: usize = 9;
const CREQ_GRID: usize = 17;

/// Catalog entries plus a variant whose right-hand side depends on `u`
/// and `Du`.
fn entries() -> Vec<(String, ManufacturedSpec, bool)> {
    let mut v: Vec<_> = ManufacturedSpec::catalog()
        .into_iter()
        .map(|s| (s.id(), s, false))
        .collect();
    let c = super::cubic_pert();
    v.push((format!("{}+coupled", c.id()), c, true));
    v
}

fn build(cx: &Ctx, spec: ManufacturedSpec, coupled: bool) -> sigma2_core::Result<ManufacturedSolution> {
    let (lo, hi) = cx.bounds();
    let m = make_manufactured(spec, lo, hi)?;
    Ok(if coupled {
        m.with_coupling(0.5, [0.1, -0.2, 0.3])
    } else {
        m
    })
}

fn sample_jets(cx: &Ctx, m: &ManufacturedSolution, salt: u64) -> Vec<Jet3> {
    let (lo, hi) = cx.bounds();
    (0..cx.config.budgets.catalog_points as u64)
        .map(|i| {
            let mut rng = stream(cx.seed() ^ (salt << 32), i);
            m.jet(&uniform_point(&mut rng, lo, hi))
        })
        .collect()
}

fn per_entry(prefix: &str, f: fn(&Ctx, &ManufacturedSolution) -> CaseResult) -> Vec<Task> {
    entries()
        .into_iter()
        .map(|(label, spec, coupled)| task(format!("{prefix}/{label}"), move |cx| f(cx, &build(cx, spec, coupled)?)))
        .collect()
}

fn lemma1(cx: &Ctx, m: &ManufacturedSolution) -> CaseResult {
    let mut worst = 0.0f64;
    let mut at = [0.0; 3];
    for jet in sample_jets(cx, m, 1) {
        let r = max_abs(&lemma1_r1(&jet, m)).max(max_abs(&lemma1_r2(&jet, m)?));
        if !(r <= worst) {
            worst = r;
            at = jet.x;
        }
    }
    Ok(Outcome::at_most(worst, LEMMA1_TOL).with(json!({ "worst_point": at })))
}

fn fd_order(m: &ManufacturedSolution, second: bool) -> CaseResult {
    let (mut c, mut f) = (0.0f64, 0.0f64);
    for (jc, jf, _) in fd_jet_pairs(m, ORDER_GRID)? {
        let (rc, rf) = if second {
            (max_abs(&lemma1_r2(&jc, m)?), max_abs(&lemma1_r2(&jf, m)?))
        } else {
            (max_abs(&lemma1_r1(&jc, m)), max_abs(&lemma1_r1(&jf, m)))
        };
        c = c.max(rc);
        f = f.max(rf);
    }
    let w = json!({ "coarse_n": ORDER_GRID, "coarse_max": c, "fine_max": f });
    Ok(match observed_order(c, f) {
        None => Outcome::check(true, f64::NAN, None)
            .with(w)
            .with(json!({ "exact": true })),
        Some(o) => Outcome::check((o - 2.0).abs() <= ORDER_TOL, o, Some(ORDER_TOL)).with(w),
    })
}

fn vdec(cx: &Ctx, m: &ManufacturedSolution) -> CaseResult {
    let (mut worst, mut used, mut skipped) = (0.0f64, 0usize, 0usize);
    let mut at = None;
    for jet in sample_jets(cx, m, 2) {
        let e = eigen_sorted(&jet.d2u)?;
        let gap = (e.lambda1 - e.lambda2).min(e.lambda2 - e.lambda3);
        if gap <= VDEC_SEPARATION {
            skipped += 1;
            continue;
        }
        let d = v_decomposition(&jet, m)?;
        let Some(mm) = d.mismatch else {
            skipped += 1;
            continue;
        };
        used += 1;
        let rel = mm / (1.0 + d.direct.abs());
        if !(rel <= worst) {
            worst = rel;
            at = Some(jet.x);
        }
    }
    if used == 0 {
        return Ok(Outcome::skip(format!(
            "no sampled point has eigenvalue separation above {VDEC_SEPARATION:e}"
        )));
    }
    Ok(Outcome::at_most(worst, VDEC_TOL).with(json!({ "points": used, "skipped": skipped, "worst_point": at })))
}

/// A deliberate misprint of the decomposition must show up: II with
/// coefficient `4f` or III with `(λ₁−λ₂)` unsquared.
fn vdec_variant(cx: &Ctx, spec: ManufacturedSpec, second: bool) -> CaseResult {
    let m = build(cx, spec, false)?;
    let mut worst = 0.0f64;
    for jet in sample_jets(cx, &m, 3) {
        let d = v_decomposition(&jet, &m)?;
        let wrong = if second {
            d.mismatch_iii_unsquared
        } else {
            d.mismatch_ii_4f
        };
        worst = worst.max(wrong.unwrap_or(0.0) / (1.0 + d.direct.abs()));
    }
    Ok(Outcome::check(worst > 1e3 * VDEC_TOL, worst, Some(1e3 * VDEC_TOL)).with(json!({ "solution": spec.id() })))
}

fn creq(m: &ManufacturedSolution, subv: bool) -> CaseResult {
    let (mut c, mut f) = (0.0f64, 0.0f64);
    for (jc, jf, _) in fd_jet_pairs(m, CREQ_GRID)? {
        let (a, b) = if subv {
            (subv_residual(&jc, m)?.1, subv_residual(&jf, m)?.1)
        } else {
            (logb_residual(&jc, m)?.1, logb_residual(&jf, m)?.1)
        };
        c = c.max(a);
        f = f.max(b);
    }
    let rc = if c.max(f) <= ROUNDOFF_LEVEL {
        0.0
    } else {
        relative_change(c, f)
    };
    let ok = c.is_finite() && f.is_finite() && rc <= CREQ_TOL;
    Ok(Outcome::check(ok, rc, Some(CREQ_TOL))
        .with(json!({ "c_required_h": c, "c_required_h2": f, "coarse_n": CREQ_GRID })))
}

fn concavity(cx: &Ctx, m: &ManufacturedSolution) -> CaseResult {
    let mut worst = f64::INFINITY;
    let mut at = [0.0; 3];
    for jet in sample_jets(cx, m, 4) {
        let c = concavity_margin(&jet, m)?;
        if !(c >= worst) {
            worst = c;
            at = jet.x;
        }
    }
    Ok(Outcome::at_least(worst, -CONCAVITY_TOL).with(json!({ "worst_point": at })))
}

fn gradient_bounds(cx: &Ctx, m: &ManufacturedSolution) -> CaseResult {
    let (mut g, mut h) = (0.0f64, 0.0f64);
    for jet in sample_jets(cx, m, 5) {
        let (a, b) = gradient_bound_ratios(&jet, m)?;
        g = g.max(a);
        h = h.max(b);
    }
    let v = g.max(h);
    Ok(Outcome::check(v.is_finite(), v, None)
        .with(json!({ "df_ratio": g, "d2f_ratio": h }))
        .tracked())
}

fn algebraic(cx: &Ctx, gram: bool) -> CaseResult {
    let mut worst = 0.0f64;
    let mut at = [0.0; 3];
    for i in 0..cx.config.budgets.identities as u64 {
        let mut rng = stream(cx.seed(), i);
        let (r, lam) = if gram {
            let (a, lam) = random_gamma2_matrix(&mut rng, 3.0);
            (gram_identity_residual(&a)?, lam)
        } else {
            let lam = random_gamma2_triple(&mut rng, 3.0);
            (product_identity_residual(&lam), lam)
        };
        let rel = r.abs() / lam.norm().powi(3);
        if !(rel <= worst) {
            worst = rel;
            at = lam.lambdas();
        }
    }
    Ok(Outcome::at_most(worst, IDENTITY_TOL).with(json!({ "worst_eigenvalues": at })))
}

pub fn tasks() -> Vec<Task> {
    let mut v = vec![
        task("product_identity", |cx| algebraic(cx, false)),
        task("gram_identity", |cx| algebraic(cx, true)),
        task("density_positive", |cx| {
            // (σ₁σ₂ − σ₃)/(σ₁σ₂) ≥ 8/9 follows from Newton–MacLaurin
            let mut worst = f64::INFINITY;
            for i in 0..cx.config.budgets.identities as u64 {
                let (a, _) = random_gamma2_matrix(&mut stream(cx.seed() ^ 0xd5, i), 3.0);
                let (s1, s2, s3) = sigma_of_matrix(&a);
                worst = worst.min((s1 * s2 - s3) / (s1 * s2));
            }
            Ok(Outcome::at_least(worst, 8.0 / 9.0 - IDENTITY_TOL))
        }),
    ];
    v.extend(per_entry("lemma1", lemma1));
    v.extend(per_entry("lemma1_fd_order_r1", |_, m| fd_order(m, false)));
    v.extend(per_entry("lemma1_fd_order_r2", |_, m| fd_order(m, true)));
    v.extend(per_entry("v_decomposition", vdec));
    v.push(task("v_misprint_ii_4f", |cx| {
        vdec_variant(
            cx,
            ManufacturedSpec::DiagCubic {
                a: [3.0, 2.0, 1.0],
                eps: 0.2,
            },
            false,
        )
    }));
    v.push(task("v_misprint_iii_unsquared", |cx| {
        vdec_variant(cx, super::trig_pert(), true)
    }));
    v.extend(per_entry("logb_c_required", |_, m| creq(m, false)));
    v.extend(per_entry("subv_c_required", |_, m| creq(m, true)));
    v.extend(per_entry("concavity", concavity));
    v.extend(per_entry("gradient_bounds", gradient_bounds));
    v
}
