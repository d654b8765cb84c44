//! Pointwise evaluation of the differentiated equation and of the
//! differential inequalities for `b = log Δu` and `V = log(fσ₁ − σ₃)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{mat_t_vec, Sym4Tensor, SymMat3, Vec3, IDENTITY};
use crate::symfun::{eigen_decompose, sigma2_gradient, sigma3_gradient, sigma3_second, sigma_of_matrix};

use super::rhs::{eval_along, total_first, total_second, RhsEval, RhsModel};
use super::Jet3;

/// Default weight of the gradient term in the `log Δu` inequality.
pub const LOGB_EPS: f64 = 0.01;

/// Eigenvalue separation below which the eigenframe is treated as ambiguous.
pub const FRAME_GAP: f64 = 1e-8;

fn fourth(jet: &Jet3) -> Result<&Sym4Tensor> {
    jet.d4u
        .as_ref()
        .ok_or_else(|| Error::Capability("this quantity needs fourth derivatives, the jet carries only three".into()))
}

struct Along {
    e: RhsEval,
    df: Vec3,
    d2f: SymMat3,
}

fn along(jet: &Jet3, rhs: &dyn RhsModel) -> Along {
    let e = eval_along(rhs, jet);
    Along {
        df: total_first(&e, jet),
        d2f: total_second(&e, jet),
        e,
    }
}

fn u_slices(jet: &Jet3) -> [SymMat3; 3] {
    [0, 1, 2].map(|i| jet.d3u.slice(i))
}

/// `R1_i = σ₂^{kl}u_kli − f_i`.
pub fn lemma1_r1(jet: &Jet3, rhs: &dyn RhsModel) -> Vec3 {
    let s = sigma2_gradient(&jet.d2u);
    let a = along(jet, rhs);
    let ui = u_slices(jet);
    [0, 1, 2].map(|i| s.contract(&ui[i]) - a.df[i])
}

/// `R2_i = σ₂^{kl}u_klii + Σ_{k≠l}u_kki u_lli − Σ_{k≠l}u_kli² − f_ii`.
pub fn lemma1_r2(jet: &Jet3, rhs: &dyn RhsModel) -> Result<Vec3> {
    let d4 = fourth(jet)?;
    let s = sigma2_gradient(&jet.d2u);
    let a = along(jet, rhs);
    let t = &jet.d3u;
    Ok([0, 1, 2].map(|i| {
        let mut r = s.contract(&d4.slice(i, i));
        for k in 0..3 {
            for l in 0..3 {
                if k != l {
                    r += t.get(k, k, i) * t.get(l, l, i) - t.get(k, l, i).powi(2);
                }
            }
        }
        r - a.d2f.get(i, i)
    }))
}

pub fn lemma1_residuals(jet: &Jet3, rhs: &dyn RhsModel) -> Result<(Vec3, Vec3)> {
    Ok((lemma1_r1(jet, rhs), lemma1_r2(jet, rhs)?))
}

/// `(|Df|/(1+Δu), max_ij |f_ij − f_{p_k}u_kij|/(1+Δu)²)`.
pub fn gradient_bound_ratios(jet: &Jet3, rhs: &dyn RhsModel) -> Result<(f64, f64)> {
    let lap = jet.laplacian();
    if lap <= 0.0 {
        return Err(Error::domain(format!("Δu = {lap:.3e} is not positive")));
    }
    let a = along(jet, rhs);
    let g = crate::linalg::norm(&a.df) / (1.0 + lap);
    let mut h: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let mut v = a.d2f.get(i, j);
            for k in 0..3 {
                v -= a.e.f_p[k] * jet.d3u.get(k, i, j);
            }
            h = h.max(v.abs());
        }
    }
    Ok((g, h / (1.0 + lap).powi(2)))
}

/// Residual of the `log Δu` inequality without its `−CΔu` term, and the
/// smallest `C` restoring it: `(σ₂^{ij}b_ij − ε σ₂^{ij}b_i b_j − f_p·Db,
/// max(0, −residual)/Δu)`.
pub fn logb_residual(jet: &Jet3, rhs: &dyn RhsModel) -> Result<(f64, f64)> {
    logb_residual_eps(jet, rhs, LOGB_EPS)
}

pub fn logb_residual_eps(jet: &Jet3, rhs: &dyn RhsModel, eps: f64) -> Result<(f64, f64)> {
    let lap = jet.laplacian();
    if lap <= 0.0 {
        return Err(Error::domain(format!("Δu = {lap:.3e} is not positive")));
    }
    let d4 = fourth(jet)?;
    let s = sigma2_gradient(&jet.d2u);
    let e = eval_along(rhs, jet);
    let li = jet.grad_laplacian();
    let b = li.map(|v| v / lap);
    let mut bij = SymMat3::default();
    for i in 0..3 {
        for j in i..3 {
            bij.set(i, j, d4.slice(i, j).trace() / lap - b[i] * b[j]);
        }
    }
    let res = s.contract(&bij) - eps * s.quad_form(&b) - crate::linalg::dot(&e.f_p, &b);
    Ok((res, (-res).max(0.0) / lap))
}

struct VData {
    w: f64,
    wi: Vec3,
    wij: SymMat3,
}

fn v_data(jet: &Jet3, a: &Along) -> Result<VData> {
    let d4 = fourth(jet)?;
    let m = &jet.d2u;
    let (s1, _, s3) = sigma_of_matrix(m);
    let f = a.e.f;
    let w = f * s1 - s3;
    if w <= 0.0 {
        return Err(Error::domain(format!(
            "fσ₁ − σ₃ = {w:.3e} is not positive (Hessian outside Γ₂)"
        )));
    }
    let adj = sigma3_gradient(m);
    let ui = u_slices(jet);
    let li = ui.each_ref().map(|u| u.trace());
    let wi = [0, 1, 2].map(|i| li[i] * f + s1 * a.df[i] - adj.contract(&ui[i]));
    let mut wij = SymMat3::default();
    for i in 0..3 {
        for j in i..3 {
            let uij = d4.slice(i, j);
            let s3ij = adj.contract(&uij) + sigma3_second(m, &ui[i], &ui[j]);
            wij.set(
                i,
                j,
                uij.trace() * f + li[i] * a.df[j] + li[j] * a.df[i] + s1 * a.d2f.get(i, j) - s3ij,
            );
        }
    }
    Ok(VData { w, wi, wij })
}

fn sigma2_v_ij(jet: &Jet3, d: &VData) -> (f64, Vec3) {
    let s = sigma2_gradient(&jet.d2u);
    let vi = d.wi.map(|v| v / d.w);
    let contracted = s.contract(&d.wij) / d.w - s.quad_form(&d.wi) / (d.w * d.w);
    (contracted, vi)
}

/// `(σ₂^{ij}V_ij − f_p·DV, max(0, −residual)/σ₁)` for `V = log(fσ₁ − σ₃)`.
pub fn subv_residual(jet: &Jet3, rhs: &dyn RhsModel) -> Result<(f64, f64)> {
    let a = along(jet, rhs);
    let d = v_data(jet, &a)?;
    let (c, vi) = sigma2_v_ij(jet, &d);
    let res = c - crate::linalg::dot(&a.e.f_p, &vi);
    Ok((res, (-res).max(0.0) / jet.laplacian()))
}

/// `σ₂^{ij}(σ₁)_ij − Δf + |Df|²/(2f)`.
pub fn concavity_margin(jet: &Jet3, rhs: &dyn RhsModel) -> Result<f64> {
    let d4 = fourth(jet)?;
    let a = along(jet, rhs);
    if a.e.f <= 0.0 {
        return Err(Error::domain(format!("f = {:.3e} is not positive", a.e.f)));
    }
    let s = sigma2_gradient(&jet.d2u);
    let mut lij = SymMat3::default();
    for i in 0..3 {
        for j in i..3 {
            lij.set(i, j, d4.slice(i, j).trace());
        }
    }
    Ok(s.contract(&lij) - a.d2f.trace() + crate::linalg::dot(&a.df, &a.df) / (2.0 * a.e.f))
}

/// The four groups of `σ₂^{ij}V_ij` in the eigenframe of `D²u`, after
/// eliminating `u_kkk` with the differentiated equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VDecomposition {
    /// `[I, II, III, IV]`, absent when the frame is ambiguous.
    pub parts: Option<[f64; 4]>,
    pub direct: f64,
    pub mismatch: Option<f64>,
    /// Mismatch when II uses the coefficient `4f u₁₂₃²` instead of `8f u₁₂₃²`.
    pub mismatch_ii_4f: Option<f64>,
    /// Mismatch when the `u₁₁₂²` term of III carries `(λ₁−λ₂)` unsquared.
    pub mismatch_iii_unsquared: Option<f64>,
    pub frame_warning: Option<String>,
}

pub fn v_decomposition(jet: &Jet3, rhs: &dyn RhsModel) -> Result<VDecomposition> {
    let a = along(jet, rhs);
    let d = v_data(jet, &a)?;
    let (direct, _) = sigma2_v_ij(jet, &d);

    let m = &jet.d2u;
    let diagonal = m.a12 == 0.0 && m.a13 == 0.0 && m.a23 == 0.0;
    let (lam, q) = if diagonal {
        ([m.a11, m.a22, m.a33], IDENTITY)
    } else {
        let (e, q) = eigen_decompose(m)?;
        let l = e.lambdas();
        let gap = (l[0] - l[1]).min(l[1] - l[2]);
        if gap < FRAME_GAP * (1.0 + m.norm()) {
            return Ok(VDecomposition {
                parts: None,
                direct,
                mismatch: None,
                mismatch_ii_4f: None,
                mismatch_iii_unsquared: None,
                frame_warning: Some(format!(
                    "eigenvalues {l:?} closer than {FRAME_GAP:e}; eigenframe ambiguous, decomposition skipped"
                )),
            });
        }
        (l, q)
    };

    let u = jet.d3u.to_frame(&q);
    let fi = mat_t_vec(&q, &a.df);
    let fij = a.d2f.to_frame(&q);
    let f = a.e.f;
    let w = d.w;
    let s1 = lam[0] + lam[1] + lam[2];
    let s = lam.map(|l| s1 - l);
    let s3ii = [lam[1] * lam[2], lam[0] * lam[2], lam[0] * lam[1]];
    let others = |i: usize| [(i + 1) % 3, (i + 2) % 3];

    let mut i_num = 0.0;
    for p in 0..3 {
        for k in others(p) {
            i_num += -2.0 * s[k] * u.get(k, k, p) * fi[p] + 2.0 * s[k].powi(2) * u.get(k, k, p).powi(2);
        }
        let [j, k] = others(p);
        i_num += 4.0 * (-s[p] * lam[p] + s[j] * s[k]) * u.get(j, j, p) * u.get(k, k, p);
    }
    let part_i = i_num / w;

    let u123 = u.get(0, 1, 2);
    let mut ii_num = 8.0 * f * u123 * u123;
    for p in 0..3 {
        for k in others(p) {
            ii_num += 2.0 * s[p] * s[k] * u.get(k, p, p).powi(2);
        }
    }
    let part_ii = ii_num / w;

    let mut iii_num = 0.0;
    for i in 0..3 {
        let mut br = (lam[i] + s1) * fi[i];
        for k in others(i) {
            br += (lam[k] - lam[i]) * s[k] * u.get(k, k, i);
        }
        iii_num += s[i] * br * br;
    }
    let part_iii = -iii_num / (w * w);

    let mut iv_num = f * fij.trace();
    for i in 0..3 {
        let mut br = fi[i];
        for k in others(i) {
            br += (lam[k] - lam[i]) * u.get(k, k, i);
        }
        iv_num += 2.0 * fi[i] * br + s1 * s[i] * fij.get(i, i) - s3ii[i] * fij.get(i, i);
    }
    let part_iv = iv_num / w;

    let total = part_i + part_ii + part_iii + part_iv;
    let alt_ii = total - 4.0 * f * u123 * u123 / w;
    let d12 = lam[0] - lam[1];
    let alt_iii = total + (d12 * d12 - d12) * s[0] * u.get(0, 0, 1).powi(2) / (w * s[2]);
    Ok(VDecomposition {
        parts: Some([part_i, part_ii, part_iii, part_iv]),
        direct,
        mismatch: Some((total - direct).abs()),
        mismatch_ii_4f: Some((alt_ii - direct).abs()),
        mismatch_iii_unsquared: Some((alt_iii - direct).abs()),
        frame_warning: None,
    })
}
