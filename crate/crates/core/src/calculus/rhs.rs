use std::sync::Arc;

use crate::linalg::{mat_mul, mat_vec, transpose, Mat3, SymMat3, Vec3};

use super::Jet3;

/// Value and partial derivatives of `f(x, u, p)` at one argument.
/// `f_xp[i][j]` is `∂²f/∂x_i∂p_j`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RhsEval {
    pub f: f64,
    pub f_x: Vec3,
    pub f_u: f64,
    pub f_p: Vec3,
    pub f_xx: SymMat3,
    pub f_xu: Vec3,
    pub f_xp: Mat3,
    pub f_uu: f64,
    pub f_up: Vec3,
    pub f_pp: SymMat3,
}

/// A right-hand side `f(x, u, p)` with its first and second partials.
pub trait RhsModel: Send + Sync {
    fn eval(&self, x: &Vec3, u: f64, p: &Vec3) -> RhsEval;

    /// Lower bound for `f` on the domain where the model is used.
    fn positivity_floor(&self) -> f64;

    fn name(&self) -> String {
        "rhs".into()
    }
}

impl<T: RhsModel + ?Sized> RhsModel for Arc<T> {
    fn eval(&self, x: &Vec3, u: f64, p: &Vec3) -> RhsEval {
        (**self).eval(x, u, p)
    }
    fn positivity_floor(&self) -> f64 {
        (**self).positivity_floor()
    }
    fn name(&self) -> String {
        (**self).name()
    }
}

impl<T: RhsModel + ?Sized> RhsModel for &T {
    fn eval(&self, x: &Vec3, u: f64, p: &Vec3) -> RhsEval {
        (**self).eval(x, u, p)
    }
    fn positivity_floor(&self) -> f64 {
        (**self).positivity_floor()
    }
    fn name(&self) -> String {
        (**self).name()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantRhs(pub f64);

impl RhsModel for ConstantRhs {
    fn eval(&self, _x: &Vec3, _u: f64, _p: &Vec3) -> RhsEval {
        RhsEval {
            f: self.0,
            ..Default::default()
        }
    }
    fn positivity_floor(&self) -> f64 {
        self.0
    }
    fn name(&self) -> String {
        format!("const({})", self.0)
    }
}

/// `f̃(y, u, p) = f(qᵀy, u, qᵀp)`, the right-hand side seen by `u(qᵀy)`.
pub struct RotatedRhs<R> {
    pub inner: R,
    pub q: Mat3,
}

impl<R: RhsModel> RhsModel for RotatedRhs<R> {
    fn eval(&self, y: &Vec3, u: f64, p: &Vec3) -> RhsEval {
        let qt = transpose(&self.q);
        let e = self.inner.eval(&mat_vec(&qt, y), u, &mat_vec(&qt, p));
        let q = &self.q;
        RhsEval {
            f: e.f,
            f_x: mat_vec(q, &e.f_x),
            f_u: e.f_u,
            f_p: mat_vec(q, &e.f_p),
            f_xx: e.f_xx.conjugate(q),
            f_xu: mat_vec(q, &e.f_xu),
            f_xp: mat_mul(&mat_mul(q, &e.f_xp), &qt),
            f_uu: e.f_uu,
            f_up: mat_vec(q, &e.f_up),
            f_pp: e.f_pp.conjugate(q),
        }
    }
    fn positivity_floor(&self) -> f64 {
        self.inner.positivity_floor()
    }
    fn name(&self) -> String {
        format!("rotated({})", self.inner.name())
    }
}

/// Evaluates the model along the jet, `f(x, u(x), Du(x))`.
pub fn eval_along(rhs: &dyn RhsModel, jet: &Jet3) -> RhsEval {
    rhs.eval(&jet.x, jet.u, &jet.du)
}

/// Total first derivatives `f_i = f_{x_i} + f_u u_i + f_{p_k} u_{ki}`.
pub fn total_first(e: &RhsEval, jet: &Jet3) -> Vec3 {
    let a = &jet.d2u;
    [0, 1, 2].map(|i| {
        let mut s = e.f_x[i] + e.f_u * jet.du[i];
        for k in 0..3 {
            s += e.f_p[k] * a.get(k, i);
        }
        s
    })
}

/// Total second derivatives `f_ij` along the jet (chain rule on
/// `f(x, u(x), Du(x))`).
pub fn total_second(e: &RhsEval, jet: &Jet3) -> SymMat3 {
    let a = &jet.d2u;
    let du = &jet.du;
    // z_j = d/dx_j of (x, u, p): first-order directions
    let dp = |k: usize, j: usize| a.get(k, j);
    let mut out = SymMat3::default();
    for i in 0..3 {
        for j in i..3 {
            // ∂_j of f_{x_i}
            let mut t = e.f_xx.get(i, j) + e.f_xu[i] * du[j];
            for k in 0..3 {
                t += e.f_xp[i][k] * dp(k, j);
            }
            // ∂_j of (f_u u_i)
            let mut fu_j = e.f_xu[j] + e.f_uu * du[j];
            for k in 0..3 {
                fu_j += e.f_up[k] * dp(k, j);
            }
            t += fu_j * du[i] + e.f_u * a.get(i, j);
            // ∂_j of (f_{p_k} u_{ki})
            for k in 0..3 {
                let mut fp_j = e.f_xp[j][k] + e.f_up[k] * du[j];
                for l in 0..3 {
                    fp_j += e.f_pp.get(k, l) * dp(l, j);
                }
                t += fp_j * a.get(k, i) + e.f_p[k] * jet.d3u.get(k, i, j);
            }
            out.set(i, j, t);
        }
    }
    out
}
