//! Catalog of exact admissible solutions with analytic jets up to order
//! four, and the right-hand sides they induce.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Sym3Tensor, Sym4Tensor, SymMat3, Vec3};
use crate::symfun::{in_gamma2, sigma_of_matrix};

use super::rhs::{RhsEval, RhsModel};
use super::Jet3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManufacturedSpec {
    /// `½xᵀAx + bᵀx + c`
    Quad { a: SymMat3, b: Vec3, c: f64 },
    /// `½a|x|² + ε x₁x₂x₃`
    CubicPert { a: f64, eps: f64 },
    /// `½a|x|² + ε sin(kx₁) sin(kx₂) sin(kx₃)`
    TrigPert { a: f64, eps: f64, k: f64 },
    /// `½|x|² + c x₁³/6`, so that `f = 3 + 2c x₁`
    AxialCubic { c: f64 },
    /// `½Σ aᵢxᵢ² + ε x₁x₂x₃`; distinct `aᵢ` keep `u₁₂₃ ≠ 0` in the eigenframe
    DiagCubic { a: [f64; 3], eps: f64 },
}

impl ManufacturedSpec {
    /// The default catalog; every entry is admissible on `[−1, 1]³`.
    pub fn catalog() -> Vec<ManufacturedSpec> {
        vec![
            ManufacturedSpec::quad_identity(),
            ManufacturedSpec::Quad {
                a: SymMat3::diag(3.0, 1.0, -0.5),
                b: [0.1, -0.2, 0.3],
                c: 0.5,
            },
            ManufacturedSpec::CubicPert { a: 1.0, eps: 0.1 },
            ManufacturedSpec::TrigPert {
                a: 1.0,
                eps: 0.05,
                k: 1.0,
            },
            ManufacturedSpec::AxialCubic { c: 0.5 },
            ManufacturedSpec::DiagCubic {
                a: [3.0, 2.0, 1.0],
                eps: 0.2,
            },
        ]
    }

    pub fn quad_identity() -> Self {
        ManufacturedSpec::Quad {
            a: SymMat3::identity(),
            b: [0.0; 3],
            c: 0.0,
        }
    }

    pub fn id(&self) -> String {
        match self {
            ManufacturedSpec::Quad { a, b, c } => {
                if *a == SymMat3::identity() && *b == [0.0; 3] && *c == 0.0 {
                    "QUAD(I,0,0)".into()
                } else {
                    format!("QUAD({:?},{:?},{})", a.entries(), b, c)
                }
            }
            ManufacturedSpec::CubicPert { a, eps } => format!("CUBIC_PERT({a},{eps})"),
            ManufacturedSpec::TrigPert { a, eps, k } => format!("TRIG_PERT({a},{eps},{k})"),
            ManufacturedSpec::AxialCubic { c } => format!("AXIAL_CUBIC({c})"),
            ManufacturedSpec::DiagCubic { a, eps } => {
                format!("DIAG_CUBIC({},{},{},{eps})", a[0], a[1], a[2])
            }
        }
    }

    /// Hessian is constant.
    pub fn is_quadratic(&self) -> bool {
        match self {
            ManufacturedSpec::Quad { .. } => true,
            ManufacturedSpec::CubicPert { eps, .. }
            | ManufacturedSpec::TrigPert { eps, .. }
            | ManufacturedSpec::DiagCubic { eps, .. } => *eps == 0.0,
            ManufacturedSpec::AxialCubic { c } => *c == 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Factor {
    One,
    Mono(i32),
    Sin(f64),
}

impl Factor {
    fn deriv(&self, x: f64, order: usize) -> f64 {
        match *self {
            Factor::One => {
                if order == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            Factor::Mono(n) => {
                let o = order as i32;
                if o > n {
                    return 0.0;
                }
                let mut c = 1.0;
                for m in 0..o {
                    c *= (n - m) as f64;
                }
                c * x.powi(n - o)
            }
            Factor::Sin(k) => {
                let kp = k.powi(order as i32);
                let s = (k * x).sin();
                let co = (k * x).cos();
                kp * match order % 4 {
                    0 => s,
                    1 => co,
                    2 => -s,
                    _ => -co,
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Term {
    coeff: f64,
    factors: [Factor; 3],
}

impl Term {
    fn deriv(&self, x: &Vec3, idx: &[usize]) -> f64 {
        let mut n = [0usize; 3];
        for &i in idx {
            n[i] += 1;
        }
        self.coeff
            * self.factors[0].deriv(x[0], n[0])
            * self.factors[1].deriv(x[1], n[1])
            * self.factors[2].deriv(x[2], n[2])
    }
}

/// `½xᵀAx + bᵀx + c + Σ terms`, each term a product of one-variable factors.
#[derive(Debug, Clone, PartialEq)]
struct Profile {
    a: SymMat3,
    b: Vec3,
    c: f64,
    terms: Vec<Term>,
}

impl Profile {
    fn from_spec(spec: &ManufacturedSpec) -> Self {
        use Factor::*;
        match *spec {
            ManufacturedSpec::Quad { a, b, c } => Profile { a, b, c, terms: vec![] },
            ManufacturedSpec::CubicPert { a, eps } => Profile {
                a: SymMat3::scaled_identity(a),
                b: [0.0; 3],
                c: 0.0,
                terms: vec![Term {
                    coeff: eps,
                    factors: [Mono(1), Mono(1), Mono(1)],
                }],
            },
            ManufacturedSpec::TrigPert { a, eps, k } => Profile {
                a: SymMat3::scaled_identity(a),
                b: [0.0; 3],
                c: 0.0,
                terms: vec![Term {
                    coeff: eps,
                    factors: [Sin(k), Sin(k), Sin(k)],
                }],
            },
            ManufacturedSpec::AxialCubic { c } => Profile {
                a: SymMat3::identity(),
                b: [0.0; 3],
                c: 0.0,
                terms: vec![Term {
                    coeff: c / 6.0,
                    factors: [Mono(3), One, One],
                }],
            },
            ManufacturedSpec::DiagCubic { a, eps } => Profile {
                a: SymMat3::diag(a[0], a[1], a[2]),
                b: [0.0; 3],
                c: 0.0,
                terms: vec![Term {
                    coeff: eps,
                    factors: [Mono(1), Mono(1), Mono(1)],
                }],
            },
        }
    }

    fn sum(&self, x: &Vec3, idx: &[usize]) -> f64 {
        self.terms.iter().map(|t| t.deriv(x, idx)).sum()
    }

    fn jet(&self, x: &Vec3) -> Jet3 {
        let ax = self.a.mul_vec(x);
        let u = 0.5 * crate::linalg::dot(x, &ax) + crate::linalg::dot(&self.b, x) + self.c + self.sum(x, &[]);
        let du = [0, 1, 2].map(|i| ax[i] + self.b[i] + self.sum(x, &[i]));
        let mut d2u = self.a;
        for i in 0..3 {
            for j in i..3 {
                d2u.set(i, j, self.a.get(i, j) + self.sum(x, &[i, j]));
            }
        }
        Jet3 {
            x: *x,
            u,
            du,
            d2u,
            d3u: Sym3Tensor::from_fn(|i, j, k| self.sum(x, &[i, j, k])),
            d4u: Some(Sym4Tensor::from_fn(|i, j, k, l| self.sum(x, &[i, j, k, l]))),
        }
    }
}

/// An exact solution of `σ₂(D²u) = f(x, u, Du)` on a cube, with `f` built as
/// `σ₂(D²u*)(x) + κ(u − u*) + γ·(p − Du*)` so that coupling to `u` and `Du`
/// can be switched on without changing the solution.
#[derive(Debug, Clone, PartialEq)]
pub struct ManufacturedSolution {
    pub spec: ManufacturedSpec,
    pub lo: f64,
    pub hi: f64,
    pub kappa: f64,
    pub gamma: Vec3,
    floor: f64,
    profile: Profile,
}

/// Samples per axis used for the admissibility check.
const CHECK_AXIS: usize = 21;
pub const ADMISSIBILITY_TAU: f64 = 1e-6;

pub fn make_manufactured(spec: ManufacturedSpec, lo: f64, hi: f64) -> Result<ManufacturedSolution> {
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::domain(format!("empty box [{lo}, {hi}]")));
    }
    let profile = Profile::from_spec(&spec);
    let mut floor = f64::INFINITY;
    let h = (hi - lo) / (CHECK_AXIS - 1) as f64;
    for k in 0..CHECK_AXIS {
        for j in 0..CHECK_AXIS {
            for i in 0..CHECK_AXIS {
                let x = [lo + h * i as f64, lo + h * j as f64, lo + h * k as f64];
                let jet = profile.jet(&x);
                let rep = in_gamma2(&jet.d2u, ADMISSIBILITY_TAU);
                if !rep.in_gamma2 {
                    return Err(Error::ConeViolation {
                        point: x,
                        margin: rep.margin,
                    });
                }
                floor = floor.min(rep.sigma2);
            }
        }
    }
    Ok(ManufacturedSolution {
        spec,
        lo,
        hi,
        kappa: 0.0,
        gamma: [0.0; 3],
        floor,
        profile,
    })
}

impl ManufacturedSolution {
    pub fn id(&self) -> String {
        self.spec.id()
    }

    /// Couples `f` to `u` and `Du` without changing the exact solution.
    pub fn with_coupling(mut self, kappa: f64, gamma: Vec3) -> Self {
        self.kappa = kappa;
        self.gamma = gamma;
        self
    }

    pub fn jet(&self, x: &Vec3) -> Jet3 {
        self.profile.jet(x)
    }

    pub fn u(&self, x: &Vec3) -> f64 {
        let ax = self.profile.a.mul_vec(x);
        0.5 * crate::linalg::dot(x, &ax)
            + crate::linalg::dot(&self.profile.b, x)
            + self.profile.c
            + self.profile.sum(x, &[])
    }

    /// `σ₂(D²u*)` and its first and second partials in `x`.
    fn source(&self, x: &Vec3) -> (f64, Vec3, SymMat3, Jet3) {
        let jet = self.jet(x);
        let h = jet.d2u;
        let hi: [SymMat3; 3] = [0, 1, 2].map(|i| jet.d3u.slice(i));
        let d4 = jet.d4u.expect("analytic jets carry fourth derivatives");
        let (_, f, _) = sigma_of_matrix(&h);
        let tr = h.trace();
        let fx = [0, 1, 2].map(|i| tr * hi[i].trace() - h.contract(&hi[i]));
        let mut fxx = SymMat3::default();
        for i in 0..3 {
            for j in i..3 {
                let hij = d4.slice(i, j);
                fxx.set(
                    i,
                    j,
                    hi[i].trace() * hi[j].trace() + tr * hij.trace() - hi[j].contract(&hi[i]) - h.contract(&hij),
                );
            }
        }
        (f, fx, fxx, jet)
    }
}

impl RhsModel for ManufacturedSolution {
    fn eval(&self, x: &Vec3, u: f64, p: &Vec3) -> RhsEval {
        let (f0, fx0, fxx0, jet) = self.source(x);
        let g = &self.gamma;
        let mut f = f0 + self.kappa * (u - jet.u);
        for k in 0..3 {
            f += g[k] * (p[k] - jet.du[k]);
        }
        let f_x = [0, 1, 2].map(|i| {
            let mut s = fx0[i] - self.kappa * jet.du[i];
            for k in 0..3 {
                s -= g[k] * jet.d2u.get(k, i);
            }
            s
        });
        let mut f_xx = SymMat3::default();
        for i in 0..3 {
            for j in i..3 {
                let mut s = fxx0.get(i, j) - self.kappa * jet.d2u.get(i, j);
                for k in 0..3 {
                    s -= g[k] * jet.d3u.get(k, i, j);
                }
                f_xx.set(i, j, s);
            }
        }
        RhsEval {
            f,
            f_x,
            f_u: self.kappa,
            f_p: *g,
            f_xx,
            ..Default::default()
        }
    }

    fn positivity_floor(&self) -> f64 {
        self.floor
    }

    fn name(&self) -> String {
        self.id()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quad_identity_is_trivial() {
        let m = make_manufactured(ManufacturedSpec::quad_identity(), -1.0, 1.0).unwrap();
        let j = m.jet(&[0.3, -0.2, 0.9]);
        assert_eq!(j.d2u, SymMat3::identity());
        assert_eq!(j.d3u.max_abs(), 0.0);
        let e = m.eval(&j.x, j.u, &j.du);
        assert_eq!(e.f, 3.0);
        assert_eq!(j.laplacian(), 3.0);
    }

    #[test]
    fn cubic_pert_reduces_and_is_admissible() {
        let a = make_manufactured(ManufacturedSpec::CubicPert { a: 1.0, eps: 0.0 }, -1.0, 1.0).unwrap();
        let b = make_manufactured(ManufacturedSpec::quad_identity(), -1.0, 1.0).unwrap();
        let x = [0.1, 0.7, -0.4];
        assert_eq!(a.jet(&x), b.jet(&x));
        let c = make_manufactured(ManufacturedSpec::CubicPert { a: 1.0, eps: 0.1 }, -1.0, 1.0).unwrap();
        let j = c.jet(&[0.0; 3]);
        assert_eq!(c.eval(&j.x, j.u, &j.du).f, 3.0);
        assert_eq!(j.d3u.get(0, 1, 2), 0.1);
    }

    #[test]
    fn axial_cubic_rhs() {
        let m = make_manufactured(ManufacturedSpec::AxialCubic { c: 0.5 }, -1.0, 1.0).unwrap();
        for x in [[0.3, 0.1, 0.2], [-0.8, 0.5, 0.0]] {
            let j = m.jet(&x);
            let e = m.eval(&x, j.u, &j.du);
            assert!((e.f - (3.0 + x[0])).abs() < 1e-14);
            assert!((e.f_x[0] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_non_admissible() {
        let r = make_manufactured(ManufacturedSpec::CubicPert { a: 1.0, eps: 3.0 }, -1.0, 1.0);
        assert!(matches!(r, Err(Error::ConeViolation { .. })));
    }

    #[test]
    fn rhs_partials_match_differences() {
        let m = make_manufactured(
            ManufacturedSpec::TrigPert {
                a: 1.0,
                eps: 0.05,
                k: 1.0,
            },
            -1.0,
            1.0,
        )
        .unwrap()
        .with_coupling(0.3, [0.1, -0.2, 0.05]);
        let x = [0.2, -0.3, 0.4];
        let (u, p) = (0.7, [0.1, 0.2, -0.1]);
        let e = m.eval(&x, u, &p);
        let h = 1e-5;
        for i in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let fd = (m.eval(&xp, u, &p).f - m.eval(&xm, u, &p).f) / (2.0 * h);
            assert!((fd - e.f_x[i]).abs() < 1e-8, "f_x{i}");
            for j in 0..3 {
                let fd2 = (m.eval(&xp, u, &p).f_x[j] - m.eval(&xm, u, &p).f_x[j]) / (2.0 * h);
                assert!((fd2 - e.f_xx.get(i, j)).abs() < 1e-8, "f_xx{i}{j}");
            }
        }
    }
}
