//! Elementary symmetric functions of a symmetric 3×3 matrix, their first
//! derivatives, the Γ₂ cone test and an ordered eigen-decomposition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cross, dot, mat_mul, max_abs_diff, transpose, Mat3, SymMat3, Vec3};

/// Default relative cone strictness.
pub const DEFAULT_TAU: f64 = 1e-9;

/// Eigenvalues ordered `lambda1 ≥ lambda2 ≥ lambda3` with the cached
/// elementary symmetric values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenTriple {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub sigma3: f64,
}

impl EigenTriple {
    /// Sorts the three values and caches σ₁, σ₂, σ₃.
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        let mut l = [a, b, c];
        l.sort_by(|x, y| y.total_cmp(x));
        let (s1, s2, s3) = sigmas(l[0], l[1], l[2]);
        EigenTriple {
            lambda1: l[0],
            lambda2: l[1],
            lambda3: l[2],
            sigma1: s1,
            sigma2: s2,
            sigma3: s3,
        }
    }

    pub fn lambdas(&self) -> [f64; 3] {
        [self.lambda1, self.lambda2, self.lambda3]
    }

    pub fn scale(&self, t: f64) -> Self {
        Self::new(self.lambda1 * t, self.lambda2 * t, self.lambda3 * t)
    }

    /// `σ₂^{ii} = σ₁ − λ_i`, the diagonal of `σ₂^{ij}` in the eigenframe.
    pub fn sigma2_diag(&self) -> [f64; 3] {
        let l = self.lambdas();
        [self.sigma1 - l[0], self.sigma1 - l[1], self.sigma1 - l[2]]
    }

    /// Cofactors `σ₃^{ii} = Π_{j≠i} λ_j` in the eigenframe.
    pub fn sigma3_diag(&self) -> [f64; 3] {
        let l = self.lambdas();
        [l[1] * l[2], l[0] * l[2], l[0] * l[1]]
    }

    pub fn norm(&self) -> f64 {
        let l = self.lambdas();
        dot(&l, &l).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.lambdas().iter().all(|v| v.is_finite())
    }

    /// σ₁ > 0 and σ₂ > 0 (the open cone, no margin).
    pub fn in_open_cone(&self) -> bool {
        self.sigma1 > 0.0 && self.sigma2 > 0.0
    }

    pub fn as_diag(&self) -> SymMat3 {
        SymMat3::diag(self.lambda1, self.lambda2, self.lambda3)
    }
}

fn sigmas(a: f64, b: f64, c: f64) -> (f64, f64, f64) {
    (a + b + c, a * b + a * c + b * c, a * b * c)
}

/// `(σ₁, σ₂, σ₃)` of an eigenvalue triple.
pub fn sigma_all(lam: &EigenTriple) -> (f64, f64, f64) {
    sigmas(lam.lambda1, lam.lambda2, lam.lambda3)
}

/// `(σ₁, σ₂, σ₃)` directly from matrix entries (no eigen-solve).
pub fn sigma_of_matrix(a: &SymMat3) -> (f64, f64, f64) {
    let s1 = a.trace();
    let s2 = a.a11 * a.a22 + a.a11 * a.a33 + a.a22 * a.a33 - a.a12 * a.a12 - a.a13 * a.a13 - a.a23 * a.a23;
    (s1, s2, a.det())
}

/// `σ₂^{ij} = ∂σ₂/∂a_ij = σ₁ δ_ij − a_ij` (valid for n = 3).
pub fn sigma2_gradient(a: &SymMat3) -> SymMat3 {
    SymMat3::scaled_identity(a.trace()).sub(a)
}

/// `σ₃^{ij}`: the adjugate (cofactor matrix) of `a`.
pub fn sigma3_gradient(a: &SymMat3) -> SymMat3 {
    SymMat3::new(
        a.a22 * a.a33 - a.a23 * a.a23,
        a.a11 * a.a33 - a.a13 * a.a13,
        a.a11 * a.a22 - a.a12 * a.a12,
        a.a13 * a.a23 - a.a12 * a.a33,
        a.a12 * a.a23 - a.a13 * a.a22,
        a.a12 * a.a13 - a.a11 * a.a23,
    )
}

/// Second directional derivative of σ₂: `D²σ₂[X, Y] = tr X tr Y − tr(XY)`.
pub fn sigma2_second(x: &SymMat3, y: &SymMat3) -> f64 {
    x.trace() * y.trace() - x.contract(y)
}

/// Second directional derivative of σ₃ = det at `a`.
pub fn sigma3_second(a: &SymMat3, x: &SymMat3, y: &SymMat3) -> f64 {
    let (am, xm, ym) = (a.to_array(), x.to_array(), y.to_array());
    let tr = |m: &Mat3| m[0][0] + m[1][1] + m[2][2];
    let axy = mat_mul(&mat_mul(&am, &xm), &ym);
    let ayx = mat_mul(&mat_mul(&am, &ym), &xm);
    a.trace() * x.trace() * y.trace()
        - x.trace() * a.contract(y)
        - y.trace() * a.contract(x)
        - a.trace() * x.contract(y)
        + tr(&axy)
        + tr(&ayx)
}

/// Outcome of the Γ₂ membership test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeReport {
    pub in_gamma2: bool,
    /// `min(σ₁/s − τ, σ₂/s² − τ)` with `s = 1 + ‖A‖`; positive iff in the cone.
    pub margin: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub sigma3: f64,
    pub scale: f64,
    /// `σ₁σ₂ − 9σ₃`.
    pub newton_maclaurin_gap: f64,
    /// Newton–MacLaurin holds to round-off; only meaningful inside the cone.
    pub newton_maclaurin_ok: bool,
}

/// Γ₂ test with a relative strictness margin `tau`.
pub fn in_gamma2(a: &SymMat3, tau: f64) -> ConeReport {
    let (s1, s2, s3) = sigma_of_matrix(a);
    cone_report(s1, s2, s3, 1.0 + a.norm(), tau)
}

/// Γ₂ test on an eigenvalue triple.
pub fn in_gamma2_eigen(lam: &EigenTriple, tau: f64) -> ConeReport {
    cone_report(lam.sigma1, lam.sigma2, lam.sigma3, 1.0 + lam.norm(), tau)
}

fn cone_report(s1: f64, s2: f64, s3: f64, scale: f64, tau: f64) -> ConeReport {
    let m1 = s1 / scale - tau;
    let m2 = s2 / (scale * scale) - tau;
    let margin = m1.min(m2);
    let in_cone = margin > 0.0;
    let gap = s1 * s2 - 9.0 * s3;
    ConeReport {
        in_gamma2: in_cone,
        margin,
        sigma1: s1,
        sigma2: s2,
        sigma3: s3,
        scale,
        newton_maclaurin_gap: gap,
        newton_maclaurin_ok: !in_cone || gap >= -1e-10 * scale.powi(3),
    }
}

/// `σ₁(λ|kp) = σ₁ − λ_k − λ_p` for distinct zero-based indices.
pub fn minor_sigma1(lam: &EigenTriple, k: usize, p: usize) -> Result<f64> {
    if k == p || k > 2 || p > 2 {
        return Err(Error::domain(format!(
            "minor_sigma1 needs distinct indices in 0..3, got ({k}, {p})"
        )));
    }
    let l = lam.lambdas();
    Ok(lam.sigma1 - l[k] - l[p])
}

/// Eigenvalues in non-increasing order.
pub fn eigen_sorted(a: &SymMat3) -> Result<EigenTriple> {
    eigen_decompose(a).map(|(e, _)| e)
}

/// Ordered eigenvalues and an orthonormal eigenbasis (columns of the
/// returned matrix, aligned with `lambda1, lambda2, lambda3`).
///
/// Uses the trigonometric closed form; near-scalar matrices, and any case
/// where the closed-form vectors miss the reconstruction bound, go through
/// cyclic Jacobi instead.
pub fn eigen_decompose(a: &SymMat3) -> Result<(EigenTriple, Mat3)> {
    if !a.is_finite() {
        return Err(Error::domain(format!("non-finite matrix {a:?}")));
    }
    let scale = 1.0 + a.norm();
    if a.a12 == 0.0 && a.a13 == 0.0 && a.a23 == 0.0 {
        let (vals, q) = jacobi(a);
        return Ok((EigenTriple::new(vals[0], vals[1], vals[2]), q));
    }
    if let Some((vals, q)) = closed_form(a) {
        if reconstruction_error(a, &vals, &q) <= 1e-13 * scale {
            return Ok((EigenTriple::new(vals[0], vals[1], vals[2]), q));
        }
    }
    let (vals, q) = jacobi(a);
    Ok((EigenTriple::new(vals[0], vals[1], vals[2]), q))
}

/// `max_ij |A − Q Λ Qᵀ|`.
pub fn reconstruction_error(a: &SymMat3, vals: &[f64; 3], q: &Mat3) -> f64 {
    let lam = SymMat3::diag(vals[0], vals[1], vals[2]);
    max_abs_diff(&lam.conjugate(q).to_array(), &a.to_array())
}

fn closed_form(a: &SymMat3) -> Option<([f64; 3], Mat3)> {
    let p1 = a.a12 * a.a12 + a.a13 * a.a13 + a.a23 * a.a23;
    let q = a.trace() / 3.0;
    let p2 = (a.a11 - q).powi(2) + (a.a22 - q).powi(2) + (a.a33 - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    if p <= 1e-13 * (1.0 + a.norm()) {
        return None;
    }
    let b = SymMat3::new(a.a11 - q, a.a22 - q, a.a33 - q, a.a12, a.a13, a.a23).scale(1.0 / p);
    let r = (b.det() / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    let e2 = 3.0 * q - e1 - e3;

    let v1 = null_vector(a, e1)?;
    let v3 = null_vector(a, e3)?;
    // re-orthogonalise v3 against v1 before completing the frame
    let d = dot(&v1, &v3);
    let v3 = normalize(&[v3[0] - d * v1[0], v3[1] - d * v1[1], v3[2] - d * v1[2]])?;
    let v2 = cross(&v3, &v1);
    let qm = [[v1[0], v2[0], v3[0]], [v1[1], v2[1], v3[1]], [v1[2], v2[2], v3[2]]];
    Some(([e1, e2, e3], qm))
}

fn normalize(v: &Vec3) -> Option<Vec3> {
    let n = dot(v, v).sqrt();
    if n == 0.0 || !n.is_finite() {
        return None;
    }
    Some([v[0] / n, v[1] / n, v[2] / n])
}

/// Unit vector spanning the null space of `A − λI`, from the largest cross
/// product of its rows.
fn null_vector(a: &SymMat3, lambda: f64) -> Option<Vec3> {
    let m = SymMat3::new(a.a11 - lambda, a.a22 - lambda, a.a33 - lambda, a.a12, a.a13, a.a23).to_array();
    let cands = [cross(&m[0], &m[1]), cross(&m[0], &m[2]), cross(&m[1], &m[2])];
    let best = cands.iter().max_by(|x, y| dot(x, x).total_cmp(&dot(y, y))).copied()?;
    normalize(&best)
}

fn jacobi(a: &SymMat3) -> ([f64; 3], Mat3) {
    let mut m = a.to_array();
    let mut v = crate::linalg::IDENTITY;
    for _sweep in 0..64 {
        let off = m[0][1].abs() + m[0][2].abs() + m[1][2].abs();
        if off == 0.0 {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            if m[p][q] == 0.0 {
                continue;
            }
            let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let mut rot = crate::linalg::IDENTITY;
            rot[p][p] = c;
            rot[q][q] = c;
            rot[p][q] = s;
            rot[q][p] = -s;
            m = mat_mul(&mat_mul(&transpose(&rot), &m), &rot);
            m[p][q] = 0.0;
            m[q][p] = 0.0;
            v = mat_mul(&v, &rot);
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| m[j][j].total_cmp(&m[i][i]));
    let vals = [m[order[0]][order[0]], m[order[1]][order[1]], m[order[2]][order[2]]];
    let mut q = [[0.0; 3]; 3];
    for (col, &src) in order.iter().enumerate() {
        for row in 0..3 {
            q[row][col] = v[row][src];
        }
    }
    (vals, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rotation_from_quaternion;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn eigen_examples() {
        let e = eigen_sorted(&SymMat3::diag(1.0, 2.0, 3.0)).unwrap();
        assert_eq!(e.lambdas(), [3.0, 2.0, 1.0]);
        let e = eigen_sorted(&SymMat3::identity()).unwrap();
        assert_eq!(e.lambdas(), [1.0, 1.0, 1.0]);
        let a = SymMat3::new(0.0, 0.0, 2.0, 1.0, 0.0, 0.0);
        let e = eigen_sorted(&a).unwrap();
        for (got, want) in e.lambdas().iter().zip([2.0, 1.0, -1.0]) {
            assert!(close(*got, want, 1e-14), "{got} vs {want}");
        }
    }

    #[test]
    fn eigen_rejects_non_finite() {
        let a = SymMat3::new(f64::NAN, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert!(matches!(eigen_sorted(&a), Err(Error::Domain(_))));
    }

    #[test]
    fn eigen_reconstructs_near_degenerate() {
        let q = rotation_from_quaternion([0.2, 0.7, -0.3, 0.5]);
        for gap in [0.0, 1e-15, 1e-10, 1e-7, 1e-4] {
            let a = SymMat3::diag(1.0, 1.0 + gap, 3.0).conjugate(&q);
            let (e, v) = eigen_decompose(&a).unwrap();
            let err = reconstruction_error(&a, &e.lambdas(), &v);
            assert!(err <= 1e-12 * (1.0 + a.norm()), "gap {gap}: {err}");
            let vtv = mat_mul(&transpose(&v), &v);
            assert!(max_abs_diff(&vtv, &crate::linalg::IDENTITY) < 1e-12);
        }
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma_all(&EigenTriple::new(1.0, 1.0, 1.0)), (3.0, 3.0, 1.0));
        assert_eq!(sigma_all(&EigenTriple::new(2.0, 1.0, 0.0)), (3.0, 2.0, 0.0));
        // 3·1 + 3·(−1) + 1·(−1) = −1, 3·1·(−1) = −3
        assert_eq!(sigma_all(&EigenTriple::new(3.0, 1.0, -1.0)), (3.0, -1.0, -3.0));
    }

    #[test]
    fn gradient_examples() {
        assert_eq!(sigma2_gradient(&SymMat3::identity()), SymMat3::diag(2.0, 2.0, 2.0));
        assert_eq!(
            sigma2_gradient(&SymMat3::diag(2.0, 1.0, 0.0)),
            SymMat3::diag(1.0, 2.0, 3.0)
        );
        let a = SymMat3::new(0.0, 0.0, 2.0, 1.0, 0.0, 0.0);
        assert_eq!(sigma2_gradient(&a), SymMat3::new(2.0, 2.0, 0.0, -1.0, 0.0, 0.0));
        assert_eq!(sigma3_gradient(&SymMat3::identity()), SymMat3::identity());
        assert_eq!(
            sigma3_gradient(&SymMat3::diag(2.0, 1.0, 0.0)),
            SymMat3::diag(0.0, 0.0, 2.0)
        );
        assert_eq!(
            sigma3_gradient(&SymMat3::diag(3.0, 1.0, -1.0)),
            SymMat3::diag(-1.0, -3.0, 3.0)
        );
    }

    #[test]
    fn adjugate_times_matrix_is_det_identity() {
        let a = SymMat3::new(1.0, -2.0, 0.5, 0.3, -0.7, 1.1);
        let prod = sigma3_gradient(&a).mat_mul(&a);
        let d = a.det();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { d } else { 0.0 };
                assert!(close(prod[i][j], want, 1e-14));
            }
        }
    }

    #[test]
    fn cone_examples() {
        assert!(in_gamma2(&SymMat3::identity(), 0.0).in_gamma2);
        let r = in_gamma2(&SymMat3::diag(1.0, 1.0, -1.0), 0.0);
        assert!(!r.in_gamma2);
        assert_eq!(r.sigma2, -1.0);
        let r = in_gamma2(&SymMat3::diag(1.0, 1.0, -0.4), 0.0);
        assert!(r.in_gamma2);
        assert!(close(r.sigma2, 0.2, 1e-15));
        assert!(r.margin > 0.0 && r.newton_maclaurin_ok);
    }

    #[test]
    fn minor_examples() {
        assert_eq!(minor_sigma1(&EigenTriple::new(3.0, 2.0, 1.0), 0, 1).unwrap(), 1.0);
        assert_eq!(minor_sigma1(&EigenTriple::new(1.0, 1.0, 1.0), 2, 0).unwrap(), 1.0);
        assert_eq!(minor_sigma1(&EigenTriple::new(3.0, 1.0, -1.0), 1, 2).unwrap(), 3.0);
        assert!(minor_sigma1(&EigenTriple::new(3.0, 1.0, -1.0), 1, 1).is_err());
    }

    #[test]
    fn second_derivative_structure_by_finite_differences() {
        // ∂²σ₂/∂a_kk∂a_ll = 1 (k≠l), ∂²σ₂/∂a_kl∂a_kl = −1 for symmetric perturbation
        // of a single off-diagonal slot counted once.
        let a = SymMat3::new(0.7, -0.2, 1.3, 0.4, -0.1, 0.25);
        let h = 1e-4;
        let dsig2 = |m: &SymMat3, i: usize, j: usize| {
            let mut p = *m;
            p.set(i, j, m.get(i, j) + h);
            let mut n = *m;
            n.set(i, j, m.get(i, j) - h);
            (sigma_of_matrix(&p).1 - sigma_of_matrix(&n).1) / (2.0 * h)
        };
        // derivative of σ₂ along a_ll of the gradient entry σ₂^{kk}
        let mut p = a;
        p.set(1, 1, a.a22 + h);
        let mut n = a;
        n.set(1, 1, a.a22 - h);
        let fd = (sigma2_gradient(&p).get(0, 0) - sigma2_gradient(&n).get(0, 0)) / (2.0 * h);
        assert!(close(fd, 1.0, 1e-10));
        // off-diagonal: σ₂ = … − a12², so ∂²/∂a12² = −2 when the symmetric
        // pair moves together, i.e. −1 per ordered entry.
        let mut p = a;
        p.a12 += h;
        let mut n = a;
        n.a12 -= h;
        let fd = (dsig2(&p, 0, 1) - dsig2(&n, 0, 1)) / (2.0 * h);
        assert!(close(fd / 2.0, -1.0, 1e-6), "{fd}");
    }
}
