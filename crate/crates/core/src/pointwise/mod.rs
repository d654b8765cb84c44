//! Pointwise algebraic facts on the Γ₂ cone: the two quadratic-form claims
//! behind the `log Δu` inequality, the cone constants `c₁`, `c₂`, and the two
//! exact identities for `σ₁f − σ₃`.
//!
//! Each quantity is exposed as a plain function of an eigenvalue triple and
//! as a [`Quantity`] that [`infimum_search`] can minimise over a sampled
//! region.

mod search;

pub use search::{
    cone_constants_over, estimate_cone_constants, infimum_search, ConeConstants, InfimumReport, Normalization,
    Quantity, SampleRegion, SearchConfig,
};

use crate::error::{Error, Result};
use crate::linalg::{mat_mul, SymMat3, Vec3};
use crate::symfun::{sigma2_gradient, sigma_of_matrix, EigenTriple};

fn require_cone(lam: &EigenTriple, what: &str) -> Result<()> {
    if lam.in_open_cone() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "{what}: eigenvalues {:?} are outside Γ₂ (σ₁ = {:.3e}, σ₂ = {:.3e})",
            lam.lambdas(),
            lam.sigma1,
            lam.sigma2
        )))
    }
}

/// Smallest eigenvalue of the 2×2 form
/// `[[σ₂¹¹+σ₂²²−εσ₁, λ₁−εσ₁], [λ₁−εσ₁, σ₂¹¹+σ₂³³−εσ₁]]`.
pub fn claim1_min_eig(lam: &EigenTriple, eps: f64) -> Result<f64> {
    require_cone(lam, "claim1_min_eig")?;
    let s = lam.sigma2_diag();
    let es = eps * lam.sigma1;
    let a = s[0] + s[1] - es;
    let b = s[0] + s[2] - es;
    let c = lam.lambda1 - es;
    let mean = 0.5 * (a + b);
    let rad = (0.25 * (a - b) * (a - b) + c * c).sqrt();
    Ok(mean - rad)
}

/// Product of the two diagonal brackets minus the squared off-diagonal
/// bracket of the 2×2 form in the second claim (a determinant, degree 4).
pub fn claim2_gap(lam: &EigenTriple, delta: f64) -> Result<f64> {
    require_cone(lam, "claim2_gap")?;
    let [l1, l2, l3] = lam.lambdas();
    let s = lam.sigma2_diag();
    let s1 = lam.sigma1;
    let k = 1.0 + delta;
    let p = 2.0 * (s[0] + s[1]) * s1 - k * (l1 - l2) * (l1 - l2);
    let q = 2.0 * (s[0] + s[2]) * s1 - k * (l1 - l3) * (l1 - l3);
    let r = 2.0 * l1 * s1 - k * (l1 - l2) * (l1 - l3);
    Ok(p * q - r * r)
}

/// `(σ₂¹¹λ₁/σ₂, σ₂²²/σ₁, σ₂³³/σ₁)`.
pub fn lemma2_ratios(lam: &EigenTriple) -> Result<(f64, f64, f64)> {
    if lam.sigma1 <= 0.0 || lam.sigma2 <= 0.0 {
        return Err(Error::domain(format!(
            "lemma2_ratios needs σ₁ > 0 and σ₂ > 0, got ({:.3e}, {:.3e})",
            lam.sigma1, lam.sigma2
        )));
    }
    let s = lam.sigma2_diag();
    Ok((s[0] * lam.lambda1 / lam.sigma2, s[1] / lam.sigma1, s[2] / lam.sigma1))
}

/// `(σ₁σ₂ − σ₃) − σ₂¹¹σ₂²²σ₂³³`, identically zero.
pub fn product_identity_residual(lam: &EigenTriple) -> f64 {
    let s = lam.sigma2_diag();
    (lam.sigma1 * lam.sigma2 - lam.sigma3) - s[0] * s[1] * s[2]
}

/// Max-norm of `(fσ₁−σ₃)δ_ij − fσ₂^{ij} − σ₂^{kl}a_{ki}a_{lj}` with `f = σ₂(A)`.
pub fn gram_identity_residual(a: &SymMat3) -> Result<f64> {
    let (s1, f, s3) = sigma_of_matrix(a);
    if s1 <= 0.0 || f <= 0.0 {
        return Err(Error::domain(format!(
            "gram_identity_residual: matrix outside Γ₂ (σ₁ = {s1:.3e}, σ₂ = {f:.3e})"
        )));
    }
    let s = sigma2_gradient(a);
    let am = a.to_array();
    let asa = mat_mul(&mat_mul(&am, &s.to_array()), &am);
    let w = f * s1 - s3;
    let mut m: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let lhs = if i == j { w } else { 0.0 } - f * s.get(i, j);
            m = m.max((lhs - asa[i][j]).abs());
        }
    }
    Ok(m)
}

/// `1 − σ₂^{ii}(f xᵢ + λᵢ pᵢ)² / ((fσ₁−σ₃)(f|x|² + |p|²))` in the eigenframe, with
/// `f = σ₂(λ)`, `x` the base-point offset and `p` the gradient offset. The
/// gradient-of-gauge bound says this is nonnegative.
pub fn cla_pointwise(lam: &EigenTriple, x: &Vec3, p: &Vec3) -> Result<f64> {
    require_cone(lam, "cla_pointwise")?;
    let f = lam.sigma2;
    let l = lam.lambdas();
    let s = lam.sigma2_diag();
    let r2 = f * crate::linalg::dot(x, x) + crate::linalg::dot(p, p);
    if r2 <= 0.0 {
        return Err(Error::domain("cla_pointwise: zero gauge radius"));
    }
    let w = f * lam.sigma1 - lam.sigma3;
    let num: f64 = (0..3).map(|i| s[i] * (f * x[i] + l[i] * p[i]).powi(2)).sum();
    Ok(1.0 - num / (w * r2))
}

/// The arithmetic link `1 + δ ≥ (1 + 2ε)/(1 − ε)` between the two claims.
pub fn epsilon_link_holds(eps: f64, delta: f64) -> bool {
    eps < 1.0 && 1.0 + delta >= (1.0 + 2.0 * eps) / (1.0 - eps)
}

/// Largest ε on `[lo, hi]` (to `resolution`) for which the `claim1` infimum
/// search finds no violation; bisection over independent searches.
pub fn claim1_epsilon_boundary(
    lo: f64,
    hi: f64,
    resolution: f64,
    budget: usize,
    seed: u64,
    config: &SearchConfig,
) -> Result<f64> {
    let region = SampleRegion::normalized();
    let holds = |eps: f64| -> Result<bool> {
        let rep = infimum_search(&Quantity::Claim1 { eps }, &region, budget, seed, config)?;
        Ok(!rep.violation)
    };
    let (mut a, mut b) = (lo, hi);
    if !holds(a)? {
        return Ok(f64::NAN);
    }
    if holds(b)? {
        return Ok(b);
    }
    while b - a > resolution {
        let m = 0.5 * (a + b);
        if holds(m)? {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rotation_from_quaternion;
    use crate::rng::{random_gamma2_matrix, random_gamma2_triple, stream};
    use proptest::prelude::*;

    fn t(a: f64, b: f64, c: f64) -> EigenTriple {
        EigenTriple::new(a, b, c)
    }

    #[test]
    fn claim1_examples() {
        assert!((claim1_min_eig(&t(1., 1., 1.), 0.0).unwrap() - 3.0).abs() < 1e-14);
        assert!((claim1_min_eig(&t(1., 1., 1.), 0.4).unwrap() - 2.6).abs() < 1e-14);
        assert!((claim1_min_eig(&t(1., 1., 1.), 0.9).unwrap() + 0.4).abs() < 1e-14);
        assert!(claim1_min_eig(&t(1., 1., -1.), 0.1).is_err());
    }

    #[test]
    fn claim2_examples() {
        assert!((claim2_gap(&t(1., 1., 1.), 0.0).unwrap() - 540.0).abs() < 1e-10);
        assert!((claim2_gap(&t(1., 1., 1.), 0.05).unwrap() - 540.0).abs() < 1e-10);
        // 16.95 · 19.8 − 98.01
        assert!((claim2_gap(&t(2., 1., 0.), 0.05).unwrap() - 237.6).abs() < 1e-10);
    }

    #[test]
    fn lemma2_examples() {
        let (a, b, c) = lemma2_ratios(&t(1., 1., 1.)).unwrap();
        for v in [a, b, c] {
            assert!((v - 2.0 / 3.0).abs() < 1e-15);
        }
        let (a, b, c) = lemma2_ratios(&t(2., 1., 0.)).unwrap();
        assert!((a - 1.0).abs() < 1e-15 && (b - 2.0 / 3.0).abs() < 1e-15 && (c - 1.0).abs() < 1e-15);
        let (a, b, c) = lemma2_ratios(&t(1., 1., -0.4)).unwrap();
        assert!((a - 3.0).abs() < 1e-12);
        assert!((b - 0.6 / 1.6).abs() < 1e-14);
        assert!((c - 2.0 / 1.6).abs() < 1e-14);
        assert!(lemma2_ratios(&t(1., -1., -1.)).is_err());
    }

    #[test]
    fn identity_examples() {
        assert_eq!(product_identity_residual(&t(1., 1., 1.)), 0.0);
        assert_eq!(product_identity_residual(&t(2., 1., 0.)), 0.0);
        assert_eq!(gram_identity_residual(&SymMat3::identity()).unwrap(), 0.0);
        assert!(gram_identity_residual(&SymMat3::diag(2., 1., 0.)).unwrap() < 1e-15);
        let q = rotation_from_quaternion([0.3, 0.2, -0.9, 0.4]);
        let a = SymMat3::diag(2., 1., 0.).conjugate(&q);
        assert!(gram_identity_residual(&a).unwrap() <= 1e-12);
        assert!(gram_identity_residual(&SymMat3::diag(1., 1., -1.)).is_err());
    }

    #[test]
    fn cla_is_tight_on_the_identity() {
        let l = t(1., 1., 1.);
        // quadratic ½|x|² has Du(x) − Du(0) = x
        let x = [0.3, -0.2, 0.5];
        assert!(cla_pointwise(&l, &x, &x).unwrap().abs() < 1e-15);
    }

    #[test]
    fn epsilon_link_at_chosen_constants() {
        assert!(epsilon_link_holds(0.01, 0.05));
        assert!(!epsilon_link_holds(0.05, 0.05));
    }

    #[test]
    fn identities_on_random_samples() {
        for i in 0..20_000u64 {
            let mut rng = stream(99, i);
            let (a, lam) = random_gamma2_matrix(&mut rng, 4.0);
            let s = 1.0 + lam.norm();
            assert!(product_identity_residual(&lam).abs() <= 1e-12 * s.powi(3));
            assert!(gram_identity_residual(&a).unwrap() <= 1e-12 * s.powi(3));
            let x = [rng_f(&mut rng), rng_f(&mut rng), rng_f(&mut rng)];
            let p = [rng_f(&mut rng), rng_f(&mut rng), rng_f(&mut rng)];
            assert!(cla_pointwise(&lam, &x, &p).unwrap() >= -1e-12);
        }
    }

    fn rng_f(rng: &mut impl rand::Rng) -> f64 {
        rng.random_range(-1.0..1.0)
    }

    proptest! {
        #[test]
        fn scaling_laws(seed in 0u64..10_000, tscale in 0.05f64..20.0) {
            let lam = random_gamma2_triple(&mut stream(seed, 0), 3.0);
            let sl = lam.scale(tscale);
            let c1 = claim1_min_eig(&lam, 0.3).unwrap();
            prop_assert!((claim1_min_eig(&sl, 0.3).unwrap() - tscale * c1).abs()
                <= 1e-11 * (1.0 + tscale * c1.abs()) * (1.0 + lam.norm()) * tscale.max(1.0));
            let c2 = claim2_gap(&lam, 0.05).unwrap();
            let s4 = tscale.powi(4);
            prop_assert!((claim2_gap(&sl, 0.05).unwrap() - s4 * c2).abs()
                <= 1e-10 * s4 * (1.0 + lam.norm()).powi(4));
            let r = lemma2_ratios(&lam).unwrap();
            let rs = lemma2_ratios(&sl).unwrap();
            prop_assert!((r.0 - rs.0).abs() <= 1e-9 * (1.0 + r.0.abs()));
            prop_assert!((r.1 - rs.1).abs() <= 1e-12 * (1.0 + r.1.abs()));
        }

        #[test]
        fn claim1_non_increasing_in_eps(seed in 0u64..10_000, e1 in 0.0f64..1.0, de in 0.0f64..0.5) {
            let lam = random_gamma2_triple(&mut stream(seed, 1), 3.0);
            let a = claim1_min_eig(&lam, e1).unwrap();
            let b = claim1_min_eig(&lam, e1 + de).unwrap();
            prop_assert!(b <= a + 1e-12 * (1.0 + lam.norm()));
        }

        #[test]
        fn claim2_non_increasing_in_delta(seed in 0u64..10_000, d1 in 0.0f64..0.2, dd in 0.0f64..0.2) {
            let lam = random_gamma2_triple(&mut stream(seed, 2), 3.0);
            let a = claim2_gap(&lam, d1).unwrap();
            let b = claim2_gap(&lam, d1 + dd).unwrap();
            prop_assert!(b <= a + 1e-10 * (1.0 + lam.norm()).powi(4));
        }

        #[test]
        fn claims_hold_on_random_cone_points(seed in 0u64..100_000) {
            let lam = random_gamma2_triple(&mut stream(seed, 3), 5.0);
            let n = 1.0 + lam.norm();
            prop_assert!(claim1_min_eig(&lam, 0.4).unwrap() >= -1e-10 * n);
            prop_assert!(claim2_gap(&lam, 0.05).unwrap() >= -1e-8 * n.powi(4));
        }
    }
}
