//! Third- and fourth-order jet calculus for `σ₂(D²u) = f(x, u, Du)`.

mod fd;
mod identities;
mod jet;
mod manufactured;
mod refinement;
mod rhs;

pub use fd::{gradient_at, hessian_at, jet_at};
pub use identities::{
    concavity_margin, gradient_bound_ratios, lemma1_r1, lemma1_r2, lemma1_residuals, logb_residual, logb_residual_eps,
    subv_residual, v_decomposition, VDecomposition, FRAME_GAP, LOGB_EPS,
};
pub use jet::Jet3;
pub use manufactured::{make_manufactured, ManufacturedSolution, ManufacturedSpec, ADMISSIBILITY_TAU};
pub use refinement::{fd_jet_pairs, observed_order, relative_change, ROUNDOFF_LEVEL};
pub use rhs::{eval_along, total_first, total_second, ConstantRhs, RhsEval, RhsModel, RotatedRhs};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{mat_t_vec, norm};
    use crate::rng::{random_rotation, stream};
    use rand::Rng;

    fn cubic() -> ManufacturedSolution {
        make_manufactured(ManufacturedSpec::CubicPert { a: 1.0, eps: 0.1 }, -1.0, 1.0).unwrap()
    }

    fn trig() -> ManufacturedSolution {
        make_manufactured(
            ManufacturedSpec::TrigPert {
                a: 1.0,
                eps: 0.05,
                k: 1.0,
            },
            -1.0,
            1.0,
        )
        .unwrap()
    }

    fn random_point(rng: &mut impl Rng) -> [f64; 3] {
        [0, 1, 2].map(|_| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn quad_all_zero() {
        let m = make_manufactured(ManufacturedSpec::quad_identity(), -1.0, 1.0).unwrap();
        let j = m.jet(&[0.4, -0.1, 0.3]);
        let (r1, r2) = lemma1_residuals(&j, &m).unwrap();
        assert_eq!(r1, [0.0; 3]);
        assert_eq!(r2, [0.0; 3]);
        assert_eq!(gradient_bound_ratios(&j, &m).unwrap(), (0.0, 0.0));
        assert_eq!(logb_residual(&j, &m).unwrap(), (0.0, 0.0));
        assert_eq!(subv_residual(&j, &m).unwrap().0, 0.0);
        assert_eq!(concavity_margin(&j, &m).unwrap(), 0.0);
        let v = v_decomposition(&j, &m).unwrap();
        assert_eq!(v.parts, Some([0.0; 4]));
        assert_eq!(v.direct, 0.0);
    }

    #[test]
    fn capability_error_without_fourth_derivatives() {
        let m = cubic();
        let mut j = m.jet(&[0.1, 0.2, 0.3]);
        j.d4u = None;
        assert!(matches!(lemma1_r2(&j, &m), Err(crate::Error::Capability(_))));
        assert!(matches!(logb_residual(&j, &m), Err(crate::Error::Capability(_))));
        assert!(norm(&lemma1_r1(&j, &m)) < 1e-12);
    }

    #[test]
    fn axial_gradient_ratio() {
        let m = make_manufactured(ManufacturedSpec::AxialCubic { c: 0.5 }, -1.0, 1.0).unwrap();
        let j = m.jet(&[0.2, 0.0, 0.0]);
        let (g, _) = gradient_bound_ratios(&j, &m).unwrap();
        assert!(g <= 1.0 / (1.0 + j.laplacian()) + 1e-15);
        assert!(g <= 0.25 + 1e-15);
    }

    #[test]
    fn lemma1_identities_hold_on_catalog() {
        let mut rng = stream(11, 0);
        for m in [cubic(), trig(), cubic().with_coupling(0.5, [0.2, -0.1, 0.3])] {
            for _ in 0..200 {
                let j = m.jet(&random_point(&mut rng));
                let (r1, r2) = lemma1_residuals(&j, &m).unwrap();
                assert!(norm(&r1) <= 1e-12, "{r1:?}");
                assert!(norm(&r2) <= 1e-11, "{r2:?}");
            }
        }
    }

    #[test]
    fn decomposition_resums() {
        let m = cubic();
        let v = v_decomposition(&m.jet(&[0.3, 0.2, 0.1]), &m).unwrap();
        assert!(v.mismatch.unwrap() <= 1e-9 * (1.0 + v.direct.abs()), "{v:?}");
        let m = trig().with_coupling(0.2, [0.1, 0.0, -0.2]);
        let mut rng = stream(12, 0);
        let mut worst_unsquared: f64 = 0.0;
        for _ in 0..100 {
            let v = v_decomposition(&m.jet(&random_point(&mut rng)), &m).unwrap();
            if let Some(mm) = v.mismatch {
                assert!(mm <= 1e-9 * (1.0 + v.direct.abs()), "{v:?}");
                worst_unsquared = worst_unsquared.max(v.mismatch_iii_unsquared.unwrap());
            }
        }
        assert!(worst_unsquared > 1e-7);
    }

    #[test]
    fn decomposition_discriminates_ii_coefficient() {
        let m = make_manufactured(
            ManufacturedSpec::DiagCubic {
                a: [3.0, 2.0, 1.0],
                eps: 0.2,
            },
            -1.0,
            1.0,
        )
        .unwrap();
        let v = v_decomposition(&m.jet(&[0.1, -0.2, 0.15]), &m).unwrap();
        let tol = 1e-9 * (1.0 + v.direct.abs());
        assert!(v.mismatch.unwrap() <= tol);
        assert!(v.mismatch_ii_4f.unwrap() > 1e-4);
    }

    #[test]
    fn concavity_holds_on_trig() {
        let m = trig();
        let mut rng = stream(13, 0);
        for _ in 0..500 {
            let j = m.jet(&random_point(&mut rng));
            assert!(concavity_margin(&j, &m).unwrap() >= -1e-9);
        }
    }

    #[test]
    fn frame_invariance() {
        let m = trig().with_coupling(0.3, [0.1, 0.2, -0.1]);
        let mut rng = stream(14, 0);
        for _ in 0..20 {
            let x = random_point(&mut rng);
            let q = random_rotation(&mut rng);
            let j = m.jet(&x);
            let jr = j.rotate(&q);
            let rr = RotatedRhs { inner: &m, q };
            assert!((mat_t_vec(&q, &jr.x)[0] - x[0]).abs() < 1e-14);
            let pairs = [
                (logb_residual(&j, &m).unwrap().0, logb_residual(&jr, &rr).unwrap().0),
                (subv_residual(&j, &m).unwrap().0, subv_residual(&jr, &rr).unwrap().0),
                (concavity_margin(&j, &m).unwrap(), concavity_margin(&jr, &rr).unwrap()),
            ];
            for (a, b) in pairs {
                assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()), "{a} vs {b}");
            }
        }
    }
}
