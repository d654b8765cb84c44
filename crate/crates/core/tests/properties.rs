use proptest::prelude::*;

use sigma2_core::calculus::{lemma1_residuals, make_manufactured, v_decomposition, ManufacturedSpec};
use sigma2_core::grid::GridField;
use sigma2_core::linalg::norm;
use sigma2_core::pointwise::{claim1_min_eig, claim2_gap, gram_identity_residual, product_identity_residual};
use sigma2_core::rng::{random_gamma2_matrix, random_gamma2_triple, random_rotation, stream, uniform_point};
use sigma2_core::symfun::{eigen_decompose, in_gamma2, in_gamma2_eigen, reconstruction_error, sigma_of_matrix};
use sigma2_core::SymMat3;

fn sym() -> impl Strategy<Value = SymMat3> {
    proptest::array::uniform6(-5.0f64..5.0).prop_map(|e| SymMat3::new(e[0], e[1], e[2], e[3], e[4], e[5]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn eigen_decomposition_reconstructs(a in sym()) {
        let (lam, q) = eigen_decompose(&a).unwrap();
        let l = lam.lambdas();
        prop_assert!(l[0] >= l[1] && l[1] >= l[2]);
        prop_assert!(reconstruction_error(&a, &l, &q) <= 1e-12 * (1.0 + a.norm()));
        let (s1, s2, s3) = sigma_of_matrix(&a);
        let sc = 1.0 + a.norm();
        prop_assert!((lam.sigma1 - s1).abs() <= 1e-12 * sc);
        prop_assert!((lam.sigma2 - s2).abs() <= 1e-11 * sc * sc);
        prop_assert!((lam.sigma3 - s3).abs() <= 1e-11 * sc.powi(3));
    }

    #[test]
    fn sigmas_are_rotation_invariant(a in sym(), seed in 0u64..1_000_000) {
        let q = random_rotation(&mut stream(seed, 0));
        let (s1, s2, s3) = sigma_of_matrix(&a);
        let (r1, r2, r3) = sigma_of_matrix(&a.conjugate(&q));
        let sc = 1.0 + a.norm();
        prop_assert!((s1 - r1).abs() <= 1e-12 * sc);
        prop_assert!((s2 - r2).abs() <= 1e-11 * sc * sc);
        prop_assert!((s3 - r3).abs() <= 1e-11 * sc.powi(3));
        prop_assert_eq!(in_gamma2(&a, 1e-3).in_gamma2, in_gamma2(&a.conjugate(&q), 1e-3).in_gamma2);
    }

    #[test]
    fn newton_maclaurin_inside_the_cone(seed in 0u64..1_000_000, spread in 0.1f64..10.0) {
        let lam = random_gamma2_triple(&mut stream(seed, 1), spread);
        let rep = in_gamma2_eigen(&lam, 0.0);
        prop_assert!(rep.in_gamma2);
        prop_assert!(rep.newton_maclaurin_ok, "gap {}", rep.newton_maclaurin_gap);
    }

    #[test]
    fn algebraic_identities(seed in 0u64..1_000_000, spread in 0.1f64..10.0) {
        let (a, lam) = random_gamma2_matrix(&mut stream(seed, 2), spread);
        let s = lam.norm().powi(3);
        prop_assert!(product_identity_residual(&lam).abs() <= 1e-12 * s);
        prop_assert!(gram_identity_residual(&a).unwrap() <= 1e-12 * s);
    }

    #[test]
    fn claims_hold_on_the_cone(seed in 0u64..1_000_000, spread in 0.1f64..10.0) {
        let lam = random_gamma2_triple(&mut stream(seed, 3), spread);
        let n = lam.norm();
        prop_assert!(claim1_min_eig(&lam, 0.4).unwrap() >= -1e-10 * n);
        prop_assert!(claim2_gap(&lam, 0.05).unwrap() >= -1e-8 * n.powi(4));
    }

    #[test]
    fn gridfield_bytes_round_trip(n in 2usize..7, lo in -3.0f64..0.0, w in 0.1f64..4.0, seed in 0u64..1000) {
        let g = GridField::from_fn(lo, lo + w, n, |x| (x[0] * 3.0 + seed as f64).sin() * x[1] - x[2]).unwrap();
        let back = GridField::from_bytes(&g.to_bytes(), std::path::Path::new("mem")).unwrap();
        prop_assert_eq!(back.n, g.n);
        prop_assert_eq!(back.lo.to_bits(), g.lo.to_bits());
        prop_assert!(back.values.iter().zip(&g.values).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn manufactured_jets_satisfy_lemma1(seed in 0u64..1_000_000) {
        let mut rng = stream(seed, 4);
        for spec in ManufacturedSpec::catalog() {
            let m = make_manufactured(spec, -1.0, 1.0).unwrap().with_coupling(0.3, [0.2, -0.1, 0.05]);
            let x = uniform_point(&mut rng, -1.0, 1.0);
            let (r1, r2) = lemma1_residuals(&m.jet(&x), &m).unwrap();
            prop_assert!(norm(&r1) <= 1e-10, "{} r1 {:?}", spec.id(), r1);
            prop_assert!(norm(&r2) <= 1e-10, "{} r2 {:?}", spec.id(), r2);
        }
    }

    #[test]
    fn v_resummation_matches_direct(seed in 0u64..1_000_000) {
        let m = make_manufactured(ManufacturedSpec::TrigPert { a: 1.0, eps: 0.05, k: 1.0 }, -1.0, 1.0).unwrap();
        let x = uniform_point(&mut stream(seed, 5), -1.0, 1.0);
        let d = v_decomposition(&m.jet(&x), &m).unwrap();
        if let Some(mm) = d.mismatch {
            prop_assert!(mm <= 1e-9 * (1.0 + d.direct.abs()), "{:?}", d);
        }
    }
}
