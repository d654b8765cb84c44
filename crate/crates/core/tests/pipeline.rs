use sigma2_core::calculus::{make_manufactured, ConstantRhs, ManufacturedSpec};
use sigma2_core::estimates::{doubling_ratio, integral_chain_audit, Regions};
use sigma2_core::graphgeom::{monotonicity_profile, GraphData};
use sigma2_core::grid::GridField;
use sigma2_core::linalg::dot;
use sigma2_core::solver::{lap_bound_violations, solve_dirichlet, SolveParams};
use sigma2_core::Error;

#[test]
fn cubic_solve_feeds_the_harness() {
    let m = make_manufactured(ManufacturedSpec::CubicPert { a: 1.0, eps: 0.1 }, -1.0, 1.0).unwrap();
    let (u, stats) = solve_dirichlet(&m, &|x| m.u(x), -1.0, 1.0, 17, &SolveParams::default()).unwrap();
    assert!(stats.converged);
    assert!(stats.cone_margins.iter().all(|&c| c > 0.0));
    let exact = GridField::from_fn(-1.0, 1.0, 17, |x| m.u(x)).unwrap();
    assert!(u.max_diff(&exact).unwrap() <= 1e-10);
    assert_eq!(lap_bound_violations(&u), 0);

    let r = Regions::for_field(&u).unwrap();
    assert!(doubling_ratio(&u, &r.inner(), &r.outer()).unwrap() >= 1.0);
    let a = integral_chain_audit(&u, &m, &r).unwrap();
    for t in [a.t_meanvalue, a.t_entropy, a.t_gradb, a.t_energy] {
        assert!(t.is_finite() && t >= 0.0);
    }
    assert!(a.c_min > 0.0);

    let d = GraphData::new(&u, &m).unwrap();
    let c = d.center([8, 8, 8]).unwrap();
    let h = u.h();
    let p = monotonicity_profile(&d, &c, &[3.0 * h, 4.0 * h, 5.0 * h]).unwrap();
    assert!(p.ratios.iter().all(|r| r.is_finite() && *r > 0.0));
}

#[test]
fn solved_field_survives_the_file_format() {
    let rhs = ConstantRhs(3.0);
    let g = |x: &[f64; 3]| 0.5 * dot(x, x);
    let (u, _) = solve_dirichlet(&rhs, &g, -1.0, 1.0, 9, &SolveParams::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("u.s2gf");
    u.write(&path).unwrap();
    let back = GridField::read(&path).unwrap();
    assert_eq!(back, u);

    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
    assert!(matches!(GridField::read(&path), Err(Error::Format { .. })));
    let mut bad = bytes.clone();
    bad[0] ^= 0xff;
    std::fs::write(&path, &bad).unwrap();
    let err = GridField::read(&path).unwrap_err().to_string();
    assert!(err.contains("u.s2gf") && err.contains("magic"), "{err}");
    assert!(matches!(
        GridField::read(&dir.path().join("missing")),
        Err(Error::Io { .. })
    ));
}

#[test]
fn inadmissible_right_hand_side_is_rejected() {
    let r = solve_dirichlet(&ConstantRhs(-1.0), &|_| 0.0, -1.0, 1.0, 9, &SolveParams::default());
    assert!(matches!(r, Err(Error::Domain(_))));
}
