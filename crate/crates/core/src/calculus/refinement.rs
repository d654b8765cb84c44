//! Finite-difference jets of a manufactured solution on two nested grids,
//! for grid-refinement studies of the jet residuals.

use crate::error::Result;
use crate::grid::GridField;

use super::{jet_at, Jet3, ManufacturedSolution};

/// Treated as round-off when both levels of a refinement pair fall below it.
pub const ROUNDOFF_LEVEL: f64 = 1e-9;

/// Jets at the nodes shared by the `n`-grid and the `(2n−1)`-grid over the
/// solution's box that sit at depth ≥ 2 on the coarse grid: `(coarse, fine,
/// exact)`.
pub fn fd_jet_pairs(m: &ManufacturedSolution, n: usize) -> Result<Vec<(Jet3, Jet3, Jet3)>> {
    let coarse = GridField::from_fn(m.lo, m.hi, n, |x| m.u(x))?;
    let fine = GridField::from_fn(m.lo, m.hi, 2 * n - 1, |x| m.u(x))?;
    let mut out = Vec::new();
    for k in 2..n - 2 {
        for j in 2..n - 2 {
            for i in 2..n - 2 {
                let jc = jet_at(&coarse, [i, j, k])?;
                let jf = jet_at(&fine, [2 * i, 2 * j, 2 * k])?;
                let je = m.jet(&jc.x);
                out.push((jc, jf, je));
            }
        }
    }
    Ok(out)
}

/// Observed order from errors at spacings `h` and `h/2`; `None` when both
/// are at round-off.
pub fn observed_order(coarse: f64, fine: f64) -> Option<f64> {
    if coarse <= ROUNDOFF_LEVEL && fine <= ROUNDOFF_LEVEL {
        None
    } else {
        Some((coarse / fine).log2())
    }
}

/// `|a − b| / max(|a|, |b|)`, zero when both vanish.
pub fn relative_change(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{lemma1_r1, lemma1_r2, make_manufactured, ManufacturedSpec};

    fn max_norm(v: [f64; 3]) -> f64 {
        v.iter().fold(0.0f64, |a, b| a.max(b.abs()))
    }

    #[test]
    fn trig_residuals_are_second_order() {
        let m = make_manufactured(
            ManufacturedSpec::TrigPert {
                a: 1.0,
                eps: 0.05,
                k: 1.0,
            },
            -1.0,
            1.0,
        )
        .unwrap();
        let pairs = fd_jet_pairs(&m, 9).unwrap();
        let (mut c1, mut f1, mut c2, mut f2) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for (jc, jf, _) in &pairs {
            c1 = c1.max(max_norm(lemma1_r1(jc, &m)));
            f1 = f1.max(max_norm(lemma1_r1(jf, &m)));
            c2 = c2.max(max_norm(lemma1_r2(jc, &m).unwrap()));
            f2 = f2.max(max_norm(lemma1_r2(jf, &m).unwrap()));
        }
        let o1 = observed_order(c1, f1).unwrap();
        let o2 = observed_order(c2, f2).unwrap();
        assert!((o1 - 2.0).abs() < 0.3, "{o1}");
        assert!((o2 - 2.0).abs() < 0.3, "{o2}");
    }

    #[test]
    fn cubic_jets_are_exact() {
        let m = make_manufactured(ManufacturedSpec::CubicPert { a: 1.0, eps: 0.1 }, -1.0, 1.0).unwrap();
        for (jc, _, je) in fd_jet_pairs(&m, 9).unwrap() {
            assert!(jc.d3u.max_abs() > 0.0 || je.d3u.max_abs() == 0.0);
            assert!(max_norm(lemma1_r1(&jc, &m)) < ROUNDOFF_LEVEL);
        }
    }

    #[test]
    fn order_helpers() {
        assert_eq!(observed_order(1e-12, 1e-13), None);
        assert!((observed_order(4e-4, 1e-4).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(relative_change(0.0, 0.0), 0.0);
        assert!((relative_change(1.0, 1.1) - 0.1 / 1.1).abs() < 1e-15);
    }
}
