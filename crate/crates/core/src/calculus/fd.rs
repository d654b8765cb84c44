//! Finite-difference jets on grid fields.

use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::linalg::{Sym3Tensor, Sym4Tensor, SymMat3, Vec3};

use super::Jet3;

fn shifted(node: [usize; 3], off: [i64; 3]) -> [usize; 3] {
    [0, 1, 2].map(|a| (node[a] as i64 + off[a]) as usize)
}

fn val(g: &GridField, node: [usize; 3], off: [i64; 3]) -> f64 {
    let p = shifted(node, off);
    g.get(p[0], p[1], p[2])
}

fn unit(a: usize, s: i64) -> [i64; 3] {
    let mut o = [0; 3];
    o[a] = s;
    o
}

fn add(a: [i64; 3], b: [i64; 3]) -> [i64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// Centered gradient; needs one cell of margin.
pub fn gradient_at(g: &GridField, node: [usize; 3]) -> Vec3 {
    let h = g.h();
    [0, 1, 2].map(|a| (val(g, node, unit(a, 1)) - val(g, node, unit(a, -1))) / (2.0 * h))
}

/// 7-point second derivatives and 4-point cross derivatives at
/// `node + off`; needs one cell of margin around that node.
fn hessian_offset(g: &GridField, node: [usize; 3], off: [i64; 3]) -> SymMat3 {
    let h2 = g.h() * g.h();
    let c = val(g, node, off);
    let mut m = SymMat3::default();
    for a in 0..3 {
        let d = val(g, node, add(off, unit(a, 1))) - 2.0 * c + val(g, node, add(off, unit(a, -1)));
        m.set(a, a, d / h2);
        for b in a + 1..3 {
            let pp = val(g, node, add(off, add(unit(a, 1), unit(b, 1))));
            let pm = val(g, node, add(off, add(unit(a, 1), unit(b, -1))));
            let mp = val(g, node, add(off, add(unit(a, -1), unit(b, 1))));
            let mm = val(g, node, add(off, add(unit(a, -1), unit(b, -1))));
            m.set(a, b, (pp - pm - mp + mm) / (4.0 * h2));
        }
    }
    m
}

pub fn hessian_at(g: &GridField, node: [usize; 3]) -> SymMat3 {
    hessian_offset(g, node, [0; 3])
}

/// Full jet from centered differences: third derivatives by centered
/// differencing of the Hessian stencil, fourth by applying the second
/// difference stencil to it. Needs two cells of margin.
pub fn jet_at(g: &GridField, node: [usize; 3]) -> Result<Jet3> {
    if node.iter().any(|&c| c >= g.n) || g.depth(node) < 2 {
        return Err(Error::domain(format!(
            "jet_at: node {node:?} is closer than two cells to the boundary (n = {})",
            g.n
        )));
    }
    let h = g.h();
    let hess = |off: [i64; 3]| hessian_offset(g, node, off);
    let center = hess([0; 3]);
    let plus: [SymMat3; 3] = [0, 1, 2].map(|a| hess(unit(a, 1)));
    let minus: [SymMat3; 3] = [0, 1, 2].map(|a| hess(unit(a, -1)));

    // each triple averaged over which index is the differenced one
    let d3u = Sym3Tensor::from_fn(|i, j, k| {
        let picks = [(i, j, k), (j, i, k), (k, i, j)];
        let mut s = 0.0;
        let mut n = 0.0;
        let mut seen: Vec<usize> = Vec::new();
        for (d, p, q) in picks {
            if seen.contains(&d) {
                continue;
            }
            seen.push(d);
            s += (plus[d].get(p, q) - minus[d].get(p, q)) / (2.0 * h);
            n += 1.0;
        }
        s / n
    });

    let second_diff = |a: usize, b: usize, p: usize, q: usize| -> f64 {
        if a == b {
            (plus[a].get(p, q) - 2.0 * center.get(p, q) + minus[a].get(p, q)) / (h * h)
        } else {
            let pp = hess(add(unit(a, 1), unit(b, 1))).get(p, q);
            let pm = hess(add(unit(a, 1), unit(b, -1))).get(p, q);
            let mp = hess(add(unit(a, -1), unit(b, 1))).get(p, q);
            let mm = hess(add(unit(a, -1), unit(b, -1))).get(p, q);
            (pp - pm - mp + mm) / (4.0 * h * h)
        }
    };
    // each quadruple averaged over its distinct splittings into two pairs
    let d4u = Sym4Tensor::from_fn(|i, j, k, l| {
        let splits = [((i, j), (k, l)), ((i, k), (j, l)), ((i, l), (j, k))];
        let mut seen: Vec<((usize, usize), (usize, usize))> = Vec::new();
        let mut s = 0.0;
        for (a, b) in splits {
            let a = (a.0.min(a.1), a.0.max(a.1));
            let b = (b.0.min(b.1), b.0.max(b.1));
            let key = (a.min(b), a.max(b));
            if seen.contains(&key) {
                continue;
            }
            seen.push(key);
            s += second_diff(a.0, a.1, b.0, b.1);
        }
        s / seen.len() as f64
    });

    Ok(Jet3 {
        x: g.point(node[0], node[1], node[2]),
        u: g.get(node[0], node[1], node[2]),
        du: gradient_at(g, node),
        d2u: center,
        d3u,
        d4u: Some(d4u),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_exact() {
        let g = GridField::from_fn(-1.0, 1.0, 9, |x| {
            0.5 * (2.0 * x[0] * x[0] + x[1] * x[1] + 3.0 * x[2] * x[2]) + x[0] * x[1] - 0.5 * x[1] * x[2] + x[2]
        })
        .unwrap();
        let j = jet_at(&g, [4, 3, 5]).unwrap();
        let want = SymMat3::new(2.0, 1.0, 3.0, 1.0, 0.0, -0.5);
        assert!(j.d2u.sub(&want).max_abs() < 1e-12);
        assert!(j.d3u.max_abs() < 1e-10);
        assert!(j.d4u.unwrap().max_abs() < 1e-7);
    }

    #[test]
    fn cubic_third_derivative_is_exact() {
        let g = GridField::from_fn(-1.0, 1.0, 11, |x| x[0].powi(3)).unwrap();
        for node in [[2, 5, 5], [5, 5, 5], [8, 3, 7]] {
            let j = jet_at(&g, node).unwrap();
            assert!((j.d3u.get(0, 0, 0) - 6.0).abs() < 1e-9);
            assert!((j.d2u.get(0, 0) - 6.0 * j.x[0]).abs() < 1e-11);
            let mut t = j.d3u;
            t.set(0, 0, 0, 0.0);
            assert!(t.max_abs() < 1e-9);
        }
    }

    #[test]
    fn boundary_margin_enforced() {
        let g = GridField::from_fn(-1.0, 1.0, 9, |x| x[0]).unwrap();
        assert!(jet_at(&g, [1, 4, 4]).is_err());
        assert!(jet_at(&g, [7, 4, 4]).is_err());
        assert!(jet_at(&g, [2, 4, 6]).is_ok());
    }
}
