//! Sparse matrices and a Jacobi-preconditioned BiCGSTAB.

use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    pub fn with_capacity(n: usize, nnz: usize) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        Csr {
            n,
            row_ptr,
            cols: Vec::with_capacity(nnz),
            vals: Vec::with_capacity(nnz),
        }
    }

    /// Appends one row; entries with the same column are summed.
    pub fn push_row(&mut self, entries: &mut Vec<(usize, f64)>) {
        entries.sort_unstable_by_key(|e| e.0);
        let mut last: Option<usize> = None;
        for &(c, v) in entries.iter() {
            if last == Some(c) {
                *self.vals.last_mut().unwrap() += v;
            } else {
                self.cols.push(c);
                self.vals.push(v);
                last = Some(c);
            }
        }
        self.row_ptr.push(self.cols.len());
        entries.clear();
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.cols[a..b].iter().copied().zip(self.vals[a..b].iter().copied())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|r| self.row(r).find(|&(c, _)| c == r).map_or(0.0, |e| e.1))
            .collect()
    }

    pub fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().with_min_len(4096).for_each(|(r, out)| {
            *out = self.row(r).map(|(c, v)| v * x[c]).sum();
        });
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSolveInfo {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Fixed chunking keeps the summation order independent of the thread count.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    const CHUNK: usize = 8192;
    let partial: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .collect();
    partial.iter().sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = b` to `‖b − Ax‖ ≤ rtol‖b‖`, starting from `x = 0`.
pub fn bicgstab(a: &Csr, b: &[f64], rtol: f64, max_iter: usize) -> Result<(Vec<f64>, LinearSolveInfo)> {
    let n = a.n;
    let dinv: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((
            x,
            LinearSolveInfo {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let mut r = b.to_vec();
    let mut rhat = r.clone();
    let mut p = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut t = vec![0.0; n];
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut restarts = 0;
    let mut best = f64::INFINITY;
    for it in 1..=max_iter {
        let rho_new = dot(&rhat, &r);
        if rho_new.abs() < 1e-300 || omega == 0.0 {
            // breakdown: restart the shadow residual from the current one
            restarts += 1;
            if restarts > 20 {
                break;
            }
            rhat.copy_from_slice(&r);
            p.iter_mut().for_each(|e| *e = 0.0);
            v.iter_mut().for_each(|e| *e = 0.0);
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            continue;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        p.par_iter_mut()
            .with_min_len(8192)
            .zip(&r)
            .zip(&v)
            .for_each(|((pi, ri), vi)| *pi = ri + beta * (*pi - omega * vi));
        y.par_iter_mut()
            .with_min_len(8192)
            .zip(&p)
            .zip(&dinv)
            .for_each(|((yi, pi), di)| *yi = pi * di);
        a.mul_into(&y, &mut v);
        let rv = dot(&rhat, &v);
        if rv == 0.0 {
            restarts += 1;
            rhat.copy_from_slice(&r);
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            continue;
        }
        alpha = rho / rv;
        s.par_iter_mut()
            .with_min_len(8192)
            .zip(&r)
            .zip(&v)
            .for_each(|((si, ri), vi)| *si = ri - alpha * vi);
        x.par_iter_mut()
            .with_min_len(8192)
            .zip(&y)
            .for_each(|(xi, yi)| *xi += alpha * yi);
        let sn = norm(&s) / bnorm;
        if sn <= rtol {
            return Ok((
                x,
                LinearSolveInfo {
                    iterations: it,
                    relative_residual: sn,
                },
            ));
        }
        z.par_iter_mut()
            .with_min_len(8192)
            .zip(&s)
            .zip(&dinv)
            .for_each(|((zi, si), di)| *zi = si * di);
        a.mul_into(&z, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        x.par_iter_mut()
            .with_min_len(8192)
            .zip(&z)
            .for_each(|(xi, zi)| *xi += omega * zi);
        r.par_iter_mut()
            .with_min_len(8192)
            .zip(&s)
            .zip(&t)
            .for_each(|((ri, si), ti)| *ri = si - omega * ti);
        let rn = norm(&r) / bnorm;
        best = best.min(rn);
        if rn <= rtol {
            return Ok((
                x,
                LinearSolveInfo {
                    iterations: it,
                    relative_residual: rn,
                },
            ));
        }
        if !rn.is_finite() {
            break;
        }
    }
    Err(Error::LinearSolveFailure(format!(
        "BiCGSTAB stagnated: best relative residual {best:.3e} > {rtol:.1e} after {max_iter} iterations on {n} unknowns"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_a_1d_laplacian() {
        let n = 200;
        let mut a = Csr::with_capacity(n, 3 * n);
        let mut row = Vec::new();
        for i in 0..n {
            row.push((i, 2.0));
            if i > 0 {
                row.push((i - 1, -1.0));
            }
            if i + 1 < n {
                row.push((i + 1, -1.0));
            }
            a.push_row(&mut row);
        }
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.1).sin()).collect();
        let mut b = vec![0.0; n];
        a.mul_into(&xs, &mut b);
        let (x, info) = bicgstab(&a, &b, 1e-12, 5000).unwrap();
        assert!(info.relative_residual <= 1e-12);
        let err = x.iter().zip(&xs).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(err < 1e-7, "{err}");
    }

    #[test]
    fn duplicate_entries_are_summed() {
        let mut a = Csr::with_capacity(1, 2);
        a.push_row(&mut vec![(0, 1.0), (0, 2.0)]);
        assert_eq!(a.diagonal(), vec![3.0]);
    }

    #[test]
    fn reports_failure() {
        let mut a = Csr::with_capacity(2, 4);
        a.push_row(&mut vec![(0, 1.0), (1, 1.0)]);
        a.push_row(&mut vec![(0, 1.0), (1, 1.0)]);
        assert!(matches!(
            bicgstab(&a, &[1.0, 0.0], 1e-10, 50),
            Err(Error::LinearSolveFailure(_))
        ));
    }
}
