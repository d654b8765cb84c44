//! Uniform grids on a cube `[lo, hi]³` and their binary file format.
//!
//! Node `(i, j, k)` sits at `lo + h·(i, j, k)` with `h = (hi − lo)/(n − 1)`
//! and is stored at flat index `i + n·(j + n·k)` (x fastest).
//!
//! File layout, all little-endian:
//!
//! | offset | size    | content                  |
//! |--------|---------|--------------------------|
//! | 0      | 4       | magic `S2GF`             |
//! | 4      | 4       | `u32` version, always 1  |
//! | 8      | 4       | `u32` n                  |
//! | 12     | 8       | `f64` lo                 |
//! | 20     | 8       | `f64` hi                 |
//! | 28     | 8·n³    | `f64` values, flat order |

use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::Vec3;

pub const MAGIC: [u8; 4] = *b"S2GF";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 28;

#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn new(lo: f64, hi: f64, n: usize, values: Vec<f64>) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::domain(format!("grid box [{lo}, {hi}] is empty")));
        }
        if n < 2 {
            return Err(Error::domain(format!("grid needs n >= 2, got {n}")));
        }
        if values.len() != n * n * n {
            return Err(Error::domain(format!(
                "grid with n = {n} needs {} values, got {}",
                n * n * n,
                values.len()
            )));
        }
        if let Some(p) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("non-finite grid value at flat index {p}")));
        }
        Ok(GridField { lo, hi, n, values })
    }

    pub fn from_fn(lo: f64, hi: f64, n: usize, f: impl Fn(&Vec3) -> f64 + Sync) -> Result<Self> {
        let h = (hi - lo) / (n.max(2) - 1) as f64;
        let values = (0..n * n * n)
            .into_par_iter()
            .map(|idx| {
                let (i, j, k) = (idx % n, (idx / n) % n, idx / (n * n));
                f(&[lo + h * i as f64, lo + h * j as f64, lo + h * k as f64])
            })
            .collect();
        GridField::new(lo, hi, n, values)
    }

    pub fn h(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n * (j + self.n * k)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        [idx % self.n, (idx / self.n) % self.n, idx / (self.n * self.n)]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.index(i, j, k)]
    }

    pub fn point(&self, i: usize, j: usize, k: usize) -> Vec3 {
        let h = self.h();
        [self.lo + h * i as f64, self.lo + h * j as f64, self.lo + h * k as f64]
    }

    pub fn center(&self) -> Vec3 {
        let c = 0.5 * (self.lo + self.hi);
        [c, c, c]
    }

    pub fn is_boundary(&self, i: usize, j: usize, k: usize) -> bool {
        let m = self.n - 1;
        i == 0 || j == 0 || k == 0 || i == m || j == m || k == m
    }

    /// Distance in cells from node to the nearest face.
    pub fn depth(&self, node: [usize; 3]) -> usize {
        let m = self.n - 1;
        node.iter().map(|&c| c.min(m - c)).min().unwrap()
    }

    /// Largest absolute nodewise difference to another field on the same grid.
    pub fn max_diff(&self, other: &GridField) -> Result<f64> {
        if self.n != other.n || self.lo != other.lo || self.hi != other.hi {
            return Err(Error::domain("grids differ"));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * self.values.len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.n as u32).to_le_bytes());
        out.extend_from_slice(&self.lo.to_le_bytes());
        out.extend_from_slice(&self.hi.to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let bad = |reason: &str| Error::Format {
            path: path.to_path_buf(),
            reason: reason.to_string(),
        };
        if bytes.len() < HEADER_LEN {
            return Err(bad("truncated header"));
        }
        if bytes[0..4] != MAGIC {
            return Err(bad("bad magic"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let version = u32_at(4);
        if version != VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let n = u32_at(8) as usize;
        let (lo, hi) = (f64_at(12), f64_at(20));
        let count = n.checked_pow(3).ok_or_else(|| bad("n too large"))?;
        if bytes.len() != HEADER_LEN + 8 * count {
            return Err(bad(&format!(
                "expected {} bytes for n = {n}, found {}",
                HEADER_LEN + 8 * count,
                bytes.len()
            )));
        }
        let values = (0..count).map(|i| f64_at(HEADER_LEN + 8 * i)).collect();
        GridField::new(lo, hi, n, values).map_err(|e| bad(&e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let io = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut f = std::fs::File::create(path).map_err(io)?;
        f.write_all(&self.to_bytes()).map_err(io)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let io = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(io)?;
        GridField::from_bytes(&bytes, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_x_fastest() {
        let g = GridField::from_fn(0.0, 1.0, 3, |x| x[0] + 10.0 * x[1] + 100.0 * x[2]).unwrap();
        assert_eq!(g.values[1], 0.5);
        assert_eq!(g.values[3], 5.0);
        assert_eq!(g.values[9], 50.0);
        assert_eq!(g.coords(g.index(2, 1, 0)), [2, 1, 0]);
    }

    #[test]
    fn bytes_round_trip_and_header() {
        let g = GridField::from_fn(-1.0, 1.0, 4, |x| x[0] * x[1] - x[2]).unwrap();
        let b = g.to_bytes();
        assert_eq!(&b[0..4], b"S2GF");
        assert_eq!(b.len(), 28 + 8 * 64);
        assert_eq!(GridField::from_bytes(&b, Path::new("mem")).unwrap(), g);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let g = GridField::from_fn(-1.0, 1.0, 3, |x| x[0]).unwrap();
        let mut b = g.to_bytes();
        assert!(matches!(
            GridField::from_bytes(&b[..b.len() - 1], Path::new("x")),
            Err(Error::Format { .. })
        ));
        b[0] = b'X';
        assert!(matches!(
            GridField::from_bytes(&b, Path::new("x")),
            Err(Error::Format { .. })
        ));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("u.s2gf");
        let g = GridField::from_fn(0.0, 2.0, 5, |x| x[0].sin() + x[2]).unwrap();
        g.write(&p).unwrap();
        assert_eq!(GridField::read(&p).unwrap(), g);
        assert!(matches!(
            GridField::read(&dir.path().join("missing")),
            Err(Error::Io { .. })
        ));
    }
}
