//! Small fixed-size linear algebra: 3-vectors, 3×3 matrices, symmetric
//! 3×3 matrices and fully symmetric third/fourth order tensors.

use serde::{Deserialize, Serialize};

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

pub const IDENTITY: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn mat_vec(m: &Mat3, v: &Vec3) -> Vec3 {
    [dot(&m[0], v), dot(&m[1], v), dot(&m[2], v)]
}

/// `mᵀ v`
pub fn mat_t_vec(m: &Mat3, v: &Vec3) -> Vec3 {
    let mut out = [0.0; 3];
    for (i, o) in out.iter_mut().enumerate() {
        *o = m[0][i] * v[0] + m[1][i] * v[1] + m[2][i] * v[2];
    }
    out
}

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    c
}

pub fn transpose(a: &Mat3) -> Mat3 {
    let mut t = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = a[j][i];
        }
    }
    t
}

pub fn trace(a: &Mat3) -> f64 {
    a[0][0] + a[1][1] + a[2][2]
}

pub fn max_abs_diff(a: &Mat3, b: &Mat3) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            m = m.max((a[i][j] - b[i][j]).abs());
        }
    }
    m
}

/// Rotation matrix from a unit quaternion-like 4-vector (normalised here).
pub fn rotation_from_quaternion(q: [f64; 4]) -> Mat3 {
    let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    let [w, x, y, z] = [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
    [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ]
}

/// Real symmetric 3×3 matrix stored by its upper triangle.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SymMat3 {
    pub a11: f64,
    pub a22: f64,
    pub a33: f64,
    pub a12: f64,
    pub a13: f64,
    pub a23: f64,
}

impl SymMat3 {
    pub const fn new(a11: f64, a22: f64, a33: f64, a12: f64, a13: f64, a23: f64) -> Self {
        SymMat3 {
            a11,
            a22,
            a33,
            a12,
            a13,
            a23,
        }
    }

    pub const fn diag(d1: f64, d2: f64, d3: f64) -> Self {
        Self::new(d1, d2, d3, 0.0, 0.0, 0.0)
    }

    pub const fn identity() -> Self {
        Self::diag(1.0, 1.0, 1.0)
    }

    pub fn scaled_identity(s: f64) -> Self {
        Self::diag(s, s, s)
    }

    /// Builds from a full matrix, reading the upper triangle only.
    pub fn from_upper(m: &Mat3) -> Self {
        Self::new(m[0][0], m[1][1], m[2][2], m[0][1], m[0][2], m[1][2])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match (i.min(j), i.max(j)) {
            (0, 0) => self.a11,
            (1, 1) => self.a22,
            (2, 2) => self.a33,
            (0, 1) => self.a12,
            (0, 2) => self.a13,
            (1, 2) => self.a23,
            _ => panic!("SymMat3 index ({i}, {j}) out of range"),
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        match (i.min(j), i.max(j)) {
            (0, 0) => self.a11 = v,
            (1, 1) => self.a22 = v,
            (2, 2) => self.a33 = v,
            (0, 1) => self.a12 = v,
            (0, 2) => self.a13 = v,
            (1, 2) => self.a23 = v,
            _ => panic!("SymMat3 index ({i}, {j}) out of range"),
        }
    }

    pub fn to_array(&self) -> Mat3 {
        [
            [self.a11, self.a12, self.a13],
            [self.a12, self.a22, self.a23],
            [self.a13, self.a23, self.a33],
        ]
    }

    pub fn entries(&self) -> [f64; 6] {
        [self.a11, self.a22, self.a33, self.a12, self.a13, self.a23]
    }

    pub fn is_finite(&self) -> bool {
        self.entries().iter().all(|v| v.is_finite())
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22 + self.a33
    }

    pub fn det(&self) -> f64 {
        self.a11 * (self.a22 * self.a33 - self.a23 * self.a23) - self.a12 * (self.a12 * self.a33 - self.a23 * self.a13)
            + self.a13 * (self.a12 * self.a23 - self.a22 * self.a13)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        (self.a11 * self.a11
            + self.a22 * self.a22
            + self.a33 * self.a33
            + 2.0 * (self.a12 * self.a12 + self.a13 * self.a13 + self.a23 * self.a23))
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, s: f64) -> Self {
        let e = self.entries();
        Self::new(e[0] * s, e[1] * s, e[2] * s, e[3] * s, e[4] * s, e[5] * s)
    }

    pub fn add(&self, o: &Self) -> Self {
        let (a, b) = (self.entries(), o.entries());
        Self::new(
            a[0] + b[0],
            a[1] + b[1],
            a[2] + b[2],
            a[3] + b[3],
            a[4] + b[4],
            a[5] + b[5],
        )
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(-1.0))
    }

    /// Frobenius inner product `Σ_ij A_ij B_ij`.
    pub fn contract(&self, o: &Self) -> f64 {
        self.a11 * o.a11
            + self.a22 * o.a22
            + self.a33 * o.a33
            + 2.0 * (self.a12 * o.a12 + self.a13 * o.a13 + self.a23 * o.a23)
    }

    pub fn quad_form(&self, v: &Vec3) -> f64 {
        dot(v, &mat_vec(&self.to_array(), v))
    }

    pub fn mul_vec(&self, v: &Vec3) -> Vec3 {
        mat_vec(&self.to_array(), v)
    }

    /// `Q A Qᵀ`.
    pub fn conjugate(&self, q: &Mat3) -> Self {
        Self::from_upper(&mat_mul(&mat_mul(q, &self.to_array()), &transpose(q)))
    }

    /// `Qᵀ A Q`; expresses `A` in the frame spanned by the columns of `Q`.
    pub fn to_frame(&self, q: &Mat3) -> Self {
        Self::from_upper(&mat_mul(&mat_mul(&transpose(q), &self.to_array()), q))
    }

    pub fn mat_mul(&self, o: &Self) -> Mat3 {
        mat_mul(&self.to_array(), &o.to_array())
    }
}

/// Fully symmetric 3-tensor `T_ijk`, 10 independent components.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sym3Tensor {
    pub c: [f64; 10],
}

fn slot3(i: usize, j: usize, k: usize) -> usize {
    let mut idx = [i, j, k];
    idx.sort_unstable();
    // multisets in lexicographic order
    match idx {
        [0, 0, 0] => 0,
        [0, 0, 1] => 1,
        [0, 0, 2] => 2,
        [0, 1, 1] => 3,
        [0, 1, 2] => 4,
        [0, 2, 2] => 5,
        [1, 1, 1] => 6,
        [1, 1, 2] => 7,
        [1, 2, 2] => 8,
        [2, 2, 2] => 9,
        _ => panic!("Sym3Tensor index ({i}, {j}, {k}) out of range"),
    }
}

fn slot4(i: usize, j: usize, k: usize, l: usize) -> usize {
    let mut idx = [i, j, k, l];
    idx.sort_unstable();
    let n = [
        idx.iter().filter(|&&v| v == 0).count(),
        idx.iter().filter(|&&v| v == 1).count(),
    ];
    // enumerate (n0, n1) with n0 + n1 <= 4 in decreasing n0 order
    let table: [[usize; 5]; 5] = [
        [14, 13, 12, 11, 10],
        [9, 8, 7, 6, usize::MAX],
        [5, 4, 3, usize::MAX, usize::MAX],
        [2, 1, usize::MAX, usize::MAX, usize::MAX],
        [0, usize::MAX, usize::MAX, usize::MAX, usize::MAX],
    ];
    assert!(idx[3] < 3, "Sym4Tensor index out of range");
    table[n[0]][n[1]]
}

impl Sym3Tensor {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c[slot3(i, j, k)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.c[slot3(i, j, k)] = v;
    }

    /// Builds from a generator over sorted index triples.
    pub fn from_fn(mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zero();
        for i in 0..3 {
            for j in i..3 {
                for k in j..3 {
                    t.set(i, j, k, f(i, j, k));
                }
            }
        }
        t
    }

    /// The matrix `(T_kli)_{kl}` for fixed `i`.
    pub fn slice(&self, i: usize) -> SymMat3 {
        SymMat3::new(
            self.get(0, 0, i),
            self.get(1, 1, i),
            self.get(2, 2, i),
            self.get(0, 1, i),
            self.get(0, 2, i),
            self.get(1, 2, i),
        )
    }

    /// Components in the frame spanned by the columns of `q`:
    /// `T'_abc = Q_ia Q_jb Q_kc T_ijk`.
    pub fn to_frame(&self, q: &Mat3) -> Self {
        Self::from_fn(|a, b, c| {
            let mut s = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        s += q[i][a] * q[j][b] * q[k][c] * self.get(i, j, k);
                    }
                }
            }
            s
        })
    }

    /// `T'_abc = Q_ai Q_bj Q_ck T_ijk`.
    pub fn rotate(&self, q: &Mat3) -> Self {
        self.to_frame(&transpose(q))
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Fully symmetric 4-tensor `T_ijkl`, 15 independent components.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sym4Tensor {
    pub c: [f64; 15],
}

impl Sym4Tensor {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.c[slot4(i, j, k, l)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        self.c[slot4(i, j, k, l)] = v;
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zero();
        for i in 0..3 {
            for j in i..3 {
                for k in j..3 {
                    for l in k..3 {
                        t.set(i, j, k, l, f(i, j, k, l));
                    }
                }
            }
        }
        t
    }

    /// The matrix `(T_klij)_{kl}` for fixed `(i, j)`.
    pub fn slice(&self, i: usize, j: usize) -> SymMat3 {
        SymMat3::new(
            self.get(0, 0, i, j),
            self.get(1, 1, i, j),
            self.get(2, 2, i, j),
            self.get(0, 1, i, j),
            self.get(0, 2, i, j),
            self.get(1, 2, i, j),
        )
    }

    pub fn to_frame(&self, q: &Mat3) -> Self {
        Self::from_fn(|a, b, c, d| {
            let mut s = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        let w = q[i][a] * q[j][b] * q[k][c];
                        if w == 0.0 {
                            continue;
                        }
                        for l in 0..3 {
                            s += w * q[l][d] * self.get(i, j, k, l);
                        }
                    }
                }
            }
            s
        })
    }

    pub fn rotate(&self, q: &Mat3) -> Self {
        self.to_frame(&transpose(q))
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}
