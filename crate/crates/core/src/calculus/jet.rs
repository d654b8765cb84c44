use serde::{Deserialize, Serialize};

use crate::linalg::{mat_vec, Mat3, Sym3Tensor, Sym4Tensor, SymMat3, Vec3};

/// Derivatives of `u` at a point up to order three, with the fourth order
/// when the source can supply it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Jet3 {
    pub x: Vec3,
    pub u: f64,
    pub du: Vec3,
    pub d2u: SymMat3,
    pub d3u: Sym3Tensor,
    pub d4u: Option<Sym4Tensor>,
}

impl Jet3 {
    /// Jet of `y ↦ u(qᵀy)` at `y = q x`.
    pub fn rotate(&self, q: &Mat3) -> Jet3 {
        Jet3 {
            x: mat_vec(q, &self.x),
            u: self.u,
            du: mat_vec(q, &self.du),
            d2u: self.d2u.conjugate(q),
            d3u: self.d3u.rotate(q),
            d4u: self.d4u.as_ref().map(|t| t.rotate(q)),
        }
    }

    /// The same derivatives expressed in the orthonormal frame whose axes are
    /// the columns of `q`.
    pub fn to_frame(&self, q: &Mat3) -> Jet3 {
        self.rotate(&crate::linalg::transpose(q))
    }

    pub fn laplacian(&self) -> f64 {
        self.d2u.trace()
    }

    /// `(Δu)_i = Σ_k u_kki`.
    pub fn grad_laplacian(&self) -> Vec3 {
        [0, 1, 2].map(|i| self.d3u.slice(i).trace())
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.du).all(|v| v.is_finite())
            && self.u.is_finite()
            && self.d2u.is_finite()
            && self.d3u.max_abs().is_finite()
            && self.d4u.as_ref().is_none_or(|t| t.max_abs().is_finite())
    }
}
