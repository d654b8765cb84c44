//! Counter-based random streams: every sample index gets its own ChaCha
//! stream under a common seed, so parallel sampling is order-independent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{rotation_from_quaternion, Mat3, SymMat3, Vec3};
use crate::symfun::EigenTriple;

/// Generator for sample `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform random rotation (normalised Gaussian quaternion).
pub fn random_rotation<R: Rng>(rng: &mut R) -> Mat3 {
    loop {
        let q = [gauss(rng), gauss(rng), gauss(rng), gauss(rng)];
        let n2: f64 = q.iter().map(|v| v * v).sum();
        if n2 > 1e-12 {
            return rotation_from_quaternion(q);
        }
    }
}

pub fn gauss<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Uniform point of the cube `[lo, hi]³`.
pub fn uniform_point<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> Vec3 {
    [0, 1, 2].map(|_| rng.random_range(lo..hi))
}

/// Random eigenvalue triple in Γ₂ with entries of magnitude up to `spread`,
/// by rejection from the cube `[-spread, spread]³`.
pub fn random_gamma2_triple<R: Rng>(rng: &mut R, spread: f64) -> EigenTriple {
    loop {
        let l = EigenTriple::new(
            rng.random_range(-spread..spread),
            rng.random_range(-spread..spread),
            rng.random_range(-spread..spread),
        );
        if l.in_open_cone() {
            return l;
        }
    }
}

/// Random matrix `Q diag(λ) Qᵀ` with `λ ∈ Γ₂`.
pub fn random_gamma2_matrix<R: Rng>(rng: &mut R, spread: f64) -> (SymMat3, EigenTriple) {
    let lam = random_gamma2_triple(rng, spread);
    let q = random_rotation(rng);
    (lam.as_diag().conjugate(&q), lam)
}
