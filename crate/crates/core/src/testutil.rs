//! Random operators for unit tests.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::operator::{Hermitian, Operator, QuantumState};
use crate::{CMatrix, CVector, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn symmetric(rng: &mut impl RngCore) -> f64 {
    2.0 * uniform(rng) - 1.0
}

pub fn random_operator(rng: &mut impl RngCore, dim: usize) -> Operator {
    Operator::from_fn(dim, |_, _| C64::new(symmetric(rng), symmetric(rng))).unwrap()
}

pub fn random_hermitian(rng: &mut impl RngCore, dim: usize) -> Hermitian {
    let a = random_operator(rng, dim);
    Hermitian::new(Operator::new((a.matrix() + a.matrix().adjoint()) * C64::new(0.5, 0.0)).unwrap())
        .unwrap()
}

pub fn random_vector(rng: &mut impl RngCore, dim: usize) -> CVector {
    let v = CVector::from_fn(dim, |_, _| C64::new(symmetric(rng), symmetric(rng)));
    let n = v.norm();
    v / C64::new(n, 0.0)
}

pub fn random_density(rng: &mut impl RngCore, dim: usize) -> QuantumState {
    let a = random_operator(rng, dim);
    let m = a.matrix() * a.matrix().adjoint();
    let t = m.trace();
    QuantumState::density(m / t).unwrap()
}

pub fn max_dev(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().fold(0.0, |acc, z| acc.max(z.norm()))
}
