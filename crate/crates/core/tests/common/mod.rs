#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qspec_core::operator::{Operator, QuantumState};
use qspec_core::{CMatrix, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> Operator {
    let a = random_matrix(rng, n);
    Operator::new((&a + a.adjoint()) * C64::new(0.5, 0.0)).unwrap()
}

pub fn random_density(rng: &mut ChaCha8Rng, n: usize) -> QuantumState {
    let a = random_matrix(rng, n);
    let m = &a * a.adjoint();
    let t = m.trace();
    QuantumState::density(m / t).unwrap()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
