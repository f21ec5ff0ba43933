//! Shared fixtures for the criterion benchmarks.

use gridgp::rng::{replicate_rng, ChaCha8Rng};
use gridgp::{Observations, ProductKernel, SparseGrid};
use rand::Rng;

pub fn matern32_kernel(d: usize) -> ProductKernel {
    ProductKernel::isotropic(d, 1.0, 3.0_f64.sqrt(), 1.5).unwrap()
}

pub fn unit_grid(eta: u32, d: usize) -> SparseGrid {
    SparseGrid::build_unit(eta, d).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    replicate_rng(seed, u64::MAX - 40)
}

pub fn uniform_points(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| (0..d).map(|_| r.random::<f64>()).collect())
        .collect()
}

pub fn toy_observations(n: usize, d: usize, seed: u64) -> Observations {
    let x = uniform_points(n, d, seed);
    let mut r = rng(seed + 1);
    let y = nalgebra_vector(&x, &mut r);
    Observations::new(x, y, 1e-4).unwrap()
}

fn nalgebra_vector(x: &[Vec<f64>], r: &mut ChaCha8Rng) -> nalgebra::DVector<f64> {
    nalgebra::DVector::from_fn(x.len(), |i, _| {
        (3.0 * x[i][0]).sin() + 0.01 * r.random::<f64>()
    })
}
