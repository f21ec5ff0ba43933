//! The five experiment commands.

pub mod fitzhugh;
pub mod posterior;
pub mod precond;
pub mod prior;
pub mod thompson;

use gridgp::posterior::GaussianMoments;
use gridgp::rng::{replicate_rng, ChaCha8Rng};
use nalgebra::DMatrix;
use rand::Rng;

pub fn uniform_points(
    rng: &mut ChaCha8Rng,
    n: usize,
    domain: &[(f64, f64)],
) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            domain
                .iter()
                .map(|&(a, b)| a + (b - a) * rng.random::<f64>())
                .collect()
        })
        .collect()
}

pub fn median(mut v: Vec<f64>) -> f64 {
    assert!(!v.is_empty());
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Monte-Carlo floor for W₂ accuracy claims: two independent batches of the
/// same size are drawn from the oracle Gaussian and compared; a finite
/// replicate count can never do better than this scale.
pub fn w2_resampling_floor(
    oracle: &GaussianMoments,
    replicates: usize,
    seed: u64,
) -> gridgp::Result<f64> {
    let factor = gridgp::cholesky(&oracle.covariance, &gridgp::JitterPolicy::default())?;
    let m = oracle.dimension();
    let batch = |tag: u64| {
        let mut values = DMatrix::zeros(replicates, m);
        for k in 0..replicates {
            let mut rng = replicate_rng(seed ^ (tag << 32), k as u64);
            let g = gridgp::rng::standard_normal_vector(&mut rng, m);
            let row = factor.lower() * g + &oracle.mean;
            values.row_mut(k).copy_from(&row.transpose());
        }
        gridgp::metrics::moments_of_values(&values)
    };
    let a = batch(0xF100);
    let b = batch(0xF200);
    Ok(gridgp::w2_gaussian(&a, &b)?.distance)
}
