//! 2-Wasserstein distance between Gaussians and empirical moment estimation.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::spd_sqrt;
use crate::posterior::GaussianMoments;
use crate::prior::SampleBatch;

/// W₂ between two Gaussians, split into its mean and trace contributions.
#[derive(Debug, Clone, Copy)]
pub struct W2Result {
    pub distance: f64,
    pub mean_term: f64,
    pub trace_term: f64,
    pub clipped_eigs: usize,
}

fn trace_sqrt(m: &DMatrix<f64>) -> (f64, usize) {
    let sym = (m + m.transpose()) * 0.5;
    let n = sym.nrows();
    let scale = sym.diagonal().iter().sum::<f64>().abs() / n.max(1) as f64;
    let clip_tol = 1e-10 * scale;
    let eig = sym.symmetric_eigenvalues();
    let mut clipped = 0;
    let mut acc = 0.0;
    for &l in eig.iter() {
        if l < -clip_tol {
            clipped += 1;
        } else if l > 0.0 {
            acc += l.sqrt();
        }
    }
    (acc, clipped)
}

/// W₂(N(μ₁,Σ₁), N(μ₂,Σ₂)) = (‖μ₁−μ₂‖² + tr(Σ₁+Σ₂−2(Σ₁^½Σ₂Σ₁^½)^½))^½.
///
/// Negative eigenvalues encountered in the square roots (empirical
/// covariances are often slightly indefinite) are clipped to zero and
/// counted.
pub fn w2_gaussian(m1: &GaussianMoments, m2: &GaussianMoments) -> Result<W2Result> {
    let n = m1.mean.len();
    if m2.mean.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: m2.mean.len(),
        });
    }
    let mean_term = (&m1.mean - &m2.mean).norm_squared();
    let (s1, clip1) = spd_sqrt(&m1.covariance)?;
    // symmetry of m2 is validated the same way the first factor was
    let (_, clip2) = spd_sqrt(&m2.covariance)?;
    let inner = &s1 * &m2.covariance * &s1;
    let (tr_cross, clip3) = trace_sqrt(&inner);
    let raw = m1.covariance.trace() + m2.covariance.trace() - 2.0 * tr_cross;
    let trace_term = raw.max(0.0);
    Ok(W2Result {
        distance: (mean_term + trace_term).sqrt(),
        mean_term,
        trace_term,
        clipped_eigs: clip1 + clip2 + clip3,
    })
}

/// Sample mean and unbiased sample covariance of a replicate matrix
/// (rows = replicates), symmetrized.
pub fn moments_of_values(values: &DMatrix<f64>) -> GaussianMoments {
    let n = values.nrows();
    assert!(n >= 2, "need at least two replicates");
    let m = values.ncols();
    let mean = DVector::from_fn(m, |j, _| values.column(j).mean());
    let mut centered = values.clone();
    for j in 0..m {
        centered.column_mut(j).add_scalar_mut(-mean[j]);
    }
    let cov = centered.tr_mul(&centered) / (n as f64 - 1.0);
    GaussianMoments {
        mean,
        covariance: (&cov + cov.transpose()) * 0.5,
    }
}

/// Moments of a [`SampleBatch`]; errors on fewer than two replicates.
pub fn empirical_moments(batch: &SampleBatch) -> Result<GaussianMoments> {
    if batch.n_samples() < 2 {
        return Err(Error::NotEnoughReplicates {
            min: 2,
            got: batch.n_samples(),
        });
    }
    Ok(moments_of_values(&batch.values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::Method;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;

    fn gm(mean: &[f64], cov: &[f64]) -> GaussianMoments {
        let n = mean.len();
        GaussianMoments {
            mean: DVector::from_row_slice(mean),
            covariance: DMatrix::from_row_slice(n, n, cov),
        }
    }

    fn random_moments(n: usize, rng: &mut impl Rng) -> GaussianMoments {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        GaussianMoments {
            mean: DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5),
            covariance: &a * a.transpose() + DMatrix::identity(n, n) * 0.1,
        }
    }

    #[test]
    fn identical_gaussians_have_zero_distance() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let a = random_moments(4, &mut rng);
        let w = w2_gaussian(&a, &a).unwrap();
        assert!(w.distance < 1e-8, "distance {}", w.distance);
    }

    #[test]
    fn mean_shift_only() {
        let a = gm(&[0.0], &[1.0]);
        let b = gm(&[1.0], &[1.0]);
        let w = w2_gaussian(&a, &b).unwrap();
        assert_relative_eq!(w.distance, 1.0, epsilon = 1e-10);
        assert_relative_eq!(w.mean_term, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn diagonal_closed_form() {
        // √(Σ(√λ1 − √λ2)²) = √((2−1)² + 0) = 1
        let a = gm(&[0.0, 0.0], &[1.0, 0.0, 0.0, 4.0]);
        let b = gm(&[0.0, 0.0], &[1.0, 0.0, 0.0, 1.0]);
        let w = w2_gaussian(&a, &b).unwrap();
        assert_relative_eq!(w.distance, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn distance_decomposition_is_consistent() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let a = random_moments(3, &mut rng);
            let b = random_moments(3, &mut rng);
            let w = w2_gaussian(&a, &b).unwrap();
            assert_relative_eq!(
                w.distance * w.distance,
                w.mean_term + w.trace_term,
                epsilon = 1e-10
            );
            assert!(w.distance >= 0.0);
        }
    }

    #[test]
    fn symmetry_scale_and_triangle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let a = random_moments(3, &mut rng);
            let b = random_moments(3, &mut rng);
            let c = random_moments(3, &mut rng);
            let ab = w2_gaussian(&a, &b).unwrap().distance;
            let ba = w2_gaussian(&b, &a).unwrap().distance;
            assert!((ab - ba).abs() < 1e-8, "asymmetry {}", (ab - ba).abs());

            let ac = w2_gaussian(&a, &c).unwrap().distance;
            let bc = w2_gaussian(&b, &c).unwrap().distance;
            assert!(ac <= ab + bc + 1e-6);

            let s = 3.5;
            let scale = |g: &GaussianMoments| GaussianMoments {
                mean: &g.mean * s,
                covariance: &g.covariance * s * s,
            };
            let scaled = w2_gaussian(&scale(&a), &scale(&b)).unwrap().distance;
            assert_relative_eq!(scaled, s * ab, max_relative = 1e-8);
        }
    }

    #[test]
    fn empirical_moment_examples() {
        let values = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 2.0, 2.0]);
        let m = moments_of_values(&values);
        assert_eq!(m.mean, DVector::from_row_slice(&[1.0, 1.0]));
        assert_eq!(
            m.covariance,
            DMatrix::from_row_slice(2, 2, &[2.0, 2.0, 2.0, 2.0])
        );

        let constant = DMatrix::from_row_slice(3, 1, &[4.0, 4.0, 4.0]);
        let m = moments_of_values(&constant);
        assert_eq!(m.covariance[(0, 0)], 0.0);
    }

    #[test]
    fn empirical_moments_of_standard_normal_draws() {
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let n = 100_000;
        let values = DMatrix::from_fn(n, 1, |_, _| StandardNormal.sample(&mut rng));
        let m = moments_of_values(&values);
        // 4-sigma bounds: mean SE = 1/√n, variance SE ≈ √(2/n)
        assert!(m.mean[0].abs() < 0.013);
        assert!((m.covariance[(0, 0)] - 1.0).abs() < 0.018);
    }

    #[test]
    fn batch_with_one_replicate_is_rejected() {
        let batch = SampleBatch {
            points: vec![vec![0.0]],
            values: DMatrix::from_row_slice(1, 1, &[1.0]),
            seed: 0,
            method: Method::Cholesky,
            flagged: Vec::new(),
            mean_solver_iterations: None,
        };
        assert!(empirical_moments(&batch).is_err());
    }
}
