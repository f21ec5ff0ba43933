//! GP posterior sampling: exact conditioning, the exact Matheron update, and
//! the sparse-grid inducing-point posterior solved by preconditioned
//! conjugate gradient.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::grid::SparseGrid;
use crate::kernel::{kernel_matrix, kernel_matrix_symmetric, ProductKernel};
use crate::linalg::{cholesky, JitterPolicy, LowerTriangularFactor};
use crate::prior::{batch_from_draws, InsgInducingSampler, Method, SampleBatch};
use crate::rng::{replicate_rng, standard_normal_vector};
use crate::solver::{build_preconditioner, pcg, Preconditioner, PreconditionerKind, SorOperator};

/// Noisy observations y_i = f(x_i) + ε_i at distinct training points.
#[derive(Debug, Clone)]
pub struct Observations {
    pub x: Vec<Vec<f64>>,
    pub y: DVector<f64>,
    pub noise_variance: f64,
}

impl Observations {
    pub fn new(x: Vec<Vec<f64>>, y: DVector<f64>, noise_variance: f64) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidParameter(
                "need at least one observation".into(),
            ));
        }
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                actual: y.len(),
            });
        }
        if !(noise_variance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise variance must be positive, got {noise_variance}"
            )));
        }
        let mut seen = HashSet::new();
        for p in &x {
            let key: Vec<u64> = p.iter().map(|v| v.to_bits()).collect();
            if !seen.insert(key) {
                return Err(Error::InvalidParameter(format!(
                    "training points must be distinct; {p:?} repeats"
                )));
            }
        }
        Ok(Self {
            x,
            y,
            noise_variance,
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// A mean vector and covariance matrix pair.
#[derive(Debug, Clone)]
pub struct GaussianMoments {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl GaussianMoments {
    pub fn dimension(&self) -> usize {
        self.mean.len()
    }
}

pub type MeanFn<'a> = &'a (dyn Fn(&[f64]) -> f64 + Sync);

fn mean_vector(points: &[Vec<f64>], mean_fn: MeanFn) -> DVector<f64> {
    DVector::from_fn(points.len(), |i, _| mean_fn(&points[i]))
}

fn data_factor(
    kernel: &ProductKernel,
    obs: &Observations,
) -> Result<LowerTriangularFactor> {
    let mut k = kernel_matrix_symmetric(kernel, &obs.x)?;
    for i in 0..obs.len() {
        k[(i, i)] += obs.noise_variance;
    }
    cholesky(&k, &JitterPolicy::none())
}

/// Exact GP posterior mean and covariance at the test points, via a Cholesky
/// factorization of K_XX + σ_ε² I.
pub fn exact_posterior_moments(
    kernel: &ProductKernel,
    obs: &Observations,
    xstar: &[Vec<f64>],
    mean_fn: MeanFn,
) -> Result<GaussianMoments> {
    if xstar.is_empty() {
        return Err(Error::InvalidParameter("need at least one test point".into()));
    }
    let factor = data_factor(kernel, obs)?;
    let k_star_x = kernel_matrix(kernel, xstar, &obs.x)?;
    let k_star_star = kernel_matrix_symmetric(kernel, xstar)?;
    let resid = &obs.y - mean_vector(&obs.x, mean_fn);
    let alpha = factor.solve(&resid);
    let mean = mean_vector(xstar, mean_fn) + &k_star_x * alpha;
    let s = factor.solve_matrix(&k_star_x.transpose());
    let cov = &k_star_star - &k_star_x * s;
    Ok(GaussianMoments {
        mean,
        covariance: (&cov + cov.transpose()) * 0.5,
    })
}

/// Exact posterior sampling through a Cholesky factor of the posterior
/// covariance: f_* | y ← L_{*|X} g + μ_{*|X}.
pub struct CholeskyPosteriorSampler {
    moments: GaussianMoments,
    factor: DMatrix<f64>,
    // pieces for single-point draws
    kernel: ProductKernel,
    x: Vec<Vec<f64>>,
    data: LowerTriangularFactor,
    alpha: DVector<f64>,
    mean_fn: Box<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    seed: u64,
    xstar: Vec<Vec<f64>>,
}

impl CholeskyPosteriorSampler {
    pub fn new(
        kernel: &ProductKernel,
        obs: &Observations,
        xstar: &[Vec<f64>],
        mean_fn: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        seed: u64,
    ) -> Result<Self> {
        let moments = exact_posterior_moments(kernel, obs, xstar, &mean_fn)?;
        let factor = cholesky(&moments.covariance, &JitterPolicy::default())?;
        let data = data_factor(kernel, obs)?;
        let resid = &obs.y - mean_vector(&obs.x, &mean_fn);
        let alpha = data.solve(&resid);
        Ok(Self {
            moments,
            factor: factor.lower().clone(),
            kernel: kernel.clone(),
            x: obs.x.clone(),
            data,
            alpha,
            mean_fn: Box::new(mean_fn),
            seed,
            xstar: xstar.to_vec(),
        })
    }

    pub fn moments(&self) -> &GaussianMoments {
        &self.moments
    }

    pub fn draw(&self, replicate: u64) -> DVector<f64> {
        let mut rng = replicate_rng(self.seed, replicate);
        let g = standard_normal_vector(&mut rng, self.moments.dimension());
        &self.factor * g + &self.moments.mean
    }

    /// Exact posterior draw at a single point; marginal conditioning through
    /// the cached data factor, one normal consumed.
    pub fn draw_at_point(&self, point: &[f64], replicate: u64) -> f64 {
        let mut rng = replicate_rng(self.seed, replicate);
        let k_x = DVector::from_fn(self.x.len(), |i, _| {
            self.kernel.eval_unchecked(point, &self.x[i])
        });
        let mean = (self.mean_fn)(point) + k_x.dot(&self.alpha);
        let w = self.data.solve_lower(&k_x);
        let var = (self.kernel.eval_unchecked(point, point) - w.norm_squared()).max(0.0);
        let g: f64 = StandardNormal.sample(&mut rng);
        mean + var.sqrt() * g
    }

    pub fn sample(&self, n_samples: usize) -> SampleBatch {
        batch_from_draws(&self.xstar, self.seed, Method::Cholesky, n_samples, |k| {
            self.draw(k)
        })
    }
}

/// Exact Matheron update: draw the joint prior (f_X, f_*) densely, then
/// correct by the covariance-weighted innovation
/// f_* + K_{*,X}[K_{X,X} + σ_ε² I]⁻¹ (y − f_X − ε).
pub struct MatheronExactSampler {
    joint_factor: DMatrix<f64>,
    mu_joint: DVector<f64>,
    data: LowerTriangularFactor,
    k_star_x: DMatrix<f64>,
    y: DVector<f64>,
    noise_std: f64,
    n: usize,
    m: usize,
    seed: u64,
    xstar: Vec<Vec<f64>>,
}

impl MatheronExactSampler {
    pub fn new(
        kernel: &ProductKernel,
        obs: &Observations,
        xstar: &[Vec<f64>],
        mean_fn: MeanFn,
        seed: u64,
    ) -> Result<Self> {
        let n = obs.len();
        let m = xstar.len();
        let mut joint = obs.x.clone();
        joint.extend_from_slice(xstar);
        let k_joint = kernel_matrix_symmetric(kernel, &joint)?;
        let joint_factor = cholesky(&k_joint, &JitterPolicy::default())?;
        let data = data_factor(kernel, obs)?;
        let k_star_x = kernel_matrix(kernel, xstar, &obs.x)?;
        Ok(Self {
            joint_factor: joint_factor.lower().clone(),
            mu_joint: mean_vector(&joint, mean_fn),
            data,
            k_star_x,
            y: obs.y.clone(),
            noise_std: obs.noise_variance.sqrt(),
            n,
            m,
            seed,
            xstar: xstar.to_vec(),
        })
    }

    pub fn draw(&self, replicate: u64) -> DVector<f64> {
        let mut rng = replicate_rng(self.seed, replicate);
        let g = standard_normal_vector(&mut rng, self.n + self.m);
        let joint = &self.joint_factor * g + &self.mu_joint;
        let eps = standard_normal_vector(&mut rng, self.n) * self.noise_std;
        let f_x = joint.rows(0, self.n);
        let f_star = joint.rows(self.n, self.m);
        let innovation = &self.y - f_x - eps;
        let alpha = self.data.solve(&innovation);
        f_star + &self.k_star_x * alpha
    }

    pub fn sample(&self, n_samples: usize) -> SampleBatch {
        batch_from_draws(
            &self.xstar,
            self.seed,
            Method::MatheronExact,
            n_samples,
            |k| self.draw(k),
        )
    }
}

/// SoR posterior moments with explicit inducing inputs, via a dense
/// factorization of Σ_U = K_UU + σ_ε⁻² K_UX K_XU. Validation oracle for the
/// sparse-grid posterior; meant for small inducing sets.
pub fn sor_posterior_moments(
    kernel: &ProductKernel,
    obs: &Observations,
    xstar: &[Vec<f64>],
    inducing: &[Vec<f64>],
    mean_fn: MeanFn,
) -> Result<GaussianMoments> {
    let noise_precision = 1.0 / obs.noise_variance;
    let k_uu = kernel_matrix_symmetric(kernel, inducing)?;
    let k_ux = kernel_matrix(kernel, inducing, &obs.x)?;
    let mut sigma = k_uu;
    let k_xu = k_ux.transpose();
    sigma.gemm(noise_precision, &k_ux, &k_xu, 1.0);
    let sigma = (&sigma + sigma.transpose()) * 0.5;
    let factor = cholesky(&sigma, &JitterPolicy::default())?;

    let k_star_u = kernel_matrix(kernel, xstar, inducing)?;
    let resid = &obs.y - mean_vector(&obs.x, mean_fn);
    let z = factor.solve(&(&k_ux * &resid));
    let mean = mean_vector(xstar, mean_fn) + &k_star_u * z * noise_precision;
    let s = factor.solve_matrix(&k_star_u.transpose());
    let cov = &k_star_u * s;
    Ok(GaussianMoments {
        mean,
        covariance: (&cov + cov.transpose()) * 0.5,
    })
}

/// PCG settings for the inducing-point posterior solve.
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub tol: f64,
    /// Defaults to 10·n_sg when unset.
    pub max_iter: Option<usize>,
    pub preconditioner: PreconditionerKind,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: None,
            preconditioner: PreconditionerKind::TwoLevelAdditiveSchwarz,
        }
    }
}

/// Outcome of one replicate's linear solve.
#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub iterations: usize,
    pub converged: bool,
}

/// Sparse-grid inducing-point posterior sampler.
///
/// Per replicate, one Smolyak inducing draw is pushed through K_{X+*,U} to a
/// correlated joint (f_X, f_*); the Matheron innovation y − f_X − ε enters a
/// PCG solve of Σ_U z = K_{U,X}(y − f_X − ε) with a preconditioner built once
/// per dataset, and the replicate returns f_* + σ_ε⁻² K_{*,U} z.
pub struct InsgPosteriorSampler {
    inducing: InsgInducingSampler,
    op: SorOperator,
    /// Dense Σ_U when the grid is small enough; PCG then multiplies the
    /// assembled matrix instead of the operator form.
    sigma_dense: Option<DMatrix<f64>>,
    precond: Preconditioner,
    tol: f64,
    max_iter: usize,
    k_xsu: DMatrix<f64>,
    mu_xs: DVector<f64>,
    y: DVector<f64>,
    noise_std: f64,
    noise_precision: f64,
    n: usize,
    m: usize,
    grid_points: Vec<Vec<f64>>,
    kernel: ProductKernel,
    mean_fn: Box<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    seed: u64,
    xstar: Vec<Vec<f64>>,
}

const DENSE_SIGMA_LIMIT: usize = 2048;

impl InsgPosteriorSampler {
    pub fn new(
        kernel: &ProductKernel,
        obs: &Observations,
        xstar: &[Vec<f64>],
        grid: &SparseGrid,
        mean_fn: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        seed: u64,
        solver: &SolverConfig,
    ) -> Result<Self> {
        let inducing = InsgInducingSampler::new(kernel, grid)?;
        let op = SorOperator::assemble(kernel, grid.clone(), &obs.x, obs.noise_variance)?;
        let sigma_dense = (op.len() <= DENSE_SIGMA_LIMIT).then(|| op.assemble_dense());
        let precond = build_preconditioner(solver.preconditioner, &op)?;
        let grid_points = grid.points_domain();
        let mut joint = obs.x.clone();
        joint.extend_from_slice(xstar);
        let k_xsu = kernel_matrix(kernel, &joint, &grid_points)?;
        let mu_xs = mean_vector(&joint, &mean_fn);
        let max_iter = solver.max_iter.unwrap_or(10 * op.len());
        Ok(Self {
            inducing,
            op,
            sigma_dense,
            precond,
            tol: solver.tol,
            max_iter,
            k_xsu,
            mu_xs,
            y: obs.y.clone(),
            noise_std: obs.noise_variance.sqrt(),
            noise_precision: 1.0 / obs.noise_variance,
            n: obs.len(),
            m: xstar.len(),
            grid_points,
            kernel: kernel.clone(),
            mean_fn: Box::new(mean_fn),
            seed,
            xstar: xstar.to_vec(),
        })
    }

    pub fn n_sg(&self) -> usize {
        self.op.len()
    }

    fn solve(&self, rhs: &DVector<f64>) -> Result<(DVector<f64>, SolveStats)> {
        let res = match &self.sigma_dense {
            Some(m) => pcg(|v| m * v, &self.precond, rhs, self.tol, self.max_iter, None)?,
            None => pcg(
                |v| self.op.apply(v),
                &self.precond,
                rhs,
                self.tol,
                self.max_iter,
                None,
            )?,
        };
        Ok((
            res.x,
            SolveStats {
                iterations: res.iterations,
                converged: res.converged,
            },
        ))
    }

    /// Shared per-replicate randomness: the inducing draw, then the noise.
    fn replicate_noise(&self, replicate: u64) -> (DVector<f64>, DVector<f64>) {
        let mut rng = replicate_rng(self.seed, replicate);
        let w = self.inducing.draw(&mut rng);
        let eps = standard_normal_vector(&mut rng, self.n) * self.noise_std;
        (w, eps)
    }

    pub fn draw(&self, replicate: u64) -> Result<(DVector<f64>, SolveStats)> {
        let (w, eps) = self.replicate_noise(replicate);
        let f_joint = &self.k_xsu * &w + &self.mu_xs;
        let innovation = &self.y - f_joint.rows(0, self.n) - eps;
        let rhs = self.k_xsu.rows(0, self.n).tr_mul(&innovation);
        let (z, stats) = self.solve(&rhs)?;
        let f_star =
            f_joint.rows(self.n, self.m) + self.k_xsu.rows(self.n, self.m) * z * self.noise_precision;
        Ok((f_star, stats))
    }

    /// Posterior draw at one arbitrary point, reusing the cached training
    /// block of the joint map.
    pub fn draw_at_point(&self, point: &[f64], replicate: u64) -> Result<(f64, SolveStats)> {
        let (w, eps) = self.replicate_noise(replicate);
        let k_pu = DVector::from_fn(self.grid_points.len(), |i, _| {
            self.kernel.eval_unchecked(point, &self.grid_points[i])
        });
        let f_x = self.k_xsu.rows(0, self.n) * &w + self.mu_xs.rows(0, self.n);
        let f_p = k_pu.dot(&w) + (self.mean_fn)(point);
        let innovation = &self.y - f_x - eps;
        let rhs = self.k_xsu.rows(0, self.n).tr_mul(&innovation);
        let (z, stats) = self.solve(&rhs)?;
        Ok((f_p + self.noise_precision * k_pu.dot(&z), stats))
    }

    pub fn sample(&self, n_samples: usize) -> Result<SampleBatch> {
        let mut values = DMatrix::zeros(n_samples, self.m);
        let mut flagged = Vec::new();
        let mut total_iters = 0usize;
        for k in 0..n_samples {
            let (row, stats) = self.draw(k as u64)?;
            values.row_mut(k).copy_from(&row.transpose());
            total_iters += stats.iterations;
            if !stats.converged {
                flagged.push(k as u64);
            }
        }
        Ok(SampleBatch {
            points: self.xstar.clone(),
            values,
            seed: self.seed,
            method: Method::Insg,
            flagged,
            mean_solver_iterations: Some(total_iters as f64 / n_samples.max(1) as f64),
        })
    }
}

/// Exact posterior draws via the Cholesky factor of the posterior covariance.
pub fn sample_posterior_cholesky(
    kernel: &ProductKernel,
    obs: &Observations,
    xstar: &[Vec<f64>],
    seed: u64,
    n_samples: usize,
) -> Result<SampleBatch> {
    Ok(CholeskyPosteriorSampler::new(kernel, obs, xstar, |_| 0.0, seed)?.sample(n_samples))
}

/// Exact posterior draws via Matheron's rule on a dense joint prior.
pub fn sample_posterior_matheron_exact(
    kernel: &ProductKernel,
    obs: &Observations,
    xstar: &[Vec<f64>],
    seed: u64,
    n_samples: usize,
) -> Result<SampleBatch> {
    Ok(MatheronExactSampler::new(kernel, obs, xstar, &|_| 0.0, seed)?.sample(n_samples))
}

/// Sparse-grid inducing-point posterior draws.
pub fn sample_posterior_insg(
    kernel: &ProductKernel,
    obs: &Observations,
    xstar: &[Vec<f64>],
    grid: &SparseGrid,
    seed: u64,
    n_samples: usize,
    solver: &SolverConfig,
) -> Result<SampleBatch> {
    InsgPosteriorSampler::new(kernel, obs, xstar, grid, |_| 0.0, seed, solver)?.sample(n_samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::moments_of_values;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn zero(_: &[f64]) -> f64 {
        0.0
    }

    fn uniform_points(n: usize, d: usize, lo: f64, hi: f64, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = replicate_rng(seed, u64::MAX);
        (0..n)
            .map(|_| (0..d).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect())
            .collect()
    }

    fn toy_problem(n: usize, seed: u64) -> (ProductKernel, Observations) {
        let kernel = ProductKernel::isotropic(2, 1.0, 3.0_f64.sqrt(), 1.5).unwrap();
        let x = uniform_points(n, 2, 0.0, 1.0, seed);
        let mut rng = replicate_rng(seed, u64::MAX - 1);
        let y = DVector::from_fn(n, |i, _| (x[i][0] * 3.0).sin() + 0.01 * rng.random::<f64>());
        (kernel, Observations::new(x, y, 1e-4).unwrap())
    }

    #[test]
    fn observations_reject_duplicates_and_bad_noise() {
        let x = vec![vec![0.1, 0.2], vec![0.1, 0.2]];
        let y = DVector::from_row_slice(&[1.0, 2.0]);
        assert!(Observations::new(x, y.clone(), 1e-4).is_err());
        let x = vec![vec![0.1, 0.2], vec![0.3, 0.4]];
        assert!(Observations::new(x, y, 0.0).is_err());
    }

    #[test]
    fn huge_noise_recovers_the_prior() {
        let (kernel, mut obs) = toy_problem(8, 1);
        obs.noise_variance = 1e8;
        let xstar = uniform_points(4, 2, 0.0, 1.0, 2);
        let m = exact_posterior_moments(&kernel, &obs, &xstar, &zero).unwrap();
        let prior = kernel_matrix_symmetric(&kernel, &xstar).unwrap();
        assert!(m.mean.norm() < 1e-3);
        let rel = (&m.covariance - &prior).norm() / prior.norm();
        assert!(rel < 1e-6, "relative deviation from prior {rel}");
    }

    #[test]
    fn tiny_noise_interpolates() {
        let (kernel, mut obs) = toy_problem(8, 3);
        obs.noise_variance = 1e-12;
        let xstar = obs.x.clone();
        let m = exact_posterior_moments(&kernel, &obs, &xstar, &zero).unwrap();
        let err = (&m.mean - &obs.y).amax();
        assert!(err < 1e-4, "interpolation error {err}");
    }

    #[test]
    fn posterior_covariance_is_psd_and_dominated_by_prior() {
        let (kernel, obs) = toy_problem(8, 4);
        let xstar = uniform_points(4, 2, 0.0, 1.0, 5);
        let m = exact_posterior_moments(&kernel, &obs, &xstar, &zero).unwrap();
        let prior = kernel_matrix_symmetric(&kernel, &xstar).unwrap();
        let eig_post = m.covariance.clone().symmetric_eigenvalues();
        assert!(eig_post.min() > -1e-8);
        let gap = (&prior - &m.covariance).symmetric_eigenvalues();
        assert!(gap.min() > -1e-8, "prior must dominate: {}", gap.min());
    }

    #[test]
    fn cholesky_posterior_single_point_moments() {
        let (kernel, obs) = toy_problem(8, 6);
        let xstar = vec![vec![0.35, 0.62]];
        let sampler = CholeskyPosteriorSampler::new(&kernel, &obs, &xstar, zero, 99).unwrap();
        let batch = sampler.sample(10_000);
        let m = moments_of_values(&batch.values);
        let target = sampler.moments();
        let se_mean = (target.covariance[(0, 0)] / 10_000.0).sqrt();
        assert!((m.mean[0] - target.mean[0]).abs() < 5.0 * se_mean);
        let se_var = target.covariance[(0, 0)] * (2.0f64 / 10_000.0).sqrt();
        assert!((m.covariance[(0, 0)] - target.covariance[(0, 0)]).abs() < 5.0 * se_var);
    }

    #[test]
    fn cholesky_posterior_matches_exact_moments() {
        let (kernel, obs) = toy_problem(12, 7);
        let xstar = uniform_points(5, 2, 0.0, 1.0, 8);
        let sampler = CholeskyPosteriorSampler::new(&kernel, &obs, &xstar, zero, 99).unwrap();
        let batch = sampler.sample(10_000);
        let m = moments_of_values(&batch.values);
        let t = sampler.moments();
        for i in 0..5 {
            let se = (t.covariance[(i, i)] / 10_000.0).sqrt();
            assert!((m.mean[i] - t.mean[i]).abs() < 5.0 * se, "mean {i}");
        }
    }

    #[test]
    fn draw_at_point_matches_full_draw_statistics() {
        let (kernel, obs) = toy_problem(12, 9);
        let xstar = vec![vec![0.5, 0.5]];
        let sampler = CholeskyPosteriorSampler::new(&kernel, &obs, &xstar, zero, 99).unwrap();
        let n = 4000;
        let mut acc = 0.0;
        let mut acc2 = 0.0;
        for k in 0..n {
            let v = sampler.draw_at_point(&[0.5, 0.5], k);
            acc += v;
            acc2 += v * v;
        }
        let mean = acc / n as f64;
        let var = acc2 / n as f64 - mean * mean;
        let t = sampler.moments();
        assert!((mean - t.mean[0]).abs() < 5.0 * (t.covariance[(0, 0)] / n as f64).sqrt());
        assert!((var - t.covariance[(0, 0)]).abs() < 5.0 * t.covariance[(0, 0)] * (2.0 / n as f64).sqrt());
    }

    #[test]
    fn matheron_pushforward_identity() {
        // deterministic matrix identity: propagating the joint prior through
        // the affine update reproduces the conditional moments
        let kernel = ProductKernel::isotropic(2, 1.0, 3.0_f64.sqrt(), 1.5).unwrap();
        let x = uniform_points(16, 2, 0.0, 1.0, 10);
        let xstar = uniform_points(8, 2, 0.0, 1.0, 11);
        let noise = 1e-4;
        let k_xx = kernel_matrix_symmetric(&kernel, &x).unwrap();
        let k_sx = kernel_matrix(&kernel, &xstar, &x).unwrap();
        let k_ss = kernel_matrix_symmetric(&kernel, &xstar).unwrap();
        let mut reg = k_xx.clone();
        for i in 0..16 {
            reg[(i, i)] += noise;
        }
        let factor = cholesky(&reg, &JitterPolicy::none()).unwrap();
        // A = K_{*X}(K_XX+σ²I)^{-1} as Sᵀ with S the factored solve
        let s = factor.solve_matrix(&k_sx.transpose());
        let a = s.transpose();
        // pushforward covariance: K_** + A(K_XX+σ²I)Aᵀ − A K_X* − K_*X Aᵀ
        let pushed =
            &k_ss + &a * &reg * a.transpose() - &a * k_sx.transpose() - &k_sx * a.transpose();
        let conditional = &k_ss - &k_sx * &s;
        let rel = (&pushed - &conditional).norm() / conditional.norm();
        assert!(rel < 1e-10, "relative error {rel}");
    }

    #[test]
    fn matheron_zero_innovation_returns_prior_draw() {
        let (kernel, obs) = toy_problem(6, 12);
        let xstar = uniform_points(3, 2, 0.0, 1.0, 13);
        let seed = 99;
        let sampler = MatheronExactSampler::new(&kernel, &obs, &xstar, &zero, seed).unwrap();
        // reproduce replicate 0's joint draw and noise through the same stream
        let mut rng = replicate_rng(seed, 0);
        let g = standard_normal_vector(&mut rng, 6 + 3);
        let joint = &sampler.joint_factor * g + &sampler.mu_joint;
        let eps = standard_normal_vector(&mut rng, 6) * sampler.noise_std;
        let y = joint.rows(0, 6) + eps;
        let obs2 = Observations::new(obs.x.clone(), y.clone(), obs.noise_variance).unwrap();
        let sampler2 = MatheronExactSampler::new(&kernel, &obs2, &xstar, &zero, seed).unwrap();
        let out = sampler2.draw(0);
        let expected = joint.rows(6, 3);
        assert_relative_eq!(out, expected.into_owned(), epsilon = 1e-8);
    }

    #[test]
    fn matheron_empirical_moments_match_exact_posterior() {
        let (kernel, obs) = toy_problem(8, 14);
        let xstar = uniform_points(4, 2, 0.0, 1.0, 15);
        let batch = sample_posterior_matheron_exact(&kernel, &obs, &xstar, 99, 10_000).unwrap();
        let m = moments_of_values(&batch.values);
        let t = exact_posterior_moments(&kernel, &obs, &xstar, &zero).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let se = ((t.covariance[(i, i)] * t.covariance[(j, j)]
                    + t.covariance[(i, j)].powi(2))
                    / 9_999.0)
                    .sqrt();
                assert!(
                    (m.covariance[(i, j)] - t.covariance[(i, j)]).abs() < 5.0 * se,
                    "covariance entry ({i},{j})"
                );
            }
        }
        for i in 0..4 {
            let se = (t.covariance[(i, i)] / 10_000.0).sqrt();
            assert!((m.mean[i] - t.mean[i]).abs() < 5.0 * se, "mean {i}");
        }
    }

    #[test]
    fn sor_with_training_inducing_points_matches_exact_mean() {
        let (kernel, obs) = toy_problem(16, 16);
        let xstar = uniform_points(6, 2, 0.0, 1.0, 17);
        let sor = sor_posterior_moments(&kernel, &obs, &xstar, &obs.x, &zero).unwrap();
        let exact = exact_posterior_moments(&kernel, &obs, &xstar, &zero).unwrap();
        let err = (&sor.mean - &exact.mean).amax();
        assert!(err < 1e-8, "mean deviation {err}");
    }

    #[test]
    fn sor_large_noise_mean_collapses_to_prior_mean() {
        let (kernel, mut obs) = toy_problem(8, 18);
        obs.noise_variance = 1e10;
        let xstar = uniform_points(3, 2, 0.0, 1.0, 19);
        let grid = SparseGrid::build_unit(4, 2).unwrap();
        let sor =
            sor_posterior_moments(&kernel, &obs, &xstar, &grid.points_domain(), &zero).unwrap();
        assert!(sor.mean.norm() < 1e-4);
        let eig = sor.covariance.clone().symmetric_eigenvalues();
        assert!(eig.min() > -1e-10);
    }

    #[test]
    fn insg_posterior_matches_sor_oracle_moments() {
        let (kernel, obs) = toy_problem(64, 20);
        let xstar = uniform_points(6, 2, 0.0, 1.0, 21);
        let grid = SparseGrid::build_unit(4, 2).unwrap();
        let solver = SolverConfig {
            tol: 1e-10,
            ..SolverConfig::default()
        };
        let batch =
            sample_posterior_insg(&kernel, &obs, &xstar, &grid, 99, 10_000, &solver).unwrap();
        assert!(batch.flagged.is_empty());
        let m = moments_of_values(&batch.values);
        let t = sor_posterior_moments(&kernel, &obs, &xstar, &grid.points_domain(), &zero).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let se = ((t.covariance[(i, i)] * t.covariance[(j, j)]
                    + t.covariance[(i, j)].powi(2))
                    / 9_999.0)
                    .sqrt();
                assert!(
                    (m.covariance[(i, j)] - t.covariance[(i, j)]).abs() < 5.0 * se,
                    "covariance entry ({i},{j})"
                );
            }
        }
        for i in 0..6 {
            let se = (t.covariance[(i, i)] / 10_000.0).sqrt().max(1e-12);
            assert!((m.mean[i] - t.mean[i]).abs() < 5.0 * se, "mean {i}");
        }
    }

    #[test]
    fn insg_zero_innovation_passes_prior_through() {
        let kernel = ProductKernel::isotropic(2, 1.0, 3.0_f64.sqrt(), 1.5).unwrap();
        let x = uniform_points(10, 2, 0.0, 1.0, 22);
        let xstar = uniform_points(4, 2, 0.0, 1.0, 23);
        let grid = SparseGrid::build_unit(4, 2).unwrap();
        let seed = 99;
        let solver = SolverConfig {
            tol: 1e-10,
            ..SolverConfig::default()
        };
        // reconstruct replicate 0's inducing draw and noise
        let inducing = InsgInducingSampler::new(&kernel, &grid).unwrap();
        let mut rng = replicate_rng(seed, 0);
        let w = inducing.draw(&mut rng);
        let eps = standard_normal_vector(&mut rng, 10) * 1e-2;
        let k_xu = kernel_matrix(&kernel, &x, &grid.points_domain()).unwrap();
        let k_su = kernel_matrix(&kernel, &xstar, &grid.points_domain()).unwrap();
        let y = &k_xu * &w + eps;
        let obs = Observations::new(x, y, 1e-4).unwrap();
        let sampler =
            InsgPosteriorSampler::new(&kernel, &obs, &xstar, &grid, zero, seed, &solver).unwrap();
        let (out, stats) = sampler.draw(0).unwrap();
        assert!(stats.converged);
        let expected = &k_su * &w;
        let err = (&out - &expected).amax();
        assert!(err < 10.0 * solver.tol, "deviation {err}");
    }

    #[test]
    fn insg_draw_at_point_agrees_with_full_draw() {
        let (kernel, obs) = toy_problem(12, 24);
        let xstar = vec![vec![0.3, 0.8]];
        let grid = SparseGrid::build_unit(4, 2).unwrap();
        let solver = SolverConfig {
            tol: 1e-10,
            ..SolverConfig::default()
        };
        let sampler =
            InsgPosteriorSampler::new(&kernel, &obs, &xstar, &grid, zero, 99, &solver).unwrap();
        for k in 0..5 {
            let (full, _) = sampler.draw(k).unwrap();
            let (single, _) = sampler.draw_at_point(&[0.3, 0.8], k).unwrap();
            assert_relative_eq!(full[0], single, epsilon = 1e-9);
        }
    }

    #[test]
    fn posterior_determinism() {
        let (kernel, obs) = toy_problem(8, 25);
        let xstar = uniform_points(3, 2, 0.0, 1.0, 26);
        let grid = SparseGrid::build_unit(4, 2).unwrap();
        let solver = SolverConfig::default();
        let a = sample_posterior_insg(&kernel, &obs, &xstar, &grid, 7, 4, &solver).unwrap();
        let b = sample_posterior_insg(&kernel, &obs, &xstar, &grid, 7, 4, &solver).unwrap();
        assert_eq!(a.values, b.values);
        let c = sample_posterior_cholesky(&kernel, &obs, &xstar, 7, 4).unwrap();
        let d = sample_posterior_cholesky(&kernel, &obs, &xstar, 7, 4).unwrap();
        assert_eq!(c.values, d.values);
    }
}
