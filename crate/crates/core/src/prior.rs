//! GP prior samplers: dense Cholesky, sparse-grid inducing points (InSG),
//! and a random Fourier features baseline.

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StudentT, Uniform};

use crate::error::{Error, Result};
use crate::grid::{smolyak_coefficient, SparseGrid};
use crate::kernel::{kernel_matrix, kernel_matrix_symmetric, ProductKernel};
use crate::linalg::{cholesky, inverse_covariance_factor, JitterPolicy, KroneckerFactors};
use crate::rng::{replicate_rng, standard_normal_vector};

/// Which sampler produced a batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Cholesky,
    Insg,
    Rff,
    MatheronExact,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Cholesky => "chol",
            Method::Insg => "insg",
            Method::Rff => "rff",
            Method::MatheronExact => "matheron-exact",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chol" | "cholesky" => Ok(Method::Cholesky),
            "insg" => Ok(Method::Insg),
            "rff" => Ok(Method::Rff),
            "matheron-exact" | "matheron" => Ok(Method::MatheronExact),
            other => Err(Error::InvalidParameter(format!("unknown method '{other}'"))),
        }
    }
}

/// A matrix of replicate draws at a fixed point set.
///
/// Row k is replicate k; rows are bit-identical across runs for the same
/// (seed, replicate index).
#[derive(Debug, Clone)]
pub struct SampleBatch {
    pub points: Vec<Vec<f64>>,
    /// n_samples × n_points.
    pub values: DMatrix<f64>,
    pub seed: u64,
    pub method: Method,
    /// Replicates whose linear solve did not converge.
    pub flagged: Vec<u64>,
    /// Mean PCG iterations per replicate, when a solver was involved.
    pub mean_solver_iterations: Option<f64>,
}

impl SampleBatch {
    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_points(&self) -> usize {
        self.values.ncols()
    }
}

fn mean_vector(points: &[Vec<f64>], mean_fn: &dyn Fn(&[f64]) -> f64) -> DVector<f64> {
    DVector::from_fn(points.len(), |i, _| mean_fn(&points[i]))
}

/// Exact prior sampling through a dense Cholesky factor of K(Z, Z).
pub struct CholeskyPriorSampler {
    points: Vec<Vec<f64>>,
    factor: DMatrix<f64>,
    mean: DVector<f64>,
    seed: u64,
}

impl CholeskyPriorSampler {
    pub fn new(
        kernel: &ProductKernel,
        points: &[Vec<f64>],
        mean_fn: &dyn Fn(&[f64]) -> f64,
        seed: u64,
    ) -> Result<Self> {
        let k = kernel_matrix_symmetric(kernel, points)?;
        let factor = cholesky(&k, &JitterPolicy::default())?;
        Ok(Self {
            points: points.to_vec(),
            factor: factor.lower().clone(),
            mean: mean_vector(points, mean_fn),
            seed,
        })
    }

    /// One replicate: L_Z g + μ_Z.
    pub fn draw(&self, replicate: u64) -> DVector<f64> {
        let mut rng = replicate_rng(self.seed, replicate);
        let g = standard_normal_vector(&mut rng, self.points.len());
        &self.factor * g + &self.mean
    }

    pub fn sample(&self, n_samples: usize) -> SampleBatch {
        batch_from_draws(
            &self.points,
            self.seed,
            Method::Cholesky,
            n_samples,
            |k| self.draw(k),
        )
    }
}

pub(crate) fn batch_from_draws(
    points: &[Vec<f64>],
    seed: u64,
    method: Method,
    n_samples: usize,
    draw: impl Fn(u64) -> DVector<f64>,
) -> SampleBatch {
    let n_pts = points.len();
    let mut values = DMatrix::zeros(n_samples, n_pts);
    for k in 0..n_samples {
        let row = draw(k as u64);
        values.row_mut(k).copy_from(&row.transpose());
    }
    SampleBatch {
        points: points.to_vec(),
        values,
        seed,
        method,
        flagged: Vec::new(),
        mean_solver_iterations: None,
    }
}

/// Draws inducing vectors w with covariance K(U,U)⁻¹ over a sparse grid.
///
/// One standard-normal value is attached to every grid point; each Smolyak
/// term gathers that shared noise on its subgrid, applies the Kronecker
/// factor ⊗_j L_{j,t_j}⁻ᵀ of the per-dimension inverse correlation matrices
/// (points in nested order, so the factors of consecutive levels extend each
/// other), and scatters back with the combination coefficient. With this
/// coupling the combined map A satisfies A Aᵀ = K₀(U,U)⁻¹ exactly, so a draw
/// is a genuine N(0, K(U,U)⁻¹) sample rather than an approximation.
pub struct InsgInducingSampler {
    n_sg: usize,
    inv_sigma: f64,
    terms: Vec<SmolyakTerm>,
}

struct SmolyakTerm {
    coeff: f64,
    positions: Vec<usize>,
    factors: KroneckerFactors,
}

impl InsgInducingSampler {
    pub fn new(kernel: &ProductKernel, grid: &SparseGrid) -> Result<Self> {
        let d = grid.dimension();
        if kernel.dimension() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: kernel.dimension(),
            });
        }
        let policy = JitterPolicy::default();
        // factors are shared across multi-indices with a common (dim, level)
        let mut cache: std::collections::HashMap<(usize, u32), DMatrix<f64>> =
            std::collections::HashMap::new();
        let mut factor = |j: usize, t: u32, kernel: &ProductKernel| -> Result<DMatrix<f64>> {
            if let Some(b) = cache.get(&(j, t)) {
                return Ok(b.clone());
            }
            let pts = grid.axis_points_nested(j, t);
            let params = kernel.per_dim()[j];
            let n = pts.len();
            let k0 = DMatrix::from_fn(n, n, |a, b| params.eval(pts[a], pts[b]));
            let b = inverse_covariance_factor(&k0, &policy)?;
            cache.insert((j, t), b.clone());
            Ok(b)
        };

        let eta = grid.level();
        let mut terms = Vec::with_capacity(grid.smolyak_indices().len());
        for t in grid.smolyak_indices() {
            let coeff = smolyak_coefficient(t, eta, d) as f64;
            let positions = grid.scatter_indices(t)?.to_vec();
            let factors = t
                .levels()
                .iter()
                .enumerate()
                .map(|(j, &tj)| factor(j, tj, kernel))
                .collect::<Result<Vec<_>>>()?;
            terms.push(SmolyakTerm {
                coeff,
                positions,
                factors: KroneckerFactors::new(factors),
            });
        }
        Ok(Self {
            n_sg: grid.len(),
            inv_sigma: 1.0 / kernel.variance().sqrt(),
            terms,
        })
    }

    pub fn n_sg(&self) -> usize {
        self.n_sg
    }

    /// One inducing draw w ~ N(0, K(U,U)⁻¹); consumes n_sg normals.
    pub fn draw(&self, rng: &mut ChaCha8Rng) -> DVector<f64> {
        let gamma = standard_normal_vector(rng, self.n_sg);
        let mut w = DVector::zeros(self.n_sg);
        let mut gathered = Vec::new();
        for term in &self.terms {
            gathered.clear();
            gathered.extend(term.positions.iter().map(|&p| gamma[p]));
            let u = term
                .factors
                .matvec(&gathered)
                .expect("scatter map length matches the Kronecker factor size");
            for (&p, &v) in term.positions.iter().zip(&u) {
                w[p] += term.coeff * v;
            }
        }
        w * self.inv_sigma
    }
}

/// Sparse-grid inducing-point prior sampler: f_Z ← K_{Z,U} w + μ_Z with
/// w ~ N(0, K_{U,U}⁻¹), so draws carry the SoR covariance
/// K_{Z,U} K_{U,U}⁻¹ K_{U,Z}.
pub struct InsgPriorSampler {
    inducing: InsgInducingSampler,
    k_zu: DMatrix<f64>,
    points: Vec<Vec<f64>>,
    mean: DVector<f64>,
    seed: u64,
}

impl InsgPriorSampler {
    pub fn new(
        kernel: &ProductKernel,
        points: &[Vec<f64>],
        grid: &SparseGrid,
        mean_fn: &dyn Fn(&[f64]) -> f64,
        seed: u64,
    ) -> Result<Self> {
        let inducing = InsgInducingSampler::new(kernel, grid)?;
        let k_zu = kernel_matrix(kernel, points, &grid.points_domain())?;
        Ok(Self {
            inducing,
            k_zu,
            points: points.to_vec(),
            mean: mean_vector(points, mean_fn),
            seed,
        })
    }

    pub fn draw(&self, replicate: u64) -> DVector<f64> {
        let mut rng = replicate_rng(self.seed, replicate);
        let w = self.inducing.draw(&mut rng);
        &self.k_zu * w + &self.mean
    }

    pub fn sample(&self, n_samples: usize) -> SampleBatch {
        batch_from_draws(&self.points, self.seed, Method::Insg, n_samples, |k| {
            self.draw(k)
        })
    }
}

/// Random Fourier feature frequencies and phases for one replicate.
#[derive(Debug, Clone)]
pub struct RffFeatures {
    /// F × d frequency matrix.
    pub frequencies: DMatrix<f64>,
    /// F phases in [0, 2π).
    pub phases: DVector<f64>,
}

/// Weightless random-phase Fourier sampler for product Matérn kernels.
///
/// Frequencies are redrawn per replicate from the product spectral measure
/// (per dimension a Student-t with 2ν degrees of freedom scaled by 1/ω), so
/// the cross-replicate covariance equals the kernel for any feature count.
pub struct RffPriorSampler {
    points: Vec<Vec<f64>>,
    mean: DVector<f64>,
    sigma: f64,
    spectral: Vec<(f64, f64)>, // (2ν, 1/ω) per dimension
    n_features: usize,
    seed: u64,
}

impl RffPriorSampler {
    pub fn new(
        kernel: &ProductKernel,
        points: &[Vec<f64>],
        mean_fn: &dyn Fn(&[f64]) -> f64,
        n_features: usize,
        seed: u64,
    ) -> Result<Self> {
        if n_features < 1 {
            return Err(Error::InvalidParameter(
                "need at least one Fourier feature".into(),
            ));
        }
        for p in points {
            if p.len() != kernel.dimension() {
                return Err(Error::DimensionMismatch {
                    expected: kernel.dimension(),
                    actual: p.len(),
                });
            }
        }
        let spectral = kernel
            .per_dim()
            .iter()
            .map(|p| (2.0 * p.smoothness, 1.0 / p.lengthscale))
            .collect();
        Ok(Self {
            points: points.to_vec(),
            mean: mean_vector(points, mean_fn),
            sigma: kernel.variance().sqrt(),
            spectral,
            n_features,
            seed,
        })
    }

    pub fn draw_features(&self, rng: &mut ChaCha8Rng) -> RffFeatures {
        let d = self.spectral.len();
        let f = self.n_features;
        let mut frequencies = DMatrix::zeros(f, d);
        for k in 0..f {
            for (j, &(df, scale)) in self.spectral.iter().enumerate() {
                let t = StudentT::new(df).expect("positive degrees of freedom");
                frequencies[(k, j)] = scale * t.sample(rng);
            }
        }
        let two_pi = 2.0 * std::f64::consts::PI;
        let u = Uniform::new(0.0, two_pi).expect("valid range");
        let phases = DVector::from_fn(f, |_, _| u.sample(rng));
        RffFeatures {
            frequencies,
            phases,
        }
    }

    /// One replicate: σ√(2/F) Σ_k cos(w_kᵀ z + b_k) + μ(z).
    pub fn draw(&self, replicate: u64) -> DVector<f64> {
        let mut rng = replicate_rng(self.seed, replicate);
        let feats = self.draw_features(&mut rng);
        let amp = self.sigma * (2.0 / self.n_features as f64).sqrt();
        DVector::from_fn(self.points.len(), |i, _| {
            let z = &self.points[i];
            let mut acc = 0.0;
            for k in 0..self.n_features {
                let mut phase = feats.phases[k];
                for (j, &zj) in z.iter().enumerate() {
                    phase += feats.frequencies[(k, j)] * zj;
                }
                acc += phase.cos();
            }
            amp * acc + self.mean[i]
        })
    }

    pub fn sample(&self, n_samples: usize) -> SampleBatch {
        batch_from_draws(&self.points, self.seed, Method::Rff, n_samples, |k| {
            self.draw(k)
        })
    }
}

/// Prior draws via dense Cholesky of K(Z,Z).
pub fn sample_prior_cholesky(
    kernel: &ProductKernel,
    points: &[Vec<f64>],
    mean_fn: &dyn Fn(&[f64]) -> f64,
    seed: u64,
    n_samples: usize,
) -> Result<SampleBatch> {
    Ok(CholeskyPriorSampler::new(kernel, points, mean_fn, seed)?.sample(n_samples))
}

/// Prior draws via sparse-grid inducing points.
pub fn sample_prior_insg(
    kernel: &ProductKernel,
    points: &[Vec<f64>],
    grid: &SparseGrid,
    mean_fn: &dyn Fn(&[f64]) -> f64,
    seed: u64,
    n_samples: usize,
) -> Result<SampleBatch> {
    Ok(InsgPriorSampler::new(kernel, points, grid, mean_fn, seed)?.sample(n_samples))
}

/// Prior draws via random Fourier features.
pub fn sample_prior_rff(
    kernel: &ProductKernel,
    points: &[Vec<f64>],
    mean_fn: &dyn Fn(&[f64]) -> f64,
    seed: u64,
    n_features: usize,
    n_samples: usize,
) -> Result<SampleBatch> {
    Ok(RffPriorSampler::new(kernel, points, mean_fn, n_features, seed)?.sample(n_samples))
}
