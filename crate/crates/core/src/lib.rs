//! Gaussian-process sampling with sparse-grid inducing points.
//!
//! The toolkit draws GP prior and posterior samples three ways: dense
//! Cholesky factorization, random Fourier features, and inducing points on a
//! Smolyak sparse grid (InSG) where per-dimension Cholesky factors combine
//! through the combination technique. Posterior draws follow Matheron's rule;
//! the inducing-point system is solved by preconditioned conjugate gradient
//! with one- and two-level additive Schwarz preconditioners built from the
//! grid's subgrid structure.

pub mod error;
pub mod grid;
pub mod kernel;
pub mod linalg;
pub mod metrics;
pub mod posterior;
pub mod prior;
pub mod rng;
pub mod solver;
pub mod testfns;

pub use error::{Error, Result};
pub use grid::{
    boundary_index_set, level_points, level_points_nested, smolyak_coefficient,
    smolyak_index_set, DyadicCoord, MultiIndex, SparseGrid,
};
pub use kernel::{kernel_matrix, kernel_matrix_symmetric, matern_1d, MaternParams, ProductKernel};
pub use linalg::{
    cholesky, inverse_covariance_factor, kron_matvec, spd_sqrt, JitterPolicy, KroneckerFactors,
    LowerTriangularFactor, PackedSymmetric,
};
pub use metrics::{empirical_moments, w2_gaussian, W2Result};
pub use posterior::{
    exact_posterior_moments, sample_posterior_cholesky, sample_posterior_insg,
    sample_posterior_matheron_exact, sor_posterior_moments, CholeskyPosteriorSampler,
    GaussianMoments, InsgPosteriorSampler, MatheronExactSampler, Observations, SolveStats,
    SolverConfig,
};
pub use prior::{
    sample_prior_cholesky, sample_prior_insg, sample_prior_rff, CholeskyPriorSampler,
    InsgInducingSampler, InsgPriorSampler, Method, RffFeatures, RffPriorSampler, SampleBatch,
};
pub use solver::{
    build_preconditioner, pcg, PcgResult, Preconditioner, PreconditionerKind, SorOperator,
};
