//! Prior sampling benchmark: per-draw wall time and W₂ accuracy against the
//! true prior, plus an analytic mode that evaluates the exact SoR
//! approximation error without any sampling.

use std::time::Instant;

use gridgp::posterior::GaussianMoments;
use gridgp::rng::aux_rng;
use gridgp::{
    kernel_matrix, kernel_matrix_symmetric, w2_gaussian, CholeskyPriorSampler, InsgPriorSampler,
    Method, RffPriorSampler, SparseGrid,
};
use nalgebra::{DMatrix, DVector};

use super::{median, uniform_points, w2_resampling_floor};
use crate::config::{parse_methods, PriorBenchConfig};
use crate::{CliError, CliResult};

pub struct PriorRow {
    pub method: String,
    pub n_s: usize,
    pub seconds_per_draw: f64,
    pub w2: f64,
    pub w2_floor: f64,
}

pub struct PriorOutcome {
    pub rows: Vec<PriorRow>,
    pub setup_notes: Vec<String>,
}

/// Exact W₂ between the zero-mean prior on `points` and its SoR
/// approximation through U(η, d); no sampling involved.
pub fn analytic_sor_w2(
    kernel: &gridgp::ProductKernel,
    points: &[Vec<f64>],
    eta: u32,
) -> CliResult<f64> {
    let d = kernel.dimension();
    let grid = SparseGrid::build_unit(eta, d)?;
    let u = grid.points_domain();
    let k_zz = kernel_matrix_symmetric(kernel, points)?;
    let k_zu = kernel_matrix(kernel, points, &u)?;
    let k_uu = kernel_matrix_symmetric(kernel, &u)?;
    let factor = gridgp::cholesky(&k_uu, &gridgp::JitterPolicy::default())?;
    let s = factor.solve_matrix(&k_zu.transpose());
    let q = &k_zu * s;
    let zero = DVector::zeros(points.len());
    let a = GaussianMoments {
        mean: zero.clone(),
        covariance: k_zz,
    };
    let b = GaussianMoments {
        mean: zero,
        covariance: (&q + q.transpose()) * 0.5,
    };
    Ok(w2_gaussian(&a, &b)?.distance)
}

pub fn run(cfg: &PriorBenchConfig) -> CliResult<PriorOutcome> {
    let kernel = cfg.kernel.build(cfg.dimension)?;
    let domain = vec![(0.0, 1.0); cfg.dimension];
    let mut data_rng = aux_rng(cfg.seed, 1);
    let mut rows = Vec::new();
    let mut setup_notes = Vec::new();

    if cfg.analytic {
        let n_s = cfg.w2_points_cap.max(2);
        let z = uniform_points(&mut data_rng, n_s, &domain);
        for &eta in &cfg.analytic_etas {
            let w2 = analytic_sor_w2(&kernel, &z, eta)?;
            rows.push(PriorRow {
                method: "analytic".into(),
                n_s,
                seconds_per_draw: 0.0,
                w2,
                w2_floor: 0.0,
            });
        }
        return Ok(PriorOutcome { rows, setup_notes });
    }

    let methods = parse_methods(&cfg.methods)?;
    if cfg.replicates < 2 {
        return Err(CliError::Config("need at least 2 replicates".into()));
    }
    let grid = SparseGrid::build_unit(cfg.eta, cfg.dimension)?;
    let zero = |_: &[f64]| 0.0;

    for &n_s in &cfg.sizes {
        if n_s < 1 {
            return Err(CliError::Config("sample sizes must be positive".into()));
        }
        let z = uniform_points(&mut data_rng, n_s, &domain);
        let cap = cfg.w2_points_cap.max(2).min(n_s);
        let z_cap = z[..cap].to_vec();
        let target = GaussianMoments {
            mean: DVector::zeros(cap),
            covariance: kernel_matrix_symmetric(&kernel, &z_cap)?,
        };
        let floor = w2_resampling_floor(&target, cfg.replicates, cfg.seed)?;

        for &method in &methods {
            let t0 = Instant::now();
            let draw: Box<dyn Fn(u64) -> DVector<f64>> = match method {
                Method::Cholesky => {
                    let s = CholeskyPriorSampler::new(&kernel, &z, &zero, cfg.seed)?;
                    Box::new(move |k| s.draw(k))
                }
                Method::Insg => {
                    let s = InsgPriorSampler::new(&kernel, &z, &grid, &zero, cfg.seed)?;
                    Box::new(move |k| s.draw(k))
                }
                Method::Rff => {
                    let s = RffPriorSampler::new(&kernel, &z, &zero, cfg.n_features, cfg.seed)?;
                    Box::new(move |k| s.draw(k))
                }
                Method::MatheronExact => {
                    return Err(CliError::Config(
                        "matheron-exact is a posterior method; prior-bench takes chol, rff, insg"
                            .into(),
                    ))
                }
            };
            setup_notes.push(format!(
                "setup_seconds method={} n_s={n_s} value={:.3e}",
                method.name(),
                t0.elapsed().as_secs_f64()
            ));

            let mut times = Vec::with_capacity(cfg.replicates);
            let mut values = DMatrix::zeros(cfg.replicates, cap);
            for k in 0..cfg.replicates {
                let t = Instant::now();
                let v = draw(k as u64);
                times.push(t.elapsed().as_secs_f64());
                for j in 0..cap {
                    values[(k, j)] = v[j];
                }
            }
            let emp = gridgp::metrics::moments_of_values(&values);
            let w2 = w2_gaussian(&emp, &target)?.distance;
            rows.push(PriorRow {
                method: method.name().into(),
                n_s,
                seconds_per_draw: median(times),
                w2,
                w2_floor: floor,
            });
        }
    }
    Ok(PriorOutcome { rows, setup_notes })
}
