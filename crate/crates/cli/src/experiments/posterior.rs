//! Posterior sampling benchmark on Griewank training data: per-draw wall
//! time and W₂ of empirical moments against each method's own target
//! posterior (exact posterior for chol and matheron-exact, SoR posterior for
//! insg).

use std::time::Instant;

use gridgp::rng::aux_rng;
use gridgp::testfns::griewank;
use gridgp::{
    exact_posterior_moments, sor_posterior_moments, w2_gaussian, CholeskyPosteriorSampler,
    InsgPosteriorSampler, MatheronExactSampler, Method, Observations, SparseGrid,
};
use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use super::{median, uniform_points, w2_resampling_floor};
use crate::config::{parse_methods, PosteriorBenchConfig};
use crate::{CliError, CliResult};

pub struct PosteriorRow {
    pub method: String,
    pub n: usize,
    pub seconds_per_draw: f64,
    pub w2: f64,
    pub w2_floor: f64,
    pub pcg_iterations_mean: f64,
}

pub struct PosteriorOutcome {
    pub rows: Vec<PosteriorRow>,
    pub setup_notes: Vec<String>,
}

/// Griewank observations at uniform points of [lo, hi]^d.
pub fn griewank_observations(
    rng: &mut gridgp::rng::ChaCha8Rng,
    n: usize,
    domain: &[(f64, f64)],
    noise_variance: f64,
) -> CliResult<Observations> {
    let x = uniform_points(rng, n, domain);
    let noise_std = noise_variance.sqrt();
    let y = DVector::from_fn(n, |i, _| {
        let e: f64 = StandardNormal.sample(rng);
        griewank(&x[i]) + noise_std * e
    });
    Ok(Observations::new(x, y, noise_variance)?)
}

pub fn run(cfg: &PosteriorBenchConfig) -> CliResult<PosteriorOutcome> {
    let methods = parse_methods(&cfg.methods)?;
    if cfg.replicates < 2 {
        return Err(CliError::Config("need at least 2 replicates".into()));
    }
    if cfg.test_points < 1 {
        return Err(CliError::Config("need at least one test point".into()));
    }
    let kernel = cfg.kernel.build(cfg.dimension)?;
    let domain = vec![cfg.domain; cfg.dimension];
    let grid = SparseGrid::build(cfg.eta, cfg.dimension, &domain)?;
    let solver = cfg.solver.build()?;
    let zero = |_: &[f64]| 0.0;

    let mut data_rng = aux_rng(cfg.seed, 2);
    let mut rows = Vec::new();
    let mut setup_notes = Vec::new();

    for &n in &cfg.sizes {
        let obs = griewank_observations(&mut data_rng, n, &domain, cfg.noise_variance)?;
        let xstar = uniform_points(&mut data_rng, cfg.test_points, &domain);
        let cap = cfg.w2_points_cap.max(2).min(cfg.test_points);
        let xstar_cap = xstar[..cap].to_vec();

        let exact_target = exact_posterior_moments(&kernel, &obs, &xstar_cap, &zero)?;
        let sor_target =
            sor_posterior_moments(&kernel, &obs, &xstar_cap, &grid.points_domain(), &zero)?;

        for &method in &methods {
            let t0 = Instant::now();
            enum Drawer {
                Chol(CholeskyPosteriorSampler),
                Matheron(MatheronExactSampler),
                Insg(InsgPosteriorSampler),
            }
            let drawer = match method {
                Method::Cholesky => {
                    Drawer::Chol(CholeskyPosteriorSampler::new(&kernel, &obs, &xstar, zero, cfg.seed)?)
                }
                Method::MatheronExact => Drawer::Matheron(MatheronExactSampler::new(
                    &kernel, &obs, &xstar, &zero, cfg.seed,
                )?),
                Method::Insg => Drawer::Insg(InsgPosteriorSampler::new(
                    &kernel, &obs, &xstar, &grid, zero, cfg.seed, &solver,
                )?),
                Method::Rff => {
                    return Err(CliError::Config(
                        "rff is a prior method; posterior-bench takes chol, matheron-exact, insg"
                            .into(),
                    ))
                }
            };
            setup_notes.push(format!(
                "setup_seconds method={} n={n} value={:.3e}",
                method.name(),
                t0.elapsed().as_secs_f64()
            ));

            let mut times = Vec::with_capacity(cfg.replicates);
            let mut values = DMatrix::zeros(cfg.replicates, cap);
            let mut iters_total = 0usize;
            let mut solver_used = false;
            for k in 0..cfg.replicates {
                let t = Instant::now();
                let v = match &drawer {
                    Drawer::Chol(s) => s.draw(k as u64),
                    Drawer::Matheron(s) => s.draw(k as u64),
                    Drawer::Insg(s) => {
                        let (v, stats) = s.draw(k as u64)?;
                        iters_total += stats.iterations;
                        solver_used = true;
                        v
                    }
                };
                times.push(t.elapsed().as_secs_f64());
                for j in 0..cap {
                    values[(k, j)] = v[j];
                }
            }

            let target = match method {
                Method::Insg => &sor_target,
                _ => &exact_target,
            };
            let emp = gridgp::metrics::moments_of_values(&values);
            let w2 = w2_gaussian(&emp, target)?.distance;
            let floor = w2_resampling_floor(target, cfg.replicates, cfg.seed)?;
            rows.push(PosteriorRow {
                method: method.name().into(),
                n,
                seconds_per_draw: median(times),
                w2,
                w2_floor: floor,
                pcg_iterations_mean: if solver_used {
                    iters_total as f64 / cfg.replicates as f64
                } else {
                    0.0
                },
            });
        }
    }
    Ok(PosteriorOutcome { rows, setup_notes })
}
