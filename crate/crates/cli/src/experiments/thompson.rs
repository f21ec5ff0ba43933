//! Thompson sampling on the Ackley function: at each round one posterior
//! draw over fresh uniform candidates picks the next evaluation point.

use gridgp::rng::replicate_rng;
use gridgp::testfns::ackley_default;
use gridgp::{
    CholeskyPosteriorSampler, InsgPosteriorSampler, MatheronExactSampler, Method, Observations,
    ProductKernel, SolverConfig, SparseGrid,
};
use nalgebra::DVector;
use rand_distr::{Distribution, StandardNormal};

use super::uniform_points;
use crate::config::ThompsonConfig;
use crate::{CliError, CliResult};

pub struct ThompsonRow {
    pub method: String,
    pub lengthscale: f64,
    pub seed: u64,
    pub iteration: usize,
    pub regret: f64,
}

/// One Thompson-sampling run; returns the best-so-far regret after each
/// iteration (the Ackley minimum is 0, so regret is the best value itself).
pub fn run_single(
    method: Method,
    cfg: &ThompsonConfig,
    lengthscale: f64,
    seed: u64,
    solver: &SolverConfig,
) -> CliResult<Vec<f64>> {
    let d = cfg.dimension;
    let kernel = ProductKernel::isotropic(d, cfg.sigma2, lengthscale, cfg.nu)?;
    let domain = vec![cfg.domain; d];
    let grid = SparseGrid::build(cfg.eta, d, &domain)?;
    let noise_std = cfg.noise_variance.sqrt();
    let zero = |_: &[f64]| 0.0;

    let mut rng = replicate_rng(seed, u64::MAX - 3);
    let mut x = uniform_points(&mut rng, cfg.initial_samples.max(1), &domain);
    let mut y: Vec<f64> = x
        .iter()
        .map(|p| {
            let e: f64 = StandardNormal.sample(&mut rng);
            ackley_default(p) + noise_std * e
        })
        .collect();
    let mut best = x.iter().map(|p| ackley_default(p)).fold(f64::INFINITY, f64::min);

    let mut regrets = Vec::with_capacity(cfg.iterations);
    for it in 1..=cfg.iterations {
        let candidates = uniform_points(&mut rng, cfg.candidates, &domain);
        let obs = Observations::new(x.clone(), DVector::from_vec(y.clone()), cfg.noise_variance)?;
        let draw = match method {
            Method::Insg => {
                let s =
                    InsgPosteriorSampler::new(&kernel, &obs, &candidates, &grid, zero, seed, solver)?;
                s.draw(it as u64)?.0
            }
            Method::Cholesky => {
                CholeskyPosteriorSampler::new(&kernel, &obs, &candidates, zero, seed)?.draw(it as u64)
            }
            Method::MatheronExact => {
                MatheronExactSampler::new(&kernel, &obs, &candidates, &zero, seed)?.draw(it as u64)
            }
            Method::Rff => {
                return Err(CliError::Config(
                    "rff is a prior method; thompson takes chol, matheron-exact, insg".into(),
                ))
            }
        };
        let pick = draw
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .expect("candidate set is nonempty");
        let x_next = candidates[pick].clone();
        let f_true = ackley_default(&x_next);
        let e: f64 = StandardNormal.sample(&mut rng);
        x.push(x_next);
        y.push(f_true + noise_std * e);
        best = best.min(f_true);
        regrets.push(best);
    }
    Ok(regrets)
}

pub fn run(cfg: &ThompsonConfig) -> CliResult<Vec<ThompsonRow>> {
    let methods = crate::config::parse_methods(&cfg.methods)?;
    if cfg.iterations == 0 || cfg.candidates == 0 {
        return Err(CliError::Config(
            "iterations and candidates must be positive".into(),
        ));
    }
    let solver = cfg.solver.build()?;
    let mut rows = Vec::new();
    for &method in &methods {
        for &ls in &cfg.lengthscales {
            for &seed in &cfg.seeds {
                let regrets = run_single(method, cfg, ls, seed, &solver)?;
                for (i, &r) in regrets.iter().enumerate() {
                    rows.push(ThompsonRow {
                        method: method.name().into(),
                        lengthscale: ls,
                        seed,
                        iteration: i + 1,
                        regret: r,
                    });
                }
            }
        }
    }
    Ok(rows)
}
