//! Stochastic FitzHugh–Nagumo simulation: per-step increments are drawn from
//! GP posteriors (one independent GP per state coordinate) trained on
//! Euler–Maruyama increment data, and the resulting state clouds are compared
//! against a direct Euler–Maruyama reference cloud.

use std::time::Instant;

use gridgp::rng::{aux_rng, replicate_rng};
use gridgp::testfns::{euler_maruyama_step, fitzhugh_drift, FitzHughParams};
use gridgp::{
    w2_gaussian, CholeskyPosteriorSampler, InsgPosteriorSampler, Method, Observations,
    SparseGrid,
};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::uniform_points;
use crate::config::FitzhughConfig;
use crate::{CliError, CliResult};

pub struct FitzhughStep {
    pub step: usize,
    pub seconds: f64,
    pub w2_state: f64,
    pub mean_v: f64,
    pub mean_w: f64,
    pub max_abs_v: f64,
    pub max_abs_w: f64,
}

pub struct FitzhughOutcome {
    pub per_method: Vec<(Method, Vec<FitzhughStep>)>,
}

fn cloud_moments(states: &[[f64; 2]]) -> gridgp::posterior::GaussianMoments {
    let values = DMatrix::from_fn(states.len(), 2, |i, j| states[i][j]);
    gridgp::metrics::moments_of_values(&values)
}

enum IncrementSampler {
    Chol(CholeskyPosteriorSampler),
    Insg(InsgPosteriorSampler),
}

impl IncrementSampler {
    fn draw_at(&self, point: &[f64], replicate: u64) -> CliResult<f64> {
        Ok(match self {
            IncrementSampler::Chol(s) => s.draw_at_point(point, replicate),
            IncrementSampler::Insg(s) => s.draw_at_point(point, replicate)?.0,
        })
    }
}

pub fn run(cfg: &FitzhughConfig) -> CliResult<FitzhughOutcome> {
    let methods = crate::config::parse_methods(&cfg.methods)?;
    if cfg.state_domain.len() != 2 {
        return Err(CliError::Config("state domain must be two intervals".into()));
    }
    if cfg.trajectories < 2 || cfg.steps == 0 {
        return Err(CliError::Config(
            "need at least 2 trajectories and 1 step".into(),
        ));
    }
    let params = FitzHughParams::new(cfg.alpha, cfg.beta, cfg.gamma, cfg.tau, cfg.noise_variance)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let kernel = cfg.kernel.build(2)?;
    let grid = SparseGrid::build(cfg.eta, 2, &cfg.state_domain)?;
    let solver = cfg.solver.build()?;
    let zero = |_: &[f64]| 0.0;

    // training increments: y_i = τ f(x_i, a_i) + √τ ε, currents uniform on [0,1]
    let mut data_rng = aux_rng(cfg.seed, 4);
    let x_train = uniform_points(&mut data_rng, cfg.n_train, &cfg.state_domain);
    let sqrt_tau_sigma = cfg.tau.sqrt() * cfg.noise_variance.sqrt();
    let mut y_v = DVector::zeros(cfg.n_train);
    let mut y_w = DVector::zeros(cfg.n_train);
    for i in 0..cfg.n_train {
        let a: f64 = data_rng.random();
        let drift = fitzhugh_drift([x_train[i][0], x_train[i][1]], a, &params);
        let ev: f64 = StandardNormal.sample(&mut data_rng);
        let ew: f64 = StandardNormal.sample(&mut data_rng);
        y_v[i] = cfg.tau * drift[0] + sqrt_tau_sigma * ev;
        y_w[i] = cfg.tau * drift[1] + sqrt_tau_sigma * ew;
    }
    // the √τ ε term puts variance τ σ_ε² on each observation
    let obs_noise = cfg.tau * cfg.noise_variance;
    let obs_v = Observations::new(x_train.clone(), y_v, obs_noise)?;
    let obs_w = Observations::new(x_train.clone(), y_w, obs_noise)?;

    // Euler–Maruyama reference cloud with the true drift
    let x0 = [cfg.x0.0, cfg.x0.1];
    let mut ref_rng = aux_rng(cfg.seed, 5);
    let mut ref_states = vec![x0; cfg.trajectories];
    let mut ref_clouds = Vec::with_capacity(cfg.steps);
    for _ in 0..cfg.steps {
        for s in ref_states.iter_mut() {
            let a: f64 = ref_rng.random();
            *s = euler_maruyama_step(*s, a, &params, &mut ref_rng);
        }
        ref_clouds.push(cloud_moments(&ref_states));
    }

    let anchor = vec![vec![x0[0], x0[1]]];
    let mut per_method = Vec::new();
    for (mi, &method) in methods.iter().enumerate() {
        // independent GPs per output coordinate get disjoint seed streams
        let seed_v = cfg.seed.wrapping_add(1 + 2 * mi as u64);
        let seed_w = cfg.seed.wrapping_add(2 + 2 * mi as u64) ^ 0x9E37_79B9_7F4A_7C15;
        let (sampler_v, sampler_w) = match method {
            Method::Insg => (
                IncrementSampler::Insg(InsgPosteriorSampler::new(
                    &kernel, &obs_v, &anchor, &grid, zero, seed_v, &solver,
                )?),
                IncrementSampler::Insg(InsgPosteriorSampler::new(
                    &kernel, &obs_w, &anchor, &grid, zero, seed_w, &solver,
                )?),
            ),
            Method::Cholesky => (
                IncrementSampler::Chol(CholeskyPosteriorSampler::new(
                    &kernel, &obs_v, &anchor, zero, seed_v,
                )?),
                IncrementSampler::Chol(CholeskyPosteriorSampler::new(
                    &kernel, &obs_w, &anchor, zero, seed_w,
                )?),
            ),
            _ => {
                return Err(CliError::Config(
                    "fitzhugh takes chol and insg methods".into(),
                ))
            }
        };

        let mut sde_rng = replicate_rng(cfg.seed ^ (mi as u64) << 48, u64::MAX - 6);
        let mut states = vec![x0; cfg.trajectories];
        let mut steps = Vec::with_capacity(cfg.steps);
        for t in 0..cfg.steps {
            let t0 = Instant::now();
            for (k, s) in states.iter_mut().enumerate() {
                let replicate = (t * cfg.trajectories + k) as u64;
                let point = [s[0], s[1]];
                let dv = sampler_v.draw_at(&point, replicate)?;
                let dw = sampler_w.draw_at(&point, replicate)?;
                // fresh realization noise of the stochastic difference equation
                let ev: f64 = StandardNormal.sample(&mut sde_rng);
                let ew: f64 = StandardNormal.sample(&mut sde_rng);
                s[0] += dv + sqrt_tau_sigma * ev;
                s[1] += dw + sqrt_tau_sigma * ew;
            }
            let seconds = t0.elapsed().as_secs_f64();
            let cloud = cloud_moments(&states);
            let w2 = w2_gaussian(&cloud, &ref_clouds[t])?.distance;
            let (mut max_v, mut max_w) = (0.0f64, 0.0f64);
            for s in &states {
                max_v = max_v.max(s[0].abs());
                max_w = max_w.max(s[1].abs());
            }
            steps.push(FitzhughStep {
                step: t + 1,
                seconds,
                w2_state: w2,
                mean_v: cloud.mean[0],
                mean_w: cloud.mean[1],
                max_abs_v: max_v,
                max_abs_w: max_w,
            });
        }
        per_method.push((method, steps));
    }
    Ok(FitzhughOutcome { per_method })
}
