//! Per-command experiment configurations.
//!
//! Defaults follow the reference experimental setting: product Matérn-3/2
//! kernel with σ² = 1 and ω = √(2ν), observation noise σ_ε² = 10⁻⁴, seed 99,
//! 1000 replicates. Every field can be overridden from a TOML file
//! (`--config`) or the command line.

use serde::{Deserialize, Serialize};
use std::str::FromStr;

use gridgp::{PreconditionerKind, SolverConfig};

use crate::{CliError, CliResult};

fn default_nu() -> f64 {
    1.5
}

fn default_sigma2() -> f64 {
    1.0
}

fn default_omega() -> f64 {
    3.0f64.sqrt() // √(2ν) at ν = 3/2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelConfig {
    #[serde(default = "default_nu")]
    pub nu: f64,
    #[serde(default = "default_sigma2")]
    pub sigma2: f64,
    #[serde(default = "default_omega")]
    pub omega: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            nu: default_nu(),
            sigma2: default_sigma2(),
            omega: default_omega(),
        }
    }
}

impl KernelConfig {
    pub fn build(&self, dimension: usize) -> CliResult<gridgp::ProductKernel> {
        Ok(gridgp::ProductKernel::isotropic(
            dimension,
            self.sigma2,
            self.omega,
            self.nu,
        )?)
    }
}

fn default_tol() -> f64 {
    1e-8
}

fn default_precond() -> String {
    "tas".to_string()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverSection {
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// 0 means the library default of 10·n_sg.
    #[serde(default)]
    pub max_iter: usize,
    #[serde(default = "default_precond")]
    pub preconditioner: String,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            max_iter: 0,
            preconditioner: default_precond(),
        }
    }
}

impl SolverSection {
    pub fn build(&self) -> CliResult<SolverConfig> {
        if !(self.tol > 0.0) {
            return Err(CliError::Config(format!(
                "solver tol must be positive, got {}",
                self.tol
            )));
        }
        let preconditioner = PreconditionerKind::from_str(&self.preconditioner)?;
        Ok(SolverConfig {
            tol: self.tol,
            max_iter: (self.max_iter > 0).then_some(self.max_iter),
            preconditioner,
        })
    }
}

fn default_seed() -> u64 {
    99
}

fn default_replicates() -> usize {
    1000
}

fn default_methods_prior() -> Vec<String> {
    vec!["chol".into(), "rff".into(), "insg".into()]
}

fn default_prior_sizes() -> Vec<usize> {
    (6..=13).map(|p| 1usize << p).collect()
}

fn default_n_features() -> usize {
    64
}

fn default_w2_cap() -> usize {
    256
}

fn default_analytic_etas() -> Vec<u32> {
    (2..=7).collect()
}

/// `prior-bench`: per-draw time and W₂ accuracy of prior samplers over the
/// unit box.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PriorBenchConfig {
    #[serde(default = "default_methods_prior")]
    pub methods: Vec<String>,
    #[serde(default = "two")]
    pub dimension: usize,
    #[serde(default = "five")]
    pub eta: u32,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_prior_sizes")]
    pub sizes: Vec<usize>,
    #[serde(default = "default_n_features")]
    pub n_features: usize,
    /// Moments and W₂ are computed on the first `w2_points_cap` evaluation
    /// points; timing always covers the full draw.
    #[serde(default = "default_w2_cap")]
    pub w2_points_cap: usize,
    /// Skip sampling and emit the exact W₂ between the true prior and the
    /// SoR approximation over these grid levels instead.
    #[serde(default)]
    pub analytic: bool,
    #[serde(default = "default_analytic_etas")]
    pub analytic_etas: Vec<u32>,
}

fn two() -> usize {
    2
}

fn five() -> u32 {
    5
}

impl Default for PriorBenchConfig {
    fn default() -> Self {
        toml::from_str("").expect("defaults are complete")
    }
}

fn default_methods_posterior() -> Vec<String> {
    vec!["chol".into(), "matheron-exact".into(), "insg".into()]
}

fn default_posterior_sizes() -> Vec<usize> {
    (6..=12).map(|p| 1usize << p).collect()
}

fn default_m() -> usize {
    1000
}

fn default_noise() -> f64 {
    1e-4
}

fn default_data_domain() -> (f64, f64) {
    (-5.0, 5.0)
}

/// `posterior-bench`: Griewank training data on [−5,5]^d, per-draw time and
/// W₂ against each method's own target posterior.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PosteriorBenchConfig {
    #[serde(default = "default_methods_posterior")]
    pub methods: Vec<String>,
    #[serde(default = "two")]
    pub dimension: usize,
    #[serde(default = "five")]
    pub eta: u32,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default = "default_noise")]
    pub noise_variance: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    /// Training-set sizes n.
    #[serde(default = "default_posterior_sizes")]
    pub sizes: Vec<usize>,
    /// Test-point count m.
    #[serde(default = "default_m")]
    pub test_points: usize,
    #[serde(default = "default_data_domain")]
    pub domain: (f64, f64),
    #[serde(default = "default_w2_cap")]
    pub w2_points_cap: usize,
    #[serde(default)]
    pub solver: SolverSection,
}

impl Default for PosteriorBenchConfig {
    fn default() -> Self {
        toml::from_str("").expect("defaults are complete")
    }
}

fn default_methods_thompson() -> Vec<String> {
    vec!["insg".into()]
}

fn default_lengthscales() -> Vec<f64> {
    vec![0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6]
}

fn default_ts_seeds() -> Vec<u64> {
    vec![9, 99, 999, 9999, 99999]
}

fn default_iterations() -> usize {
    30
}

fn default_candidates() -> usize {
    1024
}

fn default_initial_samples() -> usize {
    3
}

/// `thompson`: Thompson sampling on the Ackley function over [−5,5]^d.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThompsonConfig {
    #[serde(default = "default_methods_thompson")]
    pub methods: Vec<String>,
    #[serde(default = "two")]
    pub dimension: usize,
    #[serde(default = "five")]
    pub eta: u32,
    #[serde(default = "default_sigma2")]
    pub sigma2: f64,
    #[serde(default = "default_nu")]
    pub nu: f64,
    #[serde(default = "default_lengthscales")]
    pub lengthscales: Vec<f64>,
    #[serde(default = "default_ts_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_candidates")]
    pub candidates: usize,
    #[serde(default = "default_initial_samples")]
    pub initial_samples: usize,
    #[serde(default = "default_noise")]
    pub noise_variance: f64,
    #[serde(default = "default_data_domain")]
    pub domain: (f64, f64),
    #[serde(default)]
    pub solver: SolverSection,
}

impl Default for ThompsonConfig {
    fn default() -> Self {
        toml::from_str("").expect("defaults are complete")
    }
}

fn default_methods_fitzhugh() -> Vec<String> {
    vec!["insg".into(), "chol".into()]
}

fn default_steps() -> usize {
    40
}

fn default_trajectories() -> usize {
    1000
}

fn default_n_train() -> usize {
    256
}

fn default_state_domain() -> Vec<(f64, f64)> {
    vec![(-2.5, 2.5), (-1.0, 2.0)]
}

fn default_x0() -> (f64, f64) {
    (-2.5, -1.0)
}

fn default_alpha() -> f64 {
    0.75
}

fn default_gamma() -> f64 {
    20.0
}

fn default_tau() -> f64 {
    0.25
}

/// `fitzhugh`: stochastic FitzHugh–Nagumo simulation driven by GP posterior
/// draws of the per-step increment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitzhughConfig {
    #[serde(default = "default_methods_fitzhugh")]
    pub methods: Vec<String>,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
    #[serde(default = "default_n_train")]
    pub n_train: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_alpha")]
    pub beta: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_noise")]
    pub noise_variance: f64,
    #[serde(default = "five")]
    pub eta: u32,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default = "default_state_domain")]
    pub state_domain: Vec<(f64, f64)>,
    #[serde(default = "default_x0")]
    pub x0: (f64, f64),
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub solver: SolverSection,
}

impl Default for FitzhughConfig {
    fn default() -> Self {
        toml::from_str("").expect("defaults are complete")
    }
}

fn default_variants() -> Vec<String> {
    vec!["tas".into(), "as".into(), "jacobi".into(), "none".into()]
}

fn default_precond_eta() -> u32 {
    12
}

fn default_precond_n() -> usize {
    256
}

fn default_precond_tol() -> f64 {
    1e-3
}

fn default_precond_max_iter() -> usize {
    200
}

/// `precond-bench`: PCG residual traces on Σ_U under each preconditioner.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrecondBenchConfig {
    #[serde(default = "default_variants")]
    pub variants: Vec<String>,
    #[serde(default = "two")]
    pub dimension: usize,
    #[serde(default = "default_precond_eta")]
    pub eta: u32,
    /// Training-point count behind the data term of Σ_U.
    #[serde(default = "default_precond_n")]
    pub n_train: usize,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default = "default_noise")]
    pub noise_variance: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_precond_tol")]
    pub tol: f64,
    #[serde(default = "default_precond_max_iter")]
    pub max_iter: usize,
}

impl Default for PrecondBenchConfig {
    fn default() -> Self {
        toml::from_str("").expect("defaults are complete")
    }
}

/// Parse a TOML config file into a command's config type.
pub fn load_config<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn parse_methods(raw: &[String]) -> CliResult<Vec<gridgp::Method>> {
    if raw.is_empty() {
        return Err(CliError::Config("method list is empty".into()));
    }
    raw.iter()
        .map(|s| gridgp::Method::from_str(s).map_err(CliError::from))
        .collect()
}

pub fn parse_variants(raw: &[String]) -> CliResult<Vec<PreconditionerKind>> {
    if raw.is_empty() {
        return Err(CliError::Config("preconditioner list is empty".into()));
    }
    raw.iter()
        .map(|s| PreconditionerKind::from_str(s).map_err(CliError::from))
        .collect()
}
