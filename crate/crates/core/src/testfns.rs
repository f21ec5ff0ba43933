//! Deterministic test functions and the FitzHugh–Nagumo dynamics used by the
//! experiment harness.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Griewank test function, Σ_j x_j²/4000 + Π_j cos(x_j/√j) + 1.
///
/// The cosine product enters with a plus sign here; the widely used benchmark
/// form subtracts it instead, see [`griewank_classic`].
pub fn griewank(x: &[f64]) -> f64 {
    griewank_signed(x, 1.0)
}

/// Griewank with the conventional minus sign on the cosine product.
pub fn griewank_classic(x: &[f64]) -> f64 {
    griewank_signed(x, -1.0)
}

fn griewank_signed(x: &[f64], sign: f64) -> f64 {
    let quad: f64 = x.iter().map(|v| v * v / 4000.0).sum();
    let prod: f64 = x
        .iter()
        .enumerate()
        .map(|(j, v)| (v / ((j + 1) as f64).sqrt()).cos())
        .product();
    quad + sign * prod + 1.0
}

/// Ackley function with explicit shape parameters.
pub fn ackley(x: &[f64], a: f64, b: f64, c: f64) -> f64 {
    let d = x.len() as f64;
    let quad = (x.iter().map(|v| v * v).sum::<f64>() / d).sqrt();
    let cosine = x.iter().map(|v| (c * v).cos()).sum::<f64>() / d;
    -a * (-b * quad).exp() + a + 1.0f64.exp() - cosine.exp()
}

/// Ackley with the standard a = 20, b = 0.2, c = 2π; global minimum 0 at the
/// origin.
pub fn ackley_default(x: &[f64]) -> f64 {
    ackley(x, 20.0, 0.2, 2.0 * std::f64::consts::PI)
}

/// FitzHugh–Nagumo model parameters and the Euler–Maruyama step size.
#[derive(Debug, Clone, Copy)]
pub struct FitzHughParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Euler step size τ.
    pub step: f64,
    pub noise_variance: f64,
}

impl FitzHughParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64, step: f64, noise_variance: f64) -> Result<Self> {
        if !(step > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "step size must be positive, got {step}"
            )));
        }
        if gamma == 0.0 {
            return Err(Error::InvalidParameter("gamma must be nonzero".into()));
        }
        if noise_variance < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "noise variance must be nonnegative, got {noise_variance}"
            )));
        }
        Ok(Self {
            alpha,
            beta,
            gamma,
            step,
            noise_variance,
        })
    }

    /// The paper's spiking-neuron setting: α = β = 0.75, γ = 20, τ = 0.25,
    /// σ_ε² = 10⁻⁴.
    pub fn spiking_neuron() -> Self {
        Self {
            alpha: 0.75,
            beta: 0.75,
            gamma: 20.0,
            step: 0.25,
            noise_variance: 1e-4,
        }
    }
}

/// Drift (v̇, ẇ) = (v − v³/3 − w + a, (v − βw + α)/γ).
pub fn fitzhugh_drift(state: [f64; 2], current: f64, p: &FitzHughParams) -> [f64; 2] {
    let [v, w] = state;
    [
        v - v * v * v / 3.0 - w + current,
        (v - p.beta * w + p.alpha) / p.gamma,
    ]
}

/// One Euler–Maruyama step x + τ·f(x, a) + √τ·ε with ε ~ N(0, σ_ε² I₂).
pub fn euler_maruyama_step(
    state: [f64; 2],
    current: f64,
    p: &FitzHughParams,
    rng: &mut ChaCha8Rng,
) -> [f64; 2] {
    let drift = fitzhugh_drift(state, current, p);
    let scale = p.step.sqrt() * p.noise_variance.sqrt();
    let e1: f64 = StandardNormal.sample(rng);
    let e2: f64 = StandardNormal.sample(rng);
    [
        state[0] + p.step * drift[0] + scale * e1,
        state[1] + p.step * drift[1] + scale * e2,
    ]
}
