//! One-dimensional Matérn kernels and separable (product) kernels.
//!
//! The product kernel stores unit-variance base correlations per dimension;
//! a single shared variance carries the output scale.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Parameters of a one-dimensional Matérn kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaternParams {
    /// Output variance σ².
    pub variance: f64,
    /// Lengthscale ω.
    pub lengthscale: f64,
    /// Smoothness ν.
    pub smoothness: f64,
}

impl MaternParams {
    pub fn new(variance: f64, lengthscale: f64, smoothness: f64) -> Result<Self> {
        if !(variance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "variance must be positive, got {variance}"
            )));
        }
        if !(lengthscale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lengthscale must be positive, got {lengthscale}"
            )));
        }
        if !(smoothness > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "smoothness must be positive, got {smoothness}"
            )));
        }
        Ok(Self {
            variance,
            lengthscale,
            smoothness,
        })
    }

    /// Unit-variance copy of these parameters.
    pub fn correlation(&self) -> Self {
        Self {
            variance: 1.0,
            ..*self
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        matern_1d(self, x, y)
    }
}

fn is_close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-12
}

/// Matérn kernel between two scalars.
///
/// Closed forms are used for ν ∈ {1/2, 3/2, 5/2}; other smoothness values go
/// through the modified Bessel function of the second kind. The zero-distance
/// value is σ² exactly (the formula is an indeterminate form at r = 0).
pub fn matern_1d(params: &MaternParams, x: f64, y: f64) -> f64 {
    let r = (x - y).abs();
    if r == 0.0 {
        return params.variance;
    }
    let nu = params.smoothness;
    let t = (2.0 * nu).sqrt() * r / params.lengthscale;
    let sigma2 = params.variance;
    if is_close(nu, 0.5) {
        sigma2 * (-t).exp()
    } else if is_close(nu, 1.5) {
        sigma2 * (1.0 + t) * (-t).exp()
    } else if is_close(nu, 2.5) {
        sigma2 * (1.0 + t + t * t / 3.0) * (-t).exp()
    } else {
        let (_i, k, _ip, _kp) = puruspe::bessel::besselik(nu, t);
        let gamma_nu = puruspe::gamma(nu);
        sigma2 * 2.0_f64.powf(1.0 - nu) / gamma_nu * t.powf(nu) * k
    }
}

/// Separable kernel K(x, y) = σ² Π_j K₀⁽ʲ⁾(x⁽ʲ⁾, y⁽ʲ⁾) with unit-variance
/// one-dimensional Matérn base correlations.
#[derive(Debug, Clone)]
pub struct ProductKernel {
    dimension: usize,
    per_dim: Vec<MaternParams>,
    variance: f64,
    /// Precomputed √3/ω per dimension when every base correlation is
    /// Matérn-3/2; lets dense assembly spend one `exp` per entry instead of
    /// one per dimension.
    matern32_scale: Option<Vec<f64>>,
}

impl ProductKernel {
    pub fn new(per_dim: Vec<MaternParams>, variance: f64) -> Result<Self> {
        if per_dim.is_empty() {
            return Err(Error::InvalidParameter(
                "product kernel needs at least one dimension".into(),
            ));
        }
        if !(variance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "variance must be positive, got {variance}"
            )));
        }
        for (j, p) in per_dim.iter().enumerate() {
            if !is_close(p.variance, 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "base correlation {j} must have unit variance, got {}",
                    p.variance
                )));
            }
        }
        let matern32_scale = if per_dim.iter().all(|p| is_close(p.smoothness, 1.5)) {
            Some(
                per_dim
                    .iter()
                    .map(|p| 3.0_f64.sqrt() / p.lengthscale)
                    .collect(),
            )
        } else {
            None
        };
        Ok(Self {
            dimension: per_dim.len(),
            per_dim,
            variance,
            matern32_scale,
        })
    }

    /// Product Matérn kernel with the same base correlation in every dimension.
    pub fn isotropic(
        dimension: usize,
        variance: f64,
        lengthscale: f64,
        smoothness: f64,
    ) -> Result<Self> {
        let base = MaternParams::new(1.0, lengthscale, smoothness)?;
        Self::new(vec![base; dimension], variance)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn per_dim(&self) -> &[MaternParams] {
        &self.per_dim
    }

    /// Kernel value between two points.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                actual: x.len(),
            });
        }
        if y.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                actual: y.len(),
            });
        }
        Ok(self.eval_unchecked(x, y))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        if let Some(scales) = &self.matern32_scale {
            let mut poly = self.variance;
            let mut expo = 0.0;
            for ((&xs, &ys), &s) in x.iter().zip(y).zip(scales) {
                let t = s * (xs - ys).abs();
                poly *= 1.0 + t;
                expo += t;
            }
            poly * (-expo).exp()
        } else {
            let mut acc = self.variance;
            for ((&xs, &ys), p) in x.iter().zip(y).zip(&self.per_dim) {
                acc *= matern_1d(p, xs, ys);
            }
            acc
        }
    }
}

fn check_points(dim: usize, pts: &[Vec<f64>]) -> Result<()> {
    for p in pts {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: p.len(),
            });
        }
    }
    Ok(())
}

/// Dense kernel matrix [K(a_i, b_j)].
pub fn kernel_matrix(kernel: &ProductKernel, a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    check_points(kernel.dimension(), a)?;
    check_points(kernel.dimension(), b)?;
    Ok(DMatrix::from_fn(a.len(), b.len(), |i, j| {
        kernel.eval_unchecked(&a[i], &b[j])
    }))
}

/// Symmetric kernel matrix on one point set, filling both triangles from one
/// evaluation per pair.
pub fn kernel_matrix_symmetric(kernel: &ProductKernel, a: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    check_points(kernel.dimension(), a)?;
    let n = a.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.eval_unchecked(&a[i], &a[j]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}
