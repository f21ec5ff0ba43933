//! Matrix-free preconditioned conjugate gradient with additive Schwarz
//! preconditioners built from the sparse grid's subgrid cover.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::{MultiIndex, SparseGrid};
use crate::kernel::ProductKernel;
use crate::linalg::{cholesky, JitterPolicy, LowerTriangularFactor, PackedSymmetric};

/// Σ_U = K_UU + σ_ε⁻² K_UX K_XU, held as a packed kernel block plus the
/// low-rank data term so fine grids stay within memory.
pub struct SorOperator {
    grid: SparseGrid,
    kernel: ProductKernel,
    points: Vec<Vec<f64>>,
    kuu: PackedSymmetric,
    kux: DMatrix<f64>,
    noise_precision: f64,
}

impl SorOperator {
    pub fn assemble(
        kernel: &ProductKernel,
        grid: SparseGrid,
        x: &[Vec<f64>],
        noise_variance: f64,
    ) -> Result<Self> {
        if kernel.dimension() != grid.dimension() {
            return Err(Error::DimensionMismatch {
                expected: grid.dimension(),
                actual: kernel.dimension(),
            });
        }
        if !(noise_variance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise variance must be positive, got {noise_variance}"
            )));
        }
        for p in x {
            if p.len() != grid.dimension() {
                return Err(Error::DimensionMismatch {
                    expected: grid.dimension(),
                    actual: p.len(),
                });
            }
        }
        let pts = grid.points_domain();
        let n_sg = pts.len();
        let d = grid.dimension();
        // flat coordinate buffer keeps the O(n_sg²) assembly loop off the
        // pointer-chasing path
        let flat: Vec<f64> = pts.iter().flat_map(|p| p.iter().copied()).collect();
        let kuu = PackedSymmetric::from_fn(n_sg, |i, j| {
            kernel.eval_unchecked(&flat[i * d..i * d + d], &flat[j * d..j * d + d])
        });
        let kux = DMatrix::from_fn(n_sg, x.len(), |i, j| {
            kernel.eval_unchecked(&flat[i * d..i * d + d], &x[j])
        });
        Ok(Self {
            grid,
            kernel: kernel.clone(),
            points: pts,
            kuu,
            kux,
            noise_precision: 1.0 / noise_variance,
        })
    }

    pub fn grid(&self) -> &SparseGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.kuu.n()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn noise_precision(&self) -> f64 {
        self.noise_precision
    }

    /// Σ_U v.
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::from_vec(self.kuu.matvec(v.as_slice()));
        let t = self.kux.tr_mul(v);
        y.gemv(self.noise_precision, &self.kux, &t, 1.0);
        y
    }

    /// diag(Σ_U).
    pub fn diagonal(&self) -> DVector<f64> {
        let mut d = self.kuu.diagonal();
        for i in 0..self.len() {
            d[i] += self.noise_precision * self.kux.row(i).norm_squared();
        }
        d
    }

    /// Dense Σ_U; intended for oracles and small grids only.
    pub fn assemble_dense(&self) -> DMatrix<f64> {
        let mut m = self.kuu.to_dense();
        let kxt = self.kux.transpose();
        m.gemm(self.noise_precision, &self.kux, &kxt, 1.0);
        (&m + m.transpose()) * 0.5
    }

    /// P = S Σ_U Sᵀ at the given grid positions. The kernel block is
    /// re-evaluated directly; scattered reads of the packed matrix would be
    /// slower than the closed-form kernel on large subdomains.
    pub fn principal_submatrix(&self, positions: &[usize]) -> DMatrix<f64> {
        let k = positions.len();
        let mut p = DMatrix::zeros(k, k);
        for a in 0..k {
            for b in 0..=a {
                let v = self
                    .kernel
                    .eval_unchecked(&self.points[positions[a]], &self.points[positions[b]]);
                p[(a, b)] = v;
                p[(b, a)] = v;
            }
        }
        let n = self.kux.ncols();
        let mut g = DMatrix::zeros(k, n);
        for (a, &i) in positions.iter().enumerate() {
            g.row_mut(a).copy_from(&self.kux.row(i));
        }
        let gt = g.transpose();
        p.gemm(self.noise_precision, &g, &gt, 1.0);
        (&p + p.transpose()) * 0.5
    }

    /// Data-side map K_UX g; the right-hand sides produced by the posterior
    /// sampler all have this form.
    pub fn data_rhs(&self, g: &DVector<f64>) -> DVector<f64> {
        &self.kux * g
    }
}

/// Preconditioner family for Σ_U.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreconditionerKind {
    Identity,
    Jacobi,
    AdditiveSchwarz,
    TwoLevelAdditiveSchwarz,
}

impl PreconditionerKind {
    pub fn name(&self) -> &'static str {
        match self {
            PreconditionerKind::Identity => "none",
            PreconditionerKind::Jacobi => "jacobi",
            PreconditionerKind::AdditiveSchwarz => "as",
            PreconditionerKind::TwoLevelAdditiveSchwarz => "tas",
        }
    }
}

impl std::str::FromStr for PreconditionerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" | "identity" => Ok(PreconditionerKind::Identity),
            "jacobi" => Ok(PreconditionerKind::Jacobi),
            "as" | "additive-schwarz" => Ok(PreconditionerKind::AdditiveSchwarz),
            "tas" | "two-level-additive-schwarz" => Ok(PreconditionerKind::TwoLevelAdditiveSchwarz),
            other => Err(Error::InvalidParameter(format!(
                "unknown preconditioner '{other}'"
            ))),
        }
    }
}

struct SchwarzBlock {
    positions: Vec<usize>,
    factor: LowerTriangularFactor,
}

/// Built preconditioner; `apply_inverse` realizes P⁻¹r. Subdomain factors
/// sit behind an `Arc` so the one- and two-level variants can share them.
pub struct Preconditioner {
    kind: PreconditionerKind,
    n: usize,
    inv_diag: Option<DVector<f64>>,
    blocks: Arc<Vec<SchwarzBlock>>,
    coarse: Option<SchwarzBlock>,
}

/// Coarse level η_c = max{⌈η/2⌉, d}.
pub fn coarse_level(eta: u32, d: usize) -> u32 {
    eta.div_ceil(2).max(d as u32)
}

/// Build the requested preconditioner for Σ_U.
///
/// Additive Schwarz uses the boundary subgrids {U_t : |t| = η} as overlapping
/// subdomains; the two-level variant adds a coarse correction over the grid
/// points lying on U(η_c, d).
pub fn build_preconditioner(kind: PreconditionerKind, op: &SorOperator) -> Result<Preconditioner> {
    let n = op.len();
    let mut pre = Preconditioner {
        kind,
        n,
        inv_diag: None,
        blocks: Arc::new(Vec::new()),
        coarse: None,
    };
    match kind {
        PreconditionerKind::Identity => {}
        PreconditionerKind::Jacobi => {
            let d = op.diagonal();
            pre.inv_diag = Some(d.map(|v| 1.0 / v));
        }
        PreconditionerKind::AdditiveSchwarz | PreconditionerKind::TwoLevelAdditiveSchwarz => {
            let policy = JitterPolicy::default();
            let mut blocks = Vec::new();
            for t in op.grid().boundary_indices() {
                blocks.push(schwarz_block(op, t, &policy)?);
            }
            pre.blocks = Arc::new(blocks);
            if kind == PreconditionerKind::TwoLevelAdditiveSchwarz {
                pre.coarse = Some(coarse_block(op, &policy)?);
            }
        }
    }
    Ok(pre)
}

fn coarse_block(op: &SorOperator, policy: &JitterPolicy) -> Result<SchwarzBlock> {
    let eta_c = coarse_level(op.grid().level(), op.grid().dimension());
    let positions = op.grid().coarse_positions(eta_c);
    let p = op.principal_submatrix(&positions);
    let factor = cholesky(&p, policy).map_err(|e| Error::SubdomainFactorization {
        index: vec![eta_c],
        source: Box::new(e),
    })?;
    Ok(SchwarzBlock { positions, factor })
}

fn schwarz_block(
    op: &SorOperator,
    t: &MultiIndex,
    policy: &JitterPolicy,
) -> Result<SchwarzBlock> {
    let positions = op.grid().scatter_indices(t)?.to_vec();
    let p = op.principal_submatrix(&positions);
    let factor = cholesky(&p, policy).map_err(|e| Error::SubdomainFactorization {
        index: t.levels().to_vec(),
        source: Box::new(e),
    })?;
    Ok(SchwarzBlock { positions, factor })
}

impl Preconditioner {
    pub fn kind(&self) -> PreconditionerKind {
        self.kind
    }

    /// One-level variant of a two-level Schwarz preconditioner, sharing the
    /// already-factorized subdomain blocks. Returns None for other kinds.
    pub fn without_coarse(&self) -> Option<Preconditioner> {
        if self.kind != PreconditionerKind::TwoLevelAdditiveSchwarz {
            return None;
        }
        Some(Preconditioner {
            kind: PreconditionerKind::AdditiveSchwarz,
            n: self.n,
            inv_diag: None,
            blocks: Arc::clone(&self.blocks),
            coarse: None,
        })
    }

    /// P⁻¹ r: sum over subdomains of Sᵀ P_t⁻¹ S r, plus the coarse term for
    /// the two-level variant.
    pub fn apply_inverse(&self, r: &DVector<f64>) -> DVector<f64> {
        assert_eq!(r.len(), self.n, "length mismatch");
        match self.kind {
            PreconditionerKind::Identity => r.clone(),
            PreconditionerKind::Jacobi => {
                let d = self.inv_diag.as_ref().unwrap();
                r.component_mul(d)
            }
            _ => {
                let mut z = DVector::zeros(self.n);
                for block in self.blocks.iter().chain(self.coarse.iter()) {
                    let mut local =
                        DVector::from_fn(block.positions.len(), |i, _| r[block.positions[i]]);
                    block.factor.solve_in_place(&mut local);
                    for (i, &p) in block.positions.iter().enumerate() {
                        z[p] += local[i];
                    }
                }
                z
            }
        }
    }
}

/// Solution and diagnostics of a PCG run.
#[derive(Debug, Clone)]
pub struct PcgResult {
    pub x: DVector<f64>,
    pub iterations: usize,
    pub residual_norm: f64,
    pub converged: bool,
    /// ‖r_i‖ for i = 0, 1, …; index 0 is the initial residual.
    pub trace: Vec<f64>,
}

/// Preconditioned conjugate gradient for an SPD operator.
///
/// Terminates when the unpreconditioned residual 2-norm drops below `tol`;
/// hitting `max_iter` returns a result with `converged = false` rather than
/// an error, so stalls can be recorded. The returned iterate is the best one
/// seen. Non-finite values abort with a divergence error naming the
/// iteration.
pub fn pcg(
    apply: impl Fn(&DVector<f64>) -> DVector<f64>,
    precond: &Preconditioner,
    v: &DVector<f64>,
    tol: f64,
    max_iter: usize,
    x0: Option<&DVector<f64>>,
) -> Result<PcgResult> {
    assert!(tol > 0.0, "tolerance must be positive");
    let n = v.len();
    let mut x = match x0 {
        Some(x0) => x0.clone(),
        None => DVector::zeros(n),
    };
    let mut r = match x0 {
        Some(_) => v - apply(&x),
        None => v.clone(),
    };
    let mut trace = Vec::new();
    let mut best_x = x.clone();
    let mut best_norm = r.norm();
    trace.push(best_norm);
    if best_norm < tol {
        return Ok(PcgResult {
            x,
            iterations: 0,
            residual_norm: best_norm,
            converged: true,
            trace,
        });
    }
    let mut z = precond.apply_inverse(&r);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    for i in 0..max_iter {
        let ap = apply(&p);
        let pap = p.dot(&ap);
        let alpha = rz / pap;
        if !alpha.is_finite() {
            return Err(Error::Diverged { iteration: i });
        }
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        let rnorm = r.norm();
        if !rnorm.is_finite() {
            return Err(Error::Diverged { iteration: i });
        }
        trace.push(rnorm);
        if rnorm < best_norm {
            best_norm = rnorm;
            best_x.copy_from(&x);
        }
        if rnorm < tol {
            return Ok(PcgResult {
                x,
                iterations: i + 1,
                residual_norm: rnorm,
                converged: true,
                trace,
            });
        }
        z = precond.apply_inverse(&r);
        let rz_next = r.dot(&z);
        let beta = rz_next / rz;
        rz = rz_next;
        p = &z + &p * beta;
    }
    Ok(PcgResult {
        x: best_x,
        iterations: max_iter,
        residual_norm: best_norm,
        converged: false,
        trace,
    })
}

/// Identity preconditioner of the right size, for plain CG.
pub fn identity_preconditioner(n: usize) -> Preconditioner {
    Preconditioner {
        kind: PreconditionerKind::Identity,
        n,
        inv_diag: None,
        blocks: Arc::new(Vec::new()),
        coarse: None,
    }
}

/// Jacobi preconditioner from an explicit diagonal; used by tests and
/// benchmarks that work with plain dense systems.
pub fn jacobi_preconditioner(diag: &DVector<f64>) -> Preconditioner {
    Preconditioner {
        kind: PreconditionerKind::Jacobi,
        n: diag.len(),
        inv_diag: Some(diag.map(|v| 1.0 / v)),
        blocks: Arc::new(Vec::new()),
        coarse: None,
    }
}
