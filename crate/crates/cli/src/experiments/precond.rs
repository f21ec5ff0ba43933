//! Preconditioner comparison: assemble Σ_U once, then run PCG on the same
//! right-hand side under each preconditioner and keep the residual traces.

use std::time::Instant;

use gridgp::rng::aux_rng;
use gridgp::{build_preconditioner, pcg, PcgResult, PreconditionerKind, SorOperator, SparseGrid};

use super::uniform_points;
use crate::config::{parse_variants, PrecondBenchConfig};
use crate::CliResult;

pub struct PrecondRun {
    pub kind: PreconditionerKind,
    /// None when the iteration produced non-finite values.
    pub result: Option<PcgResult>,
    pub diverged_at: Option<usize>,
    pub build_seconds: f64,
    pub solve_seconds: f64,
}

pub struct PrecondOutcome {
    pub runs: Vec<PrecondRun>,
    pub assemble_seconds: f64,
    pub n_sg: usize,
}

pub fn run(cfg: &PrecondBenchConfig) -> CliResult<PrecondOutcome> {
    let mut variants = parse_variants(&cfg.variants)?;
    let mut seen = Vec::new();
    variants.retain(|v| {
        if seen.contains(v) {
            false
        } else {
            seen.push(*v);
            true
        }
    });
    let kernel = cfg.kernel.build(cfg.dimension)?;
    let domain = vec![(0.0, 1.0); cfg.dimension];
    let grid = SparseGrid::build(cfg.eta, cfg.dimension, &domain)?;
    let mut rng = aux_rng(cfg.seed, 7);
    let x = uniform_points(&mut rng, cfg.n_train, &domain);

    let t0 = Instant::now();
    let op = SorOperator::assemble(&kernel, grid, &x, cfg.noise_variance)?;
    let assemble_seconds = t0.elapsed().as_secs_f64();
    let n_sg = op.len();
    // the right-hand sides of the posterior solve live in the range of the
    // data map, v = K_UX (y − f_X − ε); mirror that shape with a random
    // innovation so the target solution is the well-posed regression weight
    let g = gridgp::rng::standard_normal_vector(&mut rng, cfg.n_train);
    let v = op.data_rhs(&g);

    // the two Schwarz variants share the subdomain factorizations
    let need_tas = variants.contains(&PreconditionerKind::TwoLevelAdditiveSchwarz);
    let need_as = variants.contains(&PreconditionerKind::AdditiveSchwarz);
    let mut shared_tas = None;
    let mut shared_as = None;
    let mut shared_build = 0.0f64;
    if need_tas || need_as {
        let t = Instant::now();
        let tas = build_preconditioner(PreconditionerKind::TwoLevelAdditiveSchwarz, &op)?;
        shared_build = t.elapsed().as_secs_f64();
        if need_as {
            shared_as = tas.without_coarse();
        }
        if need_tas {
            shared_tas = Some(tas);
        }
    }

    let mut runs = Vec::new();
    for &kind in &variants {
        let t1 = Instant::now();
        let pre = match kind {
            PreconditionerKind::TwoLevelAdditiveSchwarz => shared_tas
                .take()
                .expect("two-level preconditioner was prebuilt"),
            PreconditionerKind::AdditiveSchwarz => {
                shared_as.take().expect("one-level preconditioner was prebuilt")
            }
            other => build_preconditioner(other, &op)?,
        };
        let build_seconds = match kind {
            PreconditionerKind::TwoLevelAdditiveSchwarz | PreconditionerKind::AdditiveSchwarz => {
                shared_build
            }
            _ => t1.elapsed().as_secs_f64(),
        };
        let t2 = Instant::now();
        let (result, diverged_at) =
            match pcg(|w| op.apply(w), &pre, &v, cfg.tol, cfg.max_iter, None) {
                Ok(res) => (Some(res), None),
                Err(gridgp::Error::Diverged { iteration }) => (None, Some(iteration)),
                Err(e) => return Err(e.into()),
            };
        runs.push(PrecondRun {
            kind,
            result,
            diverged_at,
            build_seconds,
            solve_seconds: t2.elapsed().as_secs_f64(),
        });
    }
    Ok(PrecondOutcome {
        runs,
        assemble_seconds,
        n_sg,
    })
}
