use std::path::PathBuf;

use clap::{Parser, Subcommand};

use gridgp_cli::config::{
    load_config, FitzhughConfig, PosteriorBenchConfig, PrecondBenchConfig, PriorBenchConfig,
    ThompsonConfig,
};
use gridgp_cli::experiments;
use gridgp_cli::output::{fmt_float, fmt_seconds, Report};
use gridgp_cli::{CliError, CliResult};

/// Sparse-grid GP sampling experiments.
#[derive(Parser)]
#[command(name = "gridgp", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML configuration file; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// RNG seed (stream key for all replicate draws).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output CSV path; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Replicates per configuration point.
    #[arg(long, global = true)]
    replicates: Option<usize>,

    /// Worker threads. Replicate streams are deterministic, so every
    /// schedule produces identical output; this build runs sequentially.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Prior sampling benchmark: time per draw and W2 against the true prior.
    PriorBench {
        /// Skip sampling; emit exact SoR-approximation W2 per grid level.
        #[arg(long)]
        analytic: bool,
    },
    /// Posterior sampling benchmark on Griewank training data.
    PosteriorBench,
    /// Thompson sampling on the Ackley function.
    Thompson,
    /// Stochastic FitzHugh-Nagumo simulation driven by GP posterior draws.
    Fitzhugh,
    /// PCG residual traces on Sigma_U under each preconditioner.
    PrecondBench,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn run(cli: Cli) -> CliResult<()> {
    if cli.threads == 0 {
        return Err(CliError::Config("--threads must be at least 1".into()));
    }
    let out = cli.out.as_deref();
    match cli.command {
        Command::PriorBench { analytic } => {
            let mut cfg: PriorBenchConfig = match &cli.config {
                Some(p) => load_config(p)?,
                None => PriorBenchConfig::default(),
            };
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if let Some(r) = cli.replicates {
                cfg.replicates = r;
            }
            if analytic {
                cfg.analytic = true;
            }
            let outcome = experiments::prior::run(&cfg)?;
            let mut report = Report::new("prior-bench", &cfg)?;
            report.columns = vec![
                "method",
                "d",
                "eta",
                "n_s",
                "replicates",
                "seconds_per_draw",
                "w2",
                "w2_floor",
            ];
            report.setup_notes = outcome.setup_notes;
            // the analytic rows reuse eta per entry
            let etas: Vec<u32> = if cfg.analytic {
                cfg.analytic_etas.clone()
            } else {
                Vec::new()
            };
            for (i, row) in outcome.rows.iter().enumerate() {
                let eta = if cfg.analytic { etas[i] } else { cfg.eta };
                report.rows.push(vec![
                    row.method.clone(),
                    cfg.dimension.to_string(),
                    eta.to_string(),
                    row.n_s.to_string(),
                    cfg.replicates.to_string(),
                    fmt_seconds(row.seconds_per_draw),
                    fmt_float(row.w2),
                    fmt_float(row.w2_floor),
                ]);
            }
            report.write(out)
        }
        Command::PosteriorBench => {
            let mut cfg: PosteriorBenchConfig = match &cli.config {
                Some(p) => load_config(p)?,
                None => PosteriorBenchConfig::default(),
            };
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if let Some(r) = cli.replicates {
                cfg.replicates = r;
            }
            let outcome = experiments::posterior::run(&cfg)?;
            let mut report = Report::new("posterior-bench", &cfg)?;
            report.columns = vec![
                "method",
                "d",
                "eta",
                "n",
                "m",
                "replicates",
                "seconds_per_draw",
                "w2",
                "w2_floor",
                "pcg_iterations_mean",
            ];
            report.setup_notes = outcome.setup_notes;
            for row in &outcome.rows {
                report.rows.push(vec![
                    row.method.clone(),
                    cfg.dimension.to_string(),
                    cfg.eta.to_string(),
                    row.n.to_string(),
                    cfg.test_points.to_string(),
                    cfg.replicates.to_string(),
                    fmt_seconds(row.seconds_per_draw),
                    fmt_float(row.w2),
                    fmt_float(row.w2_floor),
                    fmt_float(row.pcg_iterations_mean),
                ]);
            }
            report.write(out)
        }
        Command::Thompson => {
            let mut cfg: ThompsonConfig = match &cli.config {
                Some(p) => load_config(p)?,
                None => ThompsonConfig::default(),
            };
            if let Some(s) = cli.seed {
                cfg.seeds = vec![s];
            }
            let rows = experiments::thompson::run(&cfg)?;
            let mut report = Report::new("thompson", &cfg)?;
            report.columns = vec!["method", "d", "lengthscale", "seed", "iteration", "regret"];
            for row in &rows {
                report.rows.push(vec![
                    row.method.clone(),
                    cfg.dimension.to_string(),
                    format!("{}", row.lengthscale),
                    row.seed.to_string(),
                    row.iteration.to_string(),
                    fmt_float(row.regret),
                ]);
            }
            report.write(out)
        }
        Command::Fitzhugh => {
            let mut cfg: FitzhughConfig = match &cli.config {
                Some(p) => load_config(p)?,
                None => FitzhughConfig::default(),
            };
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if let Some(r) = cli.replicates {
                cfg.trajectories = r;
            }
            let outcome = experiments::fitzhugh::run(&cfg)?;
            let mut report = Report::new("fitzhugh", &cfg)?;
            report.columns = vec!["method", "step", "seconds", "w2_state", "mean_v", "mean_w"];
            for (method, steps) in &outcome.per_method {
                for s in steps {
                    report.rows.push(vec![
                        method.name().to_string(),
                        s.step.to_string(),
                        fmt_seconds(s.seconds),
                        fmt_float(s.w2_state),
                        fmt_float(s.mean_v),
                        fmt_float(s.mean_w),
                    ]);
                }
            }
            report.write(out)
        }
        Command::PrecondBench => {
            let mut cfg: PrecondBenchConfig = match &cli.config {
                Some(p) => load_config(p)?,
                None => PrecondBenchConfig::default(),
            };
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            let outcome = experiments::precond::run(&cfg)?;
            let mut report = Report::new("precond-bench", &cfg)?;
            report.columns = vec!["preconditioner", "iteration", "residual_norm", "converged"];
            report.setup_notes.push(format!(
                "n_sg={} assemble_seconds={:.3e}",
                outcome.n_sg, outcome.assemble_seconds
            ));
            for run in &outcome.runs {
                report.setup_notes.push(format!(
                    "preconditioner={} build_seconds={:.3e} solve_seconds={:.3e}",
                    run.kind.name(),
                    run.build_seconds,
                    run.solve_seconds
                ));
                match (&run.result, run.diverged_at) {
                    (Some(res), _) => {
                        for (i, r) in res.trace.iter().enumerate() {
                            report.rows.push(vec![
                                run.kind.name().to_string(),
                                i.to_string(),
                                fmt_float(*r),
                                res.converged.to_string(),
                            ]);
                        }
                    }
                    (None, Some(it)) => {
                        report.rows.push(vec![
                            run.kind.name().to_string(),
                            it.to_string(),
                            "inf".to_string(),
                            "false".to_string(),
                        ]);
                    }
                    (None, None) => unreachable!("a run either finishes or diverges"),
                }
            }
            report.write(out)
        }
    }
}
