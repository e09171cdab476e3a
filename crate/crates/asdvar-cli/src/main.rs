//! `asdvar` command-line driver: problem configs in, solution files and
//! zero-gap certificates out.
//!
//! Exit codes: 0 certified success, 1 config error, 2 converged but the
//! certificate is out of tolerance, 3 not converged (or I/O failure while
//! emitting). All diagnostics go to standard error; output files are
//! byte-deterministic for a fixed config and seed.

mod config;
mod demo;
mod report;

use anyhow::{Context, Result};
use asdvar::num::NumericPolicy;
use asdvar::stationary::{
    solve_inclusion, solve_linear_nonsym, solve_variational_inequality, SolveOptions,
};
use asdvar::{evolution, LinOp};
use clap::{Parser, Subcommand};
use config::{config_hash, load};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use report::RunReport;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "asdvar", about = "Convex-duality solvers with zero-gap certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the Fenchel conjugate of a catalog function at given points.
    Conjugate {
        #[arg(long)]
        config: PathBuf,
        /// Write values as CSV (point coordinates, then the value).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample the anti-selfduality residual of a Lagrangian tree.
    AsdCheck {
        #[arg(long)]
        lagrangian: PathBuf,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Solve a stationary problem (linear, subgradient inclusion, or VI).
    SolveStationary {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a dissipative flow by path-space minimization.
    SolveFlow {
        #[arg(long)]
        config: PathBuf,
        /// JSON certificate report.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Trajectory as CSV (`t,x0,x1,...`).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Built-in demonstration problems.
    Demo {
        #[command(subcommand)]
        which: demo::Demo,
    },
}

fn main() -> ExitCode {
    // Parallelism cap; the current solvers are single-threaded, so any
    // positive value is accepted as an upper bound.
    if let Ok(v) = std::env::var("ASDVAR_NUM_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n >= 1 => {}
            _ => {
                eprintln!("error: ASDVAR_NUM_THREADS must be a positive integer, got {v:?}");
                return ExitCode::from(1);
            }
        }
    }
    let cli = Cli::parse();
    let start = Instant::now();
    let code = match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    };
    eprintln!("wall_time_ms={}", start.elapsed().as_millis());
    ExitCode::from(code as u8)
}

fn run(command: Command) -> Result<i32> {
    match command {
        Command::Conjugate { config, out } => conjugate_cmd(&config, out.as_deref()),
        Command::AsdCheck { lagrangian, samples, seed } => {
            asd_check_cmd(&lagrangian, samples, seed)
        }
        Command::SolveStationary { config, out } => stationary_cmd(&config, out.as_deref()),
        Command::SolveFlow { config, out, csv } => {
            flow_cmd(&config, out.as_deref(), csv.as_deref())
        }
        Command::Demo { which } => demo::run(which),
    }
}

fn conjugate_cmd(path: &std::path::Path, out: Option<&std::path::Path>) -> Result<i32> {
    let cfg: config::ConjugateConfig = load(path)?;
    let phi = cfg.function.build()?;
    let mut rows = Vec::new();
    let mut all_converged = true;
    for pt in &cfg.points {
        if pt.len() != phi.dim() {
            anyhow::bail!("point {:?} does not match function dimension {}", pt, phi.dim());
        }
        let p = config::vector(pt);
        let value = phi.conjugate_eval(&p);
        let shown = match value.finite() {
            Some(v) => report::sig17(v),
            None => "inf".to_string(),
        };
        // The exact path is always converged; the numeric fallback reports
        // its own convergence through a fresh evaluation.
        if value.is_finite() && phi.conj_kind() != asdvar::convex::ConjKind::ExactClosedForm {
            let mut scratch = asdvar::convex::ConjScratch::default();
            let (_, _, conv) =
                phi.conjugate_eval_numeric(&p, &mut scratch, &NumericPolicy::default());
            all_converged &= conv;
        }
        eprintln!("conjugate{pt:?} = {shown}");
        let mut row: Vec<String> = pt.iter().map(|v| report::sig17(*v)).collect();
        row.push(shown);
        rows.push(row.join(","));
    }
    if let Some(out) = out {
        let header: Vec<String> =
            (0..phi.dim()).map(|i| format!("p{i}")).chain(["value".to_string()]).collect();
        let text = format!("{}\n{}\n", header.join(","), rows.join("\n"));
        std::fs::write(out, text).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(if all_converged { 0 } else { 3 })
}

fn asd_check_cmd(path: &std::path::Path, samples: Option<usize>, seed: Option<u64>) -> Result<i32> {
    let cfg: config::AsdCheckConfig = load(path)?;
    let lag = cfg.lagrangian.build()?;
    let samples = samples.or(cfg.samples).unwrap_or(100);
    let seed = seed.or(cfg.seed).unwrap_or(0);
    let radius = cfg.radius.unwrap_or(1.0);
    let tol = cfg.tol.unwrap_or(1e-8);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rep = lag.asd_residual(samples, None, radius, &mut rng);
    eprintln!(
        "asd_residual={:.3e} evaluated={} skipped={} tol={:.1e}",
        rep.residual, rep.evaluated, rep.skipped, tol
    );
    Ok(if rep.residual <= tol { 0 } else { 2 })
}

fn stationary_cmd(path: &std::path::Path, out: Option<&std::path::Path>) -> Result<i32> {
    let raw = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let hash = config_hash(&raw);
    let cfg: config::StationaryConfig = load(path)?;
    let mut opts = SolveOptions::default();
    let (rep, label) = match &cfg {
        config::StationaryConfig::Linear { a, y, policy } => {
            policy.apply(&mut opts.policy);
            opts.tol_gap = policy.tol_gap;
            let a = LinOp::new(config::matrix(a)?);
            (solve_linear_nonsym(&a, &config::vector(y), &opts)?, "solve-stationary linear")
        }
        config::StationaryConfig::Inclusion { a, phi, f, policy } => {
            policy.apply(&mut opts.policy);
            opts.tol_gap = policy.tol_gap;
            let a = LinOp::new(config::matrix(a)?);
            (
                solve_inclusion(&a, &phi.build()?, &config::vector(f), &opts)?,
                "solve-stationary inclusion",
            )
        }
        config::StationaryConfig::Vi { a, set, f, policy } => {
            policy.apply(&mut opts.policy);
            opts.tol_gap = policy.tol_gap;
            let a = LinOp::new(config::matrix(a)?);
            (
                solve_variational_inequality(&a, &set.build()?, &config::vector(f), &opts)?,
                "solve-stationary vi",
            )
        }
    };
    let report = RunReport::from_solve(label, &hash, None, &rep);
    report.print_certificate();
    if let Some(out) = out {
        report::write_report(&report, out)?;
    }
    Ok(report.exit_code())
}

fn flow_cmd(
    path: &std::path::Path,
    out: Option<&std::path::Path>,
    csv: Option<&std::path::Path>,
) -> Result<i32> {
    let raw = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let hash = config_hash(&raw);
    let cfg: config::FlowConfig = load(path)?;
    let mut opts = SolveOptions::default();
    cfg.policy.apply(&mut opts.policy);
    opts.tol_gap = cfg.policy.tol_gap;
    let phi = cfg.phi.build()?;
    let a = LinOp::new(config::matrix(&cfg.a)?);
    let grid = evolution::TimeGrid::new(cfg.t_final, cfg.steps)?;
    let (traj, rep) = evolution::solve_semiconvex_flow(
        &phi,
        &a,
        cfg.omega,
        &config::vector(&cfg.f),
        &config::vector(&cfg.u0),
        grid,
        &opts,
    )?;
    let report = RunReport::from_solve("solve-flow", &hash, None, &rep);
    report.print_certificate();
    if let Some(out) = out {
        report::write_report(&report, out)?;
    }
    if let Some(csv) = csv {
        report::write_path_csv(&traj, csv)?;
    }
    Ok(report.exit_code())
}
