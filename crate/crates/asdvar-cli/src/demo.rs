//! Built-in demonstration problems, each ending in a zero-gap certificate.
//!
//! `demo suite --out-dir DIR` runs every demo and writes its reports and
//! trajectories into DIR with fixed file names; repeated runs with the same
//! seed produce byte-identical files.

use anyhow::{Context, Result};
use asdvar::evolution::TimeGrid;
use asdvar::num::gaussian_vector;
use asdvar::pde::{
    demo_heat_flow, demo_implicit_transport, demo_obstacle_flow, demo_porous_media,
    demo_transport_stationary, Grid1D,
};
use asdvar::stationary::{solve_linear_nonsym, SolveOptions, SolveReport};
use asdvar::{ConvexFn, ConvexSet, LinOp, Matrix, Vector};
use clap::Subcommand;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::Path;

use crate::report::{write_path_csv, write_report, RunReport};

#[derive(Subcommand)]
pub enum Demo {
    /// Invert a random coercive nonsymmetric matrix by convex minimization.
    Matinv {
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Stationary 1-D transport with exponential-decay solution.
    Transport {
        #[arg(long, default_value_t = 64)]
        n: usize,
    },
    /// Implicit 1-D transport (nonlinearity inside the time derivative).
    ImplicitTransport {
        #[arg(long, default_value_t = 64)]
        n: usize,
    },
    /// 1-D heat flow with zero Dirichlet sides.
    Heat {
        #[arg(long, default_value_t = 17)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        /// CSV trajectory output.
        #[arg(long)]
        csv: Option<std::path::PathBuf>,
    },
    /// 1-D porous-media flow in the discrete H⁻¹ metric.
    Porous {
        #[arg(long, default_value_t = 17)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        #[arg(long, default_value_t = 1.0)]
        m: f64,
    },
    /// Obstacle gradient flow: decay onto a box constraint.
    Obstacle {
        #[arg(long, default_value_t = 40)]
        steps: usize,
    },
    /// Run every demo, writing reports (and paths) into a directory.
    Suite {
        #[arg(long)]
        out_dir: std::path::PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

pub fn run(which: Demo) -> Result<i32> {
    match which {
        Demo::Matinv { n, seed } => {
            let (rep, inv_err) = matinv(n, seed)?;
            let report = RunReport::from_solve("demo matinv", "-", Some(seed), &rep);
            report.print_certificate();
            eprintln!("  direct-solve distance = {inv_err:.3e}");
            Ok(report.exit_code())
        }
        Demo::Transport { n } => {
            let rep = transport(n)?;
            let report = RunReport::from_solve("demo transport", "-", None, &rep);
            report.print_certificate();
            Ok(report.exit_code())
        }
        Demo::ImplicitTransport { n } => {
            let rep = implicit_transport(n)?;
            let report = RunReport::from_solve("demo implicit-transport", "-", None, &rep);
            report.print_certificate();
            Ok(report.exit_code())
        }
        Demo::Heat { n, steps, csv } => {
            let (path, rep) = heat(n, steps)?;
            let report = RunReport::from_solve("demo heat", "-", None, &rep);
            report.print_certificate();
            if let Some(csv) = csv {
                write_path_csv(&path, &csv)?;
            }
            Ok(report.exit_code())
        }
        Demo::Porous { n, steps, m } => {
            let (_, rep) = porous(n, steps, m)?;
            let report = RunReport::from_solve("demo porous", "-", None, &rep);
            report.print_certificate();
            Ok(report.exit_code())
        }
        Demo::Obstacle { steps } => {
            let (_, rep) = obstacle(steps)?;
            let report = RunReport::from_solve("demo obstacle", "-", None, &rep);
            report.print_certificate();
            Ok(report.exit_code())
        }
        Demo::Suite { out_dir, seed } => suite(&out_dir, seed),
    }
}

/// Random `A` with symmetric part ⪰ I: solve `Ax = y`, report the distance
/// to the direct solve.
fn matinv(n: usize, seed: u64) -> Result<(SolveReport<f64>, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g: Matrix = Matrix::from_fn(n, n, |_, _| gaussian_vector::<f64, _>(&mut rng, 1, 1.0)[0]);
    let skew = (&g - g.transpose()) * 0.5;
    let sym = Matrix::identity(n, n) + (g.transpose() * &g) / (4.0 * n as f64);
    let a = LinOp::new(&sym + &skew);
    let y: Vector = gaussian_vector(&mut rng, n, 1.0);
    let rep = solve_linear_nonsym(&a, &y, &SolveOptions::default())?;
    let direct = a
        .matrix()
        .clone()
        .lu()
        .solve(&y)
        .context("direct solve failed on a coercive matrix")?;
    let inv_err = (&rep.minimizer - &direct).norm();
    Ok((rep, inv_err))
}

/// `−u′ = u + f` with `u(0) = 1`, `f = 0`: solution `e^{−x}`.
fn transport(n: usize) -> Result<SolveReport<f64>> {
    let grid = Grid1D::new(n)?;
    let j = ConvexFn::constant(1, 0.0);
    let f = Vector::zeros(n);
    Ok(demo_transport_stationary(&grid, 1.0, &j, &f, 1.0, &SolveOptions::default())?)
}

fn implicit_transport(n: usize) -> Result<SolveReport<f64>> {
    let grid = Grid1D::new(n)?;
    Ok(demo_implicit_transport(&grid, &SolveOptions::default())?)
}

/// Heat flow from the first Dirichlet eigenvector.
fn heat(n: usize, steps: usize) -> Result<(asdvar::evolution::Path<f64>, SolveReport<f64>)> {
    let grid = Grid1D::new(n)?;
    let u0 = Vector::from_fn(n - 2, |i, _| (std::f64::consts::PI * grid.node::<f64>(i + 1)).sin());
    let tgrid = TimeGrid::new(0.1, steps)?;
    Ok(demo_heat_flow(&grid, 1.0, 0.0, &u0, tgrid, &SolveOptions::default())?)
}

/// Porous-media flow from the parabola `x(1−x)`.
fn porous(n: usize, steps: usize, m: f64) -> Result<(asdvar::evolution::Path<f64>, SolveReport<f64>)> {
    let grid = Grid1D::new(n)?;
    let u0 = Vector::from_fn(n - 2, |i, _| {
        let x = grid.node::<f64>(i + 1);
        x * (1.0 - x)
    });
    let tgrid = TimeGrid::new(0.05, steps)?;
    Ok(demo_porous_media(&grid, m, 0.0, &u0, tgrid, &SolveOptions::default())?)
}

/// Scalar decay onto the box `[1, 2]`: the flow sticks at the obstacle.
fn obstacle(steps: usize) -> Result<(asdvar::evolution::Path<f64>, SolveReport<f64>)> {
    let a = LinOp::new(Matrix::identity(1, 1));
    let k = ConvexSet::boxed(Vector::from_row_slice(&[1.0]), Vector::from_row_slice(&[2.0]))?;
    let f = Vector::zeros(1);
    let x0 = Vector::from_row_slice(&[2.0]);
    let tgrid = TimeGrid::new(2.0, steps)?;
    Ok(demo_obstacle_flow(&a, &k, &f, &x0, tgrid, &SolveOptions::default())?)
}

fn suite(out_dir: &Path, seed: u64) -> Result<i32> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    let mut worst = 0i32;
    let mut emit = |name: &str, report: &RunReport| -> Result<()> {
        write_report(report, &out_dir.join(format!("{name}.json")))?;
        worst = worst.max(report.exit_code());
        Ok(())
    };

    let (rep, _) = matinv(10, seed)?;
    emit("matinv", &RunReport::from_solve("demo matinv", "-", Some(seed), &rep))?;

    let rep = transport(64)?;
    emit("transport", &RunReport::from_solve("demo transport", "-", None, &rep))?;

    let rep = implicit_transport(64)?;
    emit(
        "implicit_transport",
        &RunReport::from_solve("demo implicit-transport", "-", None, &rep),
    )?;

    let (path, rep) = heat(17, 20)?;
    emit("heat", &RunReport::from_solve("demo heat", "-", None, &rep))?;
    write_path_csv(&path, &out_dir.join("heat_path.csv"))?;

    let (path, rep) = porous(17, 20, 1.0)?;
    emit("porous", &RunReport::from_solve("demo porous", "-", None, &rep))?;
    write_path_csv(&path, &out_dir.join("porous_path.csv"))?;

    let (path, rep) = obstacle(40)?;
    emit("obstacle", &RunReport::from_solve("demo obstacle", "-", None, &rep))?;
    write_path_csv(&path, &out_dir.join("obstacle_path.csv"))?;

    eprintln!("suite complete in {}", out_dir.display());
    Ok(worst)
}
