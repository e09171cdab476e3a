//! Zero-gap solves for the stationary wrappers: linear systems, monotone
//! inclusions, variational inequalities, anti-Hamiltonian systems, and
//! primal–dual pairs. Each quadratic instance is checked against a direct
//! linear-algebra oracle; nonsmooth ones against closed-form solutions.

use asdvar::convex::ConvexFn;
use asdvar::lagrangian::Lagrangian;
use asdvar::linops::LinOp;
use asdvar::set::ConvexSet;
use asdvar::stationary::{
    coercivity_probe, minimize_asd, projection, solve, solve_anti_hamiltonian,
    solve_fenchel_rockafellar, solve_inclusion, solve_linear_nonsym,
    solve_variational_inequality, SolveOptions,
};
use nalgebra::{DMatrix, DVector};

type Matrix = DMatrix<f64>;
type Vector = DVector<f64>;

fn opts() -> SolveOptions<f64> {
    SolveOptions::default()
}

fn a22() -> Matrix {
    Matrix::from_row_slice(2, 2, &[2.0, 1.0, -1.0, 2.0])
}

#[test]
fn minimize_asd_zero_operator_recovers_fenchel_minimum() {
    // L = basic(½‖x − c‖²), Λ = 0: the gap is φ(x) + φ*(0) and the
    // minimizer is where 0 ∈ ∂φ, i.e. x = c.
    let c = Vector::from_row_slice(&[3.0, -1.0]);
    let phi = ConvexFn::quadratic(Matrix::identity(2, 2), Vector::zeros(2))
        .unwrap()
        .pre_shift(c.clone())
        .unwrap();
    let l = Lagrangian::basic(phi);
    let lam = LinOp::new(Matrix::zeros(2, 2));
    let report = minimize_asd(&l, &lam, None, &opts()).unwrap();
    assert!(report.certified, "gap = {:.3e}", report.gap);
    assert!((&report.minimizer - &c).norm() <= 1e-6);
}

#[test]
fn minimize_asd_lax_milgram_quadratic() {
    // ψ(v) = ½⟨A_s v, v⟩ − ⟨f, v⟩ with Λ = A_skew solves Ax = f; the
    // direct solve gives x = (1, 1).
    let a = a22();
    let f = Vector::from_row_slice(&[3.0, 1.0]);
    let sym = (&a + a.transpose()) * 0.5;
    let skew = (&a - a.transpose()) * 0.5;
    let psi = ConvexFn::quadratic(sym, -&f).unwrap();
    let l = Lagrangian::basic(psi);
    let lam = LinOp::new(skew);
    let report = minimize_asd(&l, &lam, None, &opts()).unwrap();
    assert!(report.certified);
    assert!(report.gap <= 1e-10, "gap = {:.3e}", report.gap);
    let oracle = a.clone().lu().solve(&f).unwrap();
    assert!((&report.minimizer - &oracle).norm() <= 1e-6);
    assert!((&report.minimizer - Vector::from_row_slice(&[1.0, 1.0])).norm() <= 1e-6);
}

#[test]
fn minimize_asd_rejects_non_skew_operator() {
    let l = Lagrangian::basic(
        ConvexFn::quadratic(Matrix::identity(2, 2), Vector::zeros(2)).unwrap(),
    );
    let lam = LinOp::new(Matrix::identity(2, 2));
    assert!(minimize_asd(&l, &lam, None, &opts()).is_err());
}

#[test]
fn minimize_asd_with_sign_flip_automorphism() {
    // R = −I. L(x,p) = φ(x) + φ*(−p) with even φ is R-ASD, and Λ∘R stays
    // skew, so the pipeline still certifies a zero gap.
    use asdvar::lagrangian::Automorphism;
    let psi = ConvexFn::quadratic(Matrix::identity(2, 2), Vector::zeros(2)).unwrap();
    let l = Lagrangian::basic(psi);
    let lam = LinOp::new(Matrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
    let r = Automorphism::new(LinOp::new(-Matrix::identity(2, 2))).unwrap();
    let report = minimize_asd(&l, &lam, Some(&r), &opts()).unwrap();
    assert!(report.certified, "gap = {:.3e}", report.gap);
    assert!(report.minimizer.norm() <= 1e-6);
}

#[test]
fn linear_nonsym_two_by_two() {
    // Hand check at x = (1,1), y = (3,1): ½·4 + ½·4 − 4 = 0.
    let a = LinOp::new(a22());
    let y = Vector::from_row_slice(&[3.0, 1.0]);
    let report = solve_linear_nonsym(&a, &y, &opts()).unwrap();
    assert!(report.certified, "gap = {:.3e}", report.gap);
    assert!((&report.minimizer - Vector::from_row_slice(&[1.0, 1.0])).norm() <= 1e-6);
}

#[test]
fn linear_nonsym_identity_reduces_to_projection() {
    let a = LinOp::new(Matrix::identity(3, 3));
    let y = Vector::from_row_slice(&[0.3, -2.0, 5.0]);
    let report = solve_linear_nonsym(&a, &y, &opts()).unwrap();
    assert!(report.certified);
    assert!((&report.minimizer - &y).norm() <= 1e-6);
}

#[test]
fn linear_nonsym_random_ten_by_ten_matches_direct_solve() {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let n = 10;
    let raw = Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    // Shift so the symmetric part dominates: A_s ⪰ I.
    let a_mat = &raw + Matrix::identity(n, n) * (raw.norm() + 1.0);
    let y = Vector::from_fn(n, |i, _| (i as f64) - 4.0);
    let report = solve_linear_nonsym(&LinOp::new(a_mat.clone()), &y, &opts()).unwrap();
    assert!(report.certified);
    let oracle = a_mat.lu().solve(&y).unwrap();
    assert!((&report.minimizer - &oracle).norm() <= 1e-6 * (1.0 + oracle.norm()));
}

#[test]
fn linear_nonsym_rejects_non_coercive_matrix() {
    let a = LinOp::new(Matrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
    let y = Vector::from_row_slice(&[1.0, 0.0]);
    assert!(solve_linear_nonsym(&a, &y, &opts()).is_err());
}

#[test]
fn inclusion_zero_operator_quadratic() {
    // A = 0, φ = ½‖x‖², f = c: the inclusion f ∈ ∂φ(x) gives x = c.
    let c = Vector::from_row_slice(&[2.0, -1.0]);
    let phi = ConvexFn::quadratic(Matrix::identity(2, 2), Vector::zeros(2)).unwrap();
    let report =
        solve_inclusion(&LinOp::new(Matrix::zeros(2, 2)), &phi, &c, &opts()).unwrap();
    assert!(report.certified, "gap = {:.3e}", report.gap);
    assert!((&report.minimizer - &c).norm() <= 1e-6);
}

#[test]
fn inclusion_skew_operator_matches_linear_solve() {
    // A skew, φ = ½‖x‖²: the inclusion −Ax + f ∈ ∂φ(x) is (I + A)x = f.
    let a_mat = Matrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
    let f = Vector::from_row_slice(&[1.0, 0.0]);
    let phi = ConvexFn::quadratic(Matrix::identity(2, 2), Vector::zeros(2)).unwrap();
    let report = solve_inclusion(&LinOp::new(a_mat.clone()), &phi, &f, &opts()).unwrap();
    assert!(report.certified, "gap = {:.3e}", report.gap);
    let oracle = (Matrix::identity(2, 2) + a_mat).lu().solve(&f).unwrap();
    assert!((&report.minimizer - &oracle).norm() <= 1e-6);
}

#[test]
fn inclusion_scalar_quartic_root() {
    // A = 0, φ = ¼x⁴, f = 8: the inclusion is x³ = 8, so x̄ = 2.
    let phi = ConvexFn::power(1, 4.0).unwrap();
    let f = Vector::from_row_slice(&[8.0]);
    let report = solve_inclusion(&LinOp::new(Matrix::zeros(1, 1)), &phi, &f, &opts()).unwrap();
    assert!(report.certified, "gap = {:.3e}", report.gap);
    assert!((report.minimizer[0] - 2.0).abs() <= 1e-5, "x = {}", report.minimizer[0]);
}

#[test]
fn variational_inequality_unconstrained_reduction() {
    // K = whole space, A symmetric PD: the VI solution is A⁻¹f.
    let a_mat = Matrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0]);
    let f = Vector::from_row_slice(&[1.0, 4.0]);
    // Unprojected sample points are unbounded, so the slack check needs a
    // tighter solve than the default tolerances give.
    let mut o = opts();
    o.policy.abs_tol = 1e-13;
    o.policy.rel_tol = 1e-12;
    let report =
        solve_variational_inequality(&LinOp::new(a_mat.clone()), &ConvexSet::whole(2), &f, &o)
            .unwrap();
    assert!(
        report.certified,
        "gap = {:.3e}, converged = {}, checks = {:?}",
        report.gap, report.converged, report.check_results
    );
    let oracle = a_mat.lu().solve(&f).unwrap();
    assert!((&report.minimizer - &oracle).norm() <= 1e-6);
}

#[test]
fn variational_inequality_scalar_interval() {
    // a(u,v) = uv, K = [1,2], f = 0: the unconstrained solution 0 projects
    // onto the active lower bound, x̄ = 1.
    let report = solve_variational_inequality(
        &LinOp::new(Matrix::identity(1, 1)),
        &ConvexSet::boxed(
            Vector::from_row_slice(&[1.0]),
            Vector::from_row_slice(&[2.0]),
        )
        .unwrap(),
        &Vector::zeros(1),
        &opts(),
    )
    .unwrap();
    assert!(report.certified, "gap = {:.3e}", report.gap);
    assert!((report.minimizer[0] - 1.0).abs() <= 1e-6);
}

#[test]
fn variational_inequality_box_constraint_slack() {
    let report = solve_variational_inequality(
        &LinOp::new(a22()),
        &ConvexSet::boxed(Vector::zeros(2), Vector::from_row_slice(&[1.0, 1.0])).unwrap(),
        &Vector::from_row_slice(&[3.0, 3.0]),
        &opts(),
    )
    .unwrap();
    assert!(report.certified, "gap = {:.3e}, checks = {:?}", report.gap, report.check_results);
    let slack = report
        .check_results
        .iter()
        .find(|(n, _)| n == "vi_slack")
        .map(|(_, v)| *v)
        .unwrap();
    assert!(slack <= 1e-8, "slack = {:.3e}", slack);
}

#[test]
fn anti_hamiltonian_trivial_origin() {
    let phi = ConvexFn::quadratic(Matrix::identity(2, 2), Vector::zeros(2)).unwrap();
    let report = solve_anti_hamiltonian(
        &phi,
        &LinOp::new(Matrix::zeros(1, 1)),
        &LinOp::new(Matrix::zeros(1, 1)),
        &LinOp::new(Matrix::zeros(1, 1)),
        None,
        &opts(),
    )
    .unwrap();
    assert!(report.certified);
    assert!(report.minimizer.norm() <= 1e-6);
}

#[test]
fn anti_hamiltonian_scalar_coupling_forces_origin() {
    // φ = ½x² + ½y², A = 1, B = 0: the system is −y = x and x = y, so the
    // only solution is the origin.
    let phi = ConvexFn::quadratic(Matrix::identity(2, 2), Vector::zeros(2)).unwrap();
    let report = solve_anti_hamiltonian(
        &phi,
        &LinOp::new(Matrix::identity(1, 1)),
        &LinOp::new(Matrix::zeros(1, 1)),
        &LinOp::new(Matrix::zeros(1, 1)),
        None,
        &opts(),
    )
    .unwrap();
    assert!(report.certified, "gap = {:.3e}", report.gap);
    assert!(report.minimizer.norm() <= 1e-6);
}

#[test]
fn anti_hamiltonian_tilted_matches_block_solve() {
    // φ(x,y) = ½x² + ½y² − f·x − g·y, A = 1: the optimality system is
    // x − f = −y and y − g = x, a 2×2 linear solve.
    let f = 1.0;
    let g = 0.5;
    let phi = ConvexFn::quadratic(
        Matrix::identity(2, 2),
        Vector::from_row_slice(&[-f, -g]),
    )
    .unwrap();
    let report = solve_anti_hamiltonian(
        &phi,
        &LinOp::new(Matrix::identity(1, 1)),
        &LinOp::new(Matrix::zeros(1, 1)),
        &LinOp::new(Matrix::zeros(1, 1)),
        None,
        &opts(),
    )
    .unwrap();
    assert!(report.certified, "gap = {:.3e}", report.gap);
    // [[1, 1], [−1, 1]] (x, y) = (f, g).
    let oracle = Matrix::from_row_slice(2, 2, &[1.0, 1.0, -1.0, 1.0])
        .lu()
        .solve(&Vector::from_row_slice(&[f, g]))
        .unwrap();
    assert!((&report.minimizer - &oracle).norm() <= 1e-6);
}

#[test]
fn anti_hamiltonian_rejects_non_skew_b() {
    let phi = ConvexFn::quadratic(Matrix::identity(2, 2), Vector::zeros(2)).unwrap();
    let res = solve_anti_hamiltonian(
        &phi,
        &LinOp::new(Matrix::zeros(1, 1)),
        &LinOp::new(Matrix::identity(1, 1)),
        &LinOp::new(Matrix::zeros(1, 1)),
        None,
        &opts(),
    );
    assert!(res.is_err());
}

#[test]
fn anti_hamiltonian_scaled_pairing_metric() {
    // The c⁻²-weighted pairing on the y block: the metric adjoint becomes
    // A* = c⁻²Aᵀ and the zero-gap condition is MΛz ∈ ∂φ(z).
    let c2 = 4.0;
    let metric = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0 / c2]);
    let phi = ConvexFn::quadratic(
        Matrix::identity(2, 2),
        Vector::from_row_slice(&[-1.0, 0.0]),
    )
    .unwrap();
    let report = solve_anti_hamiltonian(
        &phi,
        &LinOp::new(Matrix::identity(1, 1)),
        &LinOp::new(Matrix::zeros(1, 1)),
        &LinOp::new(Matrix::zeros(1, 1)),
        Some(&metric),
        &opts(),
    )
    .unwrap();
    assert!(report.certified, "gap = {:.3e}", report.gap);
    // Fenchel equality forces ∇φ(z) = MΛz with MΛ = [[0, −¼], [¼, 0]]:
    // x − 1 = −y/4 and y = x/4, hence x = 16/17, y = 4/17.
    let x = report.minimizer[0];
    let y = report.minimizer[1];
    assert!((x - 16.0 / 17.0).abs() <= 1e-6, "x = {x}");
    assert!((y - 4.0 / 17.0).abs() <= 1e-6, "y = {y}");
}

#[test]
fn fenchel_rockafellar_identity_pair() {
    let phi = ConvexFn::quadratic(Matrix::identity(2, 2), Vector::zeros(2)).unwrap();
    let psi = ConvexFn::quadratic(Matrix::identity(2, 2), Vector::zeros(2)).unwrap();
    let report =
        solve_fenchel_rockafellar(&phi, &psi, &LinOp::new(Matrix::identity(2, 2)), &opts())
            .unwrap();
    assert!(report.certified);
    assert!(report.minimizer.norm() <= 1e-6);
}

#[test]
fn fenchel_rockafellar_scalar_quadratics() {
    // minimize ½(x−1)² + ½x²: x̄ = ½, and the optimality system
    // −A*ȳ ∈ ∂φ(x̄), Ax̄ ∈ ∂ψ*(ȳ) pins the dual variable at ȳ = ½
    // (both relations give ȳ = x̄).
    let phi = ConvexFn::quadratic(Matrix::identity(1, 1), Vector::zeros(1))
        .unwrap()
        .pre_shift(Vector::from_row_slice(&[1.0]))
        .unwrap();
    let psi = ConvexFn::quadratic(Matrix::identity(1, 1), Vector::zeros(1)).unwrap();
    let report =
        solve_fenchel_rockafellar(&phi, &psi, &LinOp::new(Matrix::identity(1, 1)), &opts())
            .unwrap();
    assert!(report.certified, "gap = {:.3e}", report.gap);
    assert!(report.gap <= 1e-10);
    assert!((report.minimizer[0] - 0.5).abs() <= 1e-6);
    assert!((report.minimizer[1] - 0.5).abs() <= 1e-6);
}

#[test]
fn fenchel_rockafellar_soft_threshold() {
    // φ = |x|, ψ = ½x²: since |∂ψ(0)| ≤ 1, the primal solution is x̄ = 0.
    let phi = ConvexFn::abs(1);
    let psi = ConvexFn::quadratic(Matrix::identity(1, 1), Vector::zeros(1)).unwrap();
    let report =
        solve_fenchel_rockafellar(&phi, &psi, &LinOp::new(Matrix::identity(1, 1)), &opts())
            .unwrap();
    assert!(report.converged);
    assert!(report.gap <= 1e-8, "gap = {:.3e}", report.gap);
    assert!(report.minimizer[0].abs() <= 1e-6, "x = {}", report.minimizer[0]);
}

#[test]
fn projection_pair_yields_same_minimizer() {
    // Solving with (φ, A) and with the projected pair (φ₀, A_skew) gives
    // the same stationary point.
    let a = LinOp::new(a22());
    let f = Vector::from_row_slice(&[1.0, 2.0]);
    let phi = ConvexFn::quadratic(Matrix::identity(2, 2), Vector::zeros(2)).unwrap();
    let direct = solve_inclusion(&a, &phi, &f, &opts()).unwrap();
    let (phi0, skew) = projection(&phi, &a).unwrap();
    let projected = solve_inclusion(&skew, &phi0, &f, &opts()).unwrap();
    assert!(direct.certified && projected.certified);
    assert!(
        (&direct.minimizer - &projected.minimizer).norm() <= 1e-6,
        "direct = {:?}, projected = {:?}",
        direct.minimizer.as_slice(),
        projected.minimizer.as_slice()
    );
}

#[test]
fn coercivity_probe_flags_linear_objective() {
    let lin = |x: &Vector| asdvar::ExtReal::Finite(x.sum());
    assert!(!coercivity_probe(&lin, 2, 5));
    let quad = |x: &Vector| asdvar::ExtReal::Finite(0.5 * x.norm_squared());
    assert!(coercivity_probe(&quad, 2, 5));
}

#[test]
fn certified_reports_satisfy_fenchel_equality() {
    // fy_residual ≤ 10·tol_gap on every certified solve above; spot-check
    // on the nonsymmetric linear instance.
    let report =
        solve_linear_nonsym(&LinOp::new(a22()), &Vector::from_row_slice(&[3.0, 1.0]), &opts())
            .unwrap();
    assert!(report.certified);
    assert!(report.fy_residual <= 10.0 * report.tol_gap);
}

#[test]
fn gap_never_meaningfully_negative() {
    let report =
        solve_linear_nonsym(&LinOp::new(a22()), &Vector::from_row_slice(&[3.0, 1.0]), &opts())
            .unwrap();
    assert!(report.gap >= -1e-8);
    let _ = solve(
        &asdvar::stationary::StationaryProblem::new(
            1,
            std::sync::Arc::new(|x: &Vector, grad: Option<&mut Vector>| {
                if let Some(g) = grad {
                    g.copy_from(x);
                }
                asdvar::ExtReal::Finite(0.5 * x.norm_squared())
            }),
        ),
        &opts(),
    );
}
