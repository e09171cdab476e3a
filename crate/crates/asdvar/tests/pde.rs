//! One-dimensional demos: exact summation-by-parts identities, transport
//! against closed-form and Runge–Kutta oracles, diffusion and porous-media
//! flows against spectral/implicit-Euler oracles, and the obstacle flow.

use asdvar::convex::ConvexFn;
use asdvar::evolution::TimeGrid;
use asdvar::pde::{
    build_sbp_derivative, demo_heat_flow, demo_implicit_transport, demo_obstacle_flow,
    demo_porous_media, demo_transport_stationary, Grid1D,
};
use asdvar::linops::LinOp;
use asdvar::set::ConvexSet;
use asdvar::stationary::SolveOptions;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Matrix = DMatrix<f64>;
type Vector = DVector<f64>;

fn opts() -> SolveOptions<f64> {
    SolveOptions::default()
}

fn check(report: &asdvar::stationary::SolveReport<f64>, name: &str) -> f64 {
    report
        .check_results
        .iter()
        .find(|(n, _)| n == name)
        .unwrap_or_else(|| panic!("missing check {name}"))
        .1
}

// ------------------------------------------------------------------- grid

#[test]
fn grid_weights_sum_to_one() {
    for n in [3usize, 8, 17, 64] {
        let g = Grid1D::new(n).unwrap();
        let w: Vector = g.weights();
        assert!((w.sum() - 1.0).abs() <= 1e-14);
        assert!(w.min() > 0.0);
        assert!((g.node::<f64>(n - 1) - 1.0).abs() <= 1e-14);
    }
    assert!(Grid1D::new(2).is_err());
}

// -------------------------------------------------------------------- SBP

#[test]
fn sbp_identity_exact_on_grid_family() {
    for n in [8usize, 16, 32, 64, 128] {
        let g = Grid1D::new(n).unwrap();
        let sbp = build_sbp_derivative::<f64>(&g).unwrap();
        assert!(sbp.sbp_residual() <= 1e-13, "n={n}");

        let ones = Vector::from_element(n, 1.0);
        assert!(sbp.d.apply(&ones).amax() <= 1e-12, "D·1 = 0 at n={n}");

        let x = Vector::from_fn(n, |i, _| g.node::<f64>(i));
        let dx = sbp.d.apply(&x);
        assert!((dx - ones).amax() <= 1e-12, "exact on linears at n={n}");
    }
}

#[test]
fn sbp_triplet_is_skew_modulo_boundary() {
    let g = Grid1D::new(8).unwrap();
    let sbp = build_sbp_derivative::<f64>(&g).unwrap();
    let triplet = sbp.triplet().unwrap();
    assert!(triplet.operator_residual() <= 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    assert!(triplet.residual(20, &mut rng) <= 1e-12);
}

// -------------------------------------------------- stationary transport

/// `−u′ − u = 0`, `u(0) = 1` has solution `e^{−x}`; the error is first
/// order, halving (ratio ≈ 2) as the grid is refined.
#[test]
fn transport_exponential_decay_first_order() {
    let j = ConvexFn::constant(1, 0.0);
    let mut errs = Vec::new();
    for n in [16usize, 32, 64] {
        let g = Grid1D::new(n).unwrap();
        let f = Vector::zeros(n);
        let report = demo_transport_stationary(&g, 1.0, &j, &f, 1.0, &opts()).unwrap();
        assert!(report.certified, "n={n}: {:?}", report.check_results);
        let h = g.h::<f64>();
        let err = (0..n)
            .map(|i| (report.minimizer[i] - (-g.node::<f64>(i)).exp()).abs())
            .fold(0.0f64, f64::max);
        assert!(err <= 2.0 * h, "n={n}: err={err}");
        errs.push(err);
    }
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.6..=2.4).contains(&ratio), "ratio {ratio}");
    }
}

#[test]
fn transport_zero_datum_gives_zero_solution() {
    let n = 32;
    let g = Grid1D::new(n).unwrap();
    let j = ConvexFn::constant(1, 0.0);
    let report = demo_transport_stationary(&g, 1.0, &j, &Vector::zeros(n), 0.0, &opts()).unwrap();
    assert!(report.gap <= 1e-10);
    assert!(report.minimizer.amax() <= 1e-6);
}

/// Cubic absorption `−u′ − u − u³ = −2`, `u(0) = 0`, against a fine
/// Runge–Kutta integration of `u′ = 2 − u − u³`.
#[test]
fn transport_cubic_beta_matches_rk4() {
    let n = 64;
    let g = Grid1D::new(n).unwrap();
    let h = g.h::<f64>();
    let j = ConvexFn::power(1, 4.0).unwrap(); // ¼|u|⁴, slope u³
    let f = Vector::from_element(n, -2.0);
    let report = demo_transport_stationary(&g, 1.0, &j, &f, 0.0, &opts()).unwrap();
    assert!(report.certified, "{:?}", report.check_results);

    // RK4 oracle on a 100× finer step.
    let rhs = |u: f64| 2.0 - u - u * u * u;
    let mut u = 0.0f64;
    let dt = h / 100.0;
    let mut oracle = vec![0.0f64];
    for _ in 0..n - 1 {
        for _ in 0..100 {
            let k1 = rhs(u);
            let k2 = rhs(u + 0.5 * dt * k1);
            let k3 = rhs(u + 0.5 * dt * k2);
            let k4 = rhs(u + dt * k3);
            u += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        oracle.push(u);
    }
    let err = (0..n)
        .map(|i| (report.minimizer[i] - oracle[i]).abs())
        .fold(0.0f64, f64::max);
    assert!(err <= 3.0 * h, "err={err}");
}

#[test]
fn transport_rejects_bad_inputs() {
    let g = Grid1D::new(8).unwrap();
    let j = ConvexFn::constant(1, 0.0);
    assert!(demo_transport_stationary(&g, 0.0, &j, &Vector::zeros(8), 1.0, &opts()).is_err());
    assert!(demo_transport_stationary(&g, 1.0, &j, &Vector::zeros(5), 1.0, &opts()).is_err());
    let j2 = ConvexFn::constant(2, 0.0);
    assert!(demo_transport_stationary(&g, 1.0, &j2, &Vector::zeros(8), 1.0, &opts()).is_err());
}

// ---------------------------------------------------- implicit transport

#[test]
fn implicit_transport_solves_toy_equation() {
    let n = 64;
    let g = Grid1D::new(n).unwrap();
    let h = g.h::<f64>();
    let report = demo_implicit_transport(&g, &opts()).unwrap();
    assert!(report.certified, "{:?}", report.check_results);
    assert!(report.gap <= 1e-8, "gap={}", report.gap);
    // Solution of −u′ = u + 1, u(0) = 0.
    let err = (0..n)
        .map(|i| (report.minimizer[i] - ((-g.node::<f64>(i)).exp() - 1.0)).abs())
        .fold(0.0f64, f64::max);
    assert!(err <= 2.0 * h, "err={err}");
    assert!(report.minimizer[0].abs() <= 1e-4);
}

#[test]
fn implicit_transport_pointwise_identity_small() {
    for n in [16usize, 32, 64] {
        let g = Grid1D::new(n).unwrap();
        let h = g.h::<f64>();
        let report = demo_implicit_transport(&g, &opts()).unwrap();
        assert!(check(&report, "pointwise_identity") <= 2.0 * h, "n={n}");
        assert!(check(&report, "entrance_value") <= 1e-8, "n={n}");
        assert!(report.gap <= 1e-8, "n={n}");
    }
}

// ----------------------------------------------------------- heat flows

/// Discrete Laplacian eigenvector initial data decays as `e^{−λ₁ t}` with
/// the discrete eigenvalue `λ₁ = (2 − 2cos πh)/h²`.
#[test]
fn heat_flow_eigenvector_decay() {
    let n = 17;
    let g = Grid1D::new(n).unwrap();
    let h = g.h::<f64>();
    let d = n - 2;
    let u0 = Vector::from_fn(d, |i, _| (std::f64::consts::PI * g.node::<f64>(i + 1)).sin());
    let lambda1 = (2.0 - 2.0 * (std::f64::consts::PI * h).cos()) / (h * h);
    let tg = TimeGrid::new(0.1, 20).unwrap();
    let (path, report) = demo_heat_flow(&g, 1.0, 0.0, &u0, tg, &opts()).unwrap();
    assert!(report.certified, "{:?}", report.check_results);
    let decay = (-lambda1 * 0.1).exp();
    let err = (&path.values[20] - &u0 * decay).amax();
    assert!(err <= 3.0 * tg.dt(), "err={err}");
}

#[test]
fn heat_flow_zero_initial_zero_path() {
    let g = Grid1D::new(9).unwrap();
    let tg = TimeGrid::new(0.5, 10).unwrap();
    let (path, report) = demo_heat_flow(&g, 1.0, 0.0, &Vector::zeros(7), tg, &opts()).unwrap();
    assert!(report.certified);
    for v in &path.values {
        assert!(v.amax() <= 1e-9);
    }
}

/// Nonlinear diffusion (`p = 3`) shrinks the norm monotonically.
#[test]
fn heat_flow_p3_norm_monotone() {
    let g = Grid1D::new(9).unwrap();
    let d = 7;
    let u0 = Vector::from_fn(d, |i, _| 0.2 * (std::f64::consts::PI * g.node::<f64>(i + 1)).sin());
    let tg = TimeGrid::new(0.5, 8).unwrap();
    let (path, _report) = demo_heat_flow(&g, 3.0, 0.0, &u0, tg, &opts()).unwrap();
    for i in 0..8 {
        assert!(
            path.values[i + 1].norm() <= path.values[i].norm() + 1e-8,
            "step {i}"
        );
    }
    assert!(path.values[8].norm() < 0.9 * u0.norm());
}

#[test]
fn heat_flow_rejects_bad_exponent() {
    let g = Grid1D::new(9).unwrap();
    let tg = TimeGrid::new(0.1, 4).unwrap();
    assert!(demo_heat_flow(&g, 0.5, 0.0, &Vector::zeros(7), tg, &opts()).is_err());
    assert!(demo_heat_flow(&g, 1.0, 0.0, &Vector::zeros(5), tg, &opts()).is_err());
}

// ---------------------------------------------------------- porous media

/// `m = 1` porous media in `H⁻¹` is the linear heat semigroup; cross-check
/// against the spectral decomposition of the discrete Laplacian.
#[test]
fn porous_media_m1_matches_spectral_oracle() {
    let n = 17;
    let g = Grid1D::new(n).unwrap();
    let h = g.h::<f64>();
    let d = n - 2;
    let u0 = Vector::from_fn(d, |i, _| {
        let x = g.node::<f64>(i + 1);
        x * (1.0 - x)
    });
    let t_final = 0.05;
    let tg = TimeGrid::new(t_final, 20).unwrap();
    let (path, report) = demo_porous_media(&g, 1.0, 0.0, &u0, tg, &opts()).unwrap();
    assert!(report.certified, "{:?}", report.check_results);

    // Spectral oracle assembled independently of the library.
    let s = 1.0 / (h * h);
    let lap = Matrix::from_fn(d, d, |i, j| {
        if i == j {
            2.0 * s
        } else if i.abs_diff(j) == 1 {
            -s
        } else {
            0.0
        }
    });
    let eig = lap.symmetric_eigen();
    let coeff = eig.eigenvectors.transpose() * &u0;
    let mut exact = Vector::zeros(d);
    for k in 0..d {
        exact += eig.eigenvectors.column(k) * (coeff[k] * (-eig.eigenvalues[k] * t_final).exp());
    }
    let err = (&path.values[20] - exact).amax();
    assert!(err <= 3.0 * (tg.dt() + h * h), "err={err}");
}

#[test]
fn porous_media_zero_initial_zero_path() {
    let g = Grid1D::new(9).unwrap();
    let tg = TimeGrid::new(0.2, 8).unwrap();
    let (path, report) = demo_porous_media(&g, 1.0, 0.0, &Vector::zeros(7), tg, &opts()).unwrap();
    assert!(report.certified);
    for v in &path.values {
        assert!(v.amax() <= 1e-9);
    }
}

/// `m = 2`: the nodal mass `Σ h·uᵢ(t)` follows an independently written
/// implicit-Euler integration in the `H⁻¹` metric to first order.
#[test]
fn porous_media_m2_mass_vs_implicit_euler_oracle() {
    let n = 9;
    let g = Grid1D::new(n).unwrap();
    let h = g.h::<f64>();
    let d = n - 2;
    let u0 = Vector::from_fn(d, |i, _| (std::f64::consts::PI * g.node::<f64>(i + 1)).sin());
    let tg = TimeGrid::new(0.2, 10).unwrap();
    let dt = tg.dt();
    let (path, _report) = demo_porous_media(&g, 2.0, 0.0, &u0, tg, &opts()).unwrap();

    // Oracle: M(u⁺ − u)/Δt = −∇φ(u⁺) with M = h·L⁻¹, ∇φ(u)ᵢ = h·uᵢ|uᵢ|,
    // solved per step by a damped Newton iteration written from scratch.
    let s = 1.0 / (h * h);
    let lap = Matrix::from_fn(d, d, |i, j| {
        if i == j {
            2.0 * s
        } else if i.abs_diff(j) == 1 {
            -s
        } else {
            0.0
        }
    });
    let m_mat = lap.clone().try_inverse().unwrap() * h;
    let mut u = u0.clone();
    let mut oracle_mass = vec![h * u.sum()];
    for _ in 0..10 {
        let mut next = u.clone();
        for _ in 0..60 {
            let grad_phi = Vector::from_fn(d, |i, _| h * next[i] * next[i].abs());
            let res = &m_mat * (&next - &u) / dt + grad_phi;
            let jac = &m_mat / dt
                + Matrix::from_diagonal(&Vector::from_fn(d, |i, _| 2.0 * h * next[i].abs()));
            let step = jac.lu().solve(&res).unwrap();
            next -= &step;
            if step.amax() <= 1e-13 {
                break;
            }
        }
        u = next;
        oracle_mass.push(h * u.sum());
    }
    for i in 0..=10 {
        let mass = h * path.values[i].sum();
        assert!(
            (mass - oracle_mass[i]).abs() <= 3.0 * dt * (1.0 + u0.norm()),
            "node {i}: {mass} vs {}",
            oracle_mass[i]
        );
    }
}

#[test]
fn porous_media_rejects_bad_exponent() {
    let g = Grid1D::new(9).unwrap();
    let tg = TimeGrid::new(0.1, 4).unwrap();
    assert!(demo_porous_media(&g, 0.5, 0.0, &Vector::zeros(7), tg, &opts()).is_err());
}

// ---------------------------------------------------------- obstacle flow

#[test]
fn obstacle_whole_space_reduces_to_linear_flow() {
    let a = LinOp::new(Matrix::from_diagonal(&Vector::from_row_slice(&[1.0, 2.0])));
    let k = ConvexSet::whole(2);
    let x0 = Vector::from_row_slice(&[1.0, -1.0]);
    let tg = TimeGrid::new(1.0, 40).unwrap();
    let (path, report) =
        demo_obstacle_flow(&a, &k, &Vector::zeros(2), &x0, tg, &opts()).unwrap();
    assert!(report.certified, "{:?}", report.check_results);
    let exact = Vector::from_row_slice(&[(-1.0f64).exp(), -(-2.0f64).exp()]);
    assert!((&path.values[40] - exact).amax() <= 3.0 * tg.dt());
}

/// Decay onto the obstacle: `K = [1,2]`, `u̇ = −u` while interior, then the
/// path sticks at the lower face; the sampled variational inequality holds
/// with `O(Δt)` slack.
#[test]
fn obstacle_decays_and_sticks() {
    let a = LinOp::identity(1);
    let k = ConvexSet::boxed(
        Vector::from_element(1, 1.0),
        Vector::from_element(1, 2.0),
    )
    .unwrap();
    let x0 = Vector::from_element(1, 2.0);
    let tg = TimeGrid::new(2.0, 40).unwrap();
    let dt = tg.dt();
    let (path, report) = demo_obstacle_flow(&a, &k, &Vector::zeros(1), &x0, tg, &opts()).unwrap();
    assert!(check(&report, "path_in_set") <= 1e-8);
    assert!(check(&report, "vi_slack") <= 3.0 * dt, "slack={}", check(&report, "vi_slack"));

    // Projected implicit Euler written from scratch.
    let mut u = 2.0f64;
    for i in 0..40 {
        u = (u / (1.0 + dt)).clamp(1.0, 2.0);
        assert!((path.values[i + 1][0] - u).abs() <= 5.0 * dt, "step {i}");
    }
    assert!((path.values[40][0] - 1.0).abs() <= 0.05);
}

/// Starting on the boundary of `K` with a force pushing inward, the path
/// leaves the boundary and settles at the interior equilibrium.
#[test]
fn obstacle_leaves_boundary_under_inward_force() {
    let a = LinOp::identity(1);
    let k = ConvexSet::boxed(Vector::zeros(1), Vector::from_element(1, 1.0)).unwrap();
    let x0 = Vector::from_element(1, 1.0);
    let tg = TimeGrid::new(2.0, 40).unwrap();
    let (path, report) =
        demo_obstacle_flow(&a, &k, &Vector::from_element(1, 0.5), &x0, tg, &opts()).unwrap();
    assert!(check(&report, "path_in_set") <= 1e-8);
    // u̇ = −u + ½ from u(0) = 1 → u(t) = ½(1 + e^{−t}).
    let exact = 0.5 * (1.0 + (-2.0f64).exp());
    assert!((path.values[40][0] - exact).abs() <= 3.0 * tg.dt());
    assert!(path.values[20][0] < 0.95);
}

#[test]
fn obstacle_rejects_start_outside_k() {
    let a = LinOp::identity(1);
    let k = ConvexSet::boxed(Vector::zeros(1), Vector::from_element(1, 1.0)).unwrap();
    let x0 = Vector::from_element(1, 3.0);
    let tg = TimeGrid::new(1.0, 10).unwrap();
    assert!(demo_obstacle_flow(&a, &k, &Vector::zeros(1), &x0, tg, &opts()).is_err());
}
