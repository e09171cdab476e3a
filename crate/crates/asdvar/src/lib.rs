//! Anti-selfdual (ASD) Lagrangian calculus at desk scale.
//!
//! This crate solves non-self-adjoint stationary equations, variational
//! inequalities, boundary-value problems, and dissipative evolution equations
//! by convex minimization: each problem is encoded as a convex bivariate
//! Lagrangian `L(x, p)` that is *anti-selfdual* — its Fenchel conjugate in
//! both variables satisfies `L*(p, x) = L(−x, −p)` — so the associated
//! functional `I(x) = L(x, Λx)` has infimum exactly zero for skew `Λ`. The
//! attained minimum value (the **gap**) doubles as an end-to-end correctness
//! certificate, and Fenchel–Young equality at the minimizer converts it back
//! into a solution of the original equation.
//!
//! Modules:
//! - [`convex`]: catalog of convex functions with conjugates and prox maps;
//! - [`linops`]: dense operators, adjoints in metrics, boundary triplets;
//! - [`lagrangian`]: the ASD algebra (shifts, sums, convolutions, products);
//! - [`boundary`]: self-dual boundary Lagrangians and boundary-value assembly;
//! - [`stationary`]: the minimization engine and stationary problem wrappers;
//! - [`evolution`]: path-space lifting, gradient flows, and flow diagnostics;
//! - [`pde`]: 1-D transport / heat / porous-media / obstacle demos;
//! - [`minimize`]: the composite first-order kernel shared by all solvers.
//!
//! Everything is generic over the scalar via [`num::Real`]; the aliases below
//! fix `f64` for the common case.

pub mod boundary;
pub mod convex;
pub mod error;
pub mod evolution;
pub mod lagrangian;
pub mod linops;
pub mod minimize;
pub mod num;
pub mod pde;
pub mod set;
pub mod stationary;

pub use error::{Error, Result};
pub use num::{ExtReal, NumericPolicy, Real};

/// `f64` column vector.
pub type Vector = num::Vector<f64>;
/// `f64` dense matrix.
pub type Matrix = num::Matrix<f64>;
/// `f64` convex function.
pub type ConvexFn = convex::ConvexFn<f64>;
/// `f64` convex set.
pub type ConvexSet = set::ConvexSet<f64>;
/// `f64` linear operator.
pub type LinOp = linops::LinOp<f64>;
/// `f64` Lagrangian.
pub type Lagrangian = lagrangian::Lagrangian<f64>;
