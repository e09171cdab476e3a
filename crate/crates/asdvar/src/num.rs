//! Scalar abstraction, extended reals, and the shared numeric policy.
//!
//! Everything in this crate is generic over a [`Real`] scalar so the same
//! code runs at `f32` or `f64`; the crate root exports `f64` aliases for
//! the common case. Extended-real arithmetic (`value or +∞`, never `−∞`)
//! mirrors the convention of proper convex functions.

use nalgebra::{DMatrix, DVector, RealField};
use num_traits::FromPrimitive;
use rand::Rng;

/// Scalar type used throughout: a real field with conversions from `f64`
/// literals. Implemented by `f32` and `f64`.
pub trait Real: RealField + Copy + FromPrimitive {}

impl<T> Real for T where T: RealField + Copy + FromPrimitive {}

/// Convert an `f64` literal to the working scalar type.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal conversion")
}

/// Dense vector over the working scalar.
pub type Vector<T> = DVector<T>;
/// Dense matrix over the working scalar.
pub type Matrix<T> = DMatrix<T>;

/// A real value or `+∞`. Proper convex functions never take `−∞`, so the
/// negative infinity case is deliberately unrepresentable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal<T: Real> {
    /// Finite value.
    Finite(T),
    /// Positive infinity (outside the effective domain).
    PosInf,
}

impl<T: Real> ExtReal<T> {
    /// True when the value is finite.
    #[inline]
    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    /// The finite value, or `None` at `+∞`.
    #[inline]
    pub fn finite(self) -> Option<T> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::PosInf => None,
        }
    }

    /// The finite value, or the scalar infinity encoding when at `+∞`.
    /// Useful when handing values to code that works with raw floats.
    #[inline]
    pub fn into_inner(self) -> T {
        match self {
            ExtReal::Finite(v) => v,
            ExtReal::PosInf => T::max_value().unwrap_or_else(T::one),
        }
    }

    /// Map the finite case.
    #[inline]
    pub fn map(self, f: impl FnOnce(T) -> T) -> Self {
        match self {
            ExtReal::Finite(v) => ExtReal::Finite(f(v)),
            ExtReal::PosInf => ExtReal::PosInf,
        }
    }
}

impl<T: Real> std::ops::Add for ExtReal<T> {
    type Output = ExtReal<T>;
    fn add(self, rhs: Self) -> Self {
        match (self, rhs) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a + b),
            _ => ExtReal::PosInf,
        }
    }
}

impl<T: Real> std::ops::Add<T> for ExtReal<T> {
    type Output = ExtReal<T>;
    fn add(self, rhs: T) -> Self {
        self.map(|v| v + rhs)
    }
}

impl<T: Real> PartialOrd for ExtReal<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a.partial_cmp(b),
            (ExtReal::Finite(_), ExtReal::PosInf) => Some(std::cmp::Ordering::Less),
            (ExtReal::PosInf, ExtReal::Finite(_)) => Some(std::cmp::Ordering::Greater),
            (ExtReal::PosInf, ExtReal::PosInf) => Some(std::cmp::Ordering::Equal),
        }
    }
}

impl<T: Real> From<T> for ExtReal<T> {
    fn from(v: T) -> Self {
        ExtReal::Finite(v)
    }
}

/// Central numeric policy: every tolerance and iteration cap used by the
/// iterative kernels lives here so test suites tune a single knob.
#[derive(Debug, Clone, Copy)]
pub struct NumericPolicy<T: Real> {
    /// Absolute tolerance for residuals and fixed points.
    pub abs_tol: T,
    /// Relative tolerance, scaled by `1 + |value|`.
    pub rel_tol: T,
    /// Iteration cap for every inner/outer loop.
    pub max_iter: usize,
    /// Characteristic sampling radius for residual spot checks.
    pub char_radius: T,
}

impl<T: Real> Default for NumericPolicy<T> {
    fn default() -> Self {
        NumericPolicy {
            abs_tol: lit(1e-10),
            rel_tol: lit(1e-8),
            max_iter: 100_000,
            char_radius: T::one(),
        }
    }
}

impl<T: Real> NumericPolicy<T> {
    /// Scale-free tolerance at a value `v`: `abs + rel·(1+|v|)`.
    #[inline]
    pub fn tol_at(&self, v: T) -> T {
        self.abs_tol + self.rel_tol * (T::one() + v.abs())
    }
}

/// Draw a standard normal scalar, converted to the working type.
pub fn standard_normal<T: Real, R: Rng>(rng: &mut R) -> T {
    // Box–Muller on two uniforms; avoids a distribution dependency in core.
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    lit((-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos())
}

/// Draw a centered Gaussian vector with the given radius scale.
pub fn gaussian_vector<T: Real, R: Rng>(rng: &mut R, dim: usize, radius: T) -> Vector<T> {
    Vector::from_fn(dim, |_, _| standard_normal::<T, _>(rng) * radius)
}
