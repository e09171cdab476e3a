//! Closed convex sets with exact Euclidean projections and support functions.

use crate::error::Error;
use crate::num::{lit, ExtReal, Real, Vector};

/// A nonempty closed convex set in `R^dim` with an exact projection.
#[derive(Debug, Clone)]
pub struct ConvexSet<T: Real> {
    dim: usize,
    kind: SetKind<T>,
}

#[derive(Debug, Clone)]
enum SetKind<T: Real> {
    /// Componentwise box `[lo_i, hi_i]` (entries may be ±∞).
    Box { lo: Vector<T>, hi: Vector<T> },
    /// Euclidean ball of given center and radius.
    Ball { center: Vector<T>, radius: T },
    /// Halfspace `{ x : ⟨a,x⟩ ≤ c }` with `a ≠ 0`.
    Halfspace { a: Vector<T>, c: T },
    /// Nondecreasing nonnegative grid functions `{ 0 ≤ x_1 ≤ … ≤ x_n }`.
    NonnegMonotone,
    /// The whole space.
    Whole,
}

impl<T: Real> ConvexSet<T> {
    /// Box `[lo, hi]` componentwise. Requires `lo ≤ hi`.
    pub fn boxed(lo: Vector<T>, hi: Vector<T>) -> Result<Self, Error> {
        if lo.len() != hi.len() {
            return Err(Error::Dimension("box bounds length mismatch".into()));
        }
        if lo.iter().zip(hi.iter()).any(|(l, h)| l > h) {
            return Err(Error::Invalid("empty box: lo > hi".into()));
        }
        Ok(ConvexSet { dim: lo.len(), kind: SetKind::Box { lo, hi } })
    }

    /// Euclidean ball. Requires `radius ≥ 0`.
    pub fn ball(center: Vector<T>, radius: T) -> Result<Self, Error> {
        if radius < T::zero() {
            return Err(Error::Invalid("negative ball radius".into()));
        }
        Ok(ConvexSet { dim: center.len(), kind: SetKind::Ball { center, radius } })
    }

    /// Halfspace `⟨a,x⟩ ≤ c`. Requires `a ≠ 0`.
    pub fn halfspace(a: Vector<T>, c: T) -> Result<Self, Error> {
        if a.norm() == T::zero() {
            return Err(Error::Invalid("halfspace normal must be nonzero".into()));
        }
        Ok(ConvexSet { dim: a.len(), kind: SetKind::Halfspace { a, c } })
    }

    /// Nonnegative nondecreasing vectors `{0 ≤ x_1 ≤ … ≤ x_n}` (1-D grid cone).
    pub fn nonneg_monotone(dim: usize) -> Self {
        ConvexSet { dim, kind: SetKind::NonnegMonotone }
    }

    /// The whole space.
    pub fn whole(dim: usize) -> Self {
        ConvexSet { dim, kind: SetKind::Whole }
    }

    /// The singleton `{point}` as a degenerate box.
    pub fn singleton(point: Vector<T>) -> Self {
        ConvexSet { dim: point.len(), kind: SetKind::Box { lo: point.clone(), hi: point } }
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// True when the set is the whole space.
    pub fn is_whole(&self) -> bool {
        matches!(self.kind, SetKind::Whole)
    }

    /// Exact Euclidean projection onto the set.
    pub fn project(&self, x: &Vector<T>) -> Vector<T> {
        match &self.kind {
            SetKind::Box { lo, hi } => Vector::from_fn(self.dim, |i, _| {
                x[i].max(lo[i]).min(hi[i])
            }),
            SetKind::Ball { center, radius } => {
                let d = x - center;
                let n = d.norm();
                if n <= *radius {
                    x.clone()
                } else {
                    center + d * (*radius / n)
                }
            }
            SetKind::Halfspace { a, c } => {
                let v = a.dot(x);
                if v <= *c {
                    x.clone()
                } else {
                    x - a * ((v - *c) / a.norm_squared())
                }
            }
            SetKind::NonnegMonotone => {
                // Isotonic regression (pool adjacent violators), then clip at 0:
                // the projection onto the intersection of the monotone cone with
                // the nonnegative orthant is the positive part of the isotonic fit.
                let mut fit = isotonic(x);
                for v in fit.iter_mut() {
                    *v = v.max(T::zero());
                }
                fit
            }
            SetKind::Whole => x.clone(),
        }
    }

    /// Squared distance to the set.
    pub fn dist(&self, x: &Vector<T>) -> T {
        (x - self.project(x)).norm()
    }

    /// True when `x` lies in the set up to tolerance `tol`.
    pub fn contains(&self, x: &Vector<T>, tol: T) -> bool {
        self.dist(x) <= tol
    }

    /// Support function `σ(p) = sup_{x∈K} ⟨p,x⟩`, exact per kind.
    pub fn support(&self, p: &Vector<T>, tol: T) -> ExtReal<T> {
        match &self.kind {
            SetKind::Box { lo, hi } => {
                let mut s = T::zero();
                for i in 0..self.dim {
                    let term = if p[i] >= T::zero() { p[i] * hi[i] } else { p[i] * lo[i] };
                    s += term;
                }
                ExtReal::Finite(s)
            }
            SetKind::Ball { center, radius } => {
                ExtReal::Finite(center.dot(p) + *radius * p.norm())
            }
            SetKind::Halfspace { a, c } => {
                // Finite only along the outward normal ray: p = t·a with t ≥ 0.
                if p.norm() <= tol {
                    return ExtReal::Finite(T::zero());
                }
                let t = a.dot(p) / a.norm_squared();
                if t >= -tol && (p - a * t).norm() <= tol * (T::one() + p.norm()) {
                    ExtReal::Finite(t.max(T::zero()) * *c)
                } else {
                    ExtReal::PosInf
                }
            }
            SetKind::NonnegMonotone => {
                // Cone generated by the "tail" indicators e_{≥k}: support is 0
                // exactly when every tail sum of p is ≤ 0, else +∞.
                let mut tail = T::zero();
                for i in (0..self.dim).rev() {
                    tail += p[i];
                    if tail > tol {
                        return ExtReal::PosInf;
                    }
                }
                ExtReal::Finite(T::zero())
            }
            SetKind::Whole => {
                if p.norm() <= tol {
                    ExtReal::Finite(T::zero())
                } else {
                    ExtReal::PosInf
                }
            }
        }
    }

    /// A deterministic interior-ish point of the set (used as a feasible seed).
    pub fn any_point(&self) -> Vector<T> {
        match &self.kind {
            SetKind::Box { lo, hi } => Vector::from_fn(self.dim, |i, _| {
                let half = lit::<T>(0.5);
                let l = lo[i].max(-T::one() / T::default_epsilon());
                let h = hi[i].min(T::one() / T::default_epsilon());
                (l + h) * half
            }),
            SetKind::Ball { center, .. } => center.clone(),
            SetKind::Halfspace { .. } | SetKind::NonnegMonotone | SetKind::Whole => {
                self.project(&Vector::zeros(self.dim))
            }
        }
    }
}

/// Pool-adjacent-violators isotonic regression: the Euclidean projection onto
/// the monotone nondecreasing cone.
fn isotonic<T: Real>(x: &Vector<T>) -> Vector<T> {
    let n = x.len();
    // Blocks of (mean, count) merged whenever monotonicity is violated.
    let mut means: Vec<T> = Vec::with_capacity(n);
    let mut counts: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        means.push(x[i]);
        counts.push(1);
        while means.len() > 1 && means[means.len() - 2] > means[means.len() - 1] {
            let (m2, c2) = (means.pop().unwrap(), counts.pop().unwrap());
            let k = means.len() - 1;
            let (w1, w2) = (lit::<T>(counts[k] as f64), lit::<T>(c2 as f64));
            means[k] = (means[k] * w1 + m2 * w2) / (w1 + w2);
            counts[k] += c2;
        }
    }
    let mut out = Vector::zeros(n);
    let mut idx = 0;
    for (m, c) in means.iter().zip(counts.iter()) {
        for _ in 0..*c {
            out[idx] = *m;
            idx += 1;
        }
    }
    out
}
