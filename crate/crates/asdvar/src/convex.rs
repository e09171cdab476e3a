//! Catalog of proper convex lower-semicontinuous functions.
//!
//! Each [`ConvexFn`] bundles evaluation, a subgradient selection, a proximal
//! map, and a Fenchel conjugate. Conjugation rewrites the structure tree into
//! closed form whenever the calculus permits (quadratics, powers, indicators
//! and support functions, tilts, shifts, scalings, invertible precomposition)
//! and otherwise falls back to a prox-driven numeric supremum.

use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::minimize::{minimize_composite, monotone_newton, MinimizeResult};
use crate::num::{lit, ExtReal, NumericPolicy, Real, Matrix, Vector};
use crate::set::ConvexSet;

/// How the conjugate of a function is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConjKind {
    /// Closed-form conjugate via structure-tree rewriting.
    ExactClosedForm,
    /// Numeric supremum driven by the proximal-point maximizer.
    ProxDerived,
    /// Numeric supremum with only subgradient information (no exact prox).
    Numeric,
}

type EvalClosure<T> = Arc<dyn Fn(&Vector<T>) -> ExtReal<T> + Send + Sync>;
type GradClosure<T> = Arc<dyn Fn(&Vector<T>) -> Vector<T> + Send + Sync>;
type ProxClosure<T> = Arc<dyn Fn(&Vector<T>, T) -> Vector<T> + Send + Sync>;

/// A proper convex l.s.c. function on `R^dim`.
#[derive(Clone)]
pub struct ConvexFn<T: Real> {
    dim: usize,
    kind: Kind<T>,
}

#[derive(Clone)]
enum Kind<T: Real> {
    /// `½⟨Qx,x⟩ + ⟨b,x⟩ + c` with `Q` symmetric PSD.
    Quadratic { q: Matrix<T>, b: Vector<T>, c: T },
    /// Conjugate of a singular PSD quadratic: `½⟨Q⁺(v−b),v−b⟩ − c` on `b + range(Q)`.
    QuadConj { evecs: Matrix<T>, evals: Vector<T>, b: Vector<T>, c: T },
    /// `(1/p)‖x‖^p`, `p > 1`.
    Power { p: T },
    /// `Σ_i |x_i|` (the ℓ¹ norm; absolute value in 1-D).
    AbsValue,
    /// Indicator of a closed convex set.
    Indicator(ConvexSet<T>),
    /// Support function of a closed convex set.
    Support(ConvexSet<T>),
    /// `base(x) + ⟨f,x⟩`.
    Tilt { f: Vector<T>, base: Box<ConvexFn<T>> },
    /// `base(x − s)`.
    PreShift { s: Vector<T>, base: Box<ConvexFn<T>> },
    /// `α·base(x)`, `α > 0`.
    Scale { alpha: T, base: Box<ConvexFn<T>> },
    /// `α·base(x/α)`, `α > 0` (appears as the conjugate of `Scale`).
    ScaleBoth { alpha: T, base: Box<ConvexFn<T>> },
    /// `base(Ax)` for invertible `A` (closed under conjugation).
    PreLinear { a: Matrix<T>, a_inv: Matrix<T>, base: Box<ConvexFn<T>> },
    /// Pointwise sum.
    Sum(Vec<ConvexFn<T>>),
    /// Numeric Fenchel conjugate of `base`, with a shared warm-start scratch
    /// so repeated evaluations along a solver trajectory stay cheap.
    Fenchel { base: Box<ConvexFn<T>>, scratch: Arc<Mutex<ConjScratch<T>>> },
    /// Moreau envelope of `base` at parameter `lam`.
    MoreauEnv { base: Box<ConvexFn<T>>, lam: T },
    /// User closures (assumed convex; prox optional).
    Custom {
        eval: EvalClosure<T>,
        subgrad: GradClosure<T>,
        prox: Option<ProxClosure<T>>,
    },
}

/// Warm-start scratch for numeric conjugation; one per concurrent caller.
#[derive(Debug, Clone)]
pub struct ConjScratch<T: Real> {
    last: Option<Vector<T>>,
}

impl<T: Real> Default for ConjScratch<T> {
    fn default() -> Self {
        ConjScratch { last: None }
    }
}

/// Tagged construction spec for the catalog (mirrors the CLI config).
#[derive(Clone)]
pub enum CatalogSpec<T: Real> {
    /// `½⟨Qx,x⟩ + ⟨b,x⟩`.
    Quadratic { q: Matrix<T>, b: Vector<T> },
    /// `(1/p)‖x‖^p` on `R^dim`.
    Power { dim: usize, p: T },
    /// `Σ|x_i|` on `R^dim`.
    Abs { dim: usize },
    /// Indicator of a set.
    Indicator(ConvexSet<T>),
    /// `base + ⟨f,·⟩`.
    Tilt { f: Vector<T>, base: Box<CatalogSpec<T>> },
    /// `α·base`.
    Scaled { alpha: T, base: Box<CatalogSpec<T>> },
    /// Pointwise sum.
    Sum(Vec<CatalogSpec<T>>),
}

/// Build a catalog function from a tagged spec, validating parameters.
pub fn make_catalog_fn<T: Real>(spec: CatalogSpec<T>) -> Result<ConvexFn<T>> {
    match spec {
        CatalogSpec::Quadratic { q, b } => ConvexFn::quadratic(q, b),
        CatalogSpec::Power { dim, p } => ConvexFn::power(dim, p),
        CatalogSpec::Abs { dim } => Ok(ConvexFn::abs(dim)),
        CatalogSpec::Indicator(set) => Ok(ConvexFn::indicator(set)),
        CatalogSpec::Tilt { f, base } => make_catalog_fn(*base)?.tilt(f),
        CatalogSpec::Scaled { alpha, base } => make_catalog_fn(*base)?.scaled(alpha),
        CatalogSpec::Sum(terms) => {
            let fns = terms.into_iter().map(make_catalog_fn).collect::<Result<Vec<_>>>()?;
            ConvexFn::sum(fns)
        }
    }
}

impl<T: Real> ConvexFn<T> {
    // ---------------------------------------------------------------- build

    /// `½⟨Qx,x⟩ + ⟨b,x⟩`. `Q` must be symmetric PSD (eigenvalues ≥ −1e−10).
    pub fn quadratic(q: Matrix<T>, b: Vector<T>) -> Result<Self> {
        Self::quadratic_c(q, b, T::zero())
    }

    /// Quadratic with an additive constant.
    pub fn quadratic_c(q: Matrix<T>, b: Vector<T>, c: T) -> Result<Self> {
        let n = b.len();
        if q.nrows() != n || q.ncols() != n {
            return Err(Error::Dimension("quadratic Q/b shape mismatch".into()));
        }
        let sym = (&q + q.transpose()) * lit::<T>(0.5);
        let asym = (&q - q.transpose()).amax();
        let scale = T::one() + sym.amax();
        if asym > lit::<T>(1e-8) * scale {
            return Err(Error::Invalid("quadratic Q must be symmetric".into()));
        }
        if n > 0 {
            let eig = sym.clone().symmetric_eigenvalues();
            let min = eig.min();
            if min < lit::<T>(-1e-10) * scale {
                return Err(Error::Invalid("quadratic Q has a negative eigenvalue".into()));
            }
        }
        Ok(ConvexFn { dim: n, kind: Kind::Quadratic { q: sym, b, c } })
    }

    /// The constant function `c`.
    pub fn constant(dim: usize, c: T) -> Self {
        ConvexFn {
            dim,
            kind: Kind::Quadratic { q: Matrix::zeros(dim, dim), b: Vector::zeros(dim), c },
        }
    }

    /// The linear function `⟨f,x⟩`.
    pub fn linear(f: Vector<T>) -> Self {
        let dim = f.len();
        ConvexFn { dim, kind: Kind::Quadratic { q: Matrix::zeros(dim, dim), b: f, c: T::zero() } }
    }

    /// `(1/p)‖x‖^p` with `p > 1`.
    pub fn power(dim: usize, p: T) -> Result<Self> {
        if p <= T::one() {
            return Err(Error::Invalid("power exponent must satisfy p > 1".into()));
        }
        Ok(ConvexFn { dim, kind: Kind::Power { p } })
    }

    /// `Σ_i |x_i|`.
    pub fn abs(dim: usize) -> Self {
        ConvexFn { dim, kind: Kind::AbsValue }
    }

    /// Indicator of a closed convex set (0 on the set, +∞ outside).
    pub fn indicator(set: ConvexSet<T>) -> Self {
        ConvexFn { dim: set.dim(), kind: Kind::Indicator(set) }
    }

    /// Support function of a closed convex set.
    pub fn support(set: ConvexSet<T>) -> Self {
        ConvexFn { dim: set.dim(), kind: Kind::Support(set) }
    }

    /// `self + ⟨f,·⟩`.
    pub fn tilt(self, f: Vector<T>) -> Result<Self> {
        if f.len() != self.dim {
            return Err(Error::Dimension("tilt vector length mismatch".into()));
        }
        let dim = self.dim;
        Ok(ConvexFn { dim, kind: Kind::Tilt { f, base: Box::new(self) } })
    }

    /// `self(· − s)`.
    pub fn pre_shift(self, s: Vector<T>) -> Result<Self> {
        if s.len() != self.dim {
            return Err(Error::Dimension("shift vector length mismatch".into()));
        }
        let dim = self.dim;
        Ok(ConvexFn { dim, kind: Kind::PreShift { s, base: Box::new(self) } })
    }

    /// `α·self` with `α > 0`.
    pub fn scaled(self, alpha: T) -> Result<Self> {
        if alpha <= T::zero() {
            return Err(Error::Invalid("scale factor must be positive".into()));
        }
        let dim = self.dim;
        Ok(ConvexFn { dim, kind: Kind::Scale { alpha, base: Box::new(self) } })
    }

    /// `self(A·)` for square invertible `A`.
    pub fn pre_linear(self, a: Matrix<T>) -> Result<Self> {
        if a.nrows() != self.dim || a.ncols() != self.dim {
            return Err(Error::Dimension("precomposition matrix must match dim".into()));
        }
        let a_inv = a
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Invalid("precomposition matrix must be invertible".into()))?;
        let dim = self.dim;
        Ok(ConvexFn { dim, kind: Kind::PreLinear { a, a_inv, base: Box::new(self) } })
    }

    /// Pointwise sum. Quadratic terms are merged so fully-quadratic sums keep
    /// an exact conjugate.
    pub fn sum(terms: Vec<ConvexFn<T>>) -> Result<Self> {
        let mut terms = terms;
        if terms.is_empty() {
            return Err(Error::Invalid("sum needs at least one term".into()));
        }
        let dim = terms[0].dim;
        if terms.iter().any(|t| t.dim != dim) {
            return Err(Error::Dimension("sum terms must share a dimension".into()));
        }
        // Merge all quadratic-representable terms into one.
        let mut q = Matrix::zeros(dim, dim);
        let mut b = Vector::zeros(dim);
        let mut c = T::zero();
        let mut rest: Vec<ConvexFn<T>> = Vec::new();
        let mut merged = false;
        for t in terms.drain(..) {
            match t.as_quadratic() {
                Some((tq, tb, tc)) => {
                    q += tq;
                    b += tb;
                    c += tc;
                    merged = true;
                }
                None => rest.push(t),
            }
        }
        if merged {
            rest.insert(0, ConvexFn { dim, kind: Kind::Quadratic { q, b, c } });
        }
        if rest.len() == 1 {
            return Ok(rest.pop().unwrap());
        }
        Ok(ConvexFn { dim, kind: Kind::Sum(rest) })
    }

    /// From user closures (assumed convex). `prox` optional.
    pub fn custom(
        dim: usize,
        eval: impl Fn(&Vector<T>) -> ExtReal<T> + Send + Sync + 'static,
        subgrad: impl Fn(&Vector<T>) -> Vector<T> + Send + Sync + 'static,
        prox: Option<ProxClosure<T>>,
    ) -> Self {
        ConvexFn {
            dim,
            kind: Kind::Custom { eval: Arc::new(eval), subgrad: Arc::new(subgrad), prox },
        }
    }

    /// View as `(Q, b, c)` when the tree is exactly quadratic.
    fn as_quadratic(&self) -> Option<(Matrix<T>, Vector<T>, T)> {
        match &self.kind {
            Kind::Quadratic { q, b, c } => Some((q.clone(), b.clone(), *c)),
            Kind::Tilt { f, base } => {
                let (q, b, c) = base.as_quadratic()?;
                Some((q, b + f, c))
            }
            Kind::PreShift { s, base } => {
                let (q, b, c) = base.as_quadratic()?;
                let qs = &q * s;
                let c2 = c + qs.dot(s) * lit::<T>(0.5) - b.dot(s);
                Some((q.clone(), b - qs, c2))
            }
            Kind::Scale { alpha, base } => {
                let (q, b, c) = base.as_quadratic()?;
                Some((q * *alpha, b * *alpha, c * *alpha))
            }
            Kind::ScaleBoth { alpha, base } => {
                // α·base(x/α): quadratic part scales by 1/α, linear unchanged.
                let (q, b, c) = base.as_quadratic()?;
                Some((q / *alpha, b, c * *alpha))
            }
            Kind::PreLinear { a, base, .. } => {
                let (q, b, c) = base.as_quadratic()?;
                Some((a.transpose() * q * a, a.transpose() * b, c))
            }
            Kind::Sum(terms) => {
                let dim = self.dim;
                let mut q = Matrix::zeros(dim, dim);
                let mut b = Vector::zeros(dim);
                let mut c = T::zero();
                for t in terms {
                    let (tq, tb, tc) = t.as_quadratic()?;
                    q += tq;
                    b += tb;
                    c += tc;
                }
                Some((q, b, c))
            }
            _ => None,
        }
    }

    // ----------------------------------------------------------------- eval

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Evaluate `φ(x)`; `+∞` outside the effective domain.
    pub fn eval(&self, x: &Vector<T>) -> ExtReal<T> {
        let dom_tol = lit::<T>(1e-9) * (T::one() + x.norm());
        match &self.kind {
            Kind::Quadratic { q, b, c } => {
                ExtReal::Finite((q * x).dot(x) * lit(0.5) + b.dot(x) + *c)
            }
            Kind::QuadConj { evecs, evals, b, c } => {
                let w = evecs.transpose() * (x - b);
                let mut val = T::zero();
                let scale = T::one() + evals.amax();
                let rank_tol = lit::<T>(1e-12) * scale;
                for i in 0..w.len() {
                    if evals[i] > rank_tol {
                        val += w[i] * w[i] / evals[i];
                    } else if w[i].abs() > dom_tol {
                        return ExtReal::PosInf;
                    }
                }
                ExtReal::Finite(val * lit::<T>(0.5) - *c)
            }
            Kind::Power { p } => {
                let n = x.norm();
                ExtReal::Finite(n.powf(*p) / *p)
            }
            Kind::AbsValue => ExtReal::Finite(x.iter().fold(T::zero(), |s, v| s + v.abs())),
            Kind::Indicator(set) => {
                if set.contains(x, dom_tol) {
                    ExtReal::Finite(T::zero())
                } else {
                    ExtReal::PosInf
                }
            }
            Kind::Support(set) => set.support(x, dom_tol),
            Kind::Tilt { f, base } => base.eval(x) + f.dot(x),
            Kind::PreShift { s, base } => base.eval(&(x - s)),
            Kind::Scale { alpha, base } => base.eval(x).map(|v| v * *alpha),
            Kind::ScaleBoth { alpha, base } => base.eval(&(x / *alpha)).map(|v| v * *alpha),
            Kind::PreLinear { a, base, .. } => base.eval(&(a * x)),
            Kind::Sum(terms) => terms
                .iter()
                .fold(ExtReal::Finite(T::zero()), |acc, t| acc + t.eval(x)),
            Kind::Fenchel { base, scratch } => {
                let policy = NumericPolicy::default();
                let mut guard = scratch.lock().expect("conjugate scratch poisoned");
                base.conjugate_eval_numeric(x, &mut guard, &policy).0
            }
            Kind::MoreauEnv { base, lam } => {
                let z = base.prox(x, *lam);
                let d = x - &z;
                base.eval(&z) + d.norm_squared() / (*lam * lit(2.0))
            }
            Kind::Custom { eval, .. } => eval(x),
        }
    }

    /// One selected element of `∂φ(x)` (minimum-norm at kinks). Only
    /// meaningful inside the effective domain.
    pub fn subgrad(&self, x: &Vector<T>) -> Vector<T> {
        match &self.kind {
            Kind::Quadratic { q, b, .. } => q * x + b,
            Kind::QuadConj { evecs, evals, b, .. } => {
                let w = evecs.transpose() * (x - b);
                let scale = T::one() + evals.amax();
                let rank_tol = lit::<T>(1e-12) * scale;
                let scaled = Vector::from_fn(w.len(), |i, _| {
                    if evals[i] > rank_tol { w[i] / evals[i] } else { T::zero() }
                });
                evecs * scaled
            }
            Kind::Power { p } => {
                let n = x.norm();
                if n == T::zero() {
                    Vector::zeros(self.dim)
                } else {
                    x * n.powf(*p - lit(2.0))
                }
            }
            Kind::AbsValue => Vector::from_fn(self.dim, |i, _| {
                if x[i] > T::zero() {
                    T::one()
                } else if x[i] < T::zero() {
                    -T::one()
                } else {
                    T::zero()
                }
            }),
            Kind::Indicator(_) => Vector::zeros(self.dim),
            Kind::Support(set) => {
                // Danskin: any maximizer of ⟨x,·⟩ over the set is a subgradient.
                support_argmax(set, x)
            }
            Kind::Tilt { f, base } => base.subgrad(x) + f,
            Kind::PreShift { s, base } => base.subgrad(&(x - s)),
            Kind::Scale { alpha, base } => base.subgrad(x) * *alpha,
            Kind::ScaleBoth { alpha, base } => base.subgrad(&(x / *alpha)),
            Kind::PreLinear { a, base, .. } => a.transpose() * base.subgrad(&(a * x)),
            Kind::Sum(terms) => terms
                .iter()
                .fold(Vector::zeros(self.dim), |acc, t| acc + t.subgrad(x)),
            Kind::Fenchel { base, scratch } => {
                let policy = NumericPolicy::default();
                let mut guard = scratch.lock().expect("conjugate scratch poisoned");
                base.conjugate_eval_numeric(x, &mut guard, &policy)
                    .1
                    .unwrap_or_else(|| Vector::zeros(self.dim))
            }
            Kind::MoreauEnv { base, lam } => (x - base.prox(x, *lam)) / *lam,
            Kind::Custom { subgrad, .. } => subgrad(x),
        }
    }

    /// Proximal map `argmin_z φ(z) + ‖z−x‖²/(2λ)`.
    pub fn prox(&self, x: &Vector<T>, lam: T) -> Vector<T> {
        match &self.kind {
            Kind::Quadratic { q, b, .. } => {
                let n = self.dim;
                let a = Matrix::identity(n, n) + q * lam;
                let rhs = x - b * lam;
                a.lu().solve(&rhs).unwrap_or_else(|| x.clone())
            }
            Kind::QuadConj { .. } => {
                // Conjugate of a quadratic: use the Moreau identity against the
                // primal quadratic reconstructed from the eigenfactors.
                let primal = self.conjugate_exact().expect("QuadConj has exact biconjugate");
                moreau_prox(&primal, x, lam)
            }
            Kind::Power { p } => {
                let r = x.norm();
                if r == T::zero() {
                    return Vector::zeros(self.dim);
                }
                // Solve s + λ s^{p−1} = r for the prox radius s ∈ [0, r].
                // Newton is quadratically convergent here, so drive the
                // scalar solve near machine precision: the prox underpins
                // subgradient-residual certificates at 1e−8.
                let mut policy = NumericPolicy::default();
                policy.abs_tol = lit(1e-14);
                policy.rel_tol = lit(1e-13);
                let pm1 = *p - T::one();
                let s = monotone_newton(
                    |s| s + lam * s.powf(pm1),
                    |s| T::one() + lam * pm1 * s.powf(pm1 - T::one()),
                    r,
                    T::zero(),
                    r,
                    &policy,
                );
                x * (s / r)
            }
            Kind::AbsValue => Vector::from_fn(self.dim, |i, _| {
                let v = x[i];
                if v > lam {
                    v - lam
                } else if v < -lam {
                    v + lam
                } else {
                    T::zero()
                }
            }),
            Kind::Indicator(set) => set.project(x),
            Kind::Support(set) => {
                // prox of the support function via Moreau: x − λ·Π_K(x/λ).
                x - set.project(&(x / lam)) * lam
            }
            Kind::Tilt { f, base } => base.prox(&(x - f * lam), lam),
            Kind::PreShift { s, base } => base.prox(&(x - s), lam) + s,
            Kind::Scale { alpha, base } => base.prox(x, lam * *alpha),
            Kind::ScaleBoth { alpha, base } => base.prox(&(x / *alpha), lam / *alpha) * *alpha,
            Kind::PreLinear { a, a_inv, base } => {
                // Exact when A is a scaled orthogonal map (AᵀA = γI); numeric otherwise.
                let n = self.dim;
                let gram = a.transpose() * a;
                let gamma = gram.trace() / lit(n as f64);
                if (gram - Matrix::identity(n, n) * gamma).amax()
                    <= lit::<T>(1e-12) * (T::one() + gamma)
                {
                    let ax = a * x;
                    let z = base.prox(&ax, lam * gamma);
                    x + a.transpose() * (z - ax) / gamma
                } else {
                    let _ = a_inv;
                    self.prox_numeric(x, lam)
                }
            }
            Kind::Sum(terms) => prox_of_sum(self.dim, terms, x, lam),
            Kind::Fenchel { base, .. } => moreau_prox(base, x, lam),
            Kind::MoreauEnv { base, lam: mu } => {
                // prox of the envelope: x + λ/(λ+μ)·(prox_{(λ+μ)φ}(x) − x).
                let z = base.prox(x, lam + *mu);
                let w = lam / (lam + *mu);
                x + (z - x) * w
            }
            Kind::Custom { prox: Some(p), .. } => p(x, lam),
            Kind::Custom { .. } => self.prox_numeric(x, lam),
        }
    }

    /// Numeric prox by smooth minimization with the subgradient oracle.
    fn prox_numeric(&self, x: &Vector<T>, lam: T) -> Vector<T> {
        let policy = NumericPolicy::default();
        let smooth = |z: &Vector<T>, grad: Option<&mut Vector<T>>| -> ExtReal<T> {
            let d = z - x;
            let v = self.eval(z) + d.norm_squared() / (lam * lit(2.0));
            if let Some(g) = grad {
                *g = self.subgrad(z) + d / lam;
            }
            v
        };
        minimize_composite(&smooth, None, None, x, &policy).x
    }

    // ------------------------------------------------------------ conjugate

    /// The Fenchel conjugate `φ*`, exact when the structure permits and a
    /// numeric-supremum function otherwise (see [`ConvexFn::conj_kind`]).
    pub fn conjugate(&self) -> ConvexFn<T> {
        match self.conjugate_exact() {
            Some(c) => c,
            None => ConvexFn {
                dim: self.dim,
                kind: Kind::Fenchel { base: Box::new(self.clone()), scratch: Arc::new(Mutex::new(ConjScratch::default())) },
            },
        }
    }

    /// How [`ConvexFn::conjugate`] obtains values.
    pub fn conj_kind(&self) -> ConjKind {
        if self.conjugate_exact().is_some() {
            ConjKind::ExactClosedForm
        } else if self.has_reliable_prox() {
            ConjKind::ProxDerived
        } else {
            ConjKind::Numeric
        }
    }

    fn has_reliable_prox(&self) -> bool {
        match &self.kind {
            Kind::Custom { prox, .. } => prox.is_some(),
            Kind::Sum(terms) => terms.iter().filter(|t| !t.is_smooth()).count() <= 1,
            Kind::Tilt { base, .. } | Kind::PreShift { base, .. } | Kind::Scale { base, .. }
            | Kind::ScaleBoth { base, .. } | Kind::Fenchel { base, .. } | Kind::MoreauEnv { base, .. } => {
                base.has_reliable_prox()
            }
            Kind::PreLinear { .. } => true,
            _ => true,
        }
    }

    /// Whether the function is differentiable on the interior of its domain
    /// (used to split sums into smooth + prox-friendly parts).
    pub fn is_smooth(&self) -> bool {
        match &self.kind {
            Kind::Quadratic { .. } | Kind::Power { .. } | Kind::MoreauEnv { .. } => true,
            Kind::QuadConj { .. } => true,
            Kind::AbsValue | Kind::Indicator(_) | Kind::Support(_) => false,
            Kind::Tilt { base, .. }
            | Kind::PreShift { base, .. }
            | Kind::Scale { base, .. }
            | Kind::ScaleBoth { base, .. }
            | Kind::PreLinear { base, .. } => base.is_smooth(),
            Kind::Sum(terms) => terms.iter().all(|t| t.is_smooth()),
            Kind::Fenchel { .. } => true,
            Kind::Custom { .. } => true,
        }
    }

    fn conjugate_exact(&self) -> Option<ConvexFn<T>> {
        match &self.kind {
            Kind::Quadratic { q, b, c } => {
                let n = self.dim;
                if n == 0 {
                    return Some(ConvexFn::constant(0, -*c));
                }
                let eig = q.clone().symmetric_eigen();
                let scale = T::one() + eig.eigenvalues.amax();
                let rank_tol = lit::<T>(1e-12) * scale;
                if eig.eigenvalues.min() > rank_tol {
                    // Invertible: φ*(v) = ½⟨Q⁻¹(v−b), v−b⟩ − c.
                    let qinv = eig
                        .eigenvectors.clone()
                        * Matrix::from_diagonal(&eig.eigenvalues.map(|l| T::one() / l))
                        * eig.eigenvectors.transpose();
                    let b2 = -(&qinv * b);
                    let c2 = -*c + (&qinv * b).dot(b) * lit::<T>(0.5);
                    Some(ConvexFn {
                        dim: n,
                        kind: Kind::Quadratic { q: qinv, b: b2, c: c2 },
                    })
                } else {
                    Some(ConvexFn {
                        dim: n,
                        kind: Kind::QuadConj {
                            evecs: eig.eigenvectors,
                            evals: eig.eigenvalues,
                            b: b.clone(),
                            c: *c,
                        },
                    })
                }
            }
            Kind::QuadConj { evecs, evals, b, c } => {
                let q = evecs * Matrix::from_diagonal(evals) * evecs.transpose();
                Some(ConvexFn { dim: self.dim, kind: Kind::Quadratic { q, b: b.clone(), c: *c } })
            }
            Kind::Power { p } => {
                let q = *p / (*p - T::one());
                Some(ConvexFn { dim: self.dim, kind: Kind::Power { p: q } })
            }
            Kind::AbsValue => {
                let ones = Vector::from_element(self.dim, T::one());
                let set = ConvexSet::boxed(-&ones, ones).ok()?;
                Some(ConvexFn::indicator(set))
            }
            Kind::Indicator(set) => Some(ConvexFn::support(set.clone())),
            Kind::Support(set) => Some(ConvexFn::indicator(set.clone())),
            Kind::Tilt { f, base } => Some(ConvexFn {
                dim: self.dim,
                kind: Kind::PreShift { s: f.clone(), base: Box::new(base.conjugate()) },
            }),
            Kind::PreShift { s, base } => Some(ConvexFn {
                dim: self.dim,
                kind: Kind::Tilt { f: s.clone(), base: Box::new(base.conjugate()) },
            }),
            Kind::Scale { alpha, base } => Some(ConvexFn {
                dim: self.dim,
                kind: Kind::ScaleBoth { alpha: *alpha, base: Box::new(base.conjugate()) },
            }),
            Kind::ScaleBoth { alpha, base } => Some(ConvexFn {
                dim: self.dim,
                kind: Kind::Scale { alpha: *alpha, base: Box::new(base.conjugate()) },
            }),
            Kind::PreLinear { a_inv, base, .. } => Some(ConvexFn {
                dim: self.dim,
                kind: Kind::PreLinear {
                    a: a_inv.transpose(),
                    a_inv: a_inv
                        .transpose()
                        .try_inverse()
                        .expect("inverse of invertible matrix"),
                    base: Box::new(base.conjugate()),
                },
            }),
            Kind::Sum(_) => self.as_quadratic().map(|(q, b, c)| {
                ConvexFn { dim: self.dim, kind: Kind::Quadratic { q, b, c } }
                    .conjugate_exact()
                    .expect("quadratic conjugate")
            }),
            Kind::Fenchel { base, .. } => Some((**base).clone()),
            Kind::MoreauEnv { base, lam } => {
                // (e_λφ)* = φ* + λ/2‖·‖².
                let quad = ConvexFn::quadratic(
                    Matrix::identity(self.dim, self.dim) * *lam,
                    Vector::zeros(self.dim),
                )
                .ok()?;
                ConvexFn::sum(vec![base.conjugate_exact()?, quad]).ok()
            }
            Kind::Custom { .. } => None,
        }
    }

    /// Evaluate `φ*(p)`. Exact via the rewritten conjugate when possible,
    /// else the numeric supremum (fresh warm start).
    pub fn conjugate_eval(&self, p: &Vector<T>) -> ExtReal<T> {
        match self.conjugate_exact() {
            Some(c) => c.eval(p),
            None => {
                let policy = NumericPolicy::default();
                let mut scratch = ConjScratch::default();
                self.conjugate_eval_numeric(p, &mut scratch, &policy).0
            }
        }
    }

    /// A maximizer of `⟨p,·⟩ − φ` (equivalently an element of `∂φ*(p)`).
    pub fn conjugate_argmax(
        &self,
        p: &Vector<T>,
        scratch: &mut ConjScratch<T>,
        policy: &NumericPolicy<T>,
    ) -> Option<Vector<T>> {
        match self.conjugate_exact() {
            Some(c) => {
                let g = c.subgrad(p);
                scratch.last = Some(g.clone());
                Some(g)
            }
            None => self.conjugate_eval_numeric(p, scratch, policy).1,
        }
    }

    /// Numeric supremum `sup ⟨p,x⟩ − φ(x)` via the proximal-point maximizer:
    /// iterate `x ← prox_φ(x + λp, λ)` with a growing step and warm start.
    /// Returns `(value, argmax, converged)`.
    pub fn conjugate_eval_numeric(
        &self,
        p: &Vector<T>,
        scratch: &mut ConjScratch<T>,
        policy: &NumericPolicy<T>,
    ) -> (ExtReal<T>, Option<Vector<T>>, bool) {
        // Direct Danskin path: when the function splits into smooth terms
        // plus at most one prox-friendly nonsmooth term, the supremum
        // `sup ⟨p,x⟩ − φ(x)` is a single composite minimization of
        // `φ − ⟨p,·⟩`, warm-started from the previous argmax. This removes a
        // whole level of nesting relative to the proximal-point fallback.
        let parts: Vec<&ConvexFn<T>> = match &self.kind {
            Kind::Sum(ts) => ts.iter().collect(),
            Kind::Custom { .. } => vec![self],
            _ => Vec::new(),
        };
        if !parts.is_empty() {
            let (smooth_parts, nonsmooth): (Vec<&ConvexFn<T>>, Vec<&ConvexFn<T>>) =
                parts.into_iter().partition(|t| t.is_smooth());
            if nonsmooth.len() <= 1 {
                let x0 = scratch
                    .last
                    .clone()
                    .filter(|v| v.len() == self.dim)
                    .unwrap_or_else(|| Vector::zeros(self.dim));
                let blow_up = lit::<T>(1e10) * (T::one() + p.norm());
                let smooth = |z: &Vector<T>, grad: Option<&mut Vector<T>>| -> ExtReal<T> {
                    if z.norm() > blow_up {
                        return ExtReal::PosInf;
                    }
                    let mut v = ExtReal::Finite(-p.dot(z));
                    for t in &smooth_parts {
                        v = v + t.eval(z);
                    }
                    if let Some(g) = grad {
                        if v.is_finite() {
                            g.copy_from(&(-p));
                            for t in &smooth_parts {
                                *g += t.subgrad(z);
                            }
                        }
                    }
                    v
                };
                let head = nonsmooth.first();
                let prox_clo =
                    head.map(|t| move |z: &Vector<T>, s: T| -> Vector<T> { t.prox(z, s) });
                let val_clo = head.map(|t| move |z: &Vector<T>| -> ExtReal<T> { t.eval(z) });
                let res = crate::minimize::minimize_composite(
                    &smooth,
                    prox_clo
                        .as_ref()
                        .map(|c| c as &dyn Fn(&Vector<T>, T) -> Vector<T>),
                    val_clo
                        .as_ref()
                        .map(|c| c as &dyn Fn(&Vector<T>) -> ExtReal<T>),
                    &x0,
                    policy,
                );
                if res.x.norm() > blow_up {
                    return (ExtReal::PosInf, None, true);
                }
                scratch.last = Some(res.x.clone());
                let val = match self.eval(&res.x) {
                    ExtReal::Finite(v) => ExtReal::Finite(p.dot(&res.x) - v),
                    ExtReal::PosInf => ExtReal::PosInf,
                };
                return (val, Some(res.x), res.converged);
            }
        }

        let mut x = scratch
            .last
            .clone()
            .unwrap_or_else(|| Vector::zeros(self.dim));
        if x.len() != self.dim {
            x = Vector::zeros(self.dim);
        }
        let mut lam = T::one();
        let lam_max = lit::<T>(1e8);
        let blow_up = lit::<T>(1e10) * (T::one() + p.norm());
        let iters = policy.max_iter.min(50_000);
        let mut converged = false;
        for k in 1..=iters {
            let next = self.prox(&(&x + p * lam), lam);
            let step = (&next - &x).norm();
            x = next;
            if x.norm() > blow_up {
                // The supremum diverges: p is outside dom φ*.
                return (ExtReal::PosInf, None, true);
            }
            if step / lam <= policy.abs_tol + policy.rel_tol * (T::one() + x.norm()) {
                converged = true;
                break;
            }
            if k % 8 == 0 {
                lam = (lam * lit(2.0)).min(lam_max);
            }
        }
        scratch.last = Some(x.clone());
        let val = match self.eval(&x) {
            ExtReal::Finite(v) => ExtReal::Finite(p.dot(&x) - v),
            ExtReal::PosInf => ExtReal::PosInf,
        };
        (val, Some(x), converged)
    }

    /// Moreau envelope value `min_z φ(z) + ‖z−x‖²/(2λ)`.
    pub fn moreau(&self, x: &Vector<T>, lam: T) -> T {
        let z = self.prox(x, lam);
        let d = x - &z;
        self.eval(&z).into_inner() + d.norm_squared() / (lam * lit(2.0))
    }
}

/// Moreau envelope of `φ` as a first-class smooth convex function.
pub fn moreau_envelope<T: Real>(phi: &ConvexFn<T>, lam: T) -> Result<ConvexFn<T>> {
    if lam <= T::zero() {
        return Err(Error::Invalid("Moreau parameter must be positive".into()));
    }
    Ok(ConvexFn { dim: phi.dim, kind: Kind::MoreauEnv { base: Box::new(phi.clone()), lam } })
}

/// Free functions mirroring the operation names.
pub fn conjugate_eval<T: Real>(phi: &ConvexFn<T>, p: &Vector<T>) -> ExtReal<T> {
    phi.conjugate_eval(p)
}

/// Proximal map as a free function.
pub fn prox<T: Real>(phi: &ConvexFn<T>, x: &Vector<T>, lam: T) -> Vector<T> {
    phi.prox(x, lam)
}

/// prox of `f*` from prox of `f` by the Moreau identity:
/// `prox_{λf*}(x) = x − λ·prox_{f, step 1/λ}(x/λ)`.
fn moreau_prox<T: Real>(f: &ConvexFn<T>, x: &Vector<T>, lam: T) -> Vector<T> {
    x - f.prox(&(x / lam), T::one() / lam) * lam
}

/// Prox of a sum: FISTA on the smooth terms plus the coupling quadratic, with
/// at most one prox-friendly nonsmooth term handled exactly.
fn prox_of_sum<T: Real>(
    dim: usize,
    terms: &[ConvexFn<T>],
    x: &Vector<T>,
    lam: T,
) -> Vector<T> {
    let policy = NumericPolicy {
        abs_tol: lit(1e-12),
        rel_tol: lit(1e-11),
        ..NumericPolicy::default()
    };
    let (smooth_terms, nonsmooth): (Vec<&ConvexFn<T>>, Vec<&ConvexFn<T>>) =
        terms.iter().partition(|t| t.is_smooth());
    let smooth = |z: &Vector<T>, grad: Option<&mut Vector<T>>| -> ExtReal<T> {
        let d = z - x;
        let mut v = ExtReal::Finite(d.norm_squared() / (lam * lit(2.0)));
        for t in &smooth_terms {
            v = v + t.eval(z);
        }
        // Extra nonsmooth terms beyond the first are folded into the smooth
        // oracle via their subgradients (diminishing-step fallback territory).
        for t in nonsmooth.iter().skip(1) {
            v = v + t.eval(z);
        }
        if let Some(g) = grad {
            *g = d / lam;
            for t in &smooth_terms {
                *g += t.subgrad(z);
            }
            for t in nonsmooth.iter().skip(1) {
                *g += t.subgrad(z);
            }
        }
        v
    };
    let first_nonsmooth = nonsmooth.first();
    let prox_clo = first_nonsmooth.map(|t| {
        move |z: &Vector<T>, step: T| -> Vector<T> { t.prox(z, step) }
    });
    let val_clo = first_nonsmooth.map(|t| move |z: &Vector<T>| -> ExtReal<T> { t.eval(z) });
    let res: MinimizeResult<T> = minimize_composite(
        &smooth,
        prox_clo
            .as_ref()
            .map(|p| p as &dyn Fn(&Vector<T>, T) -> Vector<T>),
        val_clo.as_ref().map(|v| v as &dyn Fn(&Vector<T>) -> ExtReal<T>),
        x,
        &policy,
    );
    let _ = dim;
    res.x
}

/// A maximizer of `⟨p,·⟩` over the set (minimum-norm choice at ties), used as
/// the Danskin subgradient of the support function.
fn support_argmax<T: Real>(set: &ConvexSet<T>, p: &Vector<T>) -> Vector<T> {
    // Follow the support direction from the projection of 0: walk a large step
    // along p and project back. Exact for compact sets; for cones/halfspaces
    // the support is 0 or +∞ and the projection of any maximizing ray works.
    let big = lit::<T>(1e6);
    set.project(&(p * big))
}
