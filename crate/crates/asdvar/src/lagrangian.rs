//! The anti-selfdual (ASD) Lagrangian algebra: constructors, combinators,
//! conjugation, and the anti-selfduality residual checker.
//!
//! A Lagrangian here is a jointly convex function `L(x, p)` on a product of
//! two finite-dimensional spaces of equal dimension. It is stored as a
//! structure tree whose leaves are *pairs* `L(x, p) = f(x) + g(−p)` (the
//! *basic* case being `g = f*`), and whose interior nodes record the calculus
//! operations:
//!
//! - right shift    `L_Λ(x, p) = L(x, Λx + p)`,
//! - left shift     `_ΛL(x, p) = L(x + Λ⁻¹p, Λx)`,
//! - scaling        `(λ·L)(x, p) = λ² L(x/λ, p/λ)`,
//! - addition       `(L ⊕ M)(x, p) = inf_r L(x, r) + M(x, p − r)`,
//! - convolution    `(L ⋆ M)(x, p) = inf_z L(z, p) + M(x − z, p)`,
//! - free products, twisted `A`-products, and `A`-antidualisation (the last
//!   two are lowered to a right shift of a free product / pair by the skew
//!   block operator `(x, y) ↦ (A*y, −Ax)`).
//!
//! The infima hidden inside `⊕` and `⋆` are exposed through a *lifted*
//! evaluation: `eval_lifted` takes the hidden variables as an explicit
//! argument, so an outer minimization can absorb them into its own decision
//! vector instead of nesting solvers. `eval` itself minimizes over the hidden
//! variables for direct point queries.
//!
//! Conjugation `L*(q, y) = sup { ⟨q, x⟩ + ⟨y, p⟩ − L(x, p) }` is computed by
//! structural rewriting wherever the tree admits it (pairs, shifts, scalings,
//! free products) and by a numeric joint supremum over the lifted variables
//! otherwise; the result carries `exact` and `converged` flags.

use nalgebra::DVector;
use rand::Rng;

use crate::convex::ConvexFn;
use crate::error::{Error, Result};
use crate::linops::LinOp;
use crate::minimize::minimize_composite;
use crate::num::{gaussian_vector, lit, ExtReal, Matrix, NumericPolicy, Real, Vector};

/// Which side an operator shift acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftSide {
    /// `L_Λ(x, p) = L(x, Λx + p)`.
    Right,
    /// `_ΛL(x, p) = L(x + Λ⁻¹p, Λx)`; requires `Λ` invertible.
    Left,
}

/// A convex Lagrangian `L(x, p)` represented as a structure tree.
#[derive(Clone)]
pub struct Lagrangian<T: Real> {
    dim: usize,
    node: Node<T>,
}

#[derive(Clone)]
enum Node<T: Real> {
    /// `L(x, p) = f(x) + g(−p)`; `basic` marks `g = f*`.
    Pair {
        f: ConvexFn<T>,
        g: ConvexFn<T>,
        basic: bool,
    },
    RightShift {
        base: Box<Lagrangian<T>>,
        lam: LinOp<T>,
    },
    LeftShift {
        base: Box<Lagrangian<T>>,
        lam: LinOp<T>,
        lam_inv: LinOp<T>,
    },
    Scaled {
        factor: T,
        base: Box<Lagrangian<T>>,
    },
    Sum {
        l: Box<Lagrangian<T>>,
        m: Box<Lagrangian<T>>,
        guaranteed: bool,
    },
    Conv {
        l: Box<Lagrangian<T>>,
        m: Box<Lagrangian<T>>,
        guaranteed: bool,
    },
    FreeProduct {
        parts: Vec<Lagrangian<T>>,
    },
}

/// Joint subgradient of a lifted evaluation: with respect to `x`, `p`, and
/// the hidden variables `h`.
#[derive(Debug, Clone)]
pub struct LiftedGrad<T: Real> {
    pub gx: Vector<T>,
    pub gp: Vector<T>,
    pub gh: Vec<T>,
}

/// Result of evaluating the Fenchel conjugate `L*(q, y)`.
#[derive(Debug, Clone)]
pub struct ConjValue<T: Real> {
    pub value: ExtReal<T>,
    /// Whether the value came from exact structure-tree rewriting (as opposed
    /// to a numeric joint supremum).
    pub exact: bool,
    pub converged: bool,
}

/// Anti-selfduality residual report: `max |L*(p, x) − L(−Rx, −R*p)|` over the
/// sampled pairs at which both sides are finite.
#[derive(Debug, Clone)]
pub struct AsdReport<T: Real> {
    pub residual: T,
    /// Pairs skipped because either side was `+∞`.
    pub skipped: usize,
    pub evaluated: usize,
}

/// An invertible bounded linear automorphism `R : X → X`.
#[derive(Clone)]
pub struct Automorphism<T: Real> {
    r: LinOp<T>,
    r_inv: Matrix<T>,
}

impl<T: Real> Automorphism<T> {
    /// Wrap `R`, checking squareness and invertibility
    /// (`‖R R⁻¹ − I‖_max ≤ 1e−10`).
    pub fn new(r: LinOp<T>) -> Result<Self> {
        if r.rows() != r.cols() {
            return Err(Error::Dimension("automorphism must be square".into()));
        }
        let r_inv = r
            .matrix()
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Precondition("automorphism must be invertible".into()))?;
        let check = r.matrix() * &r_inv - Matrix::identity(r.rows(), r.rows());
        if check.amax() > lit::<T>(1e-10) {
            return Err(Error::Precondition(
                "automorphism inverse fails the residual check".into(),
            ));
        }
        Ok(Automorphism { r, r_inv })
    }

    /// The identity automorphism on an `n`-dimensional space.
    pub fn identity(n: usize) -> Self {
        Automorphism {
            r: LinOp::identity(n),
            r_inv: Matrix::identity(n, n),
        }
    }

    /// Dimension of the underlying space.
    pub fn dim(&self) -> usize {
        self.r.rows()
    }

    /// `R x`.
    pub fn apply(&self, x: &Vector<T>) -> Vector<T> {
        self.r.apply(x)
    }

    /// `R* p`.
    pub fn apply_adjoint(&self, p: &Vector<T>) -> Vector<T> {
        self.r.apply_adjoint(p)
    }

    /// `R⁻¹ x`.
    pub fn apply_inverse(&self, x: &Vector<T>) -> Vector<T> {
        &self.r_inv * x
    }
}

impl<T: Real> Lagrangian<T> {
    // ----------------------------------------------------------------
    // Constructors and combinators
    // ----------------------------------------------------------------

    /// The basic ASD Lagrangian `L(x, p) = φ(x) + φ*(−p)`.
    pub fn basic(phi: ConvexFn<T>) -> Self {
        let g = phi.conjugate();
        let dim = phi.dim();
        Lagrangian {
            dim,
            node: Node::Pair { f: phi, g, basic: true },
        }
    }

    /// The split form `L(x, p) = f(x) + g(−p)` with independent `f` and `g`.
    /// Such a pair is ASD exactly when `g = f*`; use [`Lagrangian::basic`]
    /// for that case.
    pub fn pair(f: ConvexFn<T>, g: ConvexFn<T>) -> Result<Self> {
        if f.dim() != g.dim() {
            return Err(Error::Dimension("pair components must share a dimension".into()));
        }
        let dim = f.dim();
        Ok(Lagrangian {
            dim,
            node: Node::Pair { f, g, basic: false },
        })
    }

    /// Operator shift `L_Λ(x,p) = L(x, Λx+p)` (right) or
    /// `_ΛL(x,p) = L(x + Λ⁻¹p, Λx)` (left).
    pub fn shift(self, lam: LinOp<T>, side: ShiftSide) -> Result<Self> {
        if lam.rows() != self.dim || lam.cols() != self.dim {
            return Err(Error::Dimension(format!(
                "shift operator must be {n}×{n}",
                n = self.dim
            )));
        }
        let dim = self.dim;
        let node = match side {
            ShiftSide::Right => Node::RightShift { base: Box::new(self), lam },
            ShiftSide::Left => {
                let inv = lam.matrix().clone().try_inverse().ok_or_else(|| {
                    Error::Precondition("left shift requires an invertible operator".into())
                })?;
                let lam_inv = LinOp::between(inv, lam.codomain().clone(), lam.domain().clone())?;
                Node::LeftShift { base: Box::new(self), lam, lam_inv }
            }
        };
        Ok(Lagrangian { dim, node })
    }

    /// Scalar multiplication `(λ·L)(x, p) = λ² L(x/λ, p/λ)`, `λ > 0`.
    pub fn scaled(self, factor: T) -> Result<Self> {
        if factor <= T::zero() {
            return Err(Error::Invalid("scaling factor must be positive".into()));
        }
        let dim = self.dim;
        Ok(Lagrangian {
            dim,
            node: Node::Scaled { factor, base: Box::new(self) },
        })
    }

    /// Addition `(L ⊕ M)(x, p) = inf_r { L(x, r) + M(x, p − r) }`.
    ///
    /// ASD is preserved when at least one operand is basic; otherwise the
    /// result is flagged "not guaranteed" (see [`Lagrangian::asd_guaranteed`]).
    pub fn sum(l: Lagrangian<T>, m: Lagrangian<T>) -> Result<Self> {
        if l.dim != m.dim {
            return Err(Error::Dimension("sum operands must share a dimension".into()));
        }
        let dim = l.dim;
        let guaranteed = l.is_basic() || m.is_basic();
        Ok(Lagrangian {
            dim,
            node: Node::Sum { l: Box::new(l), m: Box::new(m), guaranteed },
        })
    }

    /// Convolution `(L ⋆ M)(x, p) = inf_z { L(z, p) + M(x − z, p) }`.
    ///
    /// ASD is preserved when at least one operand is basic; otherwise the
    /// result is flagged "not guaranteed".
    pub fn convolution(l: Lagrangian<T>, m: Lagrangian<T>) -> Result<Self> {
        if l.dim != m.dim {
            return Err(Error::Dimension(
                "convolution operands must share a dimension".into(),
            ));
        }
        let dim = l.dim;
        let guaranteed = l.is_basic() || m.is_basic();
        Ok(Lagrangian {
            dim,
            node: Node::Conv { l: Box::new(l), m: Box::new(m), guaranteed },
        })
    }

    /// Free product `Σᵢ Lᵢ` over the product space.
    pub fn free_product(parts: Vec<Lagrangian<T>>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Invalid("free product needs at least one factor".into()));
        }
        let dim = parts.iter().map(|l| l.dim).sum();
        Ok(Lagrangian { dim, node: Node::FreeProduct { parts } })
    }

    /// Twisted `A`-product on `X × Y`:
    /// `(L ⊕_A M)((x,y),(p,q)) = L(x, A*y + p) + M(y, −Ax + q)`,
    /// for `A : X → Y`. Internally lowered to a right shift of the free
    /// product by the skew operator `(x, y) ↦ (A*y, −Ax)`.
    pub fn twisted(l: Lagrangian<T>, m: Lagrangian<T>, a: LinOp<T>) -> Result<Self> {
        if a.cols() != l.dim || a.rows() != m.dim {
            return Err(Error::Dimension(
                "twist operator must map the first factor into the second".into(),
            ));
        }
        let lam = block_skew(&a);
        Lagrangian::free_product(vec![l, m])?.shift(lam, ShiftSide::Right)
    }

    /// `A`-antidualisation of a jointly convex `φ` on `X × Y`
    /// (`dim φ = dim_x + dim_y`):
    /// `(φ ⊕_as A)((x,y),(p,q)) = φ(x,y) + φ*(−A*y − p, Ax − q)`.
    /// Lowered to a right shift of `basic(φ)` by the same skew block operator.
    pub fn antidual(phi: ConvexFn<T>, a: LinOp<T>) -> Result<Self> {
        if a.cols() + a.rows() != phi.dim() {
            return Err(Error::Dimension(
                "antidualisation operator blocks must tile the function's space".into(),
            ));
        }
        let lam = block_skew(&a);
        Lagrangian::basic(phi).shift(lam, ShiftSide::Right)
    }

    /// λ-regularization `L_λ = L ⋆ M_λ` with
    /// `M_λ(x, p) = ‖x‖²/(2λ²) + λ²‖p‖²/2`, the basic Lagrangian of the
    /// scaled quadratic. The result is finite everywhere and coercive in `x`,
    /// and ASD whenever `L` is.
    pub fn yosida_regularize(self, lam: T) -> Result<Self> {
        if lam <= T::zero() {
            return Err(Error::Invalid("regularization parameter must be positive".into()));
        }
        let q = Matrix::identity(self.dim, self.dim) / (lam * lam);
        let mollifier = Lagrangian::basic(ConvexFn::quadratic(q, Vector::zeros(self.dim))?);
        Lagrangian::convolution(self, mollifier)
    }

    // ----------------------------------------------------------------
    // Accessors
    // ----------------------------------------------------------------

    /// Dimension of the state space (and, equally, the costate space).
    pub fn dim_x(&self) -> usize {
        self.dim
    }

    /// Dimension of the costate space.
    pub fn dim_p(&self) -> usize {
        self.dim
    }

    /// Whether this tree is a single basic leaf `φ(x) + φ*(−p)`.
    pub fn is_basic(&self) -> bool {
        matches!(self.node, Node::Pair { basic: true, .. })
    }

    /// Whether the ASD-preservation guarantees of the calculus apply to every
    /// node of this tree (sums/convolutions need a basic operand; for other
    /// nodes the guarantee additionally needs skew shift operators, which is
    /// checked numerically by [`Lagrangian::asd_residual`], not here).
    pub fn asd_guaranteed(&self) -> bool {
        match &self.node {
            Node::Pair { basic, .. } => *basic,
            Node::RightShift { base, .. } | Node::LeftShift { base, .. } => base.asd_guaranteed(),
            Node::Scaled { base, .. } => base.asd_guaranteed(),
            Node::Sum { l, m, guaranteed } | Node::Conv { l, m, guaranteed } => {
                *guaranteed && l.asd_guaranteed() && m.asd_guaranteed()
            }
            Node::FreeProduct { parts } => parts.iter().all(|p| p.asd_guaranteed()),
        }
    }

    /// Number of hidden variables introduced by `⊕`/`⋆` nodes in the tree.
    pub fn hidden_dim(&self) -> usize {
        match &self.node {
            Node::Pair { .. } => 0,
            Node::RightShift { base, .. }
            | Node::LeftShift { base, .. }
            | Node::Scaled { base, .. } => base.hidden_dim(),
            Node::Sum { l, m, .. } | Node::Conv { l, m, .. } => {
                self.dim + l.hidden_dim() + m.hidden_dim()
            }
            Node::FreeProduct { parts } => parts.iter().map(|p| p.hidden_dim()).sum(),
        }
    }

    // ----------------------------------------------------------------
    // Evaluation
    // ----------------------------------------------------------------

    /// Evaluate the *lifted* integrand: the defining formula of the tree with
    /// the hidden `⊕`/`⋆` variables fixed to the entries of `h` (so
    /// `L(x, p) = min over h of eval_lifted(x, p, h)`). Pass `want_grad` to
    /// also receive a joint subgradient; it is `None` when the value is `+∞`.
    pub fn eval_lifted(
        &self,
        x: &Vector<T>,
        p: &Vector<T>,
        h: &[T],
        want_grad: bool,
    ) -> (ExtReal<T>, Option<LiftedGrad<T>>) {
        match &self.node {
            Node::Pair { f, g, .. } => {
                let v = f.eval(x) + g.eval(&(-p));
                if !want_grad || !v.is_finite() {
                    return (v, None);
                }
                let gx = f.subgrad(x);
                let gp = -g.subgrad(&(-p));
                (v, Some(LiftedGrad { gx, gp, gh: Vec::new() }))
            }
            Node::RightShift { base, lam } => {
                let pin = lam.apply(x) + p;
                let (v, grad) = base.eval_lifted(x, &pin, h, want_grad);
                let grad = grad.map(|g| LiftedGrad {
                    gx: &g.gx + lam.apply_adjoint(&g.gp),
                    gp: g.gp,
                    gh: g.gh,
                });
                (v, grad)
            }
            Node::LeftShift { base, lam, lam_inv } => {
                let xin = x + lam_inv.apply(p);
                let pin = lam.apply(x);
                let (v, grad) = base.eval_lifted(&xin, &pin, h, want_grad);
                let grad = grad.map(|g| LiftedGrad {
                    gx: &g.gx + lam.apply_adjoint(&g.gp),
                    gp: lam_inv.apply_adjoint(&g.gx),
                    gh: g.gh,
                });
                (v, grad)
            }
            Node::Scaled { factor, base } => {
                let s = *factor;
                let (v, grad) = base.eval_lifted(&(x / s), &(p / s), h, want_grad);
                let v = v.map(|t| t * s * s);
                let grad = grad.map(|g| LiftedGrad {
                    gx: g.gx * s,
                    gp: g.gp * s,
                    gh: g.gh.into_iter().map(|t| t * s * s).collect(),
                });
                (v, grad)
            }
            Node::Sum { l, m, .. } => {
                let (r, hl, hm) = split_hidden(self.dim, h, l.hidden_dim());
                let rv = DVector::from_column_slice(r);
                let (v1, g1) = l.eval_lifted(x, &rv, hl, want_grad);
                let (v2, g2) = m.eval_lifted(x, &(p - &rv), hm, want_grad);
                let v = v1 + v2;
                if !want_grad || !v.is_finite() {
                    return (v, None);
                }
                let (g1, g2) = match (g1, g2) {
                    (Some(a), Some(b)) => (a, b),
                    _ => return (v, None),
                };
                let mut gh: Vec<T> = (&g1.gp - &g2.gp).iter().copied().collect();
                gh.extend_from_slice(&g1.gh);
                gh.extend_from_slice(&g2.gh);
                (
                    v,
                    Some(LiftedGrad { gx: &g1.gx + &g2.gx, gp: g2.gp, gh }),
                )
            }
            Node::Conv { l, m, .. } => {
                let (z, hl, hm) = split_hidden(self.dim, h, l.hidden_dim());
                let zv = DVector::from_column_slice(z);
                let (v1, g1) = l.eval_lifted(&zv, p, hl, want_grad);
                let (v2, g2) = m.eval_lifted(&(x - &zv), p, hm, want_grad);
                let v = v1 + v2;
                if !want_grad || !v.is_finite() {
                    return (v, None);
                }
                let (g1, g2) = match (g1, g2) {
                    (Some(a), Some(b)) => (a, b),
                    _ => return (v, None),
                };
                let mut gh: Vec<T> = (&g1.gx - &g2.gx).iter().copied().collect();
                gh.extend_from_slice(&g1.gh);
                gh.extend_from_slice(&g2.gh);
                (
                    v,
                    Some(LiftedGrad { gx: g2.gx, gp: &g1.gp + &g2.gp, gh }),
                )
            }
            Node::FreeProduct { parts } => {
                let mut v = ExtReal::Finite(T::zero());
                let mut gx = want_grad.then(|| Vector::zeros(self.dim));
                let mut gp = want_grad.then(|| Vector::zeros(self.dim));
                let mut gh = want_grad.then(Vec::new);
                let mut off = 0usize;
                let mut hoff = 0usize;
                for part in parts {
                    let d = part.dim;
                    let hd = part.hidden_dim();
                    let xi = x.rows(off, d).into_owned();
                    let pi = p.rows(off, d).into_owned();
                    let (vi, gi) = part.eval_lifted(&xi, &pi, &h[hoff..hoff + hd], want_grad);
                    v = v + vi;
                    if !v.is_finite() {
                        return (v, None);
                    }
                    if want_grad {
                        match gi {
                            Some(g) => {
                                gx.as_mut().unwrap().rows_mut(off, d).copy_from(&g.gx);
                                gp.as_mut().unwrap().rows_mut(off, d).copy_from(&g.gp);
                                gh.as_mut().unwrap().extend_from_slice(&g.gh);
                            }
                            None => return (v, None),
                        }
                    }
                    off += d;
                    hoff += hd;
                }
                let grad = match (gx, gp, gh) {
                    (Some(gx), Some(gp), Some(gh)) => Some(LiftedGrad { gx, gp, gh }),
                    _ => None,
                };
                (v, grad)
            }
        }
    }

    /// A reasonable starting point for the hidden variables at `(x, p)`,
    /// appended to `out` in tree order.
    pub fn hidden_start(&self, x: &Vector<T>, p: &Vector<T>, out: &mut Vec<T>) {
        match &self.node {
            Node::Pair { .. } => {}
            Node::RightShift { base, lam } => base.hidden_start(x, &(lam.apply(x) + p), out),
            Node::LeftShift { base, lam, lam_inv } => {
                base.hidden_start(&(x + lam_inv.apply(p)), &lam.apply(x), out)
            }
            Node::Scaled { factor, base } => base.hidden_start(&(x / *factor), &(p / *factor), out),
            Node::Sum { l, m, .. } => {
                let r = p * lit::<T>(0.5);
                out.extend(r.iter().copied());
                l.hidden_start(x, &r, out);
                m.hidden_start(x, &r, out);
            }
            Node::Conv { l, m, .. } => {
                let z = x * lit::<T>(0.5);
                out.extend(z.iter().copied());
                l.hidden_start(&z, p, out);
                m.hidden_start(&z, p, out);
            }
            Node::FreeProduct { parts } => {
                let mut off = 0usize;
                for part in parts {
                    let d = part.dim;
                    part.hidden_start(
                        &x.rows(off, d).into_owned(),
                        &p.rows(off, d).into_owned(),
                        out,
                    );
                    off += d;
                }
            }
        }
    }

    /// Evaluate `L(x, p)`, minimizing over any hidden `⊕`/`⋆` variables.
    pub fn eval(&self, x: &Vector<T>, p: &Vector<T>) -> ExtReal<T> {
        self.eval_with(x, p, &NumericPolicy::default())
    }

    /// [`Lagrangian::eval`] with an explicit numeric policy for the hidden
    /// minimization.
    pub fn eval_with(&self, x: &Vector<T>, p: &Vector<T>, policy: &NumericPolicy<T>) -> ExtReal<T> {
        if self.hidden_dim() == 0 {
            return self.eval_lifted(x, p, &[], false).0;
        }
        let mut h0 = Vec::new();
        self.hidden_start(x, p, &mut h0);
        let smooth = |h: &Vector<T>, grad: Option<&mut Vector<T>>| -> ExtReal<T> {
            let (v, g) = self.eval_lifted(x, p, h.as_slice(), grad.is_some());
            if let (Some(out), Some(g)) = (grad, g) {
                out.copy_from_slice(&g.gh);
            }
            v
        };
        let res = minimize_composite(&smooth, None, None, &Vector::from_vec(h0), policy);
        self.eval_lifted(x, p, res.x.as_slice(), false).0
    }

    // ----------------------------------------------------------------
    // Conjugation
    // ----------------------------------------------------------------

    /// The Fenchel conjugate in both variables,
    /// `L*(q, y) = sup { ⟨q, x⟩ + ⟨y, p⟩ − L(x, p) }`,
    /// with exactness and convergence flags.
    pub fn conjugate_eval(&self, q: &Vector<T>, y: &Vector<T>) -> ConjValue<T> {
        self.conjugate_eval_with(q, y, &NumericPolicy::default())
    }

    /// [`Lagrangian::conjugate_eval`] with an explicit numeric policy.
    pub fn conjugate_eval_with(
        &self,
        q: &Vector<T>,
        y: &Vector<T>,
        policy: &NumericPolicy<T>,
    ) -> ConjValue<T> {
        match &self.node {
            // (f(x) + g(−p))* = f*(q) + g*(−y).
            Node::Pair { f, g, .. } => {
                let a = conj_value(f, q, policy);
                let b = conj_value(g, &(-y), policy);
                ConjValue {
                    value: a.value + b.value,
                    exact: a.exact && b.exact,
                    converged: a.converged && b.converged,
                }
            }
            // (L_Λ)*(q, y) = L*(q − Λ*y, y).
            Node::RightShift { base, lam } => {
                base.conjugate_eval_with(&(q - lam.apply_adjoint(y)), y, policy)
            }
            // (_ΛL)*(q, y) = L*(Λ*y, (Λ*)⁻¹q − y).
            Node::LeftShift { base, lam, lam_inv } => base.conjugate_eval_with(
                &lam.apply_adjoint(y),
                &(lam_inv.apply_adjoint(q) - y),
                policy,
            ),
            // (λ·L)*(q, y) = λ² L*(q/λ, y/λ).
            Node::Scaled { factor, base } => {
                let s = *factor;
                let mut c = base.conjugate_eval_with(&(q / s), &(y / s), policy);
                c.value = c.value.map(|t| t * s * s);
                c
            }
            Node::FreeProduct { parts } => {
                let mut value = ExtReal::Finite(T::zero());
                let mut exact = true;
                let mut converged = true;
                let mut off = 0usize;
                for part in parts {
                    let d = part.dim;
                    let c = part.conjugate_eval_with(
                        &q.rows(off, d).into_owned(),
                        &y.rows(off, d).into_owned(),
                        policy,
                    );
                    value = value + c.value;
                    exact &= c.exact;
                    converged &= c.converged;
                    off += d;
                }
                ConjValue { value, exact, converged }
            }
            // ⊕ and ⋆ conjugates: numeric joint supremum over the lifted
            // variables.
            Node::Sum { .. } | Node::Conv { .. } => self.conjugate_numeric(q, y, policy),
        }
    }

    /// Numeric joint supremum
    /// `sup over (x, p, h) of ⟨q, x⟩ + ⟨y, p⟩ − eval_lifted(x, p, h)`.
    fn conjugate_numeric(&self, q: &Vector<T>, y: &Vector<T>, policy: &NumericPolicy<T>) -> ConjValue<T> {
        let n = self.dim;
        let hd = self.hidden_dim();
        let mut v0 = Vec::with_capacity(2 * n + hd);
        v0.extend(q.iter().copied());
        v0.extend(y.iter().copied());
        self.hidden_start(q, y, &mut v0);
        let smooth = |v: &Vector<T>, grad: Option<&mut Vector<T>>| -> ExtReal<T> {
            let x = v.rows(0, n).into_owned();
            let p = v.rows(n, n).into_owned();
            let (val, g) = self.eval_lifted(&x, &p, &v.as_slice()[2 * n..], grad.is_some());
            let val = val.map(|t| t - q.dot(&x) - y.dot(&p));
            if let (Some(out), Some(g)) = (grad, g) {
                out.rows_mut(0, n).copy_from(&(&g.gx - q));
                out.rows_mut(n, n).copy_from(&(&g.gp - y));
                out.rows_mut(2 * n, hd).copy_from_slice(&g.gh);
            }
            val
        };
        let res = minimize_composite(&smooth, None, None, &Vector::from_vec(v0), policy);
        // An unbounded supremum shows up as iterates escaping to infinity.
        let scale = T::one() + q.norm() + y.norm();
        if res.x.norm() > lit::<T>(1e8) * scale {
            return ConjValue { value: ExtReal::PosInf, exact: false, converged: true };
        }
        ConjValue {
            value: ExtReal::Finite(-res.value),
            exact: false,
            converged: res.converged,
        }
    }

    // ----------------------------------------------------------------
    // Residual checkers
    // ----------------------------------------------------------------

    /// Sampled anti-selfduality residual
    /// `max |L*(p, x) − L(−Rx, −R*p)|` over Gaussian pairs of the given
    /// radius; pairs where either side is `+∞` are skipped and counted.
    pub fn asd_residual<R: Rng>(
        &self,
        samples: usize,
        auto: Option<&Automorphism<T>>,
        radius: T,
        rng: &mut R,
    ) -> AsdReport<T> {
        let policy = NumericPolicy::default();
        let mut residual = T::zero();
        let mut skipped = 0usize;
        let mut evaluated = 0usize;
        for _ in 0..samples {
            let x = gaussian_vector(rng, self.dim, radius);
            let p = gaussian_vector(rng, self.dim, radius);
            let lhs = self.conjugate_eval_with(&p, &x, &policy).value;
            let (rx, rp) = match auto {
                Some(a) => (a.apply(&x), a.apply_adjoint(&p)),
                None => (x.clone(), p.clone()),
            };
            let rhs = self.eval_with(&(-rx), &(-rp), &policy);
            match (lhs.finite(), rhs.finite()) {
                (Some(a), Some(b)) => {
                    evaluated += 1;
                    let d = (a - b).abs();
                    if d > residual {
                        residual = d;
                    }
                }
                _ => skipped += 1,
            }
        }
        AsdReport { residual, skipped, evaluated }
    }

    /// One-sided residual for membership in the sub-ASD cone:
    /// `max over samples of max(L(−x, −p) − L*(p, x), 0)`.
    pub fn sub_asd_residual<R: Rng>(&self, samples: usize, radius: T, rng: &mut R) -> AsdReport<T> {
        let policy = NumericPolicy::default();
        let mut residual = T::zero();
        let mut skipped = 0usize;
        let mut evaluated = 0usize;
        for _ in 0..samples {
            let x = gaussian_vector(rng, self.dim, radius);
            let p = gaussian_vector(rng, self.dim, radius);
            let lhs = self.eval_with(&(-&x), &(-&p), &policy);
            let rhs = self.conjugate_eval_with(&p, &x, &policy).value;
            match (lhs.finite(), rhs.finite()) {
                (Some(a), Some(b)) => {
                    evaluated += 1;
                    let d = (a - b).max(T::zero());
                    if d > residual {
                        residual = d;
                    }
                }
                _ => skipped += 1,
            }
        }
        AsdReport { residual, skipped, evaluated }
    }
}

/// The skew block operator `(x, y) ↦ (A*y, −Ax)` on `X × Y` used by the
/// twisted product and antidualisation.
fn block_skew<T: Real>(a: &LinOp<T>) -> LinOp<T> {
    let (nx, ny) = (a.cols(), a.rows());
    let n = nx + ny;
    let at = a.adjoint_matrix();
    let mut m = Matrix::zeros(n, n);
    m.view_mut((0, nx), (nx, ny)).copy_from(&at);
    m.view_mut((nx, 0), (ny, nx)).copy_from(&(-a.matrix()));
    LinOp::new(m)
}

fn split_hidden<'a, T>(dim: usize, h: &'a [T], left_hidden: usize) -> (&'a [T], &'a [T], &'a [T]) {
    let (own, rest) = h.split_at(dim);
    let (hl, hm) = rest.split_at(left_hidden);
    (own, hl, hm)
}

/// Evaluate `f*(v)` with exactness/convergence flags.
fn conj_value<T: Real>(f: &ConvexFn<T>, v: &Vector<T>, policy: &NumericPolicy<T>) -> ConjValue<T> {
    use crate::convex::{ConjKind, ConjScratch};
    match f.conj_kind() {
        ConjKind::Numeric => {
            let mut scratch = ConjScratch::default();
            let (value, _, converged) = f.conjugate_eval_numeric(v, &mut scratch, policy);
            ConjValue { value, exact: false, converged }
        }
        _ => ConjValue { value: f.conjugate_eval(v), exact: true, converged: true },
    }
}

/// Free-function form of [`Lagrangian::conjugate_eval`], returning the value.
pub fn conjugate_eval_l<T: Real>(l: &Lagrangian<T>, q: &Vector<T>, y: &Vector<T>) -> ExtReal<T> {
    l.conjugate_eval(q, y).value
}

/// Free-function form of [`Lagrangian::asd_residual`] returning the residual.
pub fn asd_residual<T: Real, R: Rng>(
    l: &Lagrangian<T>,
    samples: usize,
    auto: Option<&Automorphism<T>>,
    radius: T,
    rng: &mut R,
) -> T {
    l.asd_residual(samples, auto, radius, rng).residual
}
