//! Dense linear operators with optional metric weights, adjoints,
//! symmetric/antisymmetric splitting, classification, and boundary triplets.
//!
//! All spaces are finite-dimensional inner-product spaces; a space is a
//! dimension plus an optional symmetric positive-definite weight matrix `M`
//! defining `⟨x,y⟩ = xᵀMy`. Adjoints are always taken in the declared
//! metrics: for `A : (X,M_dom) → (Y,M_cod)`, `A* = M_dom⁻¹ Aᵀ M_cod`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::num::{gaussian_vector, lit, Real, Matrix, Vector};

/// An inner-product structure: identity by default, or an SPD weight.
#[derive(Debug, Clone)]
pub struct InnerProduct<T: Real> {
    dim: usize,
    weight: Option<Matrix<T>>,
}

impl<T: Real> InnerProduct<T> {
    /// The standard Euclidean inner product on `R^dim`.
    pub fn euclidean(dim: usize) -> Self {
        InnerProduct { dim, weight: None }
    }

    /// Weighted inner product `⟨x,y⟩ = xᵀMy`; `M` must be symmetric positive-definite.
    pub fn weighted(m: Matrix<T>) -> Result<Self> {
        let dim = m.nrows();
        if m.ncols() != dim {
            return Err(Error::Dimension("metric must be square".into()));
        }
        let asym = (&m - m.transpose()).amax();
        if asym > lit::<T>(1e-10) * (T::one() + m.amax()) {
            return Err(Error::Invalid("metric must be symmetric".into()));
        }
        if m.clone().cholesky().is_none() {
            return Err(Error::Invalid("metric must be positive-definite".into()));
        }
        Ok(InnerProduct { dim, weight: Some(m) })
    }

    /// Dimension of the space.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The weight matrix, if non-Euclidean.
    pub fn weight(&self) -> Option<&Matrix<T>> {
        self.weight.as_ref()
    }

    /// `⟨x,y⟩` in this metric.
    pub fn dot(&self, x: &Vector<T>, y: &Vector<T>) -> T {
        match &self.weight {
            Some(m) => (m * y).dot(x),
            None => x.dot(y),
        }
    }

    /// `‖x‖` in this metric.
    pub fn norm(&self, x: &Vector<T>) -> T {
        self.dot(x, x).max(T::zero()).sqrt()
    }

    /// Apply the weight (`Mx`, identity when Euclidean).
    pub fn apply(&self, x: &Vector<T>) -> Vector<T> {
        match &self.weight {
            Some(m) => m * x,
            None => x.clone(),
        }
    }

    /// Solve `Mz = x` (identity when Euclidean).
    pub fn solve(&self, x: &Vector<T>) -> Vector<T> {
        match &self.weight {
            Some(m) => m
                .clone()
                .cholesky()
                .expect("metric validated SPD")
                .solve(x),
            None => x.clone(),
        }
    }
}

/// Dense linear operator between metrized spaces.
#[derive(Debug, Clone)]
pub struct LinOp<T: Real> {
    mat: Matrix<T>,
    dom: InnerProduct<T>,
    cod: InnerProduct<T>,
}

impl<T: Real> LinOp<T> {
    /// Operator with Euclidean metrics on both sides.
    pub fn new(mat: Matrix<T>) -> Self {
        let (r, c) = (mat.nrows(), mat.ncols());
        LinOp { mat, dom: InnerProduct::euclidean(c), cod: InnerProduct::euclidean(r) }
    }

    /// Square operator on a single metrized space (domain = codomain).
    pub fn on_space(mat: Matrix<T>, space: InnerProduct<T>) -> Result<Self> {
        if mat.nrows() != space.dim() || mat.ncols() != space.dim() {
            return Err(Error::Dimension("operator does not match its space".into()));
        }
        LinOp { mat, dom: space.clone(), cod: space }.validated()
    }

    /// Operator with explicit domain/codomain metrics.
    pub fn between(mat: Matrix<T>, dom: InnerProduct<T>, cod: InnerProduct<T>) -> Result<Self> {
        LinOp { mat, dom, cod }.validated()
    }

    fn validated(self) -> Result<Self> {
        if self.mat.ncols() != self.dom.dim() || self.mat.nrows() != self.cod.dim() {
            return Err(Error::Dimension("operator/metric shape mismatch".into()));
        }
        Ok(self)
    }

    /// Zero operator on `R^n` (Euclidean).
    pub fn zeros(rows: usize, cols: usize) -> Self {
        LinOp::new(Matrix::zeros(rows, cols))
    }

    /// Identity on `R^n` (Euclidean).
    pub fn identity(n: usize) -> Self {
        LinOp::new(Matrix::identity(n, n))
    }

    /// Rows (codomain dimension).
    pub fn rows(&self) -> usize {
        self.mat.nrows()
    }

    /// Columns (domain dimension).
    pub fn cols(&self) -> usize {
        self.mat.ncols()
    }

    /// The raw matrix.
    pub fn matrix(&self) -> &Matrix<T> {
        &self.mat
    }

    /// Domain inner product.
    pub fn domain(&self) -> &InnerProduct<T> {
        &self.dom
    }

    /// Codomain inner product.
    pub fn codomain(&self) -> &InnerProduct<T> {
        &self.cod
    }

    /// Apply the operator.
    pub fn apply(&self, x: &Vector<T>) -> Vector<T> {
        &self.mat * x
    }

    /// Adjoint matrix in the declared metrics: `A* = M_dom⁻¹ Aᵀ M_cod`.
    pub fn adjoint_matrix(&self) -> Matrix<T> {
        let at = self.mat.transpose();
        let weighted = match self.cod.weight() {
            Some(mc) => at * mc,
            None => at,
        };
        match self.dom.weight() {
            Some(md) => md
                .clone()
                .cholesky()
                .expect("metric validated SPD")
                .solve(&weighted),
            None => weighted,
        }
    }

    /// The adjoint as an operator (codomain and domain swap).
    pub fn adjoint(&self) -> LinOp<T> {
        LinOp {
            mat: self.adjoint_matrix(),
            dom: self.cod.clone(),
            cod: self.dom.clone(),
        }
    }

    /// Apply the adjoint.
    pub fn apply_adjoint(&self, y: &Vector<T>) -> Vector<T> {
        self.adjoint_matrix() * y
    }

    /// Split a square operator into its metric-symmetric and metric-skew
    /// parts: `A = A_sym + A_skew` with `A_sym = (A + A*)/2`.
    pub fn decompose(&self) -> Result<(LinOp<T>, LinOp<T>)> {
        if self.rows() != self.cols() {
            return Err(Error::Dimension("decompose needs a square operator".into()));
        }
        let adj = self.adjoint_matrix();
        let half = lit::<T>(0.5);
        let sym = (&self.mat + &adj) * half;
        let skew = (&self.mat - &adj) * half;
        Ok((
            LinOp { mat: sym, dom: self.dom.clone(), cod: self.cod.clone() },
            LinOp { mat: skew, dom: self.dom.clone(), cod: self.cod.clone() },
        ))
    }

    /// Positivity / coercivity / skewness of a square operator in its metric.
    pub fn classify(&self) -> Result<Classification<T>> {
        if self.rows() != self.cols() {
            return Err(Error::Dimension("classify needs a square operator".into()));
        }
        let (sym, _) = self.decompose()?;
        // Smallest eigenvalue of the symmetric part in the metric: reduce the
        // generalized problem (M·A_sym) x = λ M x with M = LLᵀ to a standard
        // symmetric problem Lᵀ A_sym L⁻ᵀ.
        let lambda_min = match self.dom.weight() {
            Some(m) => {
                let chol = m.clone().cholesky().expect("metric validated SPD");
                let l = chol.l();
                let b = m * sym.matrix();
                // Solve L X = B, then L Y = Xᵀ, standard matrix is Y.
                let x = l.clone().lu().solve(&b).expect("triangular solve");
                let y = l.lu().solve(&x.transpose()).expect("triangular solve");
                let yy = (&y + y.transpose()) * lit::<T>(0.5);
                yy.symmetric_eigenvalues().min()
            }
            None => sym.matrix().clone().symmetric_eigenvalues().min(),
        };
        let adj = self.adjoint_matrix();
        let skew_residual = (&self.mat + adj).amax();
        Ok(Classification {
            positive: lambda_min >= lit(-1e-10),
            coercive_constant: lambda_min.max(T::zero()),
            skew: skew_residual <= lit::<T>(1e-12) * (T::one() + self.mat.amax()),
        })
    }
}

/// Result of [`LinOp::classify`].
#[derive(Debug, Clone, Copy)]
pub struct Classification<T: Real> {
    /// Smallest eigenvalue of the symmetric part is ≥ −1e−10.
    pub positive: bool,
    /// That smallest eigenvalue clamped at zero.
    pub coercive_constant: T,
    /// `‖A + A*‖_max` vanishes to roundoff.
    pub skew: bool,
}

/// A boundary triplet `(Λ, b₁, b₂)`: `Λ` is skew modulo the boundary, i.e.
/// `Λ* = −Λ + b₂*b₂ − b₁*b₁` in the declared metrics.
#[derive(Debug, Clone)]
pub struct BoundaryTriplet<T: Real> {
    /// The operator that is skew modulo the boundary.
    pub lambda: LinOp<T>,
    /// Boundary extraction into `H₁` (the "incoming" side).
    pub b1: LinOp<T>,
    /// Boundary extraction into `H₂` (the "outgoing" side).
    pub b2: LinOp<T>,
}

impl<T: Real> BoundaryTriplet<T> {
    /// Build and shape-check a triplet.
    pub fn new(lambda: LinOp<T>, b1: LinOp<T>, b2: LinOp<T>) -> Result<Self> {
        let n = lambda.cols();
        if lambda.rows() != n {
            return Err(Error::Dimension("triplet operator must be square".into()));
        }
        if b1.cols() != n || b2.cols() != n {
            return Err(Error::Dimension("boundary maps must act on the same space".into()));
        }
        Ok(BoundaryTriplet { lambda, b1, b2 })
    }

    /// Max over sampled pairs of
    /// `|⟨Λx,y⟩ + ⟨Λy,x⟩ − ⟨b₂x,b₂y⟩ + ⟨b₁x,b₁y⟩|`,
    /// plus the exact operator-norm residual `‖Λ + Λ* − b₂*b₂ + b₁*b₁‖_max`.
    pub fn residual<R: Rng>(&self, samples: usize, rng: &mut R) -> T {
        let n = self.lambda.cols();
        let dom = self.lambda.domain();
        let mut worst = T::zero();
        for _ in 0..samples {
            let x = gaussian_vector::<T, _>(rng, n, T::one());
            let y = gaussian_vector::<T, _>(rng, n, T::one());
            let v = dom.dot(&self.lambda.apply(&x), &y)
                + dom.dot(&self.lambda.apply(&y), &x)
                - self.b2.apply(&x).dot(&self.b2.apply(&y))
                + self.b1.apply(&x).dot(&self.b1.apply(&y));
            worst = worst.max(v.abs());
        }
        worst.max(self.operator_residual())
    }

    /// `‖Λ + Λ* − b₂*b₂ + b₁*b₁‖_max` (adjoints in the metrics).
    pub fn operator_residual(&self) -> T {
        let m = self.lambda.matrix() + self.lambda.adjoint_matrix()
            - self.b2.adjoint_matrix() * self.b2.matrix()
            + self.b1.adjoint_matrix() * self.b1.matrix();
        m.amax()
    }
}

/// Free functions mirroring the operation names.
pub fn decompose<T: Real>(a: &LinOp<T>) -> Result<(LinOp<T>, LinOp<T>)> {
    a.decompose()
}

/// Classification as a free function.
pub fn classify<T: Real>(a: &LinOp<T>) -> Result<Classification<T>> {
    a.classify()
}

/// Triplet residual as a free function.
pub fn triplet_residual<T: Real, R: Rng>(
    t: &BoundaryTriplet<T>,
    samples: usize,
    rng: &mut R,
) -> T {
    t.residual(samples, rng)
}
