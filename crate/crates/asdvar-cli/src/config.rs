//! JSON configuration schema: tagged unions for functions, sets, operators,
//! and Lagrangian trees, plus the solve configs each subcommand reads.
//! Unknown keys are rejected everywhere so a typo cannot silently change a
//! run.

use anyhow::{bail, Context, Result};
use asdvar::lagrangian::ShiftSide;
use asdvar::num::NumericPolicy;
use asdvar::{ConvexFn, ConvexSet, Lagrangian, LinOp, Matrix, Vector};
use serde::{Deserialize, Serialize};

/// Dense matrix as row-major nested arrays.
pub fn matrix(rows: &[Vec<f64>]) -> Result<Matrix> {
    if rows.is_empty() {
        bail!("matrix needs at least one row");
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        bail!("matrix rows must have equal length");
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(Matrix::from_row_slice(rows.len(), cols, &flat))
}

pub fn vector(xs: &[f64]) -> Vector {
    Vector::from_row_slice(xs)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SetSpec {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Halfspace { a: Vec<f64>, c: f64 },
    Whole { dim: usize },
}

impl SetSpec {
    pub fn build(&self) -> Result<ConvexSet> {
        Ok(match self {
            SetSpec::Box { lo, hi } => ConvexSet::boxed(vector(lo), vector(hi))?,
            SetSpec::Ball { center, radius } => ConvexSet::ball(vector(center), *radius)?,
            SetSpec::Halfspace { a, c } => ConvexSet::halfspace(vector(a), *c)?,
            SetSpec::Whole { dim } => ConvexSet::whole(*dim),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FnSpec {
    Quadratic { q: Vec<Vec<f64>>, b: Vec<f64> },
    Power { dim: usize, p: f64 },
    Abs { dim: usize },
    Indicator { set: SetSpec },
    Support { set: SetSpec },
    Tilt { f: Vec<f64>, base: Box<FnSpec> },
    Scaled { alpha: f64, base: Box<FnSpec> },
    Sum { terms: Vec<FnSpec> },
}

impl FnSpec {
    pub fn build(&self) -> Result<ConvexFn> {
        Ok(match self {
            FnSpec::Quadratic { q, b } => ConvexFn::quadratic(matrix(q)?, vector(b))?,
            FnSpec::Power { dim, p } => ConvexFn::power(*dim, *p)?,
            FnSpec::Abs { dim } => ConvexFn::abs(*dim),
            FnSpec::Indicator { set } => ConvexFn::indicator(set.build()?),
            FnSpec::Support { set } => ConvexFn::support(set.build()?),
            FnSpec::Tilt { f, base } => base.build()?.tilt(vector(f))?,
            FnSpec::Scaled { alpha, base } => base.build()?.scaled(*alpha)?,
            FnSpec::Sum { terms } => {
                ConvexFn::sum(terms.iter().map(|t| t.build()).collect::<Result<Vec<_>>>()?)?
            }
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LagSpec {
    Basic { phi: FnSpec },
    Pair { f: FnSpec, g: FnSpec },
    Shift { base: Box<LagSpec>, lam: Vec<Vec<f64>>, side: String },
    Scaled { base: Box<LagSpec>, factor: f64 },
    Sum { l: Box<LagSpec>, m: Box<LagSpec> },
    Convolution { l: Box<LagSpec>, m: Box<LagSpec> },
    FreeProduct { parts: Vec<LagSpec> },
    Twisted { l: Box<LagSpec>, m: Box<LagSpec>, a: Vec<Vec<f64>> },
    Antidual { phi: FnSpec, a: Vec<Vec<f64>> },
    Yosida { base: Box<LagSpec>, lam: f64 },
}

impl LagSpec {
    pub fn build(&self) -> Result<Lagrangian> {
        Ok(match self {
            LagSpec::Basic { phi } => Lagrangian::basic(phi.build()?),
            LagSpec::Pair { f, g } => Lagrangian::pair(f.build()?, g.build()?)?,
            LagSpec::Shift { base, lam, side } => {
                let side = match side.as_str() {
                    "left" => ShiftSide::Left,
                    "right" => ShiftSide::Right,
                    other => bail!("shift side must be \"left\" or \"right\", got {other:?}"),
                };
                base.build()?.shift(LinOp::new(matrix(lam)?), side)?
            }
            LagSpec::Scaled { base, factor } => base.build()?.scaled(*factor)?,
            LagSpec::Sum { l, m } => Lagrangian::sum(l.build()?, m.build()?)?,
            LagSpec::Convolution { l, m } => Lagrangian::convolution(l.build()?, m.build()?)?,
            LagSpec::FreeProduct { parts } => Lagrangian::free_product(
                parts.iter().map(|p| p.build()).collect::<Result<Vec<_>>>()?,
            )?,
            LagSpec::Twisted { l, m, a } => {
                Lagrangian::twisted(l.build()?, m.build()?, LinOp::new(matrix(a)?))?
            }
            LagSpec::Antidual { phi, a } => {
                Lagrangian::antidual(phi.build()?, LinOp::new(matrix(a)?))?
            }
            LagSpec::Yosida { base, lam } => base.build()?.yosida_regularize(*lam)?,
        })
    }
}

/// Optional numeric-policy overrides carried by every solve config.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolicySpec {
    pub abs_tol: Option<f64>,
    pub rel_tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub tol_gap: Option<f64>,
}

impl PolicySpec {
    pub fn apply(&self, policy: &mut NumericPolicy<f64>) {
        if let Some(t) = self.abs_tol {
            policy.abs_tol = t;
        }
        if let Some(t) = self.rel_tol {
            policy.rel_tol = t;
        }
        if let Some(n) = self.max_iter {
            policy.max_iter = n;
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConjugateConfig {
    pub function: FnSpec,
    pub points: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsdCheckConfig {
    pub lagrangian: LagSpec,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StationaryConfig {
    /// `Ax = y` with coercive nonsymmetric `A`.
    Linear {
        a: Vec<Vec<f64>>,
        y: Vec<f64>,
        #[serde(default)]
        policy: PolicySpec,
    },
    /// `−Ax + f ∈ ∂φ(x)`.
    Inclusion {
        a: Vec<Vec<f64>>,
        phi: FnSpec,
        f: Vec<f64>,
        #[serde(default)]
        policy: PolicySpec,
    },
    /// Variational inequality `⟨Ax − f, x − z⟩ ≤ 0 ∀ z ∈ K`.
    Vi {
        a: Vec<Vec<f64>>,
        set: SetSpec,
        f: Vec<f64>,
        #[serde(default)]
        policy: PolicySpec,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub phi: FnSpec,
    pub a: Vec<Vec<f64>>,
    pub f: Vec<f64>,
    pub u0: Vec<f64>,
    pub t_final: f64,
    pub steps: usize,
    #[serde(default)]
    pub omega: f64,
    #[serde(default)]
    pub policy: PolicySpec,
}

/// Read and schema-validate a JSON config file.
pub fn load<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
}

/// FNV-1a hash of the raw config bytes, echoed into every report so outputs
/// are traceable to their inputs.
pub fn config_hash(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}
