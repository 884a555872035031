//! The discrete Read–Bajactarević operator.
//!
//! An [`RBSpec`] attaches to every map `u_i` of a [`LocalIFS1D`] a pair of
//! functions `(λ_i, S_i)` on `X_i`, defining
//!
//! ```text
//! (Φf)(x) = λ_i(u_i⁻¹(x)) + S_i(u_i⁻¹(x)) · f(u_i⁻¹(x)),   x ∈ u_i(X_i).
//! ```
//!
//! On an admissible [`Grid`] this restricts exactly to the affine map
//! `f ↦ λ^g + U S E f` held by [`DiscreteRB`].

mod discrete;
mod grid;
mod sampled;
mod solve;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::local_ifs::LocalIFS1D;

pub use discrete::{assemble, detect_local_refinement, BlockPartition, DiscreteRB, MapBlock};
pub use grid::{
    make_admissible_grid, make_admissible_grid_with_budget, sup_distance, Grid, GridFunction,
    GRID_TOL,
};
pub use sampled::SampledFunction;
pub use solve::{
    check_contractivity, iterates, solve_direct, solve_fixed_point, ContractivityReport,
    FixedPointReport, Norm, SolveOptions, DIRECT_SOLVE_LIMIT,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RbError {
    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid sampled function: {0}")]
    InvalidFunction(String),
    #[error("table for map {0} does not cover its domain")]
    TableDoesNotCoverDomain(usize),
    #[error("grid is not admissible: preimage of grid point {0} is missing")]
    GridNotAdmissible(f64),
    #[error("no admissible grid found within {0} closure rounds")]
    NotAdmissible(usize),
    #[error("norm exponent p = {0} must be at least 1")]
    InvalidP(f64),
    #[error("operator is not contractive (max |S| = {0})")]
    NotContractive(f64),
    #[error("fixed-point iteration stopped after {} iterations with residual {}", .0.iters, .0.residual)]
    MaxIterExceeded(Box<FixedPointReport>),
    #[error("direct solve limited to {limit} grid points, got {got}")]
    TooLargeForDirect { limit: usize, got: usize },
    #[error("I - M is singular")]
    Singular,
    #[error("tolerance must be positive")]
    BadTolerance,
}

/// `(λ_i, S_i)` data over a local IFS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RBSpecDoc", into = "RBSpecDoc")]
pub struct RBSpec {
    ifs: LocalIFS1D,
    lambdas: Vec<SampledFunction>,
    scalings: Vec<SampledFunction>,
}

#[derive(Serialize, Deserialize)]
struct RBSpecDoc {
    ifs: LocalIFS1D,
    lambdas: Vec<SampledFunction>,
    scalings: Vec<SampledFunction>,
}

impl TryFrom<RBSpecDoc> for RBSpec {
    type Error = RbError;
    fn try_from(d: RBSpecDoc) -> Result<Self, RbError> {
        RBSpec::new(d.ifs, d.lambdas, d.scalings)
    }
}

impl From<RBSpec> for RBSpecDoc {
    fn from(s: RBSpec) -> Self {
        RBSpecDoc {
            ifs: s.ifs,
            lambdas: s.lambdas,
            scalings: s.scalings,
        }
    }
}

impl RBSpec {
    pub fn new(
        ifs: LocalIFS1D,
        lambdas: Vec<SampledFunction>,
        scalings: Vec<SampledFunction>,
    ) -> Result<Self, RbError> {
        let n = ifs.n_maps();
        for len in [lambdas.len(), scalings.len()] {
            if len != n {
                return Err(RbError::LengthMismatch {
                    expected: n,
                    got: len,
                });
            }
        }
        for (i, dom) in ifs.domains().iter().enumerate() {
            for f in [&lambdas[i], &scalings[i]] {
                f.validate()?;
                if !f.covers(dom) {
                    return Err(RbError::TableDoesNotCoverDomain(i));
                }
            }
        }
        Ok(Self {
            ifs,
            lambdas,
            scalings,
        })
    }

    /// Constant `λ_i` and `S_i`.
    pub fn constant(ifs: LocalIFS1D, lambdas: &[f64], scalings: &[f64]) -> Result<Self, RbError> {
        let wrap = |v: &[f64]| v.iter().map(|&c| SampledFunction::Constant { c }).collect();
        Self::new(ifs, wrap(lambdas), wrap(scalings))
    }

    pub fn ifs(&self) -> &LocalIFS1D {
        &self.ifs
    }

    pub fn lambdas(&self) -> &[SampledFunction] {
        &self.lambdas
    }

    pub fn scalings(&self) -> &[SampledFunction] {
        &self.scalings
    }

    /// Same IFS and scalings with different `λ_i`.
    pub fn with_lambdas(&self, lambdas: Vec<SampledFunction>) -> Result<Self, RbError> {
        Self::new(self.ifs.clone(), lambdas, self.scalings.clone())
    }

    /// `‖S_i‖_∞` over each domain.
    pub fn scaling_sups(&self) -> Vec<f64> {
        self.scalings
            .iter()
            .zip(self.ifs.domains())
            .map(|(s, d)| s.sup_abs(d))
            .collect()
    }

    /// Pointwise evaluation of `(Φf)(x)` for a function given as a closure.
    pub fn apply_pointwise(&self, f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let i = self
            .ifs
            .image_index(x, GRID_TOL)
            .expect("point outside [0,1]");
        let y = self.ifs.maps()[i].apply_inverse(x);
        self.lambdas[i].eval(y) + self.scalings[i].eval(y) * f(y)
    }
}
