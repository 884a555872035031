use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::grid::sup_distance;
use super::{DiscreteRB, RBSpec, RbError};

/// Largest grid handled by [`solve_direct`].
pub const DIRECT_SOLVE_LIMIT: usize = 4096;

/// Exponent of the contractivity condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Norm {
    P(f64),
    Infinity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContractivityReport {
    pub value: f64,
    pub contractive: bool,
}

/// `(Σ a_i ‖S_i‖^p_∞)^{1/p}` or `max_i ‖S_i‖_∞`, compared with 1.
pub fn check_contractivity(spec: &RBSpec, p: Norm) -> Result<ContractivityReport, RbError> {
    let sups = spec.scaling_sups();
    let value = match p {
        Norm::Infinity => sups.iter().fold(0.0, |m: f64, s| m.max(*s)),
        Norm::P(p) if p.is_nan() || p < 1.0 => return Err(RbError::InvalidP(p)),
        Norm::P(p) => spec
            .ifs()
            .lipschitz_constants()
            .iter()
            .zip(&sups)
            .map(|(a, s)| a * s.powf(p))
            .sum::<f64>()
            .powf(1.0 / p),
    };
    Ok(ContractivityReport {
        value,
        contractive: value < 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Skip the `max ‖S_i‖_∞ < 1` gate.
    pub allow_noncontractive: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 10_000,
            allow_noncontractive: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointReport {
    pub values: Vec<f64>,
    /// Number of operator applications that produced `values` from the start.
    pub iters: usize,
    /// `‖Φ^g values − values‖_∞`.
    pub residual: f64,
}

/// Picard iteration `f_{k+1} = Φ^g f_k` until the sup-norm residual of the
/// current iterate is at most `tol`.
///
/// Operators with `max ‖S_i‖_∞ ≥ 1` are refused unless explicitly allowed.
/// On `MaxIterExceeded` the error carries the iterate with the smallest
/// residual seen.
pub fn solve_fixed_point(
    rb: &DiscreteRB,
    start: &[f64],
    opts: &SolveOptions,
) -> Result<FixedPointReport, RbError> {
    if !(opts.tol > 0.0) {
        return Err(RbError::BadTolerance);
    }
    let s = rb.spec_contraction().max(rb.grid_contraction());
    if s >= 1.0 {
        if !opts.allow_noncontractive {
            return Err(RbError::NotContractive(s));
        }
        log::warn!("iterating a non-contractive operator (max |S| = {s})");
    }
    let mut cur = start.to_vec();
    let mut next = vec![0.0; rb.len()];
    let mut best: Option<FixedPointReport> = None;
    for k in 0..=opts.max_iter {
        rb.apply_into(&cur, &mut next)?;
        let residual = sup_distance(&cur, &next);
        if residual <= opts.tol {
            log::debug!("fixed point after {k} iterations, residual {residual:e}");
            return Ok(FixedPointReport {
                values: cur,
                iters: k,
                residual,
            });
        }
        if best.as_ref().is_none_or(|b| residual < b.residual) && residual.is_finite() {
            best = Some(FixedPointReport {
                values: cur.clone(),
                iters: k,
                residual,
            });
        }
        std::mem::swap(&mut cur, &mut next);
    }
    let best = best.unwrap_or(FixedPointReport {
        values: cur,
        iters: opts.max_iter,
        residual: f64::INFINITY,
    });
    Err(RbError::MaxIterExceeded(Box::new(best)))
}

/// Successive iterates `Φ^g f_0, (Φ^g)² f_0, …`.
pub fn iterates<'a>(rb: &'a DiscreteRB, start: &[f64]) -> impl Iterator<Item = Vec<f64>> + 'a {
    let mut cur = start.to_vec();
    std::iter::from_fn(move || {
        let next = rb.apply(&cur).ok()?;
        cur.clone_from(&next);
        Some(next)
    })
}

/// Solves `(I − M) f = λ^g` by dense LU.
pub fn solve_direct(rb: &DiscreteRB) -> Result<Vec<f64>, RbError> {
    let n = rb.len();
    if n > DIRECT_SOLVE_LIMIT {
        return Err(RbError::TooLargeForDirect {
            limit: DIRECT_SOLVE_LIMIT,
            got: n,
        });
    }
    let a = DMatrix::identity(n, n) - rb.to_dense();
    let b = DVector::from_column_slice(rb.lambda_vec());
    let x = a.lu().solve(&b).ok_or(RbError::Singular)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(RbError::Singular);
    }
    Ok(x.iter().copied().collect())
}

impl DiscreteRB {
    /// Successive iterates of `Φ^g` from `start`.
    pub fn iterates<'a>(&'a self, start: &[f64]) -> impl Iterator<Item = Vec<f64>> + 'a {
        iterates(self, start)
    }
}
