//! Fractal functions on the paired-halving layout.
//!
//! With `N` maps and `h = 2/N`, every domain `[(j−1)h, jh)` is shared by the
//! maps `u_{2j−1}`, `u_{2j}` which halve it onto its left and right half.
//! Choosing `λ_i` and `S_i` per pair gives random fractal functions,
//! interpolants of a target at the domain ends, and Hermite interpolants
//! that also match the target's slope there.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::local_ifs::LocalIFS1D;
use crate::rb::{
    assemble, solve_fixed_point, FixedPointReport, Grid, RBSpec, RbError, SampledFunction,
    SolveOptions,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InterpError {
    #[error("number of maps must be even and at least 2, got {0}")]
    OddMapCount(usize),
    #[error("scaling bound {0} must lie in [0,1)")]
    BadScalingBound(f64),
    #[error("expected {expected} scalings, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("scaling S_{index} = {value} violates |S| < {limit}")]
    ContractivityViolated {
        index: usize,
        value: f64,
        limit: f64,
    },
    #[error("Hermite conditions for domain {0} are singular")]
    SingularConditions(usize),
    #[error("need at least 3 step sizes, got {0}")]
    TooFewSteps(usize),
    #[error("errors vanish; the target is reproduced exactly")]
    DegenerateFit,
    #[error(transparent)]
    Rb(#[from] RbError),
}

pub type Target = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterpMode {
    /// Independent `S_{2j−1}` and `S_{2j}`.
    Endpoint,
    /// `S_{2j} = 1 − S_{2j−1}`, which makes the interpolant continuous at
    /// domain midpoints.
    EndpointContinuous,
}

/// Target, layout and scalings of an endpoint interpolation problem.
#[derive(Clone)]
pub struct InterpolationProblem {
    pub target: Target,
    pub n_domains: usize,
    pub s_odd: Vec<f64>,
    pub s_even: Vec<f64>,
    pub mode: InterpMode,
}

impl std::fmt::Debug for InterpolationProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("InterpolationProblem")
            .field("n_domains", &self.n_domains)
            .field("s_odd", &self.s_odd)
            .field("s_even", &self.s_even)
            .field("mode", &self.mode)
            .finish_non_exhaustive()
    }
}

fn check_even(n: usize) -> Result<(), InterpError> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(InterpError::OddMapCount(n));
    }
    Ok(())
}

impl InterpolationProblem {
    pub fn endpoint(
        target: Target,
        n_domains: usize,
        s_odd: Vec<f64>,
        s_even: Vec<f64>,
    ) -> Result<Self, InterpError> {
        check_even(n_domains)?;
        for v in [&s_odd, &s_even] {
            if v.len() != n_domains / 2 {
                return Err(InterpError::LengthMismatch {
                    expected: n_domains / 2,
                    got: v.len(),
                });
            }
        }
        Ok(Self {
            target,
            n_domains,
            s_odd,
            s_even,
            mode: InterpMode::Endpoint,
        })
    }

    pub fn continuous(
        target: Target,
        n_domains: usize,
        s_odd: Vec<f64>,
    ) -> Result<Self, InterpError> {
        let s_even = s_odd.iter().map(|s| 1.0 - s).collect();
        let mut p = Self::endpoint(target, n_domains, s_odd, s_even)?;
        p.mode = InterpMode::EndpointContinuous;
        Ok(p)
    }

    /// All scalings equal to `s`.
    pub fn uniform(target: Target, n_domains: usize, s: f64) -> Result<Self, InterpError> {
        check_even(n_domains)?;
        let half = n_domains / 2;
        Self::endpoint(target, n_domains, vec![s; half], vec![s; half])
    }

    /// Domain-boundary knots `jh`, `j = 0..=N/2`.
    pub fn knots(&self) -> Vec<f64> {
        domain_knots(self.n_domains)
    }

    /// `(1 − S_{2j} − S_{2j−1}) (f(jh) − f((j−1)h))` for every pair; zero
    /// exactly when the interpolant is continuous at the midpoint.
    pub fn continuity_defects(&self) -> Vec<f64> {
        let k = self.knots();
        (0..self.n_domains / 2)
            .map(|j| {
                (1.0 - self.s_even[j] - self.s_odd[j])
                    * ((self.target)(k[j + 1]) - (self.target)(k[j]))
            })
            .collect()
    }
}

fn domain_knots(n: usize) -> Vec<f64> {
    let half = n / 2;
    (0..=half)
        .map(|j| {
            if j == half {
                1.0
            } else {
                j as f64 / half as f64
            }
        })
        .collect()
}

/// Example-layout spec with constant `λ_i ~ U(−1,1)` and
/// `S_i ~ U(−s_bound, s_bound)`.
///
/// Values come from `ChaCha8Rng::seed_from_u64(seed)`: all `N` values of
/// `λ` are drawn first, then all `S`, each as `2u − 1` scaled from one
/// uniform `u ∈ [0,1)`.
pub fn build_random_spec(n: usize, seed: u64, s_bound: f64) -> Result<RBSpec, InterpError> {
    check_even(n)?;
    if !(0.0..1.0).contains(&s_bound) {
        return Err(InterpError::BadScalingBound(s_bound));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || 2.0 * rng.random::<f64>() - 1.0;
    let lambdas: Vec<f64> = (0..n).map(|_| draw()).collect();
    let scalings: Vec<f64> = (0..n).map(|_| s_bound * draw()).collect();
    let ifs = LocalIFS1D::paired_halving(n).map_err(|_| InterpError::OddMapCount(n))?;
    Ok(RBSpec::constant(ifs, &lambdas, &scalings)?)
}

/// Constant-coefficient spec whose fixed point matches the target at every
/// domain end: `λ_{2j−1} = (1−S_{2j−1}) f((j−1)h)`, `λ_{2j} = (1−S_{2j}) f(jh)`.
pub fn build_endpoint_interpolant(p: &InterpolationProblem) -> Result<RBSpec, InterpError> {
    check_even(p.n_domains)?;
    let knots = p.knots();
    let mut lambdas = Vec::with_capacity(p.n_domains);
    let mut scalings = Vec::with_capacity(p.n_domains);
    for j in 0..p.n_domains / 2 {
        let (s1, s2) = (p.s_odd[j], p.s_even[j]);
        for (index, value) in [(2 * j, s1), (2 * j + 1, s2)] {
            if !(value.abs() < 1.0) {
                return Err(InterpError::ContractivityViolated {
                    index: index + 1,
                    value,
                    limit: 1.0,
                });
            }
        }
        lambdas.push((1.0 - s1) * (p.target)(knots[j]));
        lambdas.push((1.0 - s2) * (p.target)(knots[j + 1]));
        scalings.push(s1);
        scalings.push(s2);
    }
    let ifs = LocalIFS1D::paired_halving(p.n_domains)
        .map_err(|_| InterpError::OddMapCount(p.n_domains))?;
    Ok(RBSpec::constant(ifs, &lambdas, &scalings)?)
}

/// Scaling used by [`build_hermite_interpolant`].
pub const HERMITE_SCALING: f64 = 0.25;

/// Hermite interpolant with all `S_i = 0.25`.
pub fn build_hermite_interpolant(
    target: &dyn Fn(f64) -> f64,
    derivative: &dyn Fn(f64) -> f64,
    n_domains: usize,
) -> Result<RBSpec, InterpError> {
    build_hermite_with_scaling(target, derivative, n_domains, HERMITE_SCALING)
}

/// Affine `λ_i = α_i + β_i x` with constant `S_i = s` so that the fixed point
/// matches the target's value and slope at both ends of every domain.
///
/// At the left end `a` the map `u_{2j−1}` fixes `a`, so `f(a) = λ(a) + s f(a)`
/// and, differentiating `f(u(x)) = λ(x) + s f(x)`, `f′(a)/2 = β + s f′(a)`.
/// The right end `b` is handled by `u_{2j}` in the same way. A one-sided
/// derivative exists at the fixed points only when `|s| < 1/2`.
pub fn build_hermite_with_scaling(
    target: &dyn Fn(f64) -> f64,
    derivative: &dyn Fn(f64) -> f64,
    n_domains: usize,
    s: f64,
) -> Result<RBSpec, InterpError> {
    check_even(n_domains)?;
    if !(s.abs() < 0.5) {
        return Err(InterpError::ContractivityViolated {
            index: 1,
            value: s,
            limit: 0.5,
        });
    }
    let knots = domain_knots(n_domains);
    let mut lambdas = Vec::with_capacity(n_domains);
    for j in 0..n_domains / 2 {
        let (a, b) = (knots[j], knots[j + 1]);
        // unknowns (α_1, β_1, α_2, β_2)
        #[rustfmt::skip]
        let m = DMatrix::from_row_slice(4, 4, &[
            1.0, a,   0.0, 0.0,
            0.0, 1.0, 0.0, 0.0,
            0.0, 0.0, 1.0, b,
            0.0, 0.0, 0.0, 1.0,
        ]);
        let rhs = DVector::from_column_slice(&[
            (1.0 - s) * target(a),
            (0.5 - s) * derivative(a),
            (1.0 - s) * target(b),
            (0.5 - s) * derivative(b),
        ]);
        let sol = m
            .lu()
            .solve(&rhs)
            .filter(|x| x.iter().all(|v| v.is_finite()))
            .ok_or(InterpError::SingularConditions(j))?;
        lambdas.push(SampledFunction::Affine {
            alpha: sol[0],
            beta: sol[1],
        });
        lambdas.push(SampledFunction::Affine {
            alpha: sol[2],
            beta: sol[3],
        });
    }
    let ifs =
        LocalIFS1D::paired_halving(n_domains).map_err(|_| InterpError::OddMapCount(n_domains))?;
    let scalings = vec![SampledFunction::Constant { c: s }; n_domains];
    Ok(RBSpec::new(ifs, lambdas, scalings)?)
}

/// Fixed point of a spec on the uniform grid with `n_g` points, iterated
/// from zero.
pub fn solve_on_uniform(
    spec: &RBSpec,
    n_g: usize,
    opts: &SolveOptions,
) -> Result<(Grid, FixedPointReport), InterpError> {
    let grid = Grid::uniform(n_g);
    let rb = assemble(spec, &grid)?;
    let report = solve_fixed_point(&rb, &vec![0.0; n_g], opts)?;
    Ok((grid, report))
}

/// Error grid size relative to the number of maps.
pub const ERROR_GRID_FACTOR: usize = 16;

/// Max error of a spec's fixed point against a target on the uniform grid
/// with `16·N` points.
pub fn max_error(spec: &RBSpec, target: &dyn Fn(f64) -> f64) -> Result<f64, InterpError> {
    let n_g = ERROR_GRID_FACTOR * spec.ifs().n_maps();
    let (grid, rep) = solve_on_uniform(spec, n_g, &SolveOptions::default())?;
    Ok(grid
        .points()
        .iter()
        .zip(&rep.values)
        .map(|(&x, &f)| (f - target(x)).abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderFit {
    pub order: f64,
    pub h: Vec<f64>,
    pub errors: Vec<f64>,
}

/// Errors at or below this multiple of the target's size count as exact
/// reproduction; the default solver tolerance is `1e-12`.
const DEGENERATE_ERROR: f64 = 1e-10;

/// Least-squares slope of `log(max error)` against `log h`.
///
/// `builder(h)` must return a spec on the layout with domain width `h`, that
/// is with `2/h` maps.
pub fn estimate_order(
    builder: &(dyn Fn(f64) -> Result<RBSpec, InterpError> + Sync),
    target: &(dyn Fn(f64) -> f64 + Sync),
    h_list: &[f64],
) -> Result<OrderFit, InterpError> {
    if h_list.len() < 3 {
        return Err(InterpError::TooFewSteps(h_list.len()));
    }
    let errors = h_list
        .par_iter()
        .map(|&h| max_error(&builder(h)?, target))
        .collect::<Result<Vec<f64>, InterpError>>()?;
    let scale = (0..=64)
        .map(|k| target(k as f64 / 64.0).abs())
        .fold(1.0, f64::max);
    if errors.iter().any(|&e| e <= DEGENERATE_ERROR * scale) {
        return Err(InterpError::DegenerateFit);
    }
    let xs: Vec<f64> = h_list.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(OrderFit {
        order: sxy / sxx,
        h: h_list.to_vec(),
        errors,
    })
}

/// Number of maps for domain width `h`.
pub fn maps_for_width(h: f64) -> usize {
    (2.0 / h).round() as usize
}

/// Affine maps `ψ ∘ u_i = b_i + A_i ψ` found by least squares.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfReferentialMaps {
    pub a: Vec<DMatrix<f64>>,
    pub b: Vec<DVector<f64>>,
    pub residual: f64,
}

const PROBES_PER_DOMAIN: usize = 64;
const BASIS_RESIDUAL_TOL: f64 = 1e-8;

/// Looks for `A_i`, `b_i` with `ψ(u_i(x)) = b_i + A_i ψ(x)` on each domain.
///
/// A purely linear relation (`b_i = 0`) is tried first, so bases containing
/// the constant function get a unique answer; the affine fit is the
/// fallback. Returns `None` when the residual exceeds `1e-8`.
pub fn check_self_referential_basis(
    psi: &[&dyn Fn(f64) -> f64],
    ifs: &LocalIFS1D,
) -> Option<SelfReferentialMaps> {
    let d = psi.len();
    if d == 0 {
        return None;
    }
    let mut out = SelfReferentialMaps {
        a: Vec::new(),
        b: Vec::new(),
        residual: 0.0,
    };
    for (dom, map) in ifs.domains().iter().zip(ifs.maps()) {
        let probes: Vec<f64> = (0..PROBES_PER_DOMAIN)
            .map(|k| dom.lo + dom.width() * (k as f64 + 0.5) / PROBES_PER_DOMAIN as f64)
            .collect();
        let rhs = DMatrix::from_fn(probes.len(), d, |r, c| psi[c](map.apply(probes[r])));
        let scale = rhs.iter().fold(1.0, |m: f64, v| m.max(v.abs()));
        let fit = |with_offset: bool| {
            let off = usize::from(with_offset);
            let design = DMatrix::from_fn(probes.len(), d + off, |r, c| {
                if with_offset && c == 0 {
                    1.0
                } else {
                    psi[c - off](probes[r])
                }
            });
            let coef = design.clone().svd(true, true).solve(&rhs, 1e-13).ok()?;
            let resid = (&design * &coef - &rhs).amax() / scale;
            Some((coef, resid))
        };
        let (coef, resid, offset) = match fit(false) {
            Some((c, r)) if r <= BASIS_RESIDUAL_TOL => (c, r, false),
            _ => {
                let (c, r) = fit(true)?;
                (c, r, true)
            }
        };
        if resid > BASIS_RESIDUAL_TOL {
            log::debug!("basis is not self-referential: residual {resid:e}");
            return None;
        }
        // coef rows are design columns; transpose to A_i acting on ψ
        let (b, a) = if offset {
            (coef.row(0).transpose(), coef.rows(1, d).transpose())
        } else {
            (DVector::zeros(d), coef.transpose())
        };
        out.a.push(a);
        out.b.push(b);
        out.residual = out.residual.max(resid);
    }
    Some(out)
}
