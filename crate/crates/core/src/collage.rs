//! Collage fitting of fractal functions against quadratic energy forms.
//!
//! The ambient space is grid functions with the weighted norm
//! `‖v‖² = Σ w_k v_k²`. An energy `Ψ(v) = ½ vᵀKv − lᵀv` with SPD `K` has
//! norm-equivalence constants `c1 ≤ ‖v‖_E / ‖v‖ ≤ c2`.
//!
//! A [`ParametricRB`] is the linear family `F(u; α) = M u + B α`, where `M`
//! is the discrete RB operator with `λ = 0` and column `j` of `B` is `λ^g`
//! for the `j`-th parameter unit vector. The collage operator
//! `G(u) = argmin_{v ∈ M u + range B} Ψ(v)` contracts with
//! `γ = c·c2/c1` whenever that is below one, and its fixed point is the
//! collage fit.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::local_ifs::{LocalIFS1D, LocalIfsError};
use crate::rb::{assemble, solve_direct, DiscreteRB, Grid, RBSpec, RbError, SampledFunction};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CollageError {
    #[error("gram matrix is not symmetric (defect {0:e})")]
    NotSymmetric(f64),
    #[error("gram matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("weights must be positive")]
    BadWeights,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("normal equations are singular; the parameter basis is degenerate")]
    SingularNormalEquations,
    #[error("gamma = c·c2/c1 = {gamma} is not below 1 (c = {c}, c1 = {c1}, c2 = {c2})")]
    GammaNotLessThanOne {
        gamma: f64,
        c: f64,
        c1: f64,
        c2: f64,
    },
    #[error("collage iteration stopped after {iters} steps with residual {residual:e}")]
    MaxIterExceeded { iters: usize, residual: f64 },
    #[error("collage fit is {distance:e} away from the fractal function of its parameters")]
    NotInFamily { distance: f64 },
    #[error("need at least 10 trials, got {0}")]
    TooFewTrials(usize),
    #[error(transparent)]
    LocalIfs(#[from] LocalIfsError),
    #[error(transparent)]
    Rb(#[from] RbError),
}

/// `Ψ(v) = ½ vᵀKv − lᵀv` on grid functions with norm weights `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    gram: DMatrix<f64>,
    load: DVector<f64>,
    weights: DVector<f64>,
    c1: f64,
    c2: f64,
}

impl QuadraticForm {
    pub fn new(
        gram: DMatrix<f64>,
        load: DVector<f64>,
        weights: DVector<f64>,
    ) -> Result<Self, CollageError> {
        let n = gram.nrows();
        for got in [gram.ncols(), load.len(), weights.len()] {
            if got != n {
                return Err(CollageError::DimensionMismatch { expected: n, got });
            }
        }
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(CollageError::BadWeights);
        }
        let scale = gram.amax().max(f64::MIN_POSITIVE);
        let defect = (&gram - gram.transpose()).amax() / scale;
        if defect > 1e-12 {
            return Err(CollageError::NotSymmetric(defect));
        }
        if gram.clone().cholesky().is_none() {
            return Err(CollageError::NotPositiveDefinite);
        }
        let (lo, hi) = generalized_extremes(&gram, &weights);
        if !(lo > 0.0) {
            return Err(CollageError::NotPositiveDefinite);
        }
        Ok(Self {
            gram,
            load,
            weights,
            c1: lo.sqrt(),
            c2: hi.sqrt(),
        })
    }

    /// Least squares against `target`: `K = diag(w)`, `l = w ∘ target`.
    pub fn l2_fit(target: &[f64], weights: DVector<f64>) -> Result<Self, CollageError> {
        let load = DVector::from_iterator(
            target.len(),
            target.iter().zip(weights.iter()).map(|(t, w)| t * w),
        );
        Self::new(DMatrix::from_diagonal(&weights), load, weights)
    }

    /// Second-difference stiffness `(1/h) tridiag(−1, 2, −1)` on `n` nodes with
    /// zero values beyond both ends, mass weights `h = 1/n`, and the load
    /// `K û` of a manufactured solution.
    pub fn poisson(u_hat: &[f64]) -> Result<Self, CollageError> {
        let n = u_hat.len();
        let h = 1.0 / n as f64;
        let gram = DMatrix::from_fn(n, n, |r, c| {
            if r == c {
                2.0 / h
            } else if r.abs_diff(c) == 1 {
                -1.0 / h
            } else {
                0.0
            }
        });
        let load = &gram * DVector::from_column_slice(u_hat);
        Self::new(gram, load, DVector::from_element(n, h))
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn load(&self) -> &DVector<f64> {
        &self.load
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.load.len()
    }

    /// Lower norm-equivalence constant `c1`.
    pub fn c1(&self) -> f64 {
        self.c1
    }

    /// Upper norm-equivalence constant `c2`.
    pub fn c2(&self) -> f64 {
        self.c2
    }

    pub fn psi(&self, v: &DVector<f64>) -> f64 {
        0.5 * v.dot(&(&self.gram * v)) - self.load.dot(v)
    }

    /// `‖v‖_E = √(vᵀKv)`.
    pub fn energy_norm(&self, v: &DVector<f64>) -> f64 {
        v.dot(&(&self.gram * v)).max(0.0).sqrt()
    }

    /// `‖v‖ = √(Σ w_k v_k²)`.
    pub fn norm(&self, v: &DVector<f64>) -> f64 {
        v.iter()
            .zip(self.weights.iter())
            .map(|(x, w)| w * x * x)
            .sum::<f64>()
            .sqrt()
    }

    /// Global minimiser `K⁻¹ l`.
    pub fn minimizer(&self) -> DVector<f64> {
        self.gram
            .clone()
            .cholesky()
            .expect("checked at construction")
            .solve(&self.load)
    }
}

/// Extreme eigenvalues of `W^{-1/2} K W^{-1/2}`.
fn generalized_extremes(gram: &DMatrix<f64>, w: &DVector<f64>) -> (f64, f64) {
    let n = gram.nrows();
    let is_diagonal = (0..n).all(|r| (0..n).all(|c| r == c || gram[(r, c)] == 0.0));
    if is_diagonal {
        return (0..n)
            .map(|k| gram[(k, k)] / w[k])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
    }
    let scaled = DMatrix::from_fn(n, n, |r, c| gram[(r, c)] / (w[r] * w[c]).sqrt());
    let eig = SymmetricEigen::new(scaled).eigenvalues;
    (eig.min(), eig.max())
}

/// The linear family `F(u; α) = M u + B α`.
#[derive(Debug, Clone)]
pub struct ParametricRB {
    base: DiscreteRB,
    basis: DMatrix<f64>,
    c: f64,
}

impl ParametricRB {
    /// `base` must have `λ^g = 0`; `c` is the exact weighted operator norm of
    /// its `M`.
    pub fn new(
        base: DiscreteRB,
        basis: DMatrix<f64>,
        weights: &DVector<f64>,
    ) -> Result<Self, CollageError> {
        let n = base.len();
        for got in [basis.nrows(), weights.len()] {
            if got != n {
                return Err(CollageError::DimensionMismatch { expected: n, got });
            }
        }
        // MᵀWM is diagonal because every row of M has one entry
        let mut col = vec![0.0; n];
        for (r, (&src, &s)) in base.source().iter().zip(base.row_scale()).enumerate() {
            col[src] += weights[r] * s * s;
        }
        let c = col
            .iter()
            .zip(weights.iter())
            .map(|(v, w)| v / w)
            .fold(0.0, f64::max)
            .sqrt();
        let base = base.with_lambda_vec(vec![0.0; n])?;
        Ok(Self { base, basis, c })
    }

    /// Family whose scalings come from `spec` and whose parameter `j` sets
    /// the `λ_i` to `lambda_basis[j]`.
    pub fn from_lambda_basis(
        spec: &RBSpec,
        lambda_basis: &[Vec<SampledFunction>],
        grid: &Grid,
        weights: &DVector<f64>,
    ) -> Result<Self, CollageError> {
        let n_maps = spec.ifs().n_maps();
        let zero = vec![SampledFunction::Constant { c: 0.0 }; n_maps];
        let base = assemble(&spec.with_lambdas(zero)?, grid)?;
        let mut basis = DMatrix::zeros(grid.len(), lambda_basis.len());
        for (j, lambdas) in lambda_basis.iter().enumerate() {
            let rb = assemble(&spec.with_lambdas(lambdas.clone())?, grid)?;
            basis.set_column(j, &DVector::from_column_slice(rb.lambda_vec()));
        }
        Self::new(base, basis, weights)
    }

    pub fn base(&self) -> &DiscreteRB {
        &self.base
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn n_params(&self) -> usize {
        self.basis.ncols()
    }

    /// Contraction constant of `F(·; 0)` in the weighted norm.
    pub fn c(&self) -> f64 {
        self.c
    }

    /// `F(u; 0) = M u`.
    pub fn apply_base(&self, u: &DVector<f64>) -> DVector<f64> {
        let v = self
            .base
            .apply_linear(u.as_slice())
            .expect("dimension checked");
        DVector::from_vec(v)
    }

    /// `F(u; α)`.
    pub fn apply(&self, u: &DVector<f64>, alpha: &DVector<f64>) -> DVector<f64> {
        self.apply_base(u) + &self.basis * alpha
    }

    /// Fixed point of `F(·; α)`.
    pub fn fractal_function(&self, alpha: &DVector<f64>) -> Result<DVector<f64>, CollageError> {
        let lam = &self.basis * alpha;
        let rb = self.base.with_lambda_vec(lam.iter().copied().collect())?;
        Ok(DVector::from_vec(solve_direct(&rb)?))
    }

    /// Columns spanning the space of fixed points `V_N`.
    pub fn fractal_basis(&self) -> Result<DMatrix<f64>, CollageError> {
        let mut out = DMatrix::zeros(self.base.len(), self.n_params());
        for j in 0..self.n_params() {
            let mut e = DVector::zeros(self.n_params());
            e[j] = 1.0;
            out.set_column(j, &self.fractal_function(&e)?);
        }
        Ok(out)
    }
}

fn check_dims(prb: &ParametricRB, form: &QuadraticForm) -> Result<(), CollageError> {
    if form.dim() != prb.base.len() {
        return Err(CollageError::DimensionMismatch {
            expected: prb.base.len(),
            got: form.dim(),
        });
    }
    Ok(())
}

/// `G(u) = M u + B α` with `(BᵀKB) α = Bᵀ(l − K M u)`.
pub fn g_operator(
    prb: &ParametricRB,
    form: &QuadraticForm,
    u: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>), CollageError> {
    check_dims(prb, form)?;
    let b = &prb.basis;
    let mu = prb.apply_base(u);
    let normal = b.transpose() * &form.gram * b;
    let rhs = b.transpose() * (&form.load - &form.gram * &mu);
    let alpha = normal
        .cholesky()
        .ok_or(CollageError::SingularNormalEquations)?
        .solve(&rhs);
    if alpha.iter().any(|v| !v.is_finite()) {
        return Err(CollageError::SingularNormalEquations);
    }
    let g = mu + b * &alpha;
    Ok((g, alpha))
}

/// `γ = c·c2/c1`.
pub fn gamma(prb: &ParametricRB, form: &QuadraticForm) -> f64 {
    prb.c * form.c2 / form.c1
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollageFit {
    pub u: DVector<f64>,
    pub alpha: DVector<f64>,
    pub iters: usize,
    /// `‖G(u) − u‖` at the last step.
    pub residual: f64,
    /// Distance from `u` to the fixed point of `F(·; alpha)`.
    pub membership: f64,
    /// Norms `‖u^{(k+1)} − u^{(k)}‖` of all steps.
    pub steps: Vec<f64>,
}

/// Iterates `u ← G(u)` from zero until `‖G(u) − u‖ ≤ tol`.
pub fn collage_fit(
    prb: &ParametricRB,
    form: &QuadraticForm,
    tol: f64,
    max_iter: usize,
) -> Result<CollageFit, CollageError> {
    check_dims(prb, form)?;
    let g = gamma(prb, form);
    if !(g < 1.0) {
        return Err(CollageError::GammaNotLessThanOne {
            gamma: g,
            c: prb.c,
            c1: form.c1,
            c2: form.c2,
        });
    }
    let mut u = DVector::zeros(form.dim());
    let mut steps = Vec::new();
    for k in 1..=max_iter {
        let (next, alpha) = g_operator(prb, form, &u)?;
        let residual = form.norm(&(&next - &u));
        steps.push(residual);
        u = next;
        if residual <= tol {
            let fixed = prb.fractal_function(&alpha)?;
            let membership = form.norm(&(&u - fixed));
            if membership > 10.0 * tol {
                return Err(CollageError::NotInFamily {
                    distance: membership,
                });
            }
            log::debug!("collage fit after {k} steps, residual {residual:e}");
            return Ok(CollageFit {
                u,
                alpha,
                iters: k,
                residual,
                membership,
                steps,
            });
        }
    }
    Err(CollageError::MaxIterExceeded {
        iters: max_iter,
        residual: steps.last().copied().unwrap_or(f64::INFINITY),
    })
}

/// Largest observed `‖G(u) − G(v)‖ / ‖u − v‖` over random pairs.
pub fn contraction_estimate(
    prb: &ParametricRB,
    form: &QuadraticForm,
    trials: usize,
    seed: u64,
) -> Result<f64, CollageError> {
    if trials < 10 {
        return Err(CollageError::TooFewTrials(trials));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = form.dim();
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let u = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let v = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let d = form.norm(&(&u - &v));
        if d == 0.0 {
            continue;
        }
        let (gu, _) = g_operator(prb, form, &u)?;
        let (gv, _) = g_operator(prb, form, &v)?;
        worst = worst.max(form.norm(&(gu - gv)) / d);
    }
    Ok(worst)
}

/// `(1/c + 1)/(1/γ − 1) · best_error`, and whether the collage error is
/// within it.
pub fn quasi_optimality_check(
    prb: &ParametricRB,
    form: &QuadraticForm,
    reference_best_error: f64,
    collage_error: f64,
) -> (f64, bool) {
    quasi_optimality_bound(prb.c, gamma(prb, form), reference_best_error, collage_error)
}

/// [`quasi_optimality_check`] with explicit `c` and `γ`.
pub fn quasi_optimality_bound(
    c: f64,
    gamma: f64,
    reference_best_error: f64,
    collage_error: f64,
) -> (f64, bool) {
    let factor = (1.0 / c + 1.0) / (1.0 / gamma - 1.0);
    assert!(factor > 0.0, "requires 0 < c and γ < 1");
    let bound = factor * reference_best_error;
    (bound, collage_error <= bound + 1e-12)
}

/// Best approximation of `target` in `V_N` in the weighted norm, with its
/// error.
pub fn best_approximation(
    prb: &ParametricRB,
    target: &DVector<f64>,
    weights: &DVector<f64>,
) -> Result<(DVector<f64>, f64), CollageError> {
    let phi = prb.fractal_basis()?;
    let sw = weights.map(f64::sqrt);
    let a = DMatrix::from_fn(phi.nrows(), phi.ncols(), |r, c| sw[r] * phi[(r, c)]);
    let b = target.component_mul(&sw);
    let coef = a
        .svd(true, true)
        .solve(&b, 1e-13)
        .map_err(|_| CollageError::SingularNormalEquations)?;
    let best = &phi * coef;
    let err = (&best - target)
        .iter()
        .zip(weights.iter())
        .map(|(d, w)| w * d * d)
        .sum::<f64>()
        .sqrt();
    Ok((best, err))
}

/// Summary of one collage fit against a known target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub alpha: Vec<f64>,
    pub gamma: f64,
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
    pub iters: usize,
    pub residual: f64,
    pub best_error: f64,
    pub collage_error: f64,
    pub bound: f64,
}

/// Runs the collage fit and compares it with the best approximation of
/// `target` (the exact minimiser of the unconstrained problem).
pub fn fit_report(
    prb: &ParametricRB,
    form: &QuadraticForm,
    target: &DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<(CollageFit, FitReport), CollageError> {
    let fit = collage_fit(prb, form, tol, max_iter)?;
    let (_, best_error) = best_approximation(prb, target, form.weights())?;
    let collage_error = form.norm(&(&fit.u - target));
    let g = gamma(prb, form);
    let (bound, _) = quasi_optimality_bound(prb.c, g, best_error, collage_error);
    let report = FitReport {
        alpha: fit.alpha.iter().copied().collect(),
        gamma: g,
        c: prb.c,
        c1: form.c1,
        c2: form.c2,
        iters: fit.iters,
        residual: fit.residual,
        best_error,
        collage_error,
        bound,
    };
    Ok((fit, report))
}

/// Interpolating family on the paired layout: parameter `j` is the value at
/// domain knot `j`, so `λ_{2j−1} = (1−S_{2j−1}) α_{j−1}` and
/// `λ_{2j} = (1−S_{2j}) α_j`.
pub fn knot_value_family(
    n_maps: usize,
    s_odd: &[f64],
    s_even: &[f64],
    n_g: usize,
    weights: &DVector<f64>,
) -> Result<ParametricRB, CollageError> {
    let ifs = LocalIFS1D::paired_halving(n_maps)?;
    let half = n_maps / 2;
    if s_odd.len() != half || s_even.len() != half {
        return Err(CollageError::DimensionMismatch {
            expected: half,
            got: s_odd.len().min(s_even.len()),
        });
    }
    let scalings: Vec<f64> = (0..half).flat_map(|j| [s_odd[j], s_even[j]]).collect();
    let spec = RBSpec::constant(ifs.clone(), &vec![0.0; n_maps], &scalings)?;
    let n_knots = n_maps / 2 + 1;
    let lambda_basis: Vec<Vec<SampledFunction>> = (0..n_knots)
        .map(|k| {
            (0..n_maps)
                .map(|i| {
                    let (j, odd) = (i / 2, i % 2 == 0);
                    let knot = if odd { j } else { j + 1 };
                    let c = if knot == k { 1.0 - scalings[i] } else { 0.0 };
                    SampledFunction::Constant { c }
                })
                .collect()
        })
        .collect();
    ParametricRB::from_lambda_basis(&spec, &lambda_basis, &Grid::uniform(n_g), weights)
}

/// Family with free affine `λ_i = α_i + β_i x` and constant scalings; the
/// parameters are `(α_1, β_1, α_2, β_2, …)`.
pub fn affine_lambda_family(
    ifs: &LocalIFS1D,
    scalings: &[f64],
    n_g: usize,
    weights: &DVector<f64>,
) -> Result<ParametricRB, CollageError> {
    let n_maps = ifs.n_maps();
    let spec = RBSpec::constant(ifs.clone(), &vec![0.0; n_maps], scalings)?;
    let lambda_basis: Vec<Vec<SampledFunction>> = (0..2 * n_maps)
        .map(|p| {
            (0..n_maps)
                .map(|i| {
                    if i == p / 2 {
                        if p % 2 == 0 {
                            SampledFunction::Affine {
                                alpha: 1.0,
                                beta: 0.0,
                            }
                        } else {
                            SampledFunction::Affine {
                                alpha: 0.0,
                                beta: 1.0,
                            }
                        }
                    } else {
                        SampledFunction::Constant { c: 0.0 }
                    }
                })
                .collect()
        })
        .collect();
    ParametricRB::from_lambda_basis(&spec, &lambda_basis, &Grid::uniform(n_g), weights)
}

/// A fitting problem with its exact unconstrained minimiser.
#[derive(Debug, Clone)]
pub struct Demo {
    pub family: ParametricRB,
    pub form: QuadraticForm,
    pub target: DVector<f64>,
}

/// Least-squares fit of `(x(1−x))^0.2` by the eight-map knot-value family.
pub fn l2_demo(n_g: usize) -> Result<Demo, CollageError> {
    let weights = DVector::from_element(n_g, 1.0 / n_g as f64);
    let target: Vec<f64> = (0..n_g)
        .map(|k| {
            let x = k as f64 / n_g as f64;
            (x * (1.0 - x)).powf(0.2)
        })
        .collect();
    let family = knot_value_family(8, &[0.4; 4], &[0.6; 4], n_g, &weights)?;
    let form = QuadraticForm::l2_fit(&target, weights)?;
    Ok(Demo {
        family,
        form,
        target: DVector::from_vec(target),
    })
}

/// Second-difference Poisson problem on `n_g` nodes with manufactured
/// solution `sin(πx)·(1 + x)`, fitted by a four-map affine-λ family.
pub fn poisson_demo(n_g: usize) -> Result<Demo, CollageError> {
    let u_hat: Vec<f64> = (0..n_g)
        .map(|k| {
            let x = k as f64 / n_g as f64;
            (std::f64::consts::PI * x).sin() * (1.0 + x)
        })
        .collect();
    let form = QuadraticForm::poisson(&u_hat)?;
    let ifs = LocalIFS1D::paired_halving(4)?;
    let family = affine_lambda_family(&ifs, &[0.02, -0.015, 0.01, 0.02], n_g, form.weights())?;
    Ok(Demo {
        family,
        form,
        target: DVector::from_vec(u_hat),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_weights(n: usize) -> DVector<f64> {
        DVector::from_element(n, 1.0 / n as f64)
    }

    fn l2_family(n_g: usize) -> ParametricRB {
        knot_value_family(
            8,
            &[0.4, 0.3, 0.5, 0.35],
            &[0.6, 0.55, 0.45, 0.5],
            n_g,
            &uniform_weights(n_g),
        )
        .unwrap()
    }

    #[test]
    fn form_validation_and_constants() {
        let w = DVector::from_element(3, 0.5);
        let k = DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, 2.0, 8.0]));
        let f = QuadraticForm::new(k, DVector::zeros(3), w.clone()).unwrap();
        assert!((f.c1() - 2f64.sqrt()).abs() < 1e-15);
        assert!((f.c2() - 4.0).abs() < 1e-15);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(
            QuadraticForm::new(bad, DVector::zeros(2), DVector::from_element(2, 1.0)),
            Err(CollageError::NotSymmetric(_))
        ));
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert_eq!(
            QuadraticForm::new(indefinite, DVector::zeros(2), DVector::from_element(2, 1.0)),
            Err(CollageError::NotPositiveDefinite)
        );
    }

    #[test]
    fn rayleigh_quotients_within_constants() {
        let u_hat: Vec<f64> = (0..16).map(|k| (k as f64 / 16.0).sin()).collect();
        let form = QuadraticForm::poisson(&u_hat).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let v = DVector::from_fn(16, |_, _| rng.random_range(-1.0..1.0));
            let q = form.energy_norm(&v) / form.norm(&v);
            assert!(q >= form.c1() * (1.0 - 1e-12) && q <= form.c2() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn contraction_constant_is_pairwise_norm() {
        let prb = l2_family(64);
        let expected = (0.4f64 * 0.4 + 0.6 * 0.6)
            .sqrt()
            .max((0.3f64 * 0.3 + 0.55 * 0.55).sqrt())
            .max((0.5f64 * 0.5 + 0.45 * 0.45).sqrt())
            .max((0.35f64 * 0.35 + 0.5 * 0.5).sqrt());
        assert!((prb.c() - expected).abs() < 1e-14);
    }

    #[test]
    fn full_basis_gives_global_minimizer() {
        let n = 8;
        let spec = RBSpec::constant(LocalIFS1D::binary(), &[0.0, 0.0], &[0.3, 0.3]).unwrap();
        let grid = Grid::uniform(n);
        let base = assemble(&spec, &grid).unwrap();
        let prb = ParametricRB::new(base, DMatrix::identity(n, n), &uniform_weights(n)).unwrap();
        let target: Vec<f64> = (0..n).map(|k| k as f64 * 0.5 - 1.0).collect();
        let form = QuadraticForm::l2_fit(&target, uniform_weights(n)).unwrap();
        let u = DVector::from_fn(n, |k, _| (k as f64).cos());
        let (g, _) = g_operator(&prb, &form, &u).unwrap();
        assert!((g - form.minimizer()).amax() < 1e-12);
    }

    #[test]
    fn zero_load_fits_zero() {
        let prb = l2_family(32);
        let form = QuadraticForm::l2_fit(&[0.0; 32], uniform_weights(32)).unwrap();
        let fit = collage_fit(&prb, &form, 1e-12, 100).unwrap();
        assert!(fit.u.amax() == 0.0);
    }

    #[test]
    fn recovers_member_of_family() {
        let prb = l2_family(64);
        let alpha0 = DVector::from_column_slice(&[0.2, -1.0, 0.5, 0.7, 0.1]);
        let target = prb.fractal_function(&alpha0).unwrap();
        let form = QuadraticForm::l2_fit(target.as_slice(), uniform_weights(64)).unwrap();
        let fit = collage_fit(&prb, &form, 1e-13, 1000).unwrap();
        assert!((&fit.alpha - &alpha0).amax() <= 1e-8);
        let (g, _) = g_operator(&prb, &form, &fit.u).unwrap();
        assert!(form.norm(&(g - &fit.u)) <= 1e-12);
        // optimality along every basis direction
        let grad = prb.basis().transpose() * (form.gram() * &fit.u - form.load());
        assert!(grad.amax() <= 1e-10);
    }

    #[test]
    fn measured_contraction_below_gamma() {
        let prb = l2_family(64);
        let target: Vec<f64> = (0..64).map(|k| (k as f64 / 64.0).sqrt()).collect();
        let form = QuadraticForm::l2_fit(&target, uniform_weights(64)).unwrap();
        let m = contraction_estimate(&prb, &form, 20, 3).unwrap();
        assert!(m <= gamma(&prb, &form) + 1e-9);
        assert_eq!(
            contraction_estimate(&prb, &form, 5, 3),
            Err(CollageError::TooFewTrials(5))
        );
    }

    #[test]
    fn gamma_gate() {
        let u_hat: Vec<f64> = (0..64).map(|k| (k as f64 / 64.0).sin()).collect();
        let form = QuadraticForm::poisson(&u_hat).unwrap();
        let prb = knot_value_family(8, &[0.5; 4], &[0.5; 4], 64, form.weights()).unwrap();
        assert!(matches!(
            collage_fit(&prb, &form, 1e-10, 100),
            Err(CollageError::GammaNotLessThanOne { .. })
        ));
    }

    #[test]
    fn poisson_quasi_optimality() {
        let d = poisson_demo(16).unwrap();
        assert!(gamma(&d.family, &d.form) < 1.0);
        assert!((d.form.minimizer() - &d.target).amax() < 1e-10);
        let (_, rep) = fit_report(&d.family, &d.form, &d.target, 1e-12, 1000).unwrap();
        let (_, holds) =
            quasi_optimality_check(&d.family, &d.form, rep.best_error, rep.collage_error);
        assert!(holds && rep.collage_error <= rep.bound);
    }

    #[test]
    fn l2_demo_quasi_optimality() {
        let d = l2_demo(256).unwrap();
        let (fit, rep) = fit_report(&d.family, &d.form, &d.target, 1e-12, 1000).unwrap();
        assert!(rep.gamma < 1.0);
        assert!(rep.collage_error <= rep.bound);
        assert!(rep.best_error <= rep.collage_error + 1e-12);
        // G(ũ) = ũ
        let (g, _) = g_operator(&d.family, &d.form, &fit.u).unwrap();
        assert!(d.form.norm(&(g - &fit.u)) <= 1e-11);
        // decay ratio of successive steps after burn-in
        for w in fit.steps[5..].windows(2) {
            if w[0] > 1e-10 {
                assert!(w[1] / w[0] <= rep.gamma + 0.05, "{w:?}");
            }
        }
        let json = serde_json::to_string(&rep).unwrap();
        for key in [
            "alpha",
            "gamma",
            "\"c\"",
            "c1",
            "c2",
            "iters",
            "residual",
            "best_error",
            "collage_error",
            "bound",
        ] {
            assert!(json.contains(key), "{key}");
        }
    }

    #[test]
    fn g_output_lies_in_affine_set() {
        let d = l2_demo(64).unwrap();
        let u = DVector::from_fn(64, |k, _| (k as f64 * 0.3).sin());
        let (g, alpha) = g_operator(&d.family, &d.form, &u).unwrap();
        let diff = &g - d.family.apply_base(&u);
        assert!((diff - d.family.basis() * alpha).amax() <= 1e-10);
        let grad = d.family.basis().transpose() * (d.form.gram() * &g - d.form.load());
        assert!(grad.amax() <= 1e-10);
    }

    #[test]
    fn random_spd_contraction() {
        let n = 32;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let r = DMatrix::from_fn(n, n, |_, _| rng.random_range(-0.1..0.1));
        let gram = DMatrix::identity(n, n) + &r * r.transpose();
        let weights = DVector::from_element(n, 1.0);
        let form =
            QuadraticForm::new(gram, DVector::from_element(n, 1.0), weights.clone()).unwrap();
        let prb = knot_value_family(4, &[0.2, 0.3], &[0.25, 0.1], n, &weights).unwrap();
        let m = contraction_estimate(&prb, &form, 20, 5).unwrap();
        assert!(m <= gamma(&prb, &form) + 1e-9);
    }

    #[test]
    fn quasi_optimality_factor() {
        let (bound, holds) = quasi_optimality_bound(0.5, 0.5, 1.0, 3.0);
        assert!((bound - 3.0).abs() < 1e-15);
        assert!(holds);
    }
}
