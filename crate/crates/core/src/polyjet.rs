//! Taylor jets of polynomials and the affine maps that regenerate them.
//!
//! A polynomial of degree `M` is given by `a_k = p^{(k)}(0)`, so
//! `p(x) = Σ a_k x^k / k!`. Its jet at `x` is `f(x) = (p(x), p′(x), …, p^{(M)}(x))`.
//! All matrices are `(M+1) × (M+1)`; since the shift is nilpotent at that
//! size every identity below is exact, not truncated.
//!
//! Conventions, with `v(t) = (t^k/k!)_k`:
//!
//! - `A(x)_{ij} = f_{i+j}(x)` (zero past `M`), the upper-left triangular Hankel matrix;
//! - `V(t)_{ij} = v_{j−i}(t)` for `j ≥ i`, upper triangular, so that
//!   `f(x+t) = A(x) v(t) = V(t) f(x)` and `V(s)ᵀ v(t) = v(t+s)`;
//! - `D_s = diag(s^k)`, so `v(st) = D_s v(t)`.
//!
//! The fractel `W_s(x) = A(x) D_s A(x)⁺` sends `f(t)` to `f(l_x(t))` with
//! `l_x(t) = (1−s)x + st`. It is upper triangular with diagonal
//! `(s^M, …, s, 1)`; the unit eigenvalue sits on the top derivative `f_M`,
//! which is the constant `a_M`.

use std::io;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::csvfmt;
use crate::local_ifs::AffineMap1D;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyJetError {
    #[error("leading coefficient is zero")]
    ZeroLeadingCoefficient,
    #[error("Hankel matrix has zero anti-diagonal")]
    DegenerateHankel,
    #[error("matrix is not an upper-left triangular Hankel matrix")]
    NotHankel,
    #[error("theta = {0} must lie in [0,1]")]
    ThetaOutOfRange(f64),
    #[error("scaling s = {0} must lie in (0,1)")]
    ScalingOutOfRange(f64),
    #[error("the two-map construction needs s = 1/2, got {0}")]
    UnsupportedScaling(f64),
    #[error("{x} is not a dyadic point with {digits} binary digits in [0,1)")]
    NonDyadicPoint { x: f64, digits: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Derivatives `(f_0, …, f_M)` of a polynomial at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct JetVector {
    values: Vec<f64>,
}

impl JetVector {
    /// Trailing zeros are trimmed so that the top entry is nonzero.
    pub fn new(mut values: Vec<f64>) -> Result<Self, PolyJetError> {
        let before = values.len();
        while values.len() > 1 && *values.last().unwrap() == 0.0 {
            values.pop();
        }
        if values.last().is_none_or(|v| *v == 0.0) {
            return Err(PolyJetError::ZeroLeadingCoefficient);
        }
        if values.len() != before {
            log::warn!("jet trimmed from {} to {} entries", before, values.len());
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn degree(&self) -> usize {
        self.values.len() - 1
    }

    pub fn to_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.values)
    }

    /// Wraps computed derivatives without trimming.
    pub fn from_dvector(v: &DVector<f64>) -> Self {
        Self {
            values: v.iter().copied().collect(),
        }
    }
}

/// `v(t) = (t^k / k!)_{k=0..=m}`.
pub fn taylor_basis(t: f64, m: usize) -> DVector<f64> {
    let mut v = DVector::zeros(m + 1);
    v[0] = 1.0;
    for k in 1..=m {
        v[k] = v[k - 1] * t / k as f64;
    }
    v
}

/// Jet of `p(x) = Σ a_k x^k/k!` at `x`.
pub fn jet_at(coefficients: &[f64], x: f64) -> Result<JetVector, PolyJetError> {
    if coefficients.last().is_none_or(|a| *a == 0.0) {
        return Err(PolyJetError::ZeroLeadingCoefficient);
    }
    let m = coefficients.len() - 1;
    let v = taylor_basis(x, m);
    let values = (0..=m)
        .map(|k| (0..=m - k).map(|j| coefficients[k + j] * v[j]).sum())
        .collect();
    Ok(JetVector { values })
}

/// Converts `Σ c_k x^k` to the coefficients `a_k = k!·c_k` of `Σ a_k x^k/k!`.
pub fn monomial_to_scaled(c: &[f64]) -> Vec<f64> {
    let mut fact = 1.0;
    c.iter()
        .enumerate()
        .map(|(k, v)| {
            if k > 0 {
                fact *= k as f64;
            }
            v * fact
        })
        .collect()
}

/// `A(x)` built from a jet.
pub fn hankel(j: &JetVector) -> DMatrix<f64> {
    let m = j.degree();
    DMatrix::from_fn(m + 1, m + 1, |r, c| {
        j.values.get(r + c).copied().unwrap_or(0.0)
    })
}

/// `V(t)`, upper triangular Toeplitz with `V_{ij} = t^{j−i}/(j−i)!`.
pub fn toeplitz_v(t: f64, m: usize) -> DMatrix<f64> {
    let v = taylor_basis(t, m);
    DMatrix::from_fn(m + 1, m + 1, |r, c| if c >= r { v[c - r] } else { 0.0 })
}

/// `D_s = diag(s^k)`.
pub fn dilation(s: f64, m: usize) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_fn(m + 1, |k, _| s.powi(k as i32)))
}

/// `f(x+t) = V(t) f(x)`.
pub fn taylor_translate(j: &JetVector, t: f64) -> JetVector {
    JetVector::from_dvector(&(toeplitz_v(t, j.degree()) * j.to_dvector()))
}

/// `f(x+t) = A(x) v(t)`.
pub fn taylor_translate_hankel(j: &JetVector, t: f64) -> JetVector {
    JetVector::from_dvector(&(hankel(j) * taylor_basis(t, j.degree())))
}

/// Moore–Penrose inverse of an upper-left triangular Hankel matrix, possibly
/// zero-padded to a larger square matrix.
///
/// With `M` the last nonzero row of the first column and `P` the reversal on
/// the leading `(M+1)` block, `L = I − P A / a_M` is strictly lower
/// triangular, so `A⁺ = Σ_{k=0}^{M} L^k P / a_M` is a finite sum. The result
/// is zero outside the leading block.
pub fn hankel_pseudoinverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>, PolyJetError> {
    let n = a.nrows();
    if a.ncols() != n || n == 0 {
        return Err(PolyJetError::DimensionMismatch {
            expected: n,
            got: a.ncols(),
        });
    }
    let m = (0..n)
        .rev()
        .find(|&r| a[(r, 0)] != 0.0)
        .ok_or(PolyJetError::DegenerateHankel)?;
    for r in 0..n {
        for c in 0..n {
            let expected = if r + c <= m { a[(r + c, 0)] } else { 0.0 };
            if a[(r, c)] != expected {
                return Err(PolyJetError::NotHankel);
            }
        }
    }
    let am = a[(m, 0)];
    let block = a.view((0, 0), (m + 1, m + 1)).into_owned();
    let p = DMatrix::from_fn(m + 1, m + 1, |r, c| if r + c == m { 1.0 } else { 0.0 });
    let pa = &p * &block / am;
    let l = DMatrix::identity(m + 1, m + 1) - pa;
    let mut term = &p / am;
    let mut sum = term.clone();
    for _ in 1..=m {
        term = &l * term;
        sum += &term;
    }
    let mut out = DMatrix::zeros(n, n);
    out.view_mut((0, 0), (m + 1, m + 1)).copy_from(&sum);
    Ok(out)
}

fn check_scaling(s: f64) -> Result<(), PolyJetError> {
    if !(s > 0.0 && s < 1.0) {
        return Err(PolyJetError::ScalingOutOfRange(s));
    }
    Ok(())
}

/// `W_s(x) = A(x) D_s A(x)⁺`.
pub fn fractel_linear(j: &JetVector, s: f64) -> Result<DMatrix<f64>, PolyJetError> {
    check_scaling(s)?;
    let a = hankel(j);
    let ap = hankel_pseudoinverse(&a)?;
    Ok(&a * dilation(s, j.degree()) * ap)
}

/// Eigenvalues of an upper triangular matrix, ascending.
pub fn triangular_eigenvalues(w: &DMatrix<f64>) -> Vec<f64> {
    let mut d: Vec<f64> = w.diagonal().iter().copied().collect();
    d.sort_by(f64::total_cmp);
    d
}

/// `V(x)ᵀ D_s V(−x)ᵀ`, which maps `v(t)` to `v(l_x(t))`.
pub fn basis_fractel_linear(x: f64, s: f64, m: usize) -> DMatrix<f64> {
    toeplitz_v(x, m).transpose() * dilation(s, m) * toeplitz_v(-x, m).transpose()
}

/// `w(t, y) = (l(t), linear·y + offset)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Fractel {
    pub l: AffineMap1D,
    pub linear: DMatrix<f64>,
    pub offset: DVector<f64>,
}

impl Fractel {
    pub fn apply(&self, t: f64, y: &DVector<f64>) -> (f64, DVector<f64>) {
        (self.l.apply(t), &self.linear * y + &self.offset)
    }

    pub fn apply_jet(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.linear * y + &self.offset
    }
}

/// Fractel for the jet `j` taken at `x`, with the unit eigenvalue damped
/// by `θ`: `w(t, y) = (l_x(t), (W − θ e_M e_Mᵀ) y + θ f_M(x) e_M)`.
///
/// Since `f_M` is constant along the polynomial, this keeps the jet graph
/// invariant for every `θ`, and the linear part has spectral radius below 1
/// when `θ > 0`.
pub fn make_theta_fractel(
    j: &JetVector,
    x: f64,
    s: f64,
    theta: f64,
) -> Result<Fractel, PolyJetError> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(PolyJetError::ThetaOutOfRange(theta));
    }
    let mut w = fractel_linear(j, s)?;
    let m = j.degree();
    w[(m, m)] -= theta;
    let mut offset = DVector::zeros(m + 1);
    offset[m] = theta * j.values[m];
    Ok(Fractel {
        l: AffineMap1D::new(s, (1.0 - s) * x),
        linear: w,
        offset,
    })
}

/// [`make_theta_fractel`] for a polynomial given by its coefficients.
pub fn make_theta_fractel_at(
    coefficients: &[f64],
    x: f64,
    s: f64,
    theta: f64,
) -> Result<Fractel, PolyJetError> {
    make_theta_fractel(&jet_at(coefficients, x)?, x, s, theta)
}

/// The two fractels at `x = 0` and `x = 1` with `s = 1/2`; their x-maps are
/// `t/2` and `(t+1)/2`.
pub fn two_map_ifs(coefficients: &[f64], theta: f64) -> Result<[Fractel; 2], PolyJetError> {
    Ok([
        make_theta_fractel_at(coefficients, 0.0, 0.5, theta)?,
        make_theta_fractel_at(coefficients, 1.0, 0.5, theta)?,
    ])
}

/// Binary digits `d_1 … d_J` of `x = Σ d_k 2^{−k} ∈ [0,1)`.
pub fn dyadic_digits(x: f64, digits: usize) -> Result<Vec<u8>, PolyJetError> {
    let err = PolyJetError::NonDyadicPoint { x, digits };
    if !(0.0..1.0).contains(&x) || digits > 52 {
        return Err(err);
    }
    let scaled = x * (1u64 << digits) as f64;
    if scaled.fract() != 0.0 {
        return Err(err);
    }
    let k = scaled as u64;
    Ok((0..digits)
        .map(|i| ((k >> (digits - 1 - i)) & 1) as u8)
        .collect())
}

/// Jet at a `J`-digit dyadic `x` regenerated from the jet at 0 by the
/// two-map fractel IFS, applying maps from the least significant digit.
pub fn poly_ifs_reconstruct(
    coefficients: &[f64],
    s: f64,
    theta: f64,
    digits: usize,
    x: f64,
) -> Result<JetVector, PolyJetError> {
    if s != 0.5 {
        return Err(PolyJetError::UnsupportedScaling(s));
    }
    let d = dyadic_digits(x, digits)?;
    let maps = two_map_ifs(coefficients, theta)?;
    let mut y = jet_at(coefficients, 0.0)?.to_dvector();
    for &bit in d.iter().rev() {
        y = maps[bit as usize].apply_jet(&y);
    }
    Ok(JetVector::from_dvector(&y))
}

/// CSV with header `x,f0,…,fM`.
pub fn write_jet_csv<W: io::Write>(out: W, rows: &[(f64, JetVector)]) -> io::Result<()> {
    let m = rows.iter().map(|(_, j)| j.degree()).max().unwrap_or(0);
    let header: Vec<String> = std::iter::once("x".to_string())
        .chain((0..=m).map(|k| format!("f{k}")))
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    csvfmt::write_rows(
        out,
        &header,
        rows.iter().map(|(x, j)| {
            let mut r = vec![*x];
            r.extend((0..=m).map(|k| j.values.get(k).copied().unwrap_or(0.0)));
            r
        }),
    )
}
