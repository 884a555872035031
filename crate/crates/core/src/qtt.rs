//! Rank-2 quantized tensor-train form of two-map fractal functions.
//!
//! For the binary IFS with constant `λ_i`, `S_i` the fixed point satisfies
//! `f(x/2) = λ_1 + S_1 f(x)` and `f((x+1)/2) = λ_2 + S_2 f(x)`. Writing
//! `x = 0.d_1 d_2 … d_d` (most significant digit first),
//!
//! ```text
//! f(x) = [1 0] · G(d_1) G(d_2) ⋯ G(d_d) · [f(0); 1],   G(d) = [[S_{d+1}, λ_{d+1}], [0, 1]].
//! ```
//!
//! The leftmost core belongs to the leading digit, so grid index `k` of a
//! `2^d` grid is `x = k / 2^d` with `d_1` its highest bit.

use std::io;

use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::csvfmt;
use crate::local_ifs::LocalIFS1D;
use crate::rb::{RBSpec, RbError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QttError {
    #[error("scaling {0} has modulus at least 1")]
    NotContractive(f64),
    #[error("digit {0} is not binary")]
    InvalidDigit(u8),
    #[error("at most 52 digits are supported, got {0}")]
    TooManyDigits(usize),
    #[error(transparent)]
    Rb(#[from] RbError),
}

/// The two `2×2` cores and the right boundary vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QttDoc", into = "QttDoc")]
pub struct QttCore {
    s: [f64; 2],
    lambda: [f64; 2],
    f0: f64,
}

#[derive(Serialize, Deserialize)]
struct QttDoc {
    #[serde(rename = "S")]
    s: [f64; 2],
    lambda: [f64; 2],
    f0: f64,
}

impl TryFrom<QttDoc> for QttCore {
    type Error = QttError;
    fn try_from(d: QttDoc) -> Result<Self, QttError> {
        let core = build_qtt(d.lambda[0], d.lambda[1], d.s[0], d.s[1])?;
        if core.f0 != d.f0 {
            log::warn!(
                "stored f0 = {} replaced by λ_1/(1 − S_1) = {}",
                d.f0,
                core.f0
            );
        }
        Ok(core)
    }
}

impl From<QttCore> for QttDoc {
    fn from(c: QttCore) -> Self {
        QttDoc {
            s: c.s,
            lambda: c.lambda,
            f0: c.f0,
        }
    }
}

/// Cores for `(λ_1, λ_2, S_1, S_2)`; `f(0) = λ_1/(1 − S_1)`.
pub fn build_qtt(lambda1: f64, lambda2: f64, s1: f64, s2: f64) -> Result<QttCore, QttError> {
    for s in [s1, s2] {
        if !(s.abs() < 1.0) {
            return Err(QttError::NotContractive(s));
        }
    }
    Ok(QttCore {
        s: [s1, s2],
        lambda: [lambda1, lambda2],
        f0: lambda1 / (1.0 - s1),
    })
}

impl QttCore {
    pub fn scalings(&self) -> [f64; 2] {
        self.s
    }

    pub fn lambdas(&self) -> [f64; 2] {
        self.lambda
    }

    pub fn f0(&self) -> f64 {
        self.f0
    }

    /// `G(d)`.
    pub fn mat(&self, digit: usize) -> Matrix2<f64> {
        Matrix2::new(self.s[digit], self.lambda[digit], 0.0, 1.0)
    }

    pub fn boundary_left(&self) -> Vector2<f64> {
        Vector2::new(1.0, 0.0)
    }

    pub fn boundary_right(&self) -> Vector2<f64> {
        Vector2::new(self.f0, 1.0)
    }

    /// `G(d_1) ⋯ G(d_d)`.
    pub fn product(&self, digits: &[u8]) -> Result<Matrix2<f64>, QttError> {
        digits.iter().try_fold(Matrix2::identity(), |acc, &d| {
            if d > 1 {
                return Err(QttError::InvalidDigit(d));
            }
            Ok(acc * self.mat(d as usize))
        })
    }

    /// `f(0.d_1 … d_d)`; `f(0)` for no digits.
    pub fn eval(&self, digits: &[u8]) -> Result<f64, QttError> {
        // right to left keeps the state a vector
        let mut v = self.boundary_right();
        for &d in digits.iter().rev() {
            if d > 1 {
                return Err(QttError::InvalidDigit(d));
            }
            v = self.mat(d as usize) * v;
        }
        Ok(self.boundary_left().dot(&v))
    }

    /// `f(k / 2^d)`.
    pub fn eval_index(&self, k: u64, d: usize) -> Result<f64, QttError> {
        if d > 52 {
            return Err(QttError::TooManyDigits(d));
        }
        let digits: Vec<u8> = (0..d).map(|i| ((k >> (d - 1 - i)) & 1) as u8).collect();
        self.eval(&digits)
    }

    /// Values at all `2^d` points `k / 2^d`.
    pub fn eval_all(&self, d: usize) -> Result<Vec<f64>, QttError> {
        if d > 30 {
            return Err(QttError::TooManyDigits(d));
        }
        (0..1u64 << d)
            .into_par_iter()
            .map(|k| self.eval_index(k, d))
            .collect()
    }

    /// 1 for the zero core, otherwise 2.
    pub fn rank(&self) -> usize {
        if self.s == [0.0; 2] && self.lambda == [0.0; 2] {
            1
        } else {
            2
        }
    }

    /// The same function as an RB spec on the binary IFS.
    pub fn to_spec(&self) -> Result<RBSpec, QttError> {
        Ok(RBSpec::constant(
            LocalIFS1D::binary(),
            &self.lambda,
            &self.s,
        )?)
    }
}

/// Core for a spec with constant data on the binary IFS.
pub fn qtt_from_spec(spec: &RBSpec) -> Option<Result<QttCore, QttError>> {
    use crate::rb::SampledFunction::Constant;
    if spec.ifs() != &LocalIFS1D::binary() {
        return None;
    }
    match (spec.lambdas(), spec.scalings()) {
        ([Constant { c: l1 }, Constant { c: l2 }], [Constant { c: s1 }, Constant { c: s2 }]) => {
            Some(build_qtt(*l1, *l2, *s1, *s2))
        }
        _ => None,
    }
}

/// CSV with header `x,value`.
pub fn write_eval_csv<W: io::Write>(out: W, values: &[f64]) -> io::Result<()> {
    let n = values.len() as f64;
    csvfmt::write_rows(
        out,
        &["x", "value"],
        values.iter().enumerate().map(|(k, &v)| [k as f64 / n, v]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rb::{assemble, solve_fixed_point, sup_distance, Grid, SolveOptions};

    fn rb_values(core: &QttCore, d: usize) -> Vec<f64> {
        let rb = assemble(&core.to_spec().unwrap(), &Grid::uniform(1 << d)).unwrap();
        let opts = SolveOptions {
            tol: 1e-15,
            ..Default::default()
        };
        solve_fixed_point(&rb, &vec![core.f0(); 1 << d], &opts)
            .unwrap()
            .values
    }

    #[test]
    fn trivial_cores() {
        let z = build_qtt(0.0, 0.0, 0.3, -0.2).unwrap();
        assert_eq!(z.f0(), 0.0);
        assert!(z.eval_all(6).unwrap().iter().all(|v| *v == 0.0));
        assert_eq!(build_qtt(0.5, 0.0, 0.5, 0.1).unwrap().f0(), 1.0);
        assert_eq!(
            build_qtt(0.0, 0.0, 1.0, 0.0),
            Err(QttError::NotContractive(1.0))
        );
    }

    #[test]
    fn zero_digits_fix_f0() {
        let c = build_qtt(0.7, -0.3, 0.45, -0.6).unwrap();
        for d in 0..20 {
            assert!((c.eval(&vec![0; d]).unwrap() - c.f0()).abs() < 1e-14);
        }
    }

    #[test]
    fn single_digit_one() {
        let c = build_qtt(0.7, -0.3, 0.45, -0.6).unwrap();
        let v = c.eval(&[1]).unwrap();
        assert!((v - (-0.3 - 0.6 * c.f0())).abs() < 1e-15);
        assert!((v - rb_values(&c, 1)[1]).abs() < 1e-12);
    }

    #[test]
    fn recursion_by_leading_digit() {
        let c = build_qtt(0.2, 0.9, -0.7, 0.35).unwrap();
        let tail = [1, 0, 1, 1, 0];
        for d in 0..2u8 {
            let mut digits = vec![d];
            digits.extend_from_slice(&tail);
            let lhs = c.eval(&digits).unwrap();
            let rhs = c.lambdas()[d as usize] + c.scalings()[d as usize] * c.eval(&tail).unwrap();
            assert!((lhs - rhs).abs() < 1e-15);
        }
    }

    #[test]
    fn matches_rb_fixed_point() {
        let c = build_qtt(0.2, 0.9, -0.7, 0.35).unwrap();
        let q = c.eval_all(10).unwrap();
        assert!(sup_distance(&q, &rb_values(&c, 10)) <= 1e-10);
    }

    #[test]
    fn partial_products_are_affine() {
        let c = build_qtt(0.2, 0.9, -0.7, 0.35).unwrap();
        let digits = [1u8, 1, 0, 1, 0, 0, 1];
        for j in 0..=digits.len() {
            let p = c.product(&digits[..j]).unwrap();
            assert_eq!((p[(1, 0)], p[(1, 1)]), (0.0, 1.0));
        }
        assert_eq!(c.eval(&[2]), Err(QttError::InvalidDigit(2)));
    }

    #[test]
    fn ranks() {
        assert_eq!(build_qtt(0.2, 0.9, -0.7, 0.35).unwrap().rank(), 2);
        assert_eq!(build_qtt(0.0, 0.0, 0.0, 0.0).unwrap().rank(), 1);
        assert_eq!(build_qtt(0.3, 0.3, 0.5, 0.5).unwrap().rank(), 2);
    }

    #[test]
    fn json_shape() {
        let c = build_qtt(0.5, 0.25, 0.5, -0.5).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(s, r#"{"S":[0.5,-0.5],"lambda":[0.5,0.25],"f0":1.0}"#);
        let back: QttCore = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
        assert_eq!(qtt_from_spec(&c.to_spec().unwrap()), Some(Ok(c)));
    }
}
