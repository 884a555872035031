use serde::{Deserialize, Serialize};

use super::RbError;
use crate::local_ifs::Interval;

/// A real function on a map domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SampledFunction {
    Constant {
        c: f64,
    },
    /// `alpha + beta·x`.
    Affine {
        alpha: f64,
        beta: f64,
    },
    /// Piecewise-linear interpolation through `(points[k], values[k])`,
    /// held constant beyond the first and last sample.
    Table {
        points: Vec<f64>,
        values: Vec<f64>,
    },
}

impl SampledFunction {
    pub fn validate(&self) -> Result<(), RbError> {
        match self {
            Self::Constant { c } if !c.is_finite() => {
                Err(RbError::InvalidFunction("non-finite constant".into()))
            }
            Self::Affine { alpha, beta } if !(alpha.is_finite() && beta.is_finite()) => Err(
                RbError::InvalidFunction("non-finite affine coefficients".into()),
            ),
            Self::Table { points, values } => {
                if points.is_empty() || points.len() != values.len() {
                    return Err(RbError::InvalidFunction(format!(
                        "table has {} points and {} values",
                        points.len(),
                        values.len()
                    )));
                }
                if points.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(RbError::InvalidFunction(
                        "table points must be strictly increasing".into(),
                    ));
                }
                if values.iter().chain(points).any(|v| !v.is_finite()) {
                    return Err(RbError::InvalidFunction("non-finite table entry".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Tables must span the closed domain; the other kinds are global.
    pub fn covers(&self, dom: &Interval) -> bool {
        match self {
            Self::Table { points, .. } => points[0] <= dom.lo && *points.last().unwrap() >= dom.hi,
            _ => true,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Constant { c } => *c,
            Self::Affine { alpha, beta } => alpha + beta * x,
            Self::Table { points, values } => {
                let k = points.partition_point(|&p| p <= x);
                if k == 0 {
                    return values[0];
                }
                if k == points.len() {
                    return values[k - 1];
                }
                let (x0, x1) = (points[k - 1], points[k]);
                if x == x0 {
                    return values[k - 1];
                }
                let t = (x - x0) / (x1 - x0);
                values[k - 1] + t * (values[k] - values[k - 1])
            }
        }
    }

    /// `sup |f|` over the closed domain.
    ///
    /// Exact for every kind: tables are piecewise linear, so the supremum is
    /// attained at a sample inside the domain or at a domain endpoint.
    pub fn sup_abs(&self, dom: &Interval) -> f64 {
        match self {
            Self::Constant { c } => c.abs(),
            Self::Affine { .. } => self.eval(dom.lo).abs().max(self.eval(dom.hi).abs()),
            Self::Table { points, values } => points
                .iter()
                .zip(values)
                .filter(|(p, _)| **p >= dom.lo && **p <= dom.hi)
                .map(|(_, v)| v.abs())
                .fold(
                    self.eval(dom.lo).abs().max(self.eval(dom.hi).abs()),
                    f64::max,
                ),
        }
    }

    /// `self + other` scaled: `a·self + b·other`, when both share a kind.
    pub fn linear_combination(a: f64, f: &Self, b: f64, g: &Self) -> Option<Self> {
        match (f, g) {
            (Self::Constant { c: c1 }, Self::Constant { c: c2 }) => {
                Some(Self::Constant { c: a * c1 + b * c2 })
            }
            (
                Self::Affine {
                    alpha: a1,
                    beta: b1,
                },
                Self::Affine {
                    alpha: a2,
                    beta: b2,
                },
            ) => Some(Self::Affine {
                alpha: a * a1 + b * a2,
                beta: a * b1 + b * b2,
            }),
            (
                Self::Table {
                    points: p1,
                    values: v1,
                },
                Self::Table {
                    points: p2,
                    values: v2,
                },
            ) if p1 == p2 => Some(Self::Table {
                points: p1.clone(),
                values: v1.iter().zip(v2).map(|(x, y)| a * x + b * y).collect(),
            }),
            _ => None,
        }
    }
}
