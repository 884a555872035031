//! Dyadic points, the binary shift and self-referential grids.
//!
//! Points are digit strings `0.d_1 d_2 … d_J` kept in canonical form (no
//! trailing zeros), so shifting and closure are exact. The right endpoint is
//! the separate value [`DyadicPoint::one`], read as `0.111…`; it is fixed by
//! both the shift and `l_1(x) = (x+1)/2`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::csvfmt::fmt_f64;
use crate::polyjet::{jet_at, Fractel, JetVector, PolyJetError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SrGridError {
    #[error("digit {0} is not binary")]
    InvalidDigit(u8),
    #[error("{x} is not a dyadic point in [0,1] with at most {max_digits} digits")]
    NonDyadic { x: f64, max_digits: usize },
    #[error("maps do not leave a function graph invariant (defect {defect:e} {context})")]
    GraphInvarianceViolated { defect: f64, context: String },
    #[error("jet dimensions differ: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("the second map has no unique fixed jet, so the value at 1 is undefined")]
    NoFixedPointAtOne,
    #[error("{0} is in the grid but its shift is not")]
    NotShiftClosed(DyadicPoint),
    #[error(transparent)]
    PolyJet(#[from] PolyJetError),
}

/// A point `Σ d_k 2^{−k}` of `[0,1)` or the endpoint 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicPoint {
    // field order gives the numeric order: 1 is the largest point, and a
    // canonical digit string is smaller than any of its extensions
    is_one: bool,
    digits: Vec<u8>,
}

impl DyadicPoint {
    /// Canonical point from digits `d_1 … d_J`, most significant first.
    pub fn new(mut digits: Vec<u8>) -> Result<Self, SrGridError> {
        if let Some(&d) = digits.iter().find(|d| **d > 1) {
            return Err(SrGridError::InvalidDigit(d));
        }
        while digits.last() == Some(&0) {
            digits.pop();
        }
        Ok(Self {
            is_one: false,
            digits,
        })
    }

    pub fn zero() -> Self {
        Self {
            is_one: false,
            digits: Vec::new(),
        }
    }

    pub fn one() -> Self {
        Self {
            is_one: true,
            digits: Vec::new(),
        }
    }

    /// `k / 2^j` for `0 ≤ k ≤ 2^j`, `j ≤ 63`.
    pub fn from_ratio(k: u64, j: u32) -> Result<Self, SrGridError> {
        let err = SrGridError::NonDyadic {
            x: k as f64 / 2f64.powi(j as i32),
            max_digits: j as usize,
        };
        if j > 63 {
            return Err(err);
        }
        let denom = 1u64 << j;
        if k == denom {
            return Ok(Self::one());
        }
        if k > denom {
            return Err(err);
        }
        Self::new((0..j).map(|i| ((k >> (j - 1 - i)) & 1) as u8).collect())
    }

    /// Exact conversion of a float with at most `max_digits` binary digits.
    pub fn from_value(x: f64, max_digits: usize) -> Result<Self, SrGridError> {
        let err = SrGridError::NonDyadic { x, max_digits };
        if max_digits > 52 || !(0.0..=1.0).contains(&x) {
            return Err(err);
        }
        let scaled = x * (1u64 << max_digits) as f64;
        if scaled.fract() != 0.0 {
            return Err(err);
        }
        Self::from_ratio(scaled as u64, max_digits as u32)
    }

    /// Digits of a point of `[0,1)`; empty for 0 and for 1.
    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    pub fn is_one(&self) -> bool {
        self.is_one
    }

    pub fn is_zero(&self) -> bool {
        !self.is_one && self.digits.is_empty()
    }

    /// Value as a float; exact up to 53 digits.
    pub fn value(&self) -> f64 {
        if self.is_one {
            return 1.0;
        }
        self.digits
            .iter()
            .rev()
            .fold(0.0, |acc, &d| (acc + d as f64) * 0.5)
    }

    /// `σ(0.d_1 d_2 …) = 0.d_2 …`; fixes 0 and 1.
    pub fn shift(&self) -> Self {
        if self.is_one || self.digits.is_empty() {
            return self.clone();
        }
        Self {
            is_one: false,
            digits: self.digits[1..].to_vec(),
        }
    }

    /// `l_0(x) = x/2` or `l_1(x) = (x+1)/2`.
    pub fn lift(&self, digit: u8) -> Self {
        match (self.is_one, digit) {
            (true, 0) => Self {
                is_one: false,
                digits: vec![1],
            },
            (true, _) => self.clone(),
            (false, 0) if self.digits.is_empty() => self.clone(),
            (false, d) => {
                let mut digits = Vec::with_capacity(self.digits.len() + 1);
                digits.push(d.min(1));
                digits.extend_from_slice(&self.digits);
                Self {
                    is_one: false,
                    digits,
                }
            }
        }
    }

    /// Leading digit, or the digit of the map fixing the point.
    fn leading_digit(&self) -> u8 {
        if self.is_one {
            1
        } else {
            self.digits.first().copied().unwrap_or(0)
        }
    }

    /// `x, σ(x), σ²(x), …` until a fixed point of `σ` is reached.
    pub fn orbit(&self) -> Vec<DyadicPoint> {
        let mut out = vec![self.clone()];
        loop {
            let next = out.last().unwrap().shift();
            if &next == out.last().unwrap() {
                return out;
            }
            out.push(next);
        }
    }
}

impl fmt::Display for DyadicPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one {
            return f.write_str("0.(1)");
        }
        f.write_str("0.")?;
        if self.digits.is_empty() {
            return f.write_str("0");
        }
        for d in &self.digits {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// A finite `σ`-closed set of dyadic points containing 0 and 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelfRefGrid {
    points: BTreeSet<DyadicPoint>,
}

impl SelfRefGrid {
    /// Checks that `points` contains 0 and 1 and is closed under `σ`.
    pub fn new(points: BTreeSet<DyadicPoint>) -> Result<Self, SrGridError> {
        for p in [DyadicPoint::zero(), DyadicPoint::one()] {
            if !points.contains(&p) {
                return Err(SrGridError::NotShiftClosed(p));
            }
        }
        if let Some(p) = points.iter().find(|p| !points.contains(&p.shift())) {
            return Err(SrGridError::NotShiftClosed(p.clone()));
        }
        Ok(Self { points })
    }

    /// Points in increasing order.
    pub fn points(&self) -> impl ExactSizeIterator<Item = &DyadicPoint> {
        self.points.iter()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, p: &DyadicPoint) -> bool {
        self.points.contains(p)
    }

    /// `σ(γ) ⊆ γ`.
    pub fn is_shift_invariant(&self) -> bool {
        self.points.iter().all(|p| self.points.contains(&p.shift()))
    }

    /// `γ ⊆ l_0(γ) ∪ l_1(γ)`.
    pub fn is_self_referential(&self) -> bool {
        self.points.iter().all(|p| {
            self.points
                .iter()
                .any(|z| z.lift(0) == *p || z.lift(1) == *p)
        })
    }

    /// CSV with header `digits,value`; 1 is written as `(1)`.
    pub fn write_csv<W: io::Write>(&self, out: W) -> io::Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(["digits", "value"])
            .map_err(io::Error::other)?;
        for p in &self.points {
            let digits: String = if p.is_one() {
                "(1)".into()
            } else {
                p.digits().iter().map(|d| char::from(b'0' + d)).collect()
            };
            w.write_record([digits, fmt_f64(p.value())])
                .map_err(io::Error::other)?;
        }
        w.flush()
    }
}

/// Smallest `σ`-closed superset of `m ∪ {0, 1}`.
pub fn close_grid(m: &[DyadicPoint]) -> SelfRefGrid {
    let mut points = BTreeSet::from([DyadicPoint::zero(), DyadicPoint::one()]);
    for p in m {
        let mut cur = p.clone();
        while points.insert(cur.clone()) {
            cur = cur.shift();
        }
    }
    SelfRefGrid { points }
}

const INVARIANCE_TOL: f64 = 1e-9;
const PROBES: usize = 9;

fn rel_defect(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).amax() / (1.0 + a.amax().max(b.amax()))
}

/// Evaluates the function whose jet graph is the attractor of two affine
/// maps `y ↦ W_d y + b_d` over `l_0, l_1`, given its jet at 0.
#[derive(Debug, Clone)]
pub struct DigitEvaluator {
    maps: [Fractel; 2],
    f0: DVector<f64>,
    f1: Option<DVector<f64>>,
}

impl DigitEvaluator {
    /// Checks that `f0` is fixed by the first map and, when the jet at 1 is
    /// defined, that both maps agree at `½`.
    pub fn new(maps: [Fractel; 2], f0: &JetVector) -> Result<Self, SrGridError> {
        let f0 = f0.to_dvector();
        let dim = f0.len();
        for m in &maps {
            for got in [m.linear.nrows(), m.linear.ncols(), m.offset.len()] {
                if got != dim {
                    return Err(SrGridError::DimensionMismatch { expected: dim, got });
                }
            }
        }
        let at_zero = rel_defect(&maps[0].apply_jet(&f0), &f0);
        if at_zero > INVARIANCE_TOL {
            return Err(SrGridError::GraphInvarianceViolated {
                defect: at_zero,
                context: "at 0".into(),
            });
        }
        let f1 = (DMatrix::identity(dim, dim) - &maps[1].linear)
            .lu()
            .solve(&maps[1].offset)
            .filter(|v| v.iter().all(|x| x.is_finite()));
        if let Some(f1) = &f1 {
            let half = rel_defect(&maps[0].apply_jet(f1), &maps[1].apply_jet(&f0));
            if half > INVARIANCE_TOL {
                return Err(SrGridError::GraphInvarianceViolated {
                    defect: half,
                    context: "at 1/2".into(),
                });
            }
        }
        Ok(Self { maps, f0, f1 })
    }

    /// Also probes `jet(l_d(t)) = W_d jet(t) + b_d` against a polynomial.
    pub fn with_target(maps: [Fractel; 2], coefficients: &[f64]) -> Result<Self, SrGridError> {
        for k in 0..PROBES {
            let t = k as f64 / (PROBES - 1) as f64;
            let jt = jet_at(coefficients, t)?.to_dvector();
            for (d, m) in maps.iter().enumerate() {
                let lhs = jet_at(coefficients, m.l.apply(t))?.to_dvector();
                if lhs.len() != jt.len() {
                    return Err(SrGridError::DimensionMismatch {
                        expected: jt.len(),
                        got: lhs.len(),
                    });
                }
                let defect = rel_defect(&lhs, &m.apply_jet(&jt));
                if defect > INVARIANCE_TOL {
                    return Err(SrGridError::GraphInvarianceViolated {
                        defect,
                        context: format!("for map {d} at t = {t}"),
                    });
                }
            }
        }
        Self::new(maps, &jet_at(coefficients, 0.0)?)
    }

    fn at_one(&self) -> Result<&DVector<f64>, SrGridError> {
        self.f1.as_ref().ok_or(SrGridError::NoFixedPointAtOne)
    }

    /// Jet at `x` from `y^{(0)} = f(0)`, `y^{(k+1)} = W_{d_{J−k}} y^{(k)} +
    /// b_{d_{J−k}}`.
    pub fn evaluate(&self, x: &DyadicPoint) -> Result<JetVector, SrGridError> {
        Ok(self.evaluate_path(x)?.1)
    }

    /// Also returns the visited points `x^{(0)} = 0, x^{(k+1)} =
    /// l_{d_{J−k}}(x^{(k)})`, ending at `x`.
    pub fn evaluate_path(
        &self,
        x: &DyadicPoint,
    ) -> Result<(Vec<DyadicPoint>, JetVector), SrGridError> {
        if x.is_one() {
            return Ok((vec![x.clone()], JetVector::from_dvector(self.at_one()?)));
        }
        let mut p = DyadicPoint::zero();
        let mut y = self.f0.clone();
        let mut path = vec![p.clone()];
        for &d in x.digits().iter().rev() {
            p = p.lift(d);
            y = self.maps[d as usize].apply_jet(&y);
            path.push(p.clone());
        }
        Ok((path, JetVector::from_dvector(&y)))
    }

    /// Jets at every point of a grid, each computed from the jet at its
    /// shift; costs one affine application per point other than 0 and 1.
    pub fn evaluate_grid(&self, grid: &SelfRefGrid) -> Result<GridEvaluation, SrGridError> {
        let mut jets: BTreeMap<DyadicPoint, DVector<f64>> = BTreeMap::new();
        jets.insert(DyadicPoint::zero(), self.f0.clone());
        if let Ok(f1) = self.at_one() {
            jets.insert(DyadicPoint::one(), f1.clone());
        }
        let mut order: Vec<&DyadicPoint> = grid.points().collect();
        order.sort_by_key(|p| (p.is_one(), p.digits().len()));
        let mut ops = 0;
        for p in order {
            if jets.contains_key(p) {
                continue;
            }
            if p.is_one() {
                return Err(SrGridError::NoFixedPointAtOne);
            }
            let parent = &jets[&p.shift()];
            let y = self.maps[p.leading_digit() as usize].apply_jet(parent);
            ops += 1;
            jets.insert(p.clone(), y);
        }
        let jets = grid
            .points()
            .map(|p| (p.clone(), JetVector::from_dvector(&jets[p])))
            .collect();
        Ok(GridEvaluation { jets, ops })
    }
}

/// Jets over a grid in increasing order of the points.
#[derive(Debug, Clone, PartialEq)]
pub struct GridEvaluation {
    pub jets: Vec<(DyadicPoint, JetVector)>,
    /// Affine applications performed.
    pub ops: usize,
}

impl GridEvaluation {
    /// CSV with header `x,f0,…,fM`.
    pub fn write_csv<W: io::Write>(&self, out: W) -> io::Result<()> {
        let rows: Vec<(f64, JetVector)> = self
            .jets
            .iter()
            .map(|(p, j)| (p.value(), j.clone()))
            .collect();
        crate::polyjet::write_jet_csv(out, &rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyjet::two_map_ifs;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pt(digits: &[u8]) -> DyadicPoint {
        DyadicPoint::new(digits.to_vec()).unwrap()
    }

    #[test]
    fn shift_examples() {
        assert_eq!(pt(&[1, 0, 1]).shift(), pt(&[0, 1]));
        assert_eq!(pt(&[0, 1]).value(), 0.25);
        assert_eq!(DyadicPoint::zero().shift(), DyadicPoint::zero());
        assert_eq!(DyadicPoint::one().shift(), DyadicPoint::one());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let k: u64 = rng.random_range(0..4096);
            let p = DyadicPoint::from_ratio(k, 12).unwrap();
            let x = p.value();
            assert_eq!(p.shift().value(), 2.0 * x - (2.0 * x).floor());
        }
    }

    #[test]
    fn canonical_form_and_order() {
        assert_eq!(pt(&[1, 0, 0]), pt(&[1]));
        assert_eq!(DyadicPoint::new(vec![2]), Err(SrGridError::InvalidDigit(2)));
        let mut v = [
            DyadicPoint::one(),
            pt(&[1, 1]),
            pt(&[]),
            pt(&[1]),
            pt(&[0, 1]),
        ];
        v.sort();
        let vals: Vec<f64> = v.iter().map(DyadicPoint::value).collect();
        assert_eq!(vals, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(DyadicPoint::from_value(1.0, 3).unwrap(), DyadicPoint::one());
        assert!(DyadicPoint::from_value(0.1, 20).is_err());
        assert_eq!(pt(&[1, 1]).to_string(), "0.11");
    }

    #[test]
    fn closure_examples() {
        let g = close_grid(&[pt(&[1, 1])]);
        let vals: Vec<f64> = g.points().map(DyadicPoint::value).collect();
        assert_eq!(vals, vec![0.0, 0.5, 0.75, 1.0]);
        assert_eq!(
            close_grid(&[DyadicPoint::zero(), DyadicPoint::one()]).len(),
            2
        );
        let p = DyadicPoint::from_ratio(11, 4).unwrap();
        let g = close_grid(std::slice::from_ref(&p));
        // 1011, 011, 11, 1, 0 and the endpoint 1
        assert_eq!(g.len(), 6);
        for q in p.orbit() {
            assert!(g.contains(&q));
        }
        assert!(g.is_shift_invariant() && g.is_self_referential());
    }

    #[test]
    fn closure_size_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let m: Vec<DyadicPoint> = (0..5)
                .map(|_| DyadicPoint::from_ratio(rng.random_range(0..1024), 10).unwrap())
                .collect();
            let g = close_grid(&m);
            let bound: usize = m.iter().map(|p| p.digits().len() + 1).sum::<usize>() + 2;
            assert!(g.len() <= bound);
            assert!(g.is_shift_invariant() && g.is_self_referential());
        }
    }

    #[test]
    fn rejects_unclosed_sets() {
        let s = BTreeSet::from([DyadicPoint::zero(), DyadicPoint::one(), pt(&[1, 1])]);
        assert_eq!(
            SelfRefGrid::new(s),
            Err(SrGridError::NotShiftClosed(pt(&[1, 1])))
        );
    }

    #[test]
    fn quadratic_jet_at_three_quarters() {
        // x² in the scaled basis x^k/k!
        let p = [0.0, 0.0, 2.0];
        let ev = DigitEvaluator::with_target(two_map_ifs(&p, 0.5).unwrap(), &p).unwrap();
        let j = ev.evaluate(&pt(&[1, 1])).unwrap();
        let want = [9.0 / 16.0, 1.5, 2.0];
        for (a, b) in j.values().iter().zip(want) {
            assert!((a - b).abs() < 1e-12, "{a} {b}");
        }
        let z = ev.evaluate(&DyadicPoint::zero()).unwrap();
        assert_eq!(z.values(), &[0.0, 0.0, 2.0]);
        let one = ev.evaluate(&DyadicPoint::one()).unwrap();
        assert!((one.values()[0] - 1.0).abs() < 1e-12 && (one.values()[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn path_is_reversed_orbit() {
        let p = [1.0, -2.0, 0.5, 0.25];
        let ev = DigitEvaluator::with_target(two_map_ifs(&p, 0.5).unwrap(), &p).unwrap();
        let x = pt(&[1, 0, 1, 1, 0, 1]);
        let (path, _) = ev.evaluate_path(&x).unwrap();
        let mut orbit = x.orbit();
        orbit.reverse();
        assert_eq!(path, orbit);
    }

    #[test]
    fn grid_sweep_matches_direct_jets() {
        let p = [0.3, 1.0, -1.5, 0.7];
        let ev = DigitEvaluator::with_target(two_map_ifs(&p, 0.5).unwrap(), &p).unwrap();
        let g = close_grid(&[DyadicPoint::from_ratio(11, 4).unwrap()]);
        let res = ev.evaluate_grid(&g).unwrap();
        assert_eq!(res.ops, g.len() - 2);
        for (x, j) in &res.jets {
            let want = jet_at(&p, x.value()).unwrap();
            for (a, b) in j.values().iter().zip(want.values()) {
                assert!((a - b).abs() < 1e-8);
            }
        }
        let mut buf = Vec::new();
        res.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("x,f0,f1,f2,f3\n"));
    }

    #[test]
    fn detects_foreign_maps() {
        let p = [0.0, 0.0, 1.0];
        let q = [0.0, 1.0, 1.0];
        let maps = two_map_ifs(&q, 0.5).unwrap();
        assert!(matches!(
            DigitEvaluator::with_target(maps.clone(), &p),
            Err(SrGridError::GraphInvarianceViolated { .. })
        ));
        assert!(matches!(
            DigitEvaluator::new(maps, &jet_at(&p, 0.0).unwrap()),
            Err(SrGridError::GraphInvarianceViolated { .. })
        ));
    }

    #[test]
    fn grid_csv() {
        let mut buf = Vec::new();
        close_grid(&[pt(&[1, 1])]).write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("digits,value\n,0.0000000000000000e0\n1,5.0"));
        assert!(s.ends_with("(1),1.0000000000000000e0\n"));
    }
}
