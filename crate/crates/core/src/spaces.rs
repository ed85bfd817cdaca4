//! Values in the three provided normed, partially ordered vector spaces.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Scalar, Tri};

/// An element of ℝ, of ℝ^d with the sup norm, or of c₀ carried as a finite prefix plus a bound
/// `tail` on the absolute value of every coordinate beyond the prefix.
#[derive(Clone, Debug, PartialEq)]
pub enum VectorValue<T> {
    Real(T),
    RealVec(Vec<T>),
    TruncCZero { prefix: Vec<T>, tail: T },
}

/// Closed interval `[lo, hi]` enclosing a norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormInterval<T> {
    pub lo: T,
    pub hi: T,
}

/// Norm ball `{v : ‖v − center‖ ≤ radius}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ball<T> {
    pub center: VectorValue<T>,
    pub radius: T,
}

impl<T: Scalar> VectorValue<T> {
    pub fn czero(prefix: Vec<T>, tail: T) -> Self {
        VectorValue::TruncCZero { prefix, tail: tail.abs() }
    }

    /// The zero element of the same space and dimension, with tail bound 0.
    pub fn zero_like(&self) -> Self {
        match self {
            VectorValue::Real(_) => VectorValue::Real(T::zero()),
            VectorValue::RealVec(v) => VectorValue::RealVec(vec![T::zero(); v.len()]),
            VectorValue::TruncCZero { prefix, .. } => VectorValue::TruncCZero {
                prefix: vec![T::zero(); prefix.len()],
                tail: T::zero(),
            },
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            VectorValue::Real(_) => "real",
            VectorValue::RealVec(_) => "vec",
            VectorValue::TruncCZero { .. } => "c0",
        }
    }

    /// Number of explicitly carried coordinates.
    pub fn dim(&self) -> usize {
        self.coords().len()
    }

    pub fn coords(&self) -> &[T] {
        match self {
            VectorValue::Real(x) => std::slice::from_ref(x),
            VectorValue::RealVec(v) => v,
            VectorValue::TruncCZero { prefix, .. } => prefix,
        }
    }

    fn coords_mut(&mut self) -> &mut [T] {
        match self {
            VectorValue::Real(x) => std::slice::from_mut(x),
            VectorValue::RealVec(v) => v,
            VectorValue::TruncCZero { prefix, .. } => prefix,
        }
    }

    pub fn tail_bound(&self) -> T {
        match self {
            VectorValue::TruncCZero { tail, .. } => *tail,
            _ => T::zero(),
        }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        let ok = match (self, other) {
            (VectorValue::Real(_), VectorValue::Real(_)) => true,
            (VectorValue::RealVec(a), VectorValue::RealVec(b)) => a.len() == b.len(),
            (VectorValue::TruncCZero { prefix: a, .. }, VectorValue::TruncCZero { prefix: b, .. }) => {
                a.len() == b.len()
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::SpaceMismatch(format!(
                "{}[{}] vs {}[{}]",
                self.kind(),
                self.dim(),
                other.kind(),
                other.dim()
            )))
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.add_scaled(T::one(), other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.add_scaled(-T::one(), other)?;
        Ok(out)
    }

    /// `self += c · other`; tail bounds combine by the triangle inequality.
    pub fn add_scaled(&mut self, c: T, other: &Self) -> Result<()> {
        self.check_compatible(other)?;
        for (a, b) in self.coords_mut().iter_mut().zip(other.coords()) {
            *a += c * *b;
        }
        if let (VectorValue::TruncCZero { tail, .. }, VectorValue::TruncCZero { tail: t2, .. }) =
            (&mut *self, other)
        {
            *tail += c.abs() * *t2;
        }
        Ok(())
    }

    pub fn scale(&self, c: T) -> Self {
        let mut out = self.clone();
        for a in out.coords_mut() {
            *a *= c;
        }
        if let VectorValue::TruncCZero { tail, .. } = &mut out {
            *tail = if c == T::zero() { T::zero() } else { *tail * c.abs() };
        }
        out
    }

    /// Sup-norm enclosure. For c₀ the tail may dominate, so `hi = max(lo, τ)`.
    pub fn norm(&self) -> NormInterval<T> {
        let lo = self.coords().iter().fold(T::zero(), |m, x| m.max(x.abs()));
        NormInterval { lo, hi: lo.max(self.tail_bound()) }
    }

    /// Upper bound on ‖self − other‖.
    pub fn distance(&self, other: &Self) -> Result<T> {
        Ok(self.sub(other)?.norm().hi)
    }

    /// Componentwise order. Undecidable comparisons of c₀ tails give `Unknown`.
    pub fn leq(&self, other: &Self) -> Result<Tri> {
        self.check_compatible(other)?;
        if self.coords().iter().zip(other.coords()).any(|(a, b)| a > b) {
            return Ok(Tri::False);
        }
        if self.tail_bound() + other.tail_bound() > T::zero() {
            return Ok(Tri::Unknown);
        }
        Ok(Tri::True)
    }

    pub fn map_coords(&self, f: impl Fn(T) -> T) -> Self {
        let mut out = self.clone();
        for a in out.coords_mut() {
            *a = f(*a);
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.coords().iter().all(|x| x.is_finite()) && self.tail_bound().is_finite()
    }

    pub fn to_record(&self) -> ValueRecord<T> {
        ValueRecord {
            kind: self.kind().to_string(),
            coords: self.coords().to_vec(),
            tail_bound: self.tail_bound(),
        }
    }

    pub fn from_record(r: &ValueRecord<T>) -> Result<Self> {
        match r.kind.as_str() {
            "real" if r.coords.len() == 1 => Ok(VectorValue::Real(r.coords[0])),
            "vec" => Ok(VectorValue::RealVec(r.coords.clone())),
            "c0" => Ok(VectorValue::czero(r.coords.clone(), r.tail_bound)),
            k => Err(Error::Invalid(format!("value kind {k:?} with {} coordinates", r.coords.len()))),
        }
    }
}

impl<T: Scalar> Ball<T> {
    pub fn point(center: VectorValue<T>) -> Self {
        Ball { center, radius: T::zero() }
    }

    pub fn scale(&self, c: T) -> Self {
        Ball { center: self.center.scale(c), radius: self.radius * c.abs() }
    }
}

/// Serialized form `{kind, coords, tail_bound}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de> + num_traits::Zero"))]
pub struct ValueRecord<T> {
    pub kind: String,
    pub coords: Vec<T>,
    #[serde(default = "zero_tail")]
    pub tail_bound: T,
}

fn zero_tail<T: num_traits::Zero>() -> T {
    T::zero()
}

impl<T: Scalar> fmt::Display for VectorValue<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VectorValue::Real(x) => write!(f, "{x}"),
            VectorValue::RealVec(v) => write!(f, "{v:?}"),
            VectorValue::TruncCZero { prefix, tail } => {
                write!(f, "c0[{} coords, first {:?}, tail ≤ {tail}]", prefix.len(), prefix.first())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn czero_add_accumulates_tails() {
        let x = VectorValue::czero(vec![1.0], 0.1);
        let y = VectorValue::czero(vec![2.0], 0.2);
        let s = x.add(&y).unwrap();
        assert_eq!(s.coords(), &[3.0]);
        assert!((s.tail_bound() - 0.3f64).abs() < 1e-15);
    }

    #[test]
    fn zero_scale_clears_tail() {
        let x = VectorValue::czero(vec![1.0, -2.0], 0.5);
        let z = x.scale(0.0);
        assert_eq!(z.coords(), &[0.0, 0.0]);
        assert_eq!(z.tail_bound(), 0.0);
        assert_eq!(VectorValue::RealVec(vec![1.0, -2.0]).scale(-1.0), VectorValue::RealVec(vec![-1.0, 2.0]));
    }

    #[test]
    fn norms() {
        assert_eq!(VectorValue::Real(-5.0).norm(), NormInterval { lo: 5.0, hi: 5.0 });
        assert_eq!(VectorValue::RealVec(vec![3.0, -4.0]).norm(), NormInterval { lo: 4.0, hi: 4.0 });
        assert_eq!(VectorValue::czero(vec![0.5], 0.7).norm(), NormInterval { lo: 0.5, hi: 0.7 });
    }

    #[test]
    fn order() {
        let a = VectorValue::RealVec(vec![1.0, 1.0]);
        let b = VectorValue::RealVec(vec![2.0, 1.0]);
        assert_eq!(a.leq(&b).unwrap(), Tri::True);
        assert_eq!(VectorValue::Real(2.0).leq(&VectorValue::Real(1.0)).unwrap(), Tri::False);
        let x = VectorValue::czero(vec![0.0], 0.5);
        let y = VectorValue::czero(vec![0.0], 0.1);
        assert_eq!(x.leq(&y).unwrap(), Tri::Unknown);
    }

    #[test]
    fn mismatch_is_an_error() {
        let r = VectorValue::Real(1.0).add(&VectorValue::RealVec(vec![1.0]));
        assert!(matches!(r, Err(Error::SpaceMismatch(_))));
    }

    #[test]
    fn record_round_trip() {
        let x = VectorValue::czero(vec![0.25, -1.0], 0.125);
        assert_eq!(VectorValue::from_record(&x.to_record()).unwrap(), x);
    }
}
