use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar used throughout the crate: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Panics only if the target type cannot represent finite doubles at all.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("scalar conversion")
    }

    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("scalar conversion")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// A real number or the sentinel `+∞`, which compares greater than every real.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum Extended<T> {
    Finite(T),
    PosInf,
}

impl<T: Scalar> Extended<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            Extended::Finite(x) => Some(x),
            Extended::PosInf => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    pub fn to_scalar(self) -> T {
        match self {
            Extended::Finite(x) => x,
            Extended::PosInf => T::infinity(),
        }
    }

    pub fn from_scalar(x: T) -> Self {
        if x == T::infinity() {
            Extended::PosInf
        } else {
            Extended::Finite(x)
        }
    }
}

impl<T: Scalar> PartialOrd for Extended<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        use std::cmp::Ordering::*;
        match (self, other) {
            (Extended::PosInf, Extended::PosInf) => Some(Equal),
            (Extended::PosInf, _) => Some(Greater),
            (_, Extended::PosInf) => Some(Less),
            (Extended::Finite(a), Extended::Finite(b)) => a.partial_cmp(b),
        }
    }
}

impl<T: Scalar> Display for Extended<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Extended::Finite(x) => write!(f, "{x}"),
            Extended::PosInf => write!(f, "inf"),
        }
    }
}

/// Tri-state answer of a decision that may be out of finite reach.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tri {
    True,
    False,
    Unknown,
}

impl Tri {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Tri::True
        } else {
            Tri::False
        }
    }

    pub fn and(self, other: Tri) -> Tri {
        match (self, other) {
            (Tri::False, _) | (_, Tri::False) => Tri::False,
            (Tri::True, Tri::True) => Tri::True,
            _ => Tri::Unknown,
        }
    }
}
