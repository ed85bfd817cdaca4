//! Well-ordered subsets of ℝ ∪ {∞} of order type at most ω^D, addressed by digit tuples.
//!
//! A full address has `D` digits and names an element directly. A shorter tuple `q` names the
//! supremum of the block of all addresses extending `q`; that supremum is the first element of
//! the next block, so such addresses are limit positions. The empty tuple names `sup Λ`.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::scalar::{Extended, Scalar};

/// Position in a well-ordered set, as a tuple of naturals.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct OrdinalAddress(SmallVec<[u64; 4]>);

impl OrdinalAddress {
    pub fn new(digits: &[u64]) -> Self {
        OrdinalAddress(SmallVec::from_slice(digits))
    }

    /// The symbol for the supremum of the whole set.
    pub fn sup() -> Self {
        OrdinalAddress(SmallVec::new())
    }

    pub fn digits(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_sup(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, d: u64) -> Self {
        let mut v = self.0.clone();
        v.push(d);
        OrdinalAddress(v)
    }

    pub fn parent(&self) -> Self {
        let mut v = self.0.clone();
        v.pop();
        OrdinalAddress(v)
    }

    pub fn last(&self) -> Option<u64> {
        self.0.last().copied()
    }

    fn with_last(&self, d: u64) -> Self {
        let mut v = self.0.clone();
        if let Some(l) = v.last_mut() {
            *l = d;
        }
        OrdinalAddress(v)
    }
}

/// Lexicographic order on tuples padded with `∞`: a prefix is greater than its extensions.
impl Ord for OrdinalAddress {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.0.iter().zip(other.0.iter()) {
            match a.cmp(b) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        other.0.len().cmp(&self.0.len())
    }
}

impl PartialOrd for OrdinalAddress {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for OrdinalAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "sup");
        }
        write!(f, "(")?;
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, ")")
    }
}

impl std::str::FromStr for OrdinalAddress {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "sup" || s == "()" {
            return Ok(OrdinalAddress::sup());
        }
        let inner = s.trim_start_matches('(').trim_end_matches(')');
        let digits = inner
            .split(',')
            .map(|d| d.trim().parse::<u64>().map_err(|_| Error::Invalid(format!("address {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(OrdinalAddress::new(&digits))
    }
}

/// Generator of one refinement level: a strictly increasing sequence `s(n)` normalized to
/// `s(0) = 0`, `s(n) → 1`, placed affinely inside each block. `UnitSteps` is the unbounded
/// top-level generator `a + n·h` used when `sup Λ = ∞`.
#[derive(Clone)]
pub enum Layer<T> {
    /// `1 − 2^{−n}`
    Dyadic,
    /// `1 − r^n`, `0 < r < 1`
    Geometric(T),
    /// `n/(n+1)`
    Harmonic,
    /// `1 − (n+1)^{−p}`, `p > 0`
    Power(T),
    /// `n·h`
    UnitSteps(T),
    Custom(Arc<dyn Fn(u64) -> T + Send + Sync>),
}

impl<T: Scalar> Layer<T> {
    /// Normalizes a user sequence with declared limit `limit` to the unit block.
    pub fn custom(seq: impl Fn(u64) -> T + Send + Sync + 'static, limit: T) -> Self {
        let s0 = seq(0);
        let span = limit - s0;
        Layer::Custom(Arc::new(move |n| (seq(n) - s0) / span))
    }

    pub fn is_unbounded(&self) -> bool {
        matches!(self, Layer::UnitSteps(_))
    }

    /// Position `s(n)` of the n-th child inside a block of unit width.
    pub fn s(&self, n: u64) -> T {
        let nf = T::from_count(n);
        match self {
            Layer::Dyadic => T::one() - T::lit(2.0).powf(-nf),
            Layer::Geometric(r) => T::one() - r.powf(nf),
            Layer::Harmonic => nf / (nf + T::one()),
            Layer::Power(p) => T::one() - (nf + T::one()).powf(-*p),
            Layer::UnitSteps(h) => nf * *h,
            Layer::Custom(f) => f(n),
        }
    }

    /// Width `s(n+1) − s(n)` of the n-th child, computed without cancellation where possible.
    pub fn increment(&self, n: u64) -> T {
        let nf = T::from_count(n);
        let one = T::one();
        match self {
            Layer::Dyadic => T::lit(2.0).powf(-(nf + one)),
            Layer::Geometric(r) => r.powf(nf) * (one - *r),
            Layer::Harmonic => one / ((nf + one) * (nf + T::lit(2.0))),
            Layer::Power(p) => {
                let ratio = (-(one / (nf + T::lit(2.0)))).ln_1p();
                (nf + one).powf(-*p) * -(*p * ratio).exp_m1()
            }
            Layer::UnitSteps(h) => *h,
            Layer::Custom(f) => f(n + 1) - f(n),
        }
    }

    /// Approximate inverse of `s`, to be corrected by the caller.
    fn guess(&self, u: T) -> f64 {
        let u = u.to_f64_lossy();
        let g = match self {
            Layer::Dyadic => -(1.0 - u).log2(),
            Layer::Geometric(r) => (1.0 - u).ln() / r.to_f64_lossy().ln(),
            Layer::Harmonic => u / (1.0 - u),
            Layer::Power(p) => (1.0 - u).powf(-1.0 / p.to_f64_lossy()) - 1.0,
            Layer::UnitSteps(h) => u / h.to_f64_lossy(),
            Layer::Custom(_) => 0.0,
        };
        if g.is_finite() {
            g.max(0.0)
        } else {
            f64::INFINITY
        }
    }
}

impl<T: fmt::Debug> fmt::Debug for Layer<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Layer::Dyadic => write!(f, "Dyadic"),
            Layer::Geometric(r) => write!(f, "Geometric({r:?})"),
            Layer::Harmonic => write!(f, "Harmonic"),
            Layer::Power(p) => write!(f, "Power({p:?})"),
            Layer::UnitSteps(h) => write!(f, "UnitSteps({h:?})"),
            Layer::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// One ω-run of a partition-type set: knots increasing from `knots[0]`; when `open`, further
/// knots beyond the enumerated ones accumulate at `limit`, otherwise `limit` is the successor
/// of the last knot and the run is the final one.
#[derive(Clone, Debug)]
pub struct Run<T> {
    pub knots: Vec<T>,
    pub limit: T,
    pub open: bool,
}

#[derive(Clone, Debug)]
enum SetKind<T> {
    Tree { min: T, sup: Extended<T>, layers: Vec<Layer<T>> },
    Finite { points: Vec<T> },
    Runs { runs: Vec<Run<T>>, end: T },
}

/// Child structure of a block, as seen by summation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extent {
    Finite(u64),
    Infinite,
    /// `n` enumerated children followed by unenumerated ones.
    Horizon(u64),
}

/// An element met during enumeration.
#[derive(Clone, Debug, PartialEq)]
pub struct Cursor<T> {
    pub current: OrdinalAddress,
    pub value: T,
    pub is_limit: bool,
}

/// A well-ordered subset of ℝ ∪ {∞}. Cheap to clone; immutable.
#[derive(Clone, Debug)]
pub struct WellOrderedSet<T> {
    kind: Arc<SetKind<T>>,
    below: Option<OrdinalAddress>,
}

struct Descent<T> {
    lo: T,
    width: T,
}

impl<T: Scalar> WellOrderedSet<T> {
    /// Refinement-tree set with the given layer generators. A top layer of `UnitSteps` requires
    /// `sup = ∞`; every other layer subdivides blocks of finite width.
    pub fn tree(min: T, sup: Extended<T>, layers: Vec<Layer<T>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Invalid("a tree set needs at least one layer".into()));
        }
        match (sup, layers[0].is_unbounded()) {
            (Extended::PosInf, false) => {
                return Err(Error::Invalid("sup = inf needs an unbounded top layer".into()))
            }
            (Extended::Finite(b), false) if b <= min => {
                return Err(Error::Invalid("sup must exceed min".into()))
            }
            (Extended::Finite(_), true) => {
                return Err(Error::Invalid("an unbounded top layer needs sup = inf".into()))
            }
            _ => {}
        }
        if layers[1..].iter().any(|l| l.is_unbounded()) {
            return Err(Error::Invalid("only the top layer may be unbounded".into()));
        }
        Ok(Self::wrap(SetKind::Tree { min, sup, layers }))
    }

    /// Dyadic nested set of `depth` layers on `[a, b)`: `Λ_0` for depth 1, `Λ_1` for depth 2, …
    pub fn dyadic(a: T, b: T, depth: usize) -> Result<Self> {
        Self::tree(a, Extended::Finite(b), vec![Layer::Dyadic; depth.max(1)])
    }

    /// `Λ_0 = {1 − 2^{−n}}`.
    pub fn lambda0() -> Self {
        Self::dyadic(T::zero(), T::one(), 1).expect("valid set")
    }

    /// Nested dyadic set with `m + 1` digits on `[0, 1)`.
    pub fn lambda_m(m: usize) -> Self {
        Self::dyadic(T::zero(), T::one(), m + 1).expect("valid set")
    }

    /// The naturals `a, a+1, …` with supremum `∞`, optionally refined by inner layers.
    pub fn unit_steps(a: T, inner: Vec<Layer<T>>) -> Result<Self> {
        let mut layers = vec![Layer::UnitSteps(T::one())];
        layers.extend(inner);
        Self::tree(a, Extended::PosInf, layers)
    }

    /// Finite chain; its largest point is both `sup` and an element.
    pub fn finite(mut points: Vec<T>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Invalid("finite set needs a point".into()));
        }
        points.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        if points.windows(2).any(|w| w[0] >= w[1]) || points.iter().any(|p| !p.is_finite()) {
            return Err(Error::Invalid("finite set points must be distinct and finite".into()));
        }
        Ok(Self::wrap(SetKind::Finite { points }))
    }

    /// Partition-type set: consecutive runs, each starting where the previous one's limit lies,
    /// with `end` the maximum of the set. The last knot of an open run is its enumeration
    /// horizon: an element whose successor is not known.
    pub fn from_runs(runs: Vec<Run<T>>, end: T) -> Result<Self> {
        if runs.is_empty() || runs.iter().any(|r| r.knots.is_empty()) {
            return Err(Error::Invalid("runs must be nonempty".into()));
        }
        for (i, r) in runs.iter().enumerate() {
            if r.knots.windows(2).any(|w| w[0] >= w[1]) || *r.knots.last().unwrap() >= r.limit {
                return Err(Error::Invalid(format!("run {i} is not strictly increasing")));
            }
            if r.open && r.knots.len() < 2 {
                return Err(Error::Invalid(format!("open run {i} needs a certified cell before its horizon")));
            }
            if i + 1 < runs.len() {
                if !r.open || runs[i + 1].knots[0] != r.limit {
                    return Err(Error::Invalid(format!("run {i} must accumulate at the next run's start")));
                }
            } else if r.limit != end {
                return Err(Error::Invalid("last run must end at the maximum".into()));
            }
        }
        Ok(Self::wrap(SetKind::Runs { runs, end }))
    }

    fn wrap(kind: SetKind<T>) -> Self {
        WellOrderedSet { kind: Arc::new(kind), below: None }
    }

    pub fn depth(&self) -> usize {
        match &*self.kind {
            SetKind::Tree { layers, .. } => layers.len(),
            SetKind::Finite { .. } => 1,
            SetKind::Runs { .. } => 2,
        }
    }

    pub fn min(&self) -> T {
        match &*self.kind {
            SetKind::Tree { min, .. } => *min,
            SetKind::Finite { points } => points[0],
            SetKind::Runs { runs, .. } => runs[0].knots[0],
        }
    }

    pub fn min_address(&self) -> OrdinalAddress {
        OrdinalAddress::new(&vec![0; self.depth()])
    }

    /// Supremum of the (possibly restricted) set.
    pub fn sup(&self) -> Extended<T> {
        match &self.below {
            Some(g) => self.embed_unrestricted(g).unwrap_or(Extended::PosInf),
            None => self.full_sup(),
        }
    }

    fn full_sup(&self) -> Extended<T> {
        match &*self.kind {
            SetKind::Tree { sup, .. } => *sup,
            SetKind::Finite { points } => Extended::Finite(*points.last().unwrap()),
            SetKind::Runs { end, .. } => Extended::Finite(*end),
        }
    }

    /// Whether the supremum is itself an element (finite chains and partitions).
    pub fn contains_sup(&self) -> bool {
        self.below.is_none() && !matches!(&*self.kind, SetKind::Tree { .. })
    }

    pub fn bound(&self) -> Option<&OrdinalAddress> {
        self.below.as_ref()
    }

    /// The same set without any restriction.
    pub fn unrestricted(&self) -> Self {
        WellOrderedSet { kind: self.kind.clone(), below: None }
    }

    /// Direct access to the runs of a partition-type set.
    pub fn runs(&self) -> Option<&[Run<T>]> {
        match &*self.kind {
            SetKind::Runs { runs, .. } => Some(runs),
            _ => None,
        }
    }

    pub fn is_tree(&self) -> bool {
        matches!(&*self.kind, SetKind::Tree { .. })
    }

    /// The elements strictly below `gamma`.
    pub fn restrict_below(&self, gamma: &OrdinalAddress) -> Result<Self> {
        if gamma.is_sup() {
            return Ok(WellOrderedSet { kind: self.kind.clone(), below: self.below.clone().or(Some(OrdinalAddress::sup())) });
        }
        let g = self.canonical(gamma)?;
        let g = match &self.below {
            Some(b) if self.compare(b, &g)? == Ordering::Less => b.clone(),
            _ => g,
        };
        Ok(WellOrderedSet { kind: self.kind.clone(), below: Some(g) })
    }

    /// Shortest notation of the element named by `addr`.
    pub fn canonical(&self, addr: &OrdinalAddress) -> Result<OrdinalAddress> {
        let d = addr.digits();
        if d.len() > self.depth() {
            return Err(Error::InvalidAddress(addr.clone()));
        }
        match &*self.kind {
            SetKind::Tree { .. } => {
                if d.len() < self.depth() {
                    return Ok(addr.clone());
                }
                match d.iter().rposition(|&x| x != 0) {
                    None => Ok(addr.clone()),
                    Some(k) if k + 1 == d.len() => Ok(addr.clone()),
                    Some(k) => {
                        let mut v: Vec<u64> = d[..=k].to_vec();
                        v[k] -= 1;
                        Ok(OrdinalAddress::new(&v))
                    }
                }
            }
            SetKind::Finite { points } => {
                if d.first().is_some_and(|&k| k as usize >= points.len()) {
                    return Err(Error::InvalidAddress(addr.clone()));
                }
                Ok(addr.clone())
            }
            SetKind::Runs { runs, .. } => {
                let nr = runs.len() as u64;
                match *d {
                    [] => Ok(addr.clone()),
                    [j] if j + 1 == nr => Ok(OrdinalAddress::sup()),
                    [j] if j < nr && runs[j as usize].open => Ok(addr.clone()),
                    [j, 0] if j >= 1 && j < nr => self.canonical(&OrdinalAddress::new(&[j - 1])),
                    [j, k] if j < nr => {
                        let run = &runs[j as usize];
                        if (k as usize) < run.knots.len() {
                            Ok(addr.clone())
                        } else if run.open {
                            Err(Error::BeyondHorizon(addr.clone()))
                        } else {
                            Err(Error::InvalidAddress(addr.clone()))
                        }
                    }
                    _ => Err(Error::InvalidAddress(addr.clone())),
                }
            }
        }
    }

    /// Expands a canonical address to `depth` digits, if it names an element.
    fn full_form(&self, addr: &OrdinalAddress) -> Result<OrdinalAddress> {
        let depth = self.depth();
        if addr.len() == depth {
            return Ok(addr.clone());
        }
        if addr.is_sup() {
            return Err(Error::AddressAtSup(addr.clone()));
        }
        match &*self.kind {
            SetKind::Finite { .. } => Err(Error::InvalidAddress(addr.clone())),
            _ => {
                let mut v = addr.digits().to_vec();
                *v.last_mut().unwrap() += 1;
                v.resize(depth, 0);
                Ok(OrdinalAddress::new(&v))
            }
        }
    }

    fn descend(&self, layers: &[Layer<T>], min: T, sup: Extended<T>, digits: &[u64]) -> Descent<T> {
        let mut lo = min;
        let mut width = match sup {
            Extended::Finite(b) => b - min,
            Extended::PosInf => T::one(),
        };
        for (layer, &n) in layers.iter().zip(digits) {
            if layer.is_unbounded() {
                lo = min + layer.s(n);
                width = layer.increment(n);
            } else {
                lo += width * layer.s(n);
                width *= layer.increment(n);
            }
        }
        Descent { lo, width }
    }

    fn embed_unrestricted(&self, addr: &OrdinalAddress) -> Result<Extended<T>> {
        if addr.is_sup() {
            return Ok(self.full_sup());
        }
        let addr = self.canonical(addr)?;
        if addr.is_sup() {
            return Ok(self.full_sup());
        }
        match &*self.kind {
            SetKind::Tree { min, sup, layers } => {
                let d = self.descend(layers, *min, *sup, addr.digits());
                if addr.len() == layers.len() {
                    Ok(Extended::Finite(d.lo))
                } else {
                    Ok(Extended::Finite(d.lo + d.width))
                }
            }
            SetKind::Finite { points } => Ok(Extended::Finite(points[addr.digits()[0] as usize])),
            SetKind::Runs { runs, .. } => match *addr.digits() {
                [j] => Ok(Extended::Finite(runs[j as usize].limit)),
                [j, k] => Ok(Extended::Finite(runs[j as usize].knots[k as usize])),
                _ => Err(Error::InvalidAddress(addr.clone())),
            },
        }
    }

    /// Real value of an address (`sup` may be `∞`).
    pub fn embed(&self, addr: &OrdinalAddress) -> Result<Extended<T>> {
        if addr.is_sup() {
            return Ok(self.sup());
        }
        self.embed_unrestricted(addr)
    }

    pub fn embed_finite(&self, addr: &OrdinalAddress) -> Result<T> {
        self.embed(addr)?.finite().ok_or_else(|| Error::AddressAtSup(addr.clone()))
    }

    /// Order of two addresses of this set (via canonical forms).
    pub fn compare(&self, x: &OrdinalAddress, y: &OrdinalAddress) -> Result<Ordering> {
        let (cx, cy) = (self.canonical(x)?, self.canonical(y)?);
        if let SetKind::Finite { points } = &*self.kind {
            let last = points.len() as u64 - 1;
            let idx = |a: &OrdinalAddress| a.digits().first().copied().unwrap_or(last);
            return Ok(idx(&cx).cmp(&idx(&cy)));
        }
        Ok(cx.cmp(&cy))
    }

    /// `true` for addresses at or beyond the restriction bound.
    fn excluded(&self, addr: &OrdinalAddress) -> bool {
        match &self.below {
            Some(b) => self.compare(addr, b).map(|o| o != Ordering::Less).unwrap_or(true),
            None => false,
        }
    }

    /// Least element strictly greater than `beta`.
    pub fn successor(&self, beta: &OrdinalAddress) -> Result<OrdinalAddress> {
        let c = self.canonical(beta)?;
        if c.is_sup() || self.excluded(&c) {
            return Err(Error::AddressAtSup(beta.clone()));
        }
        match &*self.kind {
            SetKind::Tree { .. } => {
                let full = self.full_form(&c)?;
                let next = full.with_last(full.last().unwrap() + 1);
                self.canonical(&next)
            }
            SetKind::Finite { points } => {
                let k = c.digits()[0];
                if (k as usize) + 1 >= points.len() {
                    Err(Error::AddressAtSup(beta.clone()))
                } else {
                    Ok(OrdinalAddress::new(&[k + 1]))
                }
            }
            SetKind::Runs { runs, .. } => {
                let full = self.full_form(&c)?;
                let (j, k) = (full.digits()[0] as usize, full.digits()[1] as usize);
                let run = &runs[j];
                if k + 1 < run.knots.len() {
                    Ok(OrdinalAddress::new(&[j as u64, k as u64 + 1]))
                } else if run.open {
                    Err(Error::BeyondHorizon(full.with_last(k as u64 + 1)))
                } else {
                    Ok(OrdinalAddress::sup())
                }
            }
        }
    }

    /// `S(β) − β` for an element below the supremum, computed from layer widths.
    pub fn gap(&self, beta: &OrdinalAddress) -> Result<T> {
        let c = self.canonical(beta)?;
        if c.is_sup() {
            return Err(Error::AddressAtSup(beta.clone()));
        }
        match &*self.kind {
            SetKind::Tree { min, sup, layers } => {
                let full = self.full_form(&c)?;
                Ok(self.descend(layers, *min, *sup, full.digits()).width)
            }
            _ => {
                let s = self.successor(&c)?;
                Ok(self.embed_unrestricted(&s)?.to_scalar() - self.embed_unrestricted(&c)?.to_scalar())
            }
        }
    }

    pub fn is_limit(&self, addr: &OrdinalAddress) -> Result<bool> {
        let c = self.canonical(addr)?;
        Ok(match &*self.kind {
            SetKind::Tree { .. } => c.len() < self.depth(),
            SetKind::Finite { .. } => false,
            SetKind::Runs { runs, .. } => {
                if c.is_sup() {
                    runs.last().unwrap().open
                } else {
                    c.len() == 1
                }
            }
        })
    }

    /// Whether `addr` is `S(β)` for some element β.
    pub fn is_successor(&self, addr: &OrdinalAddress) -> Result<bool> {
        let c = self.canonical(addr)?;
        Ok(match &*self.kind {
            SetKind::Tree { .. } => c.len() == self.depth() && c.last() != Some(0),
            SetKind::Finite { points } => c.digits().first().is_none_or(|&k| k > 0) && points.len() > 1,
            SetKind::Runs { runs, .. } => {
                if c.is_sup() {
                    let last = runs.last().unwrap();
                    !last.open
                } else {
                    c.len() == 2 && c.last() != Some(0)
                }
            }
        })
    }

    /// Child structure of the block with prefix `q` (`q.len() < depth`), counting only children
    /// strictly below the supremum.
    pub fn extent(&self, q: &OrdinalAddress) -> Extent {
        match &*self.kind {
            SetKind::Tree { .. } => Extent::Infinite,
            SetKind::Finite { points } => Extent::Finite(points.len() as u64 - 1),
            SetKind::Runs { runs, .. } => {
                if q.is_empty() {
                    Extent::Finite(runs.len() as u64)
                } else {
                    let run = &runs[q.digits()[0] as usize];
                    if run.open {
                        Extent::Horizon(run.knots.len() as u64 - 1)
                    } else {
                        Extent::Finite(run.knots.len() as u64)
                    }
                }
            }
        }
    }

    /// The first `budget` elements in increasing order.
    pub fn enumerate(&self, budget: usize) -> Vec<Cursor<T>> {
        let mut out = Vec::new();
        let mut addr = self.min_address();
        while out.len() < budget {
            if self.excluded(&addr) {
                break;
            }
            let value = match self.embed(&addr) {
                Ok(v) => v.to_scalar(),
                Err(_) => break,
            };
            if let Some(prev) = out.last().map(|c: &Cursor<T>| c.value) {
                if value <= prev {
                    break;
                }
            }
            let is_limit = self.is_limit(&addr).unwrap_or(false);
            out.push(Cursor { current: addr.clone(), value, is_limit });
            match self.successor(&addr) {
                Ok(s) if !s.is_sup() => addr = s,
                Err(Error::BeyondHorizon(h)) => match self.runs() {
                    Some(runs) if (h.digits()[0] as usize) + 1 < runs.len() => addr = OrdinalAddress::new(&[h.digits()[0]]),
                    _ => break,
                },
                _ => break,
            }
        }
        out
    }

    /// All elements whose digit at level `k` is below `per_layer[k]`, in increasing order; a
    /// layer stops early once embedded values no longer increase at floating-point resolution.
    pub fn horizon(&self, per_layer: &[u64]) -> Vec<Cursor<T>> {
        let depth = self.depth();
        if !self.is_tree() {
            let cap = per_layer.iter().product::<u64>().max(1) as usize;
            return self.enumerate(cap);
        }
        let mut out: Vec<Cursor<T>> = Vec::new();
        let mut digits = Vec::with_capacity(depth);
        self.horizon_rec(per_layer, &mut digits, &mut out);
        out
    }

    /// Returns `false` once the restriction bound is reached.
    fn horizon_rec(&self, per_layer: &[u64], digits: &mut Vec<u64>, out: &mut Vec<Cursor<T>>) -> bool {
        let level = digits.len();
        let limit = per_layer.get(level).copied().unwrap_or(1).max(1);
        for n in 0..limit {
            digits.push(n);
            if level + 1 == self.depth() {
                let addr = OrdinalAddress::new(digits);
                if self.excluded(&addr) {
                    digits.pop();
                    return false;
                }
                let value = match self.embed(&addr) {
                    Ok(v) => v.to_scalar(),
                    Err(_) => {
                        digits.pop();
                        break;
                    }
                };
                if out.last().is_some_and(|c| value <= c.value) {
                    digits.pop();
                    break;
                }
                let current = self.canonical(&addr).unwrap_or(addr);
                let is_limit = self.is_limit(&current).unwrap_or(false);
                out.push(Cursor { current, value, is_limit });
            } else if !self.horizon_rec(per_layer, digits, out) {
                digits.pop();
                return false;
            }
            digits.pop();
        }
        true
    }

    /// The element β with `t ∈ [β, S(β))`.
    pub fn locate(&self, t: T) -> Result<OrdinalAddress> {
        let sup = self.sup();
        if t < self.min() || Extended::Finite(t) >= sup {
            return Err(Error::OutOfRange(t.to_f64_lossy()));
        }
        match &*self.kind {
            SetKind::Tree { min, sup, layers } => {
                let mut digits: Vec<u64> = Vec::with_capacity(layers.len());
                for (level, layer) in layers.iter().enumerate() {
                    let d = self.descend(layers, *min, *sup, &digits);
                    let (lo, width) = if level == 0 && layer.is_unbounded() {
                        (*min, T::one())
                    } else {
                        (d.lo, d.width)
                    };
                    let pos = |n: u64| -> T {
                        if layer.is_unbounded() {
                            *min + layer.s(n)
                        } else {
                            lo + width * layer.s(n)
                        }
                    };
                    let u = if layer.is_unbounded() { t - *min } else { (t - lo) / width };
                    let g = layer.guess(u);
                    if !g.is_finite() || g > 1e15 {
                        return Err(Error::BeyondHorizon(OrdinalAddress::new(&digits)));
                    }
                    let mut n = g.floor() as u64;
                    if let Layer::Custom(_) = layer {
                        let mut hi = 1u64;
                        while pos(hi) <= t {
                            hi *= 2;
                            if hi > 1 << 50 {
                                return Err(Error::BeyondHorizon(OrdinalAddress::new(&digits)));
                            }
                        }
                        let mut lo_n = 0u64;
                        while hi - lo_n > 1 {
                            let mid = (lo_n + hi) / 2;
                            if pos(mid) <= t {
                                lo_n = mid;
                            } else {
                                hi = mid;
                            }
                        }
                        n = lo_n;
                    }
                    let mut guard = 0;
                    while n > 0 && pos(n) > t {
                        n -= 1;
                        guard += 1;
                        if guard > 64 {
                            break;
                        }
                    }
                    guard = 0;
                    while pos(n + 1) <= t {
                        if pos(n + 1) <= pos(n) {
                            return Err(Error::BeyondHorizon(OrdinalAddress::new(&digits)));
                        }
                        n += 1;
                        guard += 1;
                        if guard > 64 {
                            return Err(Error::BeyondHorizon(OrdinalAddress::new(&digits)));
                        }
                    }
                    digits.push(n);
                }
                self.canonical(&OrdinalAddress::new(&digits))
            }
            SetKind::Finite { points } => {
                let k = points.partition_point(|p| *p <= t) - 1;
                Ok(OrdinalAddress::new(&[k as u64]))
            }
            SetKind::Runs { runs, .. } => {
                let j = runs.partition_point(|r| r.knots[0] <= t) - 1;
                let run = &runs[j];
                let k = run.knots.partition_point(|p| *p <= t) - 1;
                if k + 1 == run.knots.len() && run.open {
                    return Err(Error::BeyondHorizon(OrdinalAddress::new(&[j as u64, k as u64])));
                }
                self.canonical(&OrdinalAddress::new(&[j as u64, k as u64]))
            }
        }
    }
}

/// Generator of one level in a set configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LayerSpec {
    Dyadic,
    Geometric { ratio: f64 },
    Harmonic,
    Power { p: f64 },
    Unit {
        #[serde(default = "one")]
        step: f64,
    },
}

fn one() -> f64 {
    1.0
}

/// Key–value description of a well-ordered set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetSpec {
    pub kind: String,
    #[serde(default)]
    pub min: f64,
    /// A number, or the string `"inf"`.
    #[serde(default)]
    pub sup: Option<serde_json::Value>,
    #[serde(default)]
    pub depth: Option<usize>,
    #[serde(default)]
    pub layers: Option<Vec<LayerSpec>>,
    #[serde(default)]
    pub points: Option<Vec<f64>>,
}

impl SetSpec {
    pub fn build<T: Scalar>(&self) -> Result<WellOrderedSet<T>> {
        let sup = match &self.sup {
            None => Extended::Finite(T::one()),
            Some(serde_json::Value::String(s)) if s == "inf" || s == "infinity" => Extended::PosInf,
            Some(serde_json::Value::Number(n)) => {
                Extended::Finite(T::lit(n.as_f64().ok_or_else(|| Error::Invalid("sup".into()))?))
            }
            Some(v) => return Err(Error::Invalid(format!("sup {v}"))),
        };
        let depth = self.depth.unwrap_or(3);
        let min = T::lit(self.min);
        match self.kind.as_str() {
            "dyadic" => match sup {
                Extended::Finite(_) => WellOrderedSet::tree(min, sup, vec![Layer::Dyadic; depth.max(1)]),
                Extended::PosInf => WellOrderedSet::unit_steps(min, vec![Layer::Dyadic; depth.saturating_sub(1)]),
            },
            "finite" => {
                let pts = self.points.as_ref().ok_or_else(|| Error::Invalid("finite set needs points".into()))?;
                WellOrderedSet::finite(pts.iter().map(|&p| T::lit(p)).collect())
            }
            "custom" => {
                let specs = self.layers.as_ref().ok_or_else(|| Error::Invalid("custom set needs layers".into()))?;
                let layers = specs
                    .iter()
                    .map(|l| match *l {
                        LayerSpec::Dyadic => Ok(Layer::Dyadic),
                        LayerSpec::Geometric { ratio } if ratio > 0.0 && ratio < 1.0 => Ok(Layer::Geometric(T::lit(ratio))),
                        LayerSpec::Harmonic => Ok(Layer::Harmonic),
                        LayerSpec::Power { p } if p > 0.0 => Ok(Layer::Power(T::lit(p))),
                        LayerSpec::Unit { step } if step > 0.0 => Ok(Layer::UnitSteps(T::lit(step))),
                        ref other => Err(Error::Invalid(format!("layer {other:?}"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                WellOrderedSet::tree(min, sup, layers)
            }
            k => Err(Error::Invalid(format!("set kind {k:?}"))),
        }
    }
}
