//! Transfinite partial sums `σ(γ)` over well-ordered index sets and the summability trichotomy.
//!
//! Every sum reduces to block sums: the block with prefix `q` is the sum over its children
//! `q·0, q·1, …`, each child being a single term at full depth or a nested block otherwise.

use std::cell::Cell;
use std::collections::VecDeque;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ordinal::{Extent, OrdinalAddress, WellOrderedSet};
use crate::scalar::{Scalar, Tri};
use crate::spaces::{Ball, VectorValue};

pub type ValueFn<T> = Arc<dyn Fn(&OrdinalAddress) -> VectorValue<T> + Send + Sync>;
pub type RemainderFn<T> = Arc<dyn Fn(&OrdinalAddress) -> Option<Remainder<T>> + Send + Sync>;

/// Information about the siblings after an address, up to the next limit position.
#[derive(Clone, Debug, PartialEq)]
pub enum Remainder<T> {
    /// Norm of their sum is at most the bound.
    Bound(T),
    /// Their sum is `width · v` for some `v` in the ball, and so is every partial tail of
    /// total support width `w ≤ width` with `w` in place of `width`.
    Enclosure { width: T, ball: Ball<T> },
    /// Their sum lies in `sum`, and every partial sum of them has norm at most `partial`.
    Total { sum: Ball<T>, partial: T },
    /// Their sum does not exist.
    Divergent,
}

/// A family `(x_α)` indexed by a well-ordered set.
#[derive(Clone)]
pub struct Family<T> {
    pub index: WellOrderedSet<T>,
    value: ValueFn<T>,
    remainder: Option<RemainderFn<T>>,
    abs_remainder: Option<RemainderFn<T>>,
    nonnegative: bool,
}

impl<T: Scalar> Family<T> {
    pub fn new(index: WellOrderedSet<T>, value: impl Fn(&OrdinalAddress) -> VectorValue<T> + Send + Sync + 'static) -> Self {
        Family { index, value: Arc::new(value), remainder: None, abs_remainder: None, nonnegative: false }
    }

    pub fn from_arc(index: WellOrderedSet<T>, value: ValueFn<T>) -> Self {
        Family { index, value, remainder: None, abs_remainder: None, nonnegative: false }
    }

    /// Certified information on the tail of siblings after an address.
    pub fn with_remainder(mut self, f: impl Fn(&OrdinalAddress) -> Option<Remainder<T>> + Send + Sync + 'static) -> Self {
        self.remainder = Some(Arc::new(f));
        self
    }

    /// Same as `with_remainder`, for the family of norms.
    pub fn with_abs_remainder(mut self, f: impl Fn(&OrdinalAddress) -> Option<Remainder<T>> + Send + Sync + 'static) -> Self {
        self.abs_remainder = Some(Arc::new(f));
        self
    }

    pub fn with_remainder_arc(mut self, f: Option<RemainderFn<T>>) -> Self {
        self.remainder = f;
        self
    }

    pub fn with_abs_remainder_arc(mut self, f: Option<RemainderFn<T>>) -> Self {
        self.abs_remainder = f;
        self
    }

    /// Declares that all terms are nonnegative reals, enabling comparison tests.
    pub fn nonnegative(mut self) -> Self {
        self.nonnegative = true;
        self
    }

    pub fn value(&self, addr: &OrdinalAddress) -> VectorValue<T> {
        (self.value)(addr)
    }

    pub fn value_fn(&self) -> ValueFn<T> {
        self.value.clone()
    }

    pub fn remainder(&self, addr: &OrdinalAddress) -> Option<Remainder<T>> {
        self.remainder.as_ref().and_then(|f| f(addr))
    }

    pub fn remainder_fn(&self) -> Option<RemainderFn<T>> {
        self.remainder.clone()
    }

    pub fn abs_remainder_fn(&self) -> Option<RemainderFn<T>> {
        self.abs_remainder.clone()
    }

    /// The real family `‖x_α‖` (upper norm bounds).
    pub fn norms(&self) -> Family<T> {
        let v = self.value.clone();
        Family {
            index: self.index.clone(),
            value: Arc::new(move |a| VectorValue::Real(v(a).norm().hi)),
            remainder: self.abs_remainder.clone(),
            abs_remainder: self.abs_remainder.clone(),
            nonnegative: true,
        }
    }

    pub fn restrict_below(&self, gamma: &OrdinalAddress) -> Result<Family<T>> {
        Ok(Family { index: self.index.restrict_below(gamma)?, ..self.clone() })
    }

    /// A zero of the value space, taken from the first term.
    pub fn zero(&self) -> VectorValue<T> {
        self.value(&self.index.min_address()).zero_like()
    }
}

/// Budgets and thresholds of the summation engine.
#[derive(Clone, Debug)]
pub struct SumConfig<T> {
    /// Children examined per infinite layer.
    pub layer_budget: u64,
    /// Total term evaluations.
    pub term_budget: u64,
    /// Consecutive steps whose partial sums must agree for the heuristic Cauchy test.
    pub cauchy_window: usize,
    /// Partial-sum norm treated as divergence.
    pub blowup: T,
}

impl<T: Scalar> Default for SumConfig<T> {
    fn default() -> Self {
        SumConfig { layer_budget: 10_000, term_budget: 20_000_000, cauchy_window: 8, blowup: T::lit(1e12) }
    }
}

impl<T: Scalar> SumConfig<T> {
    pub fn with_layer_budget(mut self, b: u64) -> Self {
        self.layer_budget = b.max(1);
        self
    }
}

/// How a verdict was reached.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    /// From certified bounds.
    Certified,
    /// From a practical stand-in (blow-up threshold, term or comparison test, sampling).
    Heuristic,
    /// From analytic facts declared by the caller and spot-checked.
    Declared,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "value", content = "basis", rename_all = "lowercase")]
pub enum Verdict {
    True(Basis),
    False(Basis),
    Inconclusive,
}

impl Verdict {
    pub fn tri(self) -> Tri {
        match self {
            Verdict::True(_) => Tri::True,
            Verdict::False(_) => Tri::False,
            Verdict::Inconclusive => Tri::Unknown,
        }
    }

    pub fn is_true(self) -> bool {
        matches!(self, Verdict::True(_))
    }

    pub fn is_false(self) -> bool {
        matches!(self, Verdict::False(_))
    }

    pub fn is_certified(self) -> bool {
        matches!(self, Verdict::True(Basis::Certified | Basis::Declared) | Verdict::False(Basis::Certified | Basis::Declared))
    }

    /// Weakest basis of two verdicts used to derive a third.
    pub fn basis(self) -> Option<Basis> {
        match self {
            Verdict::True(b) | Verdict::False(b) => Some(b),
            Verdict::Inconclusive => None,
        }
    }
}

/// Outcome of summing a block.
#[derive(Clone, Debug)]
pub struct SumOutcome<T> {
    pub value: VectorValue<T>,
    pub residual: T,
    /// `false` when some limit was accepted by the heuristic Cauchy test.
    pub certified: bool,
}

/// Why a block sum could not be produced.
#[derive(Clone, Debug, PartialEq)]
pub enum SumFailure<T> {
    /// The sum does not exist; `cutoff` is the limit position where it fails.
    Diverges { cutoff: OrdinalAddress, basis: Basis },
    /// Neither certified nor heuristic convergence within the budget.
    NotConvergent { at: OrdinalAddress },
    /// A remainder bound was available but stayed above the tolerance.
    Tolerance { at: OrdinalAddress, residual: T },
    /// Unenumerated children without remainder information.
    Horizon { at: OrdinalAddress },
    Invalid(Error),
}

impl<T: Scalar> SumFailure<T> {
    pub fn into_error(self) -> Error {
        match self {
            SumFailure::Diverges { cutoff, .. } => Error::NotLocallySummable { cutoff },
            SumFailure::NotConvergent { at } => Error::NotConvergent { at },
            SumFailure::Tolerance { at, residual } => {
                Error::ToleranceUnachievable { at, residual: residual.to_f64_lossy(), tol: f64::NAN }
            }
            SumFailure::Horizon { at } => Error::BeyondHorizon(at),
            SumFailure::Invalid(e) => e,
        }
    }
}

struct Engine<'a, T> {
    family: &'a Family<T>,
    cfg: &'a SumConfig<T>,
    terms: Cell<u64>,
    /// Accept remainder bounds above the tolerance at finite horizons instead of failing.
    lenient: bool,
}

/// Mean of `weight(j) · ‖c_j‖` over a window of children.
fn window_mean<T: Scalar>(norms: &[T], from: usize, to: usize, weighted: bool) -> T {
    let mut s = T::zero();
    for (j, &v) in norms.iter().enumerate().take(to).skip(from) {
        s += if weighted { v * T::from_count(j as u64 + 1) } else { v };
    }
    s / T::from_count((to - from).max(1) as u64)
}

impl<'a, T: Scalar> Engine<'a, T> {
    fn new(family: &'a Family<T>, cfg: &'a SumConfig<T>, lenient: bool) -> Self {
        Engine { family, cfg, terms: Cell::new(0), lenient }
    }

    fn child(&self, c: &OrdinalAddress, tol: T) -> std::result::Result<SumOutcome<T>, SumFailure<T>> {
        if c.len() == self.family.index.depth() {
            self.terms.set(self.terms.get() + 1);
            let value = self.family.value(c);
            if !value.is_finite() {
                return Err(SumFailure::Diverges { cutoff: c.parent(), basis: Basis::Heuristic });
            }
            Ok(SumOutcome { value, residual: T::zero(), certified: true })
        } else {
            self.block(c, tol)
        }
    }

    fn block(&self, q: &OrdinalAddress, tol: T) -> std::result::Result<SumOutcome<T>, SumFailure<T>> {
        let index = &self.family.index;
        let extent = index.extent(q);
        let half = tol / T::lit(2.0);
        let mut acc: Option<VectorValue<T>> = None;
        let mut residual = T::zero();
        let mut certified = true;
        let mut window: VecDeque<VectorValue<T>> = VecDeque::new();
        let mut norms: Vec<T> = Vec::new();
        let mut all_nonneg = true;
        let mut last_bound: Option<T> = None;
        let cutoff = index.canonical(q).unwrap_or_else(|_| q.clone());
        let count = match extent {
            Extent::Finite(n) | Extent::Horizon(n) => n,
            Extent::Infinite => self.cfg.layer_budget,
        };
        for j in 0..count {
            let c = q.child(j);
            let jf = T::from_count(j);
            let share = half / ((jf + T::one()) * (jf + T::lit(2.0)));
            let out = self.child(&c, share)?;
            residual += out.residual;
            certified &= out.certified;
            if let VectorValue::Real(x) = out.value {
                all_nonneg &= x >= T::zero();
            } else {
                all_nonneg = false;
            }
            norms.push(out.value.norm().hi);
            match &mut acc {
                None => acc = Some(out.value),
                Some(a) => a.add_scaled(T::one(), &out.value).map_err(SumFailure::Invalid)?,
            }
            let a = acc.as_ref().unwrap();
            if !a.is_finite() || a.norm().lo > self.cfg.blowup {
                return Err(SumFailure::Diverges { cutoff, basis: Basis::Heuristic });
            }
            if self.terms.get() > self.cfg.term_budget {
                return Err(SumFailure::NotConvergent { at: cutoff });
            }
            if let Extent::Finite(_) = extent {
                continue;
            }
            let at_horizon = matches!(extent, Extent::Horizon(n) if j + 1 == n);
            match self.family.remainder(&c) {
                Some(Remainder::Divergent) => return Err(SumFailure::Diverges { cutoff, basis: Basis::Declared }),
                Some(Remainder::Bound(b)) => {
                    if b <= half || (at_horizon && self.lenient) {
                        return Ok(SumOutcome { value: acc.unwrap(), residual: residual + b, certified });
                    }
                    last_bound = Some(b);
                }
                Some(Remainder::Enclosure { width, ball }) => {
                    let b = width * ball.radius;
                    if b <= half || (at_horizon && self.lenient) {
                        let mut v = acc.unwrap();
                        v.add_scaled(width, &ball.center).map_err(SumFailure::Invalid)?;
                        return Ok(SumOutcome { value: v, residual: residual + b, certified });
                    }
                    last_bound = Some(b);
                }
                Some(Remainder::Total { sum, .. }) => {
                    if sum.radius <= half || (at_horizon && self.lenient) {
                        let mut v = acc.unwrap();
                        v.add_scaled(T::one(), &sum.center).map_err(SumFailure::Invalid)?;
                        return Ok(SumOutcome { value: v, residual: residual + sum.radius, certified });
                    }
                    last_bound = Some(sum.radius);
                }
                None => {
                    if at_horizon {
                        return Err(SumFailure::Horizon { at: c });
                    }
                    window.push_back(a.clone());
                    if window.len() > self.cfg.cauchy_window {
                        window.pop_front();
                    }
                    if window.len() == self.cfg.cauchy_window && self.cauchy_ok(&window, half)? {
                        return Ok(SumOutcome { value: acc.unwrap(), residual: residual + half, certified: false });
                    }
                }
            }
            if at_horizon {
                return Err(SumFailure::Tolerance { at: cutoff, residual: last_bound.unwrap_or(T::infinity()) });
            }
        }
        match extent {
            Extent::Finite(_) => {
                let value = acc.unwrap_or_else(|| self.family.zero());
                Ok(SumOutcome { value, residual, certified })
            }
            _ => {
                if let Some(b) = last_bound {
                    return Err(SumFailure::Tolerance { at: cutoff, residual: b });
                }
                let n = norms.len();
                if n >= 16 {
                    let early = window_mean(&norms, n / 4, n / 2, false);
                    let late = window_mean(&norms, 3 * n / 4, n, false);
                    if late >= T::lit(0.9) * early && late > half {
                        return Err(SumFailure::Diverges { cutoff, basis: Basis::Heuristic });
                    }
                    if self.family.nonnegative || all_nonneg {
                        let early = window_mean(&norms, n / 4, n / 2, true);
                        let late = window_mean(&norms, 3 * n / 4, n, true);
                        if late >= T::lit(0.9) * early && late > T::zero() {
                            return Err(SumFailure::Diverges { cutoff, basis: Basis::Heuristic });
                        }
                    }
                }
                Err(SumFailure::NotConvergent { at: cutoff })
            }
        }
    }

    fn cauchy_ok(&self, window: &VecDeque<VectorValue<T>>, half: T) -> std::result::Result<bool, SumFailure<T>> {
        let last = window.back().unwrap();
        let mut spread = T::zero();
        for w in window.iter() {
            spread = spread.max(w.distance(last).map_err(SumFailure::Invalid)?);
        }
        Ok(spread * T::lit(2.0) < half)
    }

    /// `σ(γ)`: blocks strictly before γ at each level, plus the block γ closes if γ is a limit.
    fn partial(&self, gamma: &OrdinalAddress, tol: T) -> std::result::Result<SumOutcome<T>, SumFailure<T>> {
        let index = &self.family.index;
        let g = index.canonical(gamma).map_err(SumFailure::Invalid)?;
        let depth = index.depth();
        let mut value = self.family.zero();
        let mut residual = T::zero();
        let mut certified = true;
        let levels = g.len() + usize::from(g.len() < depth);
        let level_tol = |k: usize| tol / T::lit(2f64.powi(k as i32 + 1));
        let mut prefix = OrdinalAddress::sup();
        for (k, &gk) in g.digits().iter().enumerate() {
            let lt = level_tol(k);
            for j in 0..gk {
                let c = prefix.child(j);
                let jf = T::from_count(j);
                let share = lt / ((jf + T::one()) * (jf + T::lit(2.0)));
                let out = self.child(&c, share)?;
                value.add_scaled(T::one(), &out.value).map_err(SumFailure::Invalid)?;
                residual += out.residual;
                certified &= out.certified;
                if self.terms.get() > self.cfg.term_budget {
                    return Err(SumFailure::NotConvergent { at: g.clone() });
                }
            }
            prefix = prefix.child(gk);
        }
        if g.len() < depth {
            let _ = levels;
            let out = self.block(&g, level_tol(g.len()))?;
            value.add_scaled(T::one(), &out.value).map_err(SumFailure::Invalid)?;
            residual += out.residual;
            certified &= out.certified;
        }
        Ok(SumOutcome { value, residual, certified })
    }
}

fn outcome<T: Scalar>(
    family: &Family<T>,
    gamma: &OrdinalAddress,
    tol: T,
    cfg: &SumConfig<T>,
    lenient: bool,
) -> std::result::Result<SumOutcome<T>, SumFailure<T>> {
    let index = &family.index;
    let mut g = index.canonical(gamma).map_err(SumFailure::Invalid)?;
    let full;
    let family = match index.bound() {
        Some(b) => {
            if gamma.is_sup() || index.compare(b, &g).map_err(SumFailure::Invalid)? == std::cmp::Ordering::Less {
                g = b.clone();
            }
            full = Family { index: index.unrestricted(), ..family.clone() };
            &full
        }
        None => family,
    };
    if g == family.index.min_address() {
        return Ok(SumOutcome { value: family.zero(), residual: T::zero(), certified: true });
    }
    Engine::new(family, cfg, lenient).partial(&g, tol)
}

/// `σ(γ)` with its residual and certification flag; failures are reported, not raised.
pub fn partial_sum_outcome<T: Scalar>(
    family: &Family<T>,
    gamma: &OrdinalAddress,
    tol: T,
    cfg: &SumConfig<T>,
) -> std::result::Result<SumOutcome<T>, SumFailure<T>> {
    outcome(family, gamma, tol, cfg, false)
}

/// Like `partial_sum_outcome`, but accepts whatever remainder bound is available at finite
/// enumeration horizons; the residual then may exceed `tol`.
pub fn partial_sum_lenient<T: Scalar>(
    family: &Family<T>,
    gamma: &OrdinalAddress,
    tol: T,
    cfg: &SumConfig<T>,
) -> std::result::Result<SumOutcome<T>, SumFailure<T>> {
    outcome(family, gamma, tol, cfg, true)
}

/// `σ(γ)` and a residual bound.
pub fn partial_sum<T: Scalar>(family: &Family<T>, gamma: &OrdinalAddress, tol: T, cfg: &SumConfig<T>) -> Result<(VectorValue<T>, T)> {
    match partial_sum_outcome(family, gamma, tol, cfg) {
        Ok(o) => Ok((o.value, o.residual)),
        Err(SumFailure::Tolerance { at, residual }) => {
            Err(Error::ToleranceUnachievable { at, residual: residual.to_f64_lossy(), tol: tol.to_f64_lossy() })
        }
        Err(e) => Err(e.into_error()),
    }
}

/// Sum of the family: `σ(b)`, plus `x_b` when `b ∈ Λ`.
pub fn sum<T: Scalar>(family: &Family<T>, tol: T, cfg: &SumConfig<T>) -> Result<(VectorValue<T>, T)> {
    let (mut v, r) = partial_sum(family, &OrdinalAddress::sup(), tol, cfg)?;
    if family.index.contains_sup() {
        v.add_scaled(T::one(), &family.value(&sup_element(&family.index)))?;
    }
    Ok((v, r))
}

/// Address under which the value `x_b` of an attained supremum is looked up.
fn sup_element<T: Scalar>(index: &WellOrderedSet<T>) -> OrdinalAddress {
    match index.runs() {
        Some(_) => OrdinalAddress::sup(),
        None if index.is_tree() => OrdinalAddress::sup(),
        None => {
            // finite chain: the last point
            let n = index.enumerate(usize::MAX).len() as u64;
            OrdinalAddress::new(&[n - 1])
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Cutoffs {
    pub c1: Option<String>,
    pub c2: Option<String>,
    pub c3: Option<String>,
}

/// Result of the summability trichotomy.
#[derive(Clone, Debug)]
pub struct SummabilityReport<T> {
    pub verdict: Verdict,
    pub absolute_verdict: Verdict,
    pub bounded_verdict: Verdict,
    /// First limit positions where boundedness, absolute summability, summability fail.
    pub c1: Option<OrdinalAddress>,
    pub c2: Option<OrdinalAddress>,
    pub c3: Option<OrdinalAddress>,
    pub total: Option<(VectorValue<T>, T)>,
    pub notes: Vec<String>,
}

impl<T: Scalar> SummabilityReport<T> {
    pub fn cutoff_strings(&self) -> Cutoffs {
        Cutoffs {
            c1: self.c1.as_ref().map(|a| a.to_string()),
            c2: self.c2.as_ref().map(|a| a.to_string()),
            c3: self.c3.as_ref().map(|a| a.to_string()),
        }
    }
}

/// Classifies a block outcome into a verdict, a cutoff and a total.
/// Verdict, cutoff, and the total when one was certified.
type Judgement<T> = (Verdict, Option<OrdinalAddress>, Option<(VectorValue<T>, T)>);

fn judge<T: Scalar>(
    r: std::result::Result<SumOutcome<T>, SumFailure<T>>,
    notes: &mut Vec<String>,
    what: &str,
) -> Judgement<T> {
    match r {
        Ok(o) if o.certified => (Verdict::True(Basis::Certified), None, Some((o.value, o.residual))),
        Ok(o) => {
            notes.push(format!("{what}: heuristic Cauchy convergence only"));
            (Verdict::Inconclusive, None, Some((o.value, o.residual)))
        }
        Err(SumFailure::Diverges { cutoff, basis }) => (Verdict::False(basis), Some(cutoff), None),
        Err(SumFailure::Tolerance { at, residual }) => {
            notes.push(format!("{what}: remainder {:e} above tolerance at {at}", residual.to_f64_lossy()));
            (Verdict::Inconclusive, None, None)
        }
        Err(SumFailure::NotConvergent { at }) => {
            notes.push(format!("{what}: no convergence within budget at {at}"));
            (Verdict::Inconclusive, None, None)
        }
        Err(SumFailure::Horizon { at }) => {
            notes.push(format!("{what}: unenumerated terms after {at}"));
            (Verdict::Inconclusive, None, None)
        }
        Err(SumFailure::Invalid(e)) => {
            notes.push(format!("{what}: {e}"));
            (Verdict::Inconclusive, None, None)
        }
    }
}

/// Boundedness of the terms, scanned over the enumeration budget, with the cutoff on failure.
pub fn bounded<T: Scalar>(family: &Family<T>, cfg: &SumConfig<T>) -> (Verdict, Option<OrdinalAddress>) {
    let index = &family.index;
    let depth = index.depth();
    let per = (cfg.layer_budget as f64).powf(1.0 / depth as f64).floor().max(2.0) as u64;
    let per_layer = vec![per; depth];
    let mut any = false;
    for c in index.horizon(&per_layer) {
        let full = {
            let mut v = c.current.digits().to_vec();
            if v.len() < depth {
                // limit positions are first elements of the next block
                if let Some(l) = v.last_mut() {
                    *l += 1;
                }
                v.resize(depth, 0);
            }
            OrdinalAddress::new(&v)
        };
        any = true;
        let n = family.value(&full).norm().hi;
        if !n.is_finite() || n > cfg.blowup {
            let cutoff = index.canonical(&full.parent()).unwrap_or_else(|_| full.parent());
            return (Verdict::False(Basis::Heuristic), Some(cutoff));
        }
    }
    if any {
        (Verdict::True(Basis::Heuristic), None)
    } else {
        (Verdict::True(Basis::Certified), None)
    }
}

/// Tri-state verdicts for boundedness, absolute summability and summability, with cutoffs.
///
/// Existence is what counts here, so any certified remainder at an enumeration horizon is
/// accepted whatever its size; the reported total carries that residual.
pub fn classify<T: Scalar>(family: &Family<T>, tol: T, cfg: &SumConfig<T>) -> SummabilityReport<T> {
    let mut notes = Vec::new();
    let (bounded_verdict, c1) = bounded(family, cfg);
    let abs_family = family.norms();
    let (mut absolute_verdict, c2, _) = judge(
        partial_sum_lenient(&abs_family, &OrdinalAddress::sup(), tol, cfg),
        &mut notes,
        "absolute",
    );
    let (mut verdict, mut c3, mut total) =
        judge(partial_sum_lenient(family, &OrdinalAddress::sup(), tol, cfg), &mut notes, "plain");
    if absolute_verdict.is_true() && !verdict.is_true() {
        // absolute summability implies summability in a Banach space
        notes.push("summability implied by absolute summability".into());
        verdict = Verdict::True(absolute_verdict.basis().unwrap_or(Basis::Certified));
        c3 = None;
    }
    if verdict.is_false() && absolute_verdict.is_true() {
        absolute_verdict = Verdict::Inconclusive;
    }
    if let Some((v, r)) = total.as_mut() {
        if family.index.contains_sup() {
            let _ = v.add_scaled(T::one(), &family.value(&sup_element(&family.index)));
        }
        let _ = r;
    }
    let c1 = c1.filter(|_| bounded_verdict.is_false());
    let c2 = c2.filter(|_| absolute_verdict.is_false());
    let c3 = c3.filter(|_| verdict.is_false());
    SummabilityReport { verdict, absolute_verdict, bounded_verdict, c1, c2, c3, total, notes }
}

/// One row of a partial-sum table.
#[derive(Clone, Debug)]
pub struct TableEntry<T> {
    pub gamma: OrdinalAddress,
    pub value: T,
    pub sigma: VectorValue<T>,
    pub residual: T,
    /// `true` for entries obtained by the successor recursion alone.
    pub exact: bool,
}

/// `σ` along the first `budget` enumerated positions; limit positions are recomputed by
/// block summation, successors by `σ(S(β)) = σ(β) + x_β`.
pub fn partial_sum_table<T: Scalar>(family: &Family<T>, budget: usize, tol: T, cfg: &SumConfig<T>) -> Result<Vec<TableEntry<T>>> {
    let mut out: Vec<TableEntry<T>> = Vec::new();
    for c in family.index.enumerate(budget) {
        let entry = match out.last() {
            Some(prev) if !c.is_limit => {
                let mut sigma = prev.sigma.clone();
                sigma.add_scaled(T::one(), &family.value(&prev.gamma))?;
                TableEntry { gamma: c.current, value: c.value, sigma, residual: prev.residual, exact: prev.exact }
            }
            _ => {
                let (sigma, residual) = partial_sum(family, &c.current, tol, cfg)?;
                let exact = !c.is_limit;
                TableEntry { gamma: c.current, value: c.value, sigma, residual, exact }
            }
        };
        out.push(entry);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e() -> VectorValue<f64> {
        VectorValue::Real(1.0)
    }

    #[test]
    fn geometric_on_lambda0() {
        let f = Family::new(WellOrderedSet::lambda0(), |a: &OrdinalAddress| e().scale(2f64.powi(-(a.digits()[0] as i32))))
            .with_remainder(|a| Some(Remainder::Bound(2f64.powi(-(a.digits()[0] as i32)))));
        let (v, r) = sum(&f, 1e-9, &SumConfig::default()).unwrap();
        assert!((v.coords()[0] - 2.0).abs() <= 1e-9);
        assert!(r <= 1e-9);
    }

    #[test]
    fn min_gives_zero() {
        let f = Family::new(WellOrderedSet::lambda0(), |_: &OrdinalAddress| e());
        let (v, r) = partial_sum(&f, &OrdinalAddress::new(&[0]), 1e-3, &SumConfig::default()).unwrap();
        assert_eq!(v, VectorValue::Real(0.0));
        assert_eq!(r, 0.0);
    }

    #[test]
    fn finite_with_attained_sup() {
        let f = Family::new(WellOrderedSet::finite(vec![0.0, 1.0]).unwrap(), |_: &OrdinalAddress| e());
        let (v, _) = sum(&f, 1e-9, &SumConfig::default()).unwrap();
        assert_eq!(v, VectorValue::Real(2.0));
    }

    #[test]
    fn heuristic_cauchy_is_uncertified() {
        let f = Family::new(WellOrderedSet::lambda0(), |a: &OrdinalAddress| e().scale(3f64.powi(-(a.digits()[0] as i32))));
        let o = partial_sum_outcome(&f, &OrdinalAddress::sup(), 1e-6, &SumConfig::default()).unwrap();
        assert!(!o.certified);
        assert!((o.value.coords()[0] - 1.5).abs() < 1e-6);
    }

    #[test]
    fn trichotomy_constant() {
        let f = Family::new(WellOrderedSet::lambda0(), |_: &OrdinalAddress| e());
        let r = classify(&f, 1e-3, &SumConfig::default());
        assert_eq!(r.bounded_verdict.tri(), Tri::True);
        assert_eq!(r.verdict.tri(), Tri::False);
        assert_eq!(r.c3, Some(OrdinalAddress::sup()));
    }

    #[test]
    fn restricted_partial_sums() {
        let l1 = WellOrderedSet::<f64>::lambda_m(1);
        let f = Family::new(l1, |a: &OrdinalAddress| {
            VectorValue::Real(2f64.powi(-(a.digits()[0] as i32)) * 2f64.powi(-(a.digits()[1] as i32) - 1))
        })
        .with_remainder(|a| {
            let d = a.digits();
            Some(Remainder::Bound(if d.len() == 2 {
                2f64.powi(-(d[0] as i32)) * 2f64.powi(-(d[1] as i32) - 1)
            } else {
                2f64.powi(-(d[0] as i32))
            }))
        });
        let cfg = SumConfig::default();
        let (half, _) = partial_sum(&f, &OrdinalAddress::new(&[0]), 1e-10, &cfg).unwrap();
        assert!((half.coords()[0] - 1.0).abs() < 1e-10);
        let (all, _) = sum(&f, 1e-10, &cfg).unwrap();
        assert!((all.coords()[0] - 2.0).abs() < 1e-10);
        let sub = f.restrict_below(&OrdinalAddress::new(&[0])).unwrap();
        let (v, _) = sum(&sub, 1e-10, &cfg).unwrap();
        assert!((v.coords()[0] - 1.0).abs() < 1e-10);
    }
}
